"""Pipeline module: command dispatch and the command-line shell."""

from .analysis_pipeline import AnalysisPipeline
from .shell import main

__all__ = ['AnalysisPipeline', 'main']
