"""Loaders module for flow-analysis problem files."""

from .problem_loader import LoaderException, Problem, ProblemLoader, SchemaValidationException

__all__ = ['LoaderException', 'Problem', 'ProblemLoader', 'SchemaValidationException']
