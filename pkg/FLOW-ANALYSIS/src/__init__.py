"""
Flow Analysis Engine

Limit sets of algebraic flows in complex semi-tori: exact linear algebra over
Q(i), Laurent curve stratification, leading-sequence decomposition of
multi-variable maps and Monte-Carlo equidistribution checks.
"""

__version__ = "0.1.0"
__author__ = "Flow Analysis Team"
