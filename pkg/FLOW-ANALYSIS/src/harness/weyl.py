"""
Weyl-sum tests of empirical measures against closed subgroups.

A probability measure on a coset of H is Haar exactly when every character
that is not constant on H averages to zero. Characters are taken on the
compact coordinates of T, e^{2 pi i m.c} with |m_j| <= D; the ones constant on
H should have |W(m)| near 1 (a fixed phase), the others near 0.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple
import logging

import numpy as np
import pandas as pd

from ..lattice import ClosedSubgroup, Lattice, dual_annihilator
from ..schema import WEYL_COLUMNS

logger = logging.getLogger(__name__)

ANNIHILATING = 'annihilating'
NON_ANNIHILATING = 'non-annihilating'


def weyl_sums(compact: np.ndarray, weights: np.ndarray, characters: List[Tuple[int, ...]],
              chunk_size: int = 2 ** 15) -> np.ndarray:
    """Normalized sums sum w_j e^{2 pi i m.c_j} / sum w_j, one per character."""
    compact = np.atleast_2d(np.asarray(compact, dtype=float))
    weights = np.asarray(weights, dtype=float)
    total = weights.sum()
    if not characters:
        return np.zeros(0, dtype=complex)
    if total <= 0:
        return np.full(len(characters), np.nan + 0j)
    m = np.array(characters, dtype=float)
    sums = np.zeros(len(characters), dtype=complex)
    for start in range(0, compact.shape[0], chunk_size):
        phases = compact[start:start + chunk_size] @ m.T
        sums += weights[start:start + chunk_size] @ np.exp(2j * np.pi * phases)
    return sums / total


@dataclass
class WeylReport:
    """Character averages split by family, with the verdict."""
    degree_bound: int
    tolerance: float
    rows: List[Dict[str, Any]] = field(default_factory=list)
    samples: int = 0
    total_mass: float = 0.0
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def max_non_annihilating(self) -> float:
        values = [r['abs_w'] for r in self.rows if r['family'] == NON_ANNIHILATING]
        return max(values) if values else 0.0

    @property
    def min_annihilating(self) -> float:
        values = [r['abs_w'] for r in self.rows if r['family'] == ANNIHILATING]
        return min(values) if values else 1.0

    @property
    def passed(self) -> bool:
        return (self.max_non_annihilating < self.tolerance
                and self.min_annihilating > 1.0 - self.tolerance)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [[' '.join(map(str, r['m'])), r['family'], r['abs_w'], r['re_w'], r['im_w']] for r in self.rows],
            columns=WEYL_COLUMNS,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'degree_bound': self.degree_bound,
            'tolerance': self.tolerance,
            'samples': self.samples,
            'total_mass': self.total_mass,
            'max_non_annihilating': self.max_non_annihilating,
            'min_annihilating': self.min_annihilating,
            'passed': self.passed,
            'characters': self.rows,
            'metadata': self.metadata,
        }


def _half_space(characters: List[Tuple[int, ...]]) -> List[Tuple[int, ...]]:
    """Drop m = 0 and keep one of each pair m, -m (W(-m) is the conjugate of W(m))."""
    out = []
    for m in characters:
        if not any(m):
            continue
        first = next(x for x in m if x)
        if first > 0:
            out.append(m)
    return out


def weyl_test(compact: np.ndarray, weights: np.ndarray, H: ClosedSubgroup, gamma: Lattice,
              degree_bound: int = 3, tolerance: float = 0.05,
              metadata: Optional[Dict[str, Any]] = None) -> WeylReport:
    """
    Compare an empirical measure with the Haar measure of a coset of H.

    Args:
        compact: (N, r) compact coordinates of the samples
        weights: (N,) nonnegative weights
        H: The predicted closed subgroup
        degree_bound: D, characters with |m_j| <= D
        tolerance: PASS needs |W| < tolerance on non-annihilating characters
            and |W| > 1 - tolerance on annihilating ones

    Raises:
        ValueError: If T has no compact directions or D < 1
    """
    if gamma.rank == 0:
        raise ValueError("T has no compact directions; there are no characters to test")
    if degree_bound < 1:
        raise ValueError(f"Degree bound must be >= 1, got {degree_bound}")
    table = dual_annihilator(H, gamma, degree_bound)
    annihilators = _half_space(table.annihilators)
    others = _half_space(table.non_annihilators)
    characters = annihilators + others
    values = weyl_sums(compact, weights, characters)
    report = WeylReport(degree_bound, tolerance, samples=int(np.asarray(weights).shape[0]),
                        total_mass=float(np.asarray(weights).sum()), metadata=dict(metadata or {}))
    for m, w in zip(characters, values):
        report.rows.append({
            'm': list(m),
            'family': ANNIHILATING if m in annihilators else NON_ANNIHILATING,
            'abs_w': float(abs(w)),
            're_w': float(w.real),
            'im_w': float(w.imag),
        })
    logger.info(f"Weyl test (D={degree_bound}): max non-annihilating {report.max_non_annihilating:.4g}, "
                f"min annihilating {report.min_annihilating:.4g}, passed={report.passed}")
    return report


def weyl_test_measure(mu, H: ClosedSubgroup, gamma: Lattice, degree_bound: int = 3,
                      tolerance: float = 0.05) -> WeylReport:
    """weyl_test on an EmpiricalMeasure."""
    return weyl_test(mu.compact, mu.weights, H, gamma, degree_bound, tolerance,
                     metadata={'total_mass': mu.total_mass, 'normalization': mu.normalization})
