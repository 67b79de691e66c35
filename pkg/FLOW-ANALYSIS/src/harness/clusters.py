"""
Empirical cluster scans of maps whose parameters run to the boundary.

WHY THIS EXISTS:
Where no theorem applies (T not compact) the only check available is
empirical: drive the parameters towards infinity, keep the samples whose
image stays in a bounded part of T, and compare them with a predicted set.

HOW IT WORKS:
1. A RegionSpec samples parameters that run to the boundary
2. The evaluator maps them to E; points are reduced to T
3. Samples with transverse coordinates inside the bound are retained
4. Retained samples are measured against the prediction: maximal distance
   and delta-net coverage of the predicted subgroup

The built-in semi-torus flow tau(z) = (e^{i pi/4} z1, z2, z1 z2^2 + z1 z2)
on C^3 / Z^3 shows all three behaviours: nothing survives when both
variables grow, a family of translated complex tori when only z1 grows, and
a real 5-dimensional subgroup when only z2 grows.

EXAMPLE USAGE:
```python
example = semi_torus_example()
for name, region in example.regions.items():
    print(cluster_scan(example.evaluate, region, example.lattice, samples=20000).to_dict())
```
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional
import logging
import math

import numpy as np
import pandas as pd

from ..lattice import ClosedSubgroup, Lattice, subgroup_closure
from ..linalg.subspaces import ExactVector, RealSubspace, realify
from ..schema import CLUSTER_COLUMNS

logger = logging.getLogger(__name__)

COVERAGE_THRESHOLD = 0.9
EMPTY_RETENTION = 1e-3
DEFAULT_SCALE = 1e3

Sampler = Callable[[np.random.Generator, int], np.ndarray]
DistanceFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass
class RegionSpec:
    """
    How parameters approach the boundary, and what their images should cluster on.

    Args:
        name: Region label used in reports
        sampler: (rng, count) -> parameter array of shape (count, q)
        bound: Samples with all |transverse| <= bound are retained
        predicted_distance: Distance of reduced points to the predicted set
        predicted_subgroup: Predicted closed subgroup, for coverage
        expect_empty: The predicted set is empty
    """
    name: str
    sampler: Sampler
    bound: float = 1.0
    predicted_distance: Optional[DistanceFn] = None
    predicted_subgroup: Optional[ClosedSubgroup] = None
    expect_empty: bool = False


@dataclass
class ClusterReport:
    """Outcome of one region scan."""
    region: str
    samples: int
    retained: int
    max_distance: Optional[float] = None
    coverage: Optional[float] = None
    tolerance: float = 1e-2
    expect_empty: bool = False

    @property
    def retained_fraction(self) -> float:
        return self.retained / self.samples if self.samples else 0.0

    @property
    def passed(self) -> bool:
        if self.expect_empty:
            return self.retained_fraction < EMPTY_RETENTION
        if self.max_distance is not None and self.max_distance > self.tolerance:
            return False
        return self.coverage is None or self.coverage >= COVERAGE_THRESHOLD

    def to_row(self) -> list:
        return [self.region, self.samples, self.retained, self.retained_fraction,
                self.max_distance, self.coverage]

    def to_dict(self) -> Dict[str, Any]:
        return {**dict(zip(CLUSTER_COLUMNS, self.to_row())), 'tolerance': self.tolerance,
                'expect_empty': self.expect_empty, 'passed': self.passed}


def cluster_scan(evaluator: Callable[[np.ndarray], np.ndarray], region: RegionSpec, gamma: Lattice,
                 samples: int = 20000, tol: float = 1e-2, delta: float = 0.1,
                 seed: int = 0) -> ClusterReport:
    """
    Sample a region, retain bounded images, and compare them with the prediction.
    """
    rng = np.random.default_rng(seed)
    params = region.sampler(rng, samples)
    points = evaluator(params)
    compact, transverse = gamma.reduce_many(points)
    keep = np.all(np.abs(transverse) <= region.bound, axis=1) if transverse.shape[1] else \
        np.ones(compact.shape[0], dtype=bool)
    report = ClusterReport(region.name, samples, int(keep.sum()), tolerance=tol,
                           expect_empty=region.expect_empty)
    if keep.any() and region.predicted_distance is not None:
        report.max_distance = float(region.predicted_distance(compact[keep], transverse[keep]).max())
    if keep.any() and region.predicted_subgroup is not None:
        report.coverage = region.predicted_subgroup.coverage(compact[keep], transverse[keep], delta, section=True)
    logger.info(f"Region {region.name}: retained {report.retained}/{samples}, "
                f"max distance {report.max_distance}, coverage {report.coverage}")
    return report


def cluster_frame(reports) -> pd.DataFrame:
    return pd.DataFrame([r.to_row() for r in reports], columns=CLUSTER_COLUMNS)


# ============================================================================
# SEMI-TORUS FLOW
# ============================================================================

EIGHTH_TURN = np.exp(1j * np.pi / 4)


def tau(z: np.ndarray) -> np.ndarray:
    """(e^{i pi/4} z1, z2, z1 z2^2 + z1 z2) for z of shape (N, 2)."""
    z = np.atleast_2d(np.asarray(z, dtype=complex))
    z1, z2 = z[:, 0], z[:, 1]
    return np.stack([EIGHTH_TURN * z1, z2, z1 * z2 ** 2 + z1 * z2], axis=1)


def distance_to_curve_family(compact: np.ndarray, transverse: np.ndarray, shifts: int = 3) -> np.ndarray:
    """
    Distance of the second coordinate to pi(L), L = {s : e^{-i pi/4}(s^2 + s) real}.

    First-order estimate |Im(e^{-i pi/4} g(s))| / |g'(s)| with g(s) = s^2 + s,
    minimized over the integer translates of s.
    """
    s = compact[:, 1] + 1j * transverse[:, 1]
    best = np.full(s.shape, np.inf)
    for k in range(-shifts, shifts + 1):
        t = s + k
        value = np.abs((np.conj(EIGHTH_TURN) * (t ** 2 + t)).imag) / np.maximum(np.abs(2 * t + 1), 1e-12)
        best = np.minimum(best, value)
    return best


@dataclass
class SemiTorusExample:
    """The semi-torus flow with its three boundary regions and predicted limit sets."""
    lattice: Lattice
    first_torus: ClosedSubgroup  # closure of pi(C x 0 x C)
    second_torus: ClosedSubgroup  # closure of pi(e^{i pi/4} R x C^2)
    regions: Dict[str, RegionSpec] = field(default_factory=dict)

    @staticmethod
    def evaluate(z: np.ndarray) -> np.ndarray:
        return tau(z)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'lattice': self.lattice.to_dict(),
            'first_torus': self.first_torus.to_dict(),
            'second_torus': self.second_torus.to_dict(),
            'regions': sorted(self.regions),
        }


def semi_torus_example(scale: float = DEFAULT_SCALE, bound: float = 1.0) -> SemiTorusExample:
    """
    Build the semi-torus example.

    Regions (scale sets how far the parameters go):
    - joint: z1 and z2 large along the directions where the first two
      coordinates stay bounded; nothing should survive
    - first_unbounded: z1 large, z2 solved so the third coordinate has a
      bounded imaginary part; clusters on pi(C_1) + T_1
    - second_unbounded: z2 large, z1 = q / (z2^2 + z2) with Im q bounded;
      clusters on T_2 and covers its cross-section
    """
    n = 3
    lattice = Lattice([ExactVector.unit(n, j) for j in range(n)], n)
    zero = ExactVector.zeros(n)
    first_plane = RealSubspace.span(
        [realify(v) for v in (ExactVector.unit(n, 0), ExactVector.unit(n, 0).times_i(),
                              ExactVector.unit(n, 2), ExactVector.unit(n, 2).times_i())], 2 * n)
    # positive multiples of e^{i pi/4} span the same real line as 1 + i
    second_plane = RealSubspace.span(
        [realify(v) for v in (ExactVector.parse(['1+i', '0', '0']),
                              ExactVector.unit(n, 1), ExactVector.unit(n, 1).times_i(),
                              ExactVector.unit(n, 2), ExactVector.unit(n, 2).times_i())], 2 * n)
    first_torus = subgroup_closure(first_plane, zero, lattice)
    second_torus = subgroup_closure(second_plane, zero, lattice)
    small = 0.05 * bound

    def joint(rng: np.random.Generator, count: int) -> np.ndarray:
        t1 = scale * (1 + rng.random(count)) * rng.choice([-1, 1], count)
        t2 = scale * (1 + rng.random(count)) * rng.choice([-1, 1], count)
        z1 = np.conj(EIGHTH_TURN) * (t1 + 1j * rng.uniform(-small, small, count))
        z2 = t2 + 1j * rng.uniform(-small, small, count)
        return np.stack([z1, z2], axis=1)

    def first_unbounded(rng: np.random.Generator, count: int) -> np.ndarray:
        N = scale * (1 + rng.random(count))
        a1 = rng.random(count) + 1j * rng.uniform(-small, small, count)
        z1 = np.conj(EIGHTH_TURN) * (N + a1)
        q = rng.uniform(-2, 2, count) * N + 1j * rng.uniform(-small, small, count)
        root = np.sqrt(1 + 4 * q / z1)
        sign = rng.choice([-1, 1], count)
        z2 = (-1 + sign * root) / 2
        return np.stack([z1, z2], axis=1)

    def second_unbounded(rng: np.random.Generator, count: int) -> np.ndarray:
        root_scale = math.sqrt(scale)
        N = root_scale * (1 + rng.random(count))
        z2 = N + rng.random(count) + 1j * rng.uniform(-small, small, count)
        g = z2 ** 2 + z2
        q = rng.uniform(-1, 1, count) * np.abs(g) + 1j * rng.uniform(-small, small, count)
        z1 = q / g
        return np.stack([z1, z2], axis=1)

    regions = {
        'joint': RegionSpec('joint', joint, bound, expect_empty=True),
        'first_unbounded': RegionSpec('first_unbounded', first_unbounded, bound,
                                      predicted_distance=distance_to_curve_family),
        'second_unbounded': RegionSpec('second_unbounded', second_unbounded, bound,
                                       predicted_distance=second_torus.distance,
                                       predicted_subgroup=second_torus),
    }
    return SemiTorusExample(lattice, first_torus, second_torus, regions)
