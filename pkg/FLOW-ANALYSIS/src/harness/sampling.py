"""
Monte-Carlo pushforward measures of a curve on shrinking annular domains.

WHY THIS EXISTS:
The limit theorems are statements about measures: the normalized pushforward
of the area form on a U_a = aU converges to a Haar measure. This module
produces those measures as weighted samples of T so the Weyl tests can look
at them, and computes the mass constants they are normalized by.

HOW IT WORKS:
1. Draw low-discrepancy points in the unit square (lattice rule or Sobol)
2. Map them to U with an area-preserving polar map, scale by a
3. Weight each point by 2 |f'(x)|^2 times its cell area (i dx ^ dx-bar = 2 dA)
4. Reduce f(x) to T in chunks; chunk results are concatenated by index

EXAMPLE USAGE:
```python
dom = SampleDomain(r0=0.5, r1=1.0, a=2 ** -6, samples=2 ** 14, seed=7)
mu = sample_mu_a(curve, dom, gamma)
mu.total_mass / (lambda_zero(curve, dom) * abs(dom.a) ** (-2 * curve.pole_bound))
```
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import gcd
from typing import Any, Dict, List, Optional, Sequence
import logging
import math

import numpy as np
import pandas as pd
from scipy import integrate
from scipy.stats import qmc

from ..curve1d import LaurentCurve, RadiusAnalysis, SectorSpec
from ..exceptions import NoPoles
from ..lattice import Lattice
from ..schema import (
    MASS_COLUMNS, SAMPLE_COLUMNS, HarnessConfig, SamplingEngine, compact_columns, transverse_columns,
)

logger = logging.getLogger(__name__)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
QUAD_EPSREL = 1e-10


@dataclass
class SampleDomain:
    """The annular sector U = {r0 < |x| < r1, theta0 <= arg x <= theta1}, scaled by a."""
    r0: float = 0.5
    r1: float = 1.0
    theta0: float = 0.0
    theta1: float = 2.0 * math.pi
    a: complex = 1.0
    samples: int = 2 ** 16
    seed: int = 0
    engine: str = SamplingEngine.LATTICE.value

    def __post_init__(self):
        if not 0 < self.r0 < self.r1 <= 1:
            raise ValueError(f"Need 0 < r0 < r1 <= 1, got r0={self.r0}, r1={self.r1}")
        if not self.theta0 < self.theta1 <= self.theta0 + 2 * math.pi:
            raise ValueError(f"Angular range [{self.theta0}, {self.theta1}] is empty or wraps")
        if self.a == 0:
            raise ValueError("Scale a must be nonzero")
        if self.samples < 0:
            raise ValueError("Sample count must be >= 0")
        SamplingEngine(self.engine)

    @classmethod
    def from_config(cls, config: HarnessConfig, a: complex) -> "SampleDomain":
        return cls(config.r0, config.r1, config.theta0, config.theta1, a,
                   config.samples, config.seed, config.engine)

    @property
    def area(self) -> float:
        """Area of U (before scaling)."""
        return 0.5 * (self.theta1 - self.theta0) * (self.r1 ** 2 - self.r0 ** 2)

    @property
    def full_turn(self) -> bool:
        return self.theta1 - self.theta0 >= 2 * math.pi - 1e-15

    def contains(self, u: np.ndarray) -> np.ndarray:
        """Membership of unscaled points u = x / a in U."""
        u = np.asarray(u, dtype=complex)
        r = np.abs(u)
        inside = (r > self.r0) & (r < self.r1)
        if self.full_turn:
            return inside
        angle = np.mod(np.angle(u) - self.theta0, 2 * math.pi)
        return inside & (angle <= self.theta1 - self.theta0)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'r0': self.r0, 'r1': self.r1, 'theta0': self.theta0, 'theta1': self.theta1,
            'a': [complex(self.a).real, complex(self.a).imag],
            'samples': self.samples, 'seed': self.seed, 'engine': self.engine,
        }


# ============================================================================
# POINT SETS
# ============================================================================

def korobov_generator(count: int) -> int:
    """Integer near count * golden ratio, coprime to count."""
    g = max(1, int(round(count * GOLDEN)))
    while gcd(g, count) != 1:
        g += 1
    return g


def unit_points(count: int, seed: int = 0, engine: str = SamplingEngine.LATTICE.value) -> np.ndarray:
    """
    count points of [0, 1)^2.

    lattice: rank-1 rule i (1, g) / count plus a seeded random shift (PCG64)
    sobol: scrambled Sobol points seeded the same way
    """
    if count == 0:
        return np.zeros((0, 2))
    engine = SamplingEngine(engine)
    if engine == SamplingEngine.SOBOL:
        sampler = qmc.Sobol(d=2, scramble=True, seed=seed)
        m = int(math.log2(count))
        if 2 ** m == count:
            return sampler.random_base2(m)
        return sampler.random(count)
    rng = np.random.default_rng(seed)
    shift = rng.random(2)
    g = korobov_generator(count)
    i = np.arange(count, dtype=float)
    points = np.stack([i / count, np.mod(i * g, count) / count], axis=1)
    return np.mod(points + shift, 1.0)


def domain_points(dom: SampleDomain) -> np.ndarray:
    """Sample points of U_a; all cells have area |a|^2 area(U) / N."""
    uv = unit_points(dom.samples, dom.seed, dom.engine)
    r = np.sqrt(dom.r0 ** 2 + uv[:, 0] * (dom.r1 ** 2 - dom.r0 ** 2))
    theta = dom.theta0 + uv[:, 1] * (dom.theta1 - dom.theta0)
    return complex(dom.a) * r * np.exp(1j * theta)


# ============================================================================
# MEASURES
# ============================================================================

@dataclass
class EmpiricalMeasure:
    """Weighted points of T: the pushforward of the area form of U_a."""
    x: np.ndarray
    weights: np.ndarray
    compact: np.ndarray
    transverse: np.ndarray
    normalization: Optional[float] = None

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum()) if self.weights.size else 0.0

    @property
    def count(self) -> int:
        return int(self.weights.shape[0])

    def normalized_mass(self) -> Optional[float]:
        if not self.normalization:
            return None
        return self.total_mass / self.normalization

    def to_frame(self) -> pd.DataFrame:
        """Sample dump: x, weight, compact and transverse torus coordinates."""
        rank = self.compact.shape[1] if self.compact.ndim == 2 else 0
        extra = self.transverse.shape[1] if self.transverse.ndim == 2 else 0
        columns = SAMPLE_COLUMNS + compact_columns(rank) + transverse_columns(extra)
        data = np.column_stack([
            self.x.real, self.x.imag, self.weights,
            self.compact.reshape(self.count, rank), self.transverse.reshape(self.count, extra),
        ]) if self.count else np.zeros((0, len(columns)))
        return pd.DataFrame(data, columns=columns)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'count': self.count,
            'total_mass': self.total_mass,
            'normalization': self.normalization,
            'normalized_mass': self.normalized_mass(),
        }


def _chunk(f: LaurentCurve, gamma: Lattice, x: np.ndarray, cell: float):
    weights = 2.0 * (np.abs(f.derivative_many(x)) ** 2).sum(axis=-1) * cell
    compact, transverse = gamma.reduce_many(f.evaluate_many(x))
    return weights, compact, transverse


def sample_mu_a(f: LaurentCurve, dom: SampleDomain, gamma: Lattice,
                chunk_size: int = 2 ** 15, workers: int = 1) -> EmpiricalMeasure:
    """
    Push the area form of U_a through f and reduce to T.

    Chunks are processed independently; results are concatenated in chunk
    order, so the output does not depend on the worker count.
    """
    x = domain_points(dom)
    rank = gamma.rank
    extra = gamma.real_dim - rank
    if x.size == 0:
        return EmpiricalMeasure(x, np.zeros(0), np.zeros((0, rank)), np.zeros((0, extra)),
                                _normalization_or_none(f, dom))
    cell = abs(complex(dom.a)) ** 2 * dom.area / dom.samples
    chunks = [x[i:i + chunk_size] for i in range(0, x.size, chunk_size)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda c: _chunk(f, gamma, c, cell), chunks))
    else:
        results = [_chunk(f, gamma, c, cell) for c in chunks]
    weights = np.concatenate([r[0] for r in results])
    compact = np.concatenate([r[1] for r in results])
    transverse = np.concatenate([r[2] for r in results])
    logger.debug(f"Sampled {x.size} points in {len(chunks)} chunks at a={dom.a}")
    return EmpiricalMeasure(x, weights, compact, transverse, _normalization_or_none(f, dom))


def _normalization_or_none(f: LaurentCurve, dom: SampleDomain) -> Optional[float]:
    try:
        return lambda_zero(f, dom) * abs(complex(dom.a)) ** (-2 * f.pole_bound)
    except NoPoles:
        return None


def lambda_zero(f: LaurentCurve, dom: SampleDomain) -> float:
    """
    lambda_0 = d^2 |v_1|^2 times the integral of |x|^(-2d-2) i dx ^ dx-bar over U.

    Raises:
        NoPoles: If f has no pole
    """
    d = f.pole_bound
    if d == 0:
        raise NoPoles("lambda_0 needs a pole", value=f.value_at_zero())
    v1 = f.coefficient(-d).to_numpy()
    integral, _ = integrate.dblquad(
        lambda r, theta: 2.0 * r ** (-2 * d - 1),
        dom.theta0, dom.theta1, dom.r0, dom.r1, epsrel=QUAD_EPSREL,
    )
    return float(d ** 2 * np.vdot(v1, v1).real * integral)


def annulus_mass(f: LaurentCurve, dom: SampleDomain, a: complex) -> float:
    """Mass of f_*[U_a] by adaptive quadrature in polar coordinates of U."""
    a = complex(a)

    def density(r, theta):
        x = a * r * np.exp(1j * theta)
        return 2.0 * float((np.abs(f.derivative_many(np.array([x]))) ** 2).sum()) * abs(a) ** 2 * r

    mass, _ = integrate.dblquad(density, dom.theta0, dom.theta1, dom.r0, dom.r1, epsrel=QUAD_EPSREL)
    return float(mass)


def mass_check(f: LaurentCurve, dom: SampleDomain, a_grid: Sequence[complex],
               method: str = 'quadrature', gamma: Optional[Lattice] = None,
               chunk_size: int = 2 ** 15) -> pd.DataFrame:
    """
    Ratios mass / (lambda_0 |a|^(-2d)) along a grid of scales.

    method "quadrature" integrates deterministically; "monte-carlo" uses
    sample_mu_a (and needs gamma). The fitted log-log slope of |ratio - 1|
    against |a| is stored in frame.attrs["slope"] (None with fewer than two
    nonzero deviations).
    """
    if method not in ('quadrature', 'monte-carlo'):
        raise ValueError(f"Unknown mass method {method!r}")
    lam0 = lambda_zero(f, dom)
    d = f.pole_bound
    rows = []
    for a in a_grid:
        if method == 'quadrature':
            mass = annulus_mass(f, dom, a)
        else:
            if gamma is None:
                raise ValueError("monte-carlo mass needs the lattice")
            scaled = SampleDomain(dom.r0, dom.r1, dom.theta0, dom.theta1, a, dom.samples, dom.seed, dom.engine)
            mass = sample_mu_a(f, scaled, gamma, chunk_size).total_mass
        normalized = lam0 * abs(complex(a)) ** (-2 * d)
        ratio = mass / normalized
        rows.append([abs(complex(a)), mass, normalized, ratio, ratio - 1.0])
    frame = pd.DataFrame(rows, columns=MASS_COLUMNS)
    frame.attrs['lambda_zero'] = lam0
    frame.attrs['slope'] = _log_slope(frame['a'].to_numpy(), np.abs(frame['deviation'].to_numpy()))
    logger.info(f"Mass check over {len(rows)} scales: lambda_0={lam0:.6g}, slope={frame.attrs['slope']}")
    return frame


def _log_slope(a: np.ndarray, deviation: np.ndarray) -> Optional[float]:
    keep = deviation > 1e-13
    if keep.sum() < 2:
        return None
    slope, _ = np.polyfit(np.log(a[keep]), np.log(deviation[keep]), 1)
    return float(slope)


# ============================================================================
# SECTORS
# ============================================================================

def sector_membership(xprime: complex, spec: SectorSpec) -> bool:
    """Whether x' lies in Omega_{A,p}."""
    return bool(spec.contains(np.array([xprime]))[0])


@dataclass
class SectorMass:
    """Mass of f_*[U_a] over the sector Omega_{A,p}, and its normalization."""
    a: float
    p: int
    A: float
    mass: float
    normalized: float  # mass * a^(2d - d_kappa), estimates lambda_A
    kept: int
    samples: int

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def sample_sector(f: LaurentCurve, analysis: RadiusAnalysis, p: int, A: float, a: float,
                  dom: SampleDomain, gamma: Optional[Lattice] = None) -> EmpiricalMeasure:
    """
    Pushforward of the area form of U_a n Omega_{A,p}, sampled in x' coordinates.

    Points x' = r e^{i(t + p pi)/d} cover the sector |sin t| < A r^d; each one
    is mapped back to x, kept when x / a lies in U, and weighted by
    2 |f'(x)|^2 |dx/dx'|^2 times its cell area. Without gamma the torus
    coordinates are left empty.
    """
    d = analysis.d_kappa
    spec = SectorSpec(A, p, d)
    a = abs(a)
    rho0, rho1 = 0.5 * dom.r0 * a, 2.0 * dom.r1 * a
    uv = unit_points(dom.samples, dom.seed, dom.engine)
    r = rho0 + uv[:, 0] * (rho1 - rho0)
    half = np.arcsin(np.minimum(1.0, A * r ** d))
    t = (2.0 * uv[:, 1] - 1.0) * half
    xprime = r * np.exp(1j * (t + p * np.pi) / d)
    x = analysis.x_of_xprime(xprime)
    keep = dom.contains(x / a) & spec.contains(xprime)
    cell = (rho1 - rho0) * (2.0 * half / d) * r / max(dom.samples, 1)
    jac = np.abs(analysis.dx_dxprime(xprime[keep])) ** 2
    x = x[keep]
    weights = 2.0 * (np.abs(f.derivative_many(x)) ** 2).sum(axis=-1) * jac * cell[keep]
    if gamma is not None and x.size:
        compact, transverse = gamma.reduce_many(f.evaluate_many(x))
    else:
        rank = gamma.rank if gamma is not None else 0
        extra = gamma.real_dim - rank if gamma is not None else 0
        compact, transverse = np.zeros((x.size, rank)), np.zeros((x.size, extra))
    logger.debug(f"Sector sample at a={a}: kept {x.size} of {dom.samples}")
    return EmpiricalMeasure(x, weights, compact, transverse, a ** (-(2 * f.pole_bound - d)))


def sector_mass(f: LaurentCurve, analysis: RadiusAnalysis, p: int, A: float, a: float,
                dom: SampleDomain) -> SectorMass:
    """Monte-Carlo mass of f_*[U_a n Omega_{A,p}]; see sample_sector."""
    mu = sample_sector(f, analysis, p, A, a, dom)
    mass = mu.total_mass
    return SectorMass(abs(a), p, A, mass, mass / mu.normalization, mu.count, dom.samples)


def sector_mass_check(f: LaurentCurve, analysis: RadiusAnalysis, p: int, A: float,
                      a_grid: Sequence[float], dom: SampleDomain) -> pd.DataFrame:
    """
    Sector variant of mass_check: "normalized" holds a^(d_kappa - 2d), "ratio"
    the lambda_A estimate at each scale and "deviation" its relative spread
    around the grid mean.
    """
    rows: List[SectorMass] = [sector_mass(f, analysis, p, A, a, dom) for a in a_grid]
    estimates = np.array([row.normalized for row in rows])
    mean = float(estimates.mean()) if estimates.size else 0.0
    D = f.pole_bound
    frame = pd.DataFrame(
        [[row.a, row.mass, row.a ** (-(2 * D - analysis.d_kappa)), row.normalized,
          row.normalized / mean - 1.0 if mean else 0.0] for row in rows],
        columns=MASS_COLUMNS,
    )
    frame.attrs['lambda_A'] = mean
    frame.attrs["sector"] = SectorSpec(A, p, analysis.d_kappa).to_dict()
    return frame
