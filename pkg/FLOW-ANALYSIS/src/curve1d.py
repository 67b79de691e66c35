"""
One-variable flows x -> pi(f(x)) of a Laurent curve f into T = E / Gamma.

WHY THIS EXISTS:
As x -> 0 the curve f runs off to infinity in E and its image in T
accumulates on a finite union of translated closed subgroups. This module
computes that union from the Laurent data of f.

HOW IT WORKS:
1. stratify: peel off the pole orders of f one complex direction at a time,
   giving a flag F_1 < ... < F_k of complex subspaces and the affine part
   V = F_k + v_{k+1}
2. If F_k lies inside Gamma_R the answer is the closure of pi(V)
3. Otherwise find kappa, the first pole direction not contained in Gamma_R,
   and the 2 d_kappa radii along which the leading pole points into Gamma_R
4. Change coordinates so that H(f(x)) = x'^{-d_kappa} and expand f along each
   radius; the real pole directions (the theta vectors) decide whether the radius
   contributes, and what it contributes
5. Deduplicate the contributions

Exact data stays exact. Phases e^{i phi} along a radius are replaced by an
exact Gaussian-rational positive multiple when one exists and otherwise carried
as balls; undecided ball tests are retried once at doubled precision.

EXAMPLE USAGE:
```python
f = LaurentCurve.from_dict({"n": 2, "terms": [{"e": -2, "v": ["1", "0"]},
                                              {"e": -1, "v": ["0", "1"]}],
                            "truncation": 4})
gamma = Lattice.from_dict({"n": 2, "generators": [["1", "0"], ["0", "1"], ["0", "i"]]})
report = limit_set(f, gamma)
len(report.components)     # 2
```
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Union
import logging

import mpmath as mp
import numpy as np

from .exceptions import (
    CertificationFailure, DimensionMismatch, NoPoles, TruncationInsufficient, UndecidedMembership,
)
from .lattice import ClosedSubgroup, Lattice, subgroup_closure
from .linalg.saturation import DEFAULT_HEIGHT, rational_saturation
from .linalg.scalars import (
    BallScalar, DEFAULT_BITS, ExactScalar, ONE, ZERO, Scalar, mpf_to_fraction, scalar_to_json,
)
from .linalg.subspaces import (
    ComplexSubspace, ExactVector, RealSubspace, nullspace, real_times_i, realify, solve_linear,
)
from .schema import (
    Compactness, ComponentRecord, LimitSetReport, LimitStatus, Membership, Provenance,
)
from .series import LaurentSeries

logger = logging.getLogger(__name__)

# Working truncation for curves given as exact Laurent polynomials
DEFAULT_SERIES_ORDER = 8


# ============================================================================
# CURVES
# ============================================================================

@dataclass
class LaurentCurve:
    """
    f(x) = sum_e v_e x^e with all coefficients below `truncation` known.

    truncation None means the curve is an exact Laurent polynomial.
    """
    ambient_dim: int
    terms: Dict[int, ExactVector]
    truncation: Optional[int] = None

    def __post_init__(self):
        cleaned = {}
        for e, v in self.terms.items():
            if v.dim != self.ambient_dim:
                raise DimensionMismatch(f"Coefficient of x^{e} has dimension {v.dim}, expected {self.ambient_dim}")
            if not v.is_exact:
                raise TypeError("Curve coefficients must be Gaussian rational")
            if self.truncation is not None and e >= self.truncation:
                raise TruncationInsufficient(
                    f"Term x^{e} given at or above the declared truncation {self.truncation}"
                )
            if not v.is_zero():
                cleaned[int(e)] = v
        self.terms = dict(sorted(cleaned.items()))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LaurentCurve":
        """Build from {"n": n, "terms": [{"e": e, "v": [...]}], "truncation": T}."""
        n = int(data['n'])
        terms: Dict[int, ExactVector] = {}
        for term in data.get('terms', []):
            e = int(term['e'])
            v = ExactVector.parse(term['v'])
            terms[e] = terms[e] + v if e in terms else v
        truncation = data.get('truncation')
        return cls(n, terms, None if truncation is None else int(truncation))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'n': self.ambient_dim,
            'terms': [{'e': e, 'v': v.to_json()} for e, v in self.terms.items()],
            'truncation': self.truncation,
        }

    @property
    def pole_bound(self) -> int:
        """D = -(lowest exponent), 0 when f has no pole."""
        return max(0, -min(self.terms)) if self.terms else 0

    @property
    def working_truncation(self) -> int:
        return self.truncation if self.truncation is not None else DEFAULT_SERIES_ORDER

    def coefficient(self, e: int) -> ExactVector:
        if self.truncation is not None and e >= self.truncation:
            raise TruncationInsufficient(
                f"Coefficient of x^{e} needed but the curve is only known below x^{self.truncation}"
            )
        return self.terms.get(e, ExactVector.zeros(self.ambient_dim))

    def value_at_zero(self) -> ExactVector:
        return self.coefficient(0)

    def evaluate_many(self, x: np.ndarray) -> np.ndarray:
        """f at complex points; returns shape x.shape + (n,)."""
        x = np.asarray(x, dtype=complex)
        out = np.zeros(x.shape + (self.ambient_dim,), dtype=complex)
        for e, v in self.terms.items():
            out += np.power(x, e)[..., None] * v.to_numpy()
        return out

    def derivative_many(self, x: np.ndarray) -> np.ndarray:
        """f' at complex points; returns shape x.shape + (n,)."""
        x = np.asarray(x, dtype=complex)
        out = np.zeros(x.shape + (self.ambient_dim,), dtype=complex)
        for e, v in self.terms.items():
            if e:
                out += (e * np.power(x, e - 1))[..., None] * v.to_numpy()
        return out


def _functional_series(h: Sequence[ExactScalar], terms: Dict[int, ExactVector],
                       precision: Optional[int]) -> LaurentSeries:
    """The scalar series x -> h(f(x)) for a complex-linear functional h."""
    values = {}
    for e, v in terms.items():
        values[e] = sum((a * b for a, b in zip(h, v.entries)), ZERO)
    return LaurentSeries.from_dict(values, precision)


def _evaluate_series(series: LaurentSeries, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    out = np.zeros(x.shape, dtype=complex)
    for e, c in series.coeffs:
        out += c.to_complex() * np.power(x, e)
    return out


# ============================================================================
# STRATIFICATION
# ============================================================================

@dataclass
class Stratification:
    """
    Pole flag of a curve.

    degrees[l] is the pole order contributed by vectors[l]; the last entry of
    both lists is the constant part (degree 0). chain[l] = span(vectors[:l+1]).
    """
    ambient_dim: int
    degrees: List[int]
    vectors: List[ExactVector]
    chain: List[ComplexSubspace]

    @property
    def k(self) -> int:
        return len(self.chain)

    @property
    def pole_space(self) -> ComplexSubspace:
        """F_k."""
        return self.chain[-1]

    @property
    def translation(self) -> ExactVector:
        """v_{k+1}."""
        return self.vectors[-1]

    def flag(self, index: int) -> ComplexSubspace:
        """F_index with F_0 = 0."""
        if index == 0:
            return ComplexSubspace.zero(self.ambient_dim)
        return self.chain[index - 1]

    def principal_part(self) -> Dict[int, ExactVector]:
        """sum_l x^{-d_l} v_l + v_{k+1} as an exponent map."""
        return {-d: v for d, v in zip(self.degrees, self.vectors)}

    def to_dict(self) -> Dict[str, Any]:
        return {
            'k': self.k,
            'degrees': list(self.degrees),
            'vectors': [v.to_json() for v in self.vectors],
            'chain_dims': [F.dim for F in self.chain],
            'pole_space': self.pole_space.to_json(),
        }


def stratify(f: LaurentCurve) -> Stratification:
    """
    Inductive pole flag: d_{l+1} is the top pole order of f modulo F_l and
    v_{l+1} the corresponding coefficient, reduced modulo F_l.

    Raises:
        NoPoles: If f has no negative exponent; carries f(0)
        TruncationInsufficient: If the constant term is not determined (T < 1)
    """
    if f.truncation is not None and f.truncation < 1:
        raise TruncationInsufficient(f"Truncation {f.truncation} leaves the constant term unknown")
    n = f.ambient_dim
    negative = [e for e in f.terms if e < 0]
    if not negative:
        raise NoPoles("Curve has no pole; the flow converges", value=f.value_at_zero())

    F = ComplexSubspace.zero(n)
    degrees: List[int] = []
    vectors: List[ExactVector] = []
    chain: List[ComplexSubspace] = []
    while True:
        leading = None
        for e in sorted(negative):
            reduced = F.reduce(f.terms[e])
            if not reduced.is_zero():
                leading = (e, reduced)
                break
        if leading is None:
            break
        e, v = leading
        degrees.append(-e)
        vectors.append(v)
        F = F.add_vector(v)
        chain.append(F)
        logger.debug(f"Stratum {len(chain)}: pole order {-e}, flag dimension {F.dim}")

    degrees.append(0)
    vectors.append(F.reduce(f.value_at_zero()))
    return Stratification(n, degrees, vectors, chain)


def classify_compactness(s: Stratification, gamma: Lattice) -> Compactness:
    """COMPACT iff F_k lies in Gamma_R."""
    inside = gamma.gamma_r.includes(s.pole_space.realify())
    return Compactness.COMPACT if inside == Membership.IN else Compactness.NON_COMPACT


def limit_set_compact(s: Stratification, gamma: Lattice,
                      height: int = DEFAULT_HEIGHT) -> ClosedSubgroup:
    """Closure of pi(F_k + v_{k+1}); a translated real subtorus."""
    return subgroup_closure(s.pole_space.realify(), s.translation, gamma, height)


# ============================================================================
# ALMOST-GAMMA-RADII
# ============================================================================

@dataclass
class AlmostRadii:
    """
    Directions where the leading non-real pole lines up with Gamma_R.

    w = c - i s is the primitive solution of the linear condition
    w v_kappa in Gamma_R, normalized so arg w lies in (-pi/2, pi/2];
    lam = e^{i arg(w) / d_kappa}.
    """
    kappa: int
    d_kappa: int
    w: ExactScalar
    lam: Scalar
    bits: int = DEFAULT_BITS

    @property
    def count(self) -> int:
        return 2 * self.d_kappa

    def arg_w(self, bits: Optional[int] = None):
        with mp.workprec((bits or self.bits) + 32):
            return mp.atan2(mp.mpf(self.w.im.numerator) / self.w.im.denominator,
                            mp.mpf(self.w.re.numerator) / self.w.re.denominator)

    def theta(self, p: int) -> float:
        """Direction arg(1/lam) + p pi / d_kappa of radius p, in [0, 2 pi)."""
        with mp.workprec(self.bits + 32):
            value = (p * mp.pi - self.arg_w()) / self.d_kappa
            return float(value % (2 * mp.pi))

    def thetas(self) -> List[float]:
        return [self.theta(p) for p in range(self.count)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'kappa': self.kappa,
            'd_kappa': self.d_kappa,
            'w': scalar_to_json(self.w),
            'lambda': scalar_to_json(self.lam),
            'directions': self.thetas(),
        }


def _canonical_w(c: Fraction, s: Fraction) -> ExactScalar:
    w = ExactScalar(c, -s)
    if w.re < 0 or (w.re == 0 and w.im < 0):
        w = -w
    scale = max(abs(w.re), abs(w.im))
    return ExactScalar(w.re / scale, w.im / scale)


def kappa_and_angles(s: Stratification, gamma: Lattice,
                     bits: int = DEFAULT_BITS) -> Optional[AlmostRadii]:
    """
    kappa and the almost-Gamma-radius data, or None when no direction exists
    (the flow then has no cluster value).

    Raises:
        ValueError: If F_k lies in Gamma_R (compact case)
    """
    kappa = None
    for index, v in enumerate(s.vectors[:-1], start=1):
        complex_line = ComplexSubspace.span([v]).realify()
        if gamma.gamma_r.includes(complex_line) != Membership.IN:
            kappa = index
            break
    if kappa is None:
        raise ValueError("kappa_and_angles needs a non-compact stratification")

    v = s.vectors[kappa - 1]
    d = s.degrees[kappa - 1]
    a = gamma.gamma_r.residual(realify(v))
    b = gamma.gamma_r.residual(realify(v.times_i()))
    # c a - s b in Gamma_R, as a 2-column system
    system = [[a[j], -b[j]] for j in range(gamma.real_dim)]
    solutions = nullspace(system, 2)
    if not solutions:
        logger.info(f"No almost-Gamma-radius: no real multiple of v_{kappa} lies in Gamma_R")
        return None
    if len(solutions) > 1:
        raise CertificationFailure("C v_kappa inside Gamma_R contradicts the choice of kappa")
    c, s_coeff = solutions[0]
    w = _canonical_w(Fraction(c), Fraction(s_coeff))
    if w.im == 0:
        lam: Scalar = ONE
    else:
        with mp.workprec(bits + 32):
            angle = mp.atan2(mp.mpf(w.im.numerator) / w.im.denominator,
                             mp.mpf(w.re.numerator) / w.re.denominator) / d
        lam = BallScalar.from_mpmath(mp.expj(angle), bits)
    result = AlmostRadii(kappa, d, w, lam, bits)
    logger.debug(f"kappa={kappa}, d_kappa={d}, w={w}")
    return result


# ============================================================================
# RADIUS EXPANSION
# ============================================================================

@dataclass
class SectorSpec:
    """
    Omega_{A,p} = {x' = r e^{i(t + p pi)/d}: |t| <= pi/2, |sin t| < A r^d}.
    """
    A: float
    p: int
    d_kappa: int

    def angle_offset(self, xprime: np.ndarray) -> np.ndarray:
        """t with x' = |x'| e^{i(t + p pi)/d}, wrapped to (-pi, pi]."""
        t = self.d_kappa * np.angle(np.asarray(xprime, dtype=complex)) - self.p * np.pi
        return np.angle(np.exp(1j * t))

    def contains(self, xprime: np.ndarray) -> np.ndarray:
        xprime = np.asarray(xprime, dtype=complex)
        t = self.angle_offset(xprime)
        r = np.abs(xprime)
        return (np.abs(t) <= np.pi / 2) & (np.abs(np.sin(t)) < self.A * r ** self.d_kappa)

    def to_dict(self) -> Dict[str, Any]:
        return {'A': self.A, 'p': self.p, 'd_kappa': self.d_kappa}


@dataclass
class RadiusRecord:
    """Expansion of f along one almost-Gamma-radius."""
    p: int
    theta: float
    deltas: List[int]
    vectors: List[ExactVector]  # theta_0 .. theta_m, up to positive scaling
    translation: ExactVector  # theta_{m+1}
    chain_dims: List[int]
    is_gamma_radius: bool
    direction: RealSubspace  # i R theta_0 + F'_m
    complex_span_ok: bool
    bits: int

    @property
    def m(self) -> int:
        return len(self.vectors) - 1

    def to_dict(self) -> Dict[str, Any]:
        return {
            'p': self.p,
            'theta': self.theta,
            'deltas': list(self.deltas),
            'vectors': [v.to_json() for v in self.vectors],
            'translation': self.translation.to_json(),
            'chain_dims': list(self.chain_dims),
            'is_gamma_radius': self.is_gamma_radius,
            'v_prime': self.direction.to_json(),
            'complex_span_ok': self.complex_span_ok,
            'bits': self.bits,
        }


@dataclass
class RadiusAnalysis:
    """
    Coordinate change and radius expansions for a non-compact curve.

    h_functional is the exact functional h with Im h = 0 on Gamma_R and
    h(w v_kappa) = 1; H = |w| h satisfies H(lam^d v_kappa) = 1. With
    y = x s(x) (y_series) the new coordinate is x' = lam y, and x_of_y is
    the reverted series. coefficients[j] is the coefficient U_j of y^j in f
    reduced modulo F_{kappa-1}.
    """
    angles: AlmostRadii
    h_functional: ExactVector
    y_series: LaurentSeries
    x_of_y: LaurentSeries
    coefficients: Dict[int, ExactVector]
    radii: List[RadiusRecord] = field(default_factory=list)

    @property
    def kappa(self) -> int:
        return self.angles.kappa

    @property
    def d_kappa(self) -> int:
        return self.angles.d_kappa

    @property
    def lam(self) -> Scalar:
        return self.angles.lam

    def h_scale(self, bits: int = DEFAULT_BITS) -> BallScalar:
        """|w|, the factor turning h into H."""
        w = self.angles.w
        with mp.workprec(bits + 32):
            value = mp.sqrt(mp.mpf(w.abs2().numerator) / w.abs2().denominator)
        return BallScalar.from_mpmath(value, bits)

    def xprime_of_x(self, x: np.ndarray) -> np.ndarray:
        return self.lam.to_complex() * _evaluate_series(self.y_series, x)

    def x_of_xprime(self, xprime: np.ndarray) -> np.ndarray:
        return _evaluate_series(self.x_of_y, np.asarray(xprime, dtype=complex) / self.lam.to_complex())

    def dx_dxprime(self, xprime: np.ndarray) -> np.ndarray:
        """Derivative of x_of_xprime, for Jacobian weights in x' coordinates."""
        lam = self.lam.to_complex()
        return _evaluate_series(self.x_of_y.derivative(), np.asarray(xprime, dtype=complex) / lam) / lam

    def sector(self, p: int, A: float) -> SectorSpec:
        return SectorSpec(A, p, self.d_kappa)

    def gamma_radii(self) -> List[RadiusRecord]:
        return [r for r in self.radii if r.is_gamma_radius]

    def to_dict(self) -> Dict[str, Any]:
        return {
            **self.angles.to_dict(),
            'h_functional': self.h_functional.to_json(),
            'h_scale': self.h_scale(self.angles.bits).to_dict(),
            'xprime_series': str(self.y_series),
            'radii': [r.to_dict() for r in self.radii],
        }


def _solve_h(v: ExactVector, w: ExactScalar, gamma: Lattice) -> ExactVector:
    """Minimal-support h with Im h(g) = 0 on the generators and h(w v) = 1."""
    n = gamma.ambient_dim
    rows = []
    rhs = []
    # unknowns (Re h_1, Im h_1, ..., Re h_n, Im h_n)
    for g in gamma.generators:
        row = []
        for z in g.entries:
            z = ExactScalar.coerce(z)
            row.extend([z.im, z.re])
        rows.append(row)
        rhs.append(Fraction(0))
    target = v.scale(w)
    re_row, im_row = [], []
    for z in target.entries:
        z = ExactScalar.coerce(z)
        re_row.extend([z.re, -z.im])
        im_row.extend([z.im, z.re])
    rows.extend([re_row, im_row])
    rhs.extend([Fraction(1), Fraction(0)])
    solution = solve_linear(rows, rhs, 2 * n)
    if solution is None:
        raise CertificationFailure("No functional normalizes the leading pole direction")
    return ExactVector(tuple(ExactScalar(solution[2 * j], solution[2 * j + 1]) for j in range(n)))


def prepare_radius_analysis(f: LaurentCurve, s: Stratification, gamma: Lattice,
                            angles: AlmostRadii) -> RadiusAnalysis:
    """
    Exact part of the radius analysis: H, the coordinate change and the
    coefficients of f in the new coordinate.

    Raises:
        TruncationInsufficient: If the data do not determine the constant term
            in the new coordinate
    """
    kappa, d, w = angles.kappa, angles.d_kappa, angles.w
    v = s.vectors[kappa - 1]
    h = _solve_h(v, w, gamma)
    T = f.working_truncation

    # 1 + g = w h(f(x)) x^d; h kills F_{kappa-1}, which holds every pole above d
    hf = _functional_series(h.entries, f.terms, T).shift(d).scale(w)
    if hf.coeffs and hf.valuation < 0:
        raise CertificationFailure("Functional does not vanish on the higher pole directions")
    if hf.coefficient(0) != ONE:
        raise CertificationFailure("Normalization h(w v_kappa) = 1 failed")
    unit = hf.power_of_unit(Fraction(-1, d))
    y_series = unit.shift(1)
    x_of_y = y_series.revert()

    # f modulo F_{kappa-1}; only exponents >= -d survive
    lower = s.flag(kappa - 1)
    reduced = {e: lower.reduce(vec) for e, vec in f.terms.items()}
    reduced = {e: vec for e, vec in reduced.items() if not vec.is_zero()}
    if reduced and min(reduced) < -d:
        raise CertificationFailure("Pole order above d_kappa survives modulo F_{kappa-1}")

    precision = T
    powers = {}
    for e in reduced:
        powers[e] = x_of_y.power(e, T)
        if powers[e].precision is not None:
            precision = min(precision, powers[e].precision)
    if precision < 1:
        raise TruncationInsufficient(
            f"Coordinate change known only below y^{precision}; the constant term needs a larger truncation"
        )
    n = f.ambient_dim
    coefficients: Dict[int, ExactVector] = {}
    for j in range(-d, 1):
        entries = [ZERO] * n
        for e, vec in reduced.items():
            c = powers[e].coefficient(j)
            if c:
                entries = [a + c * b for a, b in zip(entries, vec.entries)]
        coefficients[j] = ExactVector(tuple(entries))
    logger.debug(f"Coordinate change y = {y_series}; coefficients known below y^{precision}")
    return RadiusAnalysis(angles, h, y_series, x_of_y, coefficients)


def _phase_direction(j: int, p: int, angles: AlmostRadii, bits: int,
                     height: int) -> Scalar:
    """
    A positive multiple of e^{i phi}, phi = j (p pi - arg w) / d.

    Exact when the slope of e^{i phi} reconstructs to a rational that passes
    the exact check u^d ~ (-1)^{jp} w^{-j} (positive real ratio); a unit
    ball otherwise.
    """
    if j == 0:
        return ONE
    d, w = angles.d_kappa, angles.w
    with mp.workprec(bits + 32):
        phi = j * (p * mp.pi - angles.arg_w(bits)) / d
        c, s = mp.cos(phi), mp.sin(phi)
        if abs(c) >= abs(s):
            slope = mpf_to_fraction(s / c).limit_denominator(height)
            sign = 1 if c > 0 else -1
            u = ExactScalar(Fraction(sign), sign * slope)
        else:
            slope = mpf_to_fraction(c / s).limit_denominator(height)
            sign = 1 if s > 0 else -1
            u = ExactScalar(sign * slope, Fraction(sign))
        norm = mp.sqrt(mp.mpf(u.abs2().numerator) / u.abs2().denominator)
        approx = mp.mpc(mp.mpf(u.re.numerator) / u.re.denominator,
                        mp.mpf(u.im.numerator) / u.im.denominator) / norm
        close = abs(approx - mp.mpc(c, s)) < mp.ldexp(1, -(bits // 2))
        ball = BallScalar.from_mpmath(mp.mpc(c, s), bits)
    target = w ** (-j) if j < 0 else w.conjugate() ** j
    if (j * p) % 2:
        target = -target
    ratio = (u ** d) * target.conjugate()
    if close and ratio.im == 0 and ratio.re > 0:
        return u
    return ball


def _expand_radius_at(analysis: RadiusAnalysis, s: Stratification, gamma: Lattice,
                      p: int, bits: int, height: int) -> RadiusRecord:
    angles = analysis.angles
    d = angles.d_kappa
    n = gamma.ambient_dim
    real_dim = 2 * n
    S = s.flag(angles.kappa - 1).realify()
    deltas: List[int] = []
    vectors: List[ExactVector] = []
    chain_dims: List[int] = []
    for j in range(-d, 0):
        U = analysis.coefficients[j]
        if U.is_zero():
            continue
        W = U.scale(_phase_direction(j, p, angles, bits, height))
        S, answer = S.extend(realify(W), height)
        if answer == Membership.UNDECIDED:
            raise UndecidedMembership(f"Real rank along radius {p} undecided at y^{j}")
        if answer == Membership.OUT:
            deltas.append(-j)
            vectors.append(W)
            chain_dims.append(S.dim)
    deltas.append(0)
    translation = analysis.coefficients[0]

    is_gamma_radius = True
    for W in vectors:
        answer = gamma.in_gamma_r(W, height)
        if answer == Membership.UNDECIDED:
            raise UndecidedMembership(f"Gamma_R membership along radius {p} undecided")
        if answer == Membership.OUT:
            is_gamma_radius = False
            break

    hull = S.complex_hull(height)
    pole_space = s.pole_space.realify()
    complex_span_ok = hull.dim == pole_space.dim and hull.includes(pole_space, height) == Membership.IN
    if not complex_span_ok:
        logger.warning(f"Radius {p}: real pole directions do not span F_k over C")

    direction, _ = S.extend(real_times_i(realify(vectors[0])), height) if vectors else (S, None)
    if direction.ambient_dim != real_dim:
        raise DimensionMismatch("Radius direction has the wrong ambient dimension")
    return RadiusRecord(p, angles.theta(p), deltas, vectors, translation, chain_dims,
                        is_gamma_radius, direction, complex_span_ok, bits)


def radius_expand(f: LaurentCurve, s: Stratification, gamma: Lattice, p: int,
                  precision_bits: int = DEFAULT_BITS, height: int = DEFAULT_HEIGHT,
                  analysis: Optional[RadiusAnalysis] = None) -> RadiusRecord:
    """
    Expand f along almost-Gamma-radius p.

    The real pole directions are read off the coefficients U_j of f in the
    new coordinate, rotated by the phase of the radius; an undecided rank
    test is retried once at twice the precision.

    Raises:
        CertificationFailure: If still undecided after escalation
        TruncationInsufficient: If the curve data are too short
    """
    if analysis is None:
        angles = kappa_and_angles(s, gamma, precision_bits)
        if angles is None:
            raise ValueError("Curve has no almost-Gamma-radius")
        analysis = prepare_radius_analysis(f, s, gamma, angles)
    if not 0 <= p < analysis.angles.count:
        raise ValueError(f"Radius index {p} outside 0..{analysis.angles.count - 1}")
    try:
        return _expand_radius_at(analysis, s, gamma, p, precision_bits, height)
    except UndecidedMembership as err:
        logger.warning(f"Radius {p}: {err}; retrying at {2 * precision_bits} bits")
    try:
        return _expand_radius_at(analysis, s, gamma, p, 2 * precision_bits, height)
    except UndecidedMembership as err:
        raise CertificationFailure(f"Radius {p} undecided at {2 * precision_bits} bits: {err}") from err


def analyze_radii(f: LaurentCurve, s: Stratification, gamma: Lattice,
                  precision_bits: int = DEFAULT_BITS,
                  height: int = DEFAULT_HEIGHT) -> Optional[RadiusAnalysis]:
    """All 2 d_kappa radius records, or None without an almost-Gamma-radius."""
    angles = kappa_and_angles(s, gamma, precision_bits)
    if angles is None:
        return None
    analysis = prepare_radius_analysis(f, s, gamma, angles)
    for p in range(angles.count):
        analysis.radii.append(radius_expand(f, s, gamma, p, precision_bits, height, analysis))
    logger.info(f"{len(analysis.gamma_radii())} of {angles.count} radii are Gamma-radii")
    return analysis


# ============================================================================
# LIMIT SETS
# ============================================================================

def _add_component(records: List[ComponentRecord], subgroups: List[ClosedSubgroup],
                   subgroup: ClosedSubgroup, provenance: Provenance, source: Any,
                   certificates: Optional[Dict[str, Any]] = None):
    for index, known in enumerate(subgroups):
        if known.same_set(subgroup):
            records[index].sources.append(source)
            return
    subgroups.append(subgroup)
    records.append(ComponentRecord(
        subgroup=subgroup.to_dict(),
        provenance=provenance.value,
        sources=[source],
        compact=subgroup.is_compact,
        certificates=certificates or {},
    ))


def limit_set_with_subgroups(f: LaurentCurve, gamma: Lattice,
                             precision_bits: int = DEFAULT_BITS,
                             height: int = DEFAULT_HEIGHT):
    """limit_set plus the ClosedSubgroup objects behind its components."""
    report = LimitSetReport(status=LimitStatus.COMPONENTS.value)
    subgroups: List[ClosedSubgroup] = []
    try:
        s = stratify(f)
    except NoPoles as err:
        point = gamma.reduce(err.value)
        report.status = LimitStatus.POINT.value
        report.point = point.to_dict()
        report.notes.append("no pole: the flow converges to pi(f(0))")
        return report, subgroups

    report.details['stratification'] = s.to_dict()
    compactness = classify_compactness(s, gamma)
    report.details['compactness'] = compactness.value
    if compactness == Compactness.COMPACT:
        subgroup = limit_set_compact(s, gamma, height)
        _add_component(report.components, subgroups, subgroup, Provenance.COMPACT_BRANCH, 'compact')
        return report, subgroups

    analysis = analyze_radii(f, s, gamma, precision_bits, height)
    if analysis is None:
        report.status = LimitStatus.EMPTY_NO_ALMOST_RADIUS.value
        report.notes.append("no almost-Gamma-radius: the flow has no cluster value")
        return report, subgroups
    report.details['radius_analysis'] = analysis.to_dict()
    for record in analysis.gamma_radii():
        subgroup = subgroup_closure(record.direction, record.translation, gamma, height)
        _add_component(report.components, subgroups, subgroup, Provenance.GAMMA_RADIUS, record.p,
                       {'deltas': record.deltas, 'complex_span_ok': record.complex_span_ok})
    if not report.components:
        report.status = LimitStatus.EMPTY_NO_RADIUS.value
        report.notes.append("no Gamma-radius: the flow has no cluster value")
    logger.info(f"Limit set has {len(report.components)} components ({report.status})")
    return report, subgroups


def limit_set(f: LaurentCurve, gamma: Lattice, precision_bits: int = DEFAULT_BITS,
              height: int = DEFAULT_HEIGHT) -> LimitSetReport:
    """
    Limit set of pi(f(x)) as x -> 0, as a deduplicated list of translated
    closed subgroups (empty with a reason, or a single point).
    """
    report, _ = limit_set_with_subgroups(f, gamma, precision_bits, height)
    return report


# ============================================================================
# ALW HULL
# ============================================================================

def _start_subspace(F: Union[ComplexSubspace, RealSubspace, Sequence[ExactVector]],
                    gamma: Lattice, height: int) -> RealSubspace:
    if isinstance(F, ComplexSubspace):
        return F.realify()
    if isinstance(F, RealSubspace):
        return F
    rows = []
    for v in F:
        rows.append(realify(v))
        rows.append(realify(v.times_i()))
    return RealSubspace.span(rows, gamma.real_dim, height)


def alw_hull(F: Union[ComplexSubspace, RealSubspace, Sequence[ExactVector]], gamma: Lattice,
             height: int = DEFAULT_HEIGHT) -> ClosedSubgroup:
    """
    Smallest closed complex subgroup of T containing pi(F).

    Iterates S <- sat((S + iS) n Gamma_R) + (S + iS) to a fixed point; each
    non-final step raises the dimension, so at most 2n + 1 rounds run.
    """
    S = _start_subspace(F, gamma, height)
    for step in range(gamma.real_dim + 1):
        hull = S.complex_hull(height)
        inside = gamma.intersect_gamma_r(hull, height)
        saturated = rational_saturation(inside, gamma.gamma_r, height)
        grown = saturated.sum(hull, height)
        logger.debug(f"ALW round {step}: dim {S.dim} -> {grown.dim}")
        if grown.dim == S.dim:
            break
        S = grown
    return subgroup_closure(S, ExactVector.zeros(gamma.ambient_dim), gamma, height)


def alw_for_curve(f: LaurentCurve, gamma: Lattice, height: int = DEFAULT_HEIGHT) -> ClosedSubgroup:
    """The sub-semi-torus generated by the pole space F_k of a curve."""
    return alw_hull(stratify(f).pole_space, gamma, height)


def hypothesis_flags(s: Stratification, gamma: Lattice) -> Dict[str, bool]:
    """
    H0: a pole exists. H1: F_k is not inside Gamma_R. H2: an almost-Gamma-radius
    exists. H3: F_{kappa-1} lies in Gamma_R.
    """
    flags = {'H0': s.k > 0, 'H1': classify_compactness(s, gamma) == Compactness.NON_COMPACT}
    if not flags['H1']:
        flags.update({'H2': False, 'H3': True})
        return flags
    angles = kappa_and_angles(s, gamma)
    flags['H2'] = angles is not None
    kappa = angles.kappa if angles is not None else None
    if kappa is None:
        for index, v in enumerate(s.vectors[:-1], start=1):
            if gamma.gamma_r.includes(ComplexSubspace.span([v]).realify()) != Membership.IN:
                kappa = index
                break
    flags['H3'] = gamma.gamma_r.includes(s.flag(kappa - 1).realify()) == Membership.IN
    return flags
