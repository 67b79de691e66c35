"""
Flows of meromorphic maps of several variables near a normal-crossings pole.

WHY THIS EXISTS:
Near a point of the pole divisor the map is a Laurent series in the singular
variables z' (z_1..z_l) with Taylor coefficients in the regular variables z''.
Its cluster set in T is a finite union of pieces pi(C) + T_B, one per complete
leading sequence of powers B. This module enumerates those sequences and
reduces each one to a one-variable flow along a holomorphic disc.

WHAT IT PROVIDES:
- MultiLaurentMap: sum over (beta, theta) of z'^beta z''^theta v_{beta,theta}
- leading_powers / coefficient_space: minimal pole powers and their spans
- enumerate_complete_sequences: depth-first search with cone certificates
- good_disc / compose: the disc x -> (x^{M lam_j}(alpha_j + x^{gamma_j}), x^{gamma_k})
  and the one-variable curve f o phi
- limit_component / decompose: T_B exactly, C_B sampled through its monomial
  orbit parametrization

D_B is kept parametric (no implicitization). The decomposition theorem needs
T compact; on a non-compact T every component is flagged heuristic.

EXAMPLE USAGE:
```python
F = MultiLaurentMap.from_dict({"l": 2, "q": 2, "n": 2, "terms": [
    {"beta": [-1, 0], "theta": [], "v": ["1", "0"]},
    {"beta": [0, -1], "theta": [], "v": ["0", "1"]}]})
leading_powers(F)                                  # [(-1, 0), (0, -1)]
result = enumerate_complete_sequences(F)
disc = good_disc(result.sequences[0], F)           # gamma (4, 5), M 12
```
"""

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Any, Dict, FrozenSet, List, Optional, Sequence, Tuple
import logging

import numpy as np

from .cones import RationalCone, build_cone, dot, intersect_trivially, separating_lambda
from .curve1d import LaurentCurve, stratify
from .exceptions import (
    AlphaDegenerate, DepthExceeded, DimensionMismatch, NoPoles, RankNotReached, TruncationInsufficient,
)
from .lattice import ClosedSubgroup, Lattice, subgroup_closure
from .linalg.saturation import DEFAULT_HEIGHT
from .linalg.scalars import ExactScalar, ONE, ZERO, scalar_to_json
from .linalg.subspaces import ComplexSubspace, ExactVector, rank
from .schema import ComponentRecord, LimitSetReport, LimitStatus, Provenance
from .series import LaurentSeries, generalized_binomial

logger = logging.getLogger(__name__)

Power = Tuple[int, ...]
TermKey = Tuple[Power, Power]

N0_CAP = 12


# ============================================================================
# MAPS
# ============================================================================

@dataclass
class MultiLaurentMap:
    """
    F(z', z'') = sum z'^beta z''^theta v_{beta,theta}.

    Truncations: every term with sum(beta) < beta_truncation and
    |theta| < theta_truncation is given (None means exact). open_tails lists
    powers beta whose Taylor series in z'' is known to continue beyond the
    theta truncation.
    """
    l: int
    q: int
    ambient_dim: int
    terms: Dict[TermKey, ExactVector]
    beta_truncation: Optional[int] = None
    theta_truncation: Optional[int] = None
    open_tails: FrozenSet[Power] = frozenset()

    def __post_init__(self):
        if not 0 <= self.l <= self.q:
            raise DimensionMismatch(f"Need 0 <= l <= q, got l={self.l}, q={self.q}")
        cleaned = {}
        for (beta, theta), v in self.terms.items():
            beta, theta = tuple(int(b) for b in beta), tuple(int(t) for t in theta)
            if len(beta) != self.l or len(theta) != self.q - self.l:
                raise DimensionMismatch(
                    f"Term {beta},{theta} does not match l={self.l}, q-l={self.q - self.l}"
                )
            if any(t < 0 for t in theta):
                raise ValueError(f"Regular-variable exponents must be >= 0, got {theta}")
            if v.dim != self.ambient_dim:
                raise DimensionMismatch(f"Coefficient of dimension {v.dim} in C^{self.ambient_dim}")
            if not v.is_zero():
                key = (beta, theta)
                cleaned[key] = cleaned[key] + v if key in cleaned else v
        self.terms = {k: v for k, v in sorted(cleaned.items()) if not v.is_zero()}
        self.open_tails = frozenset(tuple(b) for b in self.open_tails)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MultiLaurentMap":
        """
        Build from {"l", "q", "n", "terms": [{"beta", "theta", "v"}],
        "trunc": {"beta": T', "theta": T''}, "open_tails": [[...]]}.
        """
        l, q = int(data['l']), int(data.get('q', data['l']))
        raw_terms = data.get('terms', [])
        n = data.get('n')
        if n is None:
            if not raw_terms:
                raise DimensionMismatch("Ambient dimension needed for a map without terms")
            n = len(raw_terms[0]['v'])
        terms: Dict[TermKey, ExactVector] = {}
        for term in raw_terms:
            key = (tuple(term['beta']), tuple(term.get('theta', [])))
            v = ExactVector.parse(term['v'])
            terms[key] = terms[key] + v if key in terms else v
        trunc = data.get('trunc') or {}
        return cls(l, q, int(n), terms, trunc.get('beta'), trunc.get('theta'),
                   frozenset(tuple(b) for b in data.get('open_tails', [])))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'l': self.l,
            'q': self.q,
            'n': self.ambient_dim,
            'terms': [{'beta': list(b), 'theta': list(t), 'v': v.to_json()} for (b, t), v in self.terms.items()],
            'trunc': {'beta': self.beta_truncation, 'theta': self.theta_truncation},
            'open_tails': [list(b) for b in sorted(self.open_tails)],
        }

    @property
    def pole_bound(self) -> int:
        """D with beta_j >= -D on the support."""
        return max([0] + [-b for beta in self.support() for b in beta])

    def support(self) -> List[Power]:
        """Powers beta with v_beta != 0, sorted."""
        return sorted({beta for beta, _ in self.terms})

    def coefficients(self, beta: Power) -> Dict[Power, ExactVector]:
        """Taylor coefficients theta -> v_{beta,theta}."""
        return {theta: v for (b, theta), v in self.terms.items() if b == tuple(beta)}

    def project(self, F: ComplexSubspace) -> "MultiLaurentMap":
        """The map F modulo a subspace (coefficients reduced, zeros dropped)."""
        return MultiLaurentMap(
            self.l, self.q, self.ambient_dim,
            {key: F.reduce(v) for key, v in self.terms.items()},
            self.beta_truncation, self.theta_truncation, self.open_tails,
        )

    def coefficient_at(self, beta: Power, a: Sequence[complex]) -> np.ndarray:
        """v_beta(a) for a point a of the regular variables."""
        out = np.zeros(self.ambient_dim, dtype=complex)
        a = np.asarray(a, dtype=complex)
        for theta, v in self.coefficients(beta).items():
            out += np.prod(a ** np.array(theta, dtype=int)) * v.to_numpy()
        return out

    def coefficient_exact(self, beta: Power, a: Sequence[ExactScalar]) -> ExactVector:
        """v_beta(a) for an exact point a."""
        total = ExactVector.zeros(self.ambient_dim)
        for theta, v in self.coefficients(beta).items():
            weight = ONE
            for x, t in zip(a, theta):
                weight = weight * (ExactScalar.coerce(x) ** t)
            total = total + v.scale(weight)
        return total

    def evaluate(self, zprime: Sequence[complex], zsecond: Sequence[complex] = ()) -> np.ndarray:
        zprime = np.asarray(zprime, dtype=complex)
        zsecond = np.asarray(zsecond, dtype=complex)
        out = np.zeros(self.ambient_dim, dtype=complex)
        for (beta, theta), v in self.terms.items():
            weight = np.prod(zprime ** np.array(beta, dtype=int)) if beta else 1.0
            if theta:
                weight = weight * np.prod(zsecond ** np.array(theta, dtype=int))
            out += weight * v.to_numpy()
        return out


def _strictly_below(a: Power, b: Power) -> bool:
    return a != b and all(x <= y for x, y in zip(a, b))


def minimal_powers(powers: Sequence[Power]) -> List[Power]:
    powers = sorted(set(powers))
    return [b for b in powers if not any(_strictly_below(a, b) for a in powers)]


def leading_powers(F: MultiLaurentMap) -> List[Power]:
    """
    Powers beta with v_beta != 0, a negative component, and v_beta' = 0 for
    every beta' < beta. Lexicographically sorted; empty iff F is bounded
    near the stratum.
    """
    support = F.support()
    leading = [b for b in minimal_powers(support) if any(x < 0 for x in b)]
    close = near_truncation(F, leading)
    if close:
        logger.warning(f"Leading powers {close} are near the beta truncation {F.beta_truncation}; "
                       f"unseen terms could undercut them")
    return leading


def near_truncation(F: MultiLaurentMap, powers: Sequence[Power]) -> List[Power]:
    """Powers within l of the beta truncation, where a missing term could still be smaller."""
    if F.beta_truncation is None:
        return []
    return [tuple(b) for b in powers if sum(b) >= F.beta_truncation - F.l]


def coefficient_space(F: MultiLaurentMap, beta: Sequence[int]) -> ComplexSubspace:
    """
    Span of the values v_beta(z''), i.e. of its Taylor coefficients.

    Raises:
        TruncationInsufficient: If beta is flagged with an open Taylor tail
        ValueError: If v_beta = 0
    """
    beta = tuple(beta)
    if beta in F.open_tails:
        raise TruncationInsufficient(
            f"Taylor coefficients of power {beta} continue beyond the theta truncation"
        )
    coefficients = list(F.coefficients(beta).values())
    if not coefficients:
        raise ValueError(f"v_{beta} vanishes; it spans nothing")
    return ComplexSubspace.span(coefficients, F.ambient_dim)


def reparametrize(F: MultiLaurentMap, units: Sequence, order: int) -> MultiLaurentMap:
    """
    The map in the coordinates z_j <- c_j z_j + z_j^2 (j <= l), expanded to
    `order` extra powers per variable.

    Args:
        units: Nonzero Gaussian rationals c_1..c_l
        order: Number of extra powers kept in each (c_j + z_j)^beta_j
    """
    units = [ExactScalar.coerce(u) for u in units]
    if len(units) != F.l:
        raise DimensionMismatch(f"{len(units)} units for {F.l} singular variables")
    if any(not u for u in units):
        raise ValueError("Reparametrization units must be nonzero")
    expansions: Dict[Tuple[int, int], List[ExactScalar]] = {}

    def expansion(j: int, b: int) -> List[ExactScalar]:
        # (c + z)^b = sum_k binom(b, k) c^(b-k) z^k
        if (j, b) not in expansions:
            c = units[j]
            expansions[(j, b)] = [ExactScalar.coerce(generalized_binomial(b, k)) * c ** (b - k)
                                  for k in range(order + 1)]
        return expansions[(j, b)]

    support = F.support()
    limit = min(sum(b) for b in support) + order + 1 if support else None
    if F.beta_truncation is not None:
        limit = F.beta_truncation if limit is None else min(limit, F.beta_truncation)
    out: Dict[TermKey, ExactVector] = {}
    for (beta, theta), v in F.terms.items():
        factors = [expansion(j, b) for j, b in enumerate(beta)]
        for shift in product(range(order + 1), repeat=F.l):
            new_beta = tuple(b + k for b, k in zip(beta, shift))
            if limit is not None and sum(new_beta) >= limit:
                continue
            weight = ONE
            for j, k in enumerate(shift):
                weight = weight * factors[j][k]
            key = (new_beta, theta)
            term = v.scale(weight)
            out[key] = out[key] + term if key in out else term
    return MultiLaurentMap(F.l, F.q, F.ambient_dim, out, limit, F.theta_truncation, F.open_tails)


# ============================================================================
# LEADING SEQUENCES
# ============================================================================

@dataclass
class LeadingSequence:
    """
    A leading sequence B with its flag, cones and power sets.

    sigma_zero is a basis of the smallest face of sigma_geq through 0;
    b_zero and b_plus split the support of F_B between that face and the
    rest of sigma_geq.
    """
    betas: List[Power]
    chain: List[ComplexSubspace]
    space: ComplexSubspace
    sigma_minus: RationalCone
    sigma_geq: RationalCone
    sigma_zero: List[Tuple[Fraction, ...]]
    b_zero: List[Power]
    b_plus: List[Power]
    complete: bool
    lam: Optional[Tuple[int, ...]] = None
    certificate: Dict[str, Any] = field(default_factory=dict)

    @property
    def key(self) -> Tuple:
        return (self.space.basis, frozenset(self.betas), frozenset(self.b_zero), frozenset(self.b_plus))

    @property
    def depth(self) -> int:
        return len(self.betas)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'betas': [list(b) for b in self.betas],
            'chain_dims': [F.dim for F in self.chain],
            'space': self.space.to_json(),
            'sigma_minus': self.sigma_minus.to_dict(),
            'sigma_geq': self.sigma_geq.to_dict(),
            'sigma_zero': [[str(x) for x in u] for u in self.sigma_zero],
            'b_zero': [list(b) for b in self.b_zero],
            'b_plus': [list(b) for b in self.b_plus],
            'complete': self.complete,
            'lambda': None if self.lam is None else list(self.lam),
            'certificate': self.certificate,
        }


def _in_span(beta: Power, basis: List[Tuple[Fraction, ...]], dim: int) -> bool:
    if not any(beta):
        return True
    if not basis:
        return False
    rows = [list(u) for u in basis]
    return rank(rows + [[Fraction(b) for b in beta]], dim) == rank(rows, dim)


def sequence_data(F: MultiLaurentMap, betas: Sequence[Power],
                  chain: Optional[List[ComplexSubspace]] = None) -> LeadingSequence:
    """
    Cones and power sets of a leading sequence.

    Computes the flag when `chain` is not given; the (L2) condition is the
    caller's responsibility.
    """
    l = F.l
    betas = [tuple(b) for b in betas]
    if chain is None:
        chain = []
        current = ComplexSubspace.zero(F.ambient_dim)
        for beta in betas:
            current = current + coefficient_space(F.project(current), beta)
            chain.append(current)
    space = chain[-1] if chain else ComplexSubspace.zero(F.ambient_dim)

    sigma_minus = build_cone(betas, 'nonpos', dim=l)
    projected = F.project(space)
    support = projected.support()
    sigma_geq = build_cone(minimal_powers(support), 'nonneg', dim=l)
    sigma_zero = sigma_geq.zero_face
    b_zero = [b for b in support if _in_span(b, sigma_zero, l)]
    b_plus = [b for b in support if b not in b_zero]

    certificate: Dict[str, Any] = {'salient': sigma_minus.is_salient}
    complete = False
    if sigma_minus.is_salient:
        meet = intersect_trivially(sigma_geq, sigma_minus)
        certificate['intersection'] = meet.to_dict()
        complete = meet.trivial
    return LeadingSequence(betas, list(chain), space, sigma_minus, sigma_geq, sigma_zero,
                           b_zero, b_plus, complete, None, certificate)


@dataclass
class EnumerationResult:
    """Complete sequences found, plus search statistics."""
    sequences: List[LeadingSequence] = field(default_factory=list)
    depth_exceeded: bool = False
    nodes: int = 0
    pruned: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'sequences': [s.to_dict() for s in self.sequences],
            'depth_exceeded': self.depth_exceeded,
            'nodes': self.nodes,
            'pruned': self.pruned,
        }


def enumerate_complete_sequences(F: MultiLaurentMap, depth_bound: Optional[int] = None,
                                 strict: bool = False) -> EnumerationResult:
    """
    Depth-first search over leading sequences.

    Children of a node are the leading powers of F modulo the node's flag, in
    lexicographic order. Nodes whose sigma_minus contains a line are pruned;
    complete nodes are emitted and still extended. Each step raises the flag
    dimension, so the depth never exceeds n.

    Args:
        depth_bound: Maximum sequence length explored (None: unbounded)
        strict: Raise DepthExceeded instead of flagging the result

    Raises:
        DepthExceeded: In strict mode when the bound cut the search
    """
    result = EnumerationResult()
    seen = set()

    def visit(betas: List[Power], chain: List[ComplexSubspace]):
        result.nodes += 1
        node = sequence_data(F, betas, chain)
        if not node.sigma_minus.is_salient:
            result.pruned += 1
            logger.debug(f"Pruned {betas}: sigma_minus contains a line")
            return
        if node.complete and node.key not in seen:
            seen.add(node.key)
            node.lam = separating_lambda(node.betas, node.b_zero, node.b_plus, dim=F.l)
            result.sequences.append(node)
            logger.debug(f"Complete sequence {betas} with lambda {node.lam}")
        children = leading_powers(F.project(node.space))
        if not children:
            return
        if depth_bound is not None and len(betas) >= depth_bound:
            result.depth_exceeded = True
            return
        for beta in children:
            space = node.space + coefficient_space(F.project(node.space), beta)
            visit(betas + [beta], chain + [space])

    visit([], [])
    logger.info(f"Found {len(result.sequences)} complete sequences "
                f"({result.nodes} nodes, {result.pruned} pruned)")
    if result.depth_exceeded:
        logger.warning(f"Depth bound {depth_bound} reached; enumeration is partial")
        if strict:
            raise DepthExceeded(f"Depth bound {depth_bound} reached", partial=result.sequences)
    return result


def orbit_point(seq: LeadingSequence, F: MultiLaurentMap, a: Sequence[complex],
                zprime: Sequence[complex]) -> np.ndarray:
    """
    sum over b_zero of z'^beta v_{beta,B}(a), in quotient coordinates of E / F_B.
    """
    zprime = np.asarray(zprime, dtype=complex)
    if np.any(zprime == 0):
        raise ValueError("Orbit parameters must be nonzero")
    projected = F.project(seq.space)
    keep = list(seq.space.complement_indices)
    out = np.zeros(len(keep), dtype=complex)
    for beta in seq.b_zero:
        weight = np.prod(zprime ** np.array(beta, dtype=int)) if beta else 1.0
        out += weight * projected.coefficient_at(beta, a)[keep]
    return out


def orbit_target(seq: LeadingSequence, F: MultiLaurentMap, alpha: Sequence[ExactScalar],
                 a: Optional[Sequence[ExactScalar]] = None) -> ExactVector:
    """b = sum over b_zero of alpha^beta v_{beta,B}(a), as an exact vector reduced modulo F_B."""
    a = list(a) if a is not None else [ZERO] * (F.q - F.l)
    projected = F.project(seq.space)
    total = ExactVector.zeros(F.ambient_dim)
    for beta in seq.b_zero:
        weight = ONE
        for x, b in zip(alpha, beta):
            weight = weight * (ExactScalar.coerce(x) ** b)
        total = total + projected.coefficient_exact(beta, a).scale(weight)
    return total


# ============================================================================
# GOOD DISCS
# ============================================================================

@dataclass
class DiscMap:
    """
    x -> (x^{m_1}(alpha_1 + x^{g_1}), ..., x^{m_l}(alpha_l + x^{g_l}), x^{g_{l+1}}, ..., x^{g_q}).
    """
    monomial_exponents: Tuple[int, ...]
    alpha: Tuple[ExactScalar, ...]
    perturbation_exponents: Tuple[int, ...]

    @property
    def l(self) -> int:
        return len(self.monomial_exponents)

    @property
    def q(self) -> int:
        return len(self.perturbation_exponents)

    def component(self, j: int) -> LaurentSeries:
        g = self.perturbation_exponents[j]
        if j < self.l:
            m = self.monomial_exponents[j]
            return LaurentSeries.from_dict({m: self.alpha[j], m + g: 1})
        return LaurentSeries.monomial(g)

    def evaluate(self, x: complex) -> np.ndarray:
        return np.array([self.component(j).evaluate(x) for j in range(self.q)], dtype=complex)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'monomial_exponents': list(self.monomial_exponents),
            'alpha': [scalar_to_json(a) for a in self.alpha],
            'perturbation_exponents': list(self.perturbation_exponents),
        }


@dataclass
class GoodDisc:
    """A holomorphic disc along which F_B is the pole space of F o phi."""
    gamma: Tuple[int, ...]
    M: int
    N0: int
    N: int
    alpha: Tuple[ExactScalar, ...]
    lam: Tuple[int, ...]
    b_lambda: List[Power]
    phi: DiscMap
    target: Optional[ExactVector] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'gamma': list(self.gamma),
            'M': self.M,
            'N0': self.N0,
            'N': self.N,
            'alpha': [scalar_to_json(a) for a in self.alpha],
            'lambda': list(self.lam),
            'b_lambda': [list(b) for b in self.b_lambda],
            'phi': self.phi.to_dict(),
            'target': None if self.target is None else self.target.to_json(),
        }


def _simplex(dim: int, bound: int) -> List[Power]:
    """Nonnegative integer vectors with |theta| <= bound, by degree then lexicographically."""
    points = [t for t in product(range(bound + 1), repeat=dim) if sum(t) <= bound]
    return sorted(points, key=lambda t: (sum(t), t))


def perturbation_coefficient(beta: Power, theta: Power, alpha: Sequence[ExactScalar]) -> ExactScalar:
    """Coefficient of z'^theta in (alpha + z')^beta."""
    value = ONE
    for b, t, a in zip(beta, theta, alpha):
        value = value * ExactScalar.coerce(generalized_binomial(b, t)) * a ** (b - t)
    return value


def power_separation(N: int, dim: int) -> Tuple[Tuple[int, ...], int]:
    """
    gamma in Z^dim_{>0} with gamma* <= gamma_j < (1 + 1/(N+1)) gamma*, so that
    beta -> gamma.beta is injective on |beta| <= N and gamma.beta < M = (N+1) gamma*
    exactly there. Smallest gamma*, then lexicographically least.
    """
    if dim == 0:
        return (), N + 1
    small = _simplex(dim, N)
    border = [t for t in _simplex(dim, N + 1) if sum(t) == N + 1]
    g_star = 1
    while True:
        upper = Fraction(N + 2, N + 1) * g_star
        values = [g for g in range(g_star, int(upper) + 1) if g < upper]
        M = (N + 1) * g_star
        for gamma in product(values, repeat=dim):
            if min(gamma) != g_star:
                continue
            degrees = [sum(g * t for g, t in zip(gamma, th)) for th in small]
            if len(set(degrees)) != len(degrees) or max(degrees) >= M:
                continue
            if any(sum(g * t for g, t in zip(gamma, th)) < M for th in border):
                continue
            return tuple(gamma), M
        g_star += 1


def good_disc(seq: LeadingSequence, F: MultiLaurentMap, alpha: Optional[Sequence] = None,
              n0_cap: int = N0_CAP) -> GoodDisc:
    """
    Build phi for a complete sequence.

    N0 is the least value for which the matrix (c_{beta,theta}) over
    beta in B_lambda, |theta| <= N0 has full row rank and the z'' Taylor
    coefficients up to degree N0 span each coefficient space.

    Raises:
        AlphaDegenerate: If some alpha_j is 0
        RankNotReached: If N0 would exceed n0_cap
        ValueError: If the sequence is not complete
    """
    if not seq.complete or seq.lam is None:
        raise ValueError("good_disc needs a complete sequence with its separating functional")
    l = F.l
    if alpha is None:
        alpha = [ONE] * l
    alpha = tuple(ExactScalar.coerce(a) for a in alpha)
    if len(alpha) != l:
        raise DimensionMismatch(f"alpha has {len(alpha)} entries for {l} singular variables")
    if any(not a for a in alpha):
        raise AlphaDegenerate(f"alpha {[str(a) for a in alpha]} has a zero entry")

    lam = seq.lam
    b_lambda = [b for b in F.support() if dot(lam, b) < 0]
    full_spans = {b: ComplexSubspace.span(list(F.coefficients(b).values()), F.ambient_dim)
                  for b in b_lambda}
    N0 = 0
    while True:
        columns = _simplex(l, N0)
        matrix = [[perturbation_coefficient(b, t, alpha) for t in columns] for b in b_lambda]
        rank_ok = rank(matrix, len(columns)) == len(b_lambda) if b_lambda else True
        spans_ok = all(
            ComplexSubspace.span([v for th, v in F.coefficients(b).items() if sum(th) <= N0],
                                 F.ambient_dim).dim == full_spans[b].dim
            for b in b_lambda
        )
        if rank_ok and spans_ok:
            break
        N0 += 1
        if N0 > n0_cap:
            raise RankNotReached(f"Rank condition not reached with N0 <= {n0_cap}")
    N = 2 * N0
    gamma, M = power_separation(N, F.q)
    phi = DiscMap(tuple(M * x for x in lam), alpha, gamma)
    target = orbit_target(seq, F, alpha)
    logger.info(f"Good disc: lambda={lam}, N0={N0}, gamma={gamma}, M={M}")
    return GoodDisc(gamma, M, N0, N, alpha, tuple(lam), b_lambda, phi, target)


def composition_cap(F: MultiLaurentMap, disc: GoodDisc) -> Optional[int]:
    """
    Lowest x-degree an unspecified term of F can reach after substitution;
    None when F is exact.
    """
    phi = disc.phi
    D = F.pole_bound
    m = phi.monomial_exponents
    caps = []
    if F.beta_truncation is not None and F.l:
        j_min = min(range(F.l), key=lambda j: m[j])
        low = m[j_min] * (F.beta_truncation + (F.l - 1) * D) - D * sum(x for j, x in enumerate(m) if j != j_min)
        caps.append(low)
    if F.theta_truncation is not None and F.q > F.l:
        g_min = min(phi.perturbation_exponents[F.l:])
        caps.append(-D * sum(m) + g_min * F.theta_truncation)
    return min(caps) if caps else None


def compose(F: MultiLaurentMap, disc: GoodDisc, out_truncation: int = 1) -> LaurentCurve:
    """
    f o phi as a one-variable Laurent curve known below x^T, where T is
    out_truncation capped by composition_cap.

    Raises:
        TruncationInsufficient: If the cap leaves the constant term unknown
    """
    phi = disc.phi
    cap = out_truncation
    limit = composition_cap(F, disc)
    if limit is not None and limit < cap:
        logger.warning(f"Composition truncation capped from {cap} to {limit} by the input truncations")
        cap = limit
    if cap < 1:
        raise TruncationInsufficient(f"Composed curve known only below x^{cap}")

    components = [phi.component(j) for j in range(phi.q)]
    valuations = [c.require_valuation() for c in components]
    out: Dict[int, List[ExactScalar]] = {}
    for (beta, theta), v in F.terms.items():
        exponents = list(beta) + list(theta)
        total_val = sum(e * val for e, val in zip(exponents, valuations))
        if total_val >= cap:
            continue
        series = LaurentSeries.constant(1)
        for e, comp, val in zip(exponents, components, valuations):
            if e == 0:
                continue
            series = series * comp.power(e, cap - (total_val - e * val))
        series = series.truncate(cap)
        for x_exp, c in series.coeffs:
            row = out.setdefault(x_exp, [ZERO] * F.ambient_dim)
            out[x_exp] = [r + c * w for r, w in zip(row, v.entries)]
    terms = {e: ExactVector(tuple(row)) for e, row in out.items()}
    return LaurentCurve(F.ambient_dim, terms, cap)


def verify_disc(seq: LeadingSequence, F: MultiLaurentMap, disc: GoodDisc,
                out_truncation: int = 1) -> Dict[str, Any]:
    """Check that F_B is the pole space of F o phi and that its constant term is b."""
    curve = compose(F, disc, out_truncation)
    try:
        s = stratify(curve)
        pole_space = s.pole_space
        constant = s.translation
    except NoPoles as err:
        pole_space = ComplexSubspace.zero(F.ambient_dim)
        constant = err.value
    space_ok = pole_space.includes(seq.space) and seq.space.includes(pole_space)
    target = disc.target if disc.target is not None else ExactVector.zeros(F.ambient_dim)
    constant_ok = seq.space.reduce(constant - target).is_zero()
    return {'pole_space_ok': space_ok, 'constant_ok': constant_ok, 'truncation': curve.truncation}


# ============================================================================
# COMPONENTS
# ============================================================================

@dataclass
class LimitComponent:
    """pi(C_B) + T_B for one complete sequence."""
    sequence: LeadingSequence
    torus: ClosedSubgroup
    translates: List[ClosedSubgroup] = field(default_factory=list)
    orbit_samples: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    orbit_coefficients: List[Dict[str, Any]] = field(default_factory=list)
    finite_c: bool = True
    heuristic: bool = False

    def bounded_part(self) -> Optional[Dict[str, Any]]:
        """
        Parametric description of pi(C_B): the powers of b_zero, their
        coefficients v_{beta,B}(a) on the quotient axes of E / F_B per grid
        value, and the reduced orbit samples. None when C_B is finite.
        """
        if self.finite_c:
            return None
        return {
            'powers': [list(b) for b in self.sequence.b_zero],
            'quotient_axes': list(self.sequence.space.complement_indices),
            'coefficients': self.orbit_coefficients,
            'orbit_sample_count': int(self.orbit_samples.shape[0]),
            'orbit_samples': self.orbit_samples,
        }

    def to_dict(self) -> Dict[str, Any]:
        return {
            'sequence': self.sequence.to_dict(),
            'torus': self.torus.to_dict(),
            'translates': [t.to_dict() for t in self.translates],
            'orbit_sample_count': int(self.orbit_samples.shape[0]),
            'bounded_part': self.bounded_part(),
            'finite_c': self.finite_c,
            'heuristic': self.heuristic,
        }


def _orbit_parameters(l: int, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    radii = np.exp(rng.uniform(-1.0, 1.0, size=(count, l)))
    angles = rng.uniform(0.0, 2 * np.pi, size=(count, l))
    return radii * np.exp(1j * angles)


def limit_component(seq: LeadingSequence, F: MultiLaurentMap, gamma: Lattice,
                    grid: Optional[Sequence[Sequence]] = None, orbit_count: int = 64,
                    seed: int = 0, height: int = DEFAULT_HEIGHT) -> LimitComponent:
    """
    T_B = closure of pi(F_B) exactly; pi(C_B) through its orbit parametrization.

    When b_zero lies in {0} the set C_B is one point per grid value a and
    each translate pi(v_{0,B}(a)) + T_B is returned as a subgroup. Otherwise
    C_B is sampled at orbit_count parameters z' per grid value.
    """
    if grid is None:
        grid = [[ZERO] * (F.q - F.l)]
    torus = subgroup_closure(seq.space.realify(), ExactVector.zeros(F.ambient_dim), gamma, height)
    heuristic = not gamma.is_compact
    if heuristic:
        logger.warning("T is not compact: the component description is heuristic")
    finite_c = all(not any(b) for b in seq.b_zero)
    component = LimitComponent(seq, torus, finite_c=finite_c, heuristic=heuristic)
    projected = F.project(seq.space)
    if finite_c:
        for a in grid:
            exact_a = [ExactScalar.coerce(x) for x in a]
            base = projected.coefficient_exact(tuple([0] * F.l), exact_a) if seq.b_zero else \
                ExactVector.zeros(F.ambient_dim)
            translate = subgroup_closure(seq.space.realify(), base, gamma, height)
            if not any(t.same_set(translate) for t in component.translates):
                component.translates.append(translate)
        return component

    keep = list(seq.space.complement_indices)
    samples = []
    params = _orbit_parameters(F.l, orbit_count, seed)
    for a in grid:
        numeric_a = [complex(ExactScalar.coerce(x).to_complex())
                     if not isinstance(x, complex) else x for x in a]
        if any(isinstance(x, complex) for x in a):
            values = {' '.join(map(str, b)): [[v.real, v.imag] for v in projected.coefficient_at(b, numeric_a)[keep]]
                      for b in seq.b_zero}
            point = [[x.real, x.imag] for x in numeric_a]
        else:
            exact_a = [ExactScalar.coerce(x) for x in a]
            values = {' '.join(map(str, b)): seq.space.quotient_project(projected.coefficient_exact(b, exact_a)).to_json()
                      for b in seq.b_zero}
            point = [scalar_to_json(x) for x in exact_a]
        component.orbit_coefficients.append({'a': point, 'v': values})
        for zprime in params:
            point = np.zeros(F.ambient_dim, dtype=complex)
            point[keep] = orbit_point(seq, F, numeric_a, zprime)
            samples.append(point)
    compact, transverse = gamma.reduce_many(np.array(samples))
    component.orbit_samples = np.hstack([compact, transverse])
    return component


def decompose(F: MultiLaurentMap, gamma: Lattice, grid: Optional[Sequence[Sequence]] = None,
              depth_bound: Optional[int] = None, height: int = DEFAULT_HEIGHT) -> LimitSetReport:
    """
    The union of pi(C_B) + T_B over all complete sequences B.

    Components are deduplicated by set equality of their tori and translates.
    """
    if gamma.ambient_dim != F.ambient_dim:
        raise DimensionMismatch(f"Map into C^{F.ambient_dim} against a lattice in C^{gamma.ambient_dim}")
    enumeration = enumerate_complete_sequences(F, depth_bound)
    report = LimitSetReport(status=LimitStatus.COMPONENTS.value)
    report.details['enumeration'] = {
        'depth_exceeded': enumeration.depth_exceeded,
        'nodes': enumeration.nodes,
        'pruned': enumeration.pruned,
    }
    if not gamma.is_compact:
        report.notes.append("T is not compact: components are heuristic")
    seen: List[ClosedSubgroup] = []
    for seq in enumeration.sequences:
        component = limit_component(seq, F, gamma, grid, height=height)
        pieces = component.translates if component.finite_c else [component.torus]
        for piece in pieces:
            # a torus with a parametric C is never merged with a plain translate
            if component.finite_c:
                if any(piece.same_set(known) for known in seen):
                    continue
                seen.append(piece)
            report.components.append(ComponentRecord(
                subgroup=piece.to_dict(),
                provenance=Provenance.SEQUENCE.value,
                sources=[[list(b) for b in seq.betas]],
                compact=piece.is_compact,
                heuristic=component.heuristic,
                certificates={
                    'lambda': list(seq.lam) if seq.lam else None,
                    'b_zero': [list(b) for b in seq.b_zero],
                    'cones': seq.certificate,
                },
                bounded_part=component.bounded_part(),
            ))
    logger.info(f"Decomposition has {len(report.components)} components")
    return report


def second_generation(component: LimitComponent, reduced_map: MultiLaurentMap, gamma: Lattice,
                      grid: Optional[Sequence[Sequence]] = None,
                      depth_bound: Optional[int] = None) -> LimitSetReport:
    """
    Decomposition of user-supplied Laurent data for D_B, attached to the
    component it refines.
    """
    report = decompose(reduced_map, gamma, grid, depth_bound)
    report.details['parent'] = [list(b) for b in component.sequence.betas]
    return report
