"""
Exact rational polyhedral cones in Q^l.

Cones are stored in both descriptions:
    V: lineality basis + extreme rays   (cone = span(lineality) + cone(rays))
    H: facet normals a with a . x >= 0  (equalities appear as a and -a)

Conversion in both directions uses one exact double-description routine
(H -> V); the V -> H direction runs it on the dual cone. Dimensions here are
small (the number of singular variables), so no attempt is made to control
combinatorial growth beyond dropping non-extreme rays after every step.

EXAMPLE USAGE:
```python
sigma_minus = build_cone([(-1, 2)], include_orthant="nonpos")
sigma_minus.is_salient       # True
separating_lambda([(-1, 2)], [], [(1, 0), (0, 1)])   # (3, 1)
```
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce as fold
from math import gcd, lcm
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple
import logging

from .exceptions import DimensionMismatch, Infeasible
from .linalg.subspaces import rank, rref

logger = logging.getLogger(__name__)

Vector = Tuple[Fraction, ...]

ORTHANTS = ('none', 'nonneg', 'nonpos')


def _vec(values: Sequence) -> Vector:
    return tuple(Fraction(v) for v in values)


def dot(a: Sequence, b: Sequence) -> Fraction:
    return sum((Fraction(x) * y for x, y in zip(a, b)), Fraction(0))


def primitive(v: Sequence) -> Vector:
    """Positive multiple of v with coprime integer entries."""
    v = _vec(v)
    if not any(v):
        return v
    denominator = lcm(*[x.denominator for x in v])
    ints = [int(x * denominator) for x in v]
    divisor = fold(gcd, [abs(x) for x in ints if x])
    return tuple(Fraction(x // divisor) for x in ints)


def _project_off(v: Vector, lineality: List[Vector]) -> Vector:
    """Component of v orthogonal to span(lineality)."""
    if not lineality:
        return v
    gram = [[dot(a, b) for b in lineality] for a in lineality]
    rhs = [dot(a, v) for a in lineality]
    reduced, _ = rref([row + [b] for row, b in zip(gram, rhs)], len(lineality) + 1)
    coeffs = [row[-1] for row in reduced]
    out = list(v)
    for c, u in zip(coeffs, lineality):
        out = [x - c * y for x, y in zip(out, u)]
    return tuple(out)


def double_description(inequalities: Sequence[Sequence], dim: int) -> Tuple[List[Vector], List[Vector]]:
    """
    Generators of {x in Q^dim : a . x >= 0 for every a}.

    Returns:
        (lineality basis, extreme rays); rays are primitive integer vectors
        orthogonal to the lineality space, sorted
    """
    rows = [_vec(a) for a in inequalities]
    for a in rows:
        if len(a) != dim:
            raise DimensionMismatch(f"Inequality of length {len(a)} in Q^{dim}")
    lineality: List[Vector] = [tuple(Fraction(int(i == j)) for i in range(dim)) for j in range(dim)]
    rays: List[Vector] = []
    processed: List[Vector] = []
    for a in rows:
        if not any(a):
            continue
        processed.append(a)
        moving = next((u for u in lineality if dot(a, u) != 0), None)
        if moving is not None:
            if dot(a, moving) < 0:
                moving = tuple(-x for x in moving)
            am = dot(a, moving)
            lineality = [
                tuple(x - dot(a, u) / am * y for x, y in zip(u, moving))
                for u in lineality if u is not moving and u != tuple(-x for x in moving)
            ]
            lineality = _basis(lineality, dim)
            rays = [tuple(x - dot(a, r) / am * y for x, y in zip(r, moving)) for r in rays]
            rays.append(moving)
        else:
            positive = [r for r in rays if dot(a, r) > 0]
            zero = [r for r in rays if dot(a, r) == 0]
            negative = [r for r in rays if dot(a, r) < 0]
            combined = [
                tuple(dot(a, p) * x - dot(a, n) * y for x, y in zip(n, p))
                for p in positive for n in negative
            ]
            rays = positive + zero + combined
        rays = _extreme_rays(rays, lineality, processed, dim)
    return lineality, rays


def _basis(vectors: List[Vector], dim: int) -> List[Vector]:
    reduced, _ = rref([list(v) for v in vectors], dim)
    return [tuple(r) for r in reduced]


def _extreme_rays(rays: List[Vector], lineality: List[Vector], processed: List[Vector],
                  dim: int) -> List[Vector]:
    """Keep one primitive representative per extreme ray (mod lineality)."""
    full_rank = rank([list(a) for a in processed], dim) if processed else 0
    seen = set()
    out = []
    for r in rays:
        r = primitive(_project_off(r, lineality))
        if not any(r) or r in seen:
            continue
        tight = [list(a) for a in processed if dot(a, r) == 0]
        if full_rank - (rank(tight, dim) if tight else 0) != 1:
            continue
        seen.add(r)
        out.append(r)
    return sorted(out)


@dataclass
class RationalCone:
    """A closed convex rational cone with both descriptions."""
    dim: int
    generators: List[Vector]
    lineality: List[Vector] = field(default_factory=list)
    rays: List[Vector] = field(default_factory=list)
    facets: List[Vector] = field(default_factory=list)

    @property
    def is_salient(self) -> bool:
        return not self.lineality

    @property
    def zero_face(self) -> List[Vector]:
        """Smallest face containing 0: the lineality space (basis)."""
        return list(self.lineality)

    @property
    def is_zero(self) -> bool:
        return not self.lineality and not self.rays

    def contains(self, x: Sequence) -> bool:
        return all(dot(a, x) >= 0 for a in self.facets)

    def includes(self, other: "RationalCone") -> bool:
        vectors = list(other.rays) + list(other.lineality) + [tuple(-v for v in u) for u in other.lineality]
        return all(self.contains(v) for v in vectors)

    def negate(self) -> "RationalCone":
        return cone_from_generators([tuple(-x for x in g) for g in self.generators], self.dim)

    def relative_interior_point(self) -> Vector:
        point = [Fraction(0)] * self.dim
        for r in self.rays:
            point = [a + b for a, b in zip(point, r)]
        return tuple(point)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'dim': self.dim,
            'generators': [[str(x) for x in g] for g in self.generators],
            'rays': [[str(x) for x in r] for r in self.rays],
            'lineality': [[str(x) for x in u] for u in self.lineality],
            'facets': [[str(x) for x in a] for a in self.facets],
            'salient': self.is_salient,
        }


def cone_from_generators(generators: Sequence[Sequence], dim: int) -> RationalCone:
    """V -> H via the dual cone, then H -> V to get canonical rays and lineality."""
    gens = [_vec(g) for g in generators if any(Fraction(x) for x in g)]
    for g in gens:
        if len(g) != dim:
            raise DimensionMismatch(f"Generator of length {len(g)} in Q^{dim}")
    dual_lineality, dual_rays = double_description(gens, dim)
    facets = list(dual_rays) + list(dual_lineality) + [tuple(-x for x in u) for u in dual_lineality]
    lineality, rays = double_description(facets, dim)
    return RationalCone(dim, gens, lineality, rays, sorted(set(primitive(a) for a in facets)))


def cone_from_facets(facets: Sequence[Sequence], dim: int) -> RationalCone:
    lineality, rays = double_description(facets, dim)
    gens = list(rays) + list(lineality) + [tuple(-x for x in u) for u in lineality]
    return RationalCone(dim, gens, lineality, rays, [primitive(a) for a in facets if any(a)])


def orthant_generators(dim: int, sign: int) -> List[Vector]:
    return [tuple(Fraction(sign * int(i == j)) for i in range(dim)) for j in range(dim)]


def build_cone(generators: Sequence[Sequence], include_orthant: str = 'none',
               dim: Optional[int] = None) -> RationalCone:
    """
    Cone spanned by the generators plus optionally an orthant.

    Args:
        generators: Vectors of Q^l
        include_orthant: "none", "nonneg" or "nonpos"
        dim: l, needed when generators is empty

    Raises:
        ValueError: For an unknown orthant
    """
    if include_orthant not in ORTHANTS:
        raise ValueError(f"Unknown orthant {include_orthant!r}; expected one of {ORTHANTS}")
    gens = [_vec(g) for g in generators]
    if dim is None:
        if not gens:
            raise DimensionMismatch("Dimension needed for a cone without generators")
        dim = len(gens[0])
    if include_orthant == 'nonneg':
        gens = gens + orthant_generators(dim, 1)
    elif include_orthant == 'nonpos':
        gens = gens + orthant_generators(dim, -1)
    return cone_from_generators(gens, dim)


# ============================================================================
# INTERSECTIONS AND SEPARATION
# ============================================================================

@dataclass
class IntersectionCertificate:
    """Outcome of a trivial-intersection test."""
    trivial: bool
    separator: Optional[Vector] = None  # positive on C1 minus 0, negative on C2 minus 0
    witness: Optional[Vector] = None  # common nonzero vector when not trivial
    lineality: Optional[Vector] = None  # line of a cone that rules out a strict separator
    weak_separator: Optional[Vector] = None  # >= 0 on C1, <= 0 on C2

    def __bool__(self) -> bool:
        return self.trivial

    def to_dict(self) -> Dict[str, Any]:
        return {
            'trivial': self.trivial,
            'separator': None if self.separator is None else [str(x) for x in self.separator],
            'witness': None if self.witness is None else [str(x) for x in self.witness],
            'lineality': None if self.lineality is None else [str(x) for x in self.lineality],
            'weak_separator': None if self.weak_separator is None else [str(x) for x in self.weak_separator],
        }


def _signed_generators(cone: RationalCone) -> List[Vector]:
    return list(cone.rays) + list(cone.lineality) + [tuple(-x for x in u) for u in cone.lineality]


def verify_separator(separator: Sequence, c1: RationalCone, c2: RationalCone) -> bool:
    return (all(dot(separator, g) > 0 for g in _signed_generators(c1))
            and all(dot(separator, g) < 0 for g in _signed_generators(c2)))


def intersect_trivially(c1: RationalCone, c2: RationalCone) -> IntersectionCertificate:
    """
    Decide C1 n C2 = {0}.

    Returns:
        A certificate: trivial with a strictly separating functional when one
        exists (both cones salient), trivial with the blocking line of a cone
        and a weak separator otherwise, or not trivial with a common nonzero ray
    """
    if c1.dim != c2.dim:
        raise DimensionMismatch(f"Cones in Q^{c1.dim} and Q^{c2.dim}")
    dim = c1.dim
    lineality, rays = double_description(list(c1.facets) + list(c2.facets), dim)
    if lineality or rays:
        witness = lineality[0] if lineality else rays[0]
        logger.debug(f"Cones meet along {witness}")
        return IntersectionCertificate(False, witness=witness)

    # functionals >= 0 on C1 and <= 0 on C2; a relative interior point separates strictly
    constraints = _signed_generators(c1) + [tuple(-x for x in g) for g in _signed_generators(c2)]
    dual_lineality, dual_rays = double_description(constraints, dim)
    candidate = [Fraction(0)] * dim
    for r in dual_rays:
        candidate = [a + b for a, b in zip(candidate, r)]
    candidate = primitive(candidate)
    if any(candidate) and verify_separator(candidate, c1, c2):
        return IntersectionCertificate(True, separator=candidate)
    lines = list(c1.lineality) + list(c2.lineality)
    blocking = lines[0] if lines else None
    weak = tuple(candidate) if any(candidate) else None
    logger.debug(f"Cones meet only at 0; the line {blocking} rules out a strict separator")
    return IntersectionCertificate(True, lineality=blocking, weak_separator=weak)


def verify_certificate(cert: IntersectionCertificate, c1: RationalCone, c2: RationalCone) -> bool:
    """Re-check an intersection certificate in exact arithmetic."""
    if not cert.trivial:
        return (cert.witness is not None and any(cert.witness)
                and c1.contains(cert.witness) and c2.contains(cert.witness))
    if cert.separator is not None:
        return verify_separator(cert.separator, c1, c2)
    if cert.lineality is None or not any(cert.lineality):
        return False
    negated = tuple(-x for x in cert.lineality)
    if not any(c.contains(cert.lineality) and c.contains(negated) for c in (c1, c2)):
        return False
    if cert.weak_separator is not None:
        if not (all(dot(cert.weak_separator, g) >= 0 for g in _signed_generators(c1))
                and all(dot(cert.weak_separator, g) <= 0 for g in _signed_generators(c2))):
            return False
    lineality, rays = double_description(list(c1.facets) + list(c2.facets), c1.dim)
    return not lineality and not rays


def _compositions(total: int, parts: int) -> Iterator[Tuple[int, ...]]:
    """Positive integer vectors with the given l1 norm, in lexicographic order."""
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _sign_pattern_holds(lam: Sequence, b_minus, b_zero, b_plus) -> bool:
    return (all(dot(lam, b) < 0 for b in b_minus)
            and all(dot(lam, b) == 0 for b in b_zero)
            and all(dot(lam, b) > 0 for b in b_plus))


def separating_lambda(b_minus: Sequence[Sequence], b_zero: Sequence[Sequence],
                      b_plus: Sequence[Sequence], dim: Optional[int] = None) -> Tuple[int, ...]:
    """
    Smallest strictly positive integer functional with the sign pattern
    lam.b < 0 on b_minus, = 0 on b_zero, > 0 on b_plus.

    Minimal l1 norm first, then lexicographically least.

    Raises:
        Infeasible: If no such functional exists
    """
    all_vectors = [_vec(b) for b in list(b_minus) + list(b_zero) + list(b_plus)]
    if dim is None:
        if not all_vectors:
            raise DimensionMismatch("Dimension needed when every power set is empty")
        dim = len(all_vectors[0])
    b_minus = [_vec(b) for b in b_minus]
    b_zero = [_vec(b) for b in b_zero]
    b_plus = [_vec(b) for b in b_plus]

    inequalities = (orthant_generators(dim, 1)
                    + [tuple(-x for x in b) for b in b_minus]
                    + b_zero + [tuple(-x for x in b) for b in b_zero]
                    + b_plus)
    lineality, rays = double_description(inequalities, dim)
    point = [Fraction(0)] * dim
    for r in rays:
        point = [a + b for a, b in zip(point, r)]
    point = primitive(point)
    if not any(point) or any(x <= 0 for x in point) or not _sign_pattern_holds(point, b_minus, b_zero, b_plus):
        raise Infeasible(
            f"No positive functional with the requested sign pattern "
            f"({len(b_minus)} negative, {len(b_zero)} zero, {len(b_plus)} positive)"
        )
    bound = int(sum(point))
    for total in range(dim, bound + 1):
        for lam in _compositions(total, dim):
            if _sign_pattern_holds(lam, b_minus, b_zero, b_plus):
                logger.debug(f"Separating functional {lam} with l1 norm {total}")
                return lam
    return tuple(int(x) for x in point)
