"""
Rational saturation of real subspaces inside the real span of a lattice.

The saturation of S is the smallest subspace containing S that is spanned by
vectors with rational coordinates in the lattice frame. It is the annihilator
of all rational functionals that vanish on S, so the work is finding integer
relations among the frame coordinates of S's rows.

HOW IT WORKS:
1. Express each row of S in frame coordinates (its entries at the pivots of
   the frame's echelon form)
2. Exact rows give their relations by exact elimination
3. Each ball row restricts the relation space further: integer relations
   among the current relation functionals evaluated on the row are found by
   PSLQ, one at a time, eliminating one coordinate after each hit
4. Every relation is re-checked in ball arithmetic before it is accepted
5. The saturation is the common kernel of the relations, mapped back through
   the frame

Relations are searched up to a coefficient height (default 10**6). Inputs
whose balls are wider than 2^(-P/2) are rejected with CertificationFailure.
"""

from fractions import Fraction
from math import lcm
from typing import List, Optional, Sequence
import logging

import mpmath as mp

from ..exceptions import CertificationFailure, DimensionMismatch
from ..schema import Membership
from .scalars import BallScalar, DEFAULT_BITS
from .subspaces import RealSubspace, nullspace

logger = logging.getLogger(__name__)

DEFAULT_HEIGHT = 10 ** 6
PSLQ_MAXSTEPS = 10 ** 5


def _integer_row(row: Sequence[Fraction]) -> List[int]:
    denominator = lcm(*[Fraction(x).denominator for x in row]) if row else 1
    return [int(Fraction(x) * denominator) for x in row]


def _ball_dot(coeffs: Sequence[int], values: Sequence, bits: int) -> BallScalar:
    total = BallScalar.from_exact(0, bits)
    for c, v in zip(coeffs, values):
        if c:
            total = total + v * c
    return total


def _bits_of(values: Sequence) -> int:
    bits = [v.bits for v in values if isinstance(v, BallScalar)]
    return min(bits) if bits else DEFAULT_BITS


def integer_relations(values: Sequence, height: int = DEFAULT_HEIGHT) -> List[List[int]]:
    """
    Basis of the integer relations m . values = 0 among real balls.

    Near-zero entries give the unit relation; otherwise mp.pslq proposes a
    relation, one coordinate it touches is eliminated and the search recurses
    on the rest.

    Raises:
        CertificationFailure: If an input ball is too wide for reconstruction
    """
    values = list(values)
    k = len(values)
    if k == 0:
        return []
    bits = _bits_of(values)
    for v in values:
        if isinstance(v, BallScalar) and v.rad > mp.ldexp(1, -(bits // 2)):
            raise CertificationFailure(
                f"Ball radius {mp.nstr(v.rad, 3)} too wide for integer relations at {bits} bits"
            )

    tol = mp.ldexp(1, -(3 * bits) // 4)
    relations: List[List[int]] = []
    active = list(range(k))

    def mid(v):
        return v.mid_re if isinstance(v, BallScalar) else mp.mpf(Fraction(v).numerator) / Fraction(v).denominator

    with mp.workprec(bits):
        while active:
            zero_index = None
            for j in active:
                v = values[j]
                if isinstance(v, BallScalar):
                    if v.contains_zero() or abs(v.mid_re) < tol:
                        zero_index = j
                        break
                elif Fraction(v) == 0:
                    zero_index = j
                    break
            if zero_index is not None:
                relations.append([int(i == zero_index) for i in range(k)])
                active.remove(zero_index)
                continue
            if len(active) < 2:
                break
            candidate = mp.pslq([mid(values[j]) for j in active], tol=tol,
                                maxcoeff=height, maxsteps=PSLQ_MAXSTEPS)
            if candidate is None:
                break
            full = [0] * k
            for j, c in zip(active, candidate):
                full[j] = int(c)
            check = _ball_dot(full, [values[j] for j in range(k)], bits)
            if not check.contains_zero():
                logger.debug(f"PSLQ candidate {full} rejected by ball check")
                break
            relations.append(full)
            eliminated = max(j for j in active if full[j] != 0)
            active.remove(eliminated)
    logger.debug(f"Found {len(relations)} integer relations among {k} values")
    return relations


def _frame_coordinates(vec: Sequence, frame: RealSubspace) -> list:
    return [vec[p] for p in frame.exact_pivots]


def rational_saturation(S: RealSubspace, frame: RealSubspace,
                        height: int = DEFAULT_HEIGHT) -> RealSubspace:
    """
    Smallest frame-rational subspace containing S.

    Args:
        S: Subspace inside span(frame), exact or with ball rows
        frame: Exact real span of the lattice (rational rows)
        height: Coefficient bound of the integer relation search

    Returns:
        An exact RealSubspace; S itself when S has no ball rows

    Raises:
        CertificationFailure: If ball entries are too imprecise
        DimensionMismatch: If S does not live in frame's ambient space
    """
    if S.ambient_dim != frame.ambient_dim:
        raise DimensionMismatch(
            f"Subspace in R^{S.ambient_dim} against a frame in R^{frame.ambient_dim}"
        )
    if not frame.is_exact:
        raise TypeError("The lattice frame must be exact")
    if S.is_exact:
        return S
    r = frame.dim
    for row in S.rows():
        if frame.contains(row) == Membership.OUT:
            raise DimensionMismatch("Subspace is not inside the span of the frame")

    # Relation space so far, as rational functionals on frame coordinates.
    exact_coords = [_frame_coordinates(row, frame) for row in S.exact_rows]
    if exact_coords:
        relation_basis = [_integer_row(m) for m in nullspace(exact_coords, r)]
    else:
        relation_basis = [[int(i == j) for i in range(r)] for j in range(r)]

    for row in S.ball_rows:
        if not relation_basis:
            break
        coords = _frame_coordinates(row, frame)
        bits = _bits_of(coords)
        evaluated = [_ball_dot(m, coords, bits) for m in relation_basis]
        combos = integer_relations([e.real_part() for e in evaluated], height)
        relation_basis = [
            [sum(c * m[i] for c, m in zip(combo, relation_basis)) for i in range(r)]
            for combo in combos
        ]

    if relation_basis:
        kernel = nullspace([[Fraction(x) for x in m] for m in relation_basis], r)
    else:
        kernel = [[Fraction(int(i == j)) for i in range(r)] for j in range(r)]

    vectors = []
    for y in kernel:
        vec = [Fraction(0)] * frame.ambient_dim
        for c, frame_row in zip(y, frame.exact_rows):
            if c:
                vec = [a + c * b for a, b in zip(vec, frame_row)]
        vectors.append(vec)
    saturated = RealSubspace.span(vectors, frame.ambient_dim)
    logger.debug(f"Saturated a {S.dim}-dim subspace to dimension {saturated.dim}")
    return saturated


def is_saturated(S: RealSubspace, frame: RealSubspace) -> Optional[bool]:
    """Fixed-point test; exact subspaces inside the frame are saturated."""
    if not S.is_exact:
        return None
    return all(frame.contains(row) == Membership.IN for row in S.exact_rows)
