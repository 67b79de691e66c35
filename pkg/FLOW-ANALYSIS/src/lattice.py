"""
Discrete subgroups of E = C^n and the quotient group T = E / Gamma.

WHY THIS EXISTS:
Every limit set this package reports is a translated closed real subgroup of
T. This module fixes one coordinate system for T and provides the closure
operation that turns "the image of an affine subspace" into such a subgroup.

COORDINATES:
- Realified points x in R^{2n} are written x = c . G + t . E_comp where G holds
  the realified generators and E_comp the unit vectors on the non-pivot axes
  of the echelonized generator matrix (a fixed rational complement of Gamma_R)
- c are the compact coordinates (taken mod 1), t the transverse coordinates
- The split is computed once, exactly, by inverting the square matrix [G; E_comp]

WHAT IT PROVIDES:
- Lattice: validation (rank over Q), reduction, Gamma_R membership, distances
- TorusPoint: a point of T in split coordinates
- ClosedSubgroup: pi(base + D) with D saturated, plus sampling-oracle helpers
- subgroup_closure: closure of pi(t + F) = pi(t + F + sat(F n Gamma_R))
- dual_annihilator: integer characters constant on a subgroup

EXAMPLE USAGE:
```python
gamma = Lattice.from_dict({"n": 1, "generators": [["1"], ["i"]]})
gamma.reduce(ExactVector.parse(["27/10+16/5 i"]))   # compact (7/10, 1/5)
```
"""

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import floor
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union
import logging

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import DegenerateLattice, DimensionMismatch
from .linalg.scalars import BallScalar
from .linalg.subspaces import (
    ExactVector, RealSubspace, is_zero_at_height, nullspace, realify, rref,
)
from .linalg.saturation import DEFAULT_HEIGHT, rational_saturation
from .schema import Membership

logger = logging.getLogger(__name__)

DISTANCE_SHELL = 1
POINT_CHUNK = 4096


def _to_float(x) -> float:
    if isinstance(x, BallScalar):
        return float(x.mid_re)
    return float(x)


def _frac_mod1(x: Fraction) -> Fraction:
    return x - floor(x)


@dataclass(frozen=True)
class TorusPoint:
    """A point of T: compact coordinates in [0,1) and transverse coordinates."""
    compact: Tuple[Any, ...]
    transverse: Tuple[Any, ...] = ()

    @property
    def is_exact(self) -> bool:
        return all(isinstance(x, (int, Fraction)) for x in self.compact + self.transverse)

    def compact_array(self) -> np.ndarray:
        return np.array([float(x) for x in self.compact], dtype=float)

    def transverse_array(self) -> np.ndarray:
        return np.array([float(x) for x in self.transverse], dtype=float)

    def to_dict(self) -> Dict[str, Any]:
        return {'compact': list(self.compact), 'transverse': list(self.transverse)}


class Lattice:
    """
    A discrete subgroup Gamma of C^n given by r generators.

    Args:
        generators: Gaussian-rational vectors, linearly independent over R
            once realified
        ambient_dim: n; taken from the generators when omitted

    Raises:
        DegenerateLattice: If the realified generators are dependent over Q
        DimensionMismatch: If generators disagree in length
    """

    def __init__(self, generators: Sequence[ExactVector], ambient_dim: Optional[int] = None):
        generators = list(generators)
        if ambient_dim is None:
            if not generators:
                raise DimensionMismatch("Ambient dimension needed for the zero lattice")
            ambient_dim = generators[0].dim
        for g in generators:
            if g.dim != ambient_dim:
                raise DimensionMismatch(f"Generator of dimension {g.dim} in C^{ambient_dim}")
            if not g.is_exact:
                raise DegenerateLattice("Lattice generators must be Gaussian rational")
        self.ambient_dim = ambient_dim
        self.generators = generators
        self.rank = len(generators)
        self.real_dim = 2 * ambient_dim

        self.generator_rows = [list(realify(g)) for g in generators]
        reduced, pivots = rref(self.generator_rows, self.real_dim)
        if len(pivots) != self.rank:
            raise DegenerateLattice(
                f"{self.rank} generators span only a rank-{len(pivots)} subspace over Q"
            )
        self.gamma_r = RealSubspace(self.real_dim, tuple(tuple(r) for r in reduced), tuple(pivots))
        self.complement_axes = tuple(j for j in range(self.real_dim) if j not in pivots)

        basis = self.generator_rows + [
            [Fraction(int(i == j)) for i in range(self.real_dim)] for j in self.complement_axes
        ]
        self.basis_inverse = self._invert(basis)
        self._basis = np.array([[float(x) for x in row] for row in basis], dtype=float)
        self._inverse = np.array([[float(x) for x in row] for row in self.basis_inverse], dtype=float)
        logger.debug(f"Lattice of rank {self.rank} in C^{ambient_dim}; complement axes {self.complement_axes}")

    def _invert(self, basis: List[List[Fraction]]) -> List[List[Fraction]]:
        # Row-vector convention: coords = x . inverse, so inverse = basis^{-1}.
        m = self.real_dim
        augmented = [row + [Fraction(int(i == j)) for i in range(m)] for j, row in enumerate(basis)]
        reduced, pivots = rref(augmented, 2 * m)
        return [row[m:] for row in reduced]

    # --- construction from data --------------------------------------------

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Lattice":
        """Build from {"n": ..., "generators": [[scalar strings]]}."""
        generators = [ExactVector.parse(g) for g in data.get('generators', [])]
        return cls(generators, data.get('n'))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'n': self.ambient_dim,
            'generators': [g.to_json() for g in self.generators],
            'rank': self.rank,
        }

    @property
    def is_compact(self) -> bool:
        """T is a compact complex torus."""
        return self.rank == self.real_dim

    @property
    def transverse_dim(self) -> int:
        return len(self.complement_axes)

    @property
    def generator_matrix(self) -> np.ndarray:
        """Realified generators as float rows."""
        return self._basis[: self.rank]

    @property
    def complement_matrix(self) -> np.ndarray:
        return self._basis[self.rank:]

    # --- coordinates --------------------------------------------------------

    def split(self, x: Sequence) -> Tuple[list, list]:
        """Compact and transverse coordinates (not reduced) of a realified point."""
        if len(x) != self.real_dim:
            raise DimensionMismatch(f"Point in R^{len(x)} against a lattice in R^{self.real_dim}")
        coords = [sum((xi * row[j] for xi, row in zip(x, self.basis_inverse) if xi), Fraction(0))
                  for j in range(self.real_dim)]
        return coords[: self.rank], coords[self.rank:]

    def realify_point(self, p) -> Union[list, np.ndarray]:
        if isinstance(p, ExactVector):
            if p.is_exact:
                return list(realify(p))
            return np.array([_to_float(x) for x in realify(p)], dtype=float)
        arr = np.asarray(p)
        if np.iscomplexobj(arr) or arr.shape[-1] == self.ambient_dim:
            arr = arr.astype(complex)
            return np.stack([arr.real, arr.imag], axis=-1).reshape(arr.shape[:-1] + (self.real_dim,))
        return arr.astype(float)

    def reduce(self, p) -> TorusPoint:
        """
        Project a point of E to T.

        Exact inputs give exact Fraction coordinates; anything else gives floats.
        """
        x = self.realify_point(p)
        if isinstance(x, list):
            return self.reduce_exact(x)
        compact, transverse = self.reduce_many(x.reshape(1, -1), realified=True)
        return TorusPoint(tuple(float(c) for c in compact[0]), tuple(float(t) for t in transverse[0]))

    def reduce_exact(self, x: Sequence[Fraction]) -> TorusPoint:
        compact, transverse = self.split(list(x))
        return TorusPoint(tuple(_frac_mod1(c) for c in compact), tuple(transverse))

    def reduce_many(self, points: np.ndarray, realified: bool = False) -> Tuple[np.ndarray, np.ndarray]:
        """
        Vectorized reduction of many points.

        Args:
            points: (N, n) complex array, or (N, 2n) real array with realified=True

        Returns:
            (compact (N, r) in [0,1), transverse (N, 2n - r))
        """
        x = np.asarray(points, dtype=float) if realified else self.realify_point(points)
        coords = x @ self._inverse
        compact = np.mod(coords[:, : self.rank], 1.0)
        compact[compact >= 1.0] = 0.0
        return compact, coords[:, self.rank:]

    def embed(self, compact: np.ndarray, transverse: np.ndarray) -> np.ndarray:
        """Realified representatives c . G + t . E_comp of split coordinates."""
        compact = np.atleast_2d(np.asarray(compact, dtype=float))
        transverse = np.asarray(transverse, dtype=float).reshape(compact.shape[0], -1)
        return compact @ self.generator_matrix + transverse @ self.complement_matrix

    def shell_offsets(self, radius: int = DISTANCE_SHELL) -> np.ndarray:
        """Lattice vectors k . G for k in {-radius..radius}^r."""
        ks = np.array(list(product(range(-radius, radius + 1), repeat=self.rank)), dtype=float)
        if self.rank == 0:
            return np.zeros((1, self.real_dim))
        return ks @ self.generator_matrix

    # --- Gamma_R ------------------------------------------------------------

    def in_gamma_r(self, v, height: Optional[int] = None) -> Membership:
        """Three-valued membership of a vector (ExactVector, possibly with balls) in Gamma_R."""
        if isinstance(v, ExactVector):
            v = realify(v)
        return self.gamma_r.contains(v, height)

    def intersect_gamma_r(self, F: RealSubspace, height: int = DEFAULT_HEIGHT) -> RealSubspace:
        """
        F n Gamma_R.

        Exact subspaces are intersected exactly. For ball rows the combinations
        whose transverse part vanishes are found by elimination in ball
        arithmetic.
        """
        if F.ambient_dim != self.real_dim:
            raise DimensionMismatch(f"Subspace in R^{F.ambient_dim} against R^{self.real_dim}")
        if self.is_compact:
            return F
        if F.is_exact:
            return F.intersect(self.gamma_r)
        rows = F.rows()
        transverse = []
        for row in rows:
            residual = self.gamma_r.residual(row)
            transverse.append([residual[j] for j in self.complement_axes])
        # left kernel of the transverse parts: columns are the rows of F
        system = [[transverse[i][j] for i in range(len(rows))] for j in range(len(self.complement_axes))]
        bits = min((x.bits for row in rows for x in row if isinstance(x, BallScalar)), default=256)
        kernel = nullspace(system, len(rows), one=BallScalar.from_exact(1, bits))
        vectors = []
        for coeffs in kernel:
            vec = [Fraction(0)] * self.real_dim
            for c, row in zip(coeffs, rows):
                vec = [a + c * b for a, b in zip(vec, row)]
            vectors.append(vec)
        return RealSubspace.span(vectors, self.real_dim, height)

    # --- metric -------------------------------------------------------------

    def distances(self, compact: np.ndarray, transverse: np.ndarray,
                  ref_compact: np.ndarray, ref_transverse: np.ndarray,
                  radius: int = DISTANCE_SHELL) -> np.ndarray:
        """
        Torus distances between N points and one reference point.

        The minimum over lattice translates is searched on the shell
        k in {-radius..radius}^r of compact coordinate shifts.
        """
        dc = np.atleast_2d(compact) - np.asarray(ref_compact, dtype=float)
        dt = np.asarray(transverse, dtype=float).reshape(dc.shape[0], -1) - np.asarray(ref_transverse, dtype=float)
        base = self.embed(dc, dt)
        offsets = self.shell_offsets(radius)
        out = np.empty(base.shape[0])
        for start in range(0, base.shape[0], POINT_CHUNK):
            chunk = base[start:start + POINT_CHUNK]
            diffs = chunk[:, None, :] + offsets[None, :, :]
            out[start:start + POINT_CHUNK] = np.sqrt((diffs ** 2).sum(axis=2)).min(axis=1)
        return out

    def torus_distance(self, p: TorusPoint, q: TorusPoint) -> float:
        d = self.distances(p.compact_array(), p.transverse_array(),
                           q.compact_array(), q.transverse_array())
        return float(d[0])


def torus_distance(p: TorusPoint, q: TorusPoint, lattice: Lattice) -> float:
    return lattice.torus_distance(p, q)


def reduce(p, lattice: Lattice) -> TorusPoint:
    return lattice.reduce(p)


def in_gamma_r(v, lattice: Lattice, height: Optional[int] = None) -> Membership:
    return lattice.in_gamma_r(v, height)


# ============================================================================
# CLOSED SUBGROUPS
# ============================================================================

@dataclass
class ClosedSubgroup:
    """
    The translated closed subgroup pi(base + direction) of T.

    The direction contains the rational saturation of its intersection with
    Gamma_R, which is what makes the image closed.
    """
    lattice: Lattice
    base: TorusPoint
    direction: RealSubspace
    saturated: bool = True
    height: int = DEFAULT_HEIGHT
    _orthonormal: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return self.direction.dim

    @property
    def is_compact(self) -> bool:
        return self.lattice.gamma_r.includes(self.direction, self.height) == Membership.IN

    @property
    def compact_dim(self) -> int:
        return self.lattice.intersect_gamma_r(self.direction, self.height).dim

    @property
    def is_complex(self) -> bool:
        """Direction is a complex subspace, i.e. the subgroup is a sub-semi-torus."""
        return self.direction.complex_hull().dim == self.direction.dim

    def orthonormal_basis(self) -> np.ndarray:
        if self._orthonormal is None:
            self._orthonormal = self.direction.float_basis()
        return self._orthonormal

    def align(self, compact: np.ndarray, transverse: np.ndarray) -> np.ndarray:
        """
        Realified differences to the base, slid along the direction until the
        transverse part is as small as the direction allows, then with compact
        coordinates re-centered in [-1/2, 1/2).

        The lattice translate that brings a point near the subgroup depends on
        how far the direction winds before the transverse coordinates agree;
        after this step it is one of the shell offsets.
        """
        lattice = self.lattice
        compact = np.atleast_2d(np.asarray(compact, dtype=float))
        dc = compact - self.base.compact_array()
        dt = np.asarray(transverse, dtype=float).reshape(compact.shape[0], -1) - self.base.transverse_array()
        q = self.orthonormal_basis()
        if q.shape[0] and lattice.transverse_dim:
            split = q @ lattice._inverse
            q_compact, q_transverse = split[:, : lattice.rank], split[:, lattice.rank:]
            steps, *_ = np.linalg.lstsq(q_transverse.T, dt.T, rcond=None)
            dc = dc - steps.T @ q_compact
            dt = dt - steps.T @ q_transverse
        dc = dc - np.floor(dc + 0.5)
        return lattice.embed(dc, dt)

    def distance(self, compact: np.ndarray, transverse: np.ndarray,
                 radius: int = DISTANCE_SHELL) -> np.ndarray:
        """
        Distance from reduced points to the subgroup: the smallest norm of the
        component orthogonal to the direction over shell translates of the
        aligned difference.
        """
        lattice = self.lattice
        base = self.align(compact, transverse)
        q = self.orthonormal_basis()
        offsets = lattice.shell_offsets(radius)
        out = np.empty(base.shape[0])
        for start in range(0, base.shape[0], POINT_CHUNK):
            chunk = base[start:start + POINT_CHUNK]
            diffs = chunk[:, None, :] + offsets[None, :, :]
            if q.shape[0]:
                diffs = diffs - (diffs @ q.T) @ q
            out[start:start + POINT_CHUNK] = np.sqrt((diffs ** 2).sum(axis=2)).min(axis=1)
        return out

    def distance_to_point(self, point: TorusPoint) -> float:
        return float(self.distance(point.compact_array(), point.transverse_array())[0])

    def net(self, delta: float) -> np.ndarray:
        """
        Compact coordinates of a delta-grid of the subgroup (compact case only):
        grid points of the torus within delta/2 of the subgroup.
        """
        lattice = self.lattice
        steps = max(1, int(round(1.0 / delta)))
        axis = np.arange(steps) / steps
        grid = np.array(list(product(axis, repeat=lattice.rank)), dtype=float)
        transverse = np.tile(self.base.transverse_array(), (grid.shape[0], 1))
        keep = self.distance(grid, transverse) <= delta / 2
        return grid[keep]

    def coverage(self, compact: np.ndarray, transverse: np.ndarray, delta: float,
                 section: bool = False) -> Optional[float]:
        """
        Fraction of the delta-net of the subgroup that has a sample within delta.

        Returns None for non-compact subgroups unless `section` is set, in which
        case the net is the cross-section through the base transverse coordinates.
        """
        if not self.is_compact and not section:
            return None
        net = self.net(delta)
        if net.shape[0] == 0:
            return 1.0
        lattice = self.lattice
        samples = lattice.embed(np.atleast_2d(compact), transverse)
        offsets = lattice.shell_offsets(DISTANCE_SHELL)
        tree = cKDTree((samples[:, None, :] + offsets[None, :, :]).reshape(-1, lattice.real_dim))
        net_points = lattice.embed(net, np.tile(self.base.transverse_array(), (net.shape[0], 1)))
        nearest, _ = tree.query(net_points, k=1)
        return float(np.mean(nearest <= delta))

    def same_set(self, other: "ClosedSubgroup", tol: float = 1e-9) -> bool:
        """Set equality: equal directions and base points in the same coset."""
        if self.direction.dim != other.direction.dim:
            return False
        if self.direction.is_exact and other.direction.is_exact:
            if self.direction.exact_rows != other.direction.exact_rows:
                return False
        elif Membership.OUT in (self.direction.includes(other.direction, self.height),
                                other.direction.includes(self.direction, self.height)):
            return False
        return self.distance_to_point(other.base) <= tol

    def to_dict(self) -> Dict[str, Any]:
        return {
            'base': self.base.to_dict(),
            'direction': self.direction.to_json(),
            'dim': self.dim,
            'compact': self.is_compact,
            'complex': self.is_complex,
            'saturated': self.saturated,
        }


def _normalize_base(lattice: Lattice, t, direction: RealSubspace) -> TorusPoint:
    """Reduce the orthogonal projection of t onto the complement of the direction."""
    x = lattice.realify_point(t) if not isinstance(t, (list, tuple)) else list(t)
    if isinstance(x, list) and all(isinstance(a, (int, Fraction)) for a in x) and direction.is_exact:
        return lattice.reduce_exact(direction.project_orthogonal([Fraction(a) for a in x]))
    x = np.array([_to_float(a) for a in x], dtype=float)
    q = direction.float_basis()
    if q.shape[0]:
        x = x - (x @ q.T) @ q
    compact, transverse = lattice.reduce_many(x.reshape(1, -1), realified=True)
    return TorusPoint(tuple(float(c) for c in compact[0]), tuple(float(v) for v in transverse[0]))


def subgroup_closure(F: RealSubspace, t, lattice: Lattice,
                     height: int = DEFAULT_HEIGHT) -> ClosedSubgroup:
    """
    Closure of pi(t + F) in T.

    Args:
        F: Real subspace of R^{2n} (exact, or with ball rows)
        t: Translation: ExactVector, complex array or realified sequence
        lattice: Gamma
        height: Relation height for saturation and ball zero tests

    Returns:
        ClosedSubgroup pi(t + F + sat(F n Gamma_R)) with normalized base

    Raises:
        CertificationFailure: If saturation of ball data fails
    """
    intersection = lattice.intersect_gamma_r(F, height)
    saturated = rational_saturation(intersection, lattice.gamma_r, height)
    direction = saturated.sum(F, height)
    base = _normalize_base(lattice, t, direction)
    logger.debug(f"Closure direction has dim {direction.dim} ({direction.mode}); "
                 f"F n Gamma_R has dim {intersection.dim}, saturated {saturated.dim}")
    return ClosedSubgroup(lattice, base, direction, True, height)


# ============================================================================
# CHARACTERS
# ============================================================================

@dataclass
class CharacterTable:
    """Integer characters up to a degree bound, split by their behaviour on a subgroup."""
    degree_bound: int
    annihilators: List[Tuple[int, ...]] = field(default_factory=list)
    non_annihilators: List[Tuple[int, ...]] = field(default_factory=list)
    witnesses: Dict[Tuple[int, ...], int] = field(default_factory=dict)  # m -> direction row index

    def to_dict(self) -> Dict[str, Any]:
        return {
            'degree_bound': self.degree_bound,
            'annihilators': [list(m) for m in self.annihilators],
            'non_annihilators': [list(m) for m in self.non_annihilators],
            'witnesses': {','.join(map(str, m)): i for m, i in self.witnesses.items()},
        }


def compact_functionals(direction: RealSubspace, lattice: Lattice) -> List[list]:
    """Compact coordinates C(d) of each direction row d."""
    out = []
    for row in direction.rows():
        coords = []
        for j in range(lattice.rank):
            total = Fraction(0)
            for x, inv_row in zip(row, lattice.basis_inverse):
                if inv_row[j] and not (isinstance(x, Fraction) and x == 0):
                    total = total + x * inv_row[j]
            coords.append(total)
        out.append(coords)
    return out


def dual_annihilator(H: ClosedSubgroup, lattice: Lattice, degree_bound: int) -> CharacterTable:
    """
    Characters e^{2 pi i m.c} with |m_i| <= degree_bound that are constant on H.

    m annihilates H iff m . C(d) = 0 for every direction row d. Every other m
    is stored with the index of a row where m . C(d) != 0.
    """
    functionals = compact_functionals(H.direction, lattice)
    table = CharacterTable(degree_bound)
    for m in product(range(-degree_bound, degree_bound + 1), repeat=lattice.rank):
        witness = None
        for i, coords in enumerate(functionals):
            value = Fraction(0)
            for mj, cj in zip(m, coords):
                if mj:
                    value = value + cj * mj
            if not is_zero_at_height(value, H.height):
                witness = i
                break
        if witness is None:
            table.annihilators.append(tuple(m))
        else:
            table.non_annihilators.append(tuple(m))
            table.witnesses[tuple(m)] = witness
    logger.debug(f"{len(table.annihilators)} annihilating characters up to degree {degree_bound}")
    return table
