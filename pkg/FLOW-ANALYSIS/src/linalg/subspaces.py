"""
Vectors and subspaces of E = C^n and of its realification R^{2n}.

WHAT IT DOES:
- Canonical reduced row echelon forms over Q and Q(i) (pivot entries 1,
  pivot columns cleared above and below), so equal subspaces compare equal
- ComplexSubspace: spans, membership, quotient coordinates, sums
- RealSubspace: exact rows over Q plus certified ball rows; membership and
  rank decisions are three-valued

REALIFICATION ORDER:
    (z_1, ..., z_n) -> (Re z_1, Im z_1, ..., Re z_n, Im z_n)
Every module uses this order.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union
import logging

import numpy as np

from ..exceptions import DimensionMismatch, UndecidedMembership
from ..schema import Membership
from .scalars import (
    BallScalar, ExactScalar, Scalar, ZERO, I_UNIT, is_exact, parse_scalar,
    scalar_to_json, format_scalar, reconstruct_rational,
)

logger = logging.getLogger(__name__)

RealEntry = Union[Fraction, BallScalar]
RealVector = Tuple[RealEntry, ...]


# ============================================================================
# GENERIC EXACT ELIMINATION
# ============================================================================

def rref(rows: Sequence[Sequence], ncols: int) -> Tuple[List[list], List[int]]:
    """
    Reduced row echelon form over an exact field (Fraction or ExactScalar).

    Returns:
        (nonzero rows, pivot columns); the form is canonical for the row space
    """
    matrix = [list(r) for r in rows]
    for r in matrix:
        if len(r) != ncols:
            raise DimensionMismatch(f"Row of length {len(r)} in a {ncols}-column matrix")
    pivots: List[int] = []
    lead = 0
    for col in range(ncols):
        pivot_row = next((i for i in range(lead, len(matrix)) if matrix[i][col]), None)
        if pivot_row is None:
            continue
        matrix[lead], matrix[pivot_row] = matrix[pivot_row], matrix[lead]
        pivot_value = matrix[lead][col]
        matrix[lead] = [x / pivot_value for x in matrix[lead]]
        for i in range(len(matrix)):
            if i != lead and matrix[i][col]:
                factor = matrix[i][col]
                matrix[i] = [a - factor * b for a, b in zip(matrix[i], matrix[lead])]
        pivots.append(col)
        lead += 1
        if lead == len(matrix):
            break
    return matrix[:lead], pivots


def rank(rows: Sequence[Sequence], ncols: int) -> int:
    return len(rref(rows, ncols)[1])


def nullspace(rows: Sequence[Sequence], ncols: int, one=Fraction(1)) -> List[list]:
    """Basis of {x : rows . x = 0}, one vector per free column."""
    reduced, pivots = rref(rows, ncols)
    zero = one - one
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        vec = [zero] * ncols
        vec[f] = one
        for row, p in zip(reduced, pivots):
            vec[p] = -row[f]
        basis.append(vec)
    return basis


def solve_linear(rows: Sequence[Sequence], rhs: Sequence, ncols: int) -> Optional[list]:
    """
    One solution of rows . x = rhs with free variables set to 0, or None.

    The zero-free-variable choice gives the minimal-support particular solution
    in the echelon basis.
    """
    augmented = [list(r) + [b] for r, b in zip(rows, rhs)]
    reduced, pivots = rref(augmented, ncols + 1)
    if ncols in pivots:
        return None
    zero = (rhs[0] - rhs[0]) if rhs else Fraction(0)
    solution = [zero] * ncols
    for row, p in zip(reduced, pivots):
        solution[p] = row[ncols]
    return solution


# ============================================================================
# VECTORS
# ============================================================================

@dataclass(frozen=True)
class ExactVector:
    """
    A vector of E = C^n.

    Entries are Gaussian rationals; quantities carried numerically (phases,
    radius coefficients) use BallScalar entries, and then is_exact is False.
    """
    entries: Tuple[Scalar, ...]

    @classmethod
    def parse(cls, values: Sequence) -> "ExactVector":
        """Build from scalar strings, ints, Fractions or ExactScalars."""
        entries = []
        for v in values:
            if isinstance(v, (ExactScalar, BallScalar)):
                entries.append(v)
            elif isinstance(v, str):
                entries.append(parse_scalar(v))
            else:
                entries.append(ExactScalar.coerce(v))
        return cls(tuple(entries))

    @classmethod
    def zeros(cls, n: int) -> "ExactVector":
        return cls(tuple(ZERO for _ in range(n)))

    @classmethod
    def unit(cls, n: int, j: int, value=None) -> "ExactVector":
        value = ExactScalar.coerce(1) if value is None else value
        return cls(tuple(value if i == j else ZERO for i in range(n)))

    @property
    def dim(self) -> int:
        return len(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, index):
        return self.entries[index]

    def _check(self, other: "ExactVector"):
        if other.dim != self.dim:
            raise DimensionMismatch(f"Vectors of dimension {self.dim} and {other.dim}")

    def __add__(self, other: "ExactVector") -> "ExactVector":
        self._check(other)
        return ExactVector(tuple(a + b for a, b in zip(self.entries, other.entries)))

    def __sub__(self, other: "ExactVector") -> "ExactVector":
        self._check(other)
        return ExactVector(tuple(a - b for a, b in zip(self.entries, other.entries)))

    def __neg__(self) -> "ExactVector":
        return ExactVector(tuple(-a for a in self.entries))

    def scale(self, c) -> "ExactVector":
        return ExactVector(tuple(c * a for a in self.entries))

    def __rmul__(self, c) -> "ExactVector":
        return self.scale(c)

    def times_i(self) -> "ExactVector":
        return self.scale(I_UNIT)

    @property
    def is_exact(self) -> bool:
        return all(is_exact(a) for a in self.entries)

    def is_zero(self) -> bool:
        """Exactly zero (ball entries count only when they are exact zeros)."""
        for a in self.entries:
            if isinstance(a, BallScalar):
                if not a.is_exact_zero:
                    return False
            elif a:
                return False
        return True

    def realify(self) -> RealVector:
        return realify(self)

    def to_numpy(self) -> np.ndarray:
        return np.array([a.to_complex() for a in self.entries], dtype=complex)

    def to_json(self) -> list:
        return [scalar_to_json(a) for a in self.entries]

    def __str__(self) -> str:
        return "(" + ", ".join(
            format_scalar(a) if isinstance(a, ExactScalar) else repr(a) for a in self.entries
        ) + ")"


def realify(v: ExactVector) -> RealVector:
    """(z_1, ..., z_n) -> (Re z_1, Im z_1, ..., Re z_n, Im z_n)."""
    out: List[RealEntry] = []
    for a in v.entries:
        if isinstance(a, BallScalar):
            out.extend([a.real_part(), a.imag_part()])
        else:
            a = ExactScalar.coerce(a)
            out.extend([a.re, a.im])
    return tuple(out)


def complexify(x: Sequence[RealEntry]) -> ExactVector:
    """Inverse of realify for exact real vectors."""
    if len(x) % 2:
        raise DimensionMismatch("Realified vectors have even length")
    return ExactVector(tuple(ExactScalar(x[2 * j], x[2 * j + 1]) for j in range(len(x) // 2)))


def real_times_i(x: Sequence[RealEntry]) -> RealVector:
    """Multiplication by i in realified coordinates: (a, b) -> (-b, a) per factor."""
    out: List[RealEntry] = []
    for j in range(0, len(x), 2):
        out.extend([-x[j + 1], x[j]])
    return tuple(out)


def _is_exact_zero(x) -> bool:
    if isinstance(x, BallScalar):
        return x.is_exact_zero
    return not x


def is_zero_at_height(x, height: Optional[int] = None) -> bool:
    """Exact zero, or a narrow ball whose rational reconstruction is 0."""
    if _is_exact_zero(x):
        return True
    if height is None or not isinstance(x, BallScalar) or x.excludes_zero():
        return False
    candidate = reconstruct_rational(x, height)
    return candidate is not None and not candidate


def _certainly_nonzero(x) -> bool:
    if isinstance(x, BallScalar):
        return x.excludes_zero()
    return bool(x)


# ============================================================================
# COMPLEX SUBSPACES
# ============================================================================

@dataclass(frozen=True)
class ComplexSubspace:
    """A complex subspace of C^n held in canonical reduced echelon form."""
    ambient_dim: int
    basis: Tuple[Tuple[ExactScalar, ...], ...]
    pivots: Tuple[int, ...]

    @classmethod
    def span(cls, vectors: Sequence[ExactVector], ambient_dim: Optional[int] = None) -> "ComplexSubspace":
        """
        Raises:
            DimensionMismatch: If vectors disagree in length
        """
        vectors = list(vectors)
        if ambient_dim is None:
            if not vectors:
                raise DimensionMismatch("Ambient dimension needed for an empty span")
            ambient_dim = vectors[0].dim
        for v in vectors:
            if v.dim != ambient_dim:
                raise DimensionMismatch(f"Vector of dimension {v.dim} in C^{ambient_dim}")
            if not v.is_exact:
                raise TypeError("ComplexSubspace.span needs exact vectors")
        rows = [[ExactScalar.coerce(a) for a in v.entries] for v in vectors]
        reduced, pivots = rref(rows, ambient_dim)
        return cls(ambient_dim, tuple(tuple(r) for r in reduced), tuple(pivots))

    @classmethod
    def zero(cls, n: int) -> "ComplexSubspace":
        return cls(n, (), ())

    @classmethod
    def full(cls, n: int) -> "ComplexSubspace":
        return cls.span([ExactVector.unit(n, j) for j in range(n)], n)

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def complement_indices(self) -> Tuple[int, ...]:
        return tuple(j for j in range(self.ambient_dim) if j not in self.pivots)

    def basis_vectors(self) -> List[ExactVector]:
        return [ExactVector(row) for row in self.basis]

    def reduce(self, v: ExactVector) -> ExactVector:
        """v minus its component along the basis; pivot coordinates become 0."""
        if v.dim != self.ambient_dim:
            raise DimensionMismatch(f"Vector of dimension {v.dim} against C^{self.ambient_dim}")
        entries = list(v.entries)
        for row, p in zip(self.basis, self.pivots):
            c = entries[p]
            if _is_exact_zero(c):
                continue
            entries = [a - c * b for a, b in zip(entries, row)]
            entries[p] = ZERO
        return ExactVector(tuple(entries))

    def quotient_project(self, v: ExactVector) -> ExactVector:
        """Coordinates of v in E/F on the non-pivot coordinates; zero iff v in F."""
        reduced = self.reduce(v)
        return ExactVector(tuple(reduced.entries[j] for j in self.complement_indices))

    def lift_from_quotient(self, coords: Sequence) -> ExactVector:
        """Place quotient coordinates on the non-pivot axes (the fixed complement)."""
        entries = [ZERO] * self.ambient_dim
        for j, value in zip(self.complement_indices, coords):
            entries[j] = value
        return ExactVector(tuple(entries))

    def contains(self, v: ExactVector) -> bool:
        return self.reduce(v).is_zero()

    def includes(self, other: "ComplexSubspace") -> bool:
        return all(self.contains(v) for v in other.basis_vectors())

    def sum(self, other: "ComplexSubspace") -> "ComplexSubspace":
        return ComplexSubspace.span(self.basis_vectors() + other.basis_vectors(), self.ambient_dim)

    def __add__(self, other: "ComplexSubspace") -> "ComplexSubspace":
        return self.sum(other)

    def add_vector(self, v: ExactVector) -> "ComplexSubspace":
        return ComplexSubspace.span(self.basis_vectors() + [v], self.ambient_dim)

    def realify(self) -> "RealSubspace":
        vectors = []
        for v in self.basis_vectors():
            vectors.append(realify(v))
            vectors.append(realify(v.times_i()))
        return RealSubspace.span(vectors, 2 * self.ambient_dim)

    def to_json(self) -> list:
        return [[format_scalar(a) for a in row] for row in self.basis]


def span(vectors: Sequence[ExactVector], field: str = "complex", ambient_dim: Optional[int] = None):
    """Span over C (ComplexSubspace) or over R of the realified vectors (RealSubspace)."""
    if field == "complex":
        return ComplexSubspace.span(vectors, ambient_dim)
    if field == "real":
        n = ambient_dim if ambient_dim is not None else (vectors[0].dim if vectors else None)
        if n is None:
            raise DimensionMismatch("Ambient dimension needed for an empty span")
        return RealSubspace.span([realify(v) for v in vectors], 2 * n)
    raise ValueError(f"Unknown field: {field}")


def quotient_project(v: ExactVector, F: ComplexSubspace) -> ExactVector:
    return F.quotient_project(v)


# ============================================================================
# REAL SUBSPACES
# ============================================================================

@dataclass(frozen=True)
class RealSubspace:
    """
    Real subspace of R^m.

    Exact rows are kept in canonical echelon form over Q. Ball rows are reduced
    against the exact rows and against each other; each carries a pivot whose
    ball excludes 0, which certifies independence.
    """
    ambient_dim: int
    exact_rows: Tuple[Tuple[Fraction, ...], ...] = ()
    exact_pivots: Tuple[int, ...] = ()
    ball_rows: Tuple[Tuple[RealEntry, ...], ...] = ()
    ball_pivots: Tuple[int, ...] = ()

    @classmethod
    def zero(cls, m: int) -> "RealSubspace":
        return cls(m)

    @classmethod
    def full(cls, m: int) -> "RealSubspace":
        return cls.span([tuple(Fraction(int(i == j)) for i in range(m)) for j in range(m)], m)

    @classmethod
    def span(cls, vectors: Sequence[Sequence[RealEntry]], ambient_dim: int,
             height: Optional[int] = None) -> "RealSubspace":
        """
        Args:
            height: When given, ball residuals that reconstruct to the rational 0
                at this height count as zero

        Raises:
            UndecidedMembership: If a ball vector can be neither certified
                independent nor shown to be dependent
        """
        exact = []
        balls = []
        for v in vectors:
            if len(v) != ambient_dim:
                raise DimensionMismatch(f"Vector of length {len(v)} in R^{ambient_dim}")
            if all(isinstance(a, (int, Fraction)) for a in v):
                exact.append([Fraction(a) for a in v])
            else:
                balls.append(tuple(v))
        reduced, pivots = rref(exact, ambient_dim)
        subspace = cls(ambient_dim, tuple(tuple(r) for r in reduced), tuple(pivots))
        for v in balls:
            subspace, answer = subspace.extend(v, height)
            if answer == Membership.UNDECIDED:
                raise UndecidedMembership("Rank of ball vectors undecided at this precision")
        return subspace

    @property
    def dim(self) -> int:
        return len(self.exact_rows) + len(self.ball_rows)

    @property
    def is_exact(self) -> bool:
        return not self.ball_rows

    @property
    def mode(self) -> str:
        return "exact" if self.is_exact else "certified"

    def rows(self) -> List[Tuple[RealEntry, ...]]:
        return list(self.exact_rows) + list(self.ball_rows)

    def residual(self, vec: Sequence[RealEntry]) -> List[RealEntry]:
        """vec minus its (certified) component along the rows."""
        if len(vec) != self.ambient_dim:
            raise DimensionMismatch(f"Vector of length {len(vec)} against R^{self.ambient_dim}")
        r = list(vec)
        for row, p in zip(self.exact_rows, self.exact_pivots):
            c = r[p]
            if _is_exact_zero(c):
                continue
            r = [a - c * b for a, b in zip(r, row)]
            r[p] = Fraction(0)
        for row, p in zip(self.ball_rows, self.ball_pivots):
            c = r[p]
            if _is_exact_zero(c):
                continue
            c = c / row[p]
            r = [a - c * b for a, b in zip(r, row)]
            r[p] = Fraction(0)
        return r

    def contains(self, vec: Sequence[RealEntry], height: Optional[int] = None) -> Membership:
        residual = self.residual(vec)
        if any(_certainly_nonzero(a) for a in residual):
            return Membership.OUT
        if all(is_zero_at_height(a, height) for a in residual):
            return Membership.IN
        return Membership.UNDECIDED

    def extend(self, vec: Sequence[RealEntry],
               height: Optional[int] = None) -> Tuple["RealSubspace", Membership]:
        """
        Add a vector to the span.

        Returns:
            (new subspace, membership of vec in the old one); the subspace is
            unchanged unless the answer is OUT
        """
        residual = self.residual(vec)
        if all(is_zero_at_height(a, height) for a in residual):
            return self, Membership.IN
        if all(isinstance(a, (int, Fraction)) for a in vec) and all(
            isinstance(a, (int, Fraction)) for a in residual
        ):
            rows = [list(r) for r in self.exact_rows] + [[Fraction(a) for a in vec]]
            reduced, pivots = rref(rows, self.ambient_dim)
            rebuilt = RealSubspace(self.ambient_dim, tuple(tuple(r) for r in reduced), tuple(pivots))
            for row in self.ball_rows:
                rebuilt, answer = rebuilt.extend(row, height)
                if answer != Membership.OUT:
                    return self, Membership.UNDECIDED
            return rebuilt, Membership.OUT
        candidates = [j for j, a in enumerate(residual) if _certainly_nonzero(a)]
        if not candidates:
            return self, Membership.UNDECIDED
        pivot = max(candidates, key=lambda j: _magnitude(residual[j]))
        return (
            RealSubspace(
                self.ambient_dim,
                self.exact_rows,
                self.exact_pivots,
                self.ball_rows + (tuple(residual),),
                self.ball_pivots + (pivot,),
            ),
            Membership.OUT,
        )

    def sum(self, other: "RealSubspace", height: Optional[int] = None) -> "RealSubspace":
        return RealSubspace.span(self.rows() + other.rows(), self.ambient_dim, height)

    def includes(self, other: "RealSubspace", height: Optional[int] = None) -> Membership:
        answers = [self.contains(row, height) for row in other.rows()]
        if any(a == Membership.OUT for a in answers):
            return Membership.OUT
        if all(a == Membership.IN for a in answers):
            return Membership.IN
        return Membership.UNDECIDED

    def times_i(self, height: Optional[int] = None) -> "RealSubspace":
        return RealSubspace.span([real_times_i(r) for r in self.rows()], self.ambient_dim, height)

    def complex_hull(self, height: Optional[int] = None) -> "RealSubspace":
        """S + iS."""
        return RealSubspace.span(self.rows() + [real_times_i(r) for r in self.rows()], self.ambient_dim, height)

    # --- exact-only operations ---------------------------------------------

    def _require_exact(self):
        if not self.is_exact:
            raise TypeError("Operation needs an exact real subspace")

    def intersect(self, other: "RealSubspace") -> "RealSubspace":
        """Intersection of two exact subspaces."""
        self._require_exact()
        other._require_exact()
        a = [list(r) for r in self.exact_rows]
        b = [list(r) for r in other.exact_rows]
        if not a or not b:
            return RealSubspace.zero(self.ambient_dim)
        # Columns are the spanning vectors of both spaces; kernel gives common points.
        columns = a + [[-x for x in r] for r in b]
        system = [[columns[k][i] for k in range(len(columns))] for i in range(self.ambient_dim)]
        kernel = nullspace(system, len(columns))
        vectors = []
        for coeffs in kernel:
            vec = [Fraction(0)] * self.ambient_dim
            for c, row in zip(coeffs[: len(a)], a):
                if c:
                    vec = [x + c * y for x, y in zip(vec, row)]
            vectors.append(vec)
        return RealSubspace.span(vectors, self.ambient_dim)

    def orthogonal_complement(self) -> "RealSubspace":
        self._require_exact()
        basis = nullspace([list(r) for r in self.exact_rows], self.ambient_dim)
        return RealSubspace.span(basis, self.ambient_dim)

    def project_orthogonal(self, point: Sequence[Fraction]) -> List[Fraction]:
        """Orthogonal projection of an exact point onto the complement of this subspace."""
        self._require_exact()
        rows = [list(r) for r in self.exact_rows]
        if not rows:
            return list(point)
        gram = [[sum(x * y for x, y in zip(r, s)) for s in rows] for r in rows]
        rhs = [sum(x * y for x, y in zip(r, point)) for r in rows]
        coeffs = solve_linear(gram, rhs, len(rows))
        out = list(point)
        for c, r in zip(coeffs, rows):
            out = [x - c * y for x, y in zip(out, r)]
        return out

    def float_basis(self) -> np.ndarray:
        """Orthonormal float basis (rows) of the subspace."""
        rows = self.rows()
        if not rows:
            return np.zeros((0, self.ambient_dim))
        matrix = np.array([[_to_float(a) for a in r] for r in rows], dtype=float)
        q, _ = np.linalg.qr(matrix.T)
        return q[:, : len(rows)].T

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "rows": [[str(a) for a in r] for r in self.exact_rows]
            + [[scalar_to_json(a) if isinstance(a, BallScalar) else str(a) for a in r] for r in self.ball_rows],
        }


def _magnitude(x) -> float:
    if isinstance(x, BallScalar):
        return float(x.abs_lower())
    return abs(float(x))


def _to_float(x) -> float:
    if isinstance(x, BallScalar):
        return float(x.mid_re)
    return float(x)
