"""
Scalars over the Gaussian rationals, plus certified complex balls.

WHY TWO SCALAR TYPES:
- Structural outputs (subspaces, lattices, cones) must be decided exactly,
  so all user data lives in Q(i) and is carried as ExactScalar.
- Phases such as e^{i pi p / d} and unit directions w/|w| are irrational in
  general; they are carried as BallScalar, a midpoint at P bits plus a radius
  that is inflated after every operation so the true value stays enclosed.

HOW THEY MIX:
- ExactScalar returns NotImplemented against a ball, so the ball's reflected
  operator runs and the result is a ball.
- Fractions and ints coerce into either type.

EXAMPLE USAGE:
```python
z = parse_scalar("1/2-3/4 i")
b = BallScalar.from_exact(z, bits=128) * BallScalar.unit_pi(Fraction(1, 4), 128)
b.excludes_zero()   # True
```
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union
import logging
import re

import mpmath as mp

logger = logging.getLogger(__name__)

DEFAULT_BITS = 256

_Rational = Union[int, Fraction]
_TERM_PATTERN = re.compile(r"[+-]?[^+-]+")


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    raise TypeError(f"Expected a rational, got {type(value).__name__}")


@dataclass(frozen=True)
class ExactScalar:
    """A Gaussian rational re + im*i with canonical Fraction parts."""
    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "re", _as_fraction(self.re))
        object.__setattr__(self, "im", _as_fraction(self.im))

    @staticmethod
    def coerce(value) -> "ExactScalar":
        if isinstance(value, ExactScalar):
            return value
        if isinstance(value, (int, Fraction)):
            return ExactScalar(Fraction(value))
        if isinstance(value, str):
            return parse_scalar(value)
        raise TypeError(f"Cannot coerce {type(value).__name__} to ExactScalar")

    # --- arithmetic -------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            return ExactScalar(self.re + other, self.im)
        if isinstance(other, ExactScalar):
            return ExactScalar(self.re + other.re, self.im + other.im)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self) -> "ExactScalar":
        return ExactScalar(-self.re, -self.im)

    def __sub__(self, other):
        if isinstance(other, (int, Fraction, ExactScalar)):
            return self + (-ExactScalar.coerce(other))
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, (int, Fraction)):
            return ExactScalar.coerce(other) - self
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return ExactScalar(self.re * other, self.im * other)
        if isinstance(other, ExactScalar):
            return ExactScalar(
                self.re * other.re - self.im * other.im,
                self.re * other.im + self.im * other.re,
            )
        return NotImplemented

    __rmul__ = __mul__

    def inverse(self) -> "ExactScalar":
        norm = self.abs2()
        if norm == 0:
            raise ZeroDivisionError("ExactScalar division by zero")
        return ExactScalar(self.re / norm, -self.im / norm)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("ExactScalar division by zero")
            return ExactScalar(self.re / other, self.im / other)
        if isinstance(other, ExactScalar):
            return self * other.inverse()
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return ExactScalar.coerce(other) * self.inverse()
        return NotImplemented

    def __pow__(self, exponent: int) -> "ExactScalar":
        if not isinstance(exponent, int):
            return NotImplemented
        base = self if exponent >= 0 else self.inverse()
        result = ONE
        for _ in range(abs(exponent)):
            result = result * base
        return result

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            return self.im == 0 and self.re == other
        if isinstance(other, ExactScalar):
            return self.re == other.re and self.im == other.im
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.re, self.im))

    # --- helpers ----------------------------------------------------------

    def conjugate(self) -> "ExactScalar":
        return ExactScalar(self.re, -self.im)

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    @property
    def is_real(self) -> bool:
        return self.im == 0

    def to_complex(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __str__(self) -> str:
        return format_scalar(self)

    def __repr__(self) -> str:
        return f"ExactScalar({format_scalar(self)!r})"


ZERO = ExactScalar(Fraction(0), Fraction(0))
ONE = ExactScalar(Fraction(1), Fraction(0))
I_UNIT = ExactScalar(Fraction(0), Fraction(1))


def parse_scalar(text: str) -> ExactScalar:
    """
    Parse "p/q", "p/q+r/s i" and the usual shorthands ("i", "-2i", "3/4 i").

    Raises:
        ValueError: If a term is not a rational or rational multiple of i
    """
    compact = str(text).replace(" ", "").replace("*", "")
    if not compact:
        raise ValueError("Empty scalar string")
    re_part = Fraction(0)
    im_part = Fraction(0)
    for term in _TERM_PATTERN.findall(compact):
        if term[-1] in "ij":
            coefficient = term[:-1]
            if coefficient in ("", "+"):
                coefficient = "1"
            elif coefficient == "-":
                coefficient = "-1"
            im_part += Fraction(coefficient)
        else:
            re_part += Fraction(term)
    return ExactScalar(re_part, im_part)


def format_scalar(value: ExactScalar) -> str:
    """Serialize as "p/q" or "p/q+r/s i"."""
    if value.im == 0:
        return str(value.re)
    if value.re == 0:
        return f"{value.im} i"
    sign = "+" if value.im > 0 else "-"
    return f"{value.re}{sign}{abs(value.im)} i"


# ============================================================================
# BALL SCALARS
# ============================================================================

def mpf_to_fraction(x) -> Fraction:
    man, exp = mp.mpf(x).man_exp
    if exp >= 0:
        return Fraction(man * (1 << exp))
    return Fraction(man, 1 << (-exp))


def _rounding_slack(re_part, im_part, bits: int):
    return (abs(re_part) + abs(im_part)) * mp.ldexp(1, 2 - bits)


@dataclass(frozen=True)
class BallScalar:
    """
    Complex disc {z : |z - mid| <= rad} with mid computed at `bits` precision.

    Every operation adds a rounding slack proportional to |result| * 2^(2-bits)
    to the propagated radius.
    """
    mid_re: mp.mpf
    mid_im: mp.mpf
    rad: mp.mpf
    bits: int = DEFAULT_BITS

    # --- constructors -----------------------------------------------------

    @classmethod
    def from_exact(cls, value, bits: int = DEFAULT_BITS) -> "BallScalar":
        if isinstance(value, BallScalar):
            return value
        value = ExactScalar.coerce(value)
        with mp.workprec(bits):
            re_part = mp.mpf(value.re.numerator) / value.re.denominator
            im_part = mp.mpf(value.im.numerator) / value.im.denominator
            rad = _rounding_slack(re_part, im_part, bits)
        return cls(re_part, im_part, rad, bits)

    @classmethod
    def from_mpmath(cls, value, bits: int = DEFAULT_BITS, rad=0) -> "BallScalar":
        """Wrap an mpmath number computed at more than `bits` precision."""
        with mp.workprec(bits):
            z = mp.mpc(value)
            re_part = +z.real
            im_part = +z.imag
            slack = _rounding_slack(re_part, im_part, bits)
        return cls(re_part, im_part, mp.mpf(rad) + slack, bits)

    @classmethod
    def unit_pi(cls, turns: Fraction, bits: int = DEFAULT_BITS) -> "BallScalar":
        """e^{i*pi*turns}, computed with 32 guard bits."""
        turns = Fraction(turns)
        with mp.workprec(bits + 32):
            angle = mp.pi * mp.mpf(turns.numerator) / turns.denominator
            value = mp.mpc(mp.cos(angle), mp.sin(angle))
        return cls.from_mpmath(value, bits)

    @classmethod
    def from_angle(cls, angle: "BallScalar", bits: int = DEFAULT_BITS) -> "BallScalar":
        """e^{i*angle} for a real ball angle; |d/dt e^{it}| = 1 bounds the spread."""
        with mp.workprec(bits + 32):
            value = mp.mpc(mp.cos(angle.mid_re), mp.sin(angle.mid_re))
        return cls.from_mpmath(value, bits, rad=angle.rad)

    # --- arithmetic -------------------------------------------------------

    def _lift(self, other) -> Optional["BallScalar"]:
        if isinstance(other, BallScalar):
            return other
        if isinstance(other, (int, Fraction, ExactScalar)):
            return BallScalar.from_exact(other, self.bits)
        return None

    def _bits_with(self, other: "BallScalar") -> int:
        return min(self.bits, other.bits)

    def __add__(self, other):
        other = self._lift(other)
        if other is None:
            return NotImplemented
        bits = self._bits_with(other)
        with mp.workprec(bits):
            re_part = self.mid_re + other.mid_re
            im_part = self.mid_im + other.mid_im
            rad = self.rad + other.rad + _rounding_slack(re_part, im_part, bits)
        return BallScalar(re_part, im_part, rad, bits)

    __radd__ = __add__

    def __neg__(self) -> "BallScalar":
        return BallScalar(-self.mid_re, -self.mid_im, self.rad, self.bits)

    def __sub__(self, other):
        other = self._lift(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._lift(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = self._lift(other)
        if other is None:
            return NotImplemented
        bits = self._bits_with(other)
        with mp.workprec(bits):
            re_part = self.mid_re * other.mid_re - self.mid_im * other.mid_im
            im_part = self.mid_re * other.mid_im + self.mid_im * other.mid_re
            rad = (
                self.abs_upper() * other.rad
                + other.abs_upper() * self.rad
                + self.rad * other.rad
                + _rounding_slack(re_part, im_part, bits)
            )
        return BallScalar(re_part, im_part, rad, bits)

    __rmul__ = __mul__

    def inverse(self) -> "BallScalar":
        """
        Raises:
            ZeroDivisionError: If the ball may contain 0
        """
        with mp.workprec(self.bits):
            lower = self.abs_lower()
            if lower <= self.rad:
                raise ZeroDivisionError("Ball inverse of a disc containing 0")
            norm = self.mid_re * self.mid_re + self.mid_im * self.mid_im
            re_part = self.mid_re / norm
            im_part = -self.mid_im / norm
            rad = self.rad / (lower * (lower - self.rad))
            rad += _rounding_slack(re_part, im_part, self.bits)
        return BallScalar(re_part, im_part, rad, self.bits)

    def __truediv__(self, other):
        other = self._lift(other)
        if other is None:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = self._lift(other)
        if other is None:
            return NotImplemented
        return other * self.inverse()

    def __pow__(self, exponent: int) -> "BallScalar":
        if not isinstance(exponent, int):
            return NotImplemented
        base = self if exponent >= 0 else self.inverse()
        result = BallScalar.from_exact(ONE, self.bits)
        for _ in range(abs(exponent)):
            result = result * base
        return result

    def __bool__(self) -> bool:
        # Truthiness means "certainly nonzero"; callers that need the
        # three-valued answer use excludes_zero / contains_zero.
        return self.excludes_zero()

    # --- predicates -------------------------------------------------------

    def conjugate(self) -> "BallScalar":
        return BallScalar(self.mid_re, -self.mid_im, self.rad, self.bits)

    def real_part(self) -> "BallScalar":
        return BallScalar(self.mid_re, mp.mpf(0), self.rad, self.bits)

    def imag_part(self) -> "BallScalar":
        return BallScalar(self.mid_im, mp.mpf(0), self.rad, self.bits)

    def abs_upper(self):
        return abs(self.mid_re) + abs(self.mid_im)

    def abs_lower(self):
        return max(abs(self.mid_re), abs(self.mid_im))

    def excludes_zero(self) -> bool:
        with mp.workprec(self.bits + 16):
            return mp.hypot(self.mid_re, self.mid_im) > self.rad

    def contains_zero(self) -> bool:
        return not self.excludes_zero()

    @property
    def is_exact_zero(self) -> bool:
        return self.rad == 0 and self.mid_re == 0 and self.mid_im == 0

    def contains(self, value) -> bool:
        """Whether a point (ExactScalar, rational or Python complex) lies in the disc."""
        with mp.workprec(self.bits + 16):
            if isinstance(value, complex):
                point = mp.mpc(value.real, value.imag)
            else:
                value = ExactScalar.coerce(value)
                point = mp.mpc(
                    mp.mpf(value.re.numerator) / value.re.denominator,
                    mp.mpf(value.im.numerator) / value.im.denominator,
                )
            return abs(point - mp.mpc(self.mid_re, self.mid_im)) <= self.rad

    def contains_ball(self, other: "BallScalar") -> bool:
        with mp.workprec(max(self.bits, other.bits) + 16):
            gap = mp.hypot(self.mid_re - other.mid_re, self.mid_im - other.mid_im)
            return gap + other.rad <= self.rad

    def to_complex(self) -> complex:
        return complex(float(self.mid_re), float(self.mid_im))

    def to_dict(self) -> dict:
        digits = max(6, int(self.bits * 0.30103))
        return {
            "mid": [mp.nstr(self.mid_re, digits), mp.nstr(self.mid_im, digits)],
            "rad": mp.nstr(self.rad, 6),
            "bits": self.bits,
        }

    def __repr__(self) -> str:
        return f"BallScalar({mp.nstr(self.mid_re, 12)}+{mp.nstr(self.mid_im, 12)}i ± {mp.nstr(self.rad, 3)})"


Scalar = Union[ExactScalar, BallScalar]


def is_exact(value) -> bool:
    return isinstance(value, (int, Fraction, ExactScalar))


def to_ball(value, bits: int = DEFAULT_BITS) -> BallScalar:
    if isinstance(value, BallScalar):
        return value
    return BallScalar.from_exact(value, bits)


def ball_from_dict(data: dict) -> BallScalar:
    """Inverse of BallScalar.to_dict."""
    bits = int(data.get("bits", DEFAULT_BITS))
    mid = data["mid"]
    if not isinstance(mid, (list, tuple)):
        mid = [mid, "0"]
    with mp.workprec(bits):
        return BallScalar(mp.mpf(mid[0]), mp.mpf(mid[1]), mp.mpf(data.get("rad", 0)), bits)


def reconstruct_rational(value: BallScalar, height: int) -> Optional[ExactScalar]:
    """
    Recover a Gaussian rational with denominators <= height inside the ball.

    Only succeeds when the ball is narrow enough for the candidate to be unique
    (rad below 1/(2*height^2)).
    """
    with mp.workprec(value.bits):
        if value.rad * 2 * height * height >= 1:
            return None
        re_part = mpf_to_fraction(value.mid_re).limit_denominator(height)
        im_part = mpf_to_fraction(value.mid_im).limit_denominator(height)
    candidate = ExactScalar(re_part, im_part)
    if value.contains(candidate):
        return candidate
    return None


def scalar_to_json(value):
    if isinstance(value, BallScalar):
        return value.to_dict()
    return format_scalar(ExactScalar.coerce(value))
