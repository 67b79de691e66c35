"""
Truncated Laurent series in one variable over the Gaussian rationals.

A series is a finite map exponent -> ExactScalar plus an absolute precision N:
every coefficient with exponent < N is known, everything from N on is
unspecified. N = None marks an exact Laurent polynomial.

Arithmetic tracks N the usual way:
    (f + g).N = min(f.N, g.N)
    (f * g).N = min(f.N + val(g), g.N + val(f))
    (1/f).N   = f.N - 2 val(f)

Anything that needs a coefficient at or beyond N raises TruncationInsufficient.

EXAMPLE USAGE:
```python
x = LaurentSeries.monomial(1)
phi = x * (1 + x)
phi.power(-2, order=2)      # x^-2 - 2x^-1 + 3 - 4x + O(x^2)
```
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Optional, Tuple, Union
import logging

from .exceptions import TruncationInsufficient
from .linalg.scalars import ExactScalar, ZERO, format_scalar

logger = logging.getLogger(__name__)

Coefficient = Union[int, Fraction, ExactScalar]


def generalized_binomial(r, k: int):
    """r (r-1) ... (r-k+1) / k! for rational or Gaussian-rational r."""
    result = Fraction(1)
    for j in range(k):
        result = result * (r - j) / (j + 1)
    return result


def _min_prec(*values: Optional[int]) -> Optional[int]:
    known = [v for v in values if v is not None]
    return min(known) if known else None


@dataclass(frozen=True)
class LaurentSeries:
    """Laurent series with exact coefficients known below `precision`."""
    coeffs: Tuple[Tuple[int, ExactScalar], ...] = ()
    precision: Optional[int] = None

    # --- constructors -------------------------------------------------------

    @classmethod
    def from_dict(cls, data: Dict[int, Coefficient], precision: Optional[int] = None) -> "LaurentSeries":
        cleaned = {}
        for e, c in data.items():
            c = ExactScalar.coerce(c)
            if c and (precision is None or e < precision):
                cleaned[int(e)] = c
        return cls(tuple(sorted(cleaned.items())), precision)

    @classmethod
    def monomial(cls, exponent: int, coefficient: Coefficient = 1) -> "LaurentSeries":
        return cls.from_dict({exponent: coefficient})

    @classmethod
    def constant(cls, value: Coefficient) -> "LaurentSeries":
        return cls.from_dict({0: value})

    @classmethod
    def zero(cls, precision: Optional[int] = None) -> "LaurentSeries":
        return cls((), precision)

    # --- inspection ---------------------------------------------------------

    def as_dict(self) -> Dict[int, ExactScalar]:
        return dict(self.coeffs)

    def coefficient(self, exponent: int) -> ExactScalar:
        """
        Raises:
            TruncationInsufficient: If exponent is at or above the precision
        """
        if self.precision is not None and exponent >= self.precision:
            raise TruncationInsufficient(
                f"Coefficient of x^{exponent} needed but series is only known below x^{self.precision}"
            )
        return self.as_dict().get(exponent, ZERO)

    @property
    def valuation(self) -> Optional[int]:
        """Lowest exponent with a nonzero coefficient; None if zero to precision."""
        return self.coeffs[0][0] if self.coeffs else None

    def require_valuation(self) -> int:
        v = self.valuation
        if v is None:
            raise TruncationInsufficient(
                f"Series vanishes below x^{self.precision}; leading term unknown"
            )
        return v

    @property
    def leading_coefficient(self) -> ExactScalar:
        return self.coeffs[0][1] if self.coeffs else ZERO

    @property
    def is_exact(self) -> bool:
        return self.precision is None

    def exponents(self) -> Iterable[int]:
        return (e for e, _ in self.coeffs)

    def truncate(self, precision: int) -> "LaurentSeries":
        new_prec = _min_prec(self.precision, precision)
        return LaurentSeries.from_dict(self.as_dict(), new_prec)

    # --- arithmetic ---------------------------------------------------------

    def _lift(self, other) -> "LaurentSeries":
        if isinstance(other, LaurentSeries):
            return other
        return LaurentSeries.constant(other)

    def __add__(self, other) -> "LaurentSeries":
        other = self._lift(other)
        out = self.as_dict()
        for e, c in other.coeffs:
            out[e] = out.get(e, ZERO) + c
        return LaurentSeries.from_dict(out, _min_prec(self.precision, other.precision))

    __radd__ = __add__

    def __neg__(self) -> "LaurentSeries":
        return LaurentSeries(tuple((e, -c) for e, c in self.coeffs), self.precision)

    def __sub__(self, other) -> "LaurentSeries":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "LaurentSeries":
        return self._lift(other) - self

    def scale(self, c: Coefficient) -> "LaurentSeries":
        c = ExactScalar.coerce(c)
        return LaurentSeries.from_dict({e: c * a for e, a in self.coeffs}, self.precision)

    def shift(self, k: int) -> "LaurentSeries":
        """Multiply by x^k."""
        prec = None if self.precision is None else self.precision + k
        return LaurentSeries(tuple((e + k, c) for e, c in self.coeffs), prec)

    def _valuation_bound(self) -> Optional[int]:
        """Lowest exponent that can be nonzero; None for the exact zero series."""
        if self.coeffs:
            return self.coeffs[0][0]
        return self.precision

    def __mul__(self, other) -> "LaurentSeries":
        if not isinstance(other, LaurentSeries):
            return self.scale(other)
        limits = []
        if self.precision is not None and other._valuation_bound() is not None:
            limits.append(self.precision + other._valuation_bound())
        if other.precision is not None and self._valuation_bound() is not None:
            limits.append(other.precision + self._valuation_bound())
        precision = min(limits) if limits else None
        out: Dict[int, ExactScalar] = {}
        for e1, c1 in self.coeffs:
            for e2, c2 in other.coeffs:
                e = e1 + e2
                if precision is not None and e >= precision:
                    continue
                out[e] = out.get(e, ZERO) + c1 * c2
        return LaurentSeries.from_dict(out, precision)

    __rmul__ = __mul__

    def inverse(self, order: Optional[int] = None) -> "LaurentSeries":
        """
        1/f. For exact polynomials the result is infinite; `order` then caps
        the absolute precision of the returned series.
        """
        v = self.require_valuation()
        c = self.leading_coefficient
        unit = self.shift(-v).scale(c.inverse()) - 1  # f = c x^v (1 + unit)
        if self.precision is None and not unit.coeffs:
            return LaurentSeries.monomial(-v, c.inverse())
        if self.precision is not None:
            relative = self.precision - v
        elif order is not None:
            relative = order + v
        else:
            raise ValueError("inverse of an exact non-monomial series needs an order")
        unit = unit.truncate(relative)
        result = LaurentSeries.constant(1).truncate(relative)
        term = LaurentSeries.constant(1)
        for _ in range(max(relative, 0)):
            term = (term * -unit).truncate(relative)
            if not term.coeffs:
                break
            result = result + term
        return result.truncate(relative).scale(c.inverse()).shift(-v)

    def __truediv__(self, other) -> "LaurentSeries":
        if isinstance(other, LaurentSeries):
            return self * other.inverse()
        return self.scale(ExactScalar.coerce(other).inverse())

    def power(self, exponent: int, order: Optional[int] = None) -> "LaurentSeries":
        """f^exponent; negative powers of exact polynomials need an `order`."""
        if exponent == 0:
            return LaurentSeries.constant(1)
        if len(self.coeffs) == 1 and self.precision is None:
            e, c = self.coeffs[0]
            return LaurentSeries.monomial(e * exponent, c ** exponent)
        if exponent > 0:
            base = self
        else:
            v = self.require_valuation()
            # base^|e| then has precision order when base is known to order + (|e|-1) v
            inner_order = None if order is None else order + (abs(exponent) - 1) * v
            base = self.inverse(inner_order)
        result = base
        for _ in range(abs(exponent) - 1):
            result = result * base
        if order is not None:
            result = result.truncate(order)
        return result

    def __pow__(self, exponent: int) -> "LaurentSeries":
        if not isinstance(exponent, int):
            return NotImplemented
        return self.power(exponent)

    def power_of_unit(self, r, order: Optional[int] = None) -> "LaurentSeries":
        """
        (1 + g)^r for a series 1 + g with val(g) >= 1 and rational r.

        Raises:
            ValueError: If the series does not start with 1
        """
        g = self - 1
        if g.coeffs and g.valuation < 1:
            raise ValueError("power_of_unit needs a series of the form 1 + O(x)")
        precision = _min_prec(g.precision, order)
        if precision is None:
            raise ValueError("an order is required for exact input")
        result = LaurentSeries.constant(1).truncate(precision)
        term = LaurentSeries.constant(1)
        for k in range(1, max(precision, 0) + 1):
            term = (term * g).truncate(precision)
            if not term.coeffs:
                break
            result = result + term.scale(ExactScalar.coerce(generalized_binomial(Fraction(r), k)))
        return result.truncate(precision)

    def substitute(self, inner: "LaurentSeries", order: Optional[int] = None) -> "LaurentSeries":
        """
        f(inner) for inner of valuation >= 1.

        Unknown terms O(x^N) of f contribute O(x^(N val(inner))). `order`
        caps the result when negative powers of an exact inner series occur.
        """
        v_inner = inner.require_valuation()
        if v_inner < 1:
            raise ValueError("substitution needs an inner series of positive valuation")
        cap = _min_prec(None if self.precision is None else self.precision * v_inner, order)
        result = LaurentSeries.zero()
        for e, c in self.coeffs:
            result = result + inner.power(e, cap).scale(c)
        if cap is not None:
            result = result.truncate(cap)
        return result

    def revert(self) -> "LaurentSeries":
        """
        Compositional inverse of y = c x + O(x^2): returns x as a series in y.

        Raises:
            ValueError: If the series does not have valuation 1
        """
        if self.require_valuation() != 1:
            raise ValueError("reversion needs a series of valuation 1")
        if self.precision is None:
            raise ValueError("reversion of an exact polynomial needs a truncation")
        target = self.precision
        if target <= 2:
            return LaurentSeries.monomial(1, self.leading_coefficient.inverse()).truncate(target)
        s = self.shift(-1)  # y = x s(x)
        t = LaurentSeries.constant(s.leading_coefficient.inverse()).truncate(target - 1)
        y = LaurentSeries.monomial(1)
        for _ in range(target):
            t = s.substitute((y * t).truncate(target)).inverse().truncate(target - 1)
        return (y * t).truncate(target)

    def derivative(self) -> "LaurentSeries":
        prec = None if self.precision is None else self.precision - 1
        return LaurentSeries.from_dict({e - 1: c * e for e, c in self.coeffs if e != 0}, prec)

    def evaluate(self, x: complex) -> complex:
        """Numerical value of the known part at x."""
        return sum(c.to_complex() * x ** e for e, c in self.coeffs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        return self.coeffs == other.coeffs and self.precision == other.precision

    def __hash__(self) -> int:
        return hash((self.coeffs, self.precision))

    def __str__(self) -> str:
        parts = [f"({format_scalar(c)})x^{e}" for e, c in self.coeffs]
        if self.precision is not None:
            parts.append(f"O(x^{self.precision})")
        return " + ".join(parts) if parts else "0"
