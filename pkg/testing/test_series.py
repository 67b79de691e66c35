"""
TRUNCATED LAURENT SERIES TESTS

WHAT THESE TESTS DO:
- Check precision bookkeeping of sums, products and inverses
- Verify negative powers, fractional powers of units and substitution
- Verify series reversion against a hand-computed inverse

WHY THIS MATTERS:
- Reparametrizations and composed curves are computed with these series
- A precision that is too optimistic reports coefficients that are not known
"""

from fractions import Fraction

import pytest

from src.exceptions import TruncationInsufficient
from src.linalg.scalars import ExactScalar
from src.series import LaurentSeries, generalized_binomial

x = LaurentSeries.monomial(1)


def series(terms, precision=None):
    return LaurentSeries.from_dict(terms, precision)


class TestPrecision:
    """Absolute precision N: coefficients below x^N are known"""

    def test_sum_takes_the_smaller_precision(self):
        total = series({0: 1}, 3) + series({1: 2}, 5)
        assert total.precision == 3
        assert total.coefficient(1) == 2

    def test_product_precision(self):
        product = series({-1: 1}, 2) * series({1: 1}, 3)
        assert product.precision == 2
        assert product == series({0: 1}, 2)

    def test_coefficient_beyond_precision_raises(self):
        f = series({0: 1}, 2)
        with pytest.raises(TruncationInsufficient):
            f.coefficient(2)

    def test_unknown_leading_term_raises(self):
        with pytest.raises(TruncationInsufficient):
            LaurentSeries.zero(3).require_valuation()

    def test_zero_coefficients_are_dropped(self):
        f = series({0: 0, 2: ExactScalar(0, 1)})
        assert f.valuation == 2
        assert f.leading_coefficient == ExactScalar(0, 1)


class TestPowers:

    def test_inverse_of_unit(self):
        inv = (1 - x).inverse(order=5)
        assert inv == series({k: 1 for k in range(5)}, 5)

    def test_negative_power_of_reparametrization(self):
        phi = x * (1 + x)
        assert phi.power(-2, order=2) == series({-2: 1, -1: -2, 0: 3, 1: -4}, 2)

    def test_monomial_powers_stay_exact(self):
        f = LaurentSeries.monomial(-1, ExactScalar(0, 2))
        assert f ** 3 == LaurentSeries.monomial(-3, ExactScalar(0, -8))

    def test_inverse_of_polynomial_needs_order(self):
        with pytest.raises(ValueError):
            (1 + x).inverse()

    def test_square_root_of_unit(self):
        root = (1 + x).power_of_unit(Fraction(1, 2), order=3)
        assert root == series({0: 1, 1: Fraction(1, 2), 2: Fraction(-1, 8)}, 3)

    def test_power_of_unit_rejects_non_units(self):
        with pytest.raises(ValueError):
            (x + 2).power_of_unit(Fraction(1, 2), order=3)

    def test_generalized_binomial(self):
        assert generalized_binomial(Fraction(1, 2), 2) == Fraction(-1, 8)
        assert generalized_binomial(5, 2) == 10


class TestComposition:

    def test_substitute_matches_power(self):
        f = LaurentSeries.monomial(-2)
        phi = x + x * x
        assert f.substitute(phi, order=2) == phi.power(-2, order=2)

    def test_substitute_needs_positive_valuation(self):
        with pytest.raises(ValueError):
            x.substitute(1 + x)

    def test_revert(self):
        y_of_x = series({1: 1, 2: 1}, 4)
        assert y_of_x.revert() == series({1: 1, 2: -1, 3: 2}, 4)

    def test_derivative_and_evaluate(self):
        f = series({-2: 1, 1: 3})
        assert f.derivative() == series({-3: -2, 0: 3})
        assert abs(series({-1: 1, 0: 2}).evaluate(0.5) - 4.0) < 1e-12
