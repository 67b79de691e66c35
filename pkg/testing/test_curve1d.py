"""
ONE-VARIABLE LIMIT SET TESTS

WHAT THESE TESTS DO:
- Stratify Laurent curves into their pole flags
- Split compact and non-compact cases and find the almost-Gamma-radii
- Expand curves along radii and assemble the limit set
- Compute complex hulls of subspaces in the quotient

WHY THIS MATTERS:
- The two-radii curve in C^2 has a known answer: four Gamma-radii that
  close up into two distinct real semi-tori
- Every empty-limit branch must say why it is empty
"""

from fractions import Fraction
import math

import mpmath as mp
import pytest

from src.curve1d import (
    LaurentCurve, alw_for_curve, alw_hull, analyze_radii, classify_compactness,
    hypothesis_flags, kappa_and_angles, limit_set, limit_set_compact,
    limit_set_with_subgroups, radius_expand, stratify,
)
from src.exceptions import NoPoles, TruncationInsufficient
from src.lattice import Lattice
from src.linalg.scalars import BallScalar, ONE
from src.linalg.subspaces import ComplexSubspace, ExactVector
from src.schema import Compactness, LimitStatus, Membership, Provenance


def curve(n, terms, truncation=None):
    return LaurentCurve.from_dict({
        'n': n,
        'terms': [{'e': e, 'v': v} for e, v in terms],
        'truncation': truncation,
    })


def lattice(*generators):
    return Lattice.from_dict({'n': len(generators[0]), 'generators': [list(g) for g in generators]})


GAUSSIAN_1 = lattice(["1"], ["i"])
GAUSSIAN_2 = lattice(["1", "0"], ["i", "0"], ["0", "1"], ["0", "i"])
MIXED = lattice(["1", "0"], ["0", "1"], ["0", "i"])  # Z x (Z + iZ)
TWO_RADII = curve(2, [(-2, ["1", "0"]), (-1, ["0", "1"])])


class TestLaurentCurve:

    def test_terms_are_merged_and_cleaned(self):
        f = curve(1, [(-1, ["1"]), (-1, ["1"]), (2, ["0"])])
        assert list(f.terms) == [-1]
        assert f.terms[-1] == ExactVector.parse(["2"])
        assert f.pole_bound == 1

    def test_term_beyond_truncation_rejected(self):
        with pytest.raises(TruncationInsufficient):
            curve(1, [(-1, ["1"]), (3, ["1"])], truncation=2)

    def test_numerical_evaluation(self):
        f = curve(1, [(-1, ["1"]), (1, ["i"])])
        value = f.evaluate_many([0.5])[0, 0]
        assert abs(value - (2 + 0.5j)) < 1e-12
        slope = f.derivative_many([0.5])[0, 0]
        assert abs(slope - (-4 + 1j)) < 1e-12


class TestStratification:
    """Pole flags F_1 < ... < F_k"""

    def test_two_radii_curve(self):
        s = stratify(TWO_RADII)
        assert s.k == 2
        assert s.degrees == [2, 1, 0]
        assert s.vectors[0] == ExactVector.parse(["1", "0"])
        assert s.vectors[1] == ExactVector.parse(["0", "1"])
        assert s.translation.is_zero()
        assert s.pole_space.dim == 2

    def test_single_pole_with_translation(self):
        s = stratify(curve(2, [(-1, ["1", "0"]), (0, ["0", "5"])]))
        assert s.k == 1
        assert s.degrees == [1, 0]
        assert s.translation == ExactVector.parse(["0", "5"])

    def test_second_vector_unique_modulo_first_flag(self):
        s = stratify(curve(2, [(-2, ["1", "1"]), (-1, ["1", "-1"])]))
        assert s.degrees == [2, 1, 0]
        assert s.chain[0].contains(s.vectors[1] - ExactVector.parse(["1", "-1"]))
        assert [F.dim for F in s.chain] == [1, 2]

    def test_principal_part_reconstructs_curve(self):
        s = stratify(TWO_RADII)
        assert s.principal_part() == {-2: ExactVector.parse(["1", "0"]),
                                      -1: ExactVector.parse(["0", "1"]),
                                      0: ExactVector.parse(["0", "0"])}

    def test_pole_free_curve_reports_its_value(self):
        with pytest.raises(NoPoles) as info:
            stratify(curve(1, [(0, ["1/2"]), (1, ["1"])]))
        assert info.value.value == ExactVector.parse(["1/2"])

    def test_constant_term_must_be_known(self):
        with pytest.raises(TruncationInsufficient):
            stratify(curve(1, [(-1, ["1"])], truncation=0))


class TestCompactness:

    def test_full_rank_lattice_is_compact(self):
        assert classify_compactness(stratify(curve(1, [(-1, ["1"])])), GAUSSIAN_1) == Compactness.COMPACT
        s = stratify(curve(2, [(-1, ["1", "0"])]))
        assert classify_compactness(s, GAUSSIAN_2) == Compactness.COMPACT

    def test_two_radii_curve_is_not_compact(self):
        assert classify_compactness(stratify(TWO_RADII), MIXED) == Compactness.NON_COMPACT

    def test_compact_limit_is_full_torus(self):
        subgroup = limit_set_compact(stratify(curve(1, [(-1, ["1"])])), GAUSSIAN_1)
        assert subgroup.dim == 2
        assert subgroup.is_compact

    def test_compact_limit_is_translated_subtorus(self):
        s = stratify(curve(2, [(-1, ["1", "0"]), (0, ["0", "1/3"])]))
        subgroup = limit_set_compact(s, GAUSSIAN_2)
        assert subgroup.dim == 2
        assert subgroup.base.compact == (0, 0, Fraction(1, 3), 0)
        assert subgroup.is_complex

    def test_second_pole_fills_the_torus(self):
        s = stratify(curve(2, [(-2, ["1", "1"]), (-1, ["1", "-1"])]))
        assert limit_set_compact(s, GAUSSIAN_2).dim == 4


class TestAlmostRadii:

    def test_two_radii_angles(self):
        angles = kappa_and_angles(stratify(TWO_RADII), MIXED)
        assert angles.kappa == 1
        assert angles.d_kappa == 2
        assert angles.lam == ONE
        assert angles.count == 4
        assert angles.thetas() == pytest.approx([0, math.pi / 2, math.pi, 3 * math.pi / 2])

    def test_no_real_multiple_in_lattice_span(self):
        gamma = lattice(["1", "0"])
        assert kappa_and_angles(stratify(curve(2, [(-1, ["0", "1"])])), gamma) is None

    def test_diagonal_pole_has_two_directions(self):
        angles = kappa_and_angles(stratify(curve(2, [(-1, ["1", "1"])])), MIXED)
        assert angles.kappa == 1
        assert angles.thetas() == pytest.approx([0, math.pi])

    def test_compact_case_rejected(self):
        with pytest.raises(ValueError):
            kappa_and_angles(stratify(curve(1, [(-1, ["1"])])), GAUSSIAN_1)


class TestRadiusExpansion:

    def test_radius_zero_of_two_radii_curve(self):
        s = stratify(TWO_RADII)
        record = radius_expand(TWO_RADII, s, MIXED, 0)
        assert record.deltas == [2, 1, 0]
        assert record.vectors == [ExactVector.parse(["1", "0"]), ExactVector.parse(["0", "1"])]
        assert record.m == 1
        assert record.is_gamma_radius
        # C x R
        assert record.direction.dim == 3
        assert record.direction.contains((0, 0, 1, 0)) == Membership.IN
        assert record.direction.contains((0, 0, 0, 1)) == Membership.OUT

    def test_radius_one_of_two_radii_curve(self):
        record = radius_expand(TWO_RADII, stratify(TWO_RADII), MIXED, 1)
        assert record.is_gamma_radius
        # C x iR
        assert record.direction.contains((0, 0, 0, 1)) == Membership.IN
        assert record.direction.contains((0, 0, 1, 0)) == Membership.OUT

    def test_imaginary_second_pole_is_not_a_gamma_radius_at_zero(self):
        f = curve(2, [(-2, ["1", "0"]), (-1, ["0", "i"])])
        gamma = lattice(["1", "0"], ["0", "1"])
        analysis = analyze_radii(f, stratify(f), gamma)
        flags = [r.is_gamma_radius for r in analysis.radii]
        assert flags == [False, True, False, True]
        assert analysis.radii[0].vectors[1] == ExactVector.parse(["0", "i"])

    def test_radius_index_out_of_range(self):
        with pytest.raises(ValueError):
            radius_expand(TWO_RADII, stratify(TWO_RADII), MIXED, 4)

    def test_hypotheses(self):
        flags = hypothesis_flags(stratify(TWO_RADII), MIXED)
        assert flags == {'H0': True, 'H1': True, 'H2': True, 'H3': True}


class TestLimitSet:

    def test_two_radii_curve_gives_two_semi_tori(self):
        report, subgroups = limit_set_with_subgroups(TWO_RADII, MIXED)
        assert report.status == LimitStatus.COMPONENTS.value
        assert len(report.components) == 2
        assert [c.sources for c in report.components] == [[0, 2], [1, 3]]
        assert all(c.provenance == Provenance.GAMMA_RADIUS.value for c in report.components)
        assert not any(c.compact for c in report.components)
        assert not subgroups[0].same_set(subgroups[1])

    def test_empty_without_almost_radius(self):
        report = limit_set(curve(2, [(-1, ["0", "1"])]), lattice(["1", "0"]))
        assert report.status == LimitStatus.EMPTY_NO_ALMOST_RADIUS.value
        assert report.components == []

    def test_compact_branch(self):
        report = limit_set(curve(1, [(-1, ["1"])]), GAUSSIAN_1)
        assert len(report.components) == 1
        assert report.components[0].provenance == Provenance.COMPACT_BRANCH.value

    def test_pole_free_curve_is_a_point(self):
        report = limit_set(curve(1, [(0, ["27/10+16/5 i"])]), GAUSSIAN_1)
        assert report.status == LimitStatus.POINT.value
        assert report.point['compact'] == [Fraction(7, 10), Fraction(1, 5)]

    def test_imaginary_second_pole_has_one_component(self):
        f = curve(2, [(-2, ["1", "0"]), (-1, ["0", "i"])])
        report = limit_set(f, lattice(["1", "0"], ["0", "1"]))
        assert len(report.components) == 1
        assert report.components[0].sources == [1, 3]


class TestComplexHull:

    def test_whole_line(self):
        assert alw_hull(ComplexSubspace.full(1), GAUSSIAN_1).dim == 2

    def test_rational_complex_line(self):
        hull = alw_hull(ComplexSubspace.span([ExactVector.parse(["1", "0"])]), GAUSSIAN_2)
        assert hull.dim == 2
        assert hull.is_complex

    def test_irrational_line_fills_the_torus(self):
        v = ExactVector((ONE, BallScalar.from_mpmath(mp.sqrt(2))))
        assert alw_hull([v], GAUSSIAN_2).dim == 4

    def test_hull_of_two_radii_pole_space(self):
        hull = alw_for_curve(TWO_RADII, MIXED)
        assert hull.dim == 4
        assert hull.is_complex
