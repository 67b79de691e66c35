"""
RATIONAL CONE TESTS

WHAT THESE TESTS DO:
- Build cones from generators with and without orthants
- Decide salience, membership and trivial intersections
- Find the smallest separating functional with a prescribed sign pattern

WHY THIS MATTERS:
- Complete sequences of leading powers are accepted or rejected by these tests
- The functional found here fixes the reparametrization exponents
"""

from fractions import Fraction

import pytest

from src.cones import (
    IntersectionCertificate, build_cone, cone_from_facets, intersect_trivially, primitive,
    separating_lambda, verify_certificate, verify_separator,
)
from src.exceptions import Infeasible


class TestConeConstruction:

    def test_primitive(self):
        assert primitive((2, 4, -6)) == (1, 2, -3)
        assert primitive((Fraction(1, 2), Fraction(1, 3))) == (3, 2)
        assert primitive((0, 0)) == (0, 0)

    def test_salient_cone_with_nonpositive_orthant(self):
        cone = build_cone([(-1, 2)], include_orthant='nonpos')
        assert cone.is_salient
        assert cone.contains((-1, 2))
        assert cone.contains((-1, -1))
        assert not cone.contains((1, 0))

    def test_cone_that_fills_the_plane(self):
        cone = build_cone([(1, 1)], include_orthant='nonpos')
        assert not cone.is_salient
        assert len(cone.zero_face) == 2
        assert cone.contains((5, -7))

    def test_unknown_orthant(self):
        with pytest.raises(ValueError):
            build_cone([(1, 0)], include_orthant='sideways')

    def test_negate_and_includes(self):
        quadrant = build_cone([(1, 0), (0, 1)])
        assert quadrant.negate().contains((-1, -2))
        assert quadrant.includes(build_cone([(1, 1)]))
        assert not build_cone([(1, 1)]).includes(quadrant)

    def test_facet_description(self):
        half_plane = cone_from_facets([(0, 1)], 2)
        assert half_plane.contains((-3, 1))
        assert not half_plane.contains((0, -1))
        assert len(half_plane.lineality) == 1


class TestIntersections:

    def test_opposite_orthants_separate(self):
        c1 = build_cone([], include_orthant='nonneg', dim=2)
        c2 = build_cone([], include_orthant='nonpos', dim=2)
        cert = intersect_trivially(c1, c2)
        assert cert
        assert cert.separator == (1, 1)
        assert verify_separator(cert.separator, c1, c2)

    def test_common_ray_is_reported(self):
        c1 = build_cone([(1, 0)])
        c2 = build_cone([(1, 1), (1, -1)])
        cert = intersect_trivially(c1, c2)
        assert not cert
        assert cert.witness[0] > 0 and cert.witness[1] == 0
        assert verify_certificate(cert, c1, c2)

    def test_line_in_a_cone_is_recorded(self):
        # the half-plane x + y >= 0 meets the nonpositive quadrant only at 0
        c1 = build_cone([(1, -1), (-1, 1)], include_orthant='nonneg')
        c2 = build_cone([], include_orthant='nonpos', dim=2)
        cert = intersect_trivially(c1, c2)
        assert cert
        assert cert.separator is None
        assert tuple(cert.lineality) in [(1, -1), (-1, 1)]
        assert tuple(cert.weak_separator) == (1, 1)
        assert verify_certificate(cert, c1, c2)
        assert cert.to_dict()['lineality'] is not None

    def test_strict_separator_certificate_verifies(self):
        c1 = build_cone([], include_orthant='nonneg', dim=2)
        c2 = build_cone([], include_orthant='nonpos', dim=2)
        assert verify_certificate(intersect_trivially(c1, c2), c1, c2)

    def test_forged_certificates_are_rejected(self):
        c1 = build_cone([(1, -1), (-1, 1)], include_orthant='nonneg')
        c2 = build_cone([], include_orthant='nonpos', dim=2)
        assert not verify_certificate(IntersectionCertificate(True, lineality=(1, 1)), c1, c2)
        assert not verify_certificate(IntersectionCertificate(True, separator=(1, 1)), c1, c2)
        assert not verify_certificate(
            IntersectionCertificate(True, lineality=(1, -1), weak_separator=(1, 0)), c1, c2)
        assert not verify_certificate(IntersectionCertificate(False, witness=(1, 0)), c1, c2)


class TestSeparatingFunctional:
    """Smallest positive integer lambda with a sign pattern"""

    def test_minimal_l1_then_lexicographic(self):
        assert separating_lambda([(-1, 2)], [], [(1, 0), (0, 1)]) == (3, 1)

    def test_zero_constraints(self):
        assert separating_lambda([], [(1, -1)], [(1, 0)]) == (1, 1)

    def test_pattern_satisfied_by_every_positive_functional(self):
        assert separating_lambda([(-1, 0)], [], [(0, 1)]) == (1, 1)

    def test_infeasible_pattern(self):
        with pytest.raises(Infeasible):
            separating_lambda([(1, 1)], [], [])
