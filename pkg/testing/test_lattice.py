"""
LATTICE AND CLOSED SUBGROUP TESTS

WHAT THESE TESTS DO:
- Reduce points of E to split coordinates of T = E / Gamma
- Decide Gamma_R membership for exact and ball vectors
- Close images of real subspaces and measure distances to the result
- List the characters that are constant on a subgroup
- Check seeded random subspaces against points sampled on their images

WHY THIS MATTERS:
- Every limit set is reported as a list of closed subgroups; a wrong
  distance makes the sampling checks accept or reject the wrong set
- When Gamma has lower rank the transverse coordinates do not wrap, and a
  direction with a transverse part winds far before points line up again
"""

from fractions import Fraction
import math

import mpmath as mp
import numpy as np
import pytest

from src.exceptions import DegenerateLattice, DimensionMismatch
from src.lattice import Lattice, dual_annihilator, subgroup_closure, torus_distance
from src.linalg.scalars import BallScalar
from src.linalg.subspaces import ExactVector, RealSubspace
from src.schema import Membership

GAUSSIAN_1 = Lattice.from_dict({'n': 1, 'generators': [["1"], ["i"]]})
GAUSSIAN_2 = Lattice.from_dict({'n': 2, 'generators': [["1", "0"], ["i", "0"], ["0", "1"], ["0", "i"]]})
# Z x Z[i]: the imaginary axis of the first coordinate is transverse
SPLIT = Lattice.from_dict({'n': 2, 'generators': [["1", "0"], ["0", "1"], ["0", "i"]]})


def _ball(value, bits=256):
    return BallScalar.from_exact(value, bits)


def _root(k, bits=256):
    with mp.workprec(2 * bits):
        return BallScalar.from_mpmath(mp.sqrt(k), bits)


def reduced(lattice, points):
    return lattice.reduce_many(np.atleast_2d(np.asarray(points, dtype=float)), realified=True)


class TestLattice:

    def test_reduce_exact_point(self):
        p = GAUSSIAN_1.reduce(ExactVector.parse(["27/10+16/5 i"]))
        assert p.compact == (Fraction(7, 10), Fraction(1, 5))
        assert p.transverse == ()
        assert p.is_exact

    def test_reduce_keeps_transverse_coordinates(self):
        p = SPLIT.reduce(ExactVector.parse(["5/2+3 i", "1/3"]))
        assert p.compact == (Fraction(1, 2), Fraction(1, 3), Fraction(0))
        assert p.transverse == (Fraction(3),)

    def test_float_reduction(self):
        p = GAUSSIAN_1.reduce(np.array([2.7 + 3.2j]))
        assert abs(p.compact[0] - 0.7) < 1e-12
        assert abs(p.compact[1] - 0.2) < 1e-12

    def test_compactness(self):
        assert GAUSSIAN_2.is_compact
        assert not SPLIT.is_compact
        assert SPLIT.rank == 3
        assert SPLIT.transverse_dim == 1

    def test_dependent_generators_rejected(self):
        with pytest.raises(DegenerateLattice):
            Lattice.from_dict({'n': 1, 'generators': [["1"], ["i"], ["1+i"]]})

    def test_generator_length_mismatch(self):
        with pytest.raises(DimensionMismatch):
            Lattice.from_dict({'n': 2, 'generators': [["1", "0"], ["1"]]})

    def test_gamma_r_membership(self):
        assert SPLIT.in_gamma_r(ExactVector.parse(["1/3", "2+i"])) == Membership.IN
        assert SPLIT.in_gamma_r(ExactVector.parse(["i", "0"])) == Membership.OUT

    def test_gamma_r_membership_of_balls(self):
        root2 = _root(2)
        inside = (root2, _ball(0), _ball(0), _ball(0))
        outside = (_ball(0), root2, _ball(0), _ball(0))
        assert SPLIT.in_gamma_r(inside, height=10 ** 6) == Membership.IN
        assert SPLIT.in_gamma_r(outside, height=10 ** 6) == Membership.OUT

    def test_torus_distance_wraps(self):
        p = GAUSSIAN_1.reduce(ExactVector.parse(["1/10+1/10 i"]))
        q = GAUSSIAN_1.reduce(ExactVector.parse(["9/10+9/10 i"]))
        assert abs(torus_distance(p, q, GAUSSIAN_1) - math.sqrt(0.08)) < 1e-12

    def test_transverse_distance_does_not_wrap(self):
        p = SPLIT.reduce(ExactVector.parse(["0", "0"]))
        q = SPLIT.reduce(ExactVector.parse(["2 i", "0"]))
        assert abs(SPLIT.torus_distance(p, q) - 2.0) < 1e-12


class TestClosedSubgroups:

    def test_rational_line_is_a_closed_circle(self):
        closure = subgroup_closure(RealSubspace.span([(1, 2)], 2), ExactVector.zeros(1), GAUSSIAN_1)
        assert closure.dim == 1
        assert closure.is_compact
        on = GAUSSIAN_1.reduce(ExactVector.parse(["1/2"]))
        off = GAUSSIAN_1.reduce(ExactVector.parse(["1/2+1/2 i"]))
        assert closure.distance_to_point(on) < 1e-12
        assert abs(closure.distance_to_point(off) - 0.5 / math.sqrt(5)) < 1e-12

    def test_line_with_a_transverse_part(self):
        # (1+i)R x 0 in C x C/Z[i]: the transverse coordinate grows with s
        line = RealSubspace.span([(1, 1, 0, 0)], 4)
        closure = subgroup_closure(line, ExactVector.zeros(2), SPLIT)
        assert closure.dim == 1
        assert not closure.is_compact
        s = np.array([0.3, 2.5, 40.0, -77.7])
        compact, transverse = reduced(SPLIT, np.stack([s, s, 0 * s, 0 * s], axis=1))
        assert np.all(closure.distance(compact, transverse) < 1e-9)

        compact, transverse = reduced(SPLIT, np.stack([s, s + 0.5, 0 * s, 0 * s], axis=1))
        assert np.allclose(closure.distance(compact, transverse), 0.5 / math.sqrt(2), atol=1e-9)

    def test_same_set_up_to_lattice_translation(self):
        line = RealSubspace.span([(1, 2)], 2)
        base = subgroup_closure(line, ExactVector.zeros(1), GAUSSIAN_1)
        shifted = subgroup_closure(line, ExactVector.parse(["1+i"]), GAUSSIAN_1)
        moved = subgroup_closure(line, ExactVector.parse(["1/2+1/2 i"]), GAUSSIAN_1)
        assert base.same_set(shifted)
        assert not base.same_set(moved)

    def test_coverage_needs_a_compact_subgroup(self):
        closure = subgroup_closure(RealSubspace.span([(1, 1, 0, 0)], 4), ExactVector.zeros(2), SPLIT)
        compact, transverse = reduced(SPLIT, [[0.0, 0.0, 0.0, 0.0]])
        assert closure.coverage(compact, transverse, 0.05) is None

    def test_circle_is_covered_by_its_samples(self):
        closure = subgroup_closure(RealSubspace.span([(1, 2)], 2), ExactVector.zeros(1), GAUSSIAN_1)
        s = np.arange(2000) / 2000
        compact, transverse = reduced(GAUSSIAN_1, np.stack([s, 2 * s], axis=1))
        assert closure.coverage(compact, transverse, 0.05) == 1.0
        compact, transverse = reduced(GAUSSIAN_1, np.stack([s / 2, s], axis=1))
        assert closure.coverage(compact, transverse, 0.05) < 0.9


class TestCharacters:

    def test_annihilators_of_a_circle(self):
        closure = subgroup_closure(RealSubspace.span([(1, 2)], 2), ExactVector.zeros(1), GAUSSIAN_1)
        table = dual_annihilator(closure, GAUSSIAN_1, 2)
        assert table.annihilators == [(-2, 1), (0, 0), (2, -1)]
        assert len(table.non_annihilators) == 22
        assert set(table.witnesses) == set(table.non_annihilators)

    def test_only_the_trivial_character_on_the_full_torus(self):
        closure = subgroup_closure(RealSubspace.full(2), ExactVector.zeros(1), GAUSSIAN_1)
        assert dual_annihilator(closure, GAUSSIAN_1, 3).annihilators == [(0, 0)]


class TestBallDirections:
    """Directions carried as certified balls"""

    def test_rational_ball_line_is_recognized(self):
        line = RealSubspace.span([(_ball(1), _ball(2), _ball(0), _ball(0))], 4)
        closure = subgroup_closure(line, ExactVector.zeros(2), GAUSSIAN_2)
        assert closure.dim == 1
        assert closure.direction.is_exact
        assert closure.direction.contains((1, 2, 0, 0)) == Membership.IN

    def test_irrational_line_closes_to_a_plane(self):
        line = RealSubspace.span([(_ball(1), _root(2), _ball(0), _ball(0))], 4)
        closure = subgroup_closure(line, ExactVector.zeros(2), GAUSSIAN_2)
        assert closure.dim == 2
        assert closure.is_compact
        s = np.linspace(-30.0, 30.0, 41)
        compact, transverse = reduced(GAUSSIAN_2, np.stack([s, math.sqrt(2) * s, 0 * s, 0 * s], axis=1))
        assert np.all(closure.distance(compact, transverse) < 1e-9)
        compact, transverse = reduced(GAUSSIAN_2, [[0.0, 0.0, 0.3, 0.0]])
        assert abs(closure.distance(compact, transverse)[0] - 0.3) < 1e-9

    def test_ball_line_leaving_gamma_r_stays_a_line(self):
        line = RealSubspace.span([(_ball(1), _root(2), _ball(0), _ball(0))], 4)
        closure = subgroup_closure(line, ExactVector.zeros(2), SPLIT)
        assert closure.dim == 1
        assert not closure.direction.is_exact
        s = np.array([0.7, 12.0, -55.5])
        compact, transverse = reduced(SPLIT, np.stack([s, math.sqrt(2) * s, 0 * s, 0 * s], axis=1))
        assert np.all(closure.distance(compact, transverse) < 1e-9)


def _unit_rows(rng, columns, d):
    """d integer rows with a unit pivot each; every other column is +-1 or 0 in one row only."""
    pivots = sorted(int(p) for p in rng.choice(columns, size=d, replace=False))
    rows = [[0] * len(columns) for _ in range(d)]
    positions = list(columns)
    for j, p in enumerate(pivots):
        rows[j][positions.index(p)] = 1
    for k, col in enumerate(positions):
        if col not in pivots:
            rows[int(rng.integers(0, d))][k] = int(rng.integers(-1, 2))
    return rows


def _random_translation(rng, size):
    return [Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 7))) for _ in range(size)]


class TestRandomClosures:
    """Seeded subspaces: sampled points of pi(t + F) lie on the computed closure"""

    def test_rational_subspaces_of_a_compact_torus(self):
        rng = np.random.default_rng(5)
        for _ in range(8):
            d = int(rng.integers(1, 3))
            rows = _unit_rows(rng, [0, 1, 2, 3], d)
            t = _random_translation(rng, 4)
            closure = subgroup_closure(RealSubspace.span(rows, 4), t, GAUSSIAN_2)
            assert closure.dim == d
            assert closure.is_compact

            directions = np.array(rows, dtype=float)
            offset = np.array([float(x) for x in t])
            far = rng.uniform(-40.0, 40.0, size=(50, d))
            compact, transverse = reduced(GAUSSIAN_2, offset + far @ directions)
            assert np.all(closure.distance(compact, transverse) < 1e-9)

            steps = 2000 if d == 1 else 120
            axis = np.arange(steps) / steps
            grid = np.stack(np.meshgrid(*([axis] * d), indexing='ij'), axis=-1).reshape(-1, d)
            compact, transverse = reduced(GAUSSIAN_2, offset + grid @ directions)
            assert closure.coverage(compact, transverse, 0.05) >= 0.99

    def test_rational_subspaces_with_transverse_direction(self):
        rng = np.random.default_rng(17)
        for _ in range(12):
            leaving = [Fraction(int(rng.integers(-6, 7)), int(rng.integers(1, 5))) for _ in range(3)]
            rows = [[leaving[0], Fraction(1), leaving[1], leaving[2]]]
            if rng.random() < 0.5:
                compact_row = _unit_rows(rng, [0, 2, 3], 1)[0]
                rows.append([compact_row[0], 0, compact_row[1], compact_row[2]])
            t = _random_translation(rng, 4)
            closure = subgroup_closure(RealSubspace.span(rows, 4), t, SPLIT)
            assert closure.dim == len(rows)
            assert not closure.is_compact

            directions = np.array([[float(x) for x in row] for row in rows])
            offset = np.array([float(x) for x in t])
            params = np.column_stack([rng.uniform(-60.0, 60.0, size=40)]
                                     + [rng.uniform(-5.0, 5.0, size=40) for _ in rows[1:]])
            compact, transverse = reduced(SPLIT, offset + params @ directions)
            assert np.all(closure.distance(compact, transverse) < 1e-9)
