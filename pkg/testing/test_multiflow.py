"""
SEVERAL-VARIABLE FLOW TESTS

WHAT THESE TESTS DO:
- Validate multi-variable Laurent maps and their reparametrizations
- Find leading powers and enumerate complete leading sequences
- Build good discs, compose them with the map and verify the result
- Assemble limit components and the full decomposition

WHY THIS MATTERS:
- The pole of z1^-1 v1 + z2^-1 v2 is the standard two-divisor case; its
  single complete sequence and its disc exponents are known by hand
- Composition errors would show up as a wrong pole space on the disc
"""

from fractions import Fraction
from itertools import product
import logging

import numpy as np
import pytest

from src.cones import intersect_trivially, verify_certificate
from src.curve1d import stratify
from src.exceptions import AlphaDegenerate, DepthExceeded, DimensionMismatch, TruncationInsufficient
from src.lattice import Lattice
from src.linalg.scalars import ExactScalar, format_scalar
from src.linalg.subspaces import ExactVector
from src.multiflow import (
    MultiLaurentMap, coefficient_space, compose, decompose, enumerate_complete_sequences,
    good_disc, leading_powers, limit_component, minimal_powers, near_truncation, orbit_target,
    power_separation, reparametrize, second_generation, verify_disc,
)
from src.schema import LimitStatus, Provenance


def multimap(l, q, terms, n=None, **extra):
    data = {'l': l, 'q': q,
            'terms': [{'beta': list(b), 'theta': list(t), 'v': v} for b, t, v in terms], **extra}
    if n is not None:
        data['n'] = n
    return MultiLaurentMap.from_dict(data)


TWO_POLES = multimap(2, 2, [((-1, 0), (), ["1", "0"]), ((0, -1), (), ["0", "1"])])
GAUSSIAN_1 = Lattice.from_dict({'n': 1, 'generators': [["1"], ["i"]]})
GAUSSIAN_2 = Lattice.from_dict({'n': 2, 'generators': [["1", "0"], ["i", "0"], ["0", "1"], ["0", "i"]]})


class TestMultiLaurentMap:

    def test_dimension_taken_from_coefficients(self):
        assert TWO_POLES.ambient_dim == 2
        assert TWO_POLES.support() == [(-1, 0), (0, -1)]
        assert TWO_POLES.pole_bound == 1

    def test_more_singular_than_total_variables(self):
        with pytest.raises(DimensionMismatch):
            multimap(3, 2, [((-1, 0, 0), (), ["1"])])

    def test_negative_regular_exponent_rejected(self):
        with pytest.raises(ValueError):
            multimap(1, 2, [((-1,), (-1,), ["1"])])

    def test_numerical_evaluation(self):
        value = TWO_POLES.evaluate([0.5, 0.25])
        assert abs(value[0] - 2) < 1e-12 and abs(value[1] - 4) < 1e-12

    def test_reparametrization_expands_units(self):
        F = multimap(1, 1, [((-1,), (), ["1"])])
        G = reparametrize(F, ["2"], order=2)
        assert G.coefficients((-1,))[()] == ExactVector.parse(["1/2"])
        assert G.coefficients((0,))[()] == ExactVector.parse(["-1/4"])
        assert G.coefficients((1,))[()] == ExactVector.parse(["1/8"])
        assert G.beta_truncation == 2

    def test_reparametrization_needs_nonzero_units(self):
        with pytest.raises(ValueError):
            reparametrize(TWO_POLES, ["1", "0"], order=2)


class TestLeadingPowers:

    def test_minimal_negative_powers(self):
        F = multimap(2, 2, [((-1, 0), (), ["1"]), ((-1, 1), (), ["1"]),
                            ((0, -2), (), ["1"]), ((1, -1), (), ["1"])])
        assert leading_powers(F) == [(-1, 0), (0, -2)]

    def test_minimal_powers_of_a_chain(self):
        assert minimal_powers([(0, 0), (1, 1), (0, 1)]) == [(0, 0)]

    def test_coefficient_space_spans_taylor_coefficients(self):
        F = multimap(1, 2, [((-1,), (0,), ["1", "0"]), ((-1,), (1,), ["0", "1"])])
        assert coefficient_space(F, (-1,)).dim == 2

    def test_open_tail_blocks_the_span(self):
        F = multimap(1, 2, [((-1,), (0,), ["1", "0"])], open_tails=[[-1]])
        with pytest.raises(TruncationInsufficient):
            coefficient_space(F, (-1,))

    def test_vanishing_coefficient(self):
        with pytest.raises(ValueError):
            coefficient_space(TWO_POLES, (5, 5))

    def test_powers_near_the_truncation_warn(self, caplog):
        F = multimap(2, 2, [((-1, 0), (), ["1"]), ((0, -3), (), ["1"])], trunc={'beta': 0})
        with caplog.at_level(logging.WARNING):
            assert leading_powers(F) == [(-1, 0), (0, -3)]
        assert near_truncation(F, [(-1, 0), (0, -3)]) == [(-1, 0)]
        warnings = [r for r in caplog.records if r.levelno == logging.WARNING]
        assert any("beta truncation" in r.getMessage() for r in warnings)

    def test_untruncated_map_is_never_near(self, caplog):
        with caplog.at_level(logging.WARNING):
            leading_powers(TWO_POLES)
        assert near_truncation(TWO_POLES, leading_powers(TWO_POLES)) == []
        assert not [r for r in caplog.records if "beta truncation" in r.getMessage()]


class TestSequenceEnumeration:
    """Depth-first search over leading sequences"""

    def test_two_poles_single_complete_sequence(self):
        result = enumerate_complete_sequences(TWO_POLES)
        assert len(result.sequences) == 1
        seq = result.sequences[0]
        assert seq.betas == [(-1, 0), (0, -1)]
        assert seq.lam == (1, 1)
        assert seq.b_zero == []
        assert seq.space.dim == 2
        assert not result.depth_exceeded

    def test_constant_map_completes_at_the_root(self):
        F = multimap(2, 2, [((0, 0), (), ["1/2"])])
        result = enumerate_complete_sequences(F)
        assert [s.betas for s in result.sequences] == [[]]
        assert result.sequences[0].b_zero == [(0, 0)]

    def test_mixed_power_gives_two_sequences(self):
        F = multimap(2, 2, [((-1, 1), (), ["1"])])
        result = enumerate_complete_sequences(F)
        assert [s.betas for s in result.sequences] == [[], [(-1, 1)]]
        assert [s.lam for s in result.sequences] == [(1, 2), (2, 1)]

    def test_depth_bound(self):
        result = enumerate_complete_sequences(TWO_POLES, depth_bound=1)
        assert result.depth_exceeded
        assert result.sequences == []
        with pytest.raises(DepthExceeded):
            enumerate_complete_sequences(TWO_POLES, depth_bound=1, strict=True)


class TestGoodDisc:

    def test_power_separation(self):
        assert power_separation(0, 1) == ((1,), 1)
        assert power_separation(2, 2) == ((4, 5), 12)

    def test_single_variable_disc(self):
        F = multimap(1, 1, [((-1,), (), ["1"])])
        seq = enumerate_complete_sequences(F).sequences[0]
        disc = good_disc(seq, F)
        assert (disc.N0, disc.gamma, disc.M) == (0, (1,), 1)
        assert verify_disc(seq, F, disc) == {'pole_space_ok': True, 'constant_ok': True, 'truncation': 1}

    def test_compose_double_pole(self):
        F = multimap(1, 1, [((-2,), (), ["1"])])
        seq = enumerate_complete_sequences(F).sequences[0]
        curve = compose(F, good_disc(seq, F), out_truncation=1)
        assert curve.terms == {-2: ExactVector.parse(["1"]), -1: ExactVector.parse(["-2"]),
                               0: ExactVector.parse(["3"])}
        assert curve.truncation == 1

    def test_two_poles_disc(self):
        seq = enumerate_complete_sequences(TWO_POLES).sequences[0]
        disc = good_disc(seq, TWO_POLES)
        assert disc.N0 == 1
        assert disc.gamma == (4, 5)
        assert disc.M == 12
        assert disc.phi.monomial_exponents == (12, 12)
        report = verify_disc(seq, TWO_POLES, disc)
        assert report['pole_space_ok'] and report['constant_ok']
        assert stratify(compose(TWO_POLES, disc)).pole_space.dim == 2

    def test_zero_alpha_is_degenerate(self):
        seq = enumerate_complete_sequences(TWO_POLES).sequences[0]
        with pytest.raises(AlphaDegenerate):
            good_disc(seq, TWO_POLES, alpha=["0", "1"])

    def test_orbit_target_of_constant_part(self):
        F = multimap(2, 2, [((0, 0), (), ["1/2"])])
        seq = enumerate_complete_sequences(F).sequences[0]
        assert orbit_target(seq, F, ["1", "1"]) == ExactVector.parse(["1/2"])


class TestDecomposition:

    def test_two_poles_fill_the_torus(self):
        report = decompose(TWO_POLES, GAUSSIAN_2)
        assert report.status == LimitStatus.COMPONENTS.value
        assert len(report.components) == 1
        component = report.components[0]
        assert component.provenance == Provenance.SEQUENCE.value
        assert component.sources == [[[-1, 0], [0, -1]]]
        assert component.subgroup['dim'] == 4
        assert not component.heuristic

    def test_constant_map_is_a_point(self):
        F = multimap(2, 2, [((0, 0), (), ["1/2"])])
        report = decompose(F, GAUSSIAN_1)
        assert len(report.components) == 1
        subgroup = report.components[0].subgroup
        assert subgroup['dim'] == 0
        assert subgroup['base']['compact'] == [Fraction(1, 2), 0]

    def test_non_compact_torus_is_heuristic(self):
        gamma = Lattice.from_dict({'n': 2, 'generators': [["1", "0"], ["0", "1"]]})
        report = decompose(TWO_POLES, gamma)
        assert report.components[0].heuristic
        assert any("not compact" in note for note in report.notes)

    def test_parametric_bounded_part_is_reported(self):
        # z1/z2 + z2/z1: the empty sequence keeps both powers in its bounded part
        F = multimap(2, 2, [((1, -1), (), ["1"]), ((-1, 1), (), ["1"])])
        report = decompose(F, GAUSSIAN_1)
        assert len(report.components) == 2
        parametric = [c for c in report.components if c.bounded_part is not None]
        assert len(parametric) == 1
        component = parametric[0]
        assert component.sources == [[]]
        assert component.subgroup['dim'] == 0
        bounded = component.bounded_part
        assert bounded['powers'] == [[-1, 1], [1, -1]]
        assert bounded['orbit_sample_count'] == 64
        assert bounded['coefficients'][0]['v'] == {'-1 1': ["1"], '1 -1': ["1"]}
        intersection = component.certificates['cones']['intersection']
        assert intersection['separator'] is None
        assert intersection['lineality'] is not None

        full = [c for c in report.components if c.bounded_part is None]
        assert full[0].subgroup['dim'] == 2

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            decompose(TWO_POLES, GAUSSIAN_1)

    def test_limit_component_translates(self):
        seq = enumerate_complete_sequences(TWO_POLES).sequences[0]
        component = limit_component(seq, TWO_POLES, GAUSSIAN_2)
        assert component.finite_c
        assert len(component.translates) == 1
        assert component.torus.dim == 4

    def test_second_generation_records_parent(self):
        seq = enumerate_complete_sequences(TWO_POLES).sequences[0]
        parent = limit_component(seq, TWO_POLES, GAUSSIAN_2)
        refined = second_generation(parent, multimap(2, 2, [((0, 0), (), ["1/2", "0"])]), GAUSSIAN_2)
        assert refined.details['parent'] == [[-1, 0], [0, -1]]
        assert len(refined.components) == 1


def random_scalar(rng):
    while True:
        re, im = (int(x) for x in rng.integers(-3, 4, size=2))
        if re or im:
            break
    den = int(rng.integers(1, 4))
    return format_scalar(ExactScalar(Fraction(re, den), Fraction(im, den)))


def random_vector(rng, n):
    entries = [random_scalar(rng) if rng.random() < 0.6 else "0" for _ in range(n)]
    if all(e == "0" for e in entries):
        entries[int(rng.integers(0, n))] = random_scalar(rng)
    return entries


def random_map(rng, l, n, max_terms, spread):
    """A sparse map with distinct (beta, theta) keys, so no coefficient cancels."""
    q = l + int(rng.integers(0, 2))
    count = int(rng.integers(1, max_terms + 1))
    keys = set()
    while len(keys) < count:
        beta = tuple(int(x) for x in rng.integers(-spread, spread + 1, size=l))
        theta = tuple(int(x) for x in rng.integers(0, 3, size=q - l))
        keys.add((beta, theta))
    terms = [(beta, theta, random_vector(rng, n)) for beta, theta in sorted(keys)]
    return multimap(l, q, terms, n=n), {beta for beta, _ in keys}


def leading_by_box_scan(support, l, spread):
    """Walk the box in lexicographic order, tracking which points have a power below them."""
    below = {}
    leading = []
    for beta in product(range(-spread, spread + 1), repeat=l):
        lower = [beta[:j] + (beta[j] - 1,) + beta[j + 1:] for j in range(l)]
        covered = any(below.get(b, False) for b in lower)
        if beta in support and not covered and any(x < 0 for x in beta):
            leading.append(beta)
        below[beta] = beta in support or covered
    return leading


def smallest_lambda_in_box(seq, l, bound):
    def value(lam, b):
        return sum(x * y for x, y in zip(lam, b))

    best = None
    for lam in product(range(1, bound + 1), repeat=l):
        if (all(value(lam, b) < 0 for b in seq.betas)
                and all(value(lam, b) == 0 for b in seq.b_zero)
                and all(value(lam, b) > 0 for b in seq.b_plus)):
            if best is None or (sum(lam), lam) < (sum(best), best):
                best = lam
    return best


class TestRandomMaps:
    """Seeded random sparse maps against independent brute-force answers"""

    def test_leading_powers_match_a_box_scan(self):
        rng = np.random.default_rng(20240501)
        for _ in range(200):
            l = int(rng.integers(1, 4))
            F, support = random_map(rng, l, int(rng.integers(1, 3)), max_terms=12, spread=4)
            assert leading_powers(F) == leading_by_box_scan(support, l, 4)

    def test_reparametrization_keeps_leading_data(self):
        rng = np.random.default_rng(31)
        for _ in range(200):
            l = int(rng.integers(1, 4))
            F, _ = random_map(rng, l, int(rng.integers(1, 3)), max_terms=12, spread=4)
            G = reparametrize(F, [random_scalar(rng) for _ in range(l)], order=1)
            kept = [b for b in leading_powers(F) if sum(b) < G.beta_truncation]
            assert leading_powers(G) == kept
            for beta in kept:
                assert coefficient_space(G, beta).basis == coefficient_space(F, beta).basis

    def test_lambda_and_cone_certificates_of_complete_sequences(self):
        rng = np.random.default_rng(11)
        checked = 0
        for _ in range(1000):
            if checked >= 100:
                break
            l = int(rng.integers(2, 4))
            F, _ = random_map(rng, l, int(rng.integers(1, 3)), max_terms=8, spread=3)
            for seq in enumerate_complete_sequences(F).sequences:
                best = smallest_lambda_in_box(seq, l, bound=12)
                if best is None:
                    assert sum(seq.lam) > 12
                else:
                    assert tuple(seq.lam) == best
                cert = intersect_trivially(seq.sigma_geq, seq.sigma_minus)
                assert cert.trivial
                assert verify_certificate(cert, seq.sigma_geq, seq.sigma_minus)
                checked += 1
        assert checked >= 100
