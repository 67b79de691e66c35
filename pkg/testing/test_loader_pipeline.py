"""
LOADER AND PIPELINE TESTS - Problem files in, reports and exit codes out.

WHAT THESE TESTS DO:
- Load the shipped problem files and hand-written variants of them
- Reject malformed JSON, schema violations and dimension clashes
- Run every command family through AnalysisPipeline
- Check the exit code each failure class maps to
- Export reports and tables

WHY THIS MATTERS:
- Every run starts from a problem file; a silently ignored field changes
  the experiment
- Scripts rely on exit codes to tell a truncation problem from a bad file
"""

from pathlib import Path
import json
import math

import pytest

from src.exceptions import DimensionMismatch
from src.loaders import ProblemLoader, SchemaValidationException
from src.pipeline import AnalysisPipeline

PROBLEMS = Path(__file__).resolve().parents[1] / "INPUT" / "problems"


def load(name, **overrides):
    problem = ProblemLoader().load(PROBLEMS / name)
    return problem.with_overrides(**overrides) if overrides else problem


def test_load_two_radii_problem():
    """TEST 1: The shipped two-radii problem loads with its harness settings."""
    loader = ProblemLoader()
    problem = loader.load(PROBLEMS / "two_radii.json")
    assert problem.lattice.rank == 3
    assert problem.curve.pole_bound == 2
    assert problem.blocks == ['lattice', 'curve']
    assert problem.config.a_grid == [2.0 ** -k for k in range(4, 9)]
    assert problem.config.sector_A == 1.0
    report = loader.get_load_report()
    assert report['total_errors'] == 0
    assert 'seed' in report['defaults_applied']


def test_aliases_and_plain_numbers():
    """TEST 2: Aliased field names and JSON numbers are accepted."""
    loader = ProblemLoader()
    problem = loader.load({
        "Lattice": {"dim": 1, "gens": [[1], ["i"]]},
        "curve": {"dim": 1, "terms": [{"exponent": -1, "vector": [0.5]}]},
    })
    assert problem.curve.terms[-1].to_json() == ["1/2"]
    assert problem.lattice.is_compact
    # no schema_version is a warning, not an error
    assert loader.get_load_report()['total_warnings'] == 1


def test_malformed_json():
    """TEST 3: Malformed JSON is a schema error with exit code 2."""
    loader = ProblemLoader()
    with pytest.raises(SchemaValidationException) as info:
        loader.load('{"lattice": ')
    assert info.value.exit_code == 2
    assert loader.get_load_report()['total_errors'] == 1


def test_missing_file():
    with pytest.raises(SchemaValidationException):
        ProblemLoader().load(PROBLEMS / "does_not_exist.json")


def test_schema_violations():
    """TEST 4: Wrong version, two maps at once and bad harness values."""
    lattice = {"n": 1, "generators": [["1"], ["i"]]}
    curve = {"n": 1, "terms": [{"e": -1, "v": ["1"]}]}
    with pytest.raises(SchemaValidationException):
        ProblemLoader().load({"schema_version": 7, "lattice": lattice, "curve": curve})
    with pytest.raises(SchemaValidationException):
        ProblemLoader().load({"lattice": lattice, "curve": curve,
                              "multimap": {"l": 1, "n": 1, "terms": [{"beta": [-1], "v": ["1"]}]}})
    with pytest.raises(SchemaValidationException):
        ProblemLoader().load({"lattice": lattice, "curve": curve, "harness": {"engine": "dice"}})
    with pytest.raises(SchemaValidationException):
        ProblemLoader().load({"lattice": lattice, "curve": curve, "options": {"mass_method": "guess"}})


def test_dimension_clash():
    """TEST 5: A curve in C^2 against a lattice in C^1."""
    loader = ProblemLoader()
    with pytest.raises(DimensionMismatch):
        loader.load({"lattice": {"n": 1, "generators": [["1"]]},
                     "curve": {"n": 2, "terms": [{"e": -1, "v": ["1", "0"]}]}})
    assert loader.load_errors[-1]['field'] == 'curve'


def test_unknown_fields():
    """TEST 6: Unknown fields warn by default and fail in strict mode."""
    data = {"lattice": {"n": 1, "generators": [["1"]]}, "colour": "blue"}
    loader = ProblemLoader()
    loader.load(data)
    assert loader.unknown_fields == ['colour']
    with pytest.raises(SchemaValidationException):
        ProblemLoader(strict=True).load(data)


def test_overrides():
    problem = load("two_radii.json", samples=1024, depth_bound=3, seed=None)
    assert problem.config.samples == 1024
    assert problem.config.seed == 0
    assert problem.options['depth_bound'] == 3
    with pytest.raises(KeyError):
        problem.with_overrides(colour='blue')


# ============================================================================
# PIPELINE
# ============================================================================

def test_pole_free_curve_is_a_single_point():
    """TEST 7: No pole means exit 0 and the point pi(f(0))."""
    pipeline = AnalysisPipeline(load("pole_free.json"))
    report, code = pipeline.run('analyze-curve')
    assert code == 0
    assert report['status'] == 'single-point'
    assert float(report['point']['compact'][0]) == 0.5
    report, code = pipeline.run('limit-set')
    assert code == 0
    assert report['status'] == 'point'


def test_two_radii_limit_set():
    """TEST 8: Two distinct real semi-tori."""
    pipeline = AnalysisPipeline(load("two_radii.json"))
    report, code = pipeline.run('limit-set')
    assert code == 0
    assert report['command'] == 'limit-set'
    assert len(report['components']) == 2
    assert [c['sources'] for c in report['components']] == [[0, 2], [1, 3]]


def test_radii_and_analysis():
    pipeline = AnalysisPipeline(load("two_radii.json"))
    report, code = pipeline.run('radii')
    assert code == 0
    assert report['gamma_radii'] == [0, 1, 2, 3]
    report, _ = pipeline.run('analyze-curve')
    assert report['compactness'] == 'non-compact'
    assert report['hypotheses'] == {'H0': True, 'H1': True, 'H2': True, 'H3': True}


def test_missing_block_is_a_schema_error():
    """TEST 9: Asking for sequences of a problem without a multimap."""
    pipeline = AnalysisPipeline(load("two_radii.json"))
    report, code = pipeline.run('sequences')
    assert code == 2
    assert report['status'] == 'error'
    assert pipeline.get_statistics()['failed'] == 1


def test_unknown_command():
    with pytest.raises(KeyError):
        AnalysisPipeline(load("two_radii.json")).run('integrate')


def test_multimap_commands():
    """TEST 10: Leading powers, sequences, discs and the decomposition."""
    pipeline = AnalysisPipeline(load("two_poles_multimap.json"))
    report, code = pipeline.run('leading-powers')
    assert code == 0
    assert report['leading_powers'] == [[-1, 0], [0, -1]]
    assert report['coefficient_space_dims'] == {'-1 0': 1, '0 -1': 1}

    report, code = pipeline.run('sequences')
    assert code == 0
    assert [s['betas'] for s in report['sequences']] == [[[-1, 0], [0, -1]]]
    assert report['sequences'][0]['lambda'] == [1, 1]

    report, code = pipeline.run('good-disc')
    assert code == 0
    disc = report['discs'][0]
    assert disc['disc']['M'] == 12
    assert disc['disc']['gamma'] == [4, 5]
    assert disc['verification']['pole_space_ok'] and disc['verification']['constant_ok']

    report, code = pipeline.run('limit-set')
    assert code == 0
    assert len(report['components']) == 1
    assert report['components'][0]['subgroup']['dim'] == 4


def test_leading_powers_near_truncation_are_noted():
    """TEST 10b: Leading powers within l of the beta truncation carry a note."""
    data = json.loads((PROBLEMS / "two_poles_multimap.json").read_text())
    data['multimap']['trunc'] = {'beta': 0}
    loader = ProblemLoader()
    pipeline = AnalysisPipeline(loader.load(data))
    assert loader.get_load_report()['unknown_fields'] == []
    report, code = pipeline.run('leading-powers')
    assert code == 0
    assert report['leading_powers'] == [[-1, 0], [0, -1]]
    assert len(report['notes']) == 2
    assert all('beta truncation 0' in note for note in report['notes'])

    report, _ = AnalysisPipeline(load("two_poles_multimap.json")).run('leading-powers')
    assert 'notes' not in report


def test_depth_bound_exit_code():
    """TEST 11: A depth bound that cuts the search exits with 5."""
    pipeline = AnalysisPipeline(load("two_poles_multimap.json", depth_bound=1))
    report, code = pipeline.run('sequences')
    assert code == 5
    assert report['error']['type'] == 'DepthExceeded'
    assert report['partial'] == []


def test_alw_hull_of_subspace():
    pipeline = AnalysisPipeline(load("alw_subspace.json"))
    report, code = pipeline.run('alw-hull')
    assert code == 0
    assert report['source'] == 'subspace'
    assert report['provenance'] == 'alw-hull'
    assert report['subgroup']['dim'] == 2
    assert report['subgroup']['complex']


def test_mass_check_table(tmp_path):
    """TEST 12: Quadrature masses of a pure pole and their CSV export."""
    problem = load("compact_annulus.json", a_grid=[2.0 ** -5, 2.0 ** -6])
    pipeline = AnalysisPipeline(problem, output_dir=str(tmp_path))
    report, code = pipeline.run('mass-check')
    assert code == 0
    assert report['mode'] == 'quadrature'
    assert report['lambda_zero'] == pytest.approx(1.5 * math.pi, rel=1e-8)
    assert report['max_deviation'] < 1e-6
    path = pipeline.export_to_csv('mass-check')
    assert path.read_text().splitlines()[0] == 'a,mass,normalized,ratio,deviation'


def test_verify_equidist_structure():
    problem = load("compact_annulus.json", a_grid=[0.25, 0.125], samples=4096)
    pipeline = AnalysisPipeline(problem)
    report, code = pipeline.run('verify-equidist')
    assert code == 0
    assert len(report['tests']) == 2
    summary = report['summaries'][0]
    assert summary['source'] == 'compact-branch'
    assert len(summary['max_by_scale']) == 2
    assert 'monotone_within_noise' in summary
    assert len(pipeline.tables['samples']) == 4096


def test_export_report(tmp_path):
    pipeline = AnalysisPipeline(load("two_radii.json"), output_dir=str(tmp_path))
    assert pipeline.export_report('limit-set') is None
    pipeline.run('limit-set')
    path = pipeline.export_report('limit-set')
    data = json.loads(path.read_text())
    assert data['status'] == 'components'
    assert pipeline.export_to_parquet('nothing') is None
