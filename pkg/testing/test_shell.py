"""
COMMAND-LINE TESTS

WHAT THESE TESTS DO:
- Run main() the way the console script does and read stdout
- Check flag overrides, CSV output and exports
- Check the exit code contract for bad input

WHY THIS MATTERS:
- The shell is what batch scripts call; its stdout must stay parseable
  JSON and its exit codes must not drift
"""

from pathlib import Path
import json

from src.pipeline.shell import build_parser, main, render

PROBLEMS = Path(__file__).resolve().parents[1] / "INPUT" / "problems"


def problem(name):
    return str(PROBLEMS / name)


class TestShell:

    def test_limit_set_json(self, capsys):
        code = main(['limit-set', problem('two_radii.json'), '-q'])
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report['status'] == 'components'
        assert len(report['components']) == 2

    def test_pole_free_exit_zero(self, capsys):
        code = main(['analyze-curve', problem('pole_free.json'), '-q'])
        assert code == 0
        assert json.loads(capsys.readouterr().out)['status'] == 'single-point'

    def test_depth_flag(self, capsys):
        code = main(['sequences', problem('two_poles_multimap.json'), '--depth', '1', '-q'])
        assert code == 5
        captured = capsys.readouterr()
        assert 'DepthExceeded' in captured.err
        assert json.loads(captured.out)['status'] == 'error'

    def test_missing_problem_file(self, capsys):
        assert main(['limit-set', problem('nowhere.json'), '-q']) == 2
        assert 'error' in capsys.readouterr().err

    def test_unknown_command(self):
        assert main(['integrate', problem('two_radii.json')]) == 2

    def test_bad_grid_flag(self):
        assert main(['mass-check', problem('compact_annulus.json'), '--a-grid', '2^-4..3^-5', '-q']) == 2

    def test_csv_output(self, capsys):
        code = main(['mass-check', problem('compact_annulus.json'), '--a-grid', '2^-5..2^-6',
                     '--format', 'csv', '-q'])
        assert code == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == 'a,mass,normalized,ratio,deviation'
        assert len(lines) == 3

    def test_output_dir(self, tmp_path, capsys):
        code = main(['limit-set', problem('two_radii.json'), '--output-dir', str(tmp_path), '-q'])
        assert code == 0
        capsys.readouterr()
        assert (tmp_path / 'limit-set.json').exists()

    def test_verbose_run_reports_the_load(self, tmp_path, capsys):
        data = json.loads(Path(problem('two_radii.json')).read_text())
        data['colour'] = 'blue'
        path = tmp_path / 'coloured.json'
        path.write_text(json.dumps(data))
        code = main(['limit-set', str(path), '-v'])
        assert code == 0
        captured = capsys.readouterr()
        assert 'load report:' in captured.err
        assert '"unknown_fields": [\n    "colour"\n  ]' in captured.err
        assert '"total_warnings": 1' in captured.err
        assert json.loads(captured.out)['status'] == 'components'

    def test_quiet_run_has_no_load_report(self, capsys):
        main(['limit-set', problem('two_radii.json'), '-q'])
        assert 'load report' not in capsys.readouterr().err

    def test_render_is_stable(self):
        report = {'b': 1, 'a': [0.1 + 0.2, 2]}
        assert render(report) == render(dict(reversed(list(report.items()))))
        assert json.loads(render(report)) == {'a': [0.3, 2], 'b': 1}

    def test_parser_defaults(self):
        args = build_parser().parse_args(['radii', 'p.json'])
        assert args.output_format == 'json'
        assert args.depth_bound is None
