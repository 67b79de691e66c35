"""
Command orchestration for flow analyses.

THE DISPATCHER BETWEEN PROBLEM FILES AND THE ANALYSIS MODULES:
- One registry maps command names to handlers
- Every handler reads a loaded Problem and returns a plain report dict
- Tabular by-products (mass tables, Weyl tables, sample dumps) are kept as
  DataFrames so they can be printed as CSV or exported
- Failures become (report, exit code) pairs instead of tracebacks

HOW IT WORKS:
1. Handlers are registered under their command names (register_command)
2. run(command) checks the problem has the blocks the command needs
3. The handler runs; FlowAnalysisException subclasses map to their exit codes
4. Tables are exported to output_dir on request

EXAMPLE USAGE:
```python
problem = ProblemLoader().load("INPUT/problems/two_radii.json")
pipeline = AnalysisPipeline(problem)
report, code = pipeline.run("limit-set")
pipeline.export_to_csv("limit-set")
```
"""

from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple
import json
import logging
import math

import numpy as np
import pandas as pd

from ..curve1d import (
    analyze_radii, alw_for_curve, alw_hull, classify_compactness, hypothesis_flags,
    kappa_and_angles, limit_set, limit_set_compact, stratify,
)
from ..exceptions import DepthExceeded, FlowAnalysisException, NoPoles
from ..harness import (
    SampleDomain, cluster_frame, cluster_scan, mass_check, sample_mu_a, sample_sector,
    sector_mass_check, semi_torus_example, weyl_test,
)
from ..harness.clusters import DEFAULT_SCALE
from ..lattice import subgroup_closure
from ..loaders.problem_loader import Problem, SchemaValidationException
from ..multiflow import (
    MultiLaurentMap, coefficient_space, compose, decompose, enumerate_complete_sequences,
    good_disc, leading_powers, limit_component, near_truncation, reparametrize, second_generation,
    verify_disc,
)
from ..rules import COMMANDS, missing_requirements
from ..schema import Compactness, LimitStatus, Provenance, to_jsonable

logger = logging.getLogger(__name__)

Handler = Callable[[Problem], Dict[str, Any]]

DEFAULT_SECTOR_A = 1.0
DEFAULT_CLUSTER_TOLERANCE = 1e-2


class AnalysisPipeline:
    """
    Runs analysis commands on one problem and collects their outputs.

    State:
    - reports: last report per command
    - tables: primary DataFrame per command (plus "samples" for measure dumps)
    - errors: one entry per failed command, like a loader error list
    """

    def __init__(self, problem: Problem, output_dir: Optional[str] = None):
        """
        Args:
            problem: A loaded problem
            output_dir: Directory for exports (created on first export)
        """
        self.problem = problem
        self.output_dir = Path(output_dir or './output')
        self.registry: Dict[str, Handler] = {}
        self.reports: Dict[str, Dict[str, Any]] = {}
        self.tables: Dict[str, pd.DataFrame] = {}
        self.exit_codes: Dict[str, int] = {}
        self.errors: List[Dict[str, Any]] = []
        for name, handler in (
            ('analyze-curve', self._analyze_curve),
            ('radii', self._radii),
            ('limit-set', self._limit_set),
            ('leading-powers', self._leading_powers),
            ('sequences', self._sequences),
            ('good-disc', self._good_disc),
            ('verify-equidist', self._verify_equidist),
            ('mass-check', self._mass_check),
            ('cluster-scan', self._cluster_scan),
            ('alw-hull', self._alw_hull),
        ):
            self.register_command(name, handler)

    def register_command(self, name: str, handler: Handler):
        """Register (or replace) the handler of a command."""
        self.registry[name] = handler
        logger.debug(f"Registered command: {name}")

    # ------------------------------------------------------------------

    def run(self, command: str) -> Tuple[Dict[str, Any], int]:
        """
        Run one command.

        Returns:
            (report, exit code); failed commands return an error report
        """
        if command not in self.registry:
            raise KeyError(f"Unknown command {command!r}; choose from {COMMANDS}")
        missing = missing_requirements(command, self.problem.blocks) if command in COMMANDS else []
        if missing:
            return self._failure(command, SchemaValidationException(
                f"Command {command} needs problem blocks {missing}"))
        logger.info(f"Running {command} on {self.problem.name!r}")
        try:
            report = self.registry[command](self.problem)
        except NoPoles as err:
            report = {'status': 'single-point', 'notes': [str(err)]}
            if self.problem.lattice is not None and err.value is not None:
                report['point'] = self.problem.lattice.reduce(err.value).to_dict()
        except DepthExceeded as err:
            report, code = self._failure(command, err)
            report['partial'] = [s.to_dict() for s in err.partial]
            return report, code
        except FlowAnalysisException as err:
            return self._failure(command, err)
        except (ValueError, KeyError, TypeError) as err:
            return self._failure(command, SchemaValidationException(str(err)))
        report = {'command': command, 'problem': self.problem.name, **report}
        self.reports[command] = report
        self.exit_codes[command] = 0
        return report, 0

    def _failure(self, command: str, err: FlowAnalysisException) -> Tuple[Dict[str, Any], int]:
        code = int(getattr(err, 'exit_code', 1))
        self.errors.append({'command': command, 'error': type(err).__name__, 'message': str(err)})
        logger.error(f"{command} failed with {type(err).__name__}: {err}")
        report = {
            'command': command,
            'problem': self.problem.name,
            'status': 'error',
            'error': {'type': type(err).__name__, 'message': str(err), 'exit_code': code},
        }
        self.reports[command] = report
        self.exit_codes[command] = code
        return report, code

    # ------------------------------------------------------------------
    # helpers

    @property
    def _bits(self) -> int:
        return self.problem.config.precision_bits

    @property
    def _height(self) -> int:
        return self.problem.config.height_bound

    def _multimap(self) -> MultiLaurentMap:
        F = self.problem.multimap
        units = self.problem.options.get('units')
        if units:
            F = reparametrize(F, units, int(self.problem.options['units_order']))
            logger.info(f"Reparametrized singular variables by units {[str(u) for u in units]}")
        return F

    def _domain(self, a: complex = 1.0) -> SampleDomain:
        return SampleDomain.from_config(self.problem.config, a)

    # ------------------------------------------------------------------
    # one-variable curves

    def _analyze_curve(self, problem: Problem) -> Dict[str, Any]:
        gamma, f = problem.lattice, problem.curve
        try:
            s = stratify(f)
        except NoPoles as err:
            return {
                'status': 'single-point',
                'point': gamma.reduce(err.value).to_dict(),
                'hypotheses': {'H0': False},
                'notes': ['no pole: single limit point pi(f(0))'],
            }
        compactness = classify_compactness(s, gamma)
        angles = kappa_and_angles(s, gamma, self._bits) if compactness == Compactness.NON_COMPACT else None
        return {
            'status': 'ok',
            'stratification': s.to_dict(),
            'compactness': compactness.value,
            'hypotheses': hypothesis_flags(s, gamma),
            'almost_radii': angles.to_dict() if angles is not None else None,
        }

    def _radii(self, problem: Problem) -> Dict[str, Any]:
        gamma, f = problem.lattice, problem.curve
        s = stratify(f)
        compactness = classify_compactness(s, gamma)
        if compactness == Compactness.COMPACT:
            return {'status': 'compact', 'radii': [], 'notes': ['pole space inside Gamma_R: no radii']}
        analysis = analyze_radii(f, s, gamma, self._bits, self._height)
        if analysis is None:
            return {'status': LimitStatus.EMPTY_NO_ALMOST_RADIUS.value, 'radii': []}
        return {'status': 'ok', **analysis.to_dict(),
                'gamma_radii': [r.p for r in analysis.gamma_radii()]}

    def _limit_set(self, problem: Problem) -> Dict[str, Any]:
        if problem.curve is not None:
            return limit_set(problem.curve, problem.lattice, self._bits, self._height).to_dict()
        F = self._multimap()
        options = problem.options
        report = decompose(F, problem.lattice, options.get('grid'), options.get('depth_bound'), self._height)
        out = report.to_dict()
        refinements = options.get('second_generation') or []
        if refinements:
            sequences = enumerate_complete_sequences(F, options.get('depth_bound')).sequences
            out['second_generation'] = []
            for parent, reduced_map in refinements:
                if not 0 <= parent < len(sequences):
                    raise ValueError(f"second_generation parent {parent} outside 0..{len(sequences) - 1}")
                component = limit_component(sequences[parent], F, problem.lattice, options.get('grid'),
                                            height=self._height)
                out['second_generation'].append(
                    second_generation(component, reduced_map, problem.lattice, options.get('grid'),
                                      options.get('depth_bound')).to_dict())
        return out

    # ------------------------------------------------------------------
    # multi-variable maps

    def _leading_powers(self, problem: Problem) -> Dict[str, Any]:
        F = self._multimap()
        powers = leading_powers(F)
        spans = {}
        for beta in powers:
            spans[' '.join(map(str, beta))] = coefficient_space(F, beta).dim
        report = {'leading_powers': [list(b) for b in powers], 'coefficient_space_dims': spans,
                  'support_size': len(F.support())}
        close = near_truncation(F, powers)
        if close:
            report['notes'] = [f"power {list(b)} is within l of the beta truncation "
                               f"{F.beta_truncation}; unseen terms could undercut it" for b in close]
        return report

    def _sequences(self, problem: Problem) -> Dict[str, Any]:
        F = self._multimap()
        result = enumerate_complete_sequences(F, problem.options.get('depth_bound'), strict=True)
        return result.to_dict()

    def _good_disc(self, problem: Problem) -> Dict[str, Any]:
        F = self._multimap()
        options = problem.options
        result = enumerate_complete_sequences(F, options.get('depth_bound'))
        discs = []
        for seq in result.sequences:
            disc = good_disc(seq, F, options.get('alpha'), int(options['n0_cap']))
            out_truncation = int(options['out_truncation'])
            check = verify_disc(seq, F, disc, out_truncation)
            curve = compose(F, disc, out_truncation)
            discs.append({
                'sequence': [list(b) for b in seq.betas],
                'disc': disc.to_dict(),
                'verification': check,
                'composed_curve': curve.to_dict(),
            })
            if not (check['pole_space_ok'] and check['constant_ok']):
                logger.warning(f"Good disc for {seq.betas} failed verification: {check}")
        return {'discs': discs, 'depth_exceeded': result.depth_exceeded}

    # ------------------------------------------------------------------
    # harness

    def _verify_equidist(self, problem: Problem) -> Dict[str, Any]:
        gamma, f, config = problem.lattice, problem.curve, problem.config
        s = stratify(f)
        targets = []
        if classify_compactness(s, gamma) == Compactness.COMPACT:
            H = limit_set_compact(s, gamma, self._height)
            targets.append((Provenance.COMPACT_BRANCH.value, H, None))
            analysis = None
        else:
            analysis = analyze_radii(f, s, gamma, self._bits, self._height)
            if analysis is None:
                return {'status': LimitStatus.EMPTY_NO_ALMOST_RADIUS.value, 'tests': []}
            for record in analysis.gamma_radii():
                H = subgroup_closure(record.direction, record.translation, gamma, self._height)
                targets.append((f"{Provenance.GAMMA_RADIUS.value}:{record.p}", H, record.p))
        A = config.sector_A if config.sector_A is not None else DEFAULT_SECTOR_A

        tests, summaries, frames = [], [], []
        for source, H, p in targets:
            maxima = []
            for a in config.a_grid:
                dom = self._domain(a)
                if p is None:
                    mu = sample_mu_a(f, dom, gamma, config.chunk_size, config.workers)
                else:
                    mu = sample_sector(f, analysis, p, A, a, dom, gamma)
                weyl = weyl_test(mu.compact, mu.weights, H, gamma, config.degree_bound, config.tolerance,
                                 metadata={'a': abs(complex(a)), 'source': source, **mu.to_dict()})
                maxima.append(weyl.max_non_annihilating)
                tests.append(weyl.to_dict())
                frames.append(weyl.to_frame().assign(a=abs(complex(a)), source=source))
                self.tables['samples'] = mu.to_frame()
            noise = 2.0 / math.sqrt(max(config.samples, 1))
            order = np.argsort([-abs(complex(a)) for a in config.a_grid])
            ordered = [maxima[i] for i in order]
            summaries.append({
                'source': source,
                'subgroup': H.to_dict(),
                'max_by_scale': ordered,
                'monotone_within_noise': all(b <= a + 2 * noise for a, b in zip(ordered, ordered[1:])),
            })
        if frames:
            self.tables['verify-equidist'] = pd.concat(frames, ignore_index=True)
        passed = all(t['passed'] for t in tests)
        return {'status': 'ok', 'passed': passed, 'tests': tests, 'summaries': summaries,
                'sector_A': A if analysis else None}

    def _mass_check(self, problem: Problem) -> Dict[str, Any]:
        gamma, f, config = problem.lattice, problem.curve, problem.config
        dom = self._domain()
        if config.sector_A is not None:
            s = stratify(f)
            analysis = analyze_radii(f, s, gamma, self._bits, self._height)
            if analysis is None:
                raise ValueError("Sector mass needs an almost-Gamma-radius")
            frame = sector_mass_check(f, analysis, config.sector_p, config.sector_A, config.a_grid, dom)
            summary = {'mode': 'sector', 'lambda_A': frame.attrs['lambda_A'], 'sector': frame.attrs['sector'],
                       'max_deviation': float(frame['deviation'].abs().max()) if len(frame) else 0.0}
        else:
            method = problem.options['mass_method']
            frame = mass_check(f, dom, config.a_grid, method, gamma, config.chunk_size)
            summary = {'mode': method, 'lambda_zero': frame.attrs['lambda_zero'], 'slope': frame.attrs['slope'],
                       'max_deviation': float(frame['deviation'].abs().max()) if len(frame) else 0.0}
        self.tables['mass-check'] = frame
        return {'status': 'ok', **summary, 'rows': frame.to_dict(orient='records')}

    def _cluster_scan(self, problem: Problem) -> Dict[str, Any]:
        settings = problem.options.get('cluster') or {}
        name = settings.get('example', 'semi-torus')
        if name != 'semi-torus':
            raise ValueError(f"Unknown cluster example {name!r}")
        example = semi_torus_example(float(settings.get('scale', DEFAULT_SCALE)), float(settings.get('bound', 1.0)))
        samples = int(settings.get('samples', 20000))
        tol = float(settings.get('tolerance', DEFAULT_CLUSTER_TOLERANCE))
        delta = float(settings.get('delta', 0.1))
        reports = [cluster_scan(example.evaluate, region, example.lattice, samples, tol, delta,
                                problem.config.seed)
                   for _, region in sorted(example.regions.items())]
        self.tables['cluster-scan'] = cluster_frame(reports)
        return {'status': 'ok', 'example': example.to_dict(), 'regions': [r.to_dict() for r in reports],
                'passed': all(r.passed for r in reports)}

    def _alw_hull(self, problem: Problem) -> Dict[str, Any]:
        if problem.subspace is not None:
            hull = alw_hull(problem.subspace, problem.lattice, self._height)
            source = 'subspace'
        else:
            hull = alw_for_curve(problem.curve, problem.lattice, self._height)
            source = 'curve'
        return {'status': 'ok', 'source': source, 'provenance': Provenance.ALW_HULL.value,
                'subgroup': hull.to_dict()}

    # ------------------------------------------------------------------
    # exports

    def primary_table(self, command: str) -> Optional[pd.DataFrame]:
        return self.tables.get(command)

    def export_to_parquet(self, table: str, filename: Optional[str] = None) -> Optional[Path]:
        """
        Export a stored table to Parquet.

        Returns:
            Path to the output file, or None if the table is missing or the
            export failed
        """
        frame = self.tables.get(table)
        if frame is None:
            logger.error(f"No table {table!r} to export. Run the command first.")
            return None
        self.output_dir.mkdir(parents=True, exist_ok=True)
        output_path = self.output_dir / (filename or f"{table}.parquet")
        try:
            frame.to_parquet(output_path, index=False, engine='pyarrow')
            logger.info(f"Exported {table} to {output_path}")
            return output_path
        except Exception as e:
            logger.error(f"Error exporting to parquet: {str(e)}")
            return None

    def export_to_csv(self, table: str, filename: Optional[str] = None) -> Optional[Path]:
        """Export a stored table to CSV; same contract as export_to_parquet."""
        frame = self.tables.get(table)
        if frame is None:
            logger.error(f"No table {table!r} to export. Run the command first.")
            return None
        self.output_dir.mkdir(parents=True, exist_ok=True)
        output_path = self.output_dir / (filename or f"{table}.csv")
        try:
            frame.to_csv(output_path, index=False)
            logger.info(f"Exported {table} to {output_path}")
            return output_path
        except Exception as e:
            logger.error(f"Error exporting to CSV: {str(e)}")
            return None

    def export_report(self, command: str, filename: Optional[str] = None) -> Optional[Path]:
        """Write the JSON report of a command run."""
        report = self.reports.get(command)
        if report is None:
            logger.error(f"No report for {command!r}. Run the command first.")
            return None
        self.output_dir.mkdir(parents=True, exist_ok=True)
        output_path = self.output_dir / (filename or f"{command}.json")
        output_path.write_text(json.dumps(to_jsonable(report), sort_keys=True, indent=2) + "\n",
                               encoding='utf-8')
        logger.info(f"Wrote report to {output_path}")
        return output_path

    def get_statistics(self) -> Dict[str, Any]:
        """Commands run, their exit codes and the tables produced."""
        return {
            'problem': self.problem.name,
            'commands_run': len(self.exit_codes),
            'failed': sum(1 for code in self.exit_codes.values() if code != 0),
            'exit_codes': dict(self.exit_codes),
            'tables': {name: len(frame) for name, frame in self.tables.items()},
            'errors': self.errors[:10],
        }
