"""
Problem-file loader for flow analyses.

A problem file is one self-describing JSON document: the lattice, exactly
one of a Laurent curve or a multi-variable map (or an explicit subspace for
hull computations), harness settings and per-command options. Keeping the
whole experiment in one versioned file makes runs reproducible; command-line
flags only override fields of it.

HOW IT WORKS:
1. Read JSON from a path, a string or an already parsed dict
2. Harmonize field names through the alias table in rules.py
3. Check the schema version and which blocks are present
4. Build exact objects (Lattice, LaurentCurve, MultiLaurentMap)
5. Merge harness settings and options over the defaults
6. Record everything questionable in load_errors / warnings

EXAMPLE USAGE:
```python
loader = ProblemLoader()
problem = loader.load("INPUT/problems/two_radii.json")
problem.lattice.rank, problem.curve.pole_bound
loader.get_load_report()  # unknown fields, defaults applied, errors
```
"""

from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Union
import json
import logging

from ..curve1d import LaurentCurve
from ..exceptions import DimensionMismatch, FlowAnalysisException
from ..lattice import Lattice
from ..linalg.subspaces import ExactVector
from ..multiflow import MultiLaurentMap
from ..rules import ANALYSIS_DEFAULTS, harmonize_keys, merge_defaults, parse_a_grid, parse_exact
from ..schema import SCHEMA_VERSION, HarnessConfig, SamplingEngine

logger = logging.getLogger(__name__)

ProblemSource = Union[str, Path, Dict[str, Any]]

OPTION_KEYS = ('depth_bound', 'n0_cap', 'out_truncation', 'mass_method', 'orbit_count', 'units_order')


class LoaderException(FlowAnalysisException):
    """Base exception for loader errors."""
    exit_code = 2


class SchemaValidationException(LoaderException):
    """Raised when a problem file is malformed or violates the schema."""
    pass


@dataclass
class Problem:
    """A loaded problem: exact objects plus merged settings."""
    name: str
    schema_version: int
    lattice: Optional[Lattice] = None
    curve: Optional[LaurentCurve] = None
    multimap: Optional[MultiLaurentMap] = None
    subspace: Optional[List[ExactVector]] = None
    config: HarnessConfig = field(default_factory=HarnessConfig)
    options: Dict[str, Any] = field(default_factory=dict)
    raw: Dict[str, Any] = field(default_factory=dict)

    @property
    def blocks(self) -> List[str]:
        """Names of the blocks present, as used by COMMAND_REQUIREMENTS."""
        present = []
        for key in ('lattice', 'curve', 'multimap', 'subspace'):
            if getattr(self, key) is not None:
                present.append(key)
        return present

    def with_overrides(self, **overrides) -> "Problem":
        """
        Copy with harness fields replaced; None values are ignored.

        depth_bound goes to the options, every other key must be a
        HarnessConfig field.
        """
        options = dict(self.options)
        config_changes = {}
        known = {f.name for f in fields(HarnessConfig)}
        for key, value in overrides.items():
            if value is None:
                continue
            if key == 'depth_bound':
                options[key] = int(value)
            elif key in known:
                config_changes[key] = value
            else:
                raise KeyError(f"Unknown override {key!r}")
        return replace(self, config=replace(self.config, **config_changes), options=options)


def _exactify(value: Any) -> Any:
    """JSON numbers inside vector blocks become exact scalars; strings stay."""
    if isinstance(value, list):
        return [_exactify(v) for v in value]
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return parse_exact(value)
    return value


def _exactify_terms(block: Dict[str, Any]) -> Dict[str, Any]:
    out = dict(block)
    if 'terms' in out:
        out['terms'] = [{k: (_exactify(v) if k == 'v' else v) for k, v in term.items()}
                        for term in out['terms']]
    if 'generators' in out:
        out['generators'] = _exactify(out['generators'])
    return out


class ProblemLoader:
    """
    Schema-validating loader for problem files.

    Errors are both raised (the first fatal one, as SchemaValidationException
    or a dimension error) and recorded in load_errors; unknown fields and
    defaulted values go to warnings.
    """

    def __init__(self, strict: bool = False):
        """
        Args:
            strict: Treat unknown fields as errors instead of warnings
        """
        self.strict = strict
        self.source: Optional[str] = None
        self.unknown_fields: List[str] = []
        self.defaults_applied: List[str] = []
        self.load_errors: List[Dict] = []
        self.warnings: List[Dict] = []

    # ------------------------------------------------------------------

    def _fail(self, message: str, field_name: Optional[str] = None):
        self.load_errors.append({'field': field_name, 'error': message})
        logger.error(f"Problem {self.source}: {message}")
        raise SchemaValidationException(message)

    def _warn(self, message: str, field_name: Optional[str] = None):
        self.warnings.append({'field': field_name, 'warning': message})
        logger.warning(f"Problem {self.source}: {message}")

    def read(self, source: ProblemSource) -> Dict[str, Any]:
        """Raw JSON data from a path, a JSON string or a dict."""
        if isinstance(source, dict):
            self.source = '<dict>'
            return source
        text = None
        if isinstance(source, Path) or not str(source).lstrip().startswith("{"):
            path = Path(source)
            self.source = str(path)
            try:
                text = path.read_text(encoding='utf-8')
            except OSError as err:
                self._fail(f"Cannot read problem file: {err}")
        else:
            self.source = '<string>'
            text = str(source)
        try:
            data = json.loads(text)
        except json.JSONDecodeError as err:
            self._fail(f"Malformed JSON at line {err.lineno}, column {err.colno}: {err.msg}")
        if not isinstance(data, dict):
            self._fail("Problem file must hold a JSON object")
        return data

    def load(self, source: ProblemSource) -> Problem:
        """
        Load and validate a problem.

        Raises:
            SchemaValidationException: Malformed JSON or schema violations
            DimensionMismatch: Lattice and map live in different dimensions
        """
        raw = self.read(source)
        data = harmonize_keys(raw, self.unknown_fields)
        for name in self.unknown_fields:
            if self.strict:
                self._fail(f"Unknown field {name!r}", name)
            self._warn(f"Unknown field {name!r} ignored", name)

        version = data.get('schema_version')
        if version is None:
            self._warn(f"No schema_version; assuming {SCHEMA_VERSION}", 'schema_version')
            version = SCHEMA_VERSION
        if version != SCHEMA_VERSION:
            self._fail(f"Unsupported schema_version {version!r} (expected {SCHEMA_VERSION})", 'schema_version')
        if 'curve' in data and 'multimap' in data:
            self._fail("A problem holds a curve or a multimap, not both")

        problem = Problem(name=str(data.get('name', self.source)), schema_version=int(version), raw=raw)
        try:
            if 'lattice' in data:
                problem.lattice = Lattice.from_dict(_exactify_terms(data['lattice']))
            if 'curve' in data:
                problem.curve = LaurentCurve.from_dict(_exactify_terms(data['curve']))
            if 'multimap' in data:
                problem.multimap = MultiLaurentMap.from_dict(_exactify_terms(data['multimap']))
            if 'subspace' in data:
                problem.subspace = [ExactVector.parse(_exactify(v)) for v in data['subspace']]
        except FlowAnalysisException as err:
            self.load_errors.append({'field': None, 'error': str(err)})
            raise
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as err:
            self._fail(f"Invalid problem data: {err!r}")

        self._check_dimensions(problem)
        problem.config = self._harness_config(data.get('harness') or {})
        problem.options = self._options(data.get('options') or {})
        logger.info(f"Loaded problem {problem.name!r} with blocks {problem.blocks}")
        return problem

    def _check_dimensions(self, problem: Problem):
        if problem.lattice is None:
            return
        n = problem.lattice.ambient_dim
        others = [('curve', problem.curve.ambient_dim if problem.curve else None),
                  ('multimap', problem.multimap.ambient_dim if problem.multimap else None)]
        others += [('subspace', v.dim) for v in problem.subspace or []]
        for name, dim in others:
            if dim is not None and dim != n:
                message = f"{name} lives in C^{dim} but the lattice in C^{n}"
                self.load_errors.append({'field': name, 'error': message})
                raise DimensionMismatch(message)

    def _harness_config(self, block: Dict[str, Any]) -> HarnessConfig:
        known = {f.name for f in fields(HarnessConfig)}
        values: Dict[str, Any] = {}
        for key, value in block.items():
            if key not in known:
                self._warn(f"Harness field {key!r} ignored", f"harness.{key}")
                continue
            values[key] = value
        for key in known & set(ANALYSIS_DEFAULTS):
            if key not in values:
                values[key] = ANALYSIS_DEFAULTS[key]
                self.defaults_applied.append(key)
        try:
            if 'a_grid' in values:
                values['a_grid'] = parse_a_grid(values['a_grid'])
            for key in ('r0', 'r1', 'theta0', 'theta1', 'tolerance'):
                if key in values:
                    values[key] = float(Fraction(str(values[key])))
            SamplingEngine(values.get('engine', SamplingEngine.LATTICE.value))
            return HarnessConfig(**values)
        except (TypeError, ValueError) as err:
            self._fail(f"Invalid harness settings: {err}", 'harness')

    def _options(self, block: Dict[str, Any]) -> Dict[str, Any]:
        defaults = {k: ANALYSIS_DEFAULTS[k] for k in OPTION_KEYS}
        options = merge_defaults(block, defaults)
        if options.get('mass_method') not in ('quadrature', 'monte-carlo'):
            self._fail(f"Unknown mass_method {options.get('mass_method')!r}", 'options.mass_method')
        if 'alpha' in options:
            options['alpha'] = [parse_exact(a) if not isinstance(a, str) else a for a in options['alpha']]
        if 'units' in options:
            options['units'] = _exactify(options['units'])
        if 'grid' in options:
            options['grid'] = [_exactify(list(a)) for a in options['grid']]
        refinements = []
        for index, entry in enumerate(options.get('second_generation') or []):
            try:
                refinements.append((int(entry['parent']),
                                    MultiLaurentMap.from_dict(_exactify_terms(entry['multimap']))))
            except (KeyError, TypeError, ValueError) as err:
                self._fail(f"Invalid second_generation entry {index}: {err!r}", 'options.second_generation')
        if refinements:
            options['second_generation'] = refinements
        return options

    def get_load_report(self) -> Dict[str, Any]:
        """
        Summary of the last load.

        Returns:
            Dictionary with counts, unknown fields, defaults and the first
            10 errors and warnings
        """
        return {
            'source': self.source,
            'total_errors': len(self.load_errors),
            'total_warnings': len(self.warnings),
            'unknown_fields': list(self.unknown_fields),
            'defaults_applied': sorted(self.defaults_applied),
            'errors': self.load_errors[:10],
            'warnings': self.warnings[:10],
        }
