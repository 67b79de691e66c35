"""
Field rules for problem files: aliases, defaults and value normalization.

WHY A RULES TABLE:
- Problem files are written by hand, so the same field shows up as
  "trunc_order", "T" or "truncation"; one alias table maps them all to one name
- Defaults live in one place instead of being scattered over constructors
- Value rules (exact scalars, scale grids, command needs) are deterministic
  and easy to audit

WHAT THIS DOES:
- Field role detection with priority ordering (detect_field_role)
- Recursive key harmonization of nested problem data (harmonize_keys)
- Analysis defaults (ANALYSIS_DEFAULTS) and what each command needs
- Scalar rules: exact strings, integers and decimal floats become exact
  Gaussian rationals; scale grids accept lists or "2^-4..2^-8" ranges

EXAMPLE USAGE:
```python
from src.rules import harmonize_keys, parse_a_grid

harmonize_keys({"Lattice": {"dim": 1, "gens": [["1"], ["i"]]}})
# Returns: {'lattice': {'n': 1, 'generators': [['1'], ['i']]}}

parse_a_grid("2^-4..2^-6")
# Returns: [0.0625, 0.03125, 0.015625]
```
"""

from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Union
import re

from .linalg.scalars import ExactScalar, parse_scalar


# ============================================================================
# FIELD ALIASES
# ============================================================================

FIELD_ALIASES = {
    # ========== TOP LEVEL ==========
    'schema_version': ['schema_version', 'schema', 'version'],
    'name': ['name', 'title', 'problem'],
    'lattice': ['lattice', 'gamma', 'discrete_subgroup'],
    'curve': ['curve', 'laurent_curve', 'f'],
    'multimap': ['multimap', 'multi_map', 'map', 'multi'],
    'subspace': ['subspace', 'vectors', 'span'],
    'harness': ['harness', 'sampling', 'monte_carlo'],
    'options': ['options', 'params', 'parameters'],

    # ========== LATTICES AND CURVES ==========
    'n': ['n', 'dim', 'ambient_dim', 'dimension'],
    'generators': ['generators', 'gens', 'basis'],
    'terms': ['terms', 'coefficients', 'expansion'],
    'e': ['e', 'exponent', 'power', 'degree'],
    'v': ['v', 'vector', 'coefficient', 'value'],
    'truncation': ['truncation', 'trunc_order', 'T'],

    # ========== MULTI-VARIABLE MAPS ==========
    'l': ['l', 'singular', 'singular_vars'],
    'q': ['q', 'vars', 'variables'],
    'beta': ['beta', 'b'],
    'theta': ['theta', 'regular_power'],
    'trunc': ['trunc', 'truncations'],
    'open_tails': ['open_tails', 'tails'],

    # ========== HARNESS ==========
    'a_grid': ['a_grid', 'scales', 'a'],
    'samples': ['samples', 'N', 'sample_count'],
    'precision_bits': ['precision_bits', 'bits', 'precision'],
    'height_bound': ['height_bound', 'height'],
    'degree_bound': ['degree_bound', 'D', 'characters'],
    'sector_A': ['sector_A', 'A'],
    'sector_p': ['sector_p', 'p', 'radius'],
    'r0': ['r0', 'inner_radius'],
    'r1': ['r1', 'outer_radius'],
    'theta0': ['theta0', 'start_angle'],
    'theta1': ['theta1', 'end_angle'],
    'seed': ['seed', 'rng_seed'],
    'engine': ['engine', 'sampler'],
    'tolerance': ['tolerance', 'tol'],
    'chunk_size': ['chunk_size', 'chunk'],
    'workers': ['workers', 'threads'],

    # ========== OPTIONS ==========
    'depth_bound': ['depth_bound', 'depth'],
    'alpha': ['alpha', 'disc_alpha'],
    'grid': ['grid', 'a_values', 'regular_grid'],
    'units': ['units', 'reparametrization'],
    'units_order': ['units_order', 'reparametrization_order'],
    'second_generation': ['second_generation', 'refinements'],
    'parent': ['parent', 'parent_sequence'],
    'mass_method': ['mass_method', 'method'],
    'n0_cap': ['n0_cap', 'rank_cap'],
    'out_truncation': ['out_truncation', 'composed_truncation'],
    'orbit_count': ['orbit_count', 'orbits'],
    'cluster': ['cluster', 'cluster_scan'],
    'example': ['example'],
    'scale': ['scale', 'radius_scale'],
    'bound': ['bound', 'transverse_bound'],
    'delta': ['delta', 'net_spacing'],
}

# Fields whose exact spelling is significant inside their parent
_CASE_SENSITIVE = {'T', 'N', 'D', 'A'}

# Detection order: earlier roles win when a name matches several
_ROLE_PRIORITY = list(FIELD_ALIASES)

# Nested blocks whose keys are data, not schema fields
_OPAQUE_BLOCKS = {'v', 'generators', 'subspace', 'beta', 'theta', 'alpha', 'grid', 'units', 'a_grid'}


# ============================================================================
# DEFAULTS
# ============================================================================

ANALYSIS_DEFAULTS = {
    'precision_bits': 256,
    'height_bound': 10 ** 6,
    'tolerance': 0.05,
    'degree_bound': 3,
    'depth_bound': None,
    'n0_cap': 12,
    'samples': 2 ** 16,
    'seed': 0,
    'engine': 'lattice',
    'chunk_size': 2 ** 15,
    'out_truncation': 1,
    'mass_method': 'quadrature',
    'orbit_count': 64,
    'units_order': 4,
}

# What each command reads from the problem file
COMMAND_REQUIREMENTS = {
    'analyze-curve': ['lattice', 'curve'],
    'radii': ['lattice', 'curve'],
    'limit-set': ['lattice', ('curve', 'multimap')],
    'leading-powers': ['multimap'],
    'sequences': ['multimap'],
    'good-disc': ['multimap'],
    'verify-equidist': ['lattice', 'curve'],
    'mass-check': ['lattice', 'curve'],
    'cluster-scan': [],
    'alw-hull': ['lattice', ('curve', 'subspace')],
}

COMMANDS = list(COMMAND_REQUIREMENTS)

_POWER_PATTERN = re.compile(r'^\s*(\d+)\s*\^\s*(-?\d+)\s*$')


# ============================================================================
# FIELD RULES
# ============================================================================

def detect_field_role(field_name: str) -> Optional[str]:
    """
    Canonical name of a problem-file field, or None if unknown.

    Single-letter aliases (T, N, D, A) match case-sensitively; everything
    else is matched lower-case with dashes read as underscores.
    """
    if field_name in _CASE_SENSITIVE:
        for role in _ROLE_PRIORITY:
            if field_name in FIELD_ALIASES[role]:
                return role
    key = field_name.strip().lower().replace('-', '_').replace(' ', '_')
    for role in _ROLE_PRIORITY:
        if key in (alias.lower() for alias in FIELD_ALIASES[role] if alias not in _CASE_SENSITIVE):
            return role
    return None


def harmonize_keys(data: Any, unknown: Optional[List[str]] = None, path: str = '') -> Any:
    """
    Rename the keys of nested problem data to their canonical names.

    Unknown keys are kept as they are and appended to `unknown` with their
    path, so the loader can report them.
    """
    if isinstance(data, list):
        return [harmonize_keys(item, unknown, f"{path}[{i}]") for i, item in enumerate(data)]
    if not isinstance(data, dict):
        return data
    out = {}
    for key, value in data.items():
        role = detect_field_role(str(key))
        if role is None:
            role = str(key)
            if unknown is not None:
                unknown.append(f"{path}.{key}" if path else str(key))
        child = value if role in _OPAQUE_BLOCKS else harmonize_keys(value, unknown, f"{path}.{role}" if path else role)
        out[role] = child
    return out


def missing_requirements(command: str, available: Sequence[str]) -> List[str]:
    """Problem blocks a command needs that are absent; alternatives are joined by '|'."""
    missing = []
    for need in COMMAND_REQUIREMENTS[command]:
        options = need if isinstance(need, tuple) else (need,)
        if not any(o in available for o in options):
            missing.append('|'.join(options))
    return missing


# ============================================================================
# VALUE RULES
# ============================================================================

def parse_exact(value: Union[str, int, float, Fraction, ExactScalar]) -> ExactScalar:
    """
    Exact Gaussian rational from a problem-file value.

    Floats are read through their shortest decimal representation, so 0.1
    becomes 1/10 rather than the binary double.

    Raises:
        ValueError: For booleans, NaN/inf or malformed strings
    """
    if isinstance(value, bool):
        raise ValueError("Booleans are not scalars")
    if isinstance(value, float):
        if value != value or value in (float('inf'), float('-inf')):
            raise ValueError(f"Non-finite scalar {value}")
        return ExactScalar(Fraction(repr(value)))
    if isinstance(value, str):
        return parse_scalar(value)
    return ExactScalar.coerce(value)


def parse_exact_vector(values: Sequence) -> List[ExactScalar]:
    return [parse_exact(v) for v in values]


def parse_a_grid(value: Union[str, Sequence, float, None]) -> Optional[List[float]]:
    """
    Scale grid from a list, a single number, a comma list or a "2^-4..2^-8" range.

    Ranges step the exponent by one in the direction of the second end point.

    Raises:
        ValueError: For malformed entries or a zero scale
    """
    if value is None:
        return None
    if isinstance(value, (int, float)):
        values = [float(value)]
    elif isinstance(value, str):
        if '..' in value:
            start, stop = value.split('..', 1)
            m1, m2 = _POWER_PATTERN.match(start), _POWER_PATTERN.match(stop)
            if not m1 or not m2 or m1.group(1) != m2.group(1):
                raise ValueError(f"Range {value!r} must look like 2^-4..2^-8")
            base, e1, e2 = int(m1.group(1)), int(m1.group(2)), int(m2.group(2))
            step = 1 if e2 >= e1 else -1
            values = [float(base) ** e for e in range(e1, e2 + step, step)]
        else:
            values = [_parse_scale(part) for part in value.split(',') if part.strip()]
    else:
        values = [_parse_scale(v) if isinstance(v, str) else float(v) for v in value]
    if any(v == 0 for v in values):
        raise ValueError("Scales must be nonzero")
    return values


def _parse_scale(text: str) -> float:
    match = _POWER_PATTERN.match(text)
    if match:
        return float(int(match.group(1))) ** int(match.group(2))
    return float(text)


def merge_defaults(values: Optional[Dict[str, Any]], defaults: Dict[str, Any] = None) -> Dict[str, Any]:
    """Defaults overridden by the given values; None values do not override."""
    merged = dict(defaults if defaults is not None else ANALYSIS_DEFAULTS)
    for key, value in (values or {}).items():
        if value is not None:
            merged[key] = value
    return merged
