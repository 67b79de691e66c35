"""
Shared schema definitions for flow analysis reports.

This module defines the vocabulary every other module reports in: the
three-valued membership answer, compactness classes, component provenance,
the harness configuration record and the fixed column lists of the tabular
outputs.

WHY THIS SCHEMA EXISTS:
- Reports must be byte-identical for identical inputs, so every report is
  built from the same dataclasses and serialized through one function
- Enums restrict answers to valid values and keep JSON output stable
- Fixed column lists keep CSV dumps comparable across runs

WHAT THIS CAPTURES:
- Decision values (Membership, Compactness)
- Where a limit component came from (Provenance)
- Harness settings after defaults and flag overrides (HarnessConfig)
- Limit set reports and their components (LimitSetReport, ComponentRecord)

HOW TO USE:
1. Build report dataclasses in the analysis modules
2. Call to_dict() for JSON output
3. Use the *_COLUMNS lists when building DataFrames
"""

from typing import Optional, Dict, Any, List
from dataclasses import dataclass, field, asdict
from enum import Enum
from fractions import Fraction
import math

import numpy as np

SCHEMA_VERSION = 1
FLOAT_DIGITS = 12


class Membership(str, Enum):
    """
    Answer of a membership or rank test.

    WHY THREE VALUES: Ball inputs can be too wide to decide; saying so is
    better than guessing. UNDECIDED triggers one precision escalation.
    """
    IN = "in"
    OUT = "out"
    UNDECIDED = "undecided"


class Compactness(str, Enum):
    """Whether the pole subspace of a curve lies inside the real span of the lattice."""
    COMPACT = "compact"  # F_k inside Gamma_R: limit set is a translated real torus
    NON_COMPACT = "non-compact"  # limit set comes from Gamma-radii, possibly empty


class Provenance(str, Enum):
    """Which branch of the analysis produced a limit component."""
    SINGLE_POINT = "single-point"  # no poles, the flow converges
    COMPACT_BRANCH = "compact-branch"
    GAMMA_RADIUS = "gamma-radius"
    SEQUENCE = "sequence"  # complete leading sequence of a multi-variable map
    ALW_HULL = "alw-hull"


class LimitStatus(str, Enum):
    """Outcome class of a limit set computation."""
    POINT = "point"
    COMPONENTS = "components"
    EMPTY_NO_ALMOST_RADIUS = "empty:no-almost-gamma-radius"
    EMPTY_NO_RADIUS = "empty:no-gamma-radius"


class SamplingEngine(str, Enum):
    """Low-discrepancy point generators for the harness."""
    LATTICE = "lattice"  # rank-1 lattice rule with a seeded random shift
    SOBOL = "sobol"  # scrambled Sobol points


@dataclass
class HarnessConfig:
    """Harness settings after defaults, problem-file values and flag overrides."""
    r0: float = 0.5
    r1: float = 1.0
    theta0: float = 0.0
    theta1: float = 2.0 * math.pi
    a_grid: List[float] = field(default_factory=lambda: [2.0 ** -k for k in range(4, 9)])
    samples: int = 2 ** 16
    seed: int = 0
    engine: str = SamplingEngine.LATTICE.value
    precision_bits: int = 256
    height_bound: int = 10 ** 6
    tolerance: float = 0.05
    degree_bound: int = 3
    chunk_size: int = 2 ** 15
    workers: int = 1
    sector_A: Optional[float] = None
    sector_p: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class ComponentRecord:
    """One translated closed subgroup of a limit set, with where it came from."""
    subgroup: Dict[str, Any]
    provenance: str
    sources: List[Any] = field(default_factory=list)  # radius indices or sequence keys
    compact: bool = True
    heuristic: bool = False
    certificates: Dict[str, Any] = field(default_factory=dict)
    bounded_part: Optional[Dict[str, Any]] = None  # parametric pi(C) when it is not a finite set

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class LimitSetReport:
    """Limit set of a flow as a finite list of components (possibly empty)."""
    status: str
    components: List[ComponentRecord] = field(default_factory=list)
    point: Optional[Dict[str, Any]] = None
    notes: List[str] = field(default_factory=list)
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'status': self.status,
            'components': [c.to_dict() for c in self.components],
            'point': self.point,
            'notes': list(self.notes),
            'details': self.details,
        }


MASS_COLUMNS = ['a', 'mass', 'normalized', 'ratio', 'deviation']

WEYL_COLUMNS = ['m', 'family', 'abs_w', 're_w', 'im_w']

SAMPLE_COLUMNS = ['x_re', 'x_im', 'weight']

CLUSTER_COLUMNS = ['region', 'samples', 'retained', 'retained_fraction', 'max_distance', 'coverage']


def compact_columns(rank: int) -> List[str]:
    """Column names of the compact torus coordinates in sample dumps."""
    return [f'c{j}' for j in range(rank)]


def transverse_columns(count: int) -> List[str]:
    return [f't{j}' for j in range(count)]


def round_float(value: float) -> float:
    """Round to FLOAT_DIGITS significant digits so reports are byte-stable."""
    if value == 0 or not math.isfinite(value):
        return float(value)
    return float(f"{value:.{FLOAT_DIGITS}g}")


def to_jsonable(value: Any) -> Any:
    """
    Convert report values to JSON-ready Python data.

    Handles dataclasses with to_dict(), Enums, Fractions, numpy scalars and
    arrays, and nested containers. Floats are rounded by round_float.
    """
    if hasattr(value, 'to_dict') and callable(value.to_dict):
        return to_jsonable(value.to_dict())
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, int):
        return value
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (float, np.floating)):
        return round_float(float(value))
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, (complex, np.complexfloating)):
        value = complex(value)
        return [round_float(value.real), round_float(value.imag)]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set, frozenset)):
        items = sorted(value) if isinstance(value, (set, frozenset)) else value
        return [to_jsonable(v) for v in items]
    return str(value)


def get_enum_values(enum_class) -> List[str]:
    """Get all values from an Enum class."""
    return [item.value for item in enum_class]
