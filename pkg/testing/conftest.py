"""Put FLOW-ANALYSIS on sys.path so tests import the package as `src`."""

from pathlib import Path
import sys

PACKAGE_ROOT = Path(__file__).resolve().parents[1] / "FLOW-ANALYSIS"
if str(PACKAGE_ROOT) not in sys.path:
    sys.path.insert(0, str(PACKAGE_ROOT))
