import sys
from pathlib import Path

try:
    import pacp  # noqa: F401
except ImportError:  # allow running pytest from a fresh checkout
    sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))
