import sys
from pathlib import Path

# make test-local helpers (grid oracle, etc.) importable
sys.path.insert(0, str(Path(__file__).parent))
