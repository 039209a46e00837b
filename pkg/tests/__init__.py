"""
Test configuration for the padyn toolkit.
"""
import sys
from pathlib import Path

# Add the project root to the path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

# Keep test runs quiet and reproducible
import os
os.environ.setdefault("PADYN_SEED", "0")
