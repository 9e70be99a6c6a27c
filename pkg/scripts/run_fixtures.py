"""Script to run the fixture regression corpus."""

import sys
from pathlib import Path

# Add project root to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from app.main import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main(["fixtures", *sys.argv[1:]]))
