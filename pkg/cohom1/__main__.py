"""Entry point for `python -m cohom1`."""

import sys

from cohom1.cli import main

if __name__ == "__main__":
    sys.exit(main())
