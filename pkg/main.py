"""Main entry point for sgisim application."""

import sys

from src.sgisim.app import main

if __name__ == "__main__":
    sys.exit(main())
