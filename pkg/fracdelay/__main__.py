"""Allow running fracdelay as a module: python -m fracdelay"""
import sys

from fracdelay.ui.cli import main

if __name__ == "__main__":
    sys.exit(main())
