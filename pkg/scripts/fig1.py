#!/usr/bin/env python3
"""Transmit-array-size study: bound curves for N in {1, 2, 4, 8, 16, 32}.

Single target, 20 receive elements, identity transmit covariance.
Writes fig1.csv (override with --out). Any `bounds` flag passes through.
"""

import sys

from doabounds.cli import main

if __name__ == "__main__":
    sys.exit(main(["--preset", "fig1", *sys.argv[1:]]))
