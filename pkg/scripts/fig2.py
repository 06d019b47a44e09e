#!/usr/bin/env python3
"""Target-count study: bound curves for K in {2, 5, 8} at N = 32.

Shows the a-priori floor dropping with K while the threshold SNR moves
up. Writes fig2.csv (override with --out). Any `bounds` flag passes
through.
"""

import sys

from doabounds.cli import main

if __name__ == "__main__":
    sys.exit(main(["--preset", "fig2", *sys.argv[1:]]))
