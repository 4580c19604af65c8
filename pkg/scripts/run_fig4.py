#!/usr/bin/env python3
"""Energy-decay exponents 2N-1: N in {2,3}, eps sweep, gamma = 0.2."""

import sys

from dnls.cli import main

if __name__ == "__main__":
    sys.exit(main(["fig4-decay", "--out", "out/fig4", *sys.argv[1:]]))
