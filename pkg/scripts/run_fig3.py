#!/usr/bin/env python3
"""Downcrossing times vs sqrt(k): N=3, eps in {0.05, 0.1}, gamma = 0.2*eps."""

import sys

from dnls.cli import main

if __name__ == "__main__":
    sys.exit(main(["fig3-crossings", "--out", "out/fig3", *sys.argv[1:]]))
