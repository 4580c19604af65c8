#!/usr/bin/env python3
"""Site-energy ladder: N=4, eps=0.01, gamma=0.2, from a single excited site."""

import sys

from dnls.cli import main

if __name__ == "__main__":
    sys.exit(main(["fig1-energies", "--out", "out/fig1", *sys.argv[1:]]))
