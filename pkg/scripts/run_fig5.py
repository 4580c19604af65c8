#!/usr/bin/env python3
"""Damped-spectrum slopes: N=3, eps=0.01, gamma grid [0, 0.5]."""

import sys

from dnls.cli import main

if __name__ == "__main__":
    sys.exit(main(["fig5-spectrum", "--out", "out/fig5", *sys.argv[1:]]))
