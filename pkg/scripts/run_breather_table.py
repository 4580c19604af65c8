#!/usr/bin/env python3
"""Exact rational amplitude series for the N=3 breather, order 3."""

import sys

from dnls.cli import main

if __name__ == "__main__":
    sys.exit(main(["breather-table", "--out", "out/breather-table", *sys.argv[1:]]))
