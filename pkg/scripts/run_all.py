#!/usr/bin/env python3
"""Run every experiment with its defaults; exit nonzero if any expectation fails."""

import sys

from dnls.cli import main

EXPERIMENTS = [
    "breather-table",
    "fig5-spectrum",
    "fig1-energies",
    "fig3-crossings",
    "fig4-decay",
    "spectrum-report",
]

if __name__ == "__main__":
    worst = 0
    for name in EXPERIMENTS:
        print(f"=== {name} ===")
        code = main([name, "--out", f"out/{name}"])
        worst = max(worst, code)
    sys.exit(worst)
