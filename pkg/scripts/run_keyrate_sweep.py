#!/usr/bin/env python3
"""Full key-rate sweep experiment: 201 eta points, level 2, CSV + SVG.

Equivalent to `hardyqkd keyrate` with the default configuration; kept as a
script so the sweep parameters are easy to edit in place.
"""

import sys

from hardyqkd.cli import main

if __name__ == "__main__":
    sys.exit(main([
        "keyrate",
        "--eta-grid", "201",
        "--grid-res", "201",
        "--level", "2",
        "--out", "out/keyrate_sweep",
    ]))
