#!/usr/bin/env python3
"""Hardy-vs-CHSH robustness to biased settings: 25 epsilon points, level 2."""

import sys

from hardyqkd.cli import main

if __name__ == "__main__":
    sys.exit(main([
        "bias-compare",
        "--eps-grid", "25",
        "--level", "2",
        "--out", "out/bias_compare",
    ]))
