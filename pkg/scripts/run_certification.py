#!/usr/bin/env python3
"""Certify the discrete collision operator (both models) and print constants."""

import json
import sys
from pathlib import Path

from kineticlab.cli import main

OUT = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("out/certify")

if __name__ == "__main__":
    status = 0
    for kind in ("bgk", "hard_sphere"):
        out = OUT / kind
        rc = main(["certify", "--out", str(out), "--model", kind])
        rep = json.loads((out / "certification.json").read_text())
        print(f"{kind:12s}: sigma={rep['sigma']:.4f} sigma_abs={rep['sigma_abs']:.4f} "
              f"inverse-bound ratio={rep['inverse_bound_ratio']:.4f} passed={rep['passed']}")
        status = status or rc
    sys.exit(status)
