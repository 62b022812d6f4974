#!/usr/bin/env python3
"""Run the production Knudsen sweep and print the fitted convergence rate.

This is the headline experiment: BGK, theta jump 1.0 -> 1.2, epsilon from 0.1
down to 0.0125, measuring the weighted L2 distance to the inviscid contact
Maxwellians away from the jump.  Expect a few minutes on one core.
"""

import json
import sys
from pathlib import Path

from kineticlab.cli import main

OUT = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("out/sweep")

if __name__ == "__main__":
    rc = main(["sweep", "--out", str(OUT)])
    if rc == 0:
        rep = json.loads((OUT / "convergence_report.json").read_text())
        print(f"epsilons     : {rep['epsilons']}")
        print(f"sup errors   : {[f'{v:.4f}' for v in rep['sup_errors']]}")
        print(f"fitted slope : {rep['slope']:.3f}  (reference upper bound 1/4)")
        print(f"monotone     : {rep['monotone']}")
    sys.exit(rc)
