#!/usr/bin/env python3
"""Emit the self-similar profile and wave/residual tables at several times.

Output CSVs feed the plotting frontend (profile, residual-scaling figures).
"""

import json
import sys
from pathlib import Path

from kineticlab.cli import main

OUT = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("out/wave")

CONFIG = {
    "wave": {"epsilon": 0.01, "times": [0.0, 1.0, 3.0], "x_max": 3.0, "nx": 1201},
}

if __name__ == "__main__":
    cfg_path = OUT / "wave_config.json"
    OUT.mkdir(parents=True, exist_ok=True)
    cfg_path.write_text(json.dumps(CONFIG, indent=2))
    sys.exit(main(["wave", "--config", str(cfg_path), "--out", str(OUT)]))
