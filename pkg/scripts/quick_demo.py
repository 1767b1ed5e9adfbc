#!/usr/bin/env python3
"""Minute-scale demo of the whole pipeline on a small synthetic dataset.

Trains a short multi-mask model, reconstructs with all three methods and
prints the metric table.  Useful as a smoke test of an installation.
"""

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from mrunroll.cli import main as cli_main
from mrunroll.config import config_to_dict, trend_config

OVERRIDES = {
    "data": {"n_train": 12, "n_test": 6, "height": 32, "width": 32},
    "sampling": {"n_acs": 6},
    "model": {"n_unrolls": 3, "n_cg": 4},
    "train": {"epochs": 6},
}


def run(out_root: str) -> int:
    out = Path(out_root)
    out.mkdir(parents=True, exist_ok=True)
    base = config_to_dict(trend_config())
    for section, patch in OVERRIDES.items():
        base[section].update(patch)
    cfg_path = out / "config.json"
    cfg_path.write_text(json.dumps(base, indent=2))

    steps = [
        ["generate-data", "--config", str(cfg_path), "--out", str(out / "ds")],
        ["train", "--config", str(cfg_path), "--dataset", str(out / "ds"),
         "--out", str(out / "run")],
        ["reconstruct", "--dataset", str(out / "ds"), "--method", "unrolled",
         "--checkpoint", str(out / "run" / "final.ckpt"),
         "--out", str(out / "recon-unrolled")],
        ["reconstruct", "--dataset", str(out / "ds"), "--method", "cg-sense",
         "--out", str(out / "recon-cg-sense")],
        ["reconstruct", "--dataset", str(out / "ds"), "--method", "zero-filled",
         "--out", str(out / "recon-zero-filled")],
        ["evaluate", "--dataset", str(out / "ds"),
         "--recon", str(out / "recon-unrolled"),
         "--recon", str(out / "recon-cg-sense"),
         "--recon", str(out / "recon-zero-filled"),
         "--out", str(out / "eval")],
    ]
    for argv in steps:
        code = cli_main(argv)
        if code != 0:
            return code
    print(f"artifacts in {out}")
    return 0


if __name__ == "__main__":
    sys.exit(run(sys.argv[1] if len(sys.argv) > 1 else "out/demo"))
