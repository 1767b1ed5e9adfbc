#!/usr/bin/env python3
"""Desk-scale comparison experiment: CG-SENSE vs conventional (K=1) vs
multi-mask training, end to end on synthetic data.

Generates the dataset if needed, trains one model per requested mask count,
reconstructs the test slices and prints the combined median [IQR] table.

    python3 scripts/run_trend.py --out out/trend            # K=1 vs K=3
    python3 scripts/run_trend.py --out out/sweep --ks 1,3,5,7
"""

import argparse
import json
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from mrunroll.cli import main as cli_main
from mrunroll.config import config_to_dict, trend_config


def run(out_root: str, ks: str, epochs: int | None) -> int:
    out = Path(out_root)
    out.mkdir(parents=True, exist_ok=True)
    cfg = trend_config()
    cfg_path = out / "config.json"
    cfg_path.write_text(json.dumps(config_to_dict(cfg), indent=2))
    overrides = []
    if epochs is not None:
        overrides += ["--set", f"train.epochs={epochs}"]

    ds_dir = out / "dataset"
    if not (ds_dir / "manifest.json").exists():
        code = cli_main(["generate-data", "--config", str(cfg_path),
                         "--out", str(ds_dir)])
        if code != 0:
            return code

    t0 = time.perf_counter()
    code = cli_main(["compare", "--config", str(cfg_path), *overrides,
                     "--dataset", str(ds_dir), "--ks", ks,
                     "--out", str(out / "compare")])
    if code != 0:
        return code
    print(f"\ntotal compare time: {(time.perf_counter() - t0) / 60:.1f} min")
    print(f"artifacts in {out}")
    return 0


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/trend")
    ap.add_argument("--ks", default="1,3",
                    help="comma-separated mask counts (K=1 trains conventionally)")
    ap.add_argument("--epochs", type=int, default=None,
                    help="override the configured epoch count")
    args = ap.parse_args()
    sys.exit(run(args.out, args.ks, args.epochs))
