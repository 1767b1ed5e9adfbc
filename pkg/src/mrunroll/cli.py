"""Command-line driver: generate-data, train, reconstruct, evaluate, compare.

All commands take an experiment config (JSON file plus --set overrides on
dotted paths, e.g. --set train.epochs=5).  Output paths are resolved under
$MRUNROLL_OUT when set.  Exit codes: 0 ok, 2 config error, 3 data error,
4 numerical abort.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from .baseline import cg_sense
from .config import (ExperimentConfig, config_from_dict, config_to_dict,
                     load_config)
from .datasets import Dataset, acquisition_mask, generate_dataset, load_dataset
from .diffcore import to_channels, to_complex
from .errors import ConfigError, DataError, NumericalError
from .metrics import (SliceMetrics, aggregate, psnr, report_text, ssim,
                      write_metrics_csv, write_pgm16, write_report_csv)
from .model import ModelParams, unrolled_forward
from .physics import apply_adjoint
from .train import load_checkpoint, train_supervised

RECON_METHODS = ("unrolled", "cg-sense", "zero-filled")


def _out_path(raw: str) -> Path:
    p = Path(raw)
    root = os.environ.get("MRUNROLL_OUT")
    if root and not p.is_absolute():
        return Path(root) / p
    return p


def _apply_overrides(obj: dict, sets: list[str]) -> dict:
    for item in sets:
        path, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects dotted.path=value, got {item!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = obj
        keys = path.split(".")
        for key in keys[:-1]:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise ConfigError(f"--set path {path!r} crosses a non-section value")
        node[keys[-1]] = value
    return obj


def _resolve_config(args) -> ExperimentConfig:
    obj = {}
    if args.config:
        obj = config_to_dict(load_config(args.config))
    _apply_overrides(obj, args.set or [])
    return config_from_dict(obj)


def _check_dataset_compat(cfg: ExperimentConfig, ds: Dataset) -> None:
    """The acquisition protocol is pinned by the dataset it produced."""
    if cfg.data != ds.config.data:
        raise ConfigError("config 'data' section disagrees with the dataset "
                          "manifest; regenerate the dataset or drop the override")
    a, b = cfg.sampling, ds.config.sampling
    pinned = ["pattern", "accel", "n_acs"]
    if b.pattern == "random":
        pinned.append("mask_seed")
    for name in pinned:
        if getattr(a, name) != getattr(b, name):
            raise ConfigError(f"config sampling.{name} disagrees with the dataset "
                              f"manifest ({getattr(a, name)!r} vs {getattr(b, name)!r})")


def _write_image_bin(path: Path, image: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(np.ascontiguousarray(to_channels(image), dtype="<f8").tobytes())


def _read_image_bin(path: Path, height: int, width: int) -> np.ndarray:
    try:
        raw = path.read_bytes()
    except FileNotFoundError as e:
        raise DataError(f"missing reconstruction file: {path}") from e
    expected = 2 * height * width * 8
    if len(raw) != expected:
        raise DataError(f"{path}: expected {expected} bytes, found {len(raw)}")
    return to_complex(np.frombuffer(raw, dtype="<f8").reshape(2, height, width))


def _reconstruct_slice(method: str, ds: Dataset, idx: int,
                       params: ModelParams | None) -> np.ndarray:
    sl = ds.get_slice(idx)
    omega = acquisition_mask(ds.config, idx)
    y = sl.kspace * omega.to_bool_array()[None, None, :]
    if method == "zero-filled":
        return apply_adjoint(y, sl.coils, omega)
    if method == "cg-sense":
        return cg_sense(y, omega, sl.coils, lam=0.0, n_iter=30)
    return unrolled_forward(y, omega, sl.coils, params).image


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_generate_data(args) -> int:
    cfg = _resolve_config(args)
    out = _out_path(args.out)
    ds = generate_dataset(cfg, out)
    print(f"wrote {ds.n_slices} slices ({ds.n_train} train, {ds.n_test} test) "
          f"to {out}")
    return 0


def cmd_train(args) -> int:
    cfg = _resolve_config(args)
    ds = load_dataset(args.dataset)
    _check_dataset_compat(cfg, ds)
    out = _out_path(args.out)
    train_supervised(ds, cfg, conventional=args.conventional, out_dir=out,
                     resume_from=args.resume, quiet=args.quiet)
    print(f"training finished; checkpoints and log in {out}")
    return 0


def cmd_reconstruct(args) -> int:
    ds = load_dataset(args.dataset)
    method = args.method
    if method not in RECON_METHODS:
        raise ConfigError(f"unknown method {method!r}; choose from {RECON_METHODS}")
    params = None
    if method == "unrolled":
        if not args.checkpoint:
            raise ConfigError("method 'unrolled' requires --checkpoint")
        params, _, meta = load_checkpoint(args.checkpoint)
        ck = config_from_dict(meta["config"]).data
        d = ds.config.data
        if (ck.height, ck.width, ck.n_coils) != (d.height, d.width, d.n_coils):
            raise DataError(
                f"checkpoint geometry {ck.height}x{ck.width}x{ck.n_coils} does "
                f"not match dataset {d.height}x{d.width}x{d.n_coils}")
    out = _out_path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    indices = list(ds.test_indices())
    for idx in indices:
        img = _reconstruct_slice(method, ds, idx, params)
        _write_image_bin(out / f"slice_{idx:04d}.bin", img)
        write_pgm16(out / f"slice_{idx:04d}.pgm", img)
    manifest = {"format": "mrunroll-recon", "method": method,
                "slices": indices, "dataset": str(ds.root),
                "checkpoint": args.checkpoint if method == "unrolled" else None,
                "config": config_to_dict(ds.config)}
    (out / "recon_manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True))
    print(f"reconstructed {len(indices)} slices with {method} into {out}")
    return 0


def _evaluate_dir(recon_dir: Path, ds: Dataset) -> list[SliceMetrics]:
    manifest_path = recon_dir / "recon_manifest.json"
    try:
        manifest = json.loads(manifest_path.read_text())
    except FileNotFoundError as e:
        raise DataError(f"not a reconstruction directory: {recon_dir}") from e
    method = manifest["method"]
    d = ds.config.data
    missing = [idx for idx in ds.test_indices()
               if not (recon_dir / f"slice_{idx:04d}.bin").exists()]
    if missing:
        raise DataError(f"{recon_dir}: missing reconstructions for slices {missing}")
    out = []
    for idx in sorted(ds.test_indices()):
        rec = _read_image_bin(recon_dir / f"slice_{idx:04d}.bin", d.height, d.width)
        ref = ds.get_slice(idx).image
        out.append(SliceMetrics(idx, method, ssim(ref, rec), psnr(ref, rec)))
    return out


def cmd_evaluate(args) -> int:
    ds = load_dataset(args.dataset)
    rows: list[SliceMetrics] = []
    for recon_dir in args.recon:
        rows.extend(_evaluate_dir(_out_path(recon_dir), ds))
    out = _out_path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = aggregate(rows)
    write_metrics_csv(out / "metrics.csv", rows)
    write_report_csv(out / "report.csv", report)
    text = report_text(report)
    (out / "report.txt").write_text(text)
    (out / "eval_manifest.json").write_text(json.dumps(
        {"format": "mrunroll-eval", "dataset": str(ds.root),
         "recon_dirs": [str(_out_path(r)) for r in args.recon],
         "config": config_to_dict(ds.config)}, indent=2, sort_keys=True))
    print(text, end="")
    return 0


def cmd_compare(args) -> int:
    cfg = _resolve_config(args)
    ds = load_dataset(args.dataset)
    _check_dataset_compat(cfg, ds)
    ks = [int(k) for k in args.ks.split(",")] if args.ks else [1, 3, 5, 7]
    if any(k < 1 for k in ks):
        raise ConfigError(f"--ks values must be >= 1, got {ks}")
    out = _out_path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rows: list[SliceMetrics] = []
    for idx in ds.test_indices():
        rec = _reconstruct_slice("cg-sense", ds, idx, None)
        ref = ds.get_slice(idx).image
        rows.append(SliceMetrics(idx, "cg-sense", ssim(ref, rec), psnr(ref, rec)))

    for k in ks:
        conventional = k == 1
        cfg_k = dataclasses.replace(
            cfg, sampling=dataclasses.replace(cfg.sampling, n_masks=k))
        run_dir = out / f"K{k}"
        params, _, _ = train_supervised(ds, cfg_k, conventional=conventional,
                                        out_dir=run_dir, quiet=args.quiet)
        method = f"K={k}"
        for idx in ds.test_indices():
            rec = _reconstruct_slice("unrolled", ds, idx, params)
            ref = ds.get_slice(idx).image
            rows.append(SliceMetrics(idx, method, ssim(ref, rec), psnr(ref, rec)))

    report = aggregate(rows)
    write_metrics_csv(out / "combined_metrics.csv", rows)
    write_report_csv(out / "combined_report.csv", report)
    text = report_text(report)
    (out / "combined_report.txt").write_text(text)
    print(text, end="")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mrunroll",
        description="Unrolled MRI reconstruction: data synthesis, training, "
                    "reconstruction and evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_args(p):
        p.add_argument("--config", help="experiment config JSON file")
        p.add_argument("--set", action="append", metavar="PATH=VALUE",
                       help="override a config value on a dotted path")

    p = sub.add_parser("generate-data", help="synthesize a dataset directory")
    add_config_args(p)
    p.add_argument("--out", required=True, help="dataset output directory")
    p.set_defaults(func=cmd_generate_data)

    p = sub.add_parser("train", help="train a model on a dataset")
    add_config_args(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True, help="checkpoint/log directory")
    p.add_argument("--conventional", action="store_true",
                   help="use the whole acquisition mask in every DC unit")
    p.add_argument("--resume", help="checkpoint to resume from")
    p.add_argument("--quiet", action="store_true", default=False)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("reconstruct", help="reconstruct the test slices")
    p.add_argument("--dataset", required=True)
    p.add_argument("--method", required=True, choices=RECON_METHODS)
    p.add_argument("--checkpoint", help="required for method 'unrolled'; "
                                        "ignored otherwise")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("evaluate", help="score reconstructions against the "
                                        "dataset reference images")
    p.add_argument("--dataset", required=True)
    p.add_argument("--recon", required=True, action="append",
                   help="reconstruction directory (repeatable)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="train a sweep of mask counts and "
                                       "emit a combined report")
    add_config_args(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--ks", default="1,3,5,7",
                   help="comma-separated mask counts (K=1 is conventional)")
    p.add_argument("--out", required=True)
    p.add_argument("--quiet", action="store_true", default=False)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except NumericalError as e:
        print(f"numerical abort: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
