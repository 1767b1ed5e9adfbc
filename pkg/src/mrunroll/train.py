"""Supervised training: conventional (all acquired columns in the DC units)
and multi-mask (random subsets of the acquired columns, drawn K times per
slice).  Both run the same loop; they differ only in the mask families fed
to the data-consistency units.  The loss always compares the fully sampled
reference k-space against the re-encoded network output.
"""

from __future__ import annotations

import csv
import json
import struct
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import diffcore as dc
from .config import ExperimentConfig, config_to_dict
from .datasets import Dataset, acquisition_mask
from .diffcore import Tape, Var, to_channels
from .errors import DataError, NumericalError
from .model import ModelParams, build_unrolled, init_params, stage_params
from .sampling import MaskFamily, SamplingMask, partition_masks

CKPT_MAGIC = b"MRCK"
CKPT_VERSION = 1


# ---------------------------------------------------------------------------
# Loss
# ---------------------------------------------------------------------------


def loss_l1l2(ref_k: np.ndarray, pred_k: np.ndarray,
              w_l2: float = 1.0, w_l1: float = 1.0) -> float:
    """Normalized l1-l2 distance between complex k-space arrays."""
    if ref_k.shape != pred_k.shape:
        raise ValueError(f"loss_l1l2: shapes {ref_k.shape} vs {pred_k.shape}")
    n2 = np.linalg.norm(ref_k)
    n1 = np.sum(np.abs(ref_k))
    if n2 == 0.0:
        raise ValueError("loss_l1l2: reference k-space is identically zero")
    d = ref_k - pred_k
    return float(w_l2 * np.linalg.norm(d) / n2 + w_l1 * np.sum(np.abs(d)) / n1)


def loss_graph(ref: Var, pred: Var, w_l2: float = 1.0, w_l1: float = 1.0) -> Var:
    """Tape version of `loss_l1l2` on channel-pair k-space arrays."""
    if float(dc.l2norm(ref).value) == 0.0:
        raise ValueError("loss_graph: reference k-space is identically zero")
    d = dc.sub(ref, pred)
    l2 = dc.div(dc.l2norm(d), dc.l2norm(ref))
    l1 = dc.div(dc.l1norm(d, complex_pairs=True), dc.l1norm(ref, complex_pairs=True))
    return dc.add(dc.scale(l2, w_l2), dc.scale(l1, w_l1))


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------


@dataclass
class AdamState:
    step: int
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]

    @staticmethod
    def init(params: ModelParams) -> "AdamState":
        return AdamState(0,
                         {k: np.zeros_like(a) for k, a in params.arrays.items()},
                         {k: np.zeros_like(a) for k, a in params.arrays.items()})


def adam_step(arrays: dict[str, np.ndarray], grads: dict[str, np.ndarray],
              state: AdamState, lr: float, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> None:
    """One in-place Adam update with bias-corrected moments."""
    state.step += 1
    t = state.step
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for name, p in arrays.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ValueError(f"adam_step: gradient shape {g.shape} vs "
                             f"parameter {name} shape {p.shape}")
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)


# ---------------------------------------------------------------------------
# Checkpoints: magic + uint32 header length + JSON header + float64 blob
# ---------------------------------------------------------------------------


def save_checkpoint(path: str | Path, params: ModelParams,
                    adam: AdamState | None, meta: dict) -> None:
    header = {
        "version": CKPT_VERSION,
        "arrays": [{"name": n, "shape": list(a.shape)}
                   for n, a in params.arrays.items()],
        "model": {"n_unrolls": params.n_unrolls, "n_cg": params.n_cg,
                  "n_blocks": params.n_blocks, "n_features": params.n_features,
                  "kernel": params.kernel, "share_weights": params.share_weights},
        "adam_step": adam.step if adam is not None else None,
        "meta": meta,
    }
    blob = bytearray()
    for a in params.arrays.values():
        blob += a.astype("<f8").tobytes()
    if adam is not None:
        for store in (adam.m, adam.v):
            for name in params.arrays:
                blob += store[name].astype("<f8").tobytes()
    head = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(CKPT_MAGIC)
        fh.write(struct.pack("<I", len(head)))
        fh.write(head)
        fh.write(blob)


def load_checkpoint(path: str | Path) -> tuple[ModelParams, AdamState | None, dict]:
    try:
        raw = Path(path).read_bytes()
    except FileNotFoundError as e:
        raise DataError(f"checkpoint not found: {path}") from e
    if len(raw) < 8 or raw[:4] != CKPT_MAGIC:
        raise DataError(f"{path}: not a checkpoint file")
    (head_len,) = struct.unpack("<I", raw[4:8])
    if len(raw) < 8 + head_len:
        raise DataError(f"{path}: truncated checkpoint header")
    try:
        header = json.loads(raw[8:8 + head_len])
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: corrupt checkpoint header") from e
    if header.get("version") != CKPT_VERSION:
        raise DataError(f"{path}: checkpoint version {header.get('version')} "
                        f"is not supported (expected {CKPT_VERSION})")
    specs = header["arrays"]
    n_param = sum(int(np.prod(s["shape"])) for s in specs)
    has_adam = header["adam_step"] is not None
    expected = n_param * (3 if has_adam else 1) * 8
    blob = raw[8 + head_len:]
    if len(blob) != expected:
        raise DataError(f"{path}: corrupt checkpoint, expected {expected} "
                        f"payload bytes, found {len(blob)}")
    flat = np.frombuffer(blob, dtype="<f8")

    def take(offset):
        out = {}
        for s in specs:
            n = int(np.prod(s["shape"]))
            out[s["name"]] = flat[offset:offset + n].reshape(s["shape"]).copy()
            offset += n
        return out, offset

    arrays, off = take(0)
    mc = header["model"]
    params = ModelParams(arrays, mc["n_unrolls"], mc["n_cg"], mc["n_blocks"],
                         mc["n_features"], mc["kernel"], mc["share_weights"])
    adam = None
    if has_adam:
        m, off = take(off)
        v, off = take(off)
        adam = AdamState(int(header["adam_step"]), m, v)
    return params, adam, header["meta"]


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------


@dataclass
class TrainRecord:
    step: int
    epoch: int
    slice_idx: int
    mask_idx: int
    loss: float
    grad_norm: float
    wall_time: float


RECORD_FIELDS = ["step", "epoch", "slice_idx", "mask_idx", "loss", "grad_norm",
                 "wall_time"]


def write_records_csv(path: str | Path, records: list[TrainRecord],
                      append: bool = False) -> None:
    mode = "a" if append else "w"
    with open(path, mode, newline="") as fh:
        writer = csv.writer(fh)
        if not append:
            writer.writerow(RECORD_FIELDS)
        for r in records:
            writer.writerow([r.step, r.epoch, r.slice_idx, r.mask_idx,
                             repr(r.loss), repr(r.grad_norm), repr(r.wall_time)])


def _family_seed(mask_seed: int, slice_idx: int, epoch: int | None) -> int:
    entropy = [mask_seed, slice_idx] if epoch is None else [mask_seed, slice_idx, epoch]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def mask_families(ds: Dataset, cfg: ExperimentConfig, conventional: bool,
                  epoch: int | None = None) -> dict[int, MaskFamily]:
    """One family per training slice; conventional mode uses the parent mask."""
    s = cfg.sampling
    fams = {}
    for i in range(ds.n_train):
        omega = acquisition_mask(cfg, i)
        if conventional:
            fams[i] = MaskFamily(omega, (omega,), 1.0, 0)
        else:
            fams[i] = partition_masks(omega, s.n_masks, s.rho,
                                      _family_seed(s.mask_seed, i, epoch),
                                      s.acs_policy)
    return fams


def train_supervised(ds: Dataset, cfg: ExperimentConfig, *,
                     conventional: bool = False,
                     out_dir: str | Path | None = None,
                     resume_from: str | Path | None = None,
                     quiet: bool = True):
    """Run the full training loop; returns (params, adam, records).

    One optimization step per (slice, mask) pair, visited once per epoch in
    seeded shuffled order.  Aborts with NumericalError on a non-finite loss
    or gradient.  Writes one checkpoint per epoch when out_dir is given.
    """
    mcfg, tcfg = cfg.model, cfg.train
    n_masks = 1 if conventional else cfg.sampling.n_masks
    start_epoch = 0
    step = 0
    if resume_from is not None:
        params, adam, meta = load_checkpoint(resume_from)
        if adam is None:
            raise DataError(f"{resume_from}: checkpoint has no optimizer state")
        start_epoch = int(meta["epoch"]) + 1
        step = int(meta["step"])
    else:
        params = init_params(mcfg.n_unrolls, mcfg.n_cg, mcfg.n_blocks,
                             mcfg.n_features, seed=tcfg.init_seed,
                             kernel=mcfg.kernel,
                             share_weights=mcfg.share_weights)
        adam = AdamState.init(params)

    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    families = mask_families(ds, cfg, conventional)
    if out_dir is not None:
        manifest = {
            "format": "mrunroll-train",
            "dataset": str(ds.root),
            "conventional": conventional,
            "config": config_to_dict(cfg),
            "families": {
                str(i): {"parent": fam.parent.to_json(),
                         "children": [c.to_json() for c in fam.children]}
                for i, fam in families.items()},
        }
        (out_dir / "train_manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True))
    refs = {i: to_channels(ds.get_slice(i).kspace) for i in range(ds.n_train)}
    pairs = [(i, j) for i in range(ds.n_train) for j in range(n_masks)]
    records: list[TrainRecord] = []

    for epoch in range(start_epoch, tcfg.epochs):
        if tcfg.resample_masks and not conventional and epoch > 0:
            families = mask_families(ds, cfg, conventional, epoch=epoch)
        rng = np.random.default_rng(
            np.random.SeedSequence([tcfg.shuffle_seed, epoch]))
        order = rng.permutation(len(pairs))
        epoch_records = []
        for idx in order:
            i, j = pairs[idx]
            step += 1
            rec = _train_step(ds, cfg, params, adam, families[i].children[j],
                              refs[i], step, epoch, i, j)
            epoch_records.append(rec)
        records.extend(epoch_records)
        if out_dir is not None:
            meta = {"epoch": epoch, "step": step,
                    "conventional": conventional,
                    "n_masks": n_masks, "rho": 1.0 if conventional else cfg.sampling.rho,
                    "config": config_to_dict(cfg)}
            save_checkpoint(out_dir / f"epoch_{epoch:03d}.ckpt", params, adam, meta)
            save_checkpoint(out_dir / "final.ckpt", params, adam, meta)
            write_records_csv(out_dir / "log.csv", epoch_records,
                              append=epoch > start_epoch)
        if not quiet:
            mean_loss = float(np.mean([r.loss for r in epoch_records]))
            print(f"epoch {epoch:3d}  mean loss {mean_loss:.5f}")
    return params, adam, records


def _train_step(ds: Dataset, cfg: ExperimentConfig, params: ModelParams,
                adam: AdamState, theta: SamplingMask, ref_channels: np.ndarray,
                step: int, epoch: int, slice_idx: int, mask_idx: int) -> TrainRecord:
    t0 = time.perf_counter()
    sl = ds.get_slice(slice_idx)
    sel = theta.to_bool_array()
    y_theta = to_channels(sl.kspace * sel[None, None, :])

    tape = Tape()
    pvars = stage_params(tape, params)
    _, k_full, _ = build_unrolled(tape, y_theta, sl.coils, sel, params, pvars)
    ref = tape.constant(ref_channels)
    loss = loss_graph(ref, k_full, cfg.train.w_l2, cfg.train.w_l1)
    loss_val = float(loss.value)
    if not np.isfinite(loss_val):
        raise NumericalError(f"non-finite loss at step {step} "
                             f"(slice {slice_idx}, mask {mask_idx})")

    tape.backward(loss)
    grads = {}
    sq = 0.0
    for name, var in pvars.items():
        g = tape.grads.get(var.node.id)
        if g is None:
            g = np.zeros_like(params.arrays[name])
        grads[name] = g
        sq += float(np.vdot(g, g))
    grad_norm = float(np.sqrt(sq))
    if not np.isfinite(grad_norm):
        raise NumericalError(f"non-finite gradient at step {step} "
                             f"(slice {slice_idx}, mask {mask_idx})")
    adam_step(params.arrays, grads, adam, cfg.train.lr)
    return TrainRecord(step, epoch, slice_idx, mask_idx, loss_val, grad_norm,
                       time.perf_counter() - t0)
