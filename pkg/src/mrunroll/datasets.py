"""Synthetic dataset generation and on-disk format.

A dataset is a directory with `manifest.json` plus one binary file per
slice.  Each slice file is a little-endian float64 concatenation of

    ground-truth image   (2, H, W)   real plane, then imaginary plane
    coil maps            (C, 2, H, W)
    fully sampled k-space(C, 2, H, W)

The stored k-space is the (optionally noisy) acquisition; undersampling
is applied retrospectively by masking columns.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, config_from_dict, config_to_dict
from .diffcore import to_channels, to_complex
from .errors import DataError
from .physics import add_noise, apply_forward, make_coil_maps, make_phantom
from .sampling import SamplingMask, full_mask, random_mask, uniform_mask

MANIFEST_NAME = "manifest.json"
DATASET_VERSION = 1


@dataclass
class SliceData:
    image: np.ndarray    # complex (H, W)
    coils: np.ndarray    # complex (C, H, W)
    kspace: np.ndarray   # complex (C, H, W), fully sampled


@dataclass
class Dataset:
    root: Path
    config: ExperimentConfig
    n_train: int
    n_test: int
    _cache: dict

    @property
    def n_slices(self) -> int:
        return self.n_train + self.n_test

    def train_indices(self) -> range:
        return range(self.n_train)

    def test_indices(self) -> range:
        return range(self.n_train, self.n_slices)

    def get_slice(self, idx: int) -> SliceData:
        if idx not in self._cache:
            self._cache[idx] = read_slice(self.root, idx, self.config)
        return self._cache[idx]


def slice_path(root: Path, idx: int) -> Path:
    return Path(root) / f"slice_{idx:04d}.bin"


def _slice_seed(seed: int, idx: int, tag: int) -> int:
    return int(np.random.SeedSequence([seed, idx, tag]).generate_state(1)[0])


def synthesize_slice(cfg: ExperimentConfig, idx: int) -> SliceData:
    d = cfg.data
    image = make_phantom(d.height, d.width, _slice_seed(d.seed, idx, 0))
    coils = make_coil_maps(d.n_coils, d.height, d.width, _slice_seed(d.seed, idx, 1))
    full = full_mask(d.width)
    kspace = apply_forward(image, coils, full)
    kspace = add_noise(kspace, full, d.noise_sigma, _slice_seed(d.seed, idx, 2))
    return SliceData(image, coils, kspace)


def write_slice(root: Path, idx: int, sl: SliceData) -> None:
    parts = [to_channels(sl.image), to_channels(sl.coils), to_channels(sl.kspace)]
    with open(slice_path(root, idx), "wb") as fh:
        for part in parts:
            fh.write(np.ascontiguousarray(part, dtype="<f8").tobytes())


def read_slice(root: Path, idx: int, cfg: ExperimentConfig) -> SliceData:
    d = cfg.data
    path = slice_path(root, idx)
    try:
        raw = path.read_bytes()
    except FileNotFoundError as e:
        raise DataError(f"missing slice file: {path}") from e
    n_img = 2 * d.height * d.width
    n_coil = d.n_coils * n_img
    expected = (n_img + 2 * n_coil) * 8
    if len(raw) != expected:
        raise DataError(f"{path}: expected {expected} bytes, found {len(raw)}")
    flat = np.frombuffer(raw, dtype="<f8")
    image = to_complex(flat[:n_img].reshape(2, d.height, d.width))
    coils = to_complex(flat[n_img:n_img + n_coil]
                       .reshape(d.n_coils, 2, d.height, d.width))
    kspace = to_complex(flat[n_img + n_coil:]
                        .reshape(d.n_coils, 2, d.height, d.width))
    return SliceData(image, coils, kspace)


def generate_dataset(cfg: ExperimentConfig, out_dir: str | Path) -> Dataset:
    """Write manifest and slice files; byte-identical for identical configs."""
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    d = cfg.data
    for idx in range(d.n_train + d.n_test):
        write_slice(root, idx, synthesize_slice(cfg, idx))
    manifest = {
        "format": "mrunroll-dataset",
        "version": DATASET_VERSION,
        "height": d.height, "width": d.width, "n_coils": d.n_coils,
        "n_train": d.n_train, "n_test": d.n_test,
        "noise_sigma": d.noise_sigma, "seed": d.seed,
        "config": config_to_dict(cfg),
    }
    (root / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return load_dataset(root)


def load_dataset(path: str | Path) -> Dataset:
    root = Path(path)
    manifest_path = root / MANIFEST_NAME
    try:
        manifest = json.loads(manifest_path.read_text())
    except FileNotFoundError as e:
        raise DataError(f"not a dataset directory (no {MANIFEST_NAME}): {root}") from e
    except json.JSONDecodeError as e:
        raise DataError(f"{manifest_path}: corrupt manifest: {e}") from e
    if manifest.get("format") != "mrunroll-dataset":
        raise DataError(f"{manifest_path}: not a dataset manifest")
    if manifest.get("version") != DATASET_VERSION:
        raise DataError(f"{manifest_path}: unsupported dataset version "
                        f"{manifest.get('version')}")
    cfg = config_from_dict(manifest["config"])
    d = cfg.data
    for key, want in (("height", d.height), ("width", d.width),
                      ("n_coils", d.n_coils), ("n_train", d.n_train),
                      ("n_test", d.n_test)):
        if manifest.get(key) != want:
            raise DataError(f"{manifest_path}: manifest field {key} disagrees "
                            f"with embedded config")
    ds = Dataset(root, cfg, d.n_train, d.n_test, {})
    for idx in range(ds.n_slices):
        if not slice_path(root, idx).exists():
            raise DataError(f"missing slice file: {slice_path(root, idx)}")
    return ds


def acquisition_mask(cfg: ExperimentConfig, slice_idx: int) -> SamplingMask:
    """Parent sampling pattern for one slice (uniform is slice-independent)."""
    s, d = cfg.sampling, cfg.data
    if s.pattern == "uniform":
        return uniform_mask(d.width, s.accel, s.n_acs)
    seed = int(np.random.SeedSequence([s.mask_seed, slice_idx, 99]).generate_state(1)[0])
    return random_mask(d.width, s.accel, s.n_acs, seed)
