import dataclasses
import json

import numpy as np
import pytest

from mrunroll import physics
from mrunroll.datasets import (acquisition_mask, generate_dataset,
                               load_dataset, read_slice, slice_path,
                               synthesize_slice)
from mrunroll.errors import DataError
from mrunroll.sampling import full_mask
from conftest import tiny_config


def test_generate_is_byte_identical(tmp_path):
    cfg = tiny_config()
    a = tmp_path / "a"
    b = tmp_path / "b"
    generate_dataset(cfg, a)
    generate_dataset(cfg, b)
    for name in sorted(p.name for p in a.iterdir()):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_roundtrip_preserves_values(tiny_dataset):
    ds, cfg = tiny_dataset
    sl = ds.get_slice(0)
    fresh = synthesize_slice(cfg, 0)
    assert np.array_equal(sl.image, fresh.image)
    assert np.array_equal(sl.coils, fresh.coils)
    assert np.array_equal(sl.kspace, fresh.kspace)


def test_stored_kspace_is_noisy_encoding_of_image(tiny_dataset):
    ds, cfg = tiny_dataset
    sl = ds.get_slice(1)
    clean = physics.apply_forward(sl.image, sl.coils, full_mask(cfg.data.width))
    resid = sl.kspace - clean
    # residual is the injected acquisition noise, scale sigma per component
    per_component = np.concatenate([resid.real.ravel(), resid.imag.ravel()])
    assert abs(per_component.std() - cfg.data.noise_sigma) < 0.2 * cfg.data.noise_sigma


def test_missing_slice_detected(tmp_path):
    cfg = tiny_config()
    root = tmp_path / "ds"
    generate_dataset(cfg, root)
    slice_path(root, 1).unlink()
    with pytest.raises(DataError, match="missing slice"):
        load_dataset(root)


def test_truncated_slice_detected(tmp_path):
    cfg = tiny_config()
    root = tmp_path / "ds"
    ds = generate_dataset(cfg, root)
    p = slice_path(root, 0)
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(DataError, match="expected"):
        read_slice(root, 0, ds.config)


def test_manifest_mismatch_detected(tmp_path):
    cfg = tiny_config()
    root = tmp_path / "ds"
    generate_dataset(cfg, root)
    manifest = json.loads((root / "manifest.json").read_text())
    manifest["height"] = 999
    (root / "manifest.json").write_text(json.dumps(manifest))
    with pytest.raises(DataError, match="disagrees"):
        load_dataset(root)


def test_not_a_dataset_directory(tmp_path):
    with pytest.raises(DataError, match="manifest"):
        load_dataset(tmp_path)


def test_split_indices(tiny_dataset):
    ds, cfg = tiny_dataset
    assert list(ds.train_indices()) == [0, 1, 2]
    assert list(ds.test_indices()) == [3, 4]
    assert ds.n_slices == 5


def test_acquisition_mask_uniform_is_shared(tiny_dataset):
    _, cfg = tiny_dataset
    assert acquisition_mask(cfg, 0) == acquisition_mask(cfg, 4)


def test_acquisition_mask_random_varies_per_slice():
    cfg = tiny_config()
    cfg = dataclasses.replace(
        cfg, sampling=dataclasses.replace(cfg.sampling, pattern="random"))
    masks = {acquisition_mask(cfg, i).indices for i in range(4)}
    assert len(masks) > 1
    assert acquisition_mask(cfg, 2) == acquisition_mask(cfg, 2)
