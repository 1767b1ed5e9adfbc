"""Shared test helpers: finite-difference oracles and dense operator builds."""

import dataclasses

import numpy as np
import pytest

from mrunroll import physics
from mrunroll.config import (DataConfig, ExperimentConfig, ModelConfig,
                             SamplingConfig, TrainConfig)
from mrunroll.datasets import generate_dataset


def central_difference(fn, x0, index, h=1e-6):
    """d fn / d x0[index] by central differences; fn maps ndarray -> float."""
    xp = x0.copy()
    xp[index] += h
    xm = x0.copy()
    xm[index] -= h
    return (fn(xp) - fn(xm)) / (2.0 * h)


def rel_err(a, b, floor=1e-10):
    return abs(a - b) / max(abs(a), abs(b), floor)


# Denominator floor for gradient checks of O(1) losses: central differences
# at step 1e-6 in float64 carry ~1e-10 absolute noise, so coordinates with
# |g| below this floor are effectively compared absolutely (at floor * tol).
GRAD_FLOOR = 1e-4


def dense_normal_matrix(coils, mask, mu):
    """Dense complex matrix of (A^H A + mu I), built column by column."""
    _, h, w = coils.shape
    n = h * w
    mat = np.zeros((n, n), dtype=np.complex128)
    for j in range(n):
        e = np.zeros(n, dtype=np.complex128)
        e[j] = 1.0
        col = physics.normal_operator(e.reshape(h, w), coils, mask) + mu * e.reshape(h, w)
        mat[:, j] = col.ravel()
    return mat


def tiny_config(**overrides):
    """Small, fast experiment configuration for pipeline tests."""
    cfg = ExperimentConfig(
        data=DataConfig(height=16, width=16, n_coils=2, n_train=3, n_test=2,
                        noise_sigma=0.01, seed=5),
        sampling=SamplingConfig(pattern="uniform", accel=2, n_acs=4, n_masks=2,
                                rho=0.7, mask_seed=3),
        model=ModelConfig(n_unrolls=1, n_cg=2, n_blocks=1, n_features=4),
        train=TrainConfig(lr=5e-4, epochs=2, init_seed=1, shuffle_seed=2),
    )
    for section, value in overrides.items():
        cfg = dataclasses.replace(cfg, **{section: value})
    return cfg


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    cfg = tiny_config()
    root = tmp_path_factory.mktemp("tiny_ds")
    return generate_dataset(cfg, root), cfg
