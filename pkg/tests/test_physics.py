import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mrunroll import physics
from mrunroll.diffcore import fft2c
from mrunroll.sampling import full_mask, random_mask, uniform_mask


def _rand_complex(rng, shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def test_forward_identity_coil_full_mask_is_fft():
    rng = np.random.default_rng(0)
    x = _rand_complex(rng, (8, 8))
    coils = np.ones((1, 8, 8), dtype=np.complex128)
    out = physics.apply_forward(x, coils, full_mask(8))
    assert np.allclose(out[0], fft2c(x), atol=1e-14)


def test_forward_empty_mask_is_zero():
    rng = np.random.default_rng(1)
    x = _rand_complex(rng, (8, 8))
    coils = physics.make_coil_maps(2, 8, 8, seed=2)
    empty = uniform_mask(8, 1, 0)
    empty = type(empty)(8, (), frozenset())
    out = physics.apply_forward(x, coils, empty)
    assert np.all(out == 0)


@given(st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_adjoint_identity(seed):
    rng = np.random.default_rng(seed)
    h, w, c = 8, 8, 2
    coils = physics.make_coil_maps(c, h, w, seed=seed)
    mask = random_mask(w, 2, 2, seed=seed + 1)
    x = _rand_complex(rng, (h, w))
    k = _rand_complex(rng, (c, h, w))
    ex = physics.apply_forward(x, coils, mask)
    ehk = physics.apply_adjoint(k, coils, mask)
    gap = abs(np.vdot(k, ex) - np.vdot(ehk, x))
    assert gap <= 1e-10 * max(np.linalg.norm(ex) * np.linalg.norm(k), 1e-30)


def test_adjoint_forward_is_identity_under_full_mask():
    rng = np.random.default_rng(3)
    coils = physics.make_coil_maps(4, 16, 16, seed=7)
    full = full_mask(16)
    for _ in range(50):
        x = _rand_complex(rng, (16, 16))
        back = physics.apply_adjoint(physics.apply_forward(x, coils, full), coils, full)
        assert np.linalg.norm(back - x) <= 1e-10 * np.linalg.norm(x)


def test_subset_mask_equals_masked_full_forward():
    rng = np.random.default_rng(4)
    x = _rand_complex(rng, (16, 16))
    coils = physics.make_coil_maps(3, 16, 16, seed=5)
    omega = random_mask(16, 2, 4, seed=6)
    full_k = physics.apply_forward(x, coils, full_mask(16))
    sub_k = physics.apply_forward(x, coils, omega)
    assert np.array_equal(sub_k, full_k * omega.to_bool_array()[None, None, :])


def test_kspace_zero_on_unsampled_lines():
    rng = np.random.default_rng(5)
    x = _rand_complex(rng, (16, 16))
    coils = physics.make_coil_maps(2, 16, 16, seed=5)
    omega = uniform_mask(16, 4, 2)
    k = physics.apply_forward(x, coils, omega)
    unsampled = ~omega.to_bool_array()
    assert np.all(k[:, :, unsampled] == 0)


def test_shape_mismatch_rejected():
    coils = physics.make_coil_maps(2, 16, 16, seed=1)
    with pytest.raises(ValueError):
        physics.apply_forward(np.zeros((8, 8), complex), coils, full_mask(16))
    with pytest.raises(ValueError):
        physics.apply_adjoint(np.zeros((3, 16, 16), complex), coils, full_mask(16))


# ---------------------------------------------------------------------------
# phantoms
# ---------------------------------------------------------------------------


def test_phantom_deterministic():
    a = physics.make_phantom(32, 32, seed=11)
    b = physics.make_phantom(32, 32, seed=11)
    assert a.tobytes() == b.tobytes()


def test_phantom_peak_magnitude_exactly_one():
    img = physics.make_phantom(64, 64, seed=1)
    assert np.abs(img).max() == 1.0


def test_phantom_support_coverage():
    # support = pixels above 1% of the unit peak
    for seed in range(100):
        img = physics.make_phantom(64, 64, seed=seed)
        assert np.mean(np.abs(img) > 0.01) >= 0.20, f"seed {seed}"


def test_phantom_rejects_tiny_dimensions():
    with pytest.raises(ValueError):
        physics.make_phantom(8, 64, seed=0)


def test_phantom_has_nontrivial_phase():
    img = physics.make_phantom(64, 64, seed=3)
    support = np.abs(img) > 0.05
    phases = np.angle(img[support])
    assert phases.std() > 0.05


# ---------------------------------------------------------------------------
# coil maps
# ---------------------------------------------------------------------------


def test_single_coil_unit_magnitude():
    maps = physics.make_coil_maps(1, 24, 24, seed=2)
    assert np.abs(np.abs(maps[0]) - 1.0).max() <= 1e-10


@pytest.mark.parametrize("n_coils", [1, 2, 4, 8])
def test_coil_normalization(n_coils):
    maps = physics.make_coil_maps(n_coils, 20, 24, seed=3)
    ssq = np.sum(np.abs(maps) ** 2, axis=0)
    assert np.abs(ssq - 1.0).max() <= 1e-10


def test_coil_profiles_distinct():
    maps = physics.make_coil_maps(4, 64, 64, seed=7)
    mags = np.abs(maps).reshape(4, -1)
    corr = np.corrcoef(mags)
    off_diag = corr[np.triu_indices(4, 1)]
    assert off_diag.max() < 0.95


def test_coil_maps_rejects_zero_coils():
    with pytest.raises(ValueError):
        physics.make_coil_maps(0, 16, 16, seed=0)


# ---------------------------------------------------------------------------
# noise
# ---------------------------------------------------------------------------


def test_noise_sigma_zero_is_identity():
    rng = np.random.default_rng(6)
    k = _rand_complex(rng, (2, 16, 16))
    out = physics.add_noise(k, full_mask(16), 0.0, seed=1)
    assert np.array_equal(out, k)


def test_noise_leaves_unsampled_lines_zero():
    rng = np.random.default_rng(7)
    mask = uniform_mask(16, 4, 2)
    k = physics.apply_forward(_rand_complex(rng, (16, 16)),
                              physics.make_coil_maps(2, 16, 16, seed=1), mask)
    noisy = physics.add_noise(k, mask, 0.01, seed=2)
    unsampled = ~mask.to_bool_array()
    assert np.all(noisy[:, :, unsampled] == 0)


def test_noise_deterministic_in_seed():
    rng = np.random.default_rng(8)
    k = _rand_complex(rng, (2, 16, 16))
    a = physics.add_noise(k, full_mask(16), 0.05, seed=9)
    b = physics.add_noise(k, full_mask(16), 0.05, seed=9)
    assert a.tobytes() == b.tobytes()


def test_noise_sample_std():
    # 2 coils x 64 x 80 = 10240 sampled entries
    k = np.zeros((2, 64, 80), dtype=np.complex128)
    noisy = physics.add_noise(k, full_mask(80), 0.05, seed=10)
    measured = np.concatenate([noisy.real.ravel(), noisy.imag.ravel()]).std()
    assert abs(measured - 0.05) <= 0.03 * 0.05


def test_noise_rejects_negative_sigma():
    with pytest.raises(ValueError):
        physics.add_noise(np.zeros((1, 16, 16), complex), full_mask(16), -0.1, seed=0)
