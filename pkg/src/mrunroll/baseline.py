"""CG-SENSE reference reconstruction (plain numpy, no learned components)."""

from __future__ import annotations

import numpy as np

from .physics import apply_adjoint, normal_operator
from .sampling import SamplingMask


def cg_sense(kspace: np.ndarray, mask: SamplingMask, coils: np.ndarray,
             lam: float = 0.0, n_iter: int = 30,
             return_residuals: bool = False):
    """Conjugate-gradient solve of (A^H A + lam I) x = A^H y from x0 = 0.

    `kspace` is masked multi-coil data (C, H, W).  lam=0 is the plain
    least-squares reconstruction; a small lam adds Tikhonov damping.
    """
    if lam < 0:
        raise ValueError(f"cg_sense: lam must be >= 0, got {lam}")
    if n_iter < 1:
        raise ValueError(f"cg_sense: n_iter must be >= 1, got {n_iter}")
    b = apply_adjoint(kspace, coils, mask)
    x = np.zeros_like(b)
    r = b.copy()
    p = r.copy()
    rr = float(np.real(np.vdot(r, r)))
    residuals = [np.sqrt(rr)]
    for _ in range(n_iter):
        if rr == 0.0:
            break
        ap = normal_operator(p, coils, mask) + lam * p
        pap = float(np.real(np.vdot(p, ap)))
        if pap <= 0.0:
            break
        alpha = rr / pap
        x += alpha * p
        r -= alpha * ap
        rr_new = float(np.real(np.vdot(r, r)))
        residuals.append(np.sqrt(rr_new))
        p = r + (rr_new / rr) * p
        rr = rr_new
    if return_residuals:
        return x, residuals
    return x
