"""Unrolled reconstruction network: residual regularizer + CG data consistency.

One unroll applies the regularizer network to the current image estimate
and then solves the penalized normal equations

    (A^H A + mu I) x = A^H y + mu z,     A = encoding operator on the mask

with a fixed number of conjugate-gradient iterations, initialized at z.
The whole forward pass (including the CG loop) is recorded on a diffcore
tape, so training gradients differentiate the CG iterations literally.

The penalty weight mu is a single trainable scalar stored as log(mu) and
shared across unrolls.  Weights are shared across unrolls by default;
per-unroll weights are kept under "unroll{t}."-prefixed parameter names.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import diffcore as dc
from .diffcore import Tape, Var, to_channels, to_complex
from .sampling import SamplingMask

CG_EPS = 1e-30  # keeps exact-convergence CG steps at 0/0 -> 0 instead of NaN


@dataclass
class ModelParams:
    """Trainable arrays (ordered by name) plus architecture hyperparameters."""

    arrays: dict[str, np.ndarray]
    n_unrolls: int
    n_cg: int
    n_blocks: int
    n_features: int
    kernel: int = 3
    share_weights: bool = True

    @property
    def mu(self) -> float:
        return float(np.exp(self.arrays["log_mu"]))

    def copy(self) -> "ModelParams":
        return ModelParams({k: v.copy() for k, v in self.arrays.items()},
                           self.n_unrolls, self.n_cg, self.n_blocks,
                           self.n_features, self.kernel, self.share_weights)

    def n_values(self) -> int:
        return sum(a.size for a in self.arrays.values())


def _layer_names(n_blocks: int, prefix: str = "") -> list[str]:
    names = [f"{prefix}conv_in.w", f"{prefix}conv_in.b"]
    for i in range(n_blocks):
        names += [f"{prefix}block{i}.conv1.w", f"{prefix}block{i}.conv1.b",
                  f"{prefix}block{i}.conv2.w", f"{prefix}block{i}.conv2.b"]
    names += [f"{prefix}conv_out.w", f"{prefix}conv_out.b"]
    return names


def init_params(n_unrolls: int, n_cg: int, n_blocks: int, n_features: int,
                seed: int, kernel: int = 3, share_weights: bool = True,
                mu0: float = 0.05) -> ModelParams:
    """He-initialized kernels, zero biases, log-parameterized penalty weight."""
    if mu0 <= 0:
        raise ValueError(f"init_params: mu0 must be > 0, got {mu0}")
    rng = np.random.default_rng(seed)
    k, f = kernel, n_features

    def he(c_out, c_in):
        std = math.sqrt(2.0 / (c_in * k * k))
        return rng.normal(0.0, std, size=(c_out, c_in, k, k))

    arrays: dict[str, np.ndarray] = {}
    prefixes = [""] if share_weights else [f"unroll{t}." for t in range(n_unrolls)]
    for prefix in prefixes:
        arrays[f"{prefix}conv_in.w"] = he(f, 2)
        arrays[f"{prefix}conv_in.b"] = np.zeros(f)
        for i in range(n_blocks):
            arrays[f"{prefix}block{i}.conv1.w"] = he(f, f)
            arrays[f"{prefix}block{i}.conv1.b"] = np.zeros(f)
            arrays[f"{prefix}block{i}.conv2.w"] = he(f, f)
            arrays[f"{prefix}block{i}.conv2.b"] = np.zeros(f)
        arrays[f"{prefix}conv_out.w"] = he(2, f)
        arrays[f"{prefix}conv_out.b"] = np.zeros(2)
    arrays["log_mu"] = np.asarray(math.log(mu0), dtype=np.float64).reshape(())
    return ModelParams(arrays, n_unrolls, n_cg, n_blocks, n_features, kernel,
                       share_weights)


def stage_params(tape: Tape, params: ModelParams) -> dict[str, Var]:
    """Put every trainable array on the tape as a leaf."""
    return {name: tape.leaf(arr) for name, arr in params.arrays.items()}


# ---------------------------------------------------------------------------
# Graph builders (operate on tape Vars)
# ---------------------------------------------------------------------------


def encode_graph(x: Var, coils: np.ndarray, sel: np.ndarray | None) -> Var:
    """Image (2, H, W) -> k-space (C, 2, H, W) from fine-grained primitives.

    Reference composition; the unrolled network uses the fused SenseOp
    primitives, which are tested to agree with this path.
    """
    k = dc.fft2(dc.coil_project(x, coils))
    return dc.mask_columns(k, sel) if sel is not None else k


def encode_adjoint_graph(y: Var, coils: np.ndarray, sel: np.ndarray | None) -> Var:
    yk = dc.mask_columns(y, sel) if sel is not None else y
    return dc.coil_combine(dc.ifft2(yk), coils)


def regularizer_graph(x: Var, layer: dict[str, Var], n_blocks: int) -> Var:
    h = dc.bias_add(dc.conv2d(x, layer["conv_in.w"]), layer["conv_in.b"])
    for i in range(n_blocks):
        t = dc.bias_add(dc.conv2d(h, layer[f"block{i}.conv1.w"]),
                        layer[f"block{i}.conv1.b"])
        t = dc.relu(t)
        t = dc.bias_add(dc.conv2d(t, layer[f"block{i}.conv2.w"]),
                        layer[f"block{i}.conv2.b"])
        h = dc.add(h, dc.scale(t, 0.1))
    corr = dc.bias_add(dc.conv2d(h, layer["conv_out.w"]), layer["conv_out.b"])
    return dc.add(x, corr)


def dc_graph(z: Var, y: Var, op: dc.SenseOp, mu: Var, n_cg: int) -> Var:
    """n_cg unrolled CG iterations on (A^H A + mu I) x = A^H y + mu z, x0 = z."""

    def normal_op(v: Var) -> Var:
        return dc.add(dc.sense_normal(v, op), dc.smul(mu, v))

    b = dc.add(dc.sense_adjoint(y, op), dc.smul(mu, z))
    x = z
    r = dc.sub(b, normal_op(x))
    p = r
    rr = dc.dot(r, r)
    for _ in range(n_cg):
        ap = normal_op(p)
        alpha = dc.div(rr, dc.dot(p, ap), eps=CG_EPS)
        x = dc.add(x, dc.smul(alpha, p))
        r = dc.sub(r, dc.smul(alpha, ap))
        rr_new = dc.dot(r, r)
        beta = dc.div(rr_new, rr, eps=CG_EPS)
        p = dc.add(r, dc.smul(beta, p))
        rr = rr_new
    return x


def _layer_vars(pvars: dict[str, Var], params: ModelParams, t: int) -> dict[str, Var]:
    prefix = "" if params.share_weights else f"unroll{t}."
    return {name[len(prefix):]: pvars[name]
            for name in _layer_names(params.n_blocks, prefix)}


def build_unrolled(tape: Tape, y_channels: np.ndarray, coils: np.ndarray,
                   sel: np.ndarray | None, params: ModelParams,
                   pvars: dict[str, Var], record: bool = False):
    """Record the full unrolled forward pass; returns (image, full k-space)."""
    op_mask = dc.SenseOp(coils, sel)
    op_full = dc.SenseOp(coils, None)
    yv = tape.constant(y_channels)
    mu = dc.exp(pvars["log_mu"])
    x = dc.sense_adjoint(yv, op_mask)
    inter: list[Var] = [x] if record else []
    for t in range(params.n_unrolls):
        z = regularizer_graph(x, _layer_vars(pvars, params, t), params.n_blocks)
        x = dc_graph(z, yv, op_mask, mu, params.n_cg)
        if record:
            inter.append(x)
    k_full = dc.sense_forward(x, op_full)
    return x, k_full, inter


# ---------------------------------------------------------------------------
# Array-facing entry points
# ---------------------------------------------------------------------------


@dataclass
class ReconResult:
    image: np.ndarray                      # complex (H, W)
    kspace: np.ndarray                     # complex (C, H, W), fully sampled
    intermediates: list[np.ndarray] = field(default_factory=list)


def regularizer_unit(image: np.ndarray, params: ModelParams,
                     unroll_idx: int = 0) -> np.ndarray:
    """Apply the residual regularizer network to one complex image."""
    tape = Tape()
    pvars = stage_params(tape, params)
    x = tape.constant(to_channels(image))
    out = regularizer_graph(x, _layer_vars(pvars, params, unroll_idx),
                            params.n_blocks)
    return to_complex(out.value)


def data_consistency(z: np.ndarray, y: np.ndarray, mask: SamplingMask,
                     coils: np.ndarray, mu: float, n_cg: int) -> np.ndarray:
    """Solve the penalized data-consistency problem from initial image z."""
    if mu <= 0:
        raise ValueError(f"data_consistency: mu must be > 0, got {mu}")
    if n_cg < 1:
        raise ValueError(f"data_consistency: n_cg must be >= 1, got {n_cg}")
    tape = Tape()
    zv = tape.constant(to_channels(z))
    yv = tape.constant(to_channels(y))
    muv = tape.constant(np.asarray(mu, dtype=np.float64).reshape(()))
    op = dc.SenseOp(coils, mask.to_bool_array())
    out = dc_graph(zv, yv, op, muv, n_cg)
    return to_complex(out.value)


def unrolled_forward(y: np.ndarray, mask: SamplingMask, coils: np.ndarray,
                     params: ModelParams, record: bool = False) -> ReconResult:
    """Reconstruct one slice from masked multi-coil k-space (C, H, W)."""
    tape = Tape()
    pvars = stage_params(tape, params)
    x, k_full, inter = build_unrolled(tape, to_channels(y), coils,
                                      mask.to_bool_array(), params, pvars,
                                      record=record)
    return ReconResult(to_complex(x.value), to_complex(k_full.value),
                       [to_complex(v.value) for v in inter])
