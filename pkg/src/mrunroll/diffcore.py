"""Reverse-mode differentiation over dense float64 arrays.

Complex quantities are carried as two real channels stacked on axis -3
(real plane first, imaginary plane second): a complex H x W image is a
(2, H, W) array, multi-coil k-space is (C, 2, H, W).  The engine is a flat
tape: every operation appends a :class:`Node` caching its output, and
``Tape.backward`` walks the tape once in reverse, accumulating
vector-Jacobian products as plain numpy arrays.

The centered orthonormal 2-D FFT pair (`fft2c` / `ifft2c`) lives here so
the tape primitives and the plain-numpy reconstruction code share a single
convention.  With this symmetric shift layout the inverse transform is
also the exact adjoint, which keeps every downstream adjoint identity
tight to rounding error.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

_AXES = (-2, -1)


# ---------------------------------------------------------------------------
# Centered orthonormal FFT on complex arrays (shared convention)
# ---------------------------------------------------------------------------


def fft2c(z: np.ndarray) -> np.ndarray:
    """Centered orthonormal 2-D FFT over the trailing two axes."""
    return np.fft.fftshift(
        np.fft.fft2(np.fft.ifftshift(z, axes=_AXES), norm="ortho"), axes=_AXES
    )


def ifft2c(z: np.ndarray) -> np.ndarray:
    """Inverse (and adjoint) of :func:`fft2c`."""
    return np.fft.fftshift(
        np.fft.ifft2(np.fft.ifftshift(z, axes=_AXES), norm="ortho"), axes=_AXES
    )


def to_channels(z: np.ndarray) -> np.ndarray:
    """Complex (..., H, W) -> real channel pair (..., 2, H, W)."""
    return np.stack([z.real, z.imag], axis=-3)


def to_complex(x: np.ndarray) -> np.ndarray:
    """Real channel pair (..., 2, H, W) -> complex (..., H, W)."""
    return x[..., 0, :, :] + 1j * x[..., 1, :, :]


# ---------------------------------------------------------------------------
# Tape
# ---------------------------------------------------------------------------


@dataclass
class Node:
    id: int
    op: str
    inputs: tuple[int, ...]
    value: np.ndarray
    attrs: dict = field(default_factory=dict)


class Var:
    """Handle to one tape node; supports +, -, * elementwise sugar."""

    __slots__ = ("tape", "node")

    def __init__(self, tape: "Tape", node: Node):
        self.tape = tape
        self.node = node

    @property
    def value(self) -> np.ndarray:
        return self.node.value

    @property
    def shape(self) -> tuple[int, ...]:
        return self.node.value.shape

    def __add__(self, other: "Var") -> "Var":
        return add(self, other)

    def __sub__(self, other: "Var") -> "Var":
        return sub(self, other)

    def __mul__(self, other: "Var") -> "Var":
        return mul(self, other)

    def __neg__(self) -> "Var":
        return scale(self, -1.0)

    def __repr__(self) -> str:
        return f"Var(id={self.node.id}, op={self.node.op!r}, shape={self.shape})"


class Tape:
    """Append-only computation graph.

    Node ids are positions in the node list, so inputs always precede the
    nodes consuming them.  A tape is single-threaded; independent tapes
    share no state.
    """

    def __init__(self):
        self.nodes: list[Node] = []
        self.grads: dict[int, np.ndarray] = {}

    def _emit(self, op: str, inputs: tuple[int, ...], value: np.ndarray, **attrs) -> Var:
        node = Node(len(self.nodes), op, inputs, np.asarray(value), attrs)
        self.nodes.append(node)
        return Var(self, node)

    def leaf(self, value: np.ndarray, check_finite: bool = True) -> Var:
        arr = np.asarray(value, dtype=np.float64)
        if arr.ndim > 0 and not arr.flags["C_CONTIGUOUS"]:
            arr = np.ascontiguousarray(arr)  # ascontiguousarray would turn 0-d into 1-d
        if check_finite and not np.all(np.isfinite(arr)):
            raise ValueError("leaf: array contains non-finite values")
        return self._emit("leaf", (), arr)

    # constants are leaves too; the alias just documents intent at call sites
    constant = leaf

    def backward(self, loss: Var) -> dict[int, np.ndarray]:
        """Accumulate d(loss)/d(node) for every node reachable from `loss`.

        Returns the id -> gradient map (also stored on ``self.grads``).
        Gradients have the shape of the node they belong to.
        """
        if loss.tape is not self:
            raise ValueError("backward: loss belongs to a different tape")
        if loss.node.value.shape != ():
            raise ValueError(
                f"backward: loss must be scalar, got shape {loss.node.value.shape}"
            )
        grads: dict[int, np.ndarray] = {loss.node.id: np.ones((), dtype=np.float64)}
        for node in reversed(self.nodes[: loss.node.id + 1]):
            g = grads.get(node.id)
            if g is None or node.op == "leaf":
                continue
            for input_id, contrib in _VJP[node.op](self, node, g):
                prev = grads.get(input_id)
                if prev is None:
                    if contrib is g:
                        # never store the upstream array itself: later in-place
                        # accumulation must not corrupt the finished gradient
                        contrib = g.copy()
                    elif not isinstance(contrib, np.ndarray):
                        # ufuncs decay 0-d arrays to immutable numpy scalars,
                        # which would silently drop later += accumulations
                        contrib = np.asarray(contrib, dtype=np.float64)
                    grads[input_id] = contrib
                else:
                    prev += contrib
        self.grads = grads
        return grads

    def grad(self, v: Var) -> np.ndarray:
        return self.grads[v.node.id]

    def _val(self, node_id: int) -> np.ndarray:
        return self.nodes[node_id].value


def _check(cond: bool, op: str, msg: str) -> None:
    if not cond:
        raise ValueError(f"{op}: {msg}")


def _same_shape(op: str, a: Var, b: Var) -> None:
    _check(a.shape == b.shape, op, f"shape mismatch {a.shape} vs {b.shape}")


def _same_tape(op: str, *vs: Var) -> Tape:
    tape = vs[0].tape
    _check(all(v.tape is tape for v in vs), op, "inputs live on different tapes")
    return tape


def _pair_axis(op: str, v: Var) -> None:
    _check(
        v.value.ndim >= 3 and v.shape[-3] == 2,
        op,
        f"expected (..., 2, H, W) channel-pair array, got shape {v.shape}",
    )


# ---------------------------------------------------------------------------
# Primitives
# ---------------------------------------------------------------------------


def add(a: Var, b: Var) -> Var:
    tape = _same_tape("add", a, b)
    _same_shape("add", a, b)
    return tape._emit("add", (a.node.id, b.node.id), a.value + b.value)


def sub(a: Var, b: Var) -> Var:
    tape = _same_tape("sub", a, b)
    _same_shape("sub", a, b)
    return tape._emit("sub", (a.node.id, b.node.id), a.value - b.value)


def mul(a: Var, b: Var) -> Var:
    tape = _same_tape("mul", a, b)
    _same_shape("mul", a, b)
    return tape._emit("mul", (a.node.id, b.node.id), a.value * b.value)


def scale(a: Var, c: float) -> Var:
    """Multiply by a compile-time constant."""
    c = float(c)
    return a.tape._emit("scale", (a.node.id,), c * a.value, c=c)


def smul(s: Var, a: Var) -> Var:
    """Multiply an array by a scalar *node* (used for CG coefficients, mu)."""
    tape = _same_tape("smul", s, a)
    _check(s.shape == (), "smul", f"scalar operand must have shape (), got {s.shape}")
    return tape._emit("smul", (s.node.id, a.node.id), s.value * a.value)


def div(a: Var, b: Var, eps: float = 0.0) -> Var:
    """Scalar division a / (b + eps)."""
    tape = _same_tape("div", a, b)
    _check(a.shape == () and b.shape == (), "div",
           f"operands must be scalars, got {a.shape} and {b.shape}")
    return tape._emit("div", (a.node.id, b.node.id), a.value / (b.value + eps), eps=eps)


def dot(a: Var, b: Var) -> Var:
    """Sum of the elementwise product over all real entries (scalar output)."""
    tape = _same_tape("dot", a, b)
    _same_shape("dot", a, b)
    val = np.asarray(np.vdot(a.value, b.value), dtype=np.float64).reshape(())
    return tape._emit("dot", (a.node.id, b.node.id), val)


def exp(a: Var) -> Var:
    return a.tape._emit("exp", (a.node.id,), np.exp(a.value))


def relu(a: Var) -> Var:
    return a.tape._emit("relu", (a.node.id,), np.maximum(a.value, 0.0))


def bias_add(x: Var, b: Var) -> Var:
    """Add a per-channel bias (C,) to a (C, H, W) feature map."""
    tape = _same_tape("bias_add", x, b)
    _check(x.value.ndim == 3, "bias_add", f"expected (C, H, W) input, got {x.shape}")
    _check(b.shape == (x.shape[0],), "bias_add",
           f"bias shape {b.shape} does not match channels {x.shape[0]}")
    return tape._emit("bias_add", (x.node.id, b.node.id),
                      x.value + b.value[:, None, None])


def _shift_cols(x: np.ndarray, kh: int, kw: int) -> np.ndarray:
    """Patch matrix (kh*kw*C_in, H*W) built from shifted copies of padded x."""
    c_in, h, wd = x.shape
    xp = np.pad(x, ((0, 0), (kh // 2, kh // 2), (kw // 2, kw // 2)))
    cols = np.empty((kh * kw * c_in, h * wd))
    t = 0
    for dy in range(kh):
        for dx in range(kw):
            cols[t:t + c_in] = xp[:, dy:dy + h, dx:dx + wd].reshape(c_in, h * wd)
            t += c_in
    return cols


def _conv2d_same(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """(C_in, H, W) * (C_out, C_in, kh, kw) -> (C_out, H, W), stride 1, zero pad."""
    c_out, c_in, kh, kw = w.shape
    h, wd = x.shape[1], x.shape[2]
    cols = _shift_cols(x, kh, kw)                                  # (kh*kw*C_in, H*W)
    w2 = w.transpose(2, 3, 1, 0).reshape(kh * kw * c_in, c_out)
    return (w2.T @ cols).reshape(c_out, h, wd)


def conv2d(x: Var, w: Var) -> Var:
    """2-D convolution, stride 1, zero padding 'same'; odd kernels only."""
    tape = _same_tape("conv2d", x, w)
    _check(x.value.ndim == 3, "conv2d", f"expected (C_in, H, W) input, got {x.shape}")
    _check(w.value.ndim == 4, "conv2d", f"expected (C_out, C_in, kh, kw) kernel, got {w.shape}")
    _check(w.shape[1] == x.shape[0], "conv2d",
           f"kernel expects {w.shape[1]} input channels, input has {x.shape[0]}")
    _check(w.shape[2] % 2 == 1 and w.shape[3] % 2 == 1, "conv2d",
           f"kernel size must be odd, got {w.shape[2:]}")
    c_out, c_in, kh, kw = w.shape
    h, wd = x.shape[1], x.shape[2]
    # patch matrix is kept for the kernel gradient in the backward pass
    cols = _shift_cols(x.value, kh, kw)
    w2 = w.value.transpose(2, 3, 1, 0).reshape(kh * kw * c_in, c_out)
    out = (w2.T @ cols).reshape(c_out, h, wd)
    return tape._emit("conv2d", (x.node.id, w.node.id), out, cols=cols)


def fft2(x: Var) -> Var:
    """Centered orthonormal FFT of a channel-pair array."""
    _pair_axis("fft2", x)
    return x.tape._emit("fft2", (x.node.id,), to_channels(fft2c(to_complex(x.value))))


def ifft2(x: Var) -> Var:
    _pair_axis("ifft2", x)
    return x.tape._emit("ifft2", (x.node.id,), to_channels(ifft2c(to_complex(x.value))))


def conj(a: Var) -> Var:
    """Complex conjugate on the channel-pair representation."""
    _pair_axis("conj", a)
    val = a.value.copy()
    val[..., 1, :, :] *= -1.0
    return a.tape._emit("conj", (a.node.id,), val)


def cmul(a: Var, b: Var) -> Var:
    """Elementwise complex multiply of two channel-pair arrays."""
    tape = _same_tape("cmul", a, b)
    _pair_axis("cmul", a)
    _same_shape("cmul", a, b)
    val = to_channels(to_complex(a.value) * to_complex(b.value))
    return tape._emit("cmul", (a.node.id, b.node.id), val)


def cconjmul(a: Var, b: Var) -> Var:
    """conj(a) * b elementwise (complex)."""
    return cmul(conj(a), b)


def mask_columns(x: Var, mask: np.ndarray) -> Var:
    """Zero out unsampled k-space columns; `mask` is a constant bool (W,)."""
    m = np.asarray(mask, dtype=bool)
    _check(m.ndim == 1 and x.shape[-1] == m.shape[0], "mask_columns",
           f"mask length {m.shape} does not match last axis of {x.shape}")
    sel = m.astype(np.float64)
    return x.tape._emit("mask_columns", (x.node.id,), x.value * sel, mask=sel)


def coil_project(x: Var, coils: np.ndarray) -> Var:
    """(2, H, W) image -> (C, 2, H, W): multiply by constant coil maps."""
    _pair_axis("coil_project", x)
    _check(x.value.ndim == 3, "coil_project", f"expected (2, H, W), got {x.shape}")
    _check(coils.ndim == 3 and coils.shape[1:] == x.shape[1:], "coil_project",
           f"coil maps {coils.shape} do not match image {x.shape}")
    val = to_channels(coils * to_complex(x.value)[None, :, :])
    return x.tape._emit("coil_project", (x.node.id,), val, coils=coils)


def coil_combine(y: Var, coils: np.ndarray) -> Var:
    """(C, 2, H, W) -> (2, H, W): sum_c conj(S_c) * y_c with constant maps."""
    _pair_axis("coil_combine", y)
    _check(y.value.ndim == 4 and coils.shape == (y.shape[0],) + y.shape[2:],
           "coil_combine", f"coil maps {coils.shape} do not match k-space {y.shape}")
    val = to_channels(np.sum(np.conj(coils) * to_complex(y.value), axis=0))
    return y.tape._emit("coil_combine", (y.node.id,), val, coils=coils)


class SenseOp:
    """Masked multi-coil Fourier encoding with precomputed kernels.

    Bundles coil maps and a column-sampling pattern so the encoding, its
    adjoint and the normal operator run as single tape nodes.  On even
    grids the centered FFT is realized by checkerboard phase folding
    (no fftshift copies); odd grids fall back to explicit shifts.  All
    three maps agree with composing the fine-grained primitives to
    rounding error.
    """

    def __init__(self, coils: np.ndarray, sel: np.ndarray | None = None):
        if coils.ndim != 3:
            raise ValueError(f"SenseOp: coil maps must be (C, H, W), got {coils.shape}")
        c, h, w = coils.shape
        if sel is not None:
            sel = np.asarray(sel, dtype=bool)
            if sel.shape != (w,):
                raise ValueError(f"SenseOp: mask length {sel.shape} vs width {w}")
        self.coils = coils
        self.sel = sel
        self.n_coils, self.height, self.width = c, h, w
        self._selm = None if sel is None else sel.astype(np.float64)
        self._even = h % 2 == 0 and w % 2 == 0
        if self._even:
            ii = np.arange(h)[:, None]
            jj = np.arange(w)[None, :]
            self._cb = (-1.0) ** (ii + jj)
            self._coils_cb = coils * self._cb
            self._conj_coils_cb = np.conj(self._coils_cb)
        else:
            self._conj_coils = np.conj(coils)

    def forward(self, z: np.ndarray) -> np.ndarray:
        """Complex image (H, W) -> masked centered k-space (C, H, W)."""
        if self._even:
            k = self._cb * np.fft.fft2(self._coils_cb * z, norm="ortho")
        else:
            k = fft2c(self.coils * z)
        if self._selm is not None:
            k = k * self._selm
        return k

    def adjoint(self, k: np.ndarray) -> np.ndarray:
        if self._selm is not None:
            k = k * self._selm
        if self._even:
            return np.sum(self._conj_coils_cb * np.fft.ifft2(self._cb * k,
                                                             norm="ortho"), axis=0)
        return np.sum(self._conj_coils * ifft2c(k), axis=0)

    def normal(self, z: np.ndarray) -> np.ndarray:
        """adjoint(forward(z)) in one pass (the mask is idempotent)."""
        if not self._even:
            return self.adjoint(self.forward(z))
        k = np.fft.fft2(self._coils_cb * z, norm="ortho")
        if self._selm is not None:
            k *= self._selm
        t = np.fft.ifft2(k, norm="ortho")
        t *= self._conj_coils_cb
        return t.sum(axis=0)


def _image_var(opname: str, x: Var, op: SenseOp) -> None:
    _pair_axis(opname, x)
    _check(x.shape == (2, op.height, op.width), opname,
           f"expected (2, {op.height}, {op.width}) image, got {x.shape}")


def sense_forward(x: Var, op: SenseOp) -> Var:
    """Fused encoding: (2, H, W) image -> (C, 2, H, W) masked k-space."""
    _image_var("sense_forward", x, op)
    val = to_channels(op.forward(to_complex(x.value)))
    return x.tape._emit("sense_forward", (x.node.id,), val, kernel=op)


def sense_adjoint(y: Var, op: SenseOp) -> Var:
    """Fused adjoint: (C, 2, H, W) k-space -> (2, H, W) image."""
    _pair_axis("sense_adjoint", y)
    _check(y.shape == (op.n_coils, 2, op.height, op.width), "sense_adjoint",
           f"expected ({op.n_coils}, 2, {op.height}, {op.width}), got {y.shape}")
    val = to_channels(op.adjoint(to_complex(y.value)))
    return y.tape._emit("sense_adjoint", (y.node.id,), val, kernel=op)


def sense_normal(x: Var, op: SenseOp) -> Var:
    """Fused adjoint-forward composition (self-adjoint)."""
    _image_var("sense_normal", x, op)
    val = to_channels(op.normal(to_complex(x.value)))
    return x.tape._emit("sense_normal", (x.node.id,), val, kernel=op)


def l2norm(a: Var) -> Var:
    """sqrt(sum of squares) over all real entries."""
    val = np.asarray(np.sqrt(np.vdot(a.value, a.value)), dtype=np.float64).reshape(())
    return a.tape._emit("l2norm", (a.node.id,), val)


def l1norm(a: Var, complex_pairs: bool = False) -> Var:
    """Sum of |.|; with complex_pairs=True the modulus is taken per channel pair."""
    if complex_pairs:
        _pair_axis("l1norm", a)
        val = np.sum(np.abs(to_complex(a.value)))
    else:
        val = np.sum(np.abs(a.value))
    return a.tape._emit("l1norm", (a.node.id,),
                        np.asarray(val, dtype=np.float64).reshape(()),
                        complex_pairs=bool(complex_pairs))


# ---------------------------------------------------------------------------
# Vector-Jacobian products
# ---------------------------------------------------------------------------


def _vjp_add(tape, node, g):
    return ((node.inputs[0], g), (node.inputs[1], g))


def _vjp_sub(tape, node, g):
    return ((node.inputs[0], g), (node.inputs[1], -g))


def _vjp_mul(tape, node, g):
    a, b = (tape._val(i) for i in node.inputs)
    return ((node.inputs[0], g * b), (node.inputs[1], g * a))


def _vjp_scale(tape, node, g):
    return ((node.inputs[0], node.attrs["c"] * g),)


def _vjp_smul(tape, node, g):
    s, a = (tape._val(i) for i in node.inputs)
    gs = np.asarray(np.vdot(g, a), dtype=np.float64).reshape(())
    return ((node.inputs[0], gs), (node.inputs[1], s * g))


def _vjp_div(tape, node, g):
    a, b = (tape._val(i) for i in node.inputs)
    d = b + node.attrs["eps"]
    return ((node.inputs[0], g / d), (node.inputs[1], -g * a / (d * d)))


def _vjp_dot(tape, node, g):
    a, b = (tape._val(i) for i in node.inputs)
    return ((node.inputs[0], g * b), (node.inputs[1], g * a))


def _vjp_exp(tape, node, g):
    return ((node.inputs[0], g * node.value),)


def _vjp_relu(tape, node, g):
    x = tape._val(node.inputs[0])
    return ((node.inputs[0], g * (x > 0.0)),)


def _vjp_bias_add(tape, node, g):
    return ((node.inputs[0], g), (node.inputs[1], g.sum(axis=(1, 2))))


def _vjp_conv2d(tape, node, g):
    x, w = (tape._val(i) for i in node.inputs)
    c_out, c_in, kh, kw = w.shape
    # input grad: convolve upstream with the channel-transposed, flipped kernel
    w_flip = np.ascontiguousarray(w.transpose(1, 0, 2, 3)[:, :, ::-1, ::-1])
    gx = _conv2d_same(g, w_flip)
    # kernel grad: correlate input patches (cached at forward time) with upstream
    h, wd = x.shape[1], x.shape[2]
    cols = node.attrs["cols"]
    gw2 = g.reshape(c_out, h * wd) @ cols.T                        # (C_out, kh*kw*C_in)
    gw = gw2.reshape(c_out, kh, kw, c_in).transpose(0, 3, 1, 2)
    return ((node.inputs[0], gx), (node.inputs[1], np.ascontiguousarray(gw)))


def _vjp_fft2(tape, node, g):
    return ((node.inputs[0], to_channels(ifft2c(to_complex(g)))),)


def _vjp_ifft2(tape, node, g):
    return ((node.inputs[0], to_channels(fft2c(to_complex(g)))),)


def _vjp_conj(tape, node, g):
    gc = g.copy()
    gc[..., 1, :, :] *= -1.0
    return ((node.inputs[0], gc),)


def _vjp_cmul(tape, node, g):
    a, b = (to_complex(tape._val(i)) for i in node.inputs)
    gc = to_complex(g)
    return ((node.inputs[0], to_channels(np.conj(b) * gc)),
            (node.inputs[1], to_channels(np.conj(a) * gc)))


def _vjp_mask_columns(tape, node, g):
    return ((node.inputs[0], g * node.attrs["mask"]),)


def _vjp_coil_project(tape, node, g):
    coils = node.attrs["coils"]
    gx = np.sum(np.conj(coils) * to_complex(g), axis=0)
    return ((node.inputs[0], to_channels(gx)),)


def _vjp_coil_combine(tape, node, g):
    coils = node.attrs["coils"]
    gy = coils * to_complex(g)[None, :, :]
    return ((node.inputs[0], to_channels(gy)),)


def _vjp_sense_forward(tape, node, g):
    op = node.attrs["kernel"]
    return ((node.inputs[0], to_channels(op.adjoint(to_complex(g)))),)


def _vjp_sense_adjoint(tape, node, g):
    op = node.attrs["kernel"]
    return ((node.inputs[0], to_channels(op.forward(to_complex(g)))),)


def _vjp_sense_normal(tape, node, g):
    op = node.attrs["kernel"]
    return ((node.inputs[0], to_channels(op.normal(to_complex(g)))),)


def _vjp_l2norm(tape, node, g):
    x = tape._val(node.inputs[0])
    n = node.value
    if n == 0.0:
        return ((node.inputs[0], np.zeros_like(x)),)
    return ((node.inputs[0], (float(g) / float(n)) * x),)


def _vjp_l1norm(tape, node, g):
    x = tape._val(node.inputs[0])
    if node.attrs["complex_pairs"]:
        z = to_complex(x)
        m = np.abs(z)
        unit = np.divide(z, m, out=np.zeros_like(z), where=m > 0.0)
        return ((node.inputs[0], float(g) * to_channels(unit)),)
    return ((node.inputs[0], float(g) * np.sign(x)),)


_VJP: dict[str, Callable] = {
    "add": _vjp_add,
    "sub": _vjp_sub,
    "mul": _vjp_mul,
    "scale": _vjp_scale,
    "smul": _vjp_smul,
    "div": _vjp_div,
    "dot": _vjp_dot,
    "exp": _vjp_exp,
    "relu": _vjp_relu,
    "bias_add": _vjp_bias_add,
    "conv2d": _vjp_conv2d,
    "fft2": _vjp_fft2,
    "ifft2": _vjp_ifft2,
    "conj": _vjp_conj,
    "cmul": _vjp_cmul,
    "mask_columns": _vjp_mask_columns,
    "coil_project": _vjp_coil_project,
    "coil_combine": _vjp_coil_combine,
    "sense_forward": _vjp_sense_forward,
    "sense_adjoint": _vjp_sense_adjoint,
    "sense_normal": _vjp_sense_normal,
    "l2norm": _vjp_l2norm,
    "l1norm": _vjp_l1norm,
}

# name -> builder, for code that wants a uniform dispatch surface
PRIMITIVES: dict[str, Callable] = {
    "add": add, "sub": sub, "mul": mul, "scale": scale, "smul": smul,
    "div": div, "dot": dot, "exp": exp, "relu": relu, "bias_add": bias_add,
    "conv2d": conv2d, "fft2": fft2, "ifft2": ifft2, "conj": conj,
    "cmul": cmul, "cconjmul": cconjmul, "mask_columns": mask_columns,
    "coil_project": coil_project, "coil_combine": coil_combine,
    "sense_forward": sense_forward, "sense_adjoint": sense_adjoint,
    "sense_normal": sense_normal, "l2norm": l2norm, "l1norm": l1norm,
}
