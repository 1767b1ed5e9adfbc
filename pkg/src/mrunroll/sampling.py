"""Cartesian phase-encode sampling masks and their random sub-partitions.

A mask is a sorted set of sampled column indices over a grid of width W,
with a contiguous, centered block of autocalibration (ACS) columns.  The
multi-mask trainer draws K random subsets of the acquisition mask at a
fixed subset ratio; the default policy keeps the ACS block in every
subset so the data-consistency solve always sees the calibration center.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

ACS_POLICIES = ("keep-acs", "uniform-over-all")


@dataclass(frozen=True)
class SamplingMask:
    """Sampled column indices (sorted, unique) with their ACS subset."""

    width: int
    indices: tuple[int, ...]
    acs: frozenset[int]

    def __post_init__(self):
        idx = self.indices
        if any(i < 0 or i >= self.width for i in idx):
            raise ValueError(f"mask indices out of range [0, {self.width})")
        if len(set(idx)) != len(idx) or tuple(sorted(idx)) != idx:
            raise ValueError("mask indices must be sorted and unique")
        if not self.acs <= set(idx):
            raise ValueError("ACS columns must be sampled")

    def __len__(self) -> int:
        return len(self.indices)

    def to_bool_array(self) -> np.ndarray:
        sel = np.zeros(self.width, dtype=bool)
        sel[list(self.indices)] = True
        return sel

    def to_json(self) -> dict:
        return {"width": self.width, "indices": list(self.indices),
                "acs": sorted(self.acs)}

    @staticmethod
    def from_json(obj: dict) -> "SamplingMask":
        return SamplingMask(int(obj["width"]), tuple(obj["indices"]),
                            frozenset(obj["acs"]))


@dataclass(frozen=True)
class MaskFamily:
    """Acquisition mask with its K random subsets."""

    parent: SamplingMask
    children: tuple[SamplingMask, ...]
    rho: float
    seed: int


def _acs_block(width: int, n_acs: int) -> range:
    start = width // 2 - n_acs // 2
    return range(start, start + n_acs)


def uniform_mask(width: int, accel: int, n_acs: int) -> SamplingMask:
    """Every `accel`-th column (offset 0) plus a centered ACS block."""
    if accel < 1 or accel > width:
        raise ValueError(f"uniform_mask: acceleration {accel} invalid for width {width}")
    if n_acs < 0 or n_acs > width:
        raise ValueError(f"uniform_mask: {n_acs} ACS columns invalid for width {width}")
    acs = frozenset(_acs_block(width, n_acs))
    cols = sorted(set(range(0, width, accel)) | acs)
    return SamplingMask(width, tuple(cols), acs)


def random_mask(width: int, accel: int, n_acs: int, seed: int) -> SamplingMask:
    """Centered ACS block plus uniformly random columns, round(W/accel) total."""
    if accel < 1 or accel > width:
        raise ValueError(f"random_mask: acceleration {accel} invalid for width {width}")
    total = round(width / accel)
    if total < n_acs:
        raise ValueError(
            f"random_mask: target {total} columns cannot contain {n_acs} ACS columns"
        )
    acs = frozenset(_acs_block(width, n_acs))
    pool = np.array(sorted(set(range(width)) - acs), dtype=np.int64)
    rng = np.random.default_rng(seed)
    extra = rng.choice(pool, size=total - len(acs), replace=False)
    cols = sorted(acs | set(int(i) for i in extra))
    return SamplingMask(width, tuple(cols), acs)


def partition_masks(omega: SamplingMask, n_subsets: int, rho: float, seed: int,
                    acs_policy: str = "keep-acs") -> MaskFamily:
    """Draw `n_subsets` independent random subsets of `omega` at ratio `rho`.

    Each subset has round(rho * |omega|) columns.  Under "keep-acs" the ACS
    block is always retained and the random draw covers non-ACS columns
    only; "uniform-over-all" draws uniformly from the whole mask.
    """
    if n_subsets < 1:
        raise ValueError(f"partition_masks: need n_subsets >= 1, got {n_subsets}")
    if not 0.0 < rho <= 1.0:
        raise ValueError(f"partition_masks: rho must be in (0, 1], got {rho}")
    if acs_policy not in ACS_POLICIES:
        raise ValueError(f"partition_masks: unknown acs_policy {acs_policy!r}")
    target = round(rho * len(omega))
    acs = sorted(omega.acs)
    if acs_policy == "keep-acs" and target < len(acs):
        raise ValueError(
            f"partition_masks: rho*|mask| = {target} cannot retain {len(acs)} ACS columns"
        )
    rng = np.random.default_rng(seed)
    children = []
    for _ in range(n_subsets):
        if acs_policy == "keep-acs":
            pool = np.array([i for i in omega.indices if i not in omega.acs],
                            dtype=np.int64)
            drawn = rng.choice(pool, size=target - len(acs), replace=False)
            cols = sorted(set(acs) | set(int(i) for i in drawn))
        else:
            drawn = rng.choice(np.array(omega.indices, dtype=np.int64),
                               size=target, replace=False)
            cols = sorted(int(i) for i in drawn)
        child_acs = frozenset(i for i in omega.acs if i in set(cols))
        children.append(SamplingMask(omega.width, tuple(cols), child_acs))
    if len({c.indices for c in children}) < len(children):
        # expected only for very small masks or rho near 1; worth knowing about
        warnings.warn("partition_masks: duplicate subset masks in family",
                      stacklevel=2)
    return MaskFamily(omega, tuple(children), rho, seed)


def full_mask(width: int) -> SamplingMask:
    """All columns sampled (no ACS distinction)."""
    return SamplingMask(width, tuple(range(width)), frozenset())
