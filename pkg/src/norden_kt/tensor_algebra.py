"""Dense multilinear algebra over a 2n-dimensional real frame.

Index conventions used throughout the package (frame e_1..e_d, zero-based
in code):

* (0,k) tensors are component arrays ``t[i, j, ...] = t(e_i, e_j, ...)``.
* Mixed tensors store contravariant slots first: ``J[k, j]`` means
  ``J e_j = J[k, j] e_k``; ``gamma[k, i, j]`` means
  ``nabla_{e_i} e_j = gamma[k, i, j] e_k``.
* Derivative arrays put the differentiation slot first:
  ``dg[m, i, j] = e_m(g_ij)``.

All contractions go through ``np.einsum`` without path optimisation, which
sums in ascending index order with a fixed C loop. No compensated
summation is used.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Tensor",
    "Metric",
    "TensorError",
    "contract",
    "cyclic_sum3",
    "check_skew",
    "max_abs",
]


class TensorError(ValueError):
    """Raised on invalid slots or variance mismatches."""


def _as_array(t) -> np.ndarray:
    return t.components if isinstance(t, Tensor) else np.asarray(t, dtype=np.float64)


def max_abs(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


@dataclass(frozen=True)
class Tensor:
    """Component array with explicit variance.

    ``components`` has shape ``(dim,) * (n_up + n_down)``; the first
    ``n_up`` axes are contravariant.
    """

    components: np.ndarray
    n_up: int = 0
    n_down: int = 0

    def __post_init__(self):
        arr = np.array(self.components, dtype=np.float64)
        rank = self.n_up + self.n_down
        if self.n_up < 0 or self.n_down < 0:
            raise TensorError("ranks must be non-negative")
        if arr.ndim != rank:
            raise TensorError(f"expected {rank} axes, got {arr.ndim}")
        if rank:
            dim = arr.shape[0]
            if any(s != dim for s in arr.shape):
                raise TensorError(f"non-square component array {arr.shape}")
            if dim < 2 or dim % 2:
                raise TensorError(f"dimension must be even and >= 2, got {dim}")
        arr.setflags(write=False)
        object.__setattr__(self, "components", arr)

    @property
    def dim(self) -> int:
        return self.components.shape[0] if self.components.ndim else 0

    @property
    def rank(self) -> int:
        return self.n_up + self.n_down

    def is_upper(self, slot: int) -> bool:
        return slot < self.n_up


@dataclass(frozen=True)
class Metric:
    """A non-degenerate symmetric bilinear form with cached inverse."""

    g: np.ndarray
    g_inv: np.ndarray
    signature: tuple[int, int]

    @classmethod
    def from_matrix(cls, g, sym_tol: float = 0.0) -> "Metric":
        g = np.array(g, dtype=np.float64)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise TensorError(f"metric must be square, got shape {g.shape}")
        if max_abs(g - g.T) > sym_tol:
            i, j = np.unravel_index(np.argmax(np.abs(g - g.T)), g.shape)
            raise TensorError(f"metric is not symmetric at ({i}, {j})")
        eig = np.linalg.eigvalsh(0.5 * (g + g.T))
        scale = max(1.0, float(np.max(np.abs(eig))))
        if np.min(np.abs(eig)) <= 1e-12 * scale:
            raise TensorError("metric is degenerate")
        g_inv = np.linalg.inv(g)
        g_inv = 0.5 * (g_inv + g_inv.T)
        sig = (int(np.sum(eig > 0)), int(np.sum(eig < 0)))
        g.setflags(write=False)
        g_inv.setflags(write=False)
        return cls(g=g, g_inv=g_inv, signature=sig)

    @property
    def dim(self) -> int:
        return self.g.shape[0]

    def inverse_residual(self) -> float:
        return max_abs(self.g_inv @ self.g - np.eye(self.dim))


def _letters(n: int) -> list[str]:
    if n > len(string.ascii_letters) - 1:
        raise TensorError("rank too large")
    return list(string.ascii_letters[:n])


def contract(
    t: Tensor,
    slot_a: int,
    slot_b: int,
    pairing: str = "natural",
    metric: Metric | None = None,
) -> Tensor:
    """Contract two slots of ``t``.

    ``pairing`` is ``"natural"`` (one upper, one lower slot),
    ``"inverse-metric"`` (two lower slots, paired with g^{ab}) or
    ``"metric"`` (two upper slots, paired with g_{ab}).
    """
    if not isinstance(t, Tensor):
        raise TensorError("contract expects a Tensor")
    rank = t.rank
    for s in (slot_a, slot_b):
        if not 0 <= s < rank:
            raise TensorError(f"slot {s} out of range for rank {rank}")
    if slot_a == slot_b:
        raise TensorError("cannot contract a slot with itself")
    up_a, up_b = t.is_upper(slot_a), t.is_upper(slot_b)
    letters = _letters(rank + 1)
    src = letters[:rank]
    keep = [k for k in range(rank) if k not in (slot_a, slot_b)]
    out = "".join(src[k] for k in keep)
    n_up = sum(1 for k in keep if t.is_upper(k))
    n_down = len(keep) - n_up

    if pairing == "natural":
        if up_a == up_b:
            raise TensorError("natural pairing needs one upper and one lower slot")
        src[slot_b] = src[slot_a]
        res = np.einsum("".join(src) + "->" + out, t.components)
    elif pairing in ("inverse-metric", "metric"):
        if metric is None:
            raise TensorError(f"{pairing} pairing needs a metric")
        want_upper = pairing == "metric"
        if up_a != want_upper or up_b != want_upper:
            raise TensorError(f"{pairing} pairing needs two {'upper' if want_upper else 'lower'} slots")
        m = metric.g if want_upper else metric.g_inv
        spec = "".join(src) + "," + src[slot_a] + src[slot_b] + "->" + out
        res = np.einsum(spec, t.components, m)
    else:
        raise TensorError(f"unknown pairing {pairing!r}")
    return Tensor(np.asarray(res), n_up, n_down)


def _cyclic_perm(rank: int, slots: Sequence[int]) -> tuple[int, ...]:
    a, b, c = slots
    perm = list(range(rank))
    perm[a], perm[b], perm[c] = b, c, a
    return tuple(perm)


def cyclic_sum3(t, slots: Sequence[int] = (0, 1, 2)) -> np.ndarray:
    """Return t(a,b,c) + t(b,c,a) + t(c,a,b) over the three given slots.

    The remaining slots are carried along unchanged.
    """
    arr = _as_array(t)
    slots = tuple(int(s) for s in slots)
    if len(set(slots)) != 3 or any(not 0 <= s < arr.ndim for s in slots):
        raise TensorError(f"invalid cyclic slots {slots} for rank {arr.ndim}")
    if isinstance(t, Tensor) and any(t.is_upper(s) for s in slots):
        raise TensorError("cyclic sum is defined on covariant slots")
    # out[..x..y..z..] gets t[..y..z..x..]: transpose so that axis a reads from b, etc.
    perm = _cyclic_perm(arr.ndim, slots)
    once = np.transpose(arr, perm)
    twice = np.transpose(once, perm)
    return arr + once + twice


def check_skew(t, pairs: Iterable[tuple[int, int]]) -> float:
    """Max over all components of |t + t with the slot pair swapped|."""
    arr = _as_array(t)
    worst = 0.0
    for a, b in pairs:
        if a == b or not (0 <= a < arr.ndim and 0 <= b < arr.ndim):
            raise TensorError(f"invalid slot pair ({a}, {b})")
        worst = max(worst, max_abs(arr + np.swapaxes(arr, a, b)))
    return worst
