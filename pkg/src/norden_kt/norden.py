"""Norden structures: compatibility checks, the F tensor, class predicates
and the square norm of nabla J."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor_algebra import Metric, TensorError, cyclic_sum3, max_abs

__all__ = [
    "DEFAULT_TOL",
    "DEFAULT_STRICT",
    "NordenStructure",
    "ClassReport",
    "flat_pair",
    "check_norden",
    "associated_metric",
    "compute_F",
    "F_symmetry_residuals",
    "classify",
    "square_norm_nablaJ",
]

DEFAULT_TOL = 1e-8
DEFAULT_STRICT = 1e-4


@dataclass(frozen=True)
class NordenStructure:
    metric: Metric
    J: np.ndarray

    @property
    def dim(self) -> int:
        return self.metric.dim


@dataclass(frozen=True)
class ClassReport:
    f_norm: float
    w3_residual: float
    is_W0: bool
    is_W3_strict: bool


def flat_pair(n: int) -> tuple[np.ndarray, np.ndarray]:
    """The model pair g = diag(1_n, -1_n), J e_a = e_{n+a}, J e_{n+a} = -e_a."""
    if n < 1:
        raise ValueError("n must be >= 1")
    d = 2 * n
    g = np.diag([1.0] * n + [-1.0] * n)
    J = np.zeros((d, d))
    for a in range(n):
        J[n + a, a] = 1.0
        J[a, n + a] = -1.0
    return g, J


def check_norden(g, J) -> tuple[float, float]:
    """Residuals (max|J^2 + id|, max|g(J., J.) + g|)."""
    g = g.g if isinstance(g, Metric) else np.asarray(g, dtype=np.float64)
    J = np.asarray(J, dtype=np.float64)
    if g.shape != J.shape or g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise TensorError(f"shape mismatch: g {g.shape}, J {J.shape}")
    if g.shape[0] % 2:
        raise TensorError("dimension must be even")
    d = g.shape[0]
    r_sq = max_abs(J @ J + np.eye(d))
    r_anti = max_abs(np.einsum("si,tj,st->ij", J, J, g) + g)
    return r_sq, r_anti


def associated_metric(s: NordenStructure) -> Metric:
    """g~(x, y) = g(x, Jy), i.e. g~_ij = g_is J^s_j."""
    gt = np.einsum("is,sj->ij", s.metric.g, s.J)
    return Metric.from_matrix(0.5 * (gt + gt.T))


def compute_F(nablaJ: np.ndarray, g) -> np.ndarray:
    """F_ijk = g((nabla_i J) e_j, e_k) = g_ks (nabla_i J)^s_j."""
    g = g.g if isinstance(g, Metric) else np.asarray(g)
    nablaJ = np.asarray(nablaJ)
    if nablaJ.shape != (g.shape[0],) * 3:
        raise TensorError(f"nablaJ shape {nablaJ.shape} does not match metric")
    return np.einsum("sij,ks->ijk", nablaJ, g)


def F_symmetry_residuals(F: np.ndarray, J: np.ndarray) -> dict[str, float]:
    """Residuals of F(x,y,z)=F(x,z,y), F(x,Jy,Jz)=F(x,y,z), F(x,Jy,z)=-F(x,y,Jz).

    Violations diagnose an upstream error in nabla J, not a geometric fact.
    """
    FJJ = np.einsum("iab,aj,bk->ijk", F, J, J)
    FJy = np.einsum("iak,aj->ijk", F, J)
    FJz = np.einsum("ija,ak->ijk", F, J)
    return {
        "sym_yz": max_abs(F - np.swapaxes(F, 1, 2)),
        "JJ_invariance": max_abs(FJJ - F),
        "J_transfer": max_abs(FJy + FJz),
    }


def classify(F: np.ndarray, tol: float = DEFAULT_TOL, strict: float = DEFAULT_STRICT) -> ClassReport:
    f_norm = max_abs(F)
    w3 = max_abs(cyclic_sum3(F))
    return ClassReport(
        f_norm=f_norm,
        w3_residual=w3,
        is_W0=f_norm < tol,
        is_W3_strict=(w3 < tol) and (f_norm >= strict),
    )


def square_norm_nablaJ(nablaJ: np.ndarray, g) -> tuple[float, float]:
    """Square norm of nabla J by its defining contraction and by the
    alternate form -2 g^ij g^ks g((nabla_i J)e_k, (nabla_s J)e_j).

    The two agree on quasi-Kaehler structures; elsewhere both are reported.
    """
    m = g if isinstance(g, Metric) else Metric.from_matrix(g)
    gi, gg = m.g_inv, m.g
    primary = np.einsum("ij,ks,tik,tu,ujs->", gi, gi, nablaJ, gg, nablaJ)
    alternate = -2.0 * np.einsum("ij,ks,tik,tu,usj->", gi, gi, nablaJ, gg, nablaJ)
    return float(primary), float(alternate)
