"""The natural connection with totally skew-symmetric torsion.

``Q[k, i, j]`` is the transformation tensor, nabla'_{e_i} e_j = nabla_{e_i} e_j
+ Q[k, i, j] e_k (first slot is the differentiation direction). Lowered
tensors carry the metric slot last: ``Q_low[i, j, k] = g(Q(e_i, e_j), e_k)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import (
    ConnectionCoefficients,
    FieldJet,
    GeometryJet,
    covariant_derivative_rank3,
    levi_civita,
    nabla_J_jet,
)
from .tensor_algebra import Metric, max_abs

__all__ = [
    "NaturalConnection",
    "kt_Q",
    "kt_Q_jet",
    "lower_Q",
    "torsion",
    "hayden_Q",
    "check_natural",
    "check_parallel_torsion",
    "build_natural_connection",
]


@dataclass(frozen=True)
class NaturalConnection:
    Q_mixed: np.ndarray
    Q_low: np.ndarray
    T_mixed: np.ndarray
    T_low: np.ndarray
    gamma_prime: ConnectionCoefficients
    levi_civita: ConnectionCoefficients
    nablaJ: np.ndarray
    Q_low_jet: FieldJet
    T_low_jet: FieldJet


def kt_Q(jet_or_J, nablaJ: np.ndarray) -> np.ndarray:
    """Q(x,y) = 1/4 {(nabla_x J)Jy - (nabla_{Jx} J)y - 2 (nabla_y J)Jx}.

    ``nablaJ[k, i, j] = (nabla_i J)^k_j``. Accepts a jet or the J matrix.
    """
    J = jet_or_J.J if isinstance(jet_or_J, GeometryJet) else np.asarray(jet_or_J)
    nJ = np.asarray(nablaJ)
    return 0.25 * (np.einsum("kis,sj->kij", nJ, J)
                   - np.einsum("si,ksj->kij", J, nJ)
                   - 2.0 * np.einsum("kjs,si->kij", nJ, J))


def kt_Q_jet(jet: GeometryJet, nJ: FieldJet) -> FieldJet:
    """Q with its frame derivative; Q is bilinear in (J, nabla J)."""
    d = jet.dim
    value = kt_Q(jet.J, nJ.value)
    deriv = np.stack([kt_Q(jet.dJ[m], nJ.value) + kt_Q(jet.J, nJ.deriv[m]) for m in range(d)])
    return FieldJet(value, deriv, "Q")


def lower_Q(Q: FieldJet, jet: GeometryJet) -> FieldJet:
    """Q_low[i,j,k] = Q[s,i,j] g[s,k], with the product-rule derivative."""
    value = np.einsum("sij,sk->ijk", Q.value, jet.g)
    deriv = (np.einsum("msij,sk->mijk", Q.deriv, jet.g)
             + np.einsum("sij,msk->mijk", Q.value, jet.dg))
    return FieldJet(value, deriv, "Q")


def torsion(Q_mixed: np.ndarray, g) -> tuple[np.ndarray, np.ndarray]:
    """T(x,y) = Q(x,y) - Q(y,x), returned mixed and lowered."""
    gm = g.g if isinstance(g, Metric) else np.asarray(g)
    T_mixed = Q_mixed - np.swapaxes(Q_mixed, 1, 2)
    return T_mixed, np.einsum("sij,sk->ijk", T_mixed, gm)


def hayden_Q(T_low: np.ndarray) -> np.ndarray:
    """Q(x,y,z) = 1/2 {T(x,y,z) - T(y,z,x) + T(z,x,y)}."""
    T = np.asarray(T_low)
    return 0.5 * (T - np.einsum("jki->ijk", T) + np.einsum("kij->ijk", T))


def check_natural(Q_low: np.ndarray, F: np.ndarray, J: np.ndarray) -> tuple[float, float]:
    """Residuals of F(x,y,z) = Q(x,y,Jz) - Q(x,Jy,z) and Q(x,y,z) = -Q(x,z,y)."""
    QJz = np.einsum("ija,ak->ijk", Q_low, J)
    QJy = np.einsum("iak,aj->ijk", Q_low, J)
    r1 = max_abs(F - QJz + QJy)
    r2 = max_abs(Q_low + np.swapaxes(Q_low, 1, 2))
    return r1, r2


def parallel_torsion_tensor(conn: NaturalConnection) -> np.ndarray:
    """(nabla'_i T)_{jkl}."""
    return covariant_derivative_rank3(conn.T_low_jet, conn.gamma_prime)


def check_parallel_torsion(jet: GeometryJet, conn: NaturalConnection) -> float:
    del jet  # the connection already carries everything derived from it
    return max_abs(parallel_torsion_tensor(conn))


def build_natural_connection(jet: GeometryJet) -> NaturalConnection:
    lc = levi_civita(jet)
    nJ = nabla_J_jet(jet, lc)
    Qj = kt_Q_jet(jet, nJ)
    Ql = lower_Q(Qj, jet)
    T_mixed, T_low = torsion(Qj.value, jet.metric)
    Tl = FieldJet(T_low, Ql.deriv - np.swapaxes(Ql.deriv, 1, 2), "T")
    gamma_prime = lc + ConnectionCoefficients(Qj.value, Qj.deriv)
    return NaturalConnection(
        Q_mixed=Qj.value, Q_low=Ql.value, T_mixed=T_mixed, T_low=T_low,
        gamma_prime=gamma_prime, levi_civita=lc, nablaJ=nJ.value,
        Q_low_jet=Ql, T_low_jet=Tl,
    )
