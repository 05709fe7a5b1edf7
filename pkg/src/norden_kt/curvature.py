"""Curvature of the Levi-Civita connection and of the natural connection,
their contractions, and the residuals of every curvature identity checked
on a jet.

``R[i, j, k, l] = g(R(e_i, e_j) e_k, e_l)`` with
R(x,y)z = nabla_x nabla_y z - nabla_y nabla_x z - nabla_[x,y] z.
``gQQ[a, b, c, e] = g(Q(e_a, e_b), Q(e_c, e_e))`` is the workhorse for the
quadratic-in-Q formulas below.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .connections import (
    NaturalConnection,
    build_natural_connection,
    check_natural,
    parallel_torsion_tensor,
)
from .geometry import ConnectionCoefficients, GeometryJet, covariant_derivative
from .norden import DEFAULT_STRICT, classify, compute_F, square_norm_nablaJ
from .tensor_algebra import check_skew, cyclic_sum3, max_abs

__all__ = [
    "PipelineError",
    "CurvaturePack",
    "IdentityReport",
    "riemann",
    "rprime_direct",
    "rprime_via_general",
    "rprime_parallel_form",
    "rprime_kahler_form",
    "gQQ",
    "ricci_and_scalars",
    "ricci_prime_formula",
    "tau_prime_formula",
    "tau_star_star",
    "is_curvature_like",
    "is_kahler_tensor",
    "kahler_residual",
    "bianchi_defect_tensor",
    "bianchi_defect_4_2",
    "identity_4_4_4_5",
    "tolerances_for",
    "three_way",
    "full_identity_report",
    "REPORT_RESIDUAL_KEYS",
]

EQ_TOL = 1e-9
BAND_LOW = 1e-9
BAND_HIGH = 1e-5


class PipelineError(RuntimeError):
    """An upstream failure, tagged with the pipeline stage that raised it."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


# --------------------------------------------------------------------------
# curvature tensors

def _riemann_from(gamma: np.ndarray, dgamma: np.ndarray, C: np.ndarray, g: np.ndarray) -> np.ndarray:
    # R(e_i,e_j)e_k = Rm[m,i,j,k] e_m; dgamma[i, m, j, k] = e_i(G^m_jk)
    Rm = (np.einsum("imjk->mijk", dgamma) - np.einsum("jmik->mijk", dgamma)
          + np.einsum("mis,sjk->mijk", gamma, gamma)
          - np.einsum("mjs,sik->mijk", gamma, gamma)
          - np.einsum("sij,msk->mijk", C, gamma))
    return np.einsum("lm,mijk->ijkl", g, Rm)


def riemann(jet: GeometryJet, gamma: ConnectionCoefficients) -> np.ndarray:
    """(0,4) curvature of the connection ``gamma``; the bracket term uses the
    jet's structure constants (zero in chart mode)."""
    return _riemann_from(gamma.gamma, gamma.dgamma, jet.C, jet.g)


def rprime_direct(jet: GeometryJet, conn: NaturalConnection) -> np.ndarray:
    return riemann(jet, conn.gamma_prime)


def rprime_via_general(R: np.ndarray, jet: GeometryJet, conn: NaturalConnection,
                       derivative_connection: ConnectionCoefficients | None = None) -> np.ndarray:
    """R + (nabla_x Q)(y,z,w) - (nabla_y Q)(x,z,w) + Q(x,Q(y,z),w) - Q(y,Q(x,z),w).

    nabla Q uses the Levi-Civita connection unless ``derivative_connection``
    is given (used only to demonstrate that other choices break the identity).
    """
    del jet
    conn_d = conn.levi_civita if derivative_connection is None else derivative_connection
    nQ = covariant_derivative(conn.Q_low_jet, conn_d)  # [i, j, k, l] = (nabla_i Q)(e_j, e_k, e_l)
    Ql, Q = conn.Q_low, conn.Q_mixed
    return (R + nQ - np.einsum("jikl->ijkl", nQ)
            + np.einsum("isl,sjk->ijkl", Ql, Q)
            - np.einsum("jsl,sik->ijkl", Ql, Q))


def gQQ(conn: NaturalConnection, g: np.ndarray) -> np.ndarray:
    return np.einsum("tij,tu,ukl->ijkl", conn.Q_mixed, g, conn.Q_mixed)


def rprime_parallel_form(R: np.ndarray, conn: NaturalConnection, g: np.ndarray) -> np.ndarray:
    """R + Q(T(x,y),z,w) - g(Q(x,z),Q(y,w)) + g(Q(y,z),Q(x,w))."""
    qq = gQQ(conn, g)
    return (R + np.einsum("skl,sij->ijkl", conn.Q_low, conn.T_mixed)
            - np.einsum("ikjl->ijkl", qq) + np.einsum("jkil->ijkl", qq))


def rprime_kahler_form(R: np.ndarray, conn: NaturalConnection, g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(R + 2g(Q(x,y),Q(z,w)) - g(Q(x,z),Q(y,w)) + g(Q(y,z),Q(x,w)),
    R + g(Q(x,y),Q(z,w)))."""
    qq = gQQ(conn, g)
    full = R + 2.0 * qq - np.einsum("ikjl->ijkl", qq) + np.einsum("jkil->ijkl", qq)
    return full, R + qq


# --------------------------------------------------------------------------
# contractions

def ricci_and_scalars(R: np.ndarray, g_inv: np.ndarray) -> tuple[np.ndarray, float]:
    """rho(y,z) = g^ij R(e_i,y,z,e_j), tau = g^yz rho(y,z)."""
    rho = np.einsum("ij,iyzj->yz", g_inv, R)
    return rho, float(np.einsum("yz,yz->", g_inv, rho))


def scalar_one_pass(R: np.ndarray, g_inv: np.ndarray) -> float:
    return float(np.einsum("ij,ks,iksj->", g_inv, g_inv, R))


def ricci_prime_formula(rho: np.ndarray, conn: NaturalConnection, g: np.ndarray, g_inv: np.ndarray) -> np.ndarray:
    """rho + 2 g^ij g(Q(e_i,y),Q(z,e_j)) - g^ij g(Q(e_i,z),Q(y,e_j))."""
    qq = gQQ(conn, g)
    return (rho + 2.0 * np.einsum("ij,iyzj->yz", g_inv, qq)
            - np.einsum("ij,izyj->yz", g_inv, qq))


def qq_contraction(conn: NaturalConnection, g: np.ndarray, g_inv: np.ndarray) -> float:
    """g^ij g^ks g(Q(e_i,e_k), Q(e_s,e_j))."""
    return float(np.einsum("ij,ks,iksj->", g_inv, g_inv, gQQ(conn, g)))


def tau_prime_formula(tau: float, conn: NaturalConnection, g: np.ndarray, g_inv: np.ndarray) -> float:
    return tau + qq_contraction(conn, g, g_inv)


def tau_star_star(R: np.ndarray, J: np.ndarray, g_inv: np.ndarray) -> float:
    """g^ij g^ks R(e_i, e_k, J e_s, J e_j)."""
    return float(np.einsum("ij,ks,ikab,as,bj->", g_inv, g_inv, R, J, J))


# --------------------------------------------------------------------------
# predicates

def is_curvature_like(L: np.ndarray) -> tuple[float, float]:
    """(antisymmetry residual over slot pairs (0,1) and (2,3),
    first Bianchi residual over slots (0,1,2))."""
    return check_skew(L, [(0, 1), (2, 3)]), max_abs(cyclic_sum3(L, (0, 1, 2)))


def kahler_residual(L: np.ndarray, J: np.ndarray) -> float:
    """max |L(x,y,Jz,Jw) + L(x,y,z,w)|."""
    return max_abs(np.einsum("ijab,ak,bl->ijkl", L, J, J) + L)


def is_kahler_tensor(L: np.ndarray, J: np.ndarray) -> float:
    """Kaehler-tensor residual: worst of the curvature-like residuals and the
    J-invariance residual."""
    anti, bianchi = is_curvature_like(L)
    return max(anti, bianchi, kahler_residual(L, J))


def bianchi_defect_tensor(conn: NaturalConnection, g: np.ndarray) -> np.ndarray:
    """Cyclic sum over (x,y,z) of g(Q(x,y),Q(z,w))."""
    return cyclic_sum3(gQQ(conn, g), (0, 1, 2))


def bianchi_defect_4_2(conn: NaturalConnection, g: np.ndarray) -> float:
    return max_abs(bianchi_defect_tensor(conn, g))


def _rhs_4_5(conn: NaturalConnection, J: np.ndarray) -> np.ndarray:
    """g(Q(x,y), (nabla_{Jz} J)w + (nabla_w J)Jz), indexed [x,y,z,w]."""
    nJ = conn.nablaJ
    V = np.einsum("ak,tal->tkl", J, nJ) + np.einsum("tla,ak->tkl", nJ, J)
    return np.einsum("ijt,tkl->ijkl", conn.Q_low, V)


def identity_4_4_4_5(R: np.ndarray, conn: NaturalConnection, jet: GeometryJet) -> dict[str, float]:
    J, g, gi = jet.J, jet.g, jet.metric.g_inv
    lhs = np.einsum("ijab,ak,bl->ijkl", R, J, J) + R
    qq = gQQ(conn, g)
    rhs44 = -np.einsum("ijab,ak,bl->ijkl", qq, J, J) - qq
    rhs45 = _rhs_4_5(conn, J)
    tss = tau_star_star(R, J, gi)
    _, tau = ricci_and_scalars(R, gi)
    rhs46 = float(np.einsum("ij,ks,iksj->", gi, gi, rhs45))
    # the scalar identity evaluated in one pass straight from Q and nabla J
    nJ = conn.nablaJ
    direct46 = float(np.einsum("ij,ks,ikt,as,taj->", gi, gi, conn.Q_low, J, nJ)
                     + np.einsum("ij,ks,ikt,tja,as->", gi, gi, conn.Q_low, nJ, J))
    return {
        "eq_4_4": max_abs(lhs - rhs44),
        "eq_4_5": max_abs(lhs - rhs45),
        "eq_4_6": abs(tss + tau - rhs46),
        "eq_4_6_substitution": abs(rhs46 - direct46),
        "eq_4_6_rhs": rhs46,
    }


# --------------------------------------------------------------------------
# report

REPORT_RESIDUAL_KEYS = (
    "eq_3_1", "eq_3_6", "eq_3_7", "eq_3_8", "eq_3_9",
    "eq_4_1", "eq_4_2", "eq_4_3", "eq_4_4", "eq_4_5", "eq_4_6",
    "kahler_1_7", "bianchi_1_6_prime", "mema_tau_identity", "norm_1_3_vs_1_4",
    "parallel_torsion", "skew_2_2", "natural_1_12", "natural_1_13",
    "q_half_t_2_3", "w3_cyclic_1_2", "curvature_like_R", "scalar_contraction",
)


@dataclass(frozen=True)
class CurvaturePack:
    R: np.ndarray
    Rprime_direct: np.ndarray
    rho: np.ndarray
    rho_prime: np.ndarray
    tau: float
    tau_prime: float
    tau_star_star: float
    sq_norm_nablaJ: float


@dataclass(frozen=True)
class IdentityReport:
    """Named residuals, hypothesis flags and the tolerances behind the flags.

    ``values`` holds signed scalars (curvatures, norms) and ``diagnostics``
    holds the hysteresis verdicts of the two biconditional checks.
    """

    mode: str
    dim: int
    residuals: dict[str, float]
    flags: dict[str, bool]
    tolerances: dict[str, float]
    values: dict[str, float] = field(default_factory=dict)
    diagnostics: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "dim": self.dim,
            "residuals": dict(self.residuals),
            "flags": dict(self.flags),
            "tolerances": dict(self.tolerances),
            "values": dict(self.values),
            "diagnostics": dict(self.diagnostics),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IdentityReport":
        return cls(
            mode=str(d["mode"]), dim=int(d["dim"]),
            residuals={k: float(v) for k, v in d["residuals"].items()},
            flags={k: bool(v) for k, v in d["flags"].items()},
            tolerances={k: float(v) for k, v in d["tolerances"].items()},
            values={k: float(v) for k, v in d.get("values", {}).items()},
            diagnostics={k: str(v) for k, v in d.get("diagnostics", {}).items()},
        )


def tolerances_for(mode: str) -> dict[str, float]:
    """Flag tolerances: tight in Lie mode, loose enough for FD noise in charts."""
    flag = 1e-9 if mode == "lie" else 1e-6
    return {"flag": flag, "strict": DEFAULT_STRICT, "band_low": BAND_LOW, "band_high": BAND_HIGH}


def three_way(x: float, low: float = BAND_LOW, high: float = BAND_HIGH) -> str:
    """'zero' below ``low``, 'nonzero' above ``high``, otherwise 'band'."""
    x = abs(x)
    if x < low:
        return "zero"
    if x > high:
        return "nonzero"
    return "band"


def biconditional(a: float, b: float, low: float = BAND_LOW, high: float = BAND_HIGH) -> str:
    """Verdict on (|a| ~ 0) <=> (|b| ~ 0) with a hysteresis band."""
    ca, cb = three_way(a, low, high), three_way(b, low, high)
    if "band" in (ca, cb):
        return "inconclusive"
    return "consistent" if ca == cb else "violated"


def curvature_pack(jet: GeometryJet, conn: NaturalConnection) -> CurvaturePack:
    gi = jet.metric.g_inv
    R = riemann(jet, conn.levi_civita)
    Rp = rprime_direct(jet, conn)
    rho, tau = ricci_and_scalars(R, gi)
    rho_p, tau_p = ricci_and_scalars(Rp, gi)
    sq, _ = square_norm_nablaJ(conn.nablaJ, jet.metric)
    return CurvaturePack(R, Rp, rho, rho_p, tau, tau_p, tau_star_star(R, jet.J, gi), sq)


def _stage(name, fn, *args):
    try:
        return fn(*args)
    except PipelineError:
        raise
    except Exception as exc:  # noqa: BLE001 - tag and re-raise
        raise PipelineError(name, exc) from exc


def full_identity_report(jet: GeometryJet) -> IdentityReport:
    """Compute every residual on ``jet``. No hypothesis is assumed: each
    residual is evaluated, and the flags record which hypotheses hold."""
    tol = tolerances_for(jet.mode)
    g, gi, J = jet.g, jet.metric.g_inv, jet.J
    conn = _stage("connection", build_natural_connection, jet)
    pack = _stage("curvature", curvature_pack, jet, conn)
    R, Rp = pack.R, pack.Rprime_direct

    F = compute_F(conn.nablaJ, g)
    cls = classify(F, tol=tol["flag"], strict=tol["strict"])
    sq, sq_alt = square_norm_nablaJ(conn.nablaJ, jet.metric)
    nat12, nat13 = check_natural(conn.Q_low, F, J)
    par = max_abs(parallel_torsion_tensor(conn))

    r31 = rprime_via_general(R, jet, conn)
    r36 = rprime_parallel_form(R, conn, g)
    r41, r43 = rprime_kahler_form(R, conn, g)
    rho_formula = ricci_prime_formula(pack.rho, conn, g, gi)
    qq = qq_contraction(conn, g, gi)
    tau_formula = pack.tau + qq
    ident4 = identity_4_4_4_5(R, conn, jet)
    defect = bianchi_defect_4_2(conn, g)
    anti_p, bianchi_p = is_curvature_like(Rp)
    kahler_p = kahler_residual(Rp, J)
    kahler_full = max(anti_p, bianchi_p, kahler_p)
    cl_anti, cl_bianchi = is_curvature_like(R)
    dtau = pack.tau_prime - pack.tau

    residuals = {
        "eq_3_1": max_abs(r31 - Rp),
        "eq_3_6": max_abs(r36 - Rp),
        "eq_3_7": max_abs(rho_formula - pack.rho_prime),
        "eq_3_8": abs(tau_formula - pack.tau_prime),
        "eq_3_9": abs(dtau + sq / 8.0),
        "eq_4_1": max_abs(r41 - Rp),
        "eq_4_2": defect,
        "eq_4_3": max_abs(r43 - Rp),
        "eq_4_4": ident4["eq_4_4"],
        "eq_4_5": ident4["eq_4_5"],
        "eq_4_6": ident4["eq_4_6"],
        "kahler_1_7": kahler_p,
        "bianchi_1_6_prime": bianchi_p,
        "mema_tau_identity": abs(pack.tau_star_star + pack.tau + 0.5 * sq),
        "norm_1_3_vs_1_4": abs(sq - sq_alt),
        "parallel_torsion": par,
        "skew_2_2": check_skew(conn.T_low, [(0, 1), (1, 2), (0, 2)]),
        "natural_1_12": nat12,
        "natural_1_13": nat13,
        "q_half_t_2_3": max_abs(conn.Q_low - 0.5 * conn.T_low),
        "w3_cyclic_1_2": cls.w3_residual,
        "curvature_like_R": max(cl_anti, cl_bianchi),
        "scalar_contraction": abs(pack.tau - scalar_one_pass(R, gi)),
    }
    flags = {
        "is_w3_strict": bool(cls.is_W3_strict),
        "is_kahler": bool(cls.is_W0),
        "has_parallel_torsion": bool(par < tol["flag"]),
        "rprime_is_kahler": bool(kahler_full < tol["flag"]),
    }
    values = {
        "tau": pack.tau,
        "tau_prime": pack.tau_prime,
        "tau_star_star": pack.tau_star_star,
        "sq_norm_nablaJ": sq,
        "sq_norm_nablaJ_alternate": sq_alt,
        "tau_prime_minus_tau": dtau,
        "qq_contraction": qq,
        "eq_4_6_rhs": ident4["eq_4_6_rhs"],
        "eq_4_6_substitution": ident4["eq_4_6_substitution"],
        "f_norm": cls.f_norm,
        "rprime_kahler_residual": kahler_full,
    }
    diagnostics = {
        # equal scalar curvatures <=> vanishing square norm
        "equal_scalar_iff_isotropic": biconditional(dtau, abs(sq) / 8.0),
        "bianchi_defect_iff_kahler_rprime": biconditional(defect, kahler_full),
    }
    return IdentityReport(jet.mode, jet.dim, residuals, flags, tol, values, diagnostics)
