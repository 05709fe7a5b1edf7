"""Pointwise geometry data (jets) from coordinate charts or left-invariant
Lie-algebra data, plus the Levi-Civita connection and covariant derivatives.

Both modes share one jet contract. Chart jets have vanishing brackets and
carry coordinate derivatives of g and J; Lie jets have vanishing
derivatives (all invariant components are constant) and carry the
structure constants ``C[k, i, j]`` with ``[e_i, e_j] = C[k, i, j] e_k``.
Formulas downstream include both the derivative terms and the bracket
terms, so each one is correct in either mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .norden import check_norden
from .tensor_algebra import Metric, TensorError, max_abs

__all__ = [
    "GeometryError",
    "PolyMatrix",
    "ChartGeometry",
    "LieGeometry",
    "GeometryJet",
    "ConnectionCoefficients",
    "FieldJet",
    "jacobi_residual",
    "jet_from_chart",
    "jet_from_lie",
    "levi_civita",
    "nabla_J",
    "nabla_J_jet",
    "covariant_derivative",
    "covariant_derivative_rank3",
    "NORDEN_TOL",
    "JACOBI_TOL",
]

NORDEN_TOL = 1e-10
JACOBI_TOL = 1e-10
DEFAULT_H = 1e-4


class GeometryError(ValueError):
    """Invalid geometry input (degenerate metric, broken Norden condition, ...)."""


# --------------------------------------------------------------------------
# polynomial matrix fields

@dataclass(frozen=True)
class PolyMatrix:
    """Matrix-valued polynomial sum_a coeffs[a] * x**powers[a].

    ``powers`` has shape (terms, nvars) with non-negative integer entries;
    ``coeffs`` has shape (terms, d, d).
    """

    powers: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.powers, dtype=np.int64).reshape(len(self.coeffs), -1)
        c = np.asarray(self.coeffs, dtype=np.float64)
        if c.ndim != 3 or c.shape[1] != c.shape[2]:
            raise ValueError(f"coefficients must have shape (terms, d, d), got {c.shape}")
        if np.any(p < 0):
            raise ValueError("negative exponent")
        object.__setattr__(self, "powers", p)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def constant(cls, m, nvars: int) -> "PolyMatrix":
        m = np.asarray(m, dtype=np.float64)
        return cls(np.zeros((1, nvars), dtype=np.int64), m[None])

    @property
    def nvars(self) -> int:
        return self.powers.shape[1]

    @property
    def size(self) -> int:
        return self.coeffs.shape[1]

    def _monomials(self, x, shift: Sequence[int] = ()) -> np.ndarray:
        """Values of d^shift(x**p) for every term, as a (terms,) array."""
        x = np.asarray(x, dtype=np.float64)
        p = self.powers.copy()
        fac = np.ones(len(p))
        for m in shift:
            fac = fac * p[:, m]
            p[:, m] = np.maximum(p[:, m] - 1, 0)
        vals = np.prod(x[None, :] ** p, axis=1)
        return fac * vals

    def value(self, x) -> np.ndarray:
        return np.einsum("a,aij->ij", self._monomials(x), self.coeffs)

    def grad(self, x) -> np.ndarray:
        return np.stack([np.einsum("a,aij->ij", self._monomials(x, (m,)), self.coeffs)
                         for m in range(self.nvars)])

    def hess(self, x) -> np.ndarray:
        n = self.nvars
        out = np.zeros((n, n) + self.coeffs.shape[1:])
        for m in range(n):
            for k in range(m, n):
                out[m, k] = np.einsum("a,aij->ij", self._monomials(x, (m, k)), self.coeffs)
                out[k, m] = out[m, k]
        return out

    def simplify(self) -> "PolyMatrix":
        """Merge equal monomials and order terms lexicographically by exponent."""
        keys = [tuple(int(v) for v in row) for row in self.powers]
        acc: dict[tuple[int, ...], np.ndarray] = {}
        for k, c in zip(keys, self.coeffs):
            acc[k] = acc[k] + c if k in acc else c.copy()
        order = sorted(acc)
        return PolyMatrix(np.array(order, dtype=np.int64).reshape(len(order), self.nvars),
                          np.array([acc[k] for k in order]))

    def __add__(self, other: "PolyMatrix") -> "PolyMatrix":
        return PolyMatrix(np.vstack([self.powers, other.powers]),
                          np.concatenate([self.coeffs, other.coeffs])).simplify()

    def __matmul__(self, other: "PolyMatrix") -> "PolyMatrix":
        pw = (self.powers[:, None, :] + other.powers[None, :, :]).reshape(-1, self.nvars)
        cf = np.einsum("aij,bjk->abik", self.coeffs, other.coeffs).reshape(-1, self.size, other.size)
        return PolyMatrix(pw, cf).simplify()

    def scale(self, s: float) -> "PolyMatrix":
        return PolyMatrix(self.powers, s * self.coeffs)

    @property
    def T(self) -> "PolyMatrix":
        return PolyMatrix(self.powers, np.swapaxes(self.coeffs, 1, 2))


# --------------------------------------------------------------------------
# geometry descriptions

MatrixFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ChartGeometry:
    """A metric and almost complex structure given as functions on a chart.

    ``deriv_mode`` is ``"fd"`` (central differences with step ``h``) or
    ``"analytic"`` (the four derivative callbacks must be supplied). The
    callables must be side-effect free.
    """

    dim: int
    g_fn: MatrixFn
    J_fn: MatrixFn
    base_point: np.ndarray | None = None
    deriv_mode: str = "fd"
    h: float = DEFAULT_H
    dg_fn: MatrixFn | None = None
    ddg_fn: MatrixFn | None = None
    dJ_fn: MatrixFn | None = None
    ddJ_fn: MatrixFn | None = None

    @classmethod
    def from_polynomials(cls, g: PolyMatrix, J: PolyMatrix, base_point=None,
                         deriv_mode: str = "fd", h: float = DEFAULT_H) -> "ChartGeometry":
        return cls(dim=g.size, g_fn=g.value, J_fn=J.value, base_point=base_point,
                   deriv_mode=deriv_mode, h=h, dg_fn=g.grad, ddg_fn=g.hess,
                   dJ_fn=J.grad, ddJ_fn=J.hess)

    def point(self) -> np.ndarray:
        if self.base_point is None:
            return np.zeros(self.dim)
        return np.asarray(self.base_point, dtype=np.float64)


@dataclass(frozen=True)
class LieGeometry:
    structure_constants: np.ndarray
    g: np.ndarray
    J: np.ndarray

    @property
    def dim(self) -> int:
        return self.g.shape[0]


def jacobi_residual(C: np.ndarray) -> float:
    """max |sum_s C^m_is C^s_jl + C^m_js C^s_li + C^m_ls C^s_ij|."""
    a = np.einsum("mis,sjl->mijl", C, C)
    b = np.einsum("mjs,sli->mijl", C, C)
    c = np.einsum("mls,sij->mijl", C, C)
    return max_abs(a + b + c)


@dataclass(frozen=True)
class GeometryJet:
    """Everything downstream needs at one point.

    ``dg[m, i, j]``, ``ddg[m, n, i, j]``, ``dJ[m, k, j]``, ``ddJ[m, n, k, j]``
    are frame derivatives of the components; ``C`` are the frame brackets.
    """

    mode: str
    metric: Metric
    J: np.ndarray
    dg: np.ndarray
    ddg: np.ndarray
    dJ: np.ndarray
    ddJ: np.ndarray
    C: np.ndarray

    @property
    def dim(self) -> int:
        return self.metric.dim

    @property
    def g(self) -> np.ndarray:
        return self.metric.g


@dataclass(frozen=True)
class ConnectionCoefficients:
    """``gamma[k, i, j]`` with ``nabla_{e_i} e_j = gamma[k, i, j] e_k`` and its
    frame derivative ``dgamma[m, k, i, j]``."""

    gamma: np.ndarray
    dgamma: np.ndarray

    def __add__(self, other: "ConnectionCoefficients") -> "ConnectionCoefficients":
        return ConnectionCoefficients(self.gamma + other.gamma, self.dgamma + other.dgamma)


@dataclass(frozen=True)
class FieldJet:
    """Component values of a tensor field at the point, with frame derivatives
    ``deriv[m, ...] = e_m(value[...])``."""

    value: np.ndarray
    deriv: np.ndarray
    name: str = field(default="")

    @classmethod
    def constant(cls, value, name: str = "") -> "FieldJet":
        value = np.asarray(value, dtype=np.float64)
        return cls(value, np.zeros((value.shape[0],) + value.shape), name)


# --------------------------------------------------------------------------
# jets

def _validate_pair(g: np.ndarray, J: np.ndarray, *, where: str) -> Metric:
    d = g.shape[0]
    if g.shape != (d, d) or J.shape != (d, d):
        raise GeometryError(f"{where}: g and J must be square of equal size")
    if d < 2 or d % 2:
        raise GeometryError(f"{where}: dimension must be even, got {d}")
    try:
        metric = Metric.from_matrix(g)
    except TensorError as exc:
        raise GeometryError(f"{where}: {exc}") from exc
    rj, rg = check_norden(g, J)
    if rj > NORDEN_TOL or rg > NORDEN_TOL:
        raise GeometryError(f"{where}: Norden residuals ({rj:.3e}, {rg:.3e}) above {NORDEN_TOL:g}")
    if metric.signature != (d // 2, d // 2):
        raise GeometryError(f"{where}: signature {metric.signature} is not neutral")
    return metric


def _fd_derivatives(fn: MatrixFn, x: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Central first differences and 3x3-stencil second differences."""
    n = x.shape[0]
    cache: dict[tuple[int, ...], np.ndarray] = {}

    def at(offsets: tuple[int, ...]) -> np.ndarray:
        if offsets not in cache:
            cache[offsets] = np.asarray(fn(x + h * np.array(offsets, dtype=np.float64)), dtype=np.float64)
        return cache[offsets]

    def e(*pairs):
        v = [0] * n
        for m, s in pairs:
            v[m] += s
        return tuple(v)

    f0 = at(e())
    d1 = np.stack([(at(e((m, 1))) - at(e((m, -1)))) / (2 * h) for m in range(n)])
    d2 = np.zeros((n, n) + f0.shape)
    for m in range(n):
        d2[m, m] = (at(e((m, 1))) - 2 * f0 + at(e((m, -1)))) / (h * h)
        for k in range(m + 1, n):
            val = (at(e((m, 1), (k, 1))) - at(e((m, 1), (k, -1)))
                   - at(e((m, -1), (k, 1))) + at(e((m, -1), (k, -1)))) / (4 * h * h)
            d2[m, k] = val
            d2[k, m] = val
    return d1, d2


def jet_from_chart(c: ChartGeometry) -> GeometryJet:
    x = c.point()
    if x.shape != (c.dim,):
        raise GeometryError(f"base point has shape {x.shape}, expected ({c.dim},)")
    g = np.asarray(c.g_fn(x), dtype=np.float64)
    J = np.asarray(c.J_fn(x), dtype=np.float64)
    metric = _validate_pair(g, J, where="chart base point")
    if c.deriv_mode == "fd":
        if not c.h > 0:
            raise GeometryError("finite-difference step must be positive")
        dg, ddg = _fd_derivatives(c.g_fn, x, c.h)
        dJ, ddJ = _fd_derivatives(c.J_fn, x, c.h)
    elif c.deriv_mode == "analytic":
        fns = (c.dg_fn, c.ddg_fn, c.dJ_fn, c.ddJ_fn)
        if any(f is None for f in fns):
            raise GeometryError("analytic mode needs all four derivative callbacks")
        dg, ddg, dJ, ddJ = (np.asarray(f(x), dtype=np.float64) for f in fns)
    else:
        raise GeometryError(f"unknown deriv_mode {c.deriv_mode!r}")
    # metric slots of dg/ddg are symmetric for exactly symmetric g_fn; enforce it
    dg = 0.5 * (dg + np.swapaxes(dg, -1, -2))
    ddg = 0.5 * (ddg + np.swapaxes(ddg, -1, -2))
    d = c.dim
    return GeometryJet("chart", metric, J, dg, ddg, dJ, ddJ, np.zeros((d, d, d)))


def jet_from_lie(l: LieGeometry) -> GeometryJet:
    C = np.asarray(l.structure_constants, dtype=np.float64)
    g = np.asarray(l.g, dtype=np.float64)
    J = np.asarray(l.J, dtype=np.float64)
    d = g.shape[0]
    if C.shape != (d, d, d):
        raise GeometryError(f"structure constants have shape {C.shape}, expected {(d, d, d)}")
    if np.any(C != -np.swapaxes(C, 1, 2)):
        raise GeometryError("structure constants are not antisymmetric in the lower slots")
    jac = jacobi_residual(C)
    if jac > JACOBI_TOL:
        raise GeometryError(f"Jacobi residual {jac:.3e} above {JACOBI_TOL:g}")
    metric = _validate_pair(g, J, where="lie algebra")
    z3 = np.zeros((d, d, d))
    z4 = np.zeros((d, d, d, d))
    return GeometryJet("lie", metric, J, z3, z4, z3.copy(), z4.copy(), C)


# --------------------------------------------------------------------------
# connections and covariant derivatives

def levi_civita(jet: GeometryJet) -> ConnectionCoefficients:
    """Levi-Civita coefficients.

    Chart: Christoffel symbols. Lie: Koszul formula for invariant fields,
    2 g(nabla_x y, z) = g([x,y],z) - g([x,z],y) - g([y,z],x).
    """
    gi, g = jet.metric.g_inv, jet.g
    d = jet.dim
    if jet.mode == "chart":
        dg, ddg = jet.dg, jet.ddg
        # lowered: G[i, j, s] = g(nabla_i e_j, e_s)
        low = 0.5 * (np.einsum("isj->ijs", dg) + np.einsum("jsi->ijs", dg) - np.einsum("sij->ijs", dg))
        gamma = np.einsum("ks,ijs->kij", gi, low)
        dlow = 0.5 * (np.einsum("misj->mijs", ddg) + np.einsum("mjsi->mijs", ddg)
                      - np.einsum("msij->mijs", ddg))
        dgi = -np.einsum("ka,mab,bs->mks", gi, dg, gi)
        dgamma = np.einsum("mks,ijs->mkij", dgi, low) + np.einsum("ks,mijs->mkij", gi, dlow)
        return ConnectionCoefficients(gamma, dgamma)
    if jet.mode == "lie":
        c = np.einsum("sij,sl->ijl", jet.C, g)  # c[i,j,l] = g([e_i,e_j], e_l)
        low = 0.5 * (c - np.einsum("ilj->ijl", c) - np.einsum("jli->ijl", c))
        gamma = np.einsum("kl,ijl->kij", gi, low)
        return ConnectionCoefficients(gamma, np.zeros((d,) * 4))
    raise GeometryError(f"unknown jet mode {jet.mode!r}")


def _nabla_J_value(J, dJ, gamma):
    return (np.einsum("ikj->kij", dJ)
            + np.einsum("kis,sj->kij", gamma, J)
            - np.einsum("sij,ks->kij", gamma, J))


def nabla_J(jet: GeometryJet, gamma: ConnectionCoefficients | np.ndarray) -> np.ndarray:
    """(nabla_i J)^k_j = e_i(J^k_j) + G^k_is J^s_j - G^s_ij J^k_s, stored [k, i, j]."""
    g_arr = gamma.gamma if isinstance(gamma, ConnectionCoefficients) else np.asarray(gamma)
    return _nabla_J_value(jet.J, jet.dJ, g_arr)


def nabla_J_jet(jet: GeometryJet, conn: ConnectionCoefficients) -> FieldJet:
    """nabla J together with its frame derivative (product rule over the jet)."""
    J, dJ, ddJ = jet.J, jet.dJ, jet.ddJ
    G, dG = conn.gamma, conn.dgamma
    value = _nabla_J_value(J, dJ, G)
    deriv = (np.einsum("mikj->mkij", ddJ)
             + np.einsum("mkis,sj->mkij", dG, J) + np.einsum("kis,msj->mkij", G, dJ)
             - np.einsum("msij,ks->mkij", dG, J) - np.einsum("sij,mks->mkij", G, dJ))
    return FieldJet(value, deriv, "nablaJ")


_SLOT_LETTERS = "abcdefgh"


def covariant_derivative(field: FieldJet, conn: ConnectionCoefficients) -> np.ndarray:
    """(nabla_i S)_{j...} = e_i(S_{j...}) - sum over slots of G^s_{i,slot} S(..s..).

    ``field`` must be fully covariant; output index order is [i, j, ...].
    """
    S = field.value
    r = S.ndim
    if r > len(_SLOT_LETTERS):
        raise TensorError("rank too large")
    out = field.deriv.copy()
    idx = _SLOT_LETTERS[:r]
    for pos in range(r):
        src = idx[:pos] + "s" + idx[pos + 1:]
        out = out - np.einsum(f"s{'i'}{idx[pos]},{src}->i{idx}", conn.gamma, S)
    return out


def covariant_derivative_rank3(field: FieldJet, conn: ConnectionCoefficients) -> np.ndarray:
    if field.value.ndim != 3:
        raise TensorError(f"expected a rank-3 field, got rank {field.value.ndim}")
    if field.name and field.name not in ("Q", "T"):
        raise TensorError(f"unknown field descriptor {field.name!r}")
    return covariant_derivative(field, conn)
