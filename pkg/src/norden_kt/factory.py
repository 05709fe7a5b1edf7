"""Seeded generators for example geometries.

* ``flat_kahler``: the abelian algebra with the model Norden pair.
* ``gl_orbit_chart``: a polynomial chart whose pair is pointwise a
  GL-orbit image of the model pair, so the Norden conditions hold
  identically in x while nabla J is generic.
* ``nilpotent_w3``: 2-step nilpotent Lie algebras (brackets valued in a
  central subspace, so Jacobi holds automatically) whose structure
  constants lie in the null space of the linear map C -> cyclic sum of F.
* ``filtered_search``: nilpotent_w3 candidates refined by damped least
  squares towards parallel torsion, kept only if they re-verify.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from .connections import build_natural_connection, parallel_torsion_tensor
from .curvature import EQ_TOL, IdentityReport, bianchi_defect_4_2, full_identity_report
from .fileformats import GeometrySpec, dumps_spec, loads_spec
from .geometry import LieGeometry, PolyMatrix, jacobi_residual, jet_from_lie, levi_civita, nabla_J
from .norden import DEFAULT_STRICT, check_norden, compute_F, flat_pair
from .tensor_algebra import cyclic_sum3, max_abs

__all__ = [
    "FAMILIES",
    "GeneratorConfig",
    "SearchOutcome",
    "flat_kahler",
    "gl_orbit_chart",
    "default_center",
    "bracket_slots",
    "structure_constants",
    "w3_operator",
    "w3_null_space",
    "nilpotent_w3",
    "filtered_search",
    "sweep",
    "damped_least_squares",
    "NULL_TOL",
]

FAMILIES = ("flat", "gl_orbit_chart", "nilpotent_w3")
NULL_TOL = 1e-10
VERIFY_TOL = 1e-10
FRAME_COND_MAX = 10.0


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 0
    dim: int = 4
    family: str = "nilpotent_w3"
    amplitude: float = 1.0
    max_attempts: int = 20
    require_parallel_torsion: bool = False
    require_kahler_rprime: bool = False
    center: tuple[int, ...] | None = None
    frame_perturbation: float = 0.0
    lm_iterations: int = 200

    def __post_init__(self):
        if self.dim < 2 or self.dim % 2:
            raise ValueError(f"dim must be even and >= 2, got {self.dim}")
        if not self.amplitude > 0:
            raise ValueError("amplitude must be positive")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class SearchOutcome:
    spec: GeometrySpec | None
    report: IdentityReport | None
    attempts_used: int
    status: str  # "found" | "exhausted"
    best_residual: float = float("inf")
    trace: tuple[float, ...] = ()
    null_dim: int | None = None
    message: str = ""


# --------------------------------------------------------------------------
# flat and chart families

def flat_kahler(n: int) -> GeometrySpec:
    g, J = flat_pair(n)
    d = 2 * n
    return GeometrySpec("lie", d, lie=LieGeometry(np.zeros((d, d, d)), g, J),
                        metadata={"family": "flat", "n": n})


def _nilpotent_frame_field(rng: np.random.Generator, d: int, amplitude: float) -> PolyMatrix:
    """N(x) with N(x)^2 = 0 for all x: N = S [[0, A(x)], [0, 0]] S^-1, A
    linear plus quadratic in x."""
    half = d // 2
    S = np.eye(d) + 0.3 * rng.standard_normal((d, d))
    while np.linalg.cond(S) > FRAME_COND_MAX:  # keeps higher derivatives O(amplitude)
        S = np.eye(d) + 0.3 * rng.standard_normal((d, d))
    Si = np.linalg.inv(S)
    powers, coeffs = [], []
    monos = [tuple(int(k == m) for k in range(d)) for m in range(d)]
    monos += [tuple(int(k == m) + int(k == l) for k in range(d)) for m in range(d) for l in range(m, d)]
    for p in monos:
        A = rng.standard_normal((half, half)) * (1.0 if sum(p) == 1 else 0.5)
        B = np.zeros((d, d))
        B[:half, half:] = A
        powers.append(p)
        coeffs.append(amplitude * (S @ B @ Si))
    return PolyMatrix(np.array(powers), np.array(coeffs))


def gl_orbit_chart(seed: int, n: int, amplitude: float, h: float = 1e-4,
                   max_retries: int = 16) -> GeometrySpec:
    """Chart with g = P^T g0 P and J = P^-1 J0 P, where P(x) = (I + N(x)) P0.

    N is pointwise nilpotent of order 2, so P^-1 = P0^-1 (I - N) is again
    polynomial and the Norden conditions hold identically in x.
    """
    d = 2 * n
    g0, J0 = flat_pair(n)
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        P0 = np.eye(d) + amplitude * rng.standard_normal((d, d))
        if np.linalg.cond(P0) > 1e6:
            continue
        N = _nilpotent_frame_field(rng, d, amplitude)
        P0i = np.linalg.inv(P0)
        one = PolyMatrix.constant(np.eye(d), d)
        IpN = one + N
        ImN = one + N.scale(-1.0)
        P = IpN @ PolyMatrix.constant(P0, d)
        Pinv = PolyMatrix.constant(P0i, d) @ ImN
        g = P.T @ PolyMatrix.constant(g0, d) @ P
        g = PolyMatrix(g.powers, 0.5 * (g.coeffs + np.swapaxes(g.coeffs, 1, 2)))
        J = Pinv @ PolyMatrix.constant(J0, d) @ P
        spec = GeometrySpec("chart", d, g_poly=g, J_poly=J, base_point=(0.0,) * d, h=h,
                            metadata={"family": "gl_orbit_chart", "seed": int(seed), "n": n,
                                      "amplitude": float(amplitude)})
        rj, rg = check_norden(g.value(np.zeros(d)), J.value(np.zeros(d)))
        if max(rj, rg) < 1e-12:
            return spec
    raise RuntimeError(f"gl_orbit_chart: exhausted {max_retries} invertibility retries")


# --------------------------------------------------------------------------
# 2-step nilpotent W3 family

def default_center(dim: int) -> tuple[int, ...]:
    """Last two basis vectors in dim 4; a J-invariant pair (e_n, J e_n) above."""
    n = dim // 2
    if dim == 4:
        return (2, 3)
    return (n - 1, dim - 1)


def bracket_slots(dim: int, center: tuple[int, ...]) -> list[tuple[int, int, int]]:
    """Free parameters C^k_ij, k in the center, i<j outside it."""
    rest = [i for i in range(dim) if i not in center]
    return [(k, i, j) for k in center for i, j in itertools.combinations(rest, 2)]


def structure_constants(params, slots, dim: int) -> np.ndarray:
    C = np.zeros((dim, dim, dim))
    for p, (k, i, j) in zip(params, slots):
        C[k, i, j] += p
        C[k, j, i] -= p
    return C


def _complex_linear_frame(rng: np.random.Generator, n: int, eps: float) -> np.ndarray:
    """P = I + eps [[A, -B], [B, A]], which commutes with the model J."""
    A = rng.standard_normal((n, n))
    B = rng.standard_normal((n, n))
    return np.eye(2 * n) + eps * np.block([[A, -B], [B, A]])


def _pair(rng: np.random.Generator, dim: int, eps: float) -> tuple[np.ndarray, np.ndarray]:
    g0, J0 = flat_pair(dim // 2)
    if eps == 0:
        return g0, J0
    P = _complex_linear_frame(rng, dim // 2, eps)
    g = P.T @ g0 @ P
    return 0.5 * (g + g.T), J0


def _lie_F(C, g, J):
    lie = LieGeometry(C, g, J)
    jet = jet_from_lie(lie)
    return compute_F(nabla_J(jet, levi_civita(jet)), g)


def w3_operator(slots, g, J) -> np.ndarray:
    """Matrix of the linear map params -> cyclic sum of F (flattened)."""
    d = g.shape[0]
    cols = []
    for t in range(len(slots)):
        e = np.zeros(len(slots))
        e[t] = 1.0
        cols.append(cyclic_sum3(_lie_F(structure_constants(e, slots, d), g, J)).ravel())
    return np.array(cols).T


def w3_null_space(slots, g, J, tol: float = NULL_TOL) -> np.ndarray:
    """Orthonormal rows spanning the null space (singular values <= tol)."""
    A = w3_operator(slots, g, J)
    _, s, vt = np.linalg.svd(A)
    rank = int(np.sum(s > tol))
    return vt[rank:]


def _verify_w3(C, g, J) -> tuple[bool, str]:
    rj, rg = check_norden(g, J)
    if max(rj, rg) > VERIFY_TOL:
        return False, "norden"
    if jacobi_residual(C) > VERIFY_TOL:
        return False, "jacobi"
    F = _lie_F(C, g, J)
    if max_abs(cyclic_sum3(F)) > VERIFY_TOL:
        return False, "w3"
    if max_abs(F) < DEFAULT_STRICT:
        return False, "kahler"
    conn = build_natural_connection(jet_from_lie(LieGeometry(C, g, J)))
    T = conn.T_low
    if max_abs(T + np.swapaxes(T, 1, 2)) > VERIFY_TOL or max_abs(conn.Q_low - 0.5 * T) > VERIFY_TOL:
        return False, "skew"
    return True, "ok"


def _setup(config: GeneratorConfig, rng: np.random.Generator):
    d = config.dim
    center = tuple(config.center) if config.center is not None else default_center(d)
    if len(set(center)) != len(center) or any(not 0 <= c < d for c in center):
        raise ValueError(f"invalid center {center} for dim {d}")
    g, J = _pair(rng, d, config.frame_perturbation)
    slots = bracket_slots(d, center)
    ns = w3_null_space(slots, g, J)
    return center, g, J, slots, ns


def _lie_spec(C, g, J, config: GeneratorConfig, center, extra: dict | None = None) -> GeometrySpec:
    meta = {"family": "nilpotent_w3", "seed": int(config.seed), "center": list(center),
            "amplitude": float(config.amplitude), "frame_perturbation": float(config.frame_perturbation)}
    if extra:
        meta.update(extra)
    return GeometrySpec("lie", config.dim, lie=LieGeometry(C, g, J), metadata=meta)


def _reverify(spec: GeometrySpec) -> tuple[GeometrySpec, IdentityReport]:
    back = loads_spec(dumps_spec(spec))
    return back, full_identity_report(back.jet())


def nilpotent_w3(seed: int, n: int, config: GeneratorConfig | None = None) -> SearchOutcome:
    """Random W3-strict 2-step nilpotent example, verified end to end."""
    config = config or GeneratorConfig(seed=seed, dim=2 * n)
    config = replace(config, seed=seed, dim=2 * n)
    if config.dim < 4:
        raise ValueError("nilpotent_w3 needs dim >= 4")
    rng = np.random.default_rng(seed)
    center, g, J, slots, ns = _setup(config, rng)
    if len(ns) == 0:
        return SearchOutcome(None, None, 0, "exhausted", null_dim=0,
                             message=f"W3 null space is trivial for center {center}")
    reasons = []
    for attempt in range(1, config.max_attempts + 1):
        a = rng.standard_normal(len(ns))
        a *= config.amplitude / np.linalg.norm(a)
        C = structure_constants(a @ ns, slots, config.dim)
        ok, why = _verify_w3(C, g, J)
        reasons.append(why)
        if ok:
            spec, report = _reverify(_lie_spec(C, g, J, config, center))
            return SearchOutcome(spec, report, attempt, "found", null_dim=len(ns))
    return SearchOutcome(None, None, config.max_attempts, "exhausted", null_dim=len(ns),
                         message="all candidates rejected: " + ",".join(reasons))


# --------------------------------------------------------------------------
# damped least squares

def damped_least_squares(fun, x0: np.ndarray, max_iter: int = 200, jac_step: float = 1.0,
                         damping: float = 1e-12, tol: float = 1e-15) -> tuple[np.ndarray, list[float]]:
    """Gauss-Newton with Levenberg damping and step halving on non-decrease.

    The Jacobian is a central difference with step ``jac_step``, which is
    exact when ``fun`` is quadratic. Returns the final point and the
    history of max|residual|.
    """
    x = np.array(x0, dtype=np.float64)
    r = fun(x)
    cost = float(r @ r)
    hist = [max_abs(r)]
    for _ in range(max_iter):
        if hist[-1] < tol:
            break
        Jm = np.stack([(fun(x + jac_step * e) - fun(x - jac_step * e)) / (2 * jac_step)
                       for e in np.eye(len(x))], axis=1)
        A = Jm.T @ Jm
        step = -np.linalg.solve(A + damping * (np.trace(A) / len(x) + 1.0) * np.eye(len(x)), Jm.T @ r)
        t = 1.0
        improved = False
        for _ in range(40):
            xn = x + t * step
            rn = fun(xn)
            cn = float(rn @ rn)
            if cn < cost:
                improved = True
                break
            t *= 0.5
        if not improved:
            break
        x, r, cost = xn, rn, cn
        hist.append(max_abs(r))
    return x, hist


def _parallel_residual_fn(ns, slots, g, J, dim, amplitude):
    def fun(a):
        C = structure_constants(a @ ns, slots, dim)
        conn = build_natural_connection(jet_from_lie(LieGeometry(C, g, J)))
        dT = parallel_torsion_tensor(conn).ravel()
        return np.concatenate([dT, [float(a @ a) - amplitude ** 2]])
    return fun


def filtered_search(config: GeneratorConfig) -> SearchOutcome:
    """First candidate meeting the requested filters, or an exhausted outcome
    carrying the best residual per attempt."""
    if config.family != "nilpotent_w3":
        raise ValueError("filtered_search needs family nilpotent_w3")
    if not (config.require_parallel_torsion or config.require_kahler_rprime):
        return nilpotent_w3(config.seed, config.dim // 2, config)
    d = config.dim
    rng = np.random.default_rng(config.seed)
    center, g, J, slots, ns = _setup(config, rng)
    if len(ns) == 0:
        return SearchOutcome(None, None, 0, "exhausted", null_dim=0,
                             message=f"W3 null space is trivial for center {center}")
    fun = _parallel_residual_fn(ns, slots, g, J, d, config.amplitude)
    best = float("inf")
    trace = []
    for attempt in range(1, config.max_attempts + 1):
        a0 = rng.standard_normal(len(ns))
        a0 *= config.amplitude / np.linalg.norm(a0)
        a, hist = damped_least_squares(fun, a0, max_iter=config.lm_iterations)
        C = structure_constants(a @ ns, slots, d)
        ok, why = _verify_w3(C, g, J)
        conn = build_natural_connection(jet_from_lie(LieGeometry(C, g, J)))
        par = max_abs(parallel_torsion_tensor(conn))
        score = par
        if config.require_kahler_rprime:
            score = max(score, bianchi_defect_4_2(conn, g))
        if ok:
            best = min(best, score)
        trace.append(score if ok else float("inf"))
        if not ok or score >= EQ_TOL:
            continue
        spec = _lie_spec(C, g, J, config, center, {
            "require_parallel_torsion": bool(config.require_parallel_torsion),
            "require_kahler_rprime": bool(config.require_kahler_rprime),
            "lm_iterations_used": len(hist) - 1,
        })
        spec, report = _reverify(spec)
        flags_ok = report.residuals["parallel_torsion"] < EQ_TOL
        if config.require_kahler_rprime:
            flags_ok = flags_ok and report.residuals["eq_4_2"] < EQ_TOL
        if flags_ok and report.flags["is_w3_strict"]:
            return SearchOutcome(spec, report, attempt, "found", best, tuple(trace), len(ns))
    return SearchOutcome(None, None, config.max_attempts, "exhausted", best, tuple(trace), len(ns),
                         message="no candidate met the filters")


def _run_one(config: GeneratorConfig) -> SearchOutcome:
    return filtered_search(config)


def sweep(config: GeneratorConfig, seeds, jobs: int = 1) -> tuple[int | None, SearchOutcome, dict]:
    """Run ``filtered_search`` over ``seeds`` and return the lowest passing seed.

    Every seed is evaluated independently, so the choice does not depend on
    ``jobs``.
    """
    seeds = list(seeds)
    configs = [replace(config, seed=int(s)) for s in seeds]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            outcomes = list(ex.map(_run_one, configs))
    else:
        outcomes = [_run_one(c) for c in configs]
    by_seed = dict(zip(seeds, outcomes))
    for s in seeds:
        if by_seed[s].status == "found":
            return s, by_seed[s], by_seed
    best_seed = min(seeds, key=lambda s: by_seed[s].best_residual) if seeds else None
    return None, by_seed[best_seed] if best_seed is not None else SearchOutcome(None, None, 0, "exhausted"), by_seed
