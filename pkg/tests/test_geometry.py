import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from norden_kt.factory import gl_orbit_chart, structure_constants
from norden_kt.geometry import (
    ChartGeometry,
    FieldJet,
    GeometryError,
    LieGeometry,
    PolyMatrix,
    covariant_derivative,
    covariant_derivative_rank3,
    jacobi_residual,
    jet_from_chart,
    jet_from_lie,
    levi_civita,
    nabla_J,
    nabla_J_jet,
)
from norden_kt.norden import flat_pair
from norden_kt.tensor_algebra import TensorError, max_abs

import oracles
from conftest import chart_population, w3_population


def conformal_chart(base=(0.3, 0.0, 0.0, 0.0), mode="fd", h=1e-4):
    g0, J0 = flat_pair(2)
    f = lambda x: 1.0 + x[0] ** 2  # noqa: E731
    return ChartGeometry(
        4, lambda x: f(x) * g0, lambda x: J0, base_point=np.array(base), deriv_mode=mode, h=h,
        dg_fn=lambda x: np.stack([2 * x[0] * g0] + [0 * g0] * 3),
        ddg_fn=lambda x: np.array([[2 * g0 if (m, k) == (0, 0) else 0 * g0 for k in range(4)] for m in range(4)]),
        dJ_fn=lambda x: np.zeros((4, 4, 4)), ddJ_fn=lambda x: np.zeros((4, 4, 4, 4)))


def heisenberg_type():
    C = np.zeros((4, 4, 4))
    C[3, 0, 1], C[3, 1, 0] = 1.0, -1.0
    return C


def test_constant_chart_has_zero_derivatives():
    g, J = flat_pair(2)
    jet = jet_from_chart(ChartGeometry(4, lambda x: g, lambda x: J))
    for a in (jet.dg, jet.ddg, jet.dJ, jet.ddJ):
        assert np.all(a == 0)
    assert np.all(levi_civita(jet).gamma == 0)


def test_fd_first_derivative_of_quadratic():
    jet = jet_from_chart(conformal_chart())
    assert abs(jet.dg[0, 0, 0] - 0.6) < 1e-10
    assert abs(jet.ddg[0, 0, 0, 0] - 2.0) < 1e-6
    ana = jet_from_chart(conformal_chart(mode="analytic"))
    assert np.max(np.abs(jet.dg - ana.dg)) < 1e-10


def test_chart_validation():
    g, J = flat_pair(2)
    with pytest.raises(GeometryError, match="degenerate"):
        jet_from_chart(ChartGeometry(4, lambda x: np.diag([1.0, 1.0, 0.0, -1.0]), lambda x: J))
    with pytest.raises(GeometryError, match="Norden"):
        jet_from_chart(ChartGeometry(4, lambda x: np.eye(4), lambda x: J))
    with pytest.raises(GeometryError, match="positive"):
        jet_from_chart(ChartGeometry(4, lambda x: g, lambda x: J, h=0.0))
    with pytest.raises(GeometryError, match="analytic"):
        jet_from_chart(ChartGeometry(4, lambda x: g, lambda x: J, deriv_mode="analytic"))


def test_lie_validation():
    g, J = flat_pair(2)
    C = heisenberg_type()
    C[3, 1, 0] = 0.5
    with pytest.raises(GeometryError, match="antisymmetric"):
        jet_from_lie(LieGeometry(C, g, J))
    rng = np.random.default_rng(3)
    A = rng.standard_normal((4, 4, 4))
    with pytest.raises(GeometryError, match="Jacobi"):
        jet_from_lie(LieGeometry(A - np.swapaxes(A, 1, 2), g, J))
    with pytest.raises(GeometryError, match="Norden"):
        jet_from_lie(LieGeometry(np.zeros((4, 4, 4)), g, np.eye(4)))


def test_abelian_and_heisenberg():
    g, J = flat_pair(2)
    jet = jet_from_lie(LieGeometry(np.zeros((4, 4, 4)), g, J))
    assert np.all(levi_civita(jet).gamma == 0)
    C = heisenberg_type()
    assert jacobi_residual(C) == 0
    jet = jet_from_lie(LieGeometry(C, g, J))
    assert jet.mode == "lie"


def test_jacobi_residual_of_so3_and_random():
    C = np.zeros((3, 3, 3))
    for i, j, k in [(0, 1, 2), (1, 2, 0), (2, 0, 1)]:
        C[k, i, j], C[k, j, i] = 1.0, -1.0
    assert jacobi_residual(C) < 1e-15
    A = np.random.default_rng(0).standard_normal((4, 4, 4))
    assert jacobi_residual(A - np.swapaxes(A, 1, 2)) > 1e-3


def _metric_field(jet):
    return FieldJet(jet.g, jet.dg)


def test_levi_civita_lie_properties():
    for o in w3_population()[:10]:
        jet = o.spec.jet()
        lc = levi_civita(jet)
        assert max_abs(covariant_derivative(_metric_field(jet), lc)) < 1e-12
        assert max_abs(lc.gamma - np.swapaxes(lc.gamma, 1, 2) - jet.C) < 1e-10
        want = np.array(oracles.koszul(jet.C.tolist(), jet.g.tolist()), dtype=float)
        assert max_abs(lc.gamma - want) < 1e-12


def test_levi_civita_chart_properties():
    for spec in chart_population()[:10]:
        jet = spec.jet()
        lc = levi_civita(jet)
        assert max_abs(lc.gamma - np.swapaxes(lc.gamma, 1, 2)) < 1e-15
        assert max_abs(covariant_derivative(_metric_field(jet), lc)) < 1e-9


def test_nabla_J_anticommutes_with_J():
    lie = [(o.spec.jet(), 1e-9) for o in w3_population()[:5]]
    charts = [(s.with_deriv_mode("analytic").jet(), 1e-9) for s in chart_population()[:5]]
    charts += [(s.jet(), 1e-6) for s in chart_population()[:5]]  # FD truncation is O(h^2)
    for jet, tol in lie + charts:
        nJ = nabla_J(jet, levi_civita(jet))
        anti = np.einsum("kis,sj->kij", nJ, jet.J) + np.einsum("ks,sij->kij", jet.J, nJ)
        assert max_abs(anti) < tol


def test_nabla_J_matches_loop_oracle():
    jet = w3_population()[0].spec.jet()
    lc = levi_civita(jet)
    want = np.array(oracles.nabla_J(lc.gamma.tolist(), jet.J.tolist()))
    assert max_abs(nabla_J(jet, lc) - want) < 1e-12


def _shift(spec, m, t):
    bp = np.array(spec.base_point)
    bp[m] += t
    return type(spec)(**{**spec.__dict__, "base_point": tuple(bp), "deriv_mode": "analytic"})


def test_jet_derivatives_vs_shifted_points():
    """dgamma and d(nabla J) against central differences of the analytic
    values at shifted base points."""
    spec = gl_orbit_chart(4, 2, 0.2, h=1e-4)
    jet = spec.with_deriv_mode("analytic").jet()
    lc = levi_civita(jet)
    nJ = nabla_J_jet(jet, lc)
    t = 1e-5
    for m in range(4):
        jp, jm = _shift(spec, m, t).jet(), _shift(spec, m, -t).jet()
        lp, lm = levi_civita(jp), levi_civita(jm)
        assert max_abs((lp.gamma - lm.gamma) / (2 * t) - lc.dgamma[m]) < 1e-7
        fd = (nabla_J(jp, lp) - nabla_J(jm, lm)) / (2 * t)
        assert max_abs(fd - nJ.deriv[m]) < 1e-7


def test_fd_vs_analytic_and_order_two():
    errs = []
    for h in (2e-2, 1e-2, 5e-3):
        worst = 0.0
        for seed in range(1, 6):
            spec = gl_orbit_chart(seed, 2, 0.3)
            fd = spec.with_deriv_mode("fd", h).jet()
            an = spec.with_deriv_mode("analytic").jet()
            worst = max(worst, max(max_abs(fd.ddg - an.ddg), max_abs(fd.ddJ - an.ddJ),
                                   max_abs(fd.dg - an.dg), max_abs(fd.dJ - an.dJ)))
        errs.append(worst)
    assert errs[0] / errs[1] >= 3.5 and errs[1] / errs[2] >= 3.5, errs


def test_covariant_derivative_rank3_contract():
    g, J = flat_pair(2)
    jet = jet_from_lie(LieGeometry(np.zeros((4, 4, 4)), g, J))
    S = FieldJet.constant(np.random.default_rng(1).standard_normal((4, 4, 4)), "T")
    assert np.all(covariant_derivative_rank3(S, levi_civita(jet)) == 0)
    with pytest.raises(TensorError):
        covariant_derivative_rank3(FieldJet.constant(np.zeros((4, 4, 4)), "X"), levi_civita(jet))
    with pytest.raises(TensorError):
        covariant_derivative_rank3(FieldJet.constant(np.zeros((4, 4))), levi_civita(jet))


def test_covariant_derivative_matches_loop_oracle():
    jet = w3_population()[2].spec.jet()
    lc = levi_civita(jet)
    S = np.random.default_rng(2).standard_normal((6, 6, 6))
    got = covariant_derivative_rank3(FieldJet.constant(S, "Q"), lc)
    want = np.array(oracles.covariant_rank3(lc.gamma.tolist(), S.tolist()))
    assert max_abs(got - want) < 1e-12


def test_poly_matrix_calculus():
    p = PolyMatrix(np.array([[2, 1], [0, 0]]), np.array([np.eye(2), 3 * np.ones((2, 2))]))
    x = np.array([0.5, -2.0])
    assert np.allclose(p.value(x), 0.25 * -2 * np.eye(2) + 3)
    assert np.allclose(p.grad(x)[0], 2 * 0.5 * -2 * np.eye(2))
    assert np.allclose(p.grad(x)[1], 0.25 * np.eye(2))
    assert np.allclose(p.hess(x)[0, 1], 2 * 0.5 * np.eye(2))
    q = p @ p
    assert np.allclose(q.value(x), p.value(x) @ p.value(x))


@given(st.integers(0, 10_000))
def test_lie_jet_deterministic(seed):
    rng = np.random.default_rng(seed)
    g, J = flat_pair(2)
    slots = [(3, 0, 1), (2, 0, 1)]
    C = structure_constants(rng.standard_normal(2), slots, 4)
    a, b = jet_from_lie(LieGeometry(C, g, J)), jet_from_lie(LieGeometry(C.copy(), g, J))
    assert np.array_equal(levi_civita(a).gamma, levi_civita(b).gamma)
