import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from norden_kt.curvature import IdentityReport, full_identity_report
from norden_kt.fileformats import (
    SpecFormatError,
    dumps_report,
    dumps_spec,
    loads_report,
    loads_spec,
    read_spec,
    write_spec,
)

from conftest import FIXTURES, chart_population, w3_population


def same_spec(a, b):
    if a.mode == "lie":
        return all(np.array_equal(x, y) for x, y in
                   [(a.lie.structure_constants, b.lie.structure_constants), (a.lie.g, b.lie.g), (a.lie.J, b.lie.J)])
    return (np.array_equal(a.g_poly.coeffs, b.g_poly.coeffs) and np.array_equal(a.J_poly.coeffs, b.J_poly.coeffs)
            and np.array_equal(a.g_poly.powers, b.g_poly.powers) and a.base_point == b.base_point
            and a.h == b.h and a.deriv_mode == b.deriv_mode)


def test_lie_and_chart_round_trip_bit_exact():
    for spec in [w3_population()[0].spec, chart_population()[0]]:
        text = dumps_spec(spec)
        back = loads_spec(text)
        assert same_spec(spec, back)
        assert dumps_spec(back) == text


@given(st.integers(0, 2**32))
def test_random_doubles_round_trip(seed):
    spec = w3_population()[0].spec
    rng = np.random.default_rng(seed)
    C = spec.lie.structure_constants * rng.uniform(0.5, 2.0)
    d = json.loads(dumps_spec(spec))
    d["structure_constants"] = C.tolist()
    back = loads_spec(json.dumps(d))
    assert np.array_equal(back.lie.structure_constants, C)


def test_write_and_read(tmp_path):
    spec = chart_population()[1]
    p = write_spec(spec, tmp_path / "a" / "b.spec")
    assert same_spec(read_spec(p), spec)


def test_committed_fixtures_parse_and_reserialize():
    paths = sorted(FIXTURES.rglob("*.spec"))
    assert len(paths) >= 6
    for p in paths:
        assert dumps_spec(read_spec(p)) == p.read_text()


def test_report_round_trip_idempotent():
    rep = full_identity_report(w3_population()[2].spec.jet())
    text = dumps_report(rep)
    d = loads_report(text)
    assert dumps_report(d) == text
    back = IdentityReport.from_dict(d)
    assert back.to_dict() == rep.to_dict()
    for p in sorted(FIXTURES.rglob("*.report")):
        t = p.read_text()
        assert dumps_report(loads_report(t)) == t


def test_report_floats_have_17_digits():
    rep = full_identity_report(w3_population()[2].spec.jet())
    d = loads_report(dumps_report(rep))
    for k, v in rep.values.items():
        assert d["values"][k] == v


def _corrupt(spec, **changes):
    d = json.loads(dumps_spec(spec))
    for k, v in changes.items():
        d[k] = v
    return json.dumps(d)


def test_asymmetric_metric_names_entry():
    spec = w3_population()[0].spec
    g = spec.lie.g.copy()
    g[0, 1] += 0.5
    with pytest.raises(SpecFormatError) as err:
        loads_spec(_corrupt(spec, g=g.tolist()))
    assert err.value.field in ("g[0][1]", "g[1][0]")


def test_asymmetric_chart_coefficient_names_entry():
    spec = chart_population()[0]
    d = json.loads(dumps_spec(spec))
    d["g"]["coefficients"][2][0][3] += 1.0
    with pytest.raises(SpecFormatError) as err:
        loads_spec(json.dumps(d))
    assert err.value.field.startswith("g.coefficients[2]")


@pytest.mark.parametrize("changes,field", [
    ({"mode": "torus"}, "mode"),
    ({"dim": 5}, "dim"),
    ({"dim": True}, "dim"),
    ({"g": [[1.0, 0.0], [0.0, 1.0]]}, "g"),
    ({"J": "eye"}, "J"),
    ({"structure_constants": None}, "structure_constants"),
    ({"metadata": []}, "metadata"),
])
def test_corrupted_lie_fields(changes, field):
    with pytest.raises(SpecFormatError) as err:
        loads_spec(_corrupt(w3_population()[0].spec, **changes))
    assert err.value.field == field


@pytest.mark.parametrize("changes,field", [
    ({"h": 0.0}, "h"),
    ({"h": "small"}, "h"),
    ({"deriv_mode": "spline"}, "deriv_mode"),
    ({"base_point": [0.0]}, "base_point"),
    ({"J": {"powers": [[0, 0, 0, 0]]}}, "J"),
])
def test_corrupted_chart_fields(changes, field):
    with pytest.raises(SpecFormatError) as err:
        loads_spec(_corrupt(chart_population()[0], **changes))
    assert err.value.field == field


def test_non_finite_and_bad_json():
    spec = w3_population()[0].spec
    g = spec.lie.g.tolist()
    g[2][2] = float("nan")
    with pytest.raises(SpecFormatError, match="non-finite"):
        loads_spec(_corrupt(spec, g=g))
    with pytest.raises(SpecFormatError) as err:
        loads_spec('{"mode": "lie",\n "dim": 4,,}')
    assert err.value.field == "line 2"
    with pytest.raises(SpecFormatError):
        loads_spec("[1, 2]")
