"""Text formats: geometry specs in and identity reports out.

Specs are JSON. Floats are written with ``repr``, which is the shortest
decimal string that parses back to the same double, so a spec round-trips
bit-exactly. Reports are JSON with every float in '%.16e' scientific form
(17 significant digits, again exact for doubles).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .curvature import IdentityReport
from .geometry import (
    ChartGeometry,
    GeometryJet,
    LieGeometry,
    PolyMatrix,
    jet_from_chart,
    jet_from_lie,
)

__all__ = [
    "SpecFormatError",
    "GeometrySpec",
    "dumps_spec",
    "loads_spec",
    "read_spec",
    "write_spec",
    "dumps_report",
    "loads_report",
]

FORMAT_VERSION = 1


class SpecFormatError(ValueError):
    """Malformed spec; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class GeometrySpec:
    """Serializable geometry. ``lie`` holds (C, g, J); ``chart`` holds
    polynomial tables for g and J plus the FD settings."""

    mode: str
    dim: int
    lie: LieGeometry | None = None
    g_poly: PolyMatrix | None = None
    J_poly: PolyMatrix | None = None
    base_point: tuple[float, ...] | None = None
    h: float = 1e-4
    deriv_mode: str = "fd"
    metadata: dict[str, Any] = field(default_factory=dict)

    def geometry(self) -> LieGeometry | ChartGeometry:
        if self.mode == "lie":
            return self.lie
        return ChartGeometry.from_polynomials(self.g_poly, self.J_poly, base_point=self.base_point,
                                              deriv_mode=self.deriv_mode, h=self.h)

    def jet(self) -> GeometryJet:
        if self.mode == "lie":
            return jet_from_lie(self.lie)
        return jet_from_chart(self.geometry())

    def with_deriv_mode(self, deriv_mode: str, h: float | None = None) -> "GeometrySpec":
        return GeometrySpec(self.mode, self.dim, self.lie, self.g_poly, self.J_poly, self.base_point,
                            self.h if h is None else h, deriv_mode, dict(self.metadata))


# --------------------------------------------------------------------------
# spec encoding

def _mat(a) -> list:
    return np.asarray(a, dtype=np.float64).tolist()


def _poly_to(p: PolyMatrix) -> dict:
    return {"powers": p.powers.tolist(), "coefficients": _mat(p.coeffs)}


def spec_to_dict(spec: GeometrySpec) -> dict:
    out: dict[str, Any] = {"format": FORMAT_VERSION, "mode": spec.mode, "dim": spec.dim}
    if spec.mode == "lie":
        out["structure_constants"] = _mat(spec.lie.structure_constants)
        out["g"] = _mat(spec.lie.g)
        out["J"] = _mat(spec.lie.J)
    else:
        out["g"] = _poly_to(spec.g_poly)
        out["J"] = _poly_to(spec.J_poly)
        out["base_point"] = [float(v) for v in (spec.base_point or (0.0,) * spec.dim)]
        out["h"] = float(spec.h)
        out["deriv_mode"] = spec.deriv_mode
    out["metadata"] = spec.metadata
    return out


def dumps_spec(spec: GeometrySpec) -> str:
    return json.dumps(spec_to_dict(spec), indent=1, allow_nan=False) + "\n"


def _array(d: dict, key: str, shape: tuple[int, ...], where: str = "") -> np.ndarray:
    name = where + key
    if key not in d:
        raise SpecFormatError(name, "missing")
    try:
        a = np.array(d[key], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise SpecFormatError(name, f"not a numeric array ({exc})") from exc
    if a.shape != shape:
        raise SpecFormatError(name, f"shape {a.shape}, expected {shape}")
    if not np.all(np.isfinite(a)):
        raise SpecFormatError(name, "non-finite entry")
    return a


def _check_symmetric(a: np.ndarray, name: str, prefix: str = "") -> None:
    bad = np.argwhere(a != a.T)
    if len(bad):
        i, j = (int(v) for v in bad[0])
        raise SpecFormatError(f"{name}{prefix}[{i}][{j}]",
                              f"metric not symmetric: {a[i, j]!r} != {a[j, i]!r} at [{j}][{i}]")


def _poly_from(d: dict, key: str, dim: int, symmetric: bool) -> PolyMatrix:
    if key not in d or not isinstance(d[key], dict):
        raise SpecFormatError(key, "missing polynomial table")
    t = d[key]
    if "powers" not in t or "coefficients" not in t:
        raise SpecFormatError(key, "needs 'powers' and 'coefficients'")
    try:
        pw = np.array(t["powers"], dtype=np.int64)
    except (TypeError, ValueError) as exc:
        raise SpecFormatError(f"{key}.powers", str(exc)) from exc
    nterms = len(t["coefficients"])
    if pw.shape != (nterms, dim):
        raise SpecFormatError(f"{key}.powers", f"shape {pw.shape}, expected {(nterms, dim)}")
    if np.any(pw < 0):
        raise SpecFormatError(f"{key}.powers", "negative exponent")
    cf = _array(t, "coefficients", (nterms, dim, dim), where=f"{key}.")
    if symmetric:
        for a in range(nterms):
            _check_symmetric(cf[a], f"{key}.coefficients", f"[{a}]")
    return PolyMatrix(pw, cf)


def spec_from_dict(d: Any) -> GeometrySpec:
    if not isinstance(d, dict):
        raise SpecFormatError("<root>", "expected an object")
    mode = d.get("mode")
    if mode not in ("lie", "chart"):
        raise SpecFormatError("mode", f"expected 'lie' or 'chart', got {mode!r}")
    dim = d.get("dim")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 2 or dim % 2:
        raise SpecFormatError("dim", f"expected an even integer >= 2, got {dim!r}")
    meta = d.get("metadata", {})
    if not isinstance(meta, dict):
        raise SpecFormatError("metadata", "expected an object")
    if mode == "lie":
        C = _array(d, "structure_constants", (dim, dim, dim))
        g = _array(d, "g", (dim, dim))
        J = _array(d, "J", (dim, dim))
        _check_symmetric(g, "g")
        return GeometrySpec("lie", dim, lie=LieGeometry(C, g, J), metadata=meta)
    gp = _poly_from(d, "g", dim, symmetric=True)
    Jp = _poly_from(d, "J", dim, symmetric=False)
    bp = _array(d, "base_point", (dim,)) if "base_point" in d else np.zeros(dim)
    h = d.get("h", 1e-4)
    if not isinstance(h, (int, float)) or isinstance(h, bool) or not h > 0:
        raise SpecFormatError("h", f"expected a positive number, got {h!r}")
    dm = d.get("deriv_mode", "fd")
    if dm not in ("fd", "analytic"):
        raise SpecFormatError("deriv_mode", f"expected 'fd' or 'analytic', got {dm!r}")
    return GeometrySpec("chart", dim, g_poly=gp, J_poly=Jp, base_point=tuple(float(v) for v in bp),
                        h=float(h), deriv_mode=dm, metadata=meta)


def loads_spec(text: str) -> GeometrySpec:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecFormatError(f"line {exc.lineno}", exc.msg) from exc
    return spec_from_dict(d)


def read_spec(path) -> GeometrySpec:
    return loads_spec(Path(path).read_text())


def write_spec(spec: GeometrySpec, path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(dumps_spec(spec))
    return p


# --------------------------------------------------------------------------
# report encoding

def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return "%.16e" % x


def _dump(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_dump(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[" + ", ".join(_dump(v, indent, level + 1) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_report(report: IdentityReport | dict, extra: dict | None = None) -> str:
    d = report.to_dict() if isinstance(report, IdentityReport) else dict(report)
    if extra:
        d.update(extra)
    return _dump(d, 1, 0) + "\n"


def loads_report(text: str) -> dict:
    return json.loads(text)
