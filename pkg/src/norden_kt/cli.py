"""Command-line front end.

Exit codes: 0 pass, 1 assertion failure, 2 input error, 3 search exhausted.
The assertion policy (which residuals are asserted given the hypothesis
flags of a geometry) lives here; the math modules only compute.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from .curvature import IdentityReport, PipelineError, full_identity_report
from .factory import FAMILIES, GeneratorConfig, flat_kahler, gl_orbit_chart, nilpotent_w3, sweep
from .fileformats import SpecFormatError, dumps_report, dumps_spec, read_spec
from .geometry import GeometryError
from .tensor_algebra import TensorError

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_EXHAUSTED = 0, 1, 2, 3
TOL_ENV = "NORDEN_KT_TOL"
DEFAULT_ASSERT_TOL = 1e-9
SQ_NORM_TOL = 1e-8

W3_KEYS = ("w3_cyclic_1_2", "skew_2_2", "q_half_t_2_3", "natural_1_12", "natural_1_13",
           "norm_1_3_vs_1_4", "mema_tau_identity")
PARALLEL_KEYS = ("eq_3_6", "eq_3_7", "eq_3_8", "eq_3_9", "eq_4_1")
KAHLER_PRIME_KEYS = ("eq_4_3", "eq_4_4", "eq_4_5", "eq_4_6")


@dataclass(frozen=True)
class RunConfig:
    command: str
    inputs: tuple[str, ...] = ()
    output: str | None = None
    tol: float = DEFAULT_ASSERT_TOL
    seed: int = 0
    seeds: tuple[int, ...] = ()
    dim: int = 4
    family: str = "nilpotent_w3"
    require_parallel_torsion: bool = False
    require_kahler_rprime: bool = False
    output_format: str = "text"
    jobs: int = 1
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class Assertion:
    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.value < self.tol


def asserted(report: IdentityReport, tol: float = DEFAULT_ASSERT_TOL) -> list[Assertion]:
    """Residuals asserted for this geometry, chosen from its hypothesis flags."""
    r, f = report.residuals, report.flags
    base = min(tol, 1e-10) if report.mode == "lie" else 1e-6
    out = [Assertion("eq_3_1", r["eq_3_1"], base),
           Assertion("curvature_like_R", r["curvature_like_R"], base)]
    quasi_kahler = r["w3_cyclic_1_2"] < report.tolerances["flag"]
    if not quasi_kahler:
        return out
    out += [Assertion(k, r[k], tol) for k in W3_KEYS]
    if f["has_parallel_torsion"]:
        out += [Assertion(k, r[k], tol) for k in PARALLEL_KEYS]
        verdict = report.diagnostics.get("bianchi_defect_iff_kahler_rprime", "consistent")
        out.append(Assertion("theorem_4_1_biconditional", 0.0 if verdict != "violated" else 1.0, 0.5))
        if f["rprime_is_kahler"]:
            out += [Assertion(k, r[k], tol) for k in KAHLER_PRIME_KEYS]
            out.append(Assertion("sq_norm_nablaJ", abs(report.values["sq_norm_nablaJ"]), SQ_NORM_TOL))
    return out


def evaluate(report: IdentityReport, tol: float) -> dict:
    checks = asserted(report, tol)
    failed = [c for c in checks if not c.passed]
    worst = max(checks, key=lambda c: c.value / c.tol)
    return {
        "passed": not failed,
        "asserted": {c.name: c.value for c in checks},
        "asserted_tolerance": {c.name: c.tol for c in checks},
        "failed": [c.name for c in failed],
        "worst": worst.name,
    }


def _fmt(x: float) -> str:
    return "%.16e" % x


def render_text(report: IdentityReport, verdict: dict, label: str = "") -> str:
    lines = []
    if label:
        lines.append(f"geometry: {label}")
    lines.append(f"mode: {report.mode}  dim: {report.dim}")
    lines.append("flags: " + "  ".join(f"{k}={'true' if v else 'false'}" for k, v in report.flags.items()))
    lines.append("residuals:")
    for k, v in report.residuals.items():
        mark = ""
        if k in verdict["asserted"]:
            mark = "  [asserted, ok]" if k not in verdict["failed"] else "  [asserted, FAIL]"
        lines.append(f"  {k:<22} {_fmt(v)}{mark}")
    lines.append("values:")
    for k, v in report.values.items():
        lines.append(f"  {k:<26} {_fmt(v)}")
    lines.append("diagnostics:")
    for k, v in report.diagnostics.items():
        lines.append(f"  {k:<34} {v}")
    lines.append("tolerances: " + "  ".join(f"{k}={_fmt(v)}" for k, v in report.tolerances.items()))
    if verdict["passed"]:
        lines.append("result: PASS")
    else:
        w = verdict["worst"]
        lines.append(f"result: FAIL  worst={w} residual={_fmt(verdict['asserted'][w])}"
                     f" failed={','.join(verdict['failed'])}")
    return "\n".join(lines) + "\n"


def report_document(report: IdentityReport, tol: float) -> str:
    return dumps_report(report, extra={"assertions": evaluate(report, tol)})


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _check_path(path: str, tol: float) -> tuple[IdentityReport, dict]:
    spec = read_spec(path)
    report = full_identity_report(spec.jet())
    return report, evaluate(report, tol)


INPUT_ERRORS = (SpecFormatError, GeometryError, TensorError, PipelineError, OSError)


def cmd_check(cfg: RunConfig) -> int:
    path = cfg.inputs[0]
    try:
        report, verdict = _check_path(path, cfg.tol)
    except INPUT_ERRORS as exc:
        _err(f"{path}: {exc}")
        return EXIT_INPUT
    text = report_document(report, cfg.tol) if cfg.output_format == "json" else render_text(report, verdict, path)
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if verdict["passed"] else EXIT_FAIL


def _write_pair(spec, report: IdentityReport, path: Path, tol: float) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_spec(spec))
    path.with_suffix(".report").write_text(report_document(report, tol))


def cmd_generate(cfg: RunConfig) -> int:
    if cfg.output is None:
        _err("generate needs -o PATH")
        return EXIT_INPUT
    amp = cfg.extra.get("amplitude")
    if cfg.family == "flat":
        spec = flat_kahler(cfg.dim // 2)
    elif cfg.family == "gl_orbit_chart":
        spec = gl_orbit_chart(cfg.seed, cfg.dim // 2, 1e-2 if amp is None else amp)
    else:
        gc = GeneratorConfig(seed=cfg.seed, dim=cfg.dim, amplitude=1.0 if amp is None else amp,
                             **_factory_options(cfg))
        out = nilpotent_w3(cfg.seed, cfg.dim // 2, gc)
        print(f"attempts_used: {out.attempts_used}  status: {out.status}")
        if out.status != "found":
            print(f"exhausted: {out.message}")
            return EXIT_EXHAUSTED
        spec = out.spec
    report = full_identity_report(spec.jet())
    _write_pair(spec, report, Path(cfg.output), cfg.tol)
    print(f"wrote {cfg.output}")
    return EXIT_OK


def _factory_options(cfg: RunConfig) -> dict:
    opts = {}
    for k in ("max_attempts", "center", "frame_perturbation"):
        if cfg.extra.get(k) is not None:
            opts[k] = cfg.extra[k]
    return opts


def family_dirname(cfg: RunConfig) -> str:
    name = cfg.family
    if cfg.require_parallel_torsion:
        name += "_parallel"
    if cfg.require_kahler_rprime:
        name += "_kahler"
    return name


def cmd_search(cfg: RunConfig) -> int:
    if cfg.family != "nilpotent_w3":
        _err("search supports --family nilpotent_w3 only")
        return EXIT_INPUT
    if cfg.output is None:
        _err("search needs -o DIR")
        return EXIT_INPUT
    amp = cfg.extra.get("amplitude")
    gc = GeneratorConfig(seed=cfg.seeds[0], dim=cfg.dim, amplitude=1.0 if amp is None else amp,
                         require_parallel_torsion=cfg.require_parallel_torsion,
                         require_kahler_rprime=cfg.require_kahler_rprime, **_factory_options(cfg))
    seed, outcome, by_seed = sweep(gc, cfg.seeds, jobs=cfg.jobs)
    for s in cfg.seeds:
        o = by_seed[s]
        print(f"seed {s}: status={o.status} attempts_used={o.attempts_used} "
              f"best_residual={_fmt(o.best_residual)} null_dim={o.null_dim}")
    if seed is None:
        trace = [by_seed[s].best_residual for s in cfg.seeds]
        print("status: exhausted")
        print("best-residual trace: " + " ".join(_fmt(t) for t in trace))
        msgs = sorted({by_seed[s].message for s in cfg.seeds if by_seed[s].message})
        for m in msgs:
            print(f"  {m}")
        return EXIT_EXHAUSTED
    path = Path(cfg.output) / family_dirname(cfg) / str(cfg.dim) / f"{seed}.spec"
    _write_pair(outcome.spec, outcome.report, path, cfg.tol)
    print(f"status: found  seed: {seed}  attempts_used: {outcome.attempts_used}")
    print(f"wrote {path}")
    return EXIT_OK


def _suite_row(path: str, tol: float):
    t0 = time.perf_counter()
    try:
        report, verdict = _check_path(path, tol)
    except INPUT_ERRORS as exc:
        return path, None, None, str(exc), time.perf_counter() - t0
    stale = ""
    sibling = Path(path).with_suffix(".report")
    if sibling.exists() and sibling.read_text() != report_document(report, tol):
        stale = "report differs from committed file"
    return path, report, verdict, stale, time.perf_counter() - t0


def cmd_suite(cfg: RunConfig) -> int:
    root = Path(cfg.inputs[0])
    if not root.is_dir():
        _err(f"{root}: not a directory")
        return EXIT_INPUT
    paths = sorted(str(p) for p in root.rglob("*.spec"))
    if not paths:
        print(f"warning: no fixtures under {root}")
        print("fixture | w3 | parallel | kahler_prime | worst | status")
        return EXIT_OK
    t0 = time.perf_counter()
    if cfg.jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
            rows = list(ex.map(_suite_row, paths, [cfg.tol] * len(paths)))
    else:
        rows = [_suite_row(p, cfg.tol) for p in paths]
    print("fixture | w3 | parallel | kahler_prime | worst | status")
    ok = True
    for path, report, verdict, note, _ in rows:
        rel = os.path.relpath(path, root)
        if report is None:
            ok = False
            print(f"{rel} | - | - | - | - | ERROR ({note})")
            continue
        f = report.flags
        w = verdict["worst"]
        status = "pass" if verdict["passed"] else "FAIL (" + ",".join(verdict["failed"]) + ")"
        ok &= verdict["passed"]
        print(f"{rel} | {int(f['is_w3_strict'])} | {int(f['has_parallel_torsion'])} | "
              f"{int(f['rprime_is_kahler'])} | {w}={verdict['asserted'][w]:.3e} | {status}")
        if note:
            print(f"  warning: {note}")
    print(f"{len(rows)} fixtures, {sum(1 for r in rows if r[2] and r[2]['passed'])} passed, "
          f"{time.perf_counter() - t0:.2f} s")
    return EXIT_OK if ok else EXIT_FAIL


# --------------------------------------------------------------------------
# argument parsing

def parse_seeds(text: str) -> tuple[int, ...]:
    if ".." in text:
        a, b = text.split("..", 1)
        lo, hi = int(a), int(b)
        if hi < lo:
            raise ValueError(f"empty seed range {text}")
        return tuple(range(lo, hi + 1))
    return tuple(int(s) for s in text.split(","))


def _default_tol() -> float:
    v = os.environ.get(TOL_ENV)
    return float(v) if v else DEFAULT_ASSERT_TOL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="norden-kt", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def tol_arg(sp):
        sp.add_argument("--tol", type=float, default=None,
                        help=f"assertion tolerance (default 1e-9, or ${TOL_ENV})")

    c = sub.add_parser("check", help="run the identity report on a spec file")
    c.add_argument("spec")
    tol_arg(c)
    c.add_argument("--format", choices=("text", "json"), default="text")
    c.add_argument("-o", "--output")

    def factory_args(sp):
        sp.add_argument("--family", choices=FAMILIES, default="nilpotent_w3")
        sp.add_argument("--dim", type=int, default=4)
        sp.add_argument("--amplitude", type=float)
        sp.add_argument("--max-attempts", type=int)
        sp.add_argument("--center", type=lambda s: tuple(int(v) for v in s.split(",")))
        sp.add_argument("--frame-perturbation", type=float)

    g = sub.add_parser("generate", help="write one generated spec and its report")
    factory_args(g)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output")
    tol_arg(g)

    s = sub.add_parser("search", help="seeded filtered search")
    factory_args(s)
    s.add_argument("--seeds", type=parse_seeds, default=(1,))
    s.add_argument("--require-parallel-torsion", action="store_true")
    s.add_argument("--require-kahler-rprime", action="store_true")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("-o", "--output")
    tol_arg(s)

    u = sub.add_parser("suite", help="check every fixture under a directory")
    u.add_argument("dir")
    u.add_argument("--jobs", type=int, default=1)
    tol_arg(u)
    return p


def run_config_from_args(ns: argparse.Namespace) -> RunConfig:
    tol = ns.tol if ns.tol is not None else _default_tol()
    extra = {k: getattr(ns, k, None) for k in ("amplitude", "max_attempts", "center", "frame_perturbation")}
    inputs = tuple(x for x in (getattr(ns, "spec", None), getattr(ns, "dir", None)) if x)
    return RunConfig(
        command=ns.command, inputs=inputs, output=getattr(ns, "output", None), tol=tol,
        seed=getattr(ns, "seed", 0), seeds=getattr(ns, "seeds", ()), dim=getattr(ns, "dim", 4),
        family=getattr(ns, "family", "nilpotent_w3"),
        require_parallel_torsion=getattr(ns, "require_parallel_torsion", False),
        require_kahler_rprime=getattr(ns, "require_kahler_rprime", False),
        output_format=getattr(ns, "format", "text"), jobs=getattr(ns, "jobs", 1), extra=extra,
    )


COMMANDS = {"check": cmd_check, "generate": cmd_generate, "search": cmd_search, "suite": cmd_suite}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        cfg = run_config_from_args(ns)
        return COMMANDS[cfg.command](cfg)
    except (ValueError, RuntimeError) as exc:
        _err(str(exc))
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
