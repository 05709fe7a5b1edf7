import functools
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

from norden_kt.factory import GeneratorConfig, filtered_search, gl_orbit_chart, nilpotent_w3  # noqa: E402

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"

ACCEPTANCE_LINES: list[str] = []


def record(line: str) -> None:
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@functools.lru_cache(maxsize=None)
def w3_population(count: int = 50, dim: int = 6):
    """Seeded W3-strict Lie examples; even seeds use a perturbed frame."""
    out = []
    for seed in range(1, count + 1):
        cfg = GeneratorConfig(seed=seed, dim=dim, frame_perturbation=0.3 if seed % 2 == 0 else 0.0)
        o = nilpotent_w3(seed, dim // 2, cfg)
        assert o.status == "found", (seed, o.message)
        out.append(o)
    return tuple(out)


@functools.lru_cache(maxsize=None)
def parallel_population(count: int = 20, dim: int = 6, kahler: bool = False):
    out = []
    for seed in range(1, count + 1):
        cfg = GeneratorConfig(seed=seed, dim=dim, require_parallel_torsion=True,
                              require_kahler_rprime=kahler,
                              frame_perturbation=0.3 if seed % 2 == 0 else 0.0)
        out.append(filtered_search(cfg))
    return tuple(out)


@functools.lru_cache(maxsize=None)
def chart_population(count: int = 50, amplitude: float = 0.1):
    return tuple(gl_orbit_chart(seed, 2, amplitude) for seed in range(1, count + 1))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
