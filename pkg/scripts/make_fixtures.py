"""Regenerate the committed fixture set under fixtures/.

Every file is produced through the CLI so the fixtures double as a
byte-for-byte determinism check of `generate` and `search`.
"""

import argparse
import shutil
from pathlib import Path

import numpy as np

from norden_kt.cli import main as cli
from norden_kt.cli import report_document
from norden_kt.curvature import full_identity_report
from norden_kt.fileformats import GeometrySpec, write_spec
from norden_kt.geometry import LieGeometry
from norden_kt.norden import flat_pair


def integer_example() -> GeometrySpec:
    """Integer brackets on R^6 with the model pair: parallel torsion,
    Kaehler R' and square norm -16, all exactly."""
    g, J = flat_pair(3)
    C = np.zeros((6, 6, 6))
    for k, i, j, v in [(2, 0, 1, 1.0), (2, 3, 4, -1.0), (5, 0, 4, -1.0), (5, 1, 3, 1.0)]:
        C[k, i, j] = v
        C[k, j, i] = -v
    return GeometrySpec("lie", 6, lie=LieGeometry(C, g, J),
                        metadata={"family": "nilpotent_w3", "center": [2, 5], "note": "integer brackets"})


def run(args: list[str]) -> int:
    code = cli(args)
    print(f"  -> exit {code}")
    return code


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default="fixtures")
    p.add_argument("--clean", action="store_true")
    ns = p.parse_args()
    out = Path(ns.out)
    if ns.clean and out.exists():
        shutil.rmtree(out)
    for dim in (2, 4, 6):
        run(["generate", "--family", "flat", "--dim", str(dim), "-o", str(out / "flat" / str(dim) / "0.spec")])
    run(["generate", "--family", "gl_orbit_chart", "--dim", "4", "--seed", "1",
         "-o", str(out / "gl_orbit_chart" / "4" / "1.spec")])
    run(["generate", "--family", "nilpotent_w3", "--dim", "6", "--seed", "7",
         "-o", str(out / "nilpotent_w3" / "6" / "7.spec")])
    # dim 4 has a trivial W3 null space for the default center: exhausted (exit 3), nothing written
    run(["generate", "--family", "nilpotent_w3", "--dim", "4", "--seed", "7", "-o", str(out / "unused.spec")])
    run(["search", "--dim", "6", "--seeds", "1..100", "--require-parallel-torsion", "-o", str(out)])
    run(["search", "--dim", "6", "--seeds", "1..100", "--require-parallel-torsion",
         "--require-kahler-rprime", "-o", str(out)])
    spec = integer_example()
    path = write_spec(spec, out / "nilpotent_w3_integer" / "6" / "0.spec")
    path.with_suffix(".report").write_text(report_document(full_identity_report(spec.jet()), 1e-9))
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
