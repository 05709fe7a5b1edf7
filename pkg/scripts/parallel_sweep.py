"""Seed sweep for W3 examples with parallel torsion.

For every hit, report the square norm of nabla J, whether R' is a Kaehler
tensor, and the gap in the -1/8 scalar relation. Hits with Kaehler R' and
nonzero square norm are listed at the end.
"""

import argparse

from norden_kt.factory import GeneratorConfig, sweep


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--dim", type=int, default=6)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--require-kahler-rprime", action="store_true")
    ns = p.parse_args()
    cfg = GeneratorConfig(dim=ns.dim, require_parallel_torsion=True, require_kahler_rprime=ns.require_kahler_rprime)
    _, _, by_seed = sweep(cfg, range(1, ns.seeds + 1), jobs=ns.jobs)
    print(f"{'seed':>5} {'status':>9} {'null':>4} {'par_T':>9} {'sq':>12} {'kahler_R':>9} {'gap_-1/8':>9}")
    hits = []
    for seed, o in by_seed.items():
        if o.status != "found":
            print(f"{seed:>5} {o.status:>9} {o.null_dim!s:>4} {o.best_residual:>9.1e}")
            continue
        r, v, f = o.report.residuals, o.report.values, o.report.flags
        print(f"{seed:>5} {o.status:>9} {o.null_dim:>4} {r['parallel_torsion']:>9.1e} "
              f"{v['sq_norm_nablaJ']:>12.5f} {str(f['rprime_is_kahler']):>9} {r['eq_3_9']:>9.1e}")
        if f["rprime_is_kahler"] and abs(v["sq_norm_nablaJ"]) > 1e-8:
            hits.append(seed)
    print(f"\n{len(hits)} examples with parallel torsion, Kaehler R' and nonzero square norm: {hits}")


if __name__ == "__main__":
    main()
