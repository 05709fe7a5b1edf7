"""Fit the coefficient c in tau' - tau = c * |nabla J|^2 on generated W3 examples.

Prints one row per example and a summary; the coefficient is the same with
and without parallel torsion.
"""

import argparse

import numpy as np

from norden_kt.factory import GeneratorConfig, filtered_search, nilpotent_w3


def rows(count: int, dim: int, parallel: bool):
    for seed in range(1, count + 1):
        cfg = GeneratorConfig(seed=seed, dim=dim, require_parallel_torsion=parallel,
                              frame_perturbation=0.3 if seed % 2 == 0 else 0.0)
        o = filtered_search(cfg) if parallel else nilpotent_w3(seed, dim // 2, cfg)
        if o.status != "found":
            continue
        v, r = o.report.values, o.report.residuals
        yield seed, v["sq_norm_nablaJ"], v["tau_prime_minus_tau"], v["eq_4_6_rhs"], r["parallel_torsion"]


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--dim", type=int, default=6)
    ns = p.parse_args()
    for parallel in (False, True):
        print(f"dim {ns.dim}, parallel torsion required: {parallel}")
        print(f"{'seed':>5} {'sq':>12} {'dtau/sq':>16} {'rhs/sq':>16} {'par_T':>9}")
        ratios = []
        for seed, sq, dtau, rhs, par in rows(ns.count, ns.dim, parallel):
            ratios.append(dtau / sq)
            print(f"{seed:>5} {sq:>12.5f} {dtau / sq:>16.12f} {rhs / sq:>16.12f} {par:>9.1e}")
        if ratios:
            print(f"fitted c = {np.mean(ratios):.15f} (spread {np.ptp(ratios):.1e}, {len(ratios)} examples)\n")


if __name__ == "__main__":
    main()
