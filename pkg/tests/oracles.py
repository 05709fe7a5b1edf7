"""Independent brute-force oracles: explicit index loops over nested lists.

Written against the textbook formulas, not the package code, and generic in
the scalar type so that the same loops run on ``fractions.Fraction`` for
exact checks.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import product


def zeros(d, rank):
    if rank == 0:
        return 0
    return [zeros(d, rank - 1) for _ in range(d)]


def to_list(a):
    return a.tolist() if hasattr(a, "tolist") else a


def inverse(m):
    """Gauss-Jordan inverse; exact on Fractions."""
    d = len(m)
    a = [[Fraction(x) if not isinstance(x, float) else x for x in row] + [int(i == j) for j in range(d)]
         for i, row in enumerate(m)]
    for c in range(d):
        p = next(r for r in range(c, d) if a[r][c] != 0)
        a[c], a[p] = a[p], a[c]
        piv = a[c][c]
        a[c] = [x / piv for x in a[c]]
        for r in range(d):
            if r != c and a[r][c] != 0:
                f = a[r][c]
                a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return [row[d:] for row in a]


def contract_inverse_metric(t, gi, a, b):
    """Contract slots a<b of a rank-4 array with g^{..}: loop oracle."""
    d = len(gi)
    out = zeros(d, 2)
    keep = [s for s in range(4) if s not in (a, b)]
    for idx in product(range(d), repeat=4):
        o = [idx[s] for s in keep]
        out[o[0]][o[1]] += gi[idx[a]][idx[b]] * t[idx[0]][idx[1]][idx[2]][idx[3]]
    return out


def koszul(C, g):
    """Levi-Civita coefficients G[k][i][j] of an invariant frame."""
    d = len(g)
    gi = inverse(g)
    c = zeros(d, 3)  # c[i][j][l] = g([e_i,e_j], e_l)
    for i, j, l, s in product(range(d), repeat=4):
        c[i][j][l] += C[s][i][j] * g[s][l]
    G = zeros(d, 3)
    for k, i, j, l in product(range(d), repeat=4):
        G[k][i][j] += gi[k][l] * (c[i][j][l] - c[i][l][j] - c[j][l][i]) / 2
    return G


def nabla_J(G, J):
    """(nabla_i J)^k_j for constant components."""
    d = len(J)
    out = zeros(d, 3)
    for k, i, j, s in product(range(d), repeat=4):
        out[k][i][j] += G[k][i][s] * J[s][j] - G[s][i][j] * J[k][s]
    return out


def kt_Q(nJ, J):
    d = len(J)
    Q = zeros(d, 3)
    for k, i, j, s in product(range(d), repeat=4):
        Q[k][i][j] += (nJ[k][i][s] * J[s][j] - J[s][i] * nJ[k][s][j] - 2 * nJ[k][j][s] * J[s][i]) / 4
    return Q


def lower(Tm, g):
    d = len(g)
    out = zeros(d, 3)
    for i, j, k, s in product(range(d), repeat=4):
        out[i][j][k] += Tm[s][i][j] * g[s][k]
    return out


def riemann(G, C, g):
    """R[i][j][k][l] = g(R(e_i,e_j)e_k, e_l), constant coefficients."""
    d = len(g)
    Rm = zeros(d, 4)
    for m, i, j, k in product(range(d), repeat=4):
        v = 0
        for s in range(d):
            v += G[m][i][s] * G[s][j][k] - G[m][j][s] * G[s][i][k] - C[s][i][j] * G[m][s][k]
        Rm[m][i][j][k] = v
    R = zeros(d, 4)
    for i, j, k, l in product(range(d), repeat=4):
        R[i][j][k][l] = sum(g[l][m] * Rm[m][i][j][k] for m in range(d))
    return R


def covariant_rank3(G, S):
    """(nabla_i S)_jkl for a constant (0,3) field."""
    d = len(G)
    out = zeros(d, 4)
    for i, j, k, l in product(range(d), repeat=4):
        v = 0
        for s in range(d):
            v -= G[s][i][j] * S[s][k][l] + G[s][i][k] * S[j][s][l] + G[s][i][l] * S[j][k][s]
        out[i][j][k][l] = v
    return out


def square_norm(nJ, g):
    d = len(g)
    gi = inverse(g)
    p = 0
    for i, j, k, s in product(range(d), repeat=4):
        if gi[i][j] == 0 or gi[k][s] == 0:
            continue
        for t, u in product(range(d), repeat=2):
            p += gi[i][j] * gi[k][s] * nJ[t][i][k] * g[t][u] * nJ[u][j][s]
    return p


def scalar(R, g):
    gi = inverse(g)
    d = len(g)
    return sum(gi[i][j] * gi[k][s] * R[i][k][s][j] for i, j, k, s in product(range(d), repeat=4))


def cyclic(t):
    d = len(t)
    out = zeros(d, 3)
    for a, b, c in product(range(d), repeat=3):
        out[a][b][c] = t[a][b][c] + t[b][c][a] + t[c][a][b]
    return out


def bianchi_defect(Q, g):
    """Cyclic sum over the first three slots of g(Q(e_i,e_j), Q(e_k,e_l))."""
    d = len(g)
    qq = zeros(d, 4)
    for i, j, k, l in product(range(d), repeat=4):
        qq[i][j][k][l] = sum(Q[t][i][j] * g[t][u] * Q[u][k][l] for t in range(d) for u in range(d))
    out = zeros(d, 4)
    for i, j, k, l in product(range(d), repeat=4):
        out[i][j][k][l] = qq[i][j][k][l] + qq[j][k][i][l] + qq[k][i][j][l]
    return out


def max_abs_nested(a):
    if isinstance(a, list):
        return max((max_abs_nested(x) for x in a), default=0)
    return abs(a)


def full_exact(C, g, J, number=Fraction):
    """Everything the exact fixture pins, by loops over ``number`` entries
    (Fractions by default, ``float`` for a plain loop oracle)."""
    C = [[[number(x) for x in r] for r in m] for m in to_list(C)]
    g = [[number(x) for x in r] for r in to_list(g)]
    J = [[number(x) for x in r] for r in to_list(J)]
    d = len(g)
    G = koszul(C, g)
    nJ = nabla_J(G, J)
    Q = kt_Q(nJ, J)
    Ql = lower(Q, g)
    T = [[[Ql[i][j][k] - Ql[j][i][k] for k in range(d)] for j in range(d)] for i in range(d)]
    Gp = [[[G[k][i][j] + Q[k][i][j] for j in range(d)] for i in range(d)] for k in range(d)]
    R = riemann(G, C, g)
    Rp = riemann(Gp, C, g)
    F = [[[sum(g[k][s] * nJ[s][i][j] for s in range(d)) for k in range(d)] for j in range(d)]
         for i in range(d)]
    return {
        "G": G, "nablaJ": nJ, "Q": Q, "Q_low": Ql, "T": T, "R": R, "Rprime": Rp, "F": F,
        "parallel": covariant_rank3(Gp, T),
        "sq": square_norm(nJ, g), "tau": scalar(R, g), "tau_prime": scalar(Rp, g),
        "w3": cyclic(F), "defect": bianchi_defect(Q, g),
    }
