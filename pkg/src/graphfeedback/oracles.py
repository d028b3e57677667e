"""Brute-force reference computations for small graphs.

These deliberately share nothing with the fast paths in :mod:`graphs`,
:mod:`estimators` and :mod:`lp` beyond reading a boolean adjacency matrix
(``adj[i, j]`` true iff playing ``i`` reveals ``j``).  They are slow and only
meant for the instance sizes the checks use.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

__all__ = [
    "oracle_alpha",
    "oracle_domination",
    "oracle_mas",
    "oracle_observation_probs",
    "oracle_exposure",
    "oracle_lp_value",
]


def _adj(g) -> np.ndarray:
    adj = np.array(getattr(g, "adjacency", g), dtype=bool)
    np.fill_diagonal(adj, False)
    return adj


def oracle_alpha(g) -> int:
    """Independence number of the undirected skeleton by vertex branching."""
    adj = _adj(g)
    und = adj | adj.T
    k = len(und)
    nb = [sum(1 << int(j) for j in np.flatnonzero(und[i])) for i in range(k)]

    def rec(alive: int) -> int:
        if not alive:
            return 0
        best_v, best_deg = -1, -1
        rest = alive
        while rest:
            v = (rest & -rest).bit_length() - 1
            rest &= rest - 1
            deg = bin(nb[v] & alive).count("1")
            if deg > best_deg:
                best_v, best_deg = v, deg
        if best_deg == 0:
            return bin(alive).count("1")
        without = alive & ~(1 << best_v)
        return max(rec(without), 1 + rec(without & ~nb[best_v]))

    return rec((1 << k) - 1)


def oracle_domination(g) -> int:
    """Domination number by branch and bound on the least-covered node."""
    adj = _adj(g)
    k = len(adj)
    closed = [(1 << i) | sum(1 << int(j) for j in np.flatnonzero(adj[i])) for i in range(k)]
    coverers = [[i for i in range(k) if closed[i] >> u & 1] for u in range(k)]
    best = k

    def rec(uncovered: int, size: int) -> None:
        nonlocal best
        if not uncovered:
            best = min(best, size)
            return
        if size + 1 >= best:
            return
        u = min((v for v in range(k) if uncovered >> v & 1), key=lambda v: len(coverers[v]))
        for i in coverers[u]:
            rec(uncovered & ~closed[i], size + 1)

    rec((1 << k) - 1, 0)
    return best


def oracle_mas(g) -> int:
    """Largest induced acyclic subgraph: a subset is acyclic iff its adjacency is nilpotent."""
    adj = _adj(g).astype(np.float64)
    k = len(adj)
    if k > 16:
        raise ValueError("mas oracle enumerates all subsets; keep k <= 16")
    codes = np.arange(1 << k)
    members = ((codes[:, None] >> np.arange(k)) & 1).astype(np.float64)
    sub = adj[None, :, :] * members[:, :, None] * members[:, None, :]
    for _ in range(max(1, math.ceil(math.log2(max(k, 2))))):
        sub = np.minimum(sub @ sub, 1.0)
    acyclic = ~sub.any(axis=(1, 2))
    return int(members[acyclic].sum(axis=1).max())


def oracle_observation_probs(p, g) -> np.ndarray:
    adj = _adj(g)
    p = np.asarray(p, dtype=np.float64)
    k = len(adj)
    q = p.copy()
    for j in range(k):
        for i in range(k):
            if adj[j, i]:
                q[i] += p[j]
    return q


def oracle_exposure(p, g) -> float:
    p = np.asarray(p, dtype=np.float64)
    q = oracle_observation_probs(p, g)
    return math.fsum(p[i] / q[i] for i in range(len(p)) if p[i] > 0)


def oracle_lp_value(g, det_tol: float = 1e-9, feas_tol: float = 1e-9) -> float:
    """Max-min coverage value by enumerating all basic solutions of the epigraph LP.

    Variables ``(s_0 .. s_{k-1}, t)``; maximise ``t`` subject to
    ``coverage_i(s) - t >= 0``, ``s >= 0`` and ``sum(s) = 1``.  Every vertex
    makes ``k`` of the ``2k`` inequalities tight.
    """
    adj = _adj(g)
    k = len(adj)
    cover = adj.T.astype(np.float64) + np.eye(k)  # cover[i, j] = 1 iff j reveals i
    ineq = np.vstack([np.hstack([cover, -np.ones((k, 1))]), np.hstack([np.eye(k), np.zeros((k, 1))])])
    eq = np.append(np.ones(k), 0.0)
    rhs = np.zeros(k + 1)
    rhs[0] = 1.0
    best = -math.inf
    combos = np.array(list(itertools.combinations(range(2 * k), k)), dtype=np.int64)
    for start in range(0, len(combos), 20000):
        idx = combos[start : start + 20000]
        mats = np.concatenate([np.broadcast_to(eq, (len(idx), 1, k + 1)), ineq[idx]], axis=1)
        good = np.abs(np.linalg.det(mats)) > det_tol
        if not good.any():
            continue
        sols = np.linalg.solve(mats[good], np.broadcast_to(rhs, (int(good.sum()), k + 1))[..., None])[..., 0]
        feasible = np.all(sols @ ineq.T >= -feas_tol, axis=1)
        if feasible.any():
            best = max(best, float(sols[feasible, k].max()))
    return best
