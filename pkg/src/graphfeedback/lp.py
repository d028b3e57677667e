"""Max-min coverage LP over the simplex, solved by a dense tableau simplex.

The program ``max_{s in simplex} min_i sum_{j covers i} s_j`` is equivalent
to the fractional domination LP ``min 1'x  s.t.  C x >= 1, x >= 0`` (with
``C[i, j] = 1`` iff ``j`` covers ``i``) through ``s = x / sum(x)`` and
``value = 1 / sum(x)``.  We run primal simplex on its dual,
the packing LP ``max 1'y  s.t.  C'y <= 1, y >= 0``, whose all-slack basis is
feasible from the start.  The covering solution ``x`` is read off the
reduced costs of the slack columns at optimality.

Pricing is largest-coefficient; after a run of degenerate pivots the solver
falls back to Bland's lowest-index rule, which cannot cycle.  Leaving-row
ties always go to the lowest-index basic variable.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidParameter, SolverFailure
from .graphs import FeedbackGraph

PIVOT_TOL = 1e-9
COST_TOL = 1e-12
REFACTOR_EVERY = 100
PERTURBATION = 1e-9
PERTURBATION_SEED = 20140101
# consecutive degenerate pivots tolerated under largest-coefficient pricing
BLAND_AFTER = 8


@dataclass(frozen=True)
class MaxMinSolution:
    s: np.ndarray
    value: float
    certificate: np.ndarray
    pivots: int


def _refactor(a: np.ndarray, rhs: np.ndarray, c: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Rebuild the tableau for ``basis`` directly from the original data."""
    bmat = a[:, basis]
    rows = np.linalg.solve(bmat, np.column_stack([a, rhs]))
    duals = np.linalg.solve(bmat.T, c[basis])
    reduced = c - duals @ a
    return np.vstack([rows, np.append(reduced, -duals @ rhs)])


def _packing_simplex(obs: np.ndarray, max_pivots: int) -> tuple[np.ndarray, np.ndarray, int]:
    k = obs.shape[0]
    # constraints sum_{i in S_j} y_i + slack_j = b_j; the last tableau row holds reduced costs
    a = np.hstack([obs, np.eye(k)])
    c = np.concatenate([np.ones(k), np.zeros(k)])
    # fixed perturbation of the right-hand side breaks primal degeneracy
    rhs = 1.0 + PERTURBATION * np.random.default_rng(PERTURBATION_SEED).random(k)
    basis = np.arange(k, 2 * k)
    tab = _refactor(a, rhs, c, basis)
    pivots = 0
    stalled = 0
    while True:
        reduced = tab[k, :-1]
        candidates = np.flatnonzero(reduced > COST_TOL)
        if candidates.size == 0:
            break
        if pivots >= max_pivots:
            raise SolverFailure(
                f"simplex exceeded {max_pivots} pivots on k = {k} "
                f"(objective {-tab[k, -1]!r}, {candidates.size} improving columns)"
            )
        if stalled >= BLAND_AFTER:
            enter = int(candidates[0])
        else:
            enter = int(candidates[np.argmax(reduced[candidates])])
        col = tab[:k, enter]
        rows = np.flatnonzero(col > PIVOT_TOL)
        if rows.size == 0:
            # cannot happen: every column has a positive entry in its own row
            raise SolverFailure(f"packing LP reported unbounded in column {enter}")
        ratios = np.maximum(tab[rows, -1], 0.0) / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + COST_TOL]
        leave = int(ties[np.argmin(basis[ties])])
        stalled = stalled + 1 if best <= COST_TOL else 0
        basis[leave] = enter
        pivots += 1
        if pivots % REFACTOR_EVERY == 0:
            tab = _refactor(a, rhs, c, basis)
            continue
        tab[leave] /= tab[leave, enter]
        factors = tab[:, enter].copy()
        factors[leave] = 0.0
        tab -= np.outer(factors, tab[leave])
    final = _refactor(a, np.ones(k), c, basis)
    if np.any(final[k, :-1] > COST_TOL * k):
        # reduced costs do not depend on the right-hand side; drift here means lost accuracy
        raise SolverFailure(f"refactored basis is not optimal (max reduced cost {final[k, :-1].max()!r})")
    x = 0.0 - final[k, k : 2 * k]
    x[x < COST_TOL] = 0.0
    return x, final[:k, -1], pivots


def solve_maxmin_coverage(g: FeedbackGraph, tol: float = 1e-9) -> MaxMinSolution:
    """Solve ``max_{s in simplex} min_i coverage_i(s)`` for the feedback graph ``g``.

    ``coverage_i(s)`` sums ``s_j`` over the actions ``j`` whose feedback set
    contains ``i`` (``i`` itself included).  Identical graphs return the same
    cached, read-only solution.
    """
    if not (0 < tol <= 1e-3):
        raise InvalidParameter(f"tolerance must lie in (0, 1e-3], got {tol!r}")
    return _solve_cached(g, tol)


@lru_cache(maxsize=256)
def _solve_cached(g: FeedbackGraph, tol: float) -> MaxMinSolution:
    obs = np.asarray(g.observation_matrix)
    x, _, pivots = _packing_simplex(obs, max_pivots=50 * g.k + 1000)
    total = x.sum()
    if not total >= 1.0 - tol:
        raise SolverFailure(f"covering solution has total mass {total!r} < 1")
    s = x / total
    certificate = s @ obs
    value = 1.0 / total
    if abs(certificate.min() - value) > tol or abs(s.sum() - 1.0) > tol:
        raise SolverFailure(
            f"inconsistent optimum: value {value!r}, min coverage {certificate.min()!r}, mass {s.sum()!r}"
        )
    s.setflags(write=False)
    certificate.setflags(write=False)
    return MaxMinSolution(s=s, value=float(certificate.min()), certificate=certificate, pivots=pivots)
