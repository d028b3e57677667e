"""Randomised checks of the combinatorial inequalities behind the regret bounds.

Each suite draws small graphs and tests one inequality, with graph
invariants (independence number, domination number, mas, LP value) taken from
the brute-force :mod:`oracles`.  Graphs come from a fixed ensemble.  Most
trials are random digraphs with arc probability drawn from ``{0.1, ..., 0.9}``.
Every tenth trial is a structured family: clique, empty, total order, star,
undirected cycle or directed cycle.  Trial ``n`` of a suite run with seed
``s`` draws from its own generator ``make_rng(derive_seed(s, n))``, so any
single trial can be reproduced on its own.

Failures keep the offending graph in the graph text format.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidParameter
from .estimators import exposure, observation_probs
from .graphs import FeedbackGraph, format_graph, greedy_dominating_set, independence_number, mas_size
from .lp import solve_maxmin_coverage
from .oracles import oracle_alpha, oracle_domination, oracle_lp_value, oracle_mas
from .policies import ElpP, elpp_beta
from .seeding import derive_seed, make_rng

__all__ = [
    "TOL",
    "FAMILIES",
    "Failure",
    "CheckReport",
    "ensemble_graph",
    "structured_graph",
    "check_exposure_vs_mas",
    "check_indegree_sum",
    "check_greedy_cover",
    "check_weighted_bound",
    "check_elp_inequalities",
    "check_lp_optimality",
    "check_er_expectation",
    "er_target",
    "SUITES",
    "run_suite",
]

TOL = 1e-9
DENSITIES = tuple(round(0.1 * i, 1) for i in range(1, 10))
FAMILIES = ("clique", "empty", "total_order", "star", "cycle", "directed_cycle")


@dataclass
class Failure:
    trial: int
    message: str
    graph: str
    data: dict = field(default_factory=dict)


@dataclass
class CheckReport:
    """Outcome of one suite.  ``max_slack``/``min_slack`` range over ``bound - quantity``."""

    suite: str
    trials: int
    failures: list[Failure] = field(default_factory=list)
    max_slack: float = -math.inf
    min_slack: float = math.inf
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures

    def record(self, trial: int, g: FeedbackGraph | None, bound: float, value: float, what: str, **data) -> None:
        slack = bound - value
        self.max_slack = max(self.max_slack, slack)
        self.min_slack = min(self.min_slack, slack)
        if not slack >= -TOL:
            self.fail(trial, g, f"{what}: {value!r} exceeds bound {bound!r}", **data)

    def fail(self, trial: int, g: FeedbackGraph | None, message: str, **data) -> None:
        self.failures.append(Failure(trial, message, format_graph(g) if g is not None else "", data))

    def summary(self) -> str:
        status = "PASS" if self.passed else f"FAIL ({len(self.failures)} failures)"
        return f"{self.suite}: {status}; trials={self.trials} slack in [{self.min_slack:.6g}, {self.max_slack:.6g}]"


# -- instance ensemble ------------------------------------------------------


def structured_graph(family: str, k: int) -> FeedbackGraph:
    adj = np.zeros((k, k), dtype=bool)
    if family == "clique":
        adj[:] = True
    elif family == "total_order":
        adj = np.tril(np.ones((k, k), dtype=bool), -1)
    elif family == "star":
        adj[0, 1:] = True
    elif family in ("cycle", "directed_cycle"):
        if k > 1:
            nxt = (np.arange(k) + 1) % k
            adj[np.arange(k), nxt] = True
            if family == "cycle":
                adj[nxt, np.arange(k)] = True
    elif family != "empty":
        raise InvalidParameter(f"unknown family {family!r}")
    return FeedbackGraph.from_adjacency(adj)


def ensemble_graph(trial: int, max_k: int, rng: np.random.Generator) -> FeedbackGraph:
    k = int(rng.integers(1, max_k + 1))
    if trial % 10 == 0:
        return structured_graph(FAMILIES[(trial // 10) % len(FAMILIES)], k)
    r = DENSITIES[int(rng.integers(len(DENSITIES)))]
    return FeedbackGraph.from_adjacency(rng.random((k, k)) < r)


def _positive_distribution(k: int, rng: np.random.Generator) -> np.ndarray:
    # mix flat and very skewed draws so both regimes are exercised
    scale = rng.choice([0.2, 1.0, 5.0])
    w = np.exp(scale * rng.standard_normal(k))
    return w / w.sum()


def _trials(seed: int, trials: int):
    for n in range(trials):
        yield n, make_rng(derive_seed(seed, n))


def _check_cap(max_k: int, cap: int, suite: str) -> None:
    if not (1 <= max_k <= cap):
        raise InvalidParameter(f"{suite} needs 1 <= max_k <= {cap}, got {max_k}")


# -- suites -----------------------------------------------------------------


def check_exposure_vs_mas(trials: int, max_k: int = 12, seed: int = 0) -> CheckReport:
    """``sum_i p_i / q_i <= mas(G)`` for random positive ``p``."""
    _check_cap(max_k, 12, "exposure")
    rep = CheckReport("exposure", trials)
    for n, rng in _trials(seed, trials):
        g = ensemble_graph(n, max_k, rng)
        p = _positive_distribution(g.k, rng)
        mas = oracle_mas(g)
        if mas_size(g, "exact") != mas:
            rep.fail(n, g, f"mas_size gives {mas_size(g, 'exact')}, oracle {mas}")
        rep.record(n, g, mas, exposure(p, g), "exposure", p=p.tolist())
    return rep


def check_indegree_sum(trials: int, max_k: int = 16, seed: int = 0) -> CheckReport:
    """``sum_i 1 / (1 + indeg_i) <= 2 alpha ln(1 + k / alpha)``."""
    _check_cap(max_k, 16, "indegree")
    rep = CheckReport("indegree", trials)
    for n, rng in _trials(seed, trials):
        g = ensemble_graph(n, max_k, rng)
        alpha = oracle_alpha(g)
        if independence_number(g) != alpha:
            rep.fail(n, g, f"independence_number gives {independence_number(g)}, oracle {alpha}")
        indeg = g.adjacency.sum(axis=0)
        value = math.fsum(1.0 / (1.0 + d) for d in indeg)
        rep.record(n, g, 2 * alpha * math.log(1 + g.k / alpha), value, "indegree sum")
    return rep


def check_greedy_cover(trials: int, max_k: int = 16, seed: int = 0) -> CheckReport:
    """Greedy set cover dominates and ``|R| <= min(gamma (1 + ln k), ceil(2 alpha ln k) + 1)``."""
    _check_cap(max_k, 16, "cover")
    rep = CheckReport("cover", trials)
    for n, rng in _trials(seed, trials):
        g = ensemble_graph(n, max_k, rng)
        dom = greedy_dominating_set(g)
        covered = np.zeros(g.k, dtype=bool)
        covered[dom] = True
        covered |= g.adjacency[dom].any(axis=0)
        if not covered.all():
            rep.fail(n, g, f"greedy set {dom} misses {np.flatnonzero(~covered).tolist()}")
        gamma, alpha = oracle_domination(g), oracle_alpha(g)
        lnk = math.log(g.k)
        bound = min(gamma * (1 + lnk), math.ceil(2 * alpha * lnk) + 1)
        rep.record(n, g, bound, len(dom), "greedy dominating set size", dominating_set=dom)
    return rep


def _weighted_bound(k: int, alpha: int, r: int, beta: float) -> float:
    return 2 * alpha * math.log(1 + (math.ceil(k * k / (r * beta)) + k) / alpha) + 2 * r


def check_weighted_bound(trials: int, max_k: int = 12, seed: int = 0) -> CheckReport:
    """Exposure bound for distributions putting at least ``beta`` on a dominating set."""
    _check_cap(max_k, 12, "weighted")
    rep = CheckReport("weighted", trials)
    for n, rng in _trials(seed, trials):
        g = ensemble_graph(n, max_k, rng)
        dom = greedy_dominating_set(g)
        r = len(dom)
        beta = (1.0 - rng.random()) / (2 * r)
        p = (1.0 - r * beta) * rng.dirichlet(np.ones(g.k))
        p[dom] += beta
        p /= p.sum()
        if p[dom].min() < beta * (1 - 1e-12):
            # renormalisation cannot shrink these entries meaningfully; guard anyway
            rep.fail(n, g, "constructed p violates p_i >= beta on R", p=p.tolist(), beta=beta)
        bound = _weighted_bound(g.k, oracle_alpha(g), r, beta)
        rep.record(n, g, bound, exposure(p, g), "weighted exposure", p=p.tolist(), beta=beta)
    return rep


def _elp_items(p: np.ndarray, g: FeedbackGraph) -> list[float]:
    closed = g.adjacency | np.eye(g.k, dtype=bool)  # closed[i, j]: i reveals j
    q = np.array([math.fsum(p[closed[:, j]]) for j in range(g.k)])
    item1 = math.fsum(p / q**2)
    inner = [closed[i] for i in range(g.k)]
    item2 = math.fsum(p[i] * math.fsum(p[m] / q[m]) for i, m in enumerate(inner))
    item3 = math.fsum(p[i] * math.fsum(p[m] / q[m] ** 2) for i, m in enumerate(inner))
    item4 = math.fsum(p[i] * math.fsum(p[m] / q[m]) ** 2 for i, m in enumerate(inner))
    item5 = math.fsum(p[i] * math.fsum(p[m] / q[m] ** 2) ** 2 for i, m in enumerate(inner))
    return [item1, item2, item3, item4, item5]


def check_elp_inequalities(trials: int, max_k: int = 12, seed: int = 0) -> CheckReport:
    """The five moment inequalities for the distributions ELP.P plays.

    Each trial sets random weights, takes one ELP.P action on a random graph
    and checks the items against the exact mas of that graph.
    """
    _check_cap(max_k, 12, "elp")
    rep = CheckReport("elp", trials)
    for n, rng in _trials(seed, trials):
        g = ensemble_graph(n, max_k, rng)
        k = g.k
        delta = float(rng.uniform(0.01, 0.99))
        eta_cap = 1.0 / (3 * k)
        if k > 1:
            eta_cap = min(eta_cap, 0.25 / (2 * math.sqrt(math.log(5 * k / delta) / math.log(k))))
        eta = eta_cap * (1.0 - rng.random())
        if elpp_beta(k, delta, eta) > 0.25:
            eta = eta_cap * 0.5
        policy = ElpP(k, delta, eta)
        policy.log_weights = rng.normal(0.0, 3.0, k)
        decision = policy.act(g, rng)
        p, s, gamma = decision.p, decision.s, decision.gamma
        mas = oracle_mas(g)
        data = {"p": p.tolist(), "s": s.tolist(), "gamma": gamma}
        # premises: exposure and the LP ratio are both at most mas, and p >= gamma s
        rep.record(n, g, mas, exposure(p, g), "premise exposure", **data)
        rep.record(n, g, mas, float(np.max(1.0 / observation_probs(s, g))), "premise LP ratio", **data)
        if np.any(p < gamma * s * (1 - 1e-12)):
            rep.fail(n, g, "premise p >= gamma s violated", **data)
        items = _elp_items(p, g)
        bounds = [mas**2 / gamma, 1.0, mas, mas, mas**3 / gamma]
        for idx, (value, bound) in enumerate(zip(items, bounds), start=1):
            if idx == 2:
                if abs(value - 1.0) > TOL:
                    rep.fail(n, g, f"item 2 equals {value!r}, not 1", **data)
                continue
            rep.record(n, g, bound, value, f"item {idx}", **data)
    return rep


def check_lp_optimality(trials: int, max_k: int = 8, seed: int = 0) -> CheckReport:
    """LP solver value against vertex enumeration, and ``1/value <= gamma <= mas``."""
    _check_cap(max_k, 8, "lp")
    rep = CheckReport("lp", trials)
    worst = 0.0
    for n, rng in _trials(seed, trials):
        g = ensemble_graph(n, max_k, rng)
        value = solve_maxmin_coverage(g).value
        exact = oracle_lp_value(g)
        worst = max(worst, abs(value - exact))
        if abs(value - exact) > 1e-6:
            rep.fail(n, g, f"LP value {value!r} differs from enumeration {exact!r}")
        gamma, mas = oracle_domination(g), oracle_mas(g)
        rep.record(n, g, gamma, 1.0 / value, "1/value vs domination number")
        rep.record(n, g, mas, gamma, "domination number vs mas")
    rep.details["max_value_error"] = worst
    return rep


def er_target(k: int, r: float) -> float:
    """Closed form ``(1 - (1 - r)^k) / (r k)``."""
    return (1.0 - (1.0 - r) ** k) / (r * k)


def check_er_expectation(
    k: int = 10,
    r: float = 0.5,
    draws: int = 100_000,
    seed: int = 0,
    symmetrize: bool = False,
    batch: int = 10_000,
) -> CheckReport:
    """Monte Carlo mean of ``p_i / q_i`` over Erdos-Renyi graphs, per coordinate, within 4 s.e.

    ``p`` is one fixed random distribution.  With ``symmetrize`` each draw
    also relabels ``p`` by a uniformly random permutation.  That averages the
    coordinates, which is what the closed form describes.  ``details``
    always reports the coordinate-sum check.  The sum equals ``k`` times the
    target for any fixed ``p``.
    """
    if not (0.0 < r <= 1.0):
        raise InvalidParameter(f"density must lie in (0, 1], got {r!r}")
    if k < 1 or draws < 2:
        raise InvalidParameter("need k >= 1 and at least two draws")
    rng = make_rng(derive_seed(seed, 0))
    p = rng.dirichlet(np.ones(k))
    total = np.zeros(k)
    total_sq = np.zeros(k)
    sums = []
    done = 0
    while done < draws:
        n = min(batch, draws - done)
        arcs = rng.random((n, k, k)) < r
        arcs[:, np.arange(k), np.arange(k)] = False
        pb = np.stack([p[rng.permutation(k)] for _ in range(n)]) if symmetrize else np.broadcast_to(p, (n, k))
        q = pb + np.einsum("nj,nji->ni", pb, arcs)
        ratio = pb / q
        total += ratio.sum(axis=0)
        total_sq += (ratio**2).sum(axis=0)
        sums.append(ratio.sum(axis=1))
        done += n
    mean = total / draws
    var = np.maximum(total_sq / draws - mean**2, 0.0) * draws / (draws - 1)
    se = np.sqrt(var / draws)
    target = er_target(k, r)
    rep = CheckReport("er", draws)
    for i in range(k):
        allowed = 4 * se[i] if se[i] > 0 else TOL
        rep.max_slack = max(rep.max_slack, allowed - abs(mean[i] - target))
        rep.min_slack = min(rep.min_slack, allowed - abs(mean[i] - target))
        if abs(mean[i] - target) > allowed:
            z = (mean[i] - target) / se[i] if se[i] > 0 else math.inf
            rep.fail(-1, None, f"coordinate {i}: mean {mean[i]:.6g} vs target {target:.6g} (z = {z:.1f})", p_i=p[i])
    per_draw = np.concatenate(sums)
    sum_se = per_draw.std(ddof=1) / math.sqrt(draws)
    rep.details = {
        "p": p.tolist(),
        "means": mean.tolist(),
        "standard_errors": se.tolist(),
        "target": target,
        "sum_mean": float(per_draw.mean()),
        "sum_target": k * target,
        "sum_within_4se": bool(abs(per_draw.mean() - k * target) <= max(4 * sum_se, TOL)),
        "symmetrize": symmetrize,
    }
    return rep


SUITES: dict[str, Callable[..., CheckReport]] = {
    "exposure": check_exposure_vs_mas,
    "indegree": check_indegree_sum,
    "cover": check_greedy_cover,
    "weighted": check_weighted_bound,
    "elp": check_elp_inequalities,
    "lp": check_lp_optimality,
}


def run_suite(name: str, trials: int, max_k: int, seed: int = 0, r: float = 0.5, symmetrize: bool = False) -> CheckReport:
    """Dispatch by suite name; ``er`` reads ``max_k`` as ``k`` and ``trials`` as the number of draws."""
    if name == "er":
        return check_er_expectation(max_k, r, trials, seed, symmetrize)
    if name not in SUITES:
        raise InvalidParameter(f"unknown suite {name!r}; choose from {sorted(SUITES) + ['er']}")
    return SUITES[name](trials, max_k, seed)
