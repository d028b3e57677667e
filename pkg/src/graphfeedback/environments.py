"""Loss-and-graph processes that policies play against.

An environment produces, for each round ``t = 1, 2, ...``, a feedback graph
and a full loss vector.  The harness shows the learner only the losses its
action reveals; the full vector is kept for regret accounting.  Rounds must be
requested in order; asking again for the current round returns the memoised
values.

Environments are built from plain dict specs (see :func:`make_env`), which is
also the shape they take in experiment config files.
"""

from __future__ import annotations

import math
import os
import warnings
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import InvalidParameter, ProtocolViolation
from .graphs import FeedbackGraph, GraphKind, generate, maximum_independent_set, parse_graph, read_graph

__all__ = [
    "EndOfStream",
    "Environment",
    "BernoulliGap",
    "LowerBoundAdversary",
    "ErdosRenyiProcess",
    "Replay",
    "make_env",
    "graph_from_spec",
    "gap_means",
    "default_epsilon",
    "parse_replay",
    "format_replay",
]


class EndOfStream(ProtocolViolation):
    """A replayed environment was asked for a round past its last one."""


class Environment:
    """Base class: subclasses implement ``_generate(t, history)``."""

    k: int
    fixed_graph: FeedbackGraph | None = None
    horizon: int | None = None

    def __init__(self, k: int):
        self.k = k
        self._last_t = 0
        self._memo: tuple[FeedbackGraph, np.ndarray] | None = None

    def emit_round(self, t: int, history: Sequence[int] = ()) -> tuple[FeedbackGraph, np.ndarray]:
        """Graph and loss vector of round ``t``; ``history`` lists the actions of rounds ``1 .. t-1``."""
        if len(history) != t - 1:
            raise ProtocolViolation(f"round {t} needs a history of {t - 1} actions, got {len(history)}")
        if t == self._last_t and self._memo is not None:
            return self._memo
        if t != self._last_t + 1:
            raise ProtocolViolation(f"round {t} requested after round {self._last_t}")
        graph, losses = self._generate(t, history)
        losses.setflags(write=False)
        self._last_t = t
        self._memo = (graph, losses)
        return self._memo

    def _generate(self, t: int, history: Sequence[int]) -> tuple[FeedbackGraph, np.ndarray]:
        raise NotImplementedError


def gap_means(k: int, best_mean: float = 0.4, gap: float = 0.2, best_arm: int = 0) -> list[float]:
    """Means with one best arm and all others ``gap`` worse."""
    means = [best_mean + gap] * k
    means[best_arm] = best_mean
    return means


def _check_means(means: Sequence[float]) -> np.ndarray:
    arr = np.asarray(means, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise InvalidParameter("means must be a non-empty list")
    if np.any(~(arr >= 0)) or np.any(~(arr <= 1)):
        raise InvalidParameter(f"Bernoulli means must lie in [0, 1], got {arr.tolist()}")
    return arr


class BernoulliGap(Environment):
    """Independent Bernoulli losses per arm on a fixed feedback graph."""

    def __init__(self, means: Sequence[float], graph: FeedbackGraph, rng: np.random.Generator):
        self.means = _check_means(means)
        super().__init__(self.means.size)
        if graph.k != self.k:
            raise InvalidParameter(f"graph has {graph.k} actions but {self.k} means were given")
        self.fixed_graph = graph
        self._rng = rng

    def _generate(self, t, history):
        return self.fixed_graph, (self._rng.random(self.k) < self.means).astype(np.float64)


def default_epsilon(alpha: int, horizon: int) -> float:
    """Gap ``1 / (8 sqrt(2 ln(4/3) T / alpha))`` used by the lower-bound construction."""
    return 1.0 / (8.0 * math.sqrt(2.0 * math.log(4.0 / 3.0) * horizon / alpha))


class LowerBoundAdversary(Environment):
    """Stochastic adversary hiding one slightly better arm inside a maximum independent set.

    Arms of the independent set draw Bernoulli(1/2) losses except the hidden
    arm, which draws Bernoulli(1/2 - epsilon); every other arm always loses 1.
    """

    def __init__(
        self,
        graph: FeedbackGraph,
        horizon: int,
        rng: np.random.Generator,
        epsilon: float | None = None,
    ):
        super().__init__(graph.k)
        self.fixed_graph = graph
        self.independent_set = maximum_independent_set(graph, cap=64)
        alpha = len(self.independent_set)
        if epsilon is None:
            epsilon = default_epsilon(alpha, horizon)
        if not (0.0 < epsilon < 0.5):
            raise InvalidParameter(f"epsilon must lie in (0, 1/2), got {epsilon!r}")
        if horizon < 0.0064 * alpha**3:
            warnings.warn(
                f"horizon {horizon} is below 0.0064 * alpha^3 = {0.0064 * alpha**3:g}; "
                "the lower-bound regime is not reached",
                stacklevel=2,
            )
        self.epsilon = float(epsilon)
        self.horizon_hint = horizon
        self.hidden_arm = self.independent_set[int(rng.integers(alpha))]
        self._members = np.array(self.independent_set)
        self._means = np.where(self._members == self.hidden_arm, 0.5 - self.epsilon, 0.5)
        self._rng = rng

    def _generate(self, t, history):
        losses = np.ones(self.k)
        losses[self._members] = self._rng.random(self._members.size) < self._means
        return self.fixed_graph, losses


class ErdosRenyiProcess(Environment):
    """Fresh Erdos-Renyi feedback graph every round, Bernoulli losses."""

    def __init__(self, r: float, means: Sequence[float], rng: np.random.Generator):
        self.means = _check_means(means)
        super().__init__(self.means.size)
        self.kind = GraphKind.erdos_renyi(r)
        self.r = self.kind.r
        self._rng = rng

    def _generate(self, t, history):
        graph = generate(self.kind, self.k, self._rng)
        return graph, (self._rng.random(self.k) < self.means).astype(np.float64)


class Replay(Environment):
    """Rounds read verbatim from a replay file."""

    def __init__(self, rounds: Sequence[tuple[FeedbackGraph, np.ndarray]]):
        if not rounds:
            raise InvalidParameter("replay holds no rounds")
        super().__init__(rounds[0][0].k)
        self._rounds = list(rounds)
        self.horizon = len(self._rounds)

    def _generate(self, t, history):
        if t > len(self._rounds):
            raise EndOfStream(f"replay ends after round {len(self._rounds)}")
        graph, losses = self._rounds[t - 1]
        return graph, np.array(losses, dtype=np.float64)


# -- replay files -----------------------------------------------------------


def parse_replay(text: str) -> list[tuple[FeedbackGraph, np.ndarray]]:
    """Parse ``K``/``T`` headers followed by per-round arc blocks, ``---``, and a loss line."""
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    header: dict[str, int] = {}
    pos = 0
    while pos < len(lines) and len(header) < 2:
        parts = lines[pos].split()
        if len(parts) != 2 or parts[0] not in ("K", "T"):
            raise InvalidParameter(f"expected 'K <int>' and 'T <int>' headers, got {lines[pos]!r}")
        header[parts[0]] = int(parts[1])
        pos += 1
    if set(header) != {"K", "T"}:
        raise InvalidParameter("replay needs both 'K <int>' and 'T <int>' headers")
    k, horizon = header["K"], header["T"]
    rounds = []
    for t in range(1, horizon + 1):
        arc_lines = []
        while pos < len(lines) and lines[pos] != "---":
            arc_lines.append(lines[pos])
            pos += 1
        if pos >= len(lines):
            raise InvalidParameter(f"round {t}: graph block is not terminated by '---'")
        pos += 1
        if pos >= len(lines):
            raise InvalidParameter(f"round {t}: missing loss line")
        graph = parse_graph("\n".join([f"K {k}"] + arc_lines))
        losses = np.array([float(x) for x in lines[pos].split()])
        pos += 1
        if losses.size != k or np.any(~(losses >= 0)) or np.any(~(losses <= 1)):
            raise InvalidParameter(f"round {t}: expected {k} losses in [0, 1], got {losses.tolist()}")
        rounds.append((graph, losses))
    if pos != len(lines):
        raise InvalidParameter(f"replay declares T = {horizon} but has trailing content")
    return rounds


def format_replay(rounds: Sequence[tuple[FeedbackGraph, Sequence[float]]]) -> str:
    k = rounds[0][0].k
    out = [f"K {k}", f"T {len(rounds)}"]
    for graph, losses in rounds:
        out.extend(f"{i} {j}" for i, j in graph.arcs)
        out.append("---")
        out.append(" ".join(repr(float(x)) for x in losses))
    return "\n".join(out) + "\n"


# -- specs ------------------------------------------------------------------


def _disjoint_cliques(k: int, parts: int) -> GraphKind:
    if not (1 <= parts <= k):
        raise InvalidParameter(f"cannot split {k} actions into {parts} cliques")
    groups = np.array_split(np.arange(k), parts)
    return GraphKind.symmetric((int(a), int(b)) for grp in groups for a in grp for b in grp if a < b)


def graph_from_spec(spec: Mapping[str, Any], k: int, rng: np.random.Generator | None = None) -> FeedbackGraph:
    """Build one graph from a spec such as ``{"kind": "total_order"}``.

    Kinds: ``clique``, ``empty``, ``total_order``, ``erdos_renyi`` (``r``, drawn
    once), ``symmetric`` (``edges``), ``explicit`` (``arcs``),
    ``disjoint_cliques`` (``parts``: that many symmetric cliques of near-equal
    size) and ``file`` (``path`` in the graph text format).
    """
    kind = spec.get("kind")
    if kind == "file":
        g = read_graph(spec["path"])
        if g.k != k:
            raise InvalidParameter(f"graph file {spec['path']} has K = {g.k}, expected {k}")
        return g
    if kind == "disjoint_cliques":
        return generate(_disjoint_cliques(k, int(spec["parts"])), k)
    if kind == "erdos_renyi":
        return generate(GraphKind.erdos_renyi(spec["r"]), k, rng)
    if kind == "symmetric":
        return generate(GraphKind.symmetric(map(tuple, spec["edges"])), k)
    if kind == "explicit":
        return generate(GraphKind.explicit(map(tuple, spec["arcs"])), k)
    if kind in ("clique", "empty", "total_order"):
        return generate(GraphKind(kind), k)
    raise InvalidParameter(f"unknown graph spec kind {kind!r}")


def _means_from_spec(spec: Mapping[str, Any]) -> list[float]:
    if "means" in spec:
        return list(spec["means"])
    if "k" in spec:
        return gap_means(int(spec["k"]), spec.get("best_mean", 0.4), spec.get("gap", 0.2), spec.get("best_arm", 0))
    raise InvalidParameter("loss spec needs either 'means' or 'k' (with optional best_mean, gap, best_arm)")


def make_env(spec: Mapping[str, Any], rng: np.random.Generator, horizon: int | None = None) -> Environment:
    """Build an environment from a dict spec.

    ``{"kind": "bernoulli_gap", "means": [...], "graph": {...}}``
        Bernoulli losses on a fixed graph (default: empty graph).  ``means``
        may be replaced by ``k`` with optional ``best_mean`` (0.4), ``gap``
        (0.2) and ``best_arm`` (0).
    ``{"kind": "lower_bound", "graph": {...}, "k": K, "epsilon": e}``
        Hidden-arm adversary; ``epsilon`` defaults to the construction's value
        for ``horizon``.
    ``{"kind": "erdos_renyi_process", "r": r, "losses": {...}}``
        A fresh Erdos-Renyi graph each round, Bernoulli losses from the
        ``losses`` sub-spec.
    ``{"kind": "replay", "path": file}``
        Rounds replayed from a file.
    """
    kind = spec.get("kind")
    if kind == "bernoulli_gap":
        means = _means_from_spec(spec)
        graph = graph_from_spec(spec.get("graph", {"kind": "empty"}), len(means), rng)
        return BernoulliGap(means, graph, rng)
    if kind == "lower_bound":
        if horizon is None:
            horizon = spec.get("horizon")
        if horizon is None:
            raise InvalidParameter("lower_bound environment needs the horizon T")
        k = spec.get("k")
        gspec = spec.get("graph", {"kind": "empty"})
        if k is None:
            if gspec.get("kind") != "file":
                raise InvalidParameter("lower_bound environment needs 'k' unless the graph comes from a file")
            k = read_graph(gspec["path"]).k
        graph = graph_from_spec(gspec, int(k), rng)
        return LowerBoundAdversary(graph, int(horizon), rng, spec.get("epsilon"))
    if kind == "erdos_renyi_process":
        return ErdosRenyiProcess(spec["r"], _means_from_spec(spec.get("losses", {})), rng)
    if kind == "replay":
        with open(os.fspath(spec["path"]), encoding="utf-8") as fh:
            return Replay(parse_replay(fh.read()))
    raise InvalidParameter(f"unknown environment kind {kind!r}")
