"""Directed feedback graphs over ``k`` actions and the combinatorics built on them.

Arc ``(i, j)`` means that playing ``i`` also reveals the loss of ``j``.  Self
observation is implicit and never stored: the feedback set of ``i`` is ``{i}``
plus the out-neighbours of ``i``.

Graphs are immutable.  The dense boolean adjacency matrix is the canonical
representation; per-node Python-int bitmasks are derived lazily and drive the
exact searches (they work for any ``k`` because Python ints are unbounded).
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import CapacityExceeded, InvalidParameter

__all__ = [
    "FeedbackGraph",
    "GraphKind",
    "Estimate",
    "generate",
    "observation_set",
    "is_dominating",
    "greedy_dominating_set",
    "maximum_independent_set",
    "independence_number",
    "independence_estimate",
    "clique_cover_bound",
    "mas_size",
    "domination_number",
    "parse_graph",
    "format_graph",
    "read_graph",
    "write_graph",
]

MAS_EXACT_CAP = 20


def _bits(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


class FeedbackGraph:
    """Immutable directed graph on actions ``0 .. k-1`` without self-arcs."""

    def __init__(self, k: int, arcs: Iterable[tuple[int, int]] = ()):
        if int(k) != k or k < 1:
            raise InvalidParameter(f"action count must be a positive integer, got {k!r}")
        k = int(k)
        adj = np.zeros((k, k), dtype=bool)
        for i, j in arcs:
            if not (0 <= i < k and 0 <= j < k):
                raise InvalidParameter(f"arc ({i}, {j}) has an endpoint outside [0, {k})")
            if i == j:
                raise InvalidParameter(f"self-arc ({i}, {i}) is implicit and may not be stored")
            adj[i, j] = True
        self._init(adj)

    @classmethod
    def from_adjacency(cls, adj) -> "FeedbackGraph":
        """Build from a square boolean matrix; the diagonal is ignored."""
        a = np.array(adj, dtype=bool, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise InvalidParameter(f"adjacency must be a non-empty square matrix, got shape {a.shape}")
        np.fill_diagonal(a, False)
        g = cls.__new__(cls)
        g._init(a)
        return g

    def _init(self, adj: np.ndarray) -> None:
        adj.setflags(write=False)
        self.k = adj.shape[0]
        self._adj = adj

    @property
    def adjacency(self) -> np.ndarray:
        """Read-only ``k x k`` boolean matrix, ``adjacency[i, j]`` iff arc ``(i, j)``."""
        return self._adj

    @cached_property
    def observation_matrix(self) -> np.ndarray:
        """Float matrix ``M`` with ``M[j, i] = 1`` iff ``i`` is in the feedback set of ``j``."""
        m = self._adj.astype(np.float64)
        np.fill_diagonal(m, 1.0)
        m.setflags(write=False)
        return m

    @cached_property
    def out_masks(self) -> tuple[int, ...]:
        weights = [1 << j for j in range(self.k)]
        return tuple(sum(weights[j] for j in np.flatnonzero(row)) for row in self._adj)

    @cached_property
    def in_masks(self) -> tuple[int, ...]:
        weights = [1 << j for j in range(self.k)]
        return tuple(sum(weights[j] for j in np.flatnonzero(col)) for col in self._adj.T)

    @cached_property
    def observation_masks(self) -> tuple[int, ...]:
        """Bitmask of the feedback set ``S_i`` (self included) for every ``i``."""
        return tuple(m | (1 << i) for i, m in enumerate(self.out_masks))

    @cached_property
    def undirected_masks(self) -> tuple[int, ...]:
        """Neighbourhoods of the undirected skeleton (orientation ignored)."""
        return tuple(o | n for o, n in zip(self.out_masks, self.in_masks))

    @property
    def arcs(self) -> list[tuple[int, int]]:
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self._adj))]

    @property
    def num_arcs(self) -> int:
        return int(self._adj.sum())

    @property
    def in_degrees(self) -> np.ndarray:
        return self._adj.sum(axis=0)

    @property
    def out_degrees(self) -> np.ndarray:
        return self._adj.sum(axis=1)

    @cached_property
    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self._adj, self._adj.T))

    @cached_property
    def _key(self) -> tuple[int, bytes]:
        return self.k, np.packbits(self._adj).tobytes()

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeedbackGraph):
            return NotImplemented
        return self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __repr__(self) -> str:
        return f"FeedbackGraph(k={self.k}, arcs={self.num_arcs})"


@dataclass(frozen=True)
class GraphKind:
    """Description of a graph family, resolved to a concrete graph by :func:`generate`.

    ``tag`` is one of ``clique``, ``empty``, ``total_order``, ``erdos_renyi``,
    ``symmetric`` or ``explicit``.  ``r`` is the arc density of ``erdos_renyi``;
    ``edges`` holds undirected edges (``symmetric``) or arcs (``explicit``).
    """

    tag: str
    r: float | None = None
    edges: tuple[tuple[int, int], ...] = ()

    TAGS = ("clique", "empty", "total_order", "erdos_renyi", "symmetric", "explicit")

    def __post_init__(self):
        if self.tag not in self.TAGS:
            raise InvalidParameter(f"unknown graph kind {self.tag!r}; expected one of {self.TAGS}")
        if self.tag == "erdos_renyi":
            if self.r is None or not (0.0 <= self.r <= 1.0):
                raise InvalidParameter(f"Erdos-Renyi density must lie in [0, 1], got {self.r!r}")
        object.__setattr__(self, "edges", tuple((int(a), int(b)) for a, b in self.edges))

    @classmethod
    def clique(cls):
        return cls("clique")

    @classmethod
    def empty(cls):
        return cls("empty")

    @classmethod
    def total_order(cls):
        return cls("total_order")

    @classmethod
    def erdos_renyi(cls, r: float):
        return cls("erdos_renyi", r=float(r))

    @classmethod
    def symmetric(cls, edges: Iterable[tuple[int, int]]):
        # each undirected edge stored once
        seen = []
        keys = set()
        for a, b in edges:
            key = (min(a, b), max(a, b))
            if key not in keys:
                keys.add(key)
                seen.append(key)
        return cls("symmetric", edges=tuple(seen))

    @classmethod
    def explicit(cls, arcs: Iterable[tuple[int, int]]):
        return cls("explicit", edges=tuple(dict.fromkeys(tuple(a) for a in arcs)))


def generate(kind: GraphKind, k: int, rng: np.random.Generator | None = None) -> FeedbackGraph:
    """Materialise ``kind`` on ``k`` actions.

    Only ``erdos_renyi`` consumes randomness: each ordered pair ``i != j`` is an
    arc independently with probability ``r``, drawn as one ``k x k`` block of
    uniforms from ``rng``.
    """
    if int(k) != k or k < 1:
        raise InvalidParameter(f"action count must be a positive integer, got {k!r}")
    k = int(k)
    tag = kind.tag
    if tag == "clique":
        return FeedbackGraph.from_adjacency(np.ones((k, k), dtype=bool))
    if tag == "empty":
        return FeedbackGraph(k)
    if tag == "total_order":
        # arc (j, i) for every j > i
        return FeedbackGraph.from_adjacency(np.tril(np.ones((k, k), dtype=bool), -1))
    if tag == "erdos_renyi":
        if rng is None:
            raise InvalidParameter("Erdos-Renyi generation needs a random stream")
        return FeedbackGraph.from_adjacency(rng.random((k, k)) < kind.r)
    if tag == "symmetric":
        arcs = [a for u, v in kind.edges if u != v for a in ((u, v), (v, u))]
        return FeedbackGraph(k, arcs)
    return FeedbackGraph(k, kind.edges)


def observation_set(g: FeedbackGraph, i: int) -> set[int]:
    """Feedback set of action ``i``: itself plus its out-neighbours."""
    if not (0 <= i < g.k):
        raise InvalidParameter(f"action {i} outside [0, {g.k})")
    return set(_bits(g.observation_masks[i]))


def is_dominating(g: FeedbackGraph, nodes: Iterable[int]) -> bool:
    covered = 0
    for i in nodes:
        covered |= g.observation_masks[i]
    return covered == (1 << g.k) - 1


def greedy_dominating_set(g: FeedbackGraph) -> list[int]:
    """Greedy set cover over the feedback sets, ties broken by lowest index.

    Returns the chosen actions in selection order.
    """
    masks = g.observation_masks
    uncovered = (1 << g.k) - 1
    chosen: list[int] = []
    while uncovered:
        best, best_gain = -1, 0
        for i, m in enumerate(masks):
            gain = (m & uncovered).bit_count()
            if gain > best_gain:
                best, best_gain = i, gain
        chosen.append(best)
        uncovered &= ~masks[best]
    return chosen


def _clique_cover_order(cand: int, nb: Sequence[int]) -> tuple[list[int], list[int]]:
    """Greedy partition of ``cand`` into cliques of the undirected skeleton.

    Returns vertices in cover order with, for each, the number of cliques used
    so far; that number bounds the independence number of the prefix.
    """
    order, bounds = [], []
    rest = cand
    colour = 0
    while rest:
        colour += 1
        q = rest
        while q:
            low = q & -q
            v = low.bit_length() - 1
            rest ^= low
            q = (q ^ low) & nb[v]
            order.append(v)
            bounds.append(colour)
    return order, bounds


def maximum_independent_set(g: FeedbackGraph, cap: int = 64) -> list[int]:
    """A maximum independent set of the undirected skeleton, by branch and bound.

    The bound at each node is the size of a greedy clique cover of the
    remaining candidates.
    """
    if g.k > cap:
        raise CapacityExceeded(f"exact independence number limited to k <= {cap}, got k = {g.k}")
    nb = g.undirected_masks
    best: list[int] = []

    def expand(chosen: list[int], cand: int) -> None:
        nonlocal best
        if not cand:
            if len(chosen) > len(best):
                best = list(chosen)
            return
        order, bounds = _clique_cover_order(cand, nb)
        for idx in range(len(order) - 1, -1, -1):
            if len(chosen) + bounds[idx] <= len(best):
                return
            v = order[idx]
            bit = 1 << v
            chosen.append(v)
            expand(chosen, cand & ~nb[v] & ~bit)
            chosen.pop()
            cand &= ~bit

    expand([], (1 << g.k) - 1)
    return sorted(best)


def independence_number(g: FeedbackGraph, cap: int = 64) -> int:
    """Exact independence number of the undirected skeleton (``k <= cap``)."""
    return len(maximum_independent_set(g, cap))


def clique_cover_bound(g: FeedbackGraph) -> int:
    """Upper bound on the independence number from one greedy clique cover."""
    _, bounds = _clique_cover_order((1 << g.k) - 1, g.undirected_masks)
    return bounds[-1]


class Estimate(NamedTuple):
    value: int
    exact: bool


def independence_estimate(g: FeedbackGraph, cap: int = 64) -> Estimate:
    """Exact independence number when ``k <= cap``, else a flagged clique-cover upper bound."""
    if g.k <= cap:
        return Estimate(independence_number(g, cap), True)
    return Estimate(clique_cover_bound(g), False)


def _mas_exact(g: FeedbackGraph) -> int:
    k = g.k
    in_m = g.in_masks
    acyclic = bytearray(1 << k)
    acyclic[0] = 1
    best = 0
    for s in range(1, 1 << k):
        t = s
        while t:
            low = t & -t
            v = low.bit_length() - 1
            if not (in_m[v] & s):
                # v is a source of the induced subgraph; s is acyclic iff s - v is
                if acyclic[s ^ low]:
                    acyclic[s] = 1
                    size = s.bit_count()
                    if size > best:
                        best = size
                break
            t ^= low
    return best


def _mas_peel(g: FeedbackGraph) -> int:
    # uniform-weight greedy: keep the node of smallest remaining closed in-neighbourhood,
    # then drop it together with its in-neighbours
    in_m = g.in_masks
    remaining = (1 << g.k) - 1
    kept = 0
    while remaining:
        best_v, best_size = -1, None
        for v in _bits(remaining):
            size = (in_m[v] & remaining).bit_count()
            if best_size is None or size < best_size:
                best_v, best_size = v, size
        kept += 1
        remaining &= ~(in_m[best_v] | (1 << best_v))
    return kept


def mas_size(g: FeedbackGraph, mode: str = "exact") -> int:
    """Size of a maximum acyclic induced subgraph.

    ``mode="exact"`` enumerates vertex subsets (``k <= 20``); ``mode="peel"``
    returns the size of a greedily peeled acyclic set, a lower bound.
    """
    if mode == "exact":
        if g.k > MAS_EXACT_CAP:
            raise CapacityExceeded(f"exact mas limited to k <= {MAS_EXACT_CAP}, got k = {g.k}")
        return _mas_exact(g)
    if mode == "peel":
        return _mas_peel(g)
    raise InvalidParameter(f"mas mode must be 'exact' or 'peel', got {mode!r}")


def domination_number(g: FeedbackGraph, cap: int = 20) -> int:
    """Exact domination number by exhaustive search over subsets of increasing size."""
    if g.k > cap:
        raise CapacityExceeded(f"exact domination number limited to k <= {cap}, got k = {g.k}")
    masks = g.observation_masks
    full = (1 << g.k) - 1
    largest = max(m.bit_count() for m in masks)
    for size in range(max(1, -(-g.k // largest)), g.k + 1):
        for combo in itertools.combinations(masks, size):
            acc = 0
            for m in combo:
                acc |= m
            if acc == full:
                return size
    return g.k  # unreachable: the full vertex set dominates


# -- text format ------------------------------------------------------------


def parse_graph(text: str) -> FeedbackGraph:
    """Parse ``K <int>`` followed by one ``i j`` arc per line; ``#`` lines are comments."""
    k = None
    arcs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if k is None:
            if len(parts) != 2 or parts[0] != "K":
                raise InvalidParameter(f"line {lineno}: expected 'K <int>' header, got {raw!r}")
            k = int(parts[1])
            continue
        if len(parts) != 2:
            raise InvalidParameter(f"line {lineno}: expected 'i j', got {raw!r}")
        arcs.append((int(parts[0]), int(parts[1])))
    if k is None:
        raise InvalidParameter("graph text has no 'K <int>' header")
    return FeedbackGraph(k, arcs)


def format_graph(g: FeedbackGraph) -> str:
    lines = [f"K {g.k}"] + [f"{i} {j}" for i, j in g.arcs]
    return "\n".join(lines) + "\n"


def read_graph(path: str | os.PathLike) -> FeedbackGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh.read())


def write_graph(g: FeedbackGraph, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_graph(g))


def log2_floor(n: int) -> int:
    return n.bit_length() - 1
