"""Exponential-weights policies for bandits with graph-structured feedback.

Every policy follows the same two-phase round: :meth:`Policy.act` returns a
:class:`Decision` (distribution plus sampled action), then
:meth:`Policy.update` consumes the :class:`RoundFeedback`.  Informed policies
must be handed the round's feedback graph in ``act``; uninformed ones must not.

Weights live in log space.  Sampling is inverse-CDF with exactly one uniform
draw per round, so two policies that emit the same distributions under the
same generator pick the same actions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, InvalidConfiguration, InvalidParameter, ProtocolViolation
from .estimators import observation_probs
from .graphs import FeedbackGraph, greedy_dominating_set
from .lp import solve_maxmin_coverage

__all__ = [
    "RoundFeedback",
    "Decision",
    "Policy",
    "Exp3Set",
    "Exp3Dom",
    "ElpP",
    "Hedge",
    "Exp3",
    "Band",
    "sample_action",
    "softmax",
    "exp3set_tuned_eta",
    "er_tuned_eta",
    "elpp_beta",
    "elpp_tuned_eta",
    "doubling_gamma",
]


@dataclass(frozen=True)
class RoundFeedback:
    """What the learner sees after acting: its action, the revealed losses, the graph."""

    action: int
    observed: Mapping[int, float]
    graph: FeedbackGraph


@dataclass(frozen=True)
class Decision:
    p: np.ndarray
    action: int
    band: int | None = None
    dominating_set: tuple[int, ...] | None = None
    gamma: float | None = None
    s: np.ndarray | None = None


def softmax(log_weights: np.ndarray) -> np.ndarray:
    w = np.exp(log_weights - log_weights.max())
    return w / w.sum()


def sample_action(p: np.ndarray, rng: np.random.Generator) -> int:
    """Inverse-CDF draw from ``p`` consuming a single uniform from ``rng``."""
    u = rng.random()
    cdf = np.cumsum(p)
    return min(int(np.searchsorted(cdf, u * cdf[-1], side="right")), p.size - 1)


def _observed_arrays(fb: RoundFeedback, k: int) -> tuple[np.ndarray, np.ndarray]:
    g = fb.graph
    if g.k != k:
        raise ProtocolViolation(f"feedback graph has {g.k} actions, policy has {k}")
    if not (0 <= fb.action < k):
        raise ProtocolViolation(f"played action {fb.action} outside [0, {k})")
    mask = 0
    for i in fb.observed:
        mask |= 1 << i
    if mask != g.observation_masks[fb.action]:
        raise ProtocolViolation(
            f"observed actions {sorted(fb.observed)} differ from the feedback set of action {fb.action}"
        )
    observed = np.zeros(k, dtype=bool)
    values = np.zeros(k)
    for i, loss in fb.observed.items():
        if not (0.0 <= loss <= 1.0):
            raise ProtocolViolation(f"loss {loss!r} of action {i} outside [0, 1]")
        observed[i] = True
        values[i] = loss
    return observed, values


def _weighted(values: np.ndarray, observed: np.ndarray, q: np.ndarray) -> np.ndarray:
    """``values / q`` on observed actions, 0 elsewhere (unobserved ``q`` may underflow)."""
    return np.divide(values, q, out=np.zeros_like(values), where=observed)


@lru_cache(maxsize=4096)
def _dominating_set(g: FeedbackGraph) -> tuple[int, ...]:
    return tuple(greedy_dominating_set(g))


class Policy:
    """Shared round bookkeeping; subclasses implement ``_decide`` and ``_learn``."""

    informed: bool = False
    name: str = "policy"

    def __init__(self, k: int):
        if int(k) != k or k < 1:
            raise InvalidParameter(f"action count must be a positive integer, got {k!r}")
        self.k = int(k)
        self.rounds = 0
        self._pending: Decision | None = None

    def act(self, graph: FeedbackGraph | None, rng: np.random.Generator) -> Decision:
        if self._pending is not None:
            raise ProtocolViolation("act called twice without an intervening update")
        if self.informed and graph is None:
            raise ConfigurationError(f"{self.name} is informed and needs the feedback graph before acting")
        if not self.informed and graph is not None:
            raise ConfigurationError(f"{self.name} is uninformed and must not see the graph before acting")
        if graph is not None and graph.k != self.k:
            raise ProtocolViolation(f"graph has {graph.k} actions, policy has {self.k}")
        decision = self._decide(graph, rng)
        self._pending = decision
        return decision

    def update(self, fb: RoundFeedback) -> None:
        if self._pending is None:
            raise ProtocolViolation("update called before act")
        decision, self._pending = self._pending, None
        if fb.action != decision.action:
            raise ProtocolViolation(f"feedback for action {fb.action}, but action {decision.action} was played")
        observed, values = _observed_arrays(fb, self.k)
        self._learn(decision, fb.graph, observed, values)
        self.rounds += 1

    def _decide(self, graph, rng) -> Decision:
        raise NotImplementedError

    def _learn(self, decision: Decision, graph: FeedbackGraph, observed: np.ndarray, values: np.ndarray) -> None:
        raise NotImplementedError


def _check_eta(eta: float) -> float:
    if not (0.0 < eta <= 1.0) or not math.isfinite(eta):
        raise InvalidParameter(f"learning rate must lie in (0, 1], got {eta!r}")
    return float(eta)


class Exp3Set(Policy):
    """Uninformed exponential weights with graph-aware importance weighting."""

    informed = False
    name = "exp3set"

    def __init__(self, k: int, eta: float):
        super().__init__(k)
        self.eta = _check_eta(eta)
        self.log_weights = np.zeros(self.k)

    def distribution(self) -> np.ndarray:
        return softmax(self.log_weights)

    def _decide(self, graph, rng):
        p = self.distribution()
        return Decision(p, sample_action(p, rng))

    def _learn(self, decision, graph, observed, values):
        # q uses the graph disclosed after the action was drawn
        q = observation_probs(decision.p, graph)
        self.log_weights -= self.eta * _weighted(values, observed, q)


class Hedge(Exp3Set):
    """Full-information baseline: every observed loss enters with ``q = 1``."""

    name = "hedge"

    def _learn(self, decision, graph, observed, values):
        self.log_weights -= self.eta * np.where(observed, values, 0.0)


class Exp3(Exp3Set):
    """Bandit baseline without explicit exploration: ``q = p``.

    Only the played action's loss is used, whatever else the graph reveals.
    """

    name = "exp3"

    def _learn(self, decision, graph, observed, values):
        a = decision.action
        self.log_weights[a] -= self.eta * (values[a] / decision.p[a])


def doubling_gamma(b: int, r: int, k: int) -> float:
    """Exploration rate of band ``b`` at doubling level ``r``, clamped to at most 1."""
    if k == 1:
        return 1.0
    return min(1.0, math.sqrt((2**b) * math.log(k) / 2**r))


@dataclass
class Band:
    gamma: float
    log_weights: np.ndarray
    r: int = 0
    accumulator: float = 0.0
    restarts: int = 0
    updates: int = 0


class Exp3Dom(Policy):
    """Informed policy running one exploration band per dominating-set size scale.

    ``gammas=None`` selects the doubling schedule: each band restarts with the
    next (smaller) exploration rate whenever its running sum of
    ``1 + Q / 2^(b+1)`` exceeds ``2^r``.  A restart resets only that band.
    """

    informed = True
    name = "exp3dom"

    def __init__(self, k: int, gammas: Sequence[float] | None = None):
        super().__init__(k)
        n_bands = self.k.bit_length()  # floor(log2 k) + 1
        self.doubling = gammas is None
        if self.doubling:
            gammas = [doubling_gamma(b, 0, self.k) for b in range(n_bands)]
        elif len(gammas) != n_bands:
            raise InvalidParameter(f"need {n_bands} exploration rates for k = {self.k}, got {len(gammas)}")
        for gam in gammas:
            if not (0.0 < gam <= 1.0):
                raise InvalidParameter(f"exploration rates must lie in (0, 1], got {gam!r}")
        self.bands = [Band(float(gam), np.zeros(self.k)) for gam in gammas]

    def _decide(self, graph, rng):
        dom = _dominating_set(graph)
        b = len(dom).bit_length() - 1
        band = self.bands[b]
        p = (1.0 - band.gamma) * softmax(band.log_weights)
        p[list(dom)] += band.gamma / len(dom)
        return Decision(p, sample_action(p, rng), band=b, dominating_set=dom, gamma=band.gamma)

    def _learn(self, decision, graph, observed, values):
        b = decision.band
        band = self.bands[b]
        p = decision.p
        q = observation_probs(p, graph)
        band.log_weights -= (band.gamma / 2**b) * _weighted(values, observed, q)
        band.accumulator += 1.0 + float(_weighted(p, p > 0, q).sum()) / 2 ** (b + 1)
        band.updates += 1
        if self.doubling and band.accumulator > 2**band.r:
            band.r += 1
            band.gamma = doubling_gamma(b, band.r, self.k)
            band.log_weights = np.zeros(self.k)
            band.accumulator = 0.0
            band.restarts += 1


def elpp_beta(k: int, delta: float, eta: float) -> float:
    """Bias ``2 eta sqrt(ln(5k/delta) / ln k)``; defined as 0 for a single action."""
    if k == 1:
        return 0.0
    return 2.0 * eta * math.sqrt(math.log(5 * k / delta) / math.log(k))


class ElpP(Policy):
    """Informed policy with LP-shaped exploration and biased reward estimates.

    Works with rewards ``g = 1 - loss`` internally; losses in and out.
    """

    informed = True
    name = "elpp"

    def __init__(self, k: int, delta: float, eta: float):
        super().__init__(k)
        if not (0.0 < delta < 1.0):
            raise InvalidParameter(f"confidence delta must lie in (0, 1), got {delta!r}")
        if not (0.0 < eta <= 1.0 / (3 * self.k)):
            raise InvalidParameter(f"learning rate must lie in (0, 1/(3k)] = (0, {1 / (3 * self.k)!r}], got {eta!r}")
        beta = elpp_beta(self.k, delta, eta)
        if beta > 0.25:
            raise InvalidParameter(f"bias beta = {beta!r} exceeds 1/4; reduce the learning rate")
        self.delta = float(delta)
        self.eta = float(eta)
        self.beta = beta
        self.log_weights = np.zeros(self.k)

    def _decide(self, graph, rng):
        sol = solve_maxmin_coverage(graph)
        gamma = (1.0 + self.beta) * self.eta / sol.value
        if gamma > 0.5:
            raise InvalidConfiguration(f"exploration rate {gamma!r} exceeds 1/2")
        p = (1.0 - gamma) * softmax(self.log_weights) + gamma * sol.s
        return Decision(p, sample_action(p, rng), gamma=gamma, s=sol.s)

    def _learn(self, decision, graph, observed, values):
        q = observation_probs(decision.p, graph)
        assert np.all(q >= (1.0 + self.beta) * self.eta * (1 - 1e-12)), "observation probability below (1+beta)*eta"
        rewards = np.where(observed, 1.0 - values, 0.0)
        self.log_weights += self.eta * (rewards + self.beta) / q


# -- tuning -----------------------------------------------------------------


def exp3set_tuned_eta(k: int, total_bound: float) -> float:
    """``sqrt(2 ln k / sum_t m_t)`` for per-round bounds on mas (or alpha), capped at 1."""
    if total_bound <= 0:
        raise InvalidParameter(f"sum of per-round bounds must be positive, got {total_bound!r}")
    if k == 1:
        return 1.0
    return min(1.0, math.sqrt(2.0 * math.log(k) / total_bound))


def er_tuned_eta(k: int, r: float, horizon: int) -> float:
    """Learning rate tuned for i.i.d. Erdos-Renyi feedback graphs of density ``r``."""
    if not (0.0 < r <= 1.0):
        raise InvalidParameter(f"density must lie in (0, 1], got {r!r}")
    if k == 1:
        return 1.0
    return min(1.0, math.sqrt(2.0 * r * math.log(k) / (horizon * (1.0 - (1.0 - r) ** k))))


def elpp_tuned_eta(k: int, delta: float, total_bound: float) -> float:
    """``eta^2 = sqrt(ln(5k/delta) ln k) / (6 sum_t m_t)``, clipped to the admissible range.

    The clip enforces ``eta <= 1/(3k)`` and ``beta <= 1/4``.
    """
    if total_bound <= 0:
        raise InvalidParameter(f"sum of per-round bounds must be positive, got {total_bound!r}")
    cap = 1.0 / (3 * k)
    if k == 1:
        return cap
    log5 = math.log(5 * k / delta)
    eta = math.sqrt(math.sqrt(log5 * math.log(k)) / (6.0 * total_bound))
    beta_cap = 0.25 / (2.0 * math.sqrt(log5 / math.log(k))) * (1.0 - 1e-12)
    return min(eta, cap, beta_cap)
