"""Experiment orchestration: play policies against environments and record regret.

A run plays ``T`` rounds of the learning protocol.  The environment emits the
round's graph and full loss vector.  The policy acts, seeing the graph first
only if it is informed.  It is then told the losses its action reveals.
Cumulative losses of the player and of every fixed arm are recorded every
``stride`` rounds (and at ``T``).  Regret is measured against the best arm on
the realised losses.

Seeding.  Repetition ``i`` of an experiment with master seed ``m`` uses seed
``derive_seed(m, i)``, the ``(i+1)``-th output of SplitMix64 started at ``m``.
Inside a run, the environment draws from ``Philox(key=derive_seed(seed, 0))``
and the policy from ``Philox(key=derive_seed(seed, 1))``.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
import yaml

from .environments import Environment, ErdosRenyiProcess, Replay, make_env
from .errors import ConfigurationError, InvalidParameter
from .graphs import MAS_EXACT_CAP, FeedbackGraph, independence_estimate, mas_size
from .policies import (
    ElpP,
    Exp3,
    Exp3Dom,
    Exp3Set,
    Hedge,
    Policy,
    RoundFeedback,
    elpp_tuned_eta,
    er_tuned_eta,
    exp3set_tuned_eta,
)
from .seeding import derive_seed, make_rng

__all__ = [
    "CSV_COLUMNS",
    "ExperimentConfig",
    "RegretTrace",
    "AggregateTrace",
    "derive_seed",
    "make_rng",
    "complexity_bound",
    "make_policy",
    "run_one",
    "run_many",
    "aggregate",
    "emit_csv",
    "format_csv",
    "parse_csv",
    "load_config",
]

CSV_COLUMNS = ("round", "mean_regret", "std_regret", "mean_player_loss", "best_arm_loss")

# -- traces -----------------------------------------------------------------


@dataclass
class RegretTrace:
    """Cumulative losses of one run at the recorded rounds."""

    rounds: np.ndarray
    player_loss: np.ndarray
    arm_losses: np.ndarray  # shape (len(rounds), k)

    @property
    def best_arm_loss(self) -> np.ndarray:
        return self.arm_losses.min(axis=1) if len(self.rounds) else np.zeros(0)

    @property
    def regret(self) -> np.ndarray:
        return self.player_loss - self.best_arm_loss


@dataclass
class AggregateTrace:
    """Mean and standard deviation over repetitions, one entry per recorded round."""

    rounds: np.ndarray
    mean_regret: np.ndarray
    std_regret: np.ndarray
    mean_player_loss: np.ndarray
    best_arm_loss: np.ndarray
    repetitions: int = 0

    def columns(self) -> list[np.ndarray]:
        return [self.rounds, self.mean_regret, self.std_regret, self.mean_player_loss, self.best_arm_loss]


# -- configuration ----------------------------------------------------------


@dataclass
class ExperimentConfig:
    """One experiment: a policy spec, an environment spec and the run parameters.

    Config files are YAML (JSON is accepted as a subset) with the keys
    ``policy``, ``environment``, ``horizon``, ``repetitions``, ``seed`` and the
    optional ``stride`` (100), ``output`` and ``workers`` (1).
    """

    policy: dict
    environment: dict
    horizon: int
    repetitions: int = 1
    seed: int = 0
    stride: int = 100
    output: str | None = None
    workers: int = 1
    disclosure: str = "auto"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.policy, Mapping) or "name" not in self.policy:
            raise InvalidParameter("policy spec must be a mapping with a 'name'")
        if not isinstance(self.environment, Mapping) or "kind" not in self.environment:
            raise InvalidParameter("environment spec must be a mapping with a 'kind'")
        for key in ("horizon", "repetitions", "stride", "workers"):
            val = getattr(self, key)
            if isinstance(val, bool) or int(val) != val or val < 1:
                raise InvalidParameter(f"{key} must be a positive integer, got {val!r}")
            setattr(self, key, int(val))
        if int(self.seed) != self.seed or self.seed < 0:
            raise InvalidParameter(f"seed must be a nonnegative integer, got {self.seed!r}")
        self.seed = int(self.seed)
        if self.disclosure not in ("auto", "pre", "post"):
            raise InvalidParameter(f"disclosure must be auto, pre or post, got {self.disclosure!r}")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], base_dir: str | None = None) -> "ExperimentConfig":
        known = {"policy", "environment", "horizon", "repetitions", "seed", "stride", "output", "workers", "disclosure"}
        missing = {"policy", "environment", "horizon"} - set(data)
        if missing:
            raise InvalidParameter(f"config is missing {sorted(missing)}")
        env = dict(data["environment"])
        if base_dir is not None:
            env = _resolve_paths(env, base_dir)
        kwargs = {key: data[key] for key in known & set(data)}
        kwargs["environment"] = env
        kwargs["policy"] = dict(data["policy"])
        return cls(**kwargs, extra={key: data[key] for key in set(data) - known})


def _resolve_paths(spec: dict, base_dir: str) -> dict:
    out = {}
    for key, val in spec.items():
        if key == "path" and isinstance(val, str) and not os.path.isabs(val):
            val = os.path.join(base_dir, val)
        elif isinstance(val, Mapping):
            val = _resolve_paths(dict(val), base_dir)
        out[key] = val
    return out


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    """Read an :class:`ExperimentConfig`; relative file paths inside resolve against the config's directory."""
    path = os.fspath(path)
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, Mapping):
        raise InvalidParameter(f"{path}: config must be a mapping")
    return ExperimentConfig.from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))


# -- policies ---------------------------------------------------------------


def complexity_bound(g: FeedbackGraph) -> int:
    """Upper bound on the per-round complexity used for tuning.

    Independence number for symmetric graphs (exact up to 64 actions, clique
    cover bound above), exact mas for small directed graphs, ``k`` otherwise.
    """
    if g.is_symmetric:
        return independence_estimate(g).value
    if g.k <= MAS_EXACT_CAP:
        return mas_size(g, "exact")
    return g.k


def _total_bound(env: Environment, horizon: int) -> float | None:
    if env.fixed_graph is not None:
        return complexity_bound(env.fixed_graph) * horizon
    if isinstance(env, Replay):
        return float(sum(complexity_bound(g) for g, _ in env._rounds[:horizon]))
    return None


def make_policy(spec: Mapping[str, Any], env: Environment, horizon: int) -> Policy:
    """Build a policy from ``{"name": ..., params}``; ``eta: auto`` tunes for ``env`` and ``horizon``.

    Names: ``exp3set``, ``hedge``, ``exp3`` (``eta``), ``exp3dom`` (``gammas``:
    ``doubling`` or one rate per band) and ``elpp`` (``eta``, ``delta``).
    """
    name = spec.get("name")
    k = env.k
    eta = spec.get("eta", "auto")
    if name in ("exp3set", "hedge", "exp3"):
        if eta == "auto":
            if name == "hedge":
                total = float(horizon)
            elif name == "exp3":
                total = float(k * horizon)
            elif isinstance(env, ErdosRenyiProcess):
                total = None
                eta = er_tuned_eta(k, env.r, horizon)
            else:
                total = _total_bound(env, horizon)
            if total is not None:
                eta = exp3set_tuned_eta(k, total)
        cls = {"exp3set": Exp3Set, "hedge": Hedge, "exp3": Exp3}[name]
        return cls(k, float(eta))
    if name == "exp3dom":
        gammas = spec.get("gammas", "doubling")
        return Exp3Dom(k, None if gammas == "doubling" else [float(x) for x in gammas])
    if name == "elpp":
        delta = float(spec.get("delta", 0.1))
        if eta == "auto":
            total = _total_bound(env, horizon)
            eta = elpp_tuned_eta(k, delta, total if total is not None else float(k * horizon))
        return ElpP(k, delta, float(eta))
    raise InvalidParameter(f"unknown policy {name!r}")


# -- running ----------------------------------------------------------------


def run_one(
    policy_spec: Mapping[str, Any],
    env_spec: Mapping[str, Any],
    horizon: int,
    seed: int,
    stride: int = 100,
    disclosure: str = "auto",
) -> RegretTrace:
    """Play one repetition and return its trace of ``ceil(T / stride)`` recorded rounds.

    ``disclosure`` is ``pre`` (graph shown before acting), ``post`` (graph
    shown only with the feedback) or ``auto`` (whatever the policy needs).
    Pairing an informed policy with ``post`` or an uninformed one with ``pre``
    raises :class:`ConfigurationError`.
    """
    if horizon < 1 or stride < 1:
        raise InvalidParameter(f"horizon and stride must be positive, got {horizon}, {stride}")
    env = make_env(env_spec, make_rng(derive_seed(seed, 0)), horizon=horizon)
    if env.horizon is not None and env.horizon < horizon:
        raise ConfigurationError(f"environment provides only {env.horizon} rounds, {horizon} requested")
    policy = make_policy(policy_spec, env, horizon)
    if disclosure == "auto":
        disclosure = "pre" if policy.informed else "post"
    if disclosure not in ("pre", "post"):
        raise InvalidParameter(f"disclosure must be auto, pre or post, got {disclosure!r}")
    if policy.informed != (disclosure == "pre"):
        kind = "informed" if policy.informed else "uninformed"
        raise ConfigurationError(f"{policy.name} is {kind} but the run discloses the graph {disclosure}-action")
    prng = make_rng(derive_seed(seed, 1))
    pre = disclosure == "pre"

    n_rec = -(-horizon // stride)
    rounds = np.zeros(n_rec, dtype=np.int64)
    player_rec = np.zeros(n_rec)
    arm_rec = np.zeros((n_rec, env.k))
    player = 0.0
    arms = np.zeros(env.k)
    history: list[int] = []
    rec = 0
    for t in range(1, horizon + 1):
        graph, losses = env.emit_round(t, history)
        decision = policy.act(graph if pre else None, prng)
        a = decision.action
        revealed = np.flatnonzero(graph.observation_matrix[a])
        policy.update(RoundFeedback(a, dict(zip(revealed.tolist(), losses[revealed].tolist())), graph))
        player += losses[a]
        arms += losses
        history.append(a)
        if t % stride == 0 or t == horizon:
            rounds[rec] = t
            player_rec[rec] = player
            arm_rec[rec] = arms
            rec += 1
    return RegretTrace(rounds, player_rec, arm_rec)


def _run_rep(args) -> RegretTrace:
    config, index = args
    return run_one(
        config.policy,
        config.environment,
        config.horizon,
        derive_seed(config.seed, index),
        config.stride,
        config.disclosure,
    )


def aggregate(traces: Sequence[RegretTrace]) -> AggregateTrace:
    """Per-round mean and sample standard deviation with exactly rounded sums.

    ``math.fsum`` makes the result independent of the order of ``traces``.
    """
    if not traces:
        raise InvalidParameter("nothing to aggregate")
    rounds = traces[0].rounds
    for tr in traces:
        if not np.array_equal(tr.rounds, rounds):
            raise InvalidParameter("traces record different rounds")
    n = len(traces)
    regrets = np.array([tr.regret for tr in traces])
    players = np.array([tr.player_loss for tr in traces])
    bests = np.array([tr.best_arm_loss for tr in traces])

    def mean(col):
        return math.fsum(col) / n

    mean_regret = np.array([mean(c) for c in regrets.T])
    if n > 1:
        std = np.array([math.sqrt(math.fsum((c - m) ** 2) / (n - 1)) for c, m in zip(regrets.T, mean_regret)])
    else:
        std = np.zeros(len(rounds))
    return AggregateTrace(
        rounds=rounds.copy(),
        mean_regret=mean_regret,
        std_regret=std,
        mean_player_loss=np.array([mean(c) for c in players.T]),
        best_arm_loss=np.array([mean(c) for c in bests.T]),
        repetitions=n,
    )


def run_many(config: ExperimentConfig, workers: int | None = None) -> AggregateTrace:
    """Run all repetitions of ``config`` (in ``workers`` processes) and aggregate them.

    The result does not depend on ``workers``: each repetition's seed comes
    from its index and the aggregation is order-independent.
    """
    workers = config.workers if workers is None else int(workers)
    if workers < 1:
        raise InvalidParameter(f"workers must be positive, got {workers}")
    jobs = [(config, i) for i in range(config.repetitions)]
    if workers == 1 or config.repetitions == 1:
        traces = [_run_rep(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, config.repetitions)) as pool:
            traces = list(pool.map(_run_rep, jobs))
    return aggregate(traces)


# -- CSV --------------------------------------------------------------------


def format_csv(trace: AggregateTrace | None) -> str:
    """CSV text with a header and one row per recorded round; floats use ``repr``."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    if trace is not None:
        for row in zip(*trace.columns()):
            writer.writerow([str(int(row[0]))] + [repr(float(x)) for x in row[1:]])
    return buf.getvalue()


def emit_csv(trace: AggregateTrace | None, destination) -> None:
    """Write :func:`format_csv` output to a path or an open text stream."""
    text = format_csv(trace)
    if hasattr(destination, "write"):
        destination.write(text)
        return
    try:
        with open(destination, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write CSV to {os.fspath(destination)!r}: {exc}") from exc


def parse_csv(text: str) -> AggregateTrace:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise InvalidParameter(f"expected CSV header {','.join(CSV_COLUMNS)}")
    body = rows[1:]
    for row in body:
        if len(row) != len(CSV_COLUMNS):
            raise InvalidParameter(f"CSV row has {len(row)} columns: {row}")
    cols = list(zip(*body)) if body else [()] * len(CSV_COLUMNS)
    return AggregateTrace(
        rounds=np.array([int(x) for x in cols[0]], dtype=np.int64),
        mean_regret=np.array([float(x) for x in cols[1]]),
        std_regret=np.array([float(x) for x in cols[2]]),
        mean_player_loss=np.array([float(x) for x in cols[3]]),
        best_arm_loss=np.array([float(x) for x in cols[4]]),
    )
