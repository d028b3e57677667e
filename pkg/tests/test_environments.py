import math
import warnings

import numpy as np
import pytest

from graphfeedback.environments import (
    EndOfStream,
    LowerBoundAdversary,
    default_epsilon,
    format_replay,
    gap_means,
    graph_from_spec,
    make_env,
    parse_replay,
)
from graphfeedback.errors import InvalidParameter, ProtocolViolation
from graphfeedback.graphs import FeedbackGraph, GraphKind, generate, independence_number, observation_set


def rng(seed=0):
    return np.random.default_rng(seed)


def test_bernoulli_gap_example():
    env = make_env({"kind": "bernoulli_gap", "means": gap_means(10)}, rng())
    assert env.means[0] == 0.4 and np.allclose(env.means[1:], 0.6, rtol=0, atol=1e-15)
    assert int(np.argmin(env.means)) == 0


def test_bernoulli_means_monte_carlo():
    means = [0.1, 0.5, 0.9]
    env = make_env({"kind": "bernoulli_gap", "means": means, "graph": {"kind": "clique"}}, rng(3))
    n = 100_000
    total = np.zeros(3)
    history = []
    for t in range(1, n + 1):
        g, losses = env.emit_round(t, history)
        total += losses
        history.append(0)
    emp = total / n
    se = np.sqrt(np.array(means) * (1 - np.array(means)) / n)
    assert np.all(np.abs(emp - means) <= 3 * se)


def test_means_validated():
    with pytest.raises(InvalidParameter):
        make_env({"kind": "bernoulli_gap", "means": [0.2, 1.2]}, rng())
    with pytest.raises(InvalidParameter):
        make_env({"kind": "nope"}, rng())


def test_lower_bound_epsilon_default():
    eps = default_epsilon(10, 10_000)
    assert eps == pytest.approx(1 / (8 * math.sqrt(2 * math.log(4 / 3) * 1000)), rel=1e-14)
    assert eps == pytest.approx(0.005211, abs=1e-6)
    env = make_env({"kind": "lower_bound", "k": 10, "graph": {"kind": "empty"}}, rng(), horizon=10_000)
    assert env.epsilon == eps and len(env.independent_set) == 10


def test_lower_bound_losses():
    # path 0-1-2-3-4 (symmetric): maximum independent set {0, 2, 4}
    g = generate(GraphKind.symmetric([(0, 1), (1, 2), (2, 3), (3, 4)]), 5)
    env = LowerBoundAdversary(g, 5000, rng(1))
    members = set(env.independent_set)
    assert len(members) == independence_number(g) == 3
    assert env.hidden_arm in members
    for i in members:
        assert observation_set(g, i) & members == {i}
    total = np.zeros(5)
    for t in range(1, 5001):
        _, losses = env.emit_round(t, [0] * (t - 1))
        assert np.all(losses[[i for i in range(5) if i not in members]] == 1.0)
        total += losses
    others = [i for i in members if i != env.hidden_arm]
    assert np.all(np.abs(total[others] / 5000 - 0.5) < 0.03)


def test_lower_bound_warning_and_epsilon_domain():
    with pytest.warns(UserWarning, match="0.0064"):
        LowerBoundAdversary(generate(GraphKind.empty(), 20), 10, rng())
    with pytest.raises(InvalidParameter):
        LowerBoundAdversary(generate(GraphKind.empty(), 3), 1000, rng(), epsilon=0.5)


def test_er_process_clique_at_r_one():
    env = make_env({"kind": "erdos_renyi_process", "r": 1.0, "losses": {"k": 4}}, rng())
    clique = generate(GraphKind.clique(), 4)
    history = []
    for t in range(1, 20):
        g, _ = env.emit_round(t, history)
        assert g == clique
        history.append(0)


def test_memo_and_order():
    env = make_env({"kind": "bernoulli_gap", "k": 5}, rng())
    a = env.emit_round(1, [])
    assert env.emit_round(1, []) is a
    with pytest.raises(ProtocolViolation):
        env.emit_round(3, [0, 0])
    with pytest.raises(ProtocolViolation):
        env.emit_round(2, [])
    env.emit_round(2, [0])
    with pytest.raises(ProtocolViolation):
        env.emit_round(1, [])


def test_determinism_under_seed():
    spec = {"kind": "erdos_renyi_process", "r": 0.3, "losses": {"means": [0.2, 0.4, 0.6, 0.8]}}
    a, b = make_env(spec, rng(8)), make_env(spec, rng(8))
    for t in range(1, 50):
        ga, la = a.emit_round(t, [0] * (t - 1))
        gb, lb = b.emit_round(t, [0] * (t - 1))
        assert ga == gb and np.array_equal(la, lb)


def test_replay_round_trip(tmp_path):
    rounds = [
        (FeedbackGraph(3, [(0, 1)]), [0.1, 0.2, 0.3]),
        (FeedbackGraph(3), [1.0, 0.0, 0.5]),
        (FeedbackGraph(3, [(2, 0), (2, 1)]), [0.0, 0.0, 0.0]),
    ]
    path = tmp_path / "r.txt"
    path.write_text(format_replay(rounds))
    env = make_env({"kind": "replay", "path": str(path)}, rng())
    assert env.horizon == 3
    for t, (g, losses) in enumerate(rounds, 1):
        eg, el = env.emit_round(t, [0] * (t - 1))
        assert eg == g and el.tolist() == losses
    with pytest.raises(EndOfStream):
        env.emit_round(4, [0, 0, 0])


def test_replay_parse_errors():
    with pytest.raises(InvalidParameter):
        parse_replay("K 2\n0 1\n---\n0 0\n")
    with pytest.raises(InvalidParameter):
        parse_replay("K 2\nT 1\n0 1\n0.5 0.5\n")
    with pytest.raises(InvalidParameter):
        parse_replay("K 2\nT 1\n---\n0.5 1.5\n")
    assert len(parse_replay("# c\nK 2\nT 1\n0 1\n---\n0.5 0.5\n")) == 1


def test_graph_specs(tmp_path):
    assert graph_from_spec({"kind": "disjoint_cliques", "parts": 5}, 10).num_arcs == 10
    assert independence_number(graph_from_spec({"kind": "disjoint_cliques", "parts": 5}, 10)) == 5
    p = tmp_path / "g.txt"
    p.write_text("K 3\n0 1\n")
    assert graph_from_spec({"kind": "file", "path": str(p)}, 3).arcs == [(0, 1)]
    with pytest.raises(InvalidParameter):
        graph_from_spec({"kind": "file", "path": str(p)}, 4)
