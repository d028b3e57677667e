import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import graphs
from graphfeedback.errors import ConfigurationError, InvalidConfiguration, InvalidParameter, ProtocolViolation
from graphfeedback.estimators import observation_probs
from graphfeedback.graphs import FeedbackGraph, GraphKind, generate, observation_set
from graphfeedback.policies import (
    ElpP,
    Exp3,
    Exp3Dom,
    Exp3Set,
    Hedge,
    RoundFeedback,
    doubling_gamma,
    elpp_beta,
    elpp_tuned_eta,
    er_tuned_eta,
    exp3set_tuned_eta,
    sample_action,
)

CLIQUE2 = generate(GraphKind.clique(), 2)


def feedback(g, action, losses):
    return RoundFeedback(action, {i: float(losses[i]) for i in observation_set(g, action)}, g)


def play(policy, g, losses, rng):
    d = policy.act(g if policy.informed else None, rng)
    policy.update(feedback(g, d.action, losses))
    return d


class TestSampling:
    def test_inverse_cdf(self):
        class Fixed:
            def __init__(self, u):
                self.u = u

            def random(self):
                return self.u

        p = np.array([0.2, 0.5, 0.3])
        assert [sample_action(p, Fixed(u)) for u in (0.0, 0.19, 0.2, 0.69, 0.7, 0.999)] == [0, 0, 1, 1, 2, 2]

    def test_one_draw_per_round(self):
        a, b = np.random.default_rng(4), np.random.default_rng(4)
        sample_action(np.full(7, 1 / 7), a)
        b.random()
        assert a.random() == b.random()


class TestExp3Set:
    def test_init_uniform(self):
        d = Exp3Set(4, 0.1).act(None, np.random.default_rng(0))
        np.testing.assert_array_equal(d.p, 0.25)

    def test_eta_domain(self):
        for eta in (0.0, 1.5, float("nan")):
            with pytest.raises(InvalidParameter):
                Exp3Set(3, eta)

    def test_clique_update_example(self):
        pol = Exp3Set(2, 0.5)
        play(pol, CLIQUE2, [1.0, 0.0], np.random.default_rng(0))
        np.testing.assert_allclose(pol.distribution(), [0.3775406688, 0.6224593312], atol=1e-9)

    def test_only_observed_change(self):
        g = FeedbackGraph(3, [(0, 1)])
        pol = Exp3Set(3, 0.3)
        d = pol.act(None, np.random.default_rng(2))
        pol.update(feedback(g, d.action, [0.5, 0.5, 0.5]))
        unobserved = set(range(3)) - observation_set(g, d.action)
        assert all(pol.log_weights[i] == 0.0 for i in unobserved)
        assert all(pol.log_weights[i] < 0.0 for i in observation_set(g, d.action))

    def test_protocol(self):
        pol = Exp3Set(2, 0.5)
        rng = np.random.default_rng(0)
        with pytest.raises(ConfigurationError):
            pol.act(CLIQUE2, rng)
        with pytest.raises(ProtocolViolation):
            pol.update(feedback(CLIQUE2, 0, [0, 0]))
        d = pol.act(None, rng)
        with pytest.raises(ProtocolViolation):
            pol.act(None, rng)
        with pytest.raises(ProtocolViolation):
            pol.update(RoundFeedback(d.action, {d.action: 0.0}, CLIQUE2))  # misses the other arm

    def test_loss_out_of_range(self):
        pol = Exp3Set(2, 0.5)
        d = pol.act(None, np.random.default_rng(0))
        with pytest.raises(ProtocolViolation):
            pol.update(RoundFeedback(d.action, {0: 2.0, 1: 0.0}, CLIQUE2))

    def test_log_space_exactness(self):
        rng = np.random.default_rng(11)
        g = generate(GraphKind.erdos_renyi(0.4), 6, rng)
        pol = Exp3Set(6, 0.05)
        total = np.zeros(6)
        for _ in range(100_000 // 20):
            d = pol.act(None, rng)
            losses = rng.random(6)
            q = observation_probs(d.p, g)
            obs = np.zeros(6, dtype=bool)
            obs[list(observation_set(g, d.action))] = True
            total += np.where(obs, losses / q, 0.0)
            pol.update(feedback(g, d.action, losses))
        np.testing.assert_allclose(pol.log_weights, -0.05 * total, rtol=1e-10)


class TestBaselines:
    def test_hedge_example(self):
        pol = Hedge(2, 0.3)
        play(pol, CLIQUE2, [1.0, 0.0], np.random.default_rng(0))
        w = np.array([math.exp(-0.3), 1.0])
        np.testing.assert_allclose(pol.distribution(), w / w.sum())

    def test_exp3_estimate(self):
        pol = Exp3(2, 0.1)
        g = generate(GraphKind.empty(), 2)
        d = pol.act(None, np.random.default_rng(0))
        pol.update(RoundFeedback(d.action, {d.action: 1.0}, g))
        expected = np.zeros(2)
        expected[d.action] = -0.1 * 2.0
        np.testing.assert_allclose(pol.log_weights, expected)

    @pytest.mark.parametrize("kind,base", [("clique", Hedge), ("empty", Exp3)])
    def test_reduction(self, kind, base):
        g = generate(GraphKind(kind), 5)
        loss_rng = np.random.default_rng(9)
        losses = loss_rng.random((2000, 5))
        a, b = Exp3Set(5, 0.05), base(5, 0.05)
        ra, rb = np.random.default_rng(1), np.random.default_rng(1)
        for row in losses:
            da, db = play(a, g, row, ra), play(b, g, row, rb)
            assert da.action == db.action
        np.testing.assert_allclose(a.log_weights, b.log_weights, rtol=1e-12)


class TestExp3Dom:
    def test_band_layout_and_doubling_init(self):
        pol = Exp3Dom(8)
        assert len(pol.bands) == 4
        assert pol.bands[0].gamma == 1.0  # sqrt(ln 8) > 1 is clamped
        assert doubling_gamma(0, 3, 8) == pytest.approx(math.sqrt(math.log(8) / 8))

    def test_fixed_gamma_domain(self):
        with pytest.raises(InvalidParameter):
            Exp3Dom(2, [0.0, 0.5])
        with pytest.raises(InvalidParameter):
            Exp3Dom(2, [0.5])

    def test_mixing_example(self):
        d = Exp3Dom(2, [0.1, 0.1]).act(CLIQUE2, np.random.default_rng(0))
        np.testing.assert_allclose(d.p, [0.55, 0.45])
        assert d.band == 0 and d.dominating_set == (0,)

    def test_band_index(self):
        pol = Exp3Dom(8)
        d = pol.act(FeedbackGraph(8, [(0, 1), (2, 3), (4, 5)]), np.random.default_rng(0))
        assert len(d.dominating_set) == 5 and d.band == 2

    def test_total_order(self):
        pol = Exp3Dom(6, [0.2, 0.2, 0.2])
        d = pol.act(generate(GraphKind.total_order(), 6), np.random.default_rng(0))
        assert d.dominating_set == (5,) and d.band == 0
        assert d.p[5] == pytest.approx(0.8 / 6 + 0.2)

    def test_restart_schedule_on_clique(self):
        pol = Exp3Dom(2)
        rng = np.random.default_rng(0)
        restarts_at = []
        for t in range(1, 60):
            play(pol, CLIQUE2, [0.3, 0.6], rng)
            band = pol.bands[0]
            if len(restarts_at) < band.restarts:
                restarts_at.append(t)
        # accumulator grows by 1.5 per round and restarts once it exceeds 2^r
        expected, t, r = [], 0, 0
        while True:
            t += math.floor(2**r / 1.5) + 1
            if t >= 60:
                break
            expected.append(t)
            r += 1
        assert restarts_at == expected
        assert pol.bands[1].updates == 0

    def test_only_active_band_updates(self):
        rng = np.random.default_rng(5)
        pol = Exp3Dom(8)
        for _ in range(200):
            g = generate(GraphKind.erdos_renyi(0.3), 8, rng)
            before = [b.log_weights.copy() for b in pol.bands]
            d = pol.act(g, rng)
            assert d.p[list(d.dominating_set)].min() >= d.gamma / len(d.dominating_set) - 1e-15
            pol.update(feedback(g, d.action, rng.random(8)))
            assert all(np.array_equal(b0, b.log_weights) for i, (b0, b) in enumerate(zip(before, pol.bands)) if i != d.band)
            assert pol.bands[d.band].accumulator <= 2 ** pol.bands[d.band].r

    def test_uninformed_call_rejected(self):
        with pytest.raises(ConfigurationError):
            Exp3Dom(2).act(None, np.random.default_rng(0))


class TestElpP:
    def test_beta_example(self):
        assert elpp_beta(10, 0.1, 0.01) == pytest.approx(0.02 * math.sqrt(math.log(500) / math.log(10)), rel=1e-14)
        assert elpp_beta(10, 0.1, 0.01) == pytest.approx(0.03286, abs=1e-5)

    def test_preconditions(self):
        with pytest.raises(InvalidParameter, match="1/\\(3k\\)"):
            ElpP(10, 0.1, 1 / 30 + 1e-6)
        with pytest.raises(InvalidParameter, match="delta"):
            ElpP(10, 1.0, 0.01)
        with pytest.raises(InvalidParameter, match="beta"):
            ElpP(2, 1e-9, 1 / 6)

    def test_gamma_on_empty_and_clique(self):
        pol = ElpP(10, 0.1, 0.01)
        d = pol.act(generate(GraphKind.empty(), 10), np.random.default_rng(0))
        assert d.gamma == pytest.approx((1 + pol.beta) * 0.01 / 0.1)
        assert d.gamma == pytest.approx(0.10329, abs=1e-5)
        np.testing.assert_allclose(d.p, (1 - d.gamma) / 10 + d.gamma * d.s)
        pol2 = ElpP(10, 0.1, 0.01)
        d2 = pol2.act(generate(GraphKind.clique(), 10), np.random.default_rng(0))
        assert d2.gamma == pytest.approx((1 + pol2.beta) * 0.01)

    def test_update_arithmetic(self):
        pol = ElpP(2, 0.5, 0.01)
        pol.beta = 0.02  # pin the bias to the worked example
        g = generate(GraphKind.empty(), 2)

        class Half:
            def random(self):
                return 0.25

        d = pol.act(g, Half())
        assert d.p == pytest.approx([0.5, 0.5])
        pol.update(RoundFeedback(d.action, {d.action: 1.0}, g))
        np.testing.assert_allclose(pol.log_weights, [0.0004, 0.0004])

    def test_gamma_guard(self):
        pol = ElpP(3, 0.5, 0.01)
        pol.eta = 0.2  # outside the admissible range on purpose
        with pytest.raises(InvalidConfiguration):
            pol.act(generate(GraphKind.empty(), 3), np.random.default_rng(0))

    @settings(max_examples=60, deadline=None)
    @given(graphs(min_k=2, max_k=8), st.integers(0, 2**32 - 1))
    def test_observation_floor(self, g, seed):
        rng = np.random.default_rng(seed)
        pol = ElpP(g.k, 0.1, elpp_tuned_eta(g.k, 0.1, 1.0))
        for _ in range(5):
            d = pol.act(g, rng)
            q = observation_probs(d.p, g)
            assert q.min() >= (1 + pol.beta) * pol.eta * (1 - 1e-12)
            assert np.all(pol.eta * (1 + pol.beta) / q <= 1 + 1e-12)
            assert abs(d.p.sum() - 1) <= 1e-9 and d.p.min() >= 0
            pol.update(feedback(g, d.action, rng.random(g.k)))


class TestTuning:
    def test_exp3set(self):
        assert exp3set_tuned_eta(10, 5 * 1000) == pytest.approx(math.sqrt(2 * math.log(10) / 5000))
        assert exp3set_tuned_eta(10, 1) == 1.0
        assert exp3set_tuned_eta(1, 100) == 1.0

    def test_er(self):
        k, r, T = 10, 0.5, 1000
        assert er_tuned_eta(k, r, T) == pytest.approx(math.sqrt(2 * r * math.log(k) / (T * (1 - 0.5**10))))

    def test_elpp(self):
        k, delta, total = 10, 0.1, 10 * 20000
        eta = elpp_tuned_eta(k, delta, total)
        assert eta == pytest.approx(math.sqrt(math.sqrt(math.log(500) * math.log(10)) / (6 * total)))
        small = elpp_tuned_eta(k, delta, 1.0)
        assert small <= 1 / 30 and elpp_beta(k, delta, small) <= 0.25
        ElpP(k, delta, small)


@settings(max_examples=40, deadline=None)
@given(graphs(min_k=1, max_k=8), st.integers(0, 2**32 - 1))
def test_distributions_valid_for_all_policies(g, seed):
    rng = np.random.default_rng(seed)
    k = g.k
    pols = [Exp3Set(k, 0.5), Hedge(k, 0.5), Exp3(k, 0.5), Exp3Dom(k), ElpP(k, 0.1, elpp_tuned_eta(k, 0.1, 1.0))]
    for _ in range(10):
        losses = rng.random(k)
        for pol in pols:
            d = play(pol, g, losses, rng)
            assert np.all(d.p >= 0) and abs(d.p.sum() - 1) <= 1e-9
