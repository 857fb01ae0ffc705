import math

import numpy as np
import pytest

from pragmachine import rsa
from pragmachine.validation import DataError

UNIFORM2 = rsa.uniform_prior(2)
ZERO2 = np.zeros(2)

# Hand-derived scalar implicature chain (2 meanings x 2 utterances, alpha=1,
# no costs): l0 rows (0.5, 0.5) and (0, 1); s1 rows (1, 0) and (1/3, 2/3);
# l1 row for the shared utterance (3/4, 1/4). Objective values were
# re-derived by brute-force summation before being frozen here.
SCALAR_G1 = -0.0566
SCALAR_F1 = 0.6931


def scalar_chain(scalar_values):
    l0 = rsa.literal_listener(scalar_values, UNIFORM2)
    s1 = rsa.am_speaker_step(l0, ZERO2, 1.0)
    l1 = rsa.am_listener_step(s1, UNIFORM2)
    return l0, s1, l1


class TestLiteralListener:
    def test_scalar_implicature_rows(self, scalar_values):
        l0 = rsa.literal_listener(scalar_values, UNIFORM2)
        np.testing.assert_allclose(l0[0], [0.5, 0.5])
        np.testing.assert_allclose(l0[1], [0.0, 1.0])

    def test_constant_lexicon_gives_uniform(self):
        values = np.full((3, 4), 0.37)
        l0 = rsa.literal_listener(values, rsa.uniform_prior(3))
        np.testing.assert_allclose(l0, np.full((4, 3), 1.0 / 3.0))

    def test_degenerate_prior(self):
        values = np.array([[0.2, 0.8], [0.5, 0.5]])
        l0 = rsa.literal_listener(values, np.array([1.0, 0.0]))
        np.testing.assert_allclose(l0, [[1.0, 0.0], [1.0, 0.0]])

    def test_empty_extension_is_an_error(self):
        values = np.array([[0.5, 0.0], [0.5, 0.0]])
        with pytest.raises(DataError, match="empty extension"):
            rsa.literal_listener(values, UNIFORM2)


class TestBaseSpeaker:
    def test_zero_cost_constant_lexicon_uniform(self):
        s0 = rsa.base_speaker(np.full((3, 5), 0.2), np.zeros(5))
        np.testing.assert_allclose(s0, np.full((3, 5), 0.2))

    def test_cost_reweighting(self):
        values = np.full((1, 2), 0.7)
        s0 = rsa.base_speaker(values, np.array([0.0, math.log(2.0)]))
        np.testing.assert_allclose(s0[0], [2.0 / 3.0, 1.0 / 3.0])

    def test_direct_normalization(self):
        s0 = rsa.base_speaker(np.array([[0.9, 0.1]]), np.zeros(2))
        np.testing.assert_allclose(s0[0], [0.9, 0.1])


class TestAmSpeakerStep:
    def test_alpha_zero_is_uniform(self, scalar_values):
        l0 = rsa.literal_listener(scalar_values, UNIFORM2)
        s = rsa.am_speaker_step(l0, np.array([3.0, 0.1]), 0.0)
        np.testing.assert_array_equal(s, np.full((2, 2), 0.5))

    def test_scalar_implicature_s1(self, scalar_values):
        _, s1, _ = scalar_chain(scalar_values)
        np.testing.assert_allclose(s1[0], [1.0, 0.0])
        np.testing.assert_allclose(s1[1], [1.0 / 3.0, 2.0 / 3.0])

    def test_large_alpha_sharpens_to_argmax(self, scalar_values):
        l0 = rsa.literal_listener(scalar_values, UNIFORM2)
        s = rsa.am_speaker_step(l0, ZERO2, 64.0)
        assert s[1, 1] > 1.0 - 1e-9
        assert s[1, 0] < 1e-9

    def test_zero_listener_entry_gets_zero_weight(self, scalar_values):
        _, s1, _ = scalar_chain(scalar_values)
        assert s1[0, 1] == 0.0

    def test_unreachable_meaning_is_an_error(self):
        listener = np.array([[0.0, 1.0], [0.0, 1.0]])
        with pytest.raises(DataError, match="meaning unreachable"):
            rsa.am_speaker_step(listener, ZERO2, 1.0)


class TestAmListenerStep:
    def test_scalar_implicature_l1(self, scalar_values):
        _, _, l1 = scalar_chain(scalar_values)
        np.testing.assert_allclose(l1[0], [0.75, 0.25])

    def test_uniform_speaker_returns_prior(self):
        prior = np.array([0.2, 0.3, 0.5])
        speaker = np.full((3, 4), 0.25)
        l = rsa.am_listener_step(speaker, prior)
        np.testing.assert_allclose(l, np.tile(prior, (4, 1)))

    def test_deterministic_speaker_inverts(self):
        speaker = np.array([[1.0, 0.0], [0.0, 1.0]])
        l = rsa.am_listener_step(speaker, UNIFORM2)
        np.testing.assert_allclose(l, [[1.0, 0.0], [0.0, 1.0]])

    def test_unproduced_utterance_falls_back_to_prior(self):
        prior = np.array([0.6, 0.4])
        speaker = np.array([[1.0, 0.0], [1.0, 0.0]])
        l = rsa.am_listener_step(speaker, prior)
        np.testing.assert_allclose(l[1], prior)


class TestRunAm:
    def test_depth_one_reproduces_hand_chain(self, scalar_values):
        res = rsa.run_am(scalar_values, UNIFORM2, ZERO2, rsa.RsaConfig(alpha=1.0, t=1, use_cost=False))
        _, s1, l1 = scalar_chain(scalar_values)
        np.testing.assert_allclose(res.speaker, s1)
        np.testing.assert_allclose(res.listener, l1)
        assert len(res.trace) == 2

    def test_t_must_be_positive(self, scalar_values):
        with pytest.raises(ValueError):
            rsa.run_am(scalar_values, UNIFORM2, ZERO2, rsa.RsaConfig(alpha=1.0, t=0))

    def test_tuned_defaults_accepted(self, scalar_values):
        cfg = rsa.RsaConfig()
        assert cfg.alpha == 1.17 and cfg.t == 1 and cfg.use_cost
        res = rsa.run_am(scalar_values + 0.01, rsa.uniform_prior(2), np.array([0.1, 0.9]), cfg)
        assert res.speaker.shape == (2, 2)

    def test_trace_non_decreasing_on_random_instances(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            values = rng.uniform(0.01, 1.0, size=(3, 5))
            kappa = rng.uniform(0.0, 2.0, size=5)
            alpha = float(rng.choice([0.5, 1.0, 1.17, 2.0]))
            use_cost = bool(rng.integers(2))
            res = rsa.run_am(values, rsa.uniform_prior(3), kappa,
                             rsa.RsaConfig(alpha=alpha, t=5, use_cost=use_cost))
            g = [t.g_alpha for t in res.trace]
            assert all(g[i + 1] >= g[i] - 1e-9 for i in range(len(g) - 1))


class TestObjectives:
    def test_uniform_2x2_closed_form(self):
        s = np.full((2, 2), 0.5)
        l = np.full((2, 2), 0.5)
        for alpha in (0.0, 0.7, 1.0, 2.5):
            rep = rsa.objective_le(s, l, UNIFORM2, ZERO2, alpha, use_cost=False)
            assert rep.h_u_given_m == pytest.approx(math.log(2.0))
            assert rep.expected_utility == pytest.approx(-math.log(2.0))
            assert rep.g_alpha == pytest.approx((1.0 - alpha) * math.log(2.0))

    def test_scalar_implicature_frozen_values(self, scalar_values):
        _, s1, l1 = scalar_chain(scalar_values)
        rep = rsa.objective_le(s1, l1, UNIFORM2, ZERO2, 1.0, use_cost=False)
        assert rep.g_alpha == pytest.approx(SCALAR_G1, abs=1e-3)
        assert rep.h_u_given_m == pytest.approx(0.3183, abs=1e-3)
        assert rep.expected_utility == pytest.approx(-0.3749, abs=1e-3)
        rep_rd = rsa.objective_rd(s1, l1, UNIFORM2, ZERO2, 1.0, use_cost=False)
        assert rep_rd.f_alpha == pytest.approx(SCALAR_F1, abs=1e-3)

    def test_alpha_zero_reduces_to_entropy(self, scalar_values):
        _, s1, l1 = scalar_chain(scalar_values)
        rep = rsa.objective_le(s1, l1, UNIFORM2, ZERO2, 0.0, use_cost=False)
        assert rep.g_alpha == rep.h_u_given_m

    def test_uniform_speaker_zero_information(self):
        s = np.full((2, 3), 1.0 / 3.0)
        l = np.full((3, 2), 0.5)
        rep = rsa.objective_rd(s, l, UNIFORM2, np.zeros(3), 1.3, use_cost=False)
        assert rep.i_mu == pytest.approx(0.0, abs=1e-15)
        assert rep.f_alpha == pytest.approx(-1.3 * rep.expected_utility)

    def test_deterministic_speaker_one_bit(self):
        s = np.array([[1.0, 0.0], [0.0, 1.0]])
        l = np.array([[1.0, 0.0], [0.0, 1.0]])
        rep = rsa.objective_rd(s, l, UNIFORM2, ZERO2, 1.0, use_cost=False)
        assert rep.i_mu == pytest.approx(math.log(2.0))

    def test_le_rd_identity(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            s = rng.dirichlet(np.ones(4), size=3)
            l = rng.dirichlet(np.ones(3), size=4)
            kappa = rng.uniform(0.0, 2.0, size=4)
            alpha = float(rng.uniform(0.0, 3.0))
            use_cost = bool(rng.integers(2))
            prior = rng.dirichlet(np.ones(3))
            le = rsa.objective_le(s, l, prior, kappa, alpha, use_cost)
            rd = rsa.objective_rd(s, l, prior, kappa, alpha, use_cost)
            assert le.g_alpha + rd.f_alpha == pytest.approx(le.h_u_given_m + le.i_mu, rel=1e-12)

    def test_neg_inf_when_speaker_hits_zero_listener(self):
        s = np.array([[1.0, 0.0], [0.0, 1.0]])
        l = np.array([[0.0, 1.0], [0.0, 1.0]])  # listener never picks meaning 0
        rep = rsa.objective_le(s, l, UNIFORM2, ZERO2, 1.0, use_cost=False)
        assert rep.expected_utility == float("-inf")
        assert rep.g_alpha == float("-inf")

    def test_shape_mismatch(self):
        with pytest.raises(DataError):
            rsa.objective_le(np.full((2, 3), 1 / 3), np.full((2, 3), 1 / 3), UNIFORM2,
                             np.zeros(3), 1.0)

    def test_report_round_trip(self, scalar_values):
        _, s1, l1 = scalar_chain(scalar_values)
        rep = rsa.objective_le(s1, l1, UNIFORM2, ZERO2, 1.17)
        again = rsa.ObjectiveReport.from_dict(rep.to_dict())
        assert again == rep


class TestStructuralInvariants:
    def test_row_stochastic_everywhere(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            values = rng.uniform(0.01, 1.0, size=(3, 6))
            kappa = rng.uniform(0.0, 2.0, size=6)
            res = rsa.run_am(values, rsa.uniform_prior(3), kappa,
                             rsa.RsaConfig(alpha=1.17, t=3))
            for mat in (res.speaker, res.listener):
                np.testing.assert_allclose(mat.sum(axis=1), 1.0, rtol=0, atol=1e-12)
                assert np.all(mat >= 0.0)

    def test_lexicon_scaling_invariance(self):
        rng = np.random.default_rng(4)
        values = rng.uniform(0.01, 1.0, size=(3, 5))
        kappa = rng.uniform(0.0, 1.0, size=5)
        prior = rsa.uniform_prior(3)
        cfg = rsa.RsaConfig(alpha=1.17, t=2)
        base = rsa.run_am(values, prior, kappa, cfg)
        scaled = rsa.run_am(values * 7.3, prior, kappa, cfg)
        np.testing.assert_allclose(scaled.speaker, base.speaker, atol=1e-12)
        np.testing.assert_allclose(scaled.listener, base.listener, atol=1e-12)
        np.testing.assert_allclose(
            rsa.literal_listener(values * 7.3, prior), rsa.literal_listener(values, prior),
            atol=1e-12)
        np.testing.assert_allclose(
            rsa.base_speaker(values * 7.3, kappa), rsa.base_speaker(values, kappa), atol=1e-12)

    def test_identical_meanings_stay_identical(self):
        rng = np.random.default_rng(5)
        values = rng.uniform(0.05, 1.0, size=(3, 5))
        values[2] = values[0]
        res = rsa.run_am(values, rsa.uniform_prior(3), np.zeros(5),
                         rsa.RsaConfig(alpha=1.5, t=4))
        np.testing.assert_allclose(res.speaker[0], res.speaker[2], atol=1e-12)
