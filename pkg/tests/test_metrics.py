import math

import numpy as np
import pytest

from oracle_tools import ball_project, crandn
from wnvsim.channel import FadingStreams, build_topology, init_channel, large_scale_gain, normalize_gains
from wnvsim.config import ScenarioConfig
from wnvsim.errors import DimensionError
from wnvsim.metrics import (
    dbm_to_watts,
    problem_constants,
    loss,
    noise_power_watts,
    per_cell_losses,
    per_user_rates,
    regret_and_violation,
)
from wnvsim.online_precoder import PowerBudget
from wnvsim.virtualization import build_demand, equal_share_budgets


class TestLoss:
    def test_exact_match_gives_zero(self):
        rng = np.random.default_rng(0)
        h = crandn(rng, 4, 6)
        v = crandn(rng, 6, 4)
        assert loss(h, v, h @ v) == 0.0

    def test_zero_precoder(self):
        rng = np.random.default_rng(1)
        h = crandn(rng, 4, 6)
        d = crandn(rng, 4, 4)
        assert loss(h, np.zeros((6, 4)), d) == pytest.approx(np.linalg.norm(d) ** 2, rel=1e-14)

    def test_global_equals_per_cell_sum(self):
        cfg = ScenarioConfig(cells=3, num_sps=2, users_per_sp=2, antennas_per_cell=4,
                             horizon=10, csi_delay=1, seed=2).validate()
        topo = build_topology(cfg)
        ls = normalize_gains(large_scale_gain(topo, 2), topo)
        chan = init_channel(topo, ls, FadingStreams(topo, 2))
        dem = build_demand(chan, equal_share_budgets(cfg.p_max_watts(), cfg.num_sps))
        rng = np.random.default_rng(3)
        blocks = [ball_project(crandn(rng, 4, 4), 1.0) for _ in range(3)]
        v_glob = np.zeros((12, 12), dtype=complex)
        for c in range(3):
            v_glob[c * 4:(c + 1) * 4, c * 4:(c + 1) * 4] = blocks[c]
        total = loss(chan.h, v_glob, dem.d)
        percell = per_cell_losses(chan, blocks, dem)
        assert total == pytest.approx(percell.sum(), rel=1e-10)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            loss(np.zeros((2, 3)), np.zeros((4, 2)), np.zeros((2, 2)))


class TestPerUserRates:
    def test_unit_sinr(self):
        sigma2 = 3.7e-4
        h = np.eye(4, dtype=complex)
        v = math.sqrt(sigma2) * np.eye(4, dtype=complex)
        assert np.allclose(per_user_rates(h, v, sigma2), np.ones(4), rtol=1e-12)

    def test_zero_precoder_zero_rates(self):
        rng = np.random.default_rng(4)
        h = crandn(rng, 4, 6)
        assert np.array_equal(per_user_rates(h, np.zeros((6, 4)), 1e-3), np.zeros(4))

    def test_direct_scalar_oracle(self):
        rng = np.random.default_rng(5)
        h = crandn(rng, 4, 8)
        v = crandn(rng, 8, 4)
        sigma2 = 2.5e-2
        rates = per_user_rates(h, v, sigma2)
        hv = h @ v
        for k in range(4):
            sig = abs(hv[k, k]) ** 2
            interf = sum(abs(hv[k, i]) ** 2 for i in range(4) if i != k)
            expect = math.log2(1.0 + sig / (interf + sigma2))
            assert rates[k] == pytest.approx(expect, rel=1e-12)


class TestRegretViolation:
    def test_identical_series(self):
        losses = [1.0, 2.0, 3.0]
        re, vo = regret_and_violation(losses, losses, np.zeros((3, 2)))
        assert re == 0.0
        assert np.array_equal(vo, np.zeros(2))

    def test_hand_summed_toy_series(self):
        run = [2.0, 1.5, 3.0]
        fixed = [1.0, 1.0, 1.0]
        g = np.array([[0.5, -0.2], [-0.1, 0.3], [0.2, 0.0]])
        re, vo = regret_and_violation(run, fixed, g)
        assert re == pytest.approx((2.0 - 1.0) + (1.5 - 1.0) + (3.0 - 1.0))
        assert vo[0] == pytest.approx(0.6)
        assert vo[1] == pytest.approx(0.1)

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            regret_and_violation([1.0], [1.0, 2.0], np.zeros((2, 1)))


class TestNoisePower:
    def test_default_settings(self):
        # -174 + 10*log10(15e3) + 10 = -122.239 dBm ~ 5.97e-16 W
        sigma2 = noise_power_watts(-174.0, 15e3, 10.0)
        assert 10 * math.log10(sigma2 * 1000) == pytest.approx(-122.239, abs=1e-3)
        assert sigma2 == pytest.approx(5.97e-16, rel=1e-3)

    def test_dbm_conversion(self):
        assert dbm_to_watts(33.0) == pytest.approx(1.9953, abs=1e-4)
        assert dbm_to_watts(30.0) == pytest.approx(1.0, rel=1e-12)


class TestProblemConstants:
    def test_symmetric_three_cell_hand_values(self):
        budget = PowerBudget(p_avg=[1.0] * 3, p_max=[2.0] * 3)
        consts = problem_constants(budget, b_measured=5.0, horizon=1000, tau=4)
        assert consts.diameter == pytest.approx(2.0 * math.sqrt(6.0), rel=1e-12)
        assert consts.lipschitz == pytest.approx(2.0 * math.sqrt(2.0), rel=1e-12)
        assert consts.g_bound == pytest.approx(math.sqrt(3.0), rel=1e-12)
        assert consts.slater == 1.0
        assert consts.grad_bound == pytest.approx(25.0 * 2.0 * math.sqrt(6.0), rel=1e-12)

    def test_single_cell_degenerate(self):
        budget = PowerBudget(p_avg=[1.0], p_max=[4.0])
        consts = problem_constants(budget, 2.0, 100, 1)
        assert consts.g_bound == pytest.approx(max(1.0, 3.0), rel=1e-12)

    def test_default_scenario_conversions(self):
        p_max = dbm_to_watts(33.0)
        budget = PowerBudget(p_avg=[1.0] * 3, p_max=[p_max] * 3)
        consts = problem_constants(budget, 10.0, 1000, 4)
        assert consts.lipschitz == pytest.approx(2.8251, abs=1e-4)
        assert consts.slater == 1.0

    def test_bound_values_hand_computed(self):
        budget = PowerBudget(p_avg=[1.0], p_max=[2.0])
        horizon, tau, b = 100, 2, 3.0
        consts = problem_constants(budget, b, horizon, tau)
        alpha = math.sqrt(horizon / tau)
        gamma_sq = math.sqrt(horizon)
        eta = 0.5 * consts.lipschitz * math.sqrt(horizon)
        d, g, r, eps = consts.grad_bound, consts.g_bound, consts.diameter, consts.slater
        re_expect = d * d * horizon / alpha + gamma_sq * g * g / 2 + (alpha * tau + eta) * r * r + 2 * d * r * tau
        vo_expect = 2 * g + (2 * gamma_sq * g * g + 2 * d * r + (alpha + eta) * r * r) / (gamma_sq * eps)
        assert consts.regret_bound == pytest.approx(re_expect, rel=1e-12)
        assert consts.violation_bound == pytest.approx(vo_expect, rel=1e-12)
