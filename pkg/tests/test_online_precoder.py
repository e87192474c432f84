import math

import numpy as np
import pytest

from oracle_tools import (
    ball_project,
    cell_objective,
    crandn,
    pg_minimize_cell,
    random_cell_instance,
)
from wnvsim.channel import FadingStreams, build_topology, init_channel, large_scale_gain, normalize_gains
from wnvsim.config import ScenarioConfig
from wnvsim.errors import DimensionError, InvariantError
from wnvsim.online_precoder import (
    AlgoParams,
    PowerBudget,
    constraint_lipschitz,
    distributed_step,
    init_precoders,
    local_gradient,
    precoder_update,
    queue_update,
    schedule_params,
)
from wnvsim.virtualization import build_demand, equal_share_budgets


class TestScheduleParams:
    def test_default_horizon(self):
        # p_max = 33 dBm = 1.9953 W -> lipschitz 2.8251
        beta = constraint_lipschitz([10 ** 3.3 / 1000.0])
        p = schedule_params(1000, 4, beta)
        assert p.alpha == pytest.approx(15.8114, abs=1e-4)
        assert p.gamma == pytest.approx(5.6234, abs=1e-4)
        assert p.eta == pytest.approx(44.67, abs=0.01)

    def test_horizon_equals_delay(self):
        p = schedule_params(16, 16, 1.0)
        assert p.alpha == 1.0

    def test_unit_delay(self):
        p = schedule_params(10_000, 1, 1.0)
        assert p.alpha == 100.0
        assert p.gamma == pytest.approx(10.0, rel=1e-12)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            schedule_params(10, 20, 1.0)
        with pytest.raises(ValueError):
            schedule_params(10, 2, 0.0)


class TestInitPrecoders:
    def test_exact_average_power(self):
        budget = PowerBudget(p_avg=[1.0, 0.5], p_max=[2.0, 1.0])
        sets = init_precoders(budget, tau=4, dims=[(8, 4), (6, 2)])
        assert [s.t for s in sets] == [1, 2, 3, 4]
        for s in sets:
            for c, p_avg in enumerate([1.0, 0.5]):
                assert abs(s.cell_power(c) - p_avg) <= 1e-12
                # zero long-term slack by construction
                assert abs(s.cell_power(c) - p_avg) <= 1e-12 * p_avg
            assert np.array_equal(s.queues, np.zeros(2))

    def test_global_matrix_block_diagonal(self):
        budget = PowerBudget(p_avg=[1.0, 1.0], p_max=[2.0, 2.0])
        s = init_precoders(budget, 1, [(3, 2), (4, 1)])[0]
        g = s.global_matrix()
        assert g.shape == (7, 3)
        assert np.all(g[:3, 2:] == 0)
        assert np.all(g[3:, :2] == 0)


class TestLocalGradient:
    def test_stationary_point(self):
        rng = np.random.default_rng(0)
        h = crandn(rng, 4, 6)
        v = crandn(rng, 6, 3)
        d = h @ v
        assert np.linalg.norm(local_gradient(h, v, d)) <= 1e-12

    def test_zero_channel(self):
        assert np.all(local_gradient(np.zeros((4, 6)), np.ones((6, 3)), np.zeros((4, 3))) == 0)

    def test_finite_difference_oracle(self):
        rng = np.random.default_rng(1)
        h = crandn(rng, 3, 4)
        v = crandn(rng, 4, 2)
        d = crandn(rng, 3, 2)
        grad = local_gradient(h, v, d)

        def f(vv):
            return np.linalg.norm(h @ vv - d) ** 2

        eps = 1e-6
        for i in range(4):
            for j in range(2):
                e = np.zeros((4, 2), dtype=complex)
                e[i, j] = 1.0
                d_re = (f(v + eps * e) - f(v - eps * e)) / (2 * eps)
                d_im = (f(v + 1j * eps * e) - f(v - 1j * eps * e)) / (2 * eps)
                assert d_re == pytest.approx(2.0 * grad[i, j].real, rel=1e-5, abs=1e-7)
                assert d_im == pytest.approx(2.0 * grad[i, j].imag, rel=1e-5, abs=1e-7)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            local_gradient(np.zeros((3, 4)), np.zeros((5, 2)), np.zeros((3, 2)))


class TestQueueUpdate:
    def test_direct_evaluations(self):
        assert queue_update(0.0, -0.5, 2.0) == 1.0
        assert queue_update(3.0, 0.5, 2.0) == 4.0
        assert queue_update(0.0, 0.0, 7.3) == 0.0

    def test_invariants_randomized(self):
        rng = np.random.default_rng(2)
        q = 0.0
        for _ in range(1000):
            g = rng.normal()
            gamma = rng.uniform(0.1, 5.0)
            q = queue_update(q, g, gamma)
            assert q >= 0.0
            assert q >= -gamma * g - 1e-15

    def test_rejects_negative_queue(self):
        with pytest.raises(InvariantError):
            queue_update(-1.0, 0.0, 1.0)


def params(alpha, eta, gamma, tau=1, horizon=10):
    return AlgoParams(alpha=alpha, eta=eta, gamma=gamma, tau=tau, horizon=horizon)


class TestPrecoderUpdate:
    def test_fixed_point(self):
        rng = np.random.default_rng(3)
        v = crandn(rng, 4, 2)
        out = precoder_update(np.zeros((4, 2)), v, v, 0.0, 0.0, params(2.0, 3.0, 1.0), 1e9)
        assert np.allclose(out, v, rtol=1e-14, atol=0)

    def test_projection_boundary(self):
        rng = np.random.default_rng(4)
        inst = random_cell_instance(rng, 3, 2, 6)
        grad = 50.0 * crandn(rng, 3, 2)  # force a long step
        out = precoder_update(grad, inst["v_dly"], inst["v_prev"], inst["q"], inst["g_prev"],
                              params(inst["alpha"], inst["eta"], inst["gamma"]), inst["p_max"])
        assert np.linalg.norm(out) ** 2 == pytest.approx(inst["p_max"], abs=1e-12)

    def test_matches_projected_gradient_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(5):
            inst = random_cell_instance(rng, 2, 2, 2)
            grad = local_gradient(inst["h"][:, :2], inst["v_dly"], inst["d"])
            pars = params(inst["alpha"], inst["eta"], inst["gamma"])
            closed = precoder_update(grad, inst["v_dly"], inst["v_prev"], inst["q"],
                                     inst["g_prev"], pars, inst["p_max"])
            oracle = pg_minimize_cell(grad, inst["v_dly"], inst["v_prev"], inst["q"],
                                      inst["g_prev"], inst["alpha"], inst["eta"],
                                      inst["gamma"], inst["p_max"])
            assert np.linalg.norm(closed - oracle) <= 1e-6 * (1.0 + np.linalg.norm(closed))
            # and it does at least as well on the actual objective
            jc = cell_objective(closed, grad, inst["v_dly"], inst["v_prev"], inst["q"],
                                inst["g_prev"], inst["alpha"], inst["eta"], inst["gamma"],
                                inst["p_avg"])
            jo = cell_objective(oracle, grad, inst["v_dly"], inst["v_prev"], inst["q"],
                                inst["g_prev"], inst["alpha"], inst["eta"], inst["gamma"],
                                inst["p_avg"])
            assert jc <= jo + 1e-9 * (1 + abs(jo))

    def test_kkt_conditions(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            inst = random_cell_instance(rng, 3, 2, 6)
            grad = 10.0 * crandn(rng, 3, 2) if rng.random() < 0.5 else 0.01 * crandn(rng, 3, 2)
            pars = params(inst["alpha"], inst["eta"], inst["gamma"])
            out = precoder_update(grad, inst["v_dly"], inst["v_prev"], inst["q"],
                                  inst["g_prev"], pars, inst["p_max"])
            denom = pars.gamma * inst["q"] + pars.gamma ** 2 * inst["g_prev"] + pars.alpha + pars.eta
            numer = pars.alpha * inst["v_dly"] + pars.eta * inst["v_prev"] - grad
            x_norm = np.linalg.norm(numer) / denom
            if x_norm ** 2 > inst["p_max"]:
                lam = denom * (x_norm / math.sqrt(inst["p_max"]) - 1.0)
                assert lam > 0
            else:
                lam = 0.0
            # primal feasibility, complementary slackness, stationarity
            assert np.linalg.norm(out) ** 2 <= inst["p_max"] + 1e-9
            assert abs(lam * (np.linalg.norm(out) ** 2 - inst["p_max"])) <= 1e-9
            resid = (denom + lam) * out - numer
            assert np.linalg.norm(resid) <= 1e-8 * (1.0 + np.linalg.norm(numer))

    def test_nonpositive_denominator_aborts(self):
        with pytest.raises(InvariantError):
            precoder_update(np.zeros((2, 2)), np.zeros((2, 2)), np.zeros((2, 2)),
                            0.0, -100.0, params(1.0, 1.0, 2.0), 1.0)


def small_scenario(seed=0, cells=3):
    cfg = ScenarioConfig(cells=cells, num_sps=2, users_per_sp=2, antennas_per_cell=4,
                         horizon=12, csi_delay=2, seed=seed).validate()
    topo = build_topology(cfg)
    ls = normalize_gains(large_scale_gain(topo, seed), topo)
    streams = FadingStreams(topo, seed)
    chan = init_channel(topo, ls, streams)
    dem = build_demand(chan, equal_share_budgets(cfg.p_max_watts(), cfg.num_sps))
    budget = PowerBudget(p_avg=cfg.p_avg_watts(), p_max=cfg.p_max_watts())
    return cfg, topo, chan, dem, budget


class TestDistributedStep:
    def test_single_cell_reduces_to_one_update(self):
        cfg, topo, chan, dem, budget = small_scenario(seed=7, cells=1)
        pars = schedule_params(cfg.horizon, 1, constraint_lipschitz(budget.p_max))
        pars = AlgoParams(alpha=pars.alpha, eta=pars.eta, gamma=pars.gamma, tau=1,
                          horizon=cfg.horizon)
        dims = [(4, 4)]
        init = init_precoders(budget, 1, dims)[0]
        stepped = distributed_step(chan, dem, init, init, pars, budget)
        grad = local_gradient(chan.local(0), init.v[0], dem.embedded(0))
        direct = precoder_update(grad, init.v[0], init.v[0], 0.0,
                                 init.cell_power(0) - budget.p_avg[0], pars,
                                 float(budget.p_max[0]))
        assert np.array_equal(stepped.v[0], direct)

    def test_cell_order_independence(self):
        cfg, topo, chan, dem, budget = small_scenario(seed=8)
        pars = AlgoParams(alpha=3.0, eta=2.0, gamma=1.5, tau=1, horizon=cfg.horizon)
        init = init_precoders(budget, 1, [(4, 4)] * 3)[0]
        stepped = distributed_step(chan, dem, init, init, pars, budget)
        # recompute each cell independently, in reverse order
        for c in reversed(range(3)):
            grad = local_gradient(chan.local(c), init.v[c], dem.embedded(c))
            direct = precoder_update(grad, init.v[c], init.v[c], 0.0,
                                     init.cell_power(c) - budget.p_avg[c], pars,
                                     float(budget.p_max[c]))
            assert np.array_equal(stepped.v[c], direct)

    def test_queue_advances_with_new_slack(self):
        cfg, topo, chan, dem, budget = small_scenario(seed=9)
        pars = AlgoParams(alpha=3.0, eta=2.0, gamma=1.5, tau=1, horizon=cfg.horizon)
        init = init_precoders(budget, 1, [(4, 4)] * 3)[0]
        stepped = distributed_step(chan, dem, init, init, pars, budget)
        for c in range(3):
            g_new = stepped.cell_power(c) - budget.p_avg[c]
            assert stepped.queues[c] == pytest.approx(
                max(-pars.gamma * g_new, 0.0 + pars.gamma * g_new), abs=1e-14)
            assert stepped.queues[c] >= 0
        assert stepped.t == init.t + 1

    def test_misaligned_history_rejected(self):
        cfg, topo, chan, dem, budget = small_scenario(seed=10)
        pars = AlgoParams(alpha=1.0, eta=1.0, gamma=1.0, tau=3, horizon=cfg.horizon)
        init = init_precoders(budget, 1, [(4, 4)] * 3)[0]
        with pytest.raises(InvariantError):
            distributed_step(chan, dem, init, init, pars, budget)  # tau=3 but data is t-1
