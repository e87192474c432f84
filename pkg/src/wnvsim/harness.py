"""Experiment orchestration: delay buffer, slot loop, sweeps, file outputs.

The loop generates the channel and the SPs' demand from the current slot,
but the algorithms only ever see the delay buffer's (channel, demand) pair
from ``csi_delay`` slots ago; scoring always uses the current slot. Runs are
a pure function of (config, seed): all randomness flows through per-purpose
substreams and the loop is sequential.
"""

from __future__ import annotations

import json
import math
import os
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from . import baselines, metrics
from .channel import (
    ChannelState,
    FadingStreams,
    build_topology,
    init_channel,
    large_scale_gain,
    normalize_gains,
    read_trace,
    replay_channel,
    step_channel,
    write_trace,
)
from .config import ScenarioConfig, config_as_dict
from .errors import (
    ConfigValidationError,
    InvariantError,
    OutputError,
    ZeroDemandError,
)
from .online_precoder import (
    PowerBudget,
    PrecoderSet,
    constraint_lipschitz,
    distributed_step,
    init_precoders,
    local_gradient,
    schedule_params,
)
from .virtualization import build_demand, equal_share_budgets

ALGO_CHOICES = ("proposed", "saddle", "fdzf", "all")
SWEEP_AXES = {
    "tau": "csi_delay",
    "p_bar_dbm": "p_avg_dbm",
    "n_c": "antennas_per_cell",
    "T": "horizon",
}


class DelayBuffer:
    """Ring of the last tau (channel, demand) pairs; the algorithms' only CSI access.

    Every exposure is logged as (current slot, exposed slot) so causality can
    be audited after a run.
    """

    def __init__(self, tau: int):
        self.tau = tau
        self._ring: deque = deque(maxlen=tau)
        self.access_log: list[tuple[int, int]] = []

    def push(self, channel: ChannelState, demand) -> None:
        self._ring.append((channel, demand))

    def delayed(self, now: int):
        if len(self._ring) < self.tau:
            raise InvariantError(f"delay buffer not warm at slot {now}")
        channel, demand = self._ring[0]
        if channel.t != now - self.tau:
            raise InvariantError(
                f"buffer head is slot {channel.t}, expected {now - self.tau}"
            )
        self.access_log.append((now, channel.t))
        return channel, demand


@dataclass
class RunRecord:
    """One CSV row: per-slot metrics for one algorithm."""

    t: int
    algorithm: str
    f_t: float
    f_bar: float
    p_inst: tuple
    p_bar_run: float
    queues: tuple
    g: tuple
    vo: tuple
    re: float
    r_bar: float


@dataclass
class ExperimentResult:
    config: ScenarioConfig
    seed: int
    algorithms: tuple
    records: dict
    constants: metrics.BoundConstants
    offline: baselines.OfflineSolution
    summary: dict
    causality_log: list = field(default_factory=list)


def _resolve_algorithms(selector) -> tuple:
    if selector is None:
        return ("proposed",)
    if isinstance(selector, str):
        selector = (selector,)
    out: list[str] = []
    for name in selector:
        if name == "all":
            for algo in ("proposed", "saddle", "fdzf"):
                if algo not in out:
                    out.append(algo)
        elif name in ("proposed", "saddle", "fdzf"):
            if name not in out:
                out.append(name)
        else:
            raise ConfigValidationError(f"unknown algorithm {name!r}")
    return tuple(out)


def _expected_channel_norm_sq(topology, large_scale) -> float:
    """A-priori E||H||_F^2 from the large-scale gains (antennas x gain per link)."""
    total = 0.0
    for l in range(topology.num_cells):
        for c in range(topology.num_cells):
            n_c = topology.n_antennas[c]
            total += n_c * float(np.sum(large_scale.beta[l, c]))
    return total


class _FdZfWarmup:
    """Deterministic per-SP warm-up precoders before any CSI has arrived."""

    def __init__(self, topology, p_max_watts):
        self.blocks = []
        for c in range(topology.num_cells):
            n_c = topology.n_antennas[c]
            k_sp = topology.users_per_sp
            val = math.sqrt(p_max_watts[c] / (topology.num_sps * n_c * k_sp))
            self.blocks.append([
                np.full((n_c, k_sp), val, dtype=np.complex128)
                for _ in range(topology.num_sps)
            ])


def run_experiment(config: ScenarioConfig, algo=None) -> ExperimentResult:
    """Simulate all selected algorithms over one seeded scenario.

    Per slot: advance the channel, build the demand from the current channel,
    let each algorithm act on the buffered (delayed) data only, then score
    against the current slot. After the loop the offline comparator is solved
    and the cumulative regret column is filled in.
    """
    config.validate()
    algos = _resolve_algorithms(algo if algo is not None else config.algorithms)
    seed = config.seed
    tau = config.csi_delay
    horizon = config.horizon

    topo = build_topology(config)
    sigma_db = config.shadowing_sigma_db if config.shadowing_enabled else 0.0
    ls = large_scale_gain(topo, seed, carrier_ghz=config.carrier_ghz, shadowing_sigma_db=sigma_db)
    if config.normalize_gain:
        ls = normalize_gains(ls, topo)

    budget = PowerBudget(p_avg=config.p_avg_watts(), p_max=config.p_max_watts())
    params = schedule_params(horizon, tau, constraint_lipschitz(budget.p_max))
    demand_budgets = equal_share_budgets(budget.p_max, config.num_sps)
    sigma2 = metrics.noise_power_watts(
        config.noise_psd_dbm_hz, config.bandwidth_hz, config.noise_figure_db) / ls.ref_gain
    sigma2_sub = metrics.noise_power_watts(
        config.noise_psd_dbm_hz, config.bandwidth_hz / config.num_sps,
        config.noise_figure_db) / ls.ref_gain

    # saddle-point step sizes: sigma = R / (D_est sqrt(T)) with the a-priori
    # gradient bound D_est = E||H||^2 * R, mu = 1 / sqrt(T)
    b_est_sq = _expected_channel_norm_sq(topo, ls)
    saddle_sigma = 1.0 / (max(b_est_sq, 1e-30) * math.sqrt(horizon))
    saddle_mu = 1.0 / math.sqrt(horizon)

    dims = [(topo.n_antennas[c], topo.users_per_cell) for c in range(topo.num_cells)]
    warm_sets = init_precoders(budget, tau, dims)
    fd_warm = _FdZfWarmup(topo, budget.p_max)

    hist = {name: deque(maxlen=tau) for name in algos if name in ("proposed", "saddle")}
    buffer = DelayBuffer(tau)

    channels: list[ChannelState] = []
    demands = []
    loss_series = {name: [] for name in algos}
    g_series = {name: [] for name in algos}
    records = {name: [] for name in algos}
    acc = {name: {"f": 0.0, "fnorm": 0.0, "rates": 0.0, "power": 0.0,
                  "vo": np.zeros(topo.num_cells)} for name in algos}
    max_grad_norm = {name: 0.0 for name in algos if name in ("proposed", "saddle")}
    b_measured = 0.0

    if config.channel_trace_in:
        header, h_list = read_trace(config.channel_trace_in)
        if header["slots"] < horizon:
            raise ConfigValidationError(
                f"trace has {header['slots']} slots, config needs {horizon}")
        channel_source = replay_channel(topo, h_list[:horizon])
    else:
        channel_source = None
        streams = FadingStreams(topo, seed)

    state = None
    for t in range(1, horizon + 1):
        if channel_source is not None:
            state = next(channel_source)
        elif t == 1:
            state = init_channel(topo, ls, streams)
        else:
            state = step_channel(state, ls, config.channel_correlation, streams)
        demand = build_demand(state, demand_budgets)
        dnorm_sq = np.linalg.norm(demand.d) ** 2
        if dnorm_sq <= 0.0:
            raise ZeroDemandError(f"zero virtualization demand at slot {t}")
        channels.append(state)
        demands.append(demand)
        b_measured = max(b_measured, float(np.linalg.norm(state.h)))

        delayed_pair = buffer.delayed(t) if t > tau else None

        for name in algos:
            if name == "proposed":
                if t <= tau:
                    vset = warm_sets[t - 1]
                else:
                    d_chan, d_dem = delayed_pair
                    vset = distributed_step(d_chan, d_dem, hist[name][0], hist[name][-1],
                                            params, budget)
                hist[name].append(vset)
                blocks = vset.v
                queues = tuple(float(q) for q in vset.queues)
            elif name == "saddle":
                if t <= tau:
                    vset = warm_sets[t - 1]
                else:
                    d_chan, d_dem = delayed_pair
                    prev = hist[name][-1]
                    oldest = hist[name][0]
                    grads = [
                        local_gradient(d_chan.local(c), oldest.v[c], d_dem.embedded(c))
                        for c in range(topo.num_cells)
                    ]
                    new_blocks, new_dual = baselines.delayed_saddle_step(
                        grads, prev.v, prev.queues, saddle_sigma, saddle_mu, budget)
                    vset = PrecoderSet(t=t, v=new_blocks, queues=new_dual)
                hist[name].append(vset)
                blocks = vset.v
                queues = tuple(float(q) for q in vset.queues)
            else:  # fdzf
                if t <= tau:
                    fd_blocks = fd_warm.blocks
                else:
                    d_chan, _ = delayed_pair
                    fd_blocks = baselines.fd_zf_precoders(d_chan, budget.p_max)
                rates = baselines.fd_zf_rates(state, fd_blocks, sigma2_sub)
                p_inst = np.array([
                    sum(float(np.linalg.norm(w) ** 2) for w in fd_blocks[c])
                    for c in range(topo.num_cells)
                ])
                f_t = math.nan
                queues = (0.0,) * topo.num_cells

            if name in ("proposed", "saddle"):
                v_glob = vset.global_matrix()
                resid = state.h @ v_glob - demand.d
                f_t = float(np.linalg.norm(resid) ** 2)
                percell = metrics.per_cell_losses(state, blocks, demand)
                if abs(f_t - percell.sum()) > 1e-10 * max(f_t, 1e-30):
                    raise InvariantError(
                        f"global loss {f_t!r} != per-cell sum {percell.sum()!r} at slot {t}")
                grad_norm = float(np.linalg.norm(state.h.conj().T @ resid))
                max_grad_norm[name] = max(max_grad_norm[name], grad_norm)
                rates = metrics.per_user_rates(state.h, v_glob, sigma2)
                p_inst = np.array([float(np.linalg.norm(b) ** 2) for b in blocks])
                for c in range(topo.num_cells):
                    if p_inst[c] > budget.p_max[c] + 1e-9:
                        raise InvariantError(
                            f"short-term power violated at slot {t}, cell {c}")

            g_now = p_inst - budget.p_avg
            a = acc[name]
            if not math.isnan(f_t):
                a["f"] += f_t
                a["fnorm"] += f_t / dnorm_sq
            a["rates"] += float(rates.sum())
            a["power"] += float(p_inst.sum())
            a["vo"] += g_now
            loss_series[name].append(f_t)
            g_series[name].append(g_now.copy())
            records[name].append(RunRecord(
                t=t,
                algorithm=name,
                f_t=float(f_t),
                f_bar=float(a["fnorm"] / t) if name != "fdzf" else math.nan,
                p_inst=tuple(float(p) for p in p_inst),
                p_bar_run=float(a["power"] / (t * topo.num_cells)),
                queues=queues,
                g=tuple(float(g) for g in g_now),
                vo=tuple(float(v) for v in a["vo"]),
                re=math.nan,
                r_bar=float(a["rates"] / (t * topo.num_users)),
            ))
        buffer.push(state, demand)

    if config.channel_trace_out:
        write_trace(config.channel_trace_out, channels, seed,
                    config.channel_correlation, ls.ref_gain)

    offline = baselines.offline_fixed_solver(channels, demands, budget)
    v_star_glob = offline.global_matrix()
    fixed_losses = np.array([
        metrics.loss(ch.h, v_star_glob, dm.d) for ch, dm in zip(channels, demands)
    ])

    constants = metrics.problem_constants(budget, b_measured, horizon, tau)
    for name in algos:
        if name == "fdzf":
            continue
        if max_grad_norm[name] > constants.grad_bound * (1 + 1e-9):
            raise InvariantError(
                f"measured gradient norm {max_grad_norm[name]:.6e} exceeds "
                f"bound {constants.grad_bound:.6e}")
        re_cum = np.cumsum(np.asarray(loss_series[name]) - fixed_losses)
        for rec, re_val in zip(records[name], re_cum):
            rec.re = float(re_val)
        final_re, _ = metrics.regret_and_violation(
            loss_series[name], fixed_losses, np.asarray(g_series[name]))
        if abs(final_re - re_cum[-1]) > 1e-8 * max(abs(final_re), 1.0):
            raise InvariantError(
                f"regret accounting mismatch for {name}: {final_re!r} vs {re_cum[-1]!r}")

    summary = _build_summary(config, seed, algos, records, constants, offline, budget)
    return ExperimentResult(
        config=config,
        seed=seed,
        algorithms=algos,
        records=records,
        constants=constants,
        offline=offline,
        summary=summary,
        causality_log=list(buffer.access_log),
    )


def _json_safe(x):
    if isinstance(x, float) and math.isnan(x):
        return None
    return x


def _build_summary(config, seed, algos, records, constants, offline, budget) -> dict:
    per_algo = {}
    for name in algos:
        last = records[name][-1]
        per_algo[name] = {
            "f_bar": _json_safe(last.f_bar),
            "p_bar_run": last.p_bar_run,
            "r_bar": last.r_bar,
            "regret": _json_safe(last.re),
            "violation": list(last.vo),
            "final_queues": list(last.queues),
        }
    return {
        "seed": seed,
        "algorithms": list(algos),
        "config": config_as_dict(config),
        "constants": constants.as_dict(),
        "offline": {
            "lambda": [float(v) for v in offline.lam],
            "norm_sq": [float(np.linalg.norm(v) ** 2) for v in offline.v_star],
            "objective": [
                float(offline.cell_objective(c, offline.v_star[c]))
                for c in range(len(offline.v_star))
            ],
            "p_avg": [float(p) for p in budget.p_avg],
        },
        "final": per_algo,
    }


def csv_header(num_cells: int) -> str:
    cols = ["t", "algorithm", "f_t", "f_bar"]
    cols += [f"p_inst_c{c + 1}" for c in range(num_cells)]
    cols += ["p_bar_run"]
    cols += [f"Q_c{c + 1}" for c in range(num_cells)]
    cols += [f"g_c{c + 1}" for c in range(num_cells)]
    cols += [f"VO_c{c + 1}" for c in range(num_cells)]
    cols += ["RE", "r_bar"]
    return ",".join(cols)


def _fmt(v) -> str:
    # shortest round-trip decimal; builtin float so numpy scalars do not leak
    # their repr into the CSV
    return repr(float(v))


def _record_row(rec: RunRecord) -> str:
    parts = [str(rec.t), rec.algorithm, _fmt(rec.f_t), _fmt(rec.f_bar)]
    parts += [_fmt(v) for v in rec.p_inst]
    parts += [_fmt(rec.p_bar_run)]
    parts += [_fmt(v) for v in rec.queues]
    parts += [_fmt(v) for v in rec.g]
    parts += [_fmt(v) for v in rec.vo]
    parts += [_fmt(rec.re), _fmt(rec.r_bar)]
    return ",".join(parts)


def write_outputs(result: ExperimentResult, out_dir) -> dict:
    """Emit timeseries.csv and summary.json; returns the file paths."""
    try:
        os.makedirs(out_dir, exist_ok=True)
        num_cells = result.config.cells
        ts_path = os.path.join(out_dir, "timeseries.csv")
        with open(ts_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(csv_header(num_cells) + "\n")
            for name in result.algorithms:
                for rec in result.records[name]:
                    fh.write(_record_row(rec) + "\n")
        sm_path = os.path.join(out_dir, "summary.json")
        with open(sm_path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(result.summary, fh, indent=2, sort_keys=True, allow_nan=False)
            fh.write("\n")
    except OSError as exc:
        raise OutputError(f"cannot write outputs under {out_dir}: {exc}") from exc
    return {"timeseries": ts_path, "summary": sm_path}


SWEEP_SUMMARY_HEADER = (
    "axis,value,algorithm,f_bar,p_bar_run,r_bar,regret,max_violation,"
    "regret_bound,violation_bound,b_measured"
)


def sweep(config: ScenarioConfig, axis: str, values, algo=None, out_dir=None):
    """One run per axis value under a shared master seed; writes per-run dirs.

    Returns the list of (value, ExperimentResult). ``axis`` is one of
    tau | p_bar_dbm | n_c | T.
    """
    if axis not in SWEEP_AXES:
        raise ConfigValidationError(
            f"unknown sweep axis {axis!r}; choose one of {tuple(SWEEP_AXES)}")
    values = list(values)
    if not values:
        raise ConfigValidationError("sweep needs at least one value")
    field_name = SWEEP_AXES[axis]
    results = []
    rows = []
    for value in values:
        cfg = replace(config)
        if field_name == "p_avg_dbm":
            setattr(cfg, field_name, (float(value),))
        else:
            setattr(cfg, field_name, int(value))
        cfg.__post_init__()
        cfg.validate()
        result = run_experiment(cfg, algo)
        results.append((value, result))
        if out_dir is not None:
            run_dir = os.path.join(out_dir, f"{axis}_{value:g}")
            write_outputs(result, run_dir)
        for name in result.algorithms:
            last = result.records[name][-1]
            rows.append(",".join([
                axis, f"{value:g}", name,
                _fmt(last.f_bar), _fmt(last.p_bar_run), _fmt(last.r_bar), _fmt(last.re),
                _fmt(max(last.vo)), _fmt(result.constants.regret_bound),
                _fmt(result.constants.violation_bound), _fmt(result.constants.b_measured),
            ]))
    if out_dir is not None:
        try:
            os.makedirs(out_dir, exist_ok=True)
            with open(os.path.join(out_dir, "sweep_summary.csv"), "w",
                      encoding="utf-8", newline="\n") as fh:
                fh.write(SWEEP_SUMMARY_HEADER + "\n")
                for row in rows:
                    fh.write(row + "\n")
        except OSError as exc:
            raise OutputError(f"cannot write sweep summary under {out_dir}: {exc}") from exc
    return results
