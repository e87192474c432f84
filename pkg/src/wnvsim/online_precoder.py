"""Online distributed coordinated precoding under multi-slot-delayed CSI.

Per slot, each cell independently solves a small strongly convex problem built
from its delayed local channel and demand: a linearized loss term anchored by
two proximal regularizers (toward the precoder played when the delayed CSI was
current, and toward the previous precoder) plus a virtual-queue-weighted
penalty on the long-term power constraint. The minimizer has a closed form:
scale the unconstrained solution onto the per-cell power ball when needed.

The per-cell virtual queue

    Q_t = max(-gamma * g_t, Q_{t-1} + gamma * g_t),   g = ||V||_F^2 - p_avg

acts as an adaptive multiplier for the long-term constraint; with zero
initialization it stays nonnegative and satisfies Q_t >= -gamma * g_t, which
keeps every update's denominator at least alpha + eta > 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelState
from .errors import DimensionError, InvariantError
from .virtualization import Demand


@dataclass(frozen=True)
class AlgoParams:
    """Step weights and horizon bookkeeping for the online update."""

    alpha: float   # weight anchoring V to the tau-delayed iterate
    eta: float     # weight anchoring V to the previous iterate
    gamma: float   # virtual-queue weight
    tau: int       # CSI feedback delay in slots
    horizon: int   # total number of slots

    def __post_init__(self):
        if not (self.alpha > 0 and self.eta > 0 and self.gamma > 0):
            raise ValueError("alpha, eta, gamma must be positive")
        if not (self.tau >= 1 and self.horizon >= self.tau):
            raise ValueError("need horizon >= tau >= 1")


@dataclass(frozen=True)
class PowerBudget:
    """Per-cell long-term average and short-term maximum power limits (watts)."""

    p_avg: np.ndarray
    p_max: np.ndarray

    def __post_init__(self):
        p_avg = np.asarray(self.p_avg, dtype=float)
        p_max = np.asarray(self.p_max, dtype=float)
        object.__setattr__(self, "p_avg", p_avg)
        object.__setattr__(self, "p_max", p_max)
        if p_avg.shape != p_max.shape:
            raise ValueError("p_avg and p_max must have one entry per cell")
        if not np.all(p_avg > 0) or not np.all(p_avg <= p_max):
            raise ValueError("need 0 < p_avg <= p_max per cell")

    @property
    def num_cells(self) -> int:
        return len(self.p_avg)


@dataclass
class PrecoderSet:
    """Per-cell precoders at slot t plus the per-cell virtual queues."""

    t: int
    v: list[np.ndarray]      # v[c] is N_c x K_c
    queues: np.ndarray       # (C,) nonnegative

    def cell_power(self, c: int) -> float:
        return float(np.linalg.norm(self.v[c]) ** 2)

    def powers(self) -> np.ndarray:
        return np.array([self.cell_power(c) for c in range(len(self.v))])

    def global_matrix(self) -> np.ndarray:
        """Block-diagonal N x K embedding of the per-cell precoders."""
        n = sum(b.shape[0] for b in self.v)
        k = sum(b.shape[1] for b in self.v)
        out = np.zeros((n, k), dtype=np.complex128)
        r = 0
        c = 0
        for blk in self.v:
            out[r:r + blk.shape[0], c:c + blk.shape[1]] = blk
            r += blk.shape[0]
            c += blk.shape[1]
        return out


def schedule_params(horizon: int, tau: int, beta_lip: float) -> AlgoParams:
    """Horizon-based weights: alpha = sqrt(T/tau), gamma = T^(1/4), eta = beta*sqrt(T)/2."""
    if beta_lip <= 0:
        raise ValueError("beta_lip must be positive")
    return AlgoParams(
        alpha=math.sqrt(horizon / tau),
        eta=0.5 * beta_lip * math.sqrt(horizon),
        gamma=horizon ** 0.25,
        tau=tau,
        horizon=horizon,
    )


def constraint_lipschitz(p_max) -> float:
    """Lipschitz constant of the per-cell power constraint map: 2 sqrt(max p_max)."""
    return 2.0 * math.sqrt(float(np.max(np.asarray(p_max, dtype=float))))


def init_precoders(budget: PowerBudget, tau: int, dims: list[tuple[int, int]]) -> list[PrecoderSet]:
    """Warm-up history for slots 1..tau.

    Each cell gets the constant matrix with entry sqrt(p_avg / (N_c K_c)), so
    its squared norm equals p_avg exactly and the long-term constraint slack
    is zero; all queues start at zero.
    """
    blocks = []
    for c, (n_c, k_c) in enumerate(dims):
        val = math.sqrt(budget.p_avg[c] / (n_c * k_c))
        blocks.append(np.full((n_c, k_c), val, dtype=np.complex128))
    return [
        PrecoderSet(t=t, v=[b.copy() for b in blocks], queues=np.zeros(budget.num_cells))
        for t in range(1, tau + 1)
    ]


def local_gradient(h_loc: np.ndarray, v_old: np.ndarray, d_loc: np.ndarray) -> np.ndarray:
    """Gradient of the per-cell deviation loss at v_old: H^H (H v_old - D)."""
    if h_loc.shape[1] != v_old.shape[0] or h_loc.shape[0] != d_loc.shape[0] \
            or v_old.shape[1] != d_loc.shape[1]:
        raise DimensionError(
            f"incompatible shapes: H {h_loc.shape}, V {v_old.shape}, D {d_loc.shape}"
        )
    return h_loc.conj().T @ (h_loc @ v_old - d_loc)


def queue_update(q_prev: float, g_now: float, gamma: float) -> float:
    """Virtual-queue recursion; result is >= 0 and >= -gamma * g_now."""
    if q_prev < 0:
        raise InvariantError(f"queue must be nonnegative, got {q_prev}")
    return max(-gamma * g_now, q_prev + gamma * g_now)


def precoder_update(
    grad: np.ndarray,
    v_delayed: np.ndarray,
    v_prev: np.ndarray,
    q_prev: float,
    g_prev: float,
    params: AlgoParams,
    p_max_c: float,
) -> np.ndarray:
    """Closed-form per-cell update with projection onto the power ball.

    X = (alpha V_delayed + eta V_prev - grad) / (gamma Q + gamma^2 g + alpha + eta),
    returned as-is when ||X||_F^2 <= p_max, otherwise scaled onto the sphere.
    """
    denom = params.gamma * q_prev + params.gamma ** 2 * g_prev + params.alpha + params.eta
    if denom <= 0:
        raise InvariantError(
            f"nonpositive update denominator {denom:.6e} "
            f"(Q={q_prev:.6e}, g={g_prev:.6e}, alpha={params.alpha}, eta={params.eta})"
        )
    x = (params.alpha * v_delayed + params.eta * v_prev - grad) / denom
    nx2 = float(np.linalg.norm(x) ** 2)
    if nx2 <= p_max_c:
        return x
    return (math.sqrt(p_max_c) / math.sqrt(nx2)) * x


def distributed_step(
    delayed_channel: ChannelState,
    delayed_demand: Demand,
    v_delayed: PrecoderSet,
    v_prev: PrecoderSet,
    params: AlgoParams,
    budget: PowerBudget,
) -> PrecoderSet:
    """One slot of the fully distributed update across all cells.

    Each cell uses only its own delayed local view and demand embedding; its
    queue is then advanced with the slack of the precoder it just produced.
    Cells are independent, so any processing order gives identical results.
    """
    t_now = v_prev.t + 1
    if delayed_channel.t != t_now - params.tau or delayed_demand.t != t_now - params.tau:
        raise InvariantError(
            f"delayed data is for slot {delayed_channel.t}, expected {t_now - params.tau}"
        )
    if v_delayed.t != t_now - params.tau:
        raise InvariantError(
            f"delayed precoder is for slot {v_delayed.t}, expected {t_now - params.tau}"
        )
    cells = len(v_prev.v)
    new_blocks: list[np.ndarray] = [None] * cells  # type: ignore[list-item]
    new_queues = np.zeros(cells)
    for c in range(cells):
        grad = local_gradient(delayed_channel.local(c), v_delayed.v[c], delayed_demand.embedded(c))
        g_prev = v_prev.cell_power(c) - budget.p_avg[c]
        v_new = precoder_update(
            grad, v_delayed.v[c], v_prev.v[c], float(v_prev.queues[c]), g_prev, params,
            float(budget.p_max[c]),
        )
        g_new = float(np.linalg.norm(v_new) ** 2) - budget.p_avg[c]
        new_blocks[c] = v_new
        new_queues[c] = queue_update(float(v_prev.queues[c]), g_new, params.gamma)
    return PrecoderSet(t=t_now, v=new_blocks, queues=new_queues)
