"""Per-slot and cumulative performance metrics plus the analytic bound constants.

Noise power is assembled in the dB domain, N0[dBm/Hz] + 10 log10(B_W) + NF[dB],
then converted to watts; with the default settings that is -122.24 dBm. When
channel gains are normalized by a reference, divide the noise by the same
reference to keep SINRs physical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .online_precoder import PowerBudget, schedule_params


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


def noise_power_watts(noise_psd_dbm_hz: float, bandwidth_hz: float, noise_figure_db: float) -> float:
    """Receiver noise power: PSD + 10 log10(bandwidth) + noise figure, in watts."""
    return dbm_to_watts(noise_psd_dbm_hz + 10.0 * math.log10(bandwidth_hz) + noise_figure_db)


def loss(h: np.ndarray, v: np.ndarray, d: np.ndarray) -> float:
    """Squared Frobenius deviation ||H V - D||_F^2 of the received signals."""
    if h.shape[1] != v.shape[0] or (h.shape[0], v.shape[1]) != d.shape:
        raise DimensionError(f"incompatible shapes: H {h.shape}, V {v.shape}, D {d.shape}")
    return float(np.linalg.norm(h @ v - d) ** 2)


def per_cell_losses(channel, precoders, demand) -> np.ndarray:
    """Per-cell deviations ||H_c V_c - D_c||_F^2; their sum equals the global loss."""
    topo = channel.topology
    return np.array([
        np.linalg.norm(channel.local(c) @ precoders[c] - demand.embedded(c)) ** 2
        for c in range(topo.num_cells)
    ])


def per_user_rates(h: np.ndarray, v: np.ndarray, noise_watts: float) -> np.ndarray:
    """log2(1 + SINR) per user from the effective matrix H V."""
    if noise_watts <= 0:
        raise ValueError("noise power must be positive")
    hv = h @ v
    power = np.abs(hv) ** 2
    sig = np.diag(power)
    interference = power.sum(axis=1) - sig
    return np.log2(1.0 + sig / (interference + noise_watts))


def regret_and_violation(losses_run, losses_fixed, g_per_slot) -> tuple[float, np.ndarray]:
    """Accumulated loss gap to the fixed comparator and per-cell summed slack."""
    losses_run = np.asarray(losses_run, dtype=float)
    losses_fixed = np.asarray(losses_fixed, dtype=float)
    g_per_slot = np.asarray(g_per_slot, dtype=float)
    if losses_run.shape != losses_fixed.shape or g_per_slot.shape[0] != losses_run.shape[0]:
        raise DimensionError("metric series must cover the same slots")
    return float(np.sum(losses_run - losses_fixed)), g_per_slot.sum(axis=0)


@dataclass(frozen=True)
class BoundConstants:
    """Measured channel bound plus the derived problem constants and bound values.

    grad_bound = b_measured^2 * diameter, lipschitz = 2 sqrt(max p_max),
    g_bound = sqrt(sum_c max(p_avg^2, (p_max - p_avg)^2)),
    diameter = 2 sqrt(sum_c p_max), slater = min_c p_avg. regret_bound and
    violation_bound are the horizon-schedule right-hand sides.
    """

    b_measured: float
    grad_bound: float
    lipschitz: float
    g_bound: float
    diameter: float
    slater: float
    regret_bound: float
    violation_bound: float

    def as_dict(self) -> dict:
        return {
            "b_measured": self.b_measured,
            "grad_bound": self.grad_bound,
            "lipschitz": self.lipschitz,
            "g_bound": self.g_bound,
            "diameter": self.diameter,
            "slater": self.slater,
            "regret_bound": self.regret_bound,
            "violation_bound": self.violation_bound,
        }


def problem_constants(budget: PowerBudget, b_measured: float, horizon: int, tau: int) -> BoundConstants:
    """Problem constants from the power budget and the measured channel bound.

    The regret and violation bound values are evaluated under the horizon
    schedule alpha = sqrt(T/tau), gamma^2 = sqrt(T), eta = lipschitz*sqrt(T)/2.
    """
    if b_measured <= 0:
        raise ValueError("b_measured must be positive")
    p_max = np.asarray(budget.p_max, dtype=float)
    p_avg = np.asarray(budget.p_avg, dtype=float)
    diameter = 2.0 * math.sqrt(p_max.sum())
    grad_bound = b_measured ** 2 * diameter
    lipschitz = 2.0 * math.sqrt(p_max.max())
    g_bound = math.sqrt(np.sum(np.maximum(p_avg ** 2, (p_max - p_avg) ** 2)))
    slater = float(p_avg.min())
    params = schedule_params(horizon, tau, lipschitz)
    gamma_sq = params.gamma ** 2
    regret_bound = (
        grad_bound ** 2 * horizon / params.alpha
        + gamma_sq * g_bound ** 2 / 2.0
        + (params.alpha * tau + params.eta) * diameter ** 2
        + 2.0 * grad_bound * diameter * tau
    )
    violation_bound = 2.0 * g_bound + (
        2.0 * gamma_sq * g_bound ** 2
        + 2.0 * grad_bound * diameter
        + (params.alpha + params.eta) * diameter ** 2
    ) / (gamma_sq * slater)
    return BoundConstants(
        b_measured=b_measured,
        grad_bound=grad_bound,
        lipschitz=lipschitz,
        g_bound=g_bound,
        diameter=diameter,
        slater=slater,
        regret_bound=regret_bound,
        violation_bound=violation_bound,
    )
