"""Comparison schemes: offline fixed comparator, delayed saddle-point, FD-ZF.

The offline comparator is the best time-invariant precoder in hindsight. For
a fixed V the time-averaged power constraint dominates the instantaneous one
(p_avg <= p_max), so each cell solves

    min_V  sum_t ||H_t V - D_t||_F^2   s.t.  ||V||_F^2 <= p_avg

which reduces to a ridge-regularized least squares with multiplier lambda on
the norm ball, found by monotone bisection: ||V(lambda)||_F^2 is strictly
decreasing in lambda.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelState
from .errors import InvariantError
from .numerics import hermitian_eigh
from .online_precoder import PowerBudget
from .virtualization import Demand, zf_virtual_precoder

BISECT_NORM_RTOL = 1e-10
BISECT_SLACK_ATOL = 1e-9
BISECT_MAX_ITERS = 400


@dataclass
class OfflineSolution:
    """Best fixed per-cell precoders with their multipliers and accumulated moments.

    gram[c] = sum_t H_c^H H_c, cross[c] = sum_t H_c^H D_c, and
    demand_const[c] = sum_t ||D_c||_F^2, so the accumulated loss of any fixed
    per-cell precoder V is tr(V^H gram V) - 2 Re tr(cross^H V) + demand_const.
    """

    v_star: list[np.ndarray]
    lam: np.ndarray
    gram: list[np.ndarray]
    cross: list[np.ndarray]
    demand_const: np.ndarray

    def cell_objective(self, c: int, v: np.ndarray) -> float:
        quad = float(np.real(np.trace(v.conj().T @ self.gram[c] @ v)))
        lin = float(np.real(np.trace(self.cross[c].conj().T @ v)))
        return quad - 2.0 * lin + float(self.demand_const[c])

    def global_matrix(self) -> np.ndarray:
        n = sum(b.shape[0] for b in self.v_star)
        k = sum(b.shape[1] for b in self.v_star)
        out = np.zeros((n, k), dtype=np.complex128)
        r = c = 0
        for blk in self.v_star:
            out[r:r + blk.shape[0], c:c + blk.shape[1]] = blk
            r += blk.shape[0]
            c += blk.shape[1]
        return out


def _solve_norm_ball_ls(gram: np.ndarray, cross: np.ndarray, radius_sq: float):
    """Minimize tr(V^H A V) - 2 Re tr(B^H V) subject to ||V||_F^2 <= radius_sq."""
    w, u = hermitian_eigh(gram)
    bt = u.conj().T @ cross
    energy = np.sum(np.abs(bt) ** 2, axis=1)  # per eigen-direction
    w = np.maximum(w, 0.0)                    # gram is PSD up to roundoff
    tol0 = 1e-12 * max(w.max(initial=0.0), 1.0)

    def norm_sq(lam: float) -> float:
        denom = w + lam
        mask = denom > 0
        return float(np.sum(energy[mask] / denom[mask] ** 2))

    # unconstrained solution: drop components in the (numerical) null space;
    # any null-space component adds norm without reducing the objective
    live = w > tol0
    if np.all(energy[~live] <= 1e-18 * max(energy.sum(), 1.0)):
        n0 = float(np.sum(energy[live] / w[live] ** 2)) if live.any() else 0.0
        if n0 <= radius_sq:
            scaled = np.zeros_like(bt)
            scaled[live] = bt[live] / w[live, None]
            return u @ scaled, 0.0
    # constraint active: bisect on lambda > 0, keeping hi on the feasible side
    hi = 1.0
    while norm_sq(hi) > radius_sq:
        hi *= 4.0
        if hi > 1e300:
            raise InvariantError("norm-ball bisection failed to bracket")
    lo = 0.0
    for _ in range(BISECT_MAX_ITERS):
        n_hi = norm_sq(hi)
        if abs(n_hi - radius_sq) <= BISECT_NORM_RTOL * radius_sq \
                and abs(hi * (n_hi - radius_sq)) <= BISECT_SLACK_ATOL:
            break
        mid = 0.5 * (lo + hi)
        if norm_sq(mid) > radius_sq:
            lo = mid
        else:
            hi = mid
    lam = hi
    denom = w + lam
    v = u @ (bt / denom[:, None])
    return v, float(lam)


def offline_fixed_solver(
    channels: list[ChannelState],
    demands: list[Demand],
    budget: PowerBudget,
) -> OfflineSolution:
    """Best fixed feasible precoder given the full channel and demand history.

    Moments are accumulated in slot order (a fixed sequential reduction) so
    results are bit-stable.
    """
    topo = channels[0].topology
    cells = topo.num_cells
    gram = [np.zeros((topo.n_antennas[c],) * 2, dtype=np.complex128) for c in range(cells)]
    cross = [
        np.zeros((topo.n_antennas[c], topo.users_per_cell), dtype=np.complex128)
        for c in range(cells)
    ]
    const = np.zeros(cells)
    for chan, dem in zip(channels, demands):
        for c in range(cells):
            h_loc = chan.local(c)
            d_loc = dem.embedded(c)
            gram[c] += h_loc.conj().T @ h_loc
            cross[c] += h_loc.conj().T @ d_loc
            const[c] += np.linalg.norm(d_loc) ** 2
    v_star: list[np.ndarray] = []
    lam = np.zeros(cells)
    for c in range(cells):
        v, l_c = _solve_norm_ball_ls(gram[c], cross[c], float(budget.p_avg[c]))
        v_star.append(v)
        lam[c] = l_c
    return OfflineSolution(v_star=v_star, lam=lam, gram=gram, cross=cross, demand_const=const)


def delayed_saddle_step(
    grads_delayed: list[np.ndarray],
    v_prev: list[np.ndarray],
    dual_prev: np.ndarray,
    sigma: float,
    mu: float,
    budget: PowerBudget,
) -> tuple[list[np.ndarray], np.ndarray]:
    """One primal-dual step using the delayed loss gradient.

    Primal: project V_prev - sigma * (grad + dual * 2 V_prev) onto the
    per-cell power balls (the constraint gradient is 2 V). Dual: clamp
    dual + mu * g at zero, evaluated at the new iterate.
    """
    new_blocks: list[np.ndarray] = []
    new_dual = np.zeros_like(dual_prev)
    for c, (grad, v_c) in enumerate(zip(grads_delayed, v_prev)):
        step = v_c - sigma * (grad + dual_prev[c] * 2.0 * v_c)
        n2 = float(np.linalg.norm(step) ** 2)
        p_max_c = float(budget.p_max[c])
        if n2 > p_max_c:
            step = math.sqrt(p_max_c / n2) * step
        new_blocks.append(step)
        g_new = float(np.linalg.norm(step) ** 2) - budget.p_avg[c]
        new_dual[c] = max(0.0, float(dual_prev[c]) + mu * g_new)
    return new_blocks, new_dual


def fd_zf_precoders(design_channel: ChannelState, p_max_watts) -> list[list[np.ndarray]]:
    """Per-SP ZF precoders on orthogonal subbands, power p_max/M each."""
    topo = design_channel.topology
    p_max = np.asarray(p_max_watts, dtype=float)
    out: list[list[np.ndarray]] = []
    for c in range(topo.num_cells):
        row = []
        for m in range(topo.num_sps):
            h = design_channel.block(c, c, m)
            row.append(zf_virtual_precoder(h, p_max[c] / topo.num_sps))
        out.append(row)
    return out


def fd_zf_rates(
    score_channel: ChannelState,
    precoders: list[list[np.ndarray]],
    noise_sub_watts: float,
) -> np.ndarray:
    """Per-user rates of the frequency-division scheme on the scoring channel.

    Each SP occupies bandwidth 1/M of the band; within its subband the only
    interference is from the same SP's transmissions in other cells. Rates are
    normalized to the full band, hence the 1/M weight.
    """
    topo = score_channel.topology
    m_sps = topo.num_sps
    rates = np.zeros(topo.num_users)
    for c in range(topo.num_cells):
        for m in range(m_sps):
            # received matrices from every cell serving SP m
            own = score_channel.block(c, c, m) @ precoders[c][m]
            inter = np.zeros(topo.users_per_sp)
            for l in range(topo.num_cells):
                if l == c:
                    continue
                cross = score_channel.block(c, l, m) @ precoders[l][m]
                inter += np.sum(np.abs(cross) ** 2, axis=1)
            sig = np.abs(np.diag(own)) ** 2
            intra = np.sum(np.abs(own) ** 2, axis=1) - sig
            sinr = sig / (intra + inter + noise_sub_watts)
            rows = topo.row_slice(c, m)
            rates[rows] = np.log2(1.0 + sinr) / m_sps
    return rates


def fd_zf_step(
    design_channel: ChannelState,
    score_channel: ChannelState,
    p_max_watts,
    noise_sub_watts: float,
) -> tuple[list[list[np.ndarray]], np.ndarray]:
    """FD-ZF transmission: design from (delayed) local CSI, score on the current channel."""
    precoders = fd_zf_precoders(design_channel, p_max_watts)
    return precoders, fd_zf_rates(score_channel, precoders, noise_sub_watts)
