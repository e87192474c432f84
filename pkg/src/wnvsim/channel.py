"""Multi-cell topology and time-correlated Rayleigh fading process.

Geometry: pointy-top hexagonal cells of circumradius ``cell_radius`` arranged
as a mutually adjacent cluster (centers sqrt(3)*R apart), base station at each
center, users placed uniformly at random inside their serving cell's hexagon
with a minimum distance to the BS.

Row ordering of the global channel matrix: cells ascending, then service
providers, then users. Column blocks are per-BS antenna groups, so the global
K x N matrix is the horizontal concatenation of the per-cell local views.

Randomness: a single master seed. Every consumer draws from an independent
substream keyed by (purpose, cell, sp, user) through numpy SeedSequence spawn
keys. Consequences: enabling shadowing never perturbs fading draws, and
per-user rows may be generated in parallel with bit-identical results.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, PlacementError

PURPOSE_PLACEMENT = 0
PURPOSE_SHADOWING = 1
PURPOSE_FADING = 2

PLACEMENT_MAX_TRIES = 10_000

_SQRT3 = math.sqrt(3.0)


def substream(seed: int, purpose: int, *key: int) -> np.random.Generator:
    """Independent RNG substream for (purpose, *key) under one master seed."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(purpose, *key)))


@dataclass(frozen=True)
class Topology:
    """Cell layout and user placement; all coordinates in meters."""

    cell_radius: float
    min_distance: float
    bs_pos: np.ndarray            # (C, 2)
    n_antennas: tuple[int, ...]   # per cell
    num_sps: int
    users_per_sp: int
    user_pos: np.ndarray          # (C, M, K_sp, 2)

    @property
    def num_cells(self) -> int:
        return len(self.n_antennas)

    @property
    def users_per_cell(self) -> int:
        return self.num_sps * self.users_per_sp

    @property
    def num_users(self) -> int:
        return self.num_cells * self.users_per_cell

    @property
    def num_antennas(self) -> int:
        return sum(self.n_antennas)

    def col_slice(self, c: int) -> slice:
        start = sum(self.n_antennas[:c])
        return slice(start, start + self.n_antennas[c])

    def row_slice(self, l: int, m: int | None = None) -> slice:
        """Rows of cell l (all SPs) or of (cell l, SP m)."""
        base = l * self.users_per_cell
        if m is None:
            return slice(base, base + self.users_per_cell)
        start = base + m * self.users_per_sp
        return slice(start, start + self.users_per_sp)

    def user_col_slice(self, c: int) -> slice:
        """Columns of cell c in user-indexed (K x K) matrices."""
        base = c * self.users_per_cell
        return slice(base, base + self.users_per_cell)


def _cluster_centers(num_cells: int, radius: float) -> np.ndarray:
    """BS positions: hexagon center plus its edge-sharing neighbors, in order."""
    if num_cells > 7:
        raise PlacementError("cell clusters beyond 7 mutually adjacent cells are unsupported")
    d = _SQRT3 * radius
    offsets = [(0.0, 0.0)]
    for k in range(6):
        ang = math.radians(60.0 * k)
        offsets.append((d * math.cos(ang), d * math.sin(ang)))
    return np.array(offsets[:num_cells])


def _inside_hexagon(x: float, y: float, cx: float, cy: float, radius: float) -> bool:
    """Point-in-hexagon test for a pointy-top hexagon of circumradius ``radius``."""
    dx = abs(x - cx)
    dy = abs(y - cy)
    return dx <= _SQRT3 * radius / 2.0 and dx + _SQRT3 * dy <= _SQRT3 * radius


def build_topology(config, seed: int | None = None) -> Topology:
    """Place base stations and users for the configured scenario.

    Users are drawn uniformly inside their serving cell's hexagon by rejection
    sampling from the bounding box, enforcing the minimum BS distance; each
    user has its own placement substream.
    """
    if seed is None:
        seed = config.seed
    cells = config.cells
    radius = float(config.cell_radius_m)
    if cells < 1 or radius <= 0:
        raise PlacementError(f"invalid topology: {cells} cells, radius {radius}")
    bs = _cluster_centers(cells, radius)
    m_sps = config.num_sps
    k_sp = config.users_per_sp
    min_d = float(config.min_distance_m)
    pos = np.zeros((cells, m_sps, k_sp, 2))
    for c in range(cells):
        cx, cy = bs[c]
        for m in range(m_sps):
            for k in range(k_sp):
                gen = substream(seed, PURPOSE_PLACEMENT, c, m, k)
                for _ in range(PLACEMENT_MAX_TRIES):
                    x = cx + (gen.random() - 0.5) * _SQRT3 * radius
                    y = cy + (gen.random() * 2.0 - 1.0) * radius
                    if not _inside_hexagon(x, y, cx, cy, radius):
                        continue
                    if math.hypot(x - cx, y - cy) >= min_d:
                        pos[c, m, k] = (x, y)
                        break
                else:
                    raise PlacementError(
                        f"could not place user (cell {c}, sp {m}, user {k}) "
                        f"after {PLACEMENT_MAX_TRIES} tries"
                    )
    return Topology(
        cell_radius=radius,
        min_distance=min_d,
        bs_pos=bs,
        n_antennas=(int(config.antennas_per_cell),) * cells,
        num_sps=m_sps,
        users_per_sp=k_sp,
        user_pos=pos,
    )


@dataclass(frozen=True)
class LargeScale:
    """Linear power gains beta[l, c, m, k] between BS c and user k of SP m in cell l.

    ``ref_gain`` records the divisor already applied to ``beta`` (1.0 means
    physical gains). Rescaling by a common reference preserves all relative
    geometry; the noise power must be divided by the same reference to keep
    SINRs physical.
    """

    beta: np.ndarray
    ref_gain: float = 1.0


def pathloss_db(distance_m, carrier_ghz: float):
    """Urban-micro style path loss: 22.7 + 36.7 log10(d[m]) + 26 log10(f[GHz])."""
    return 22.7 + 36.7 * np.log10(distance_m) + 26.0 * np.log10(carrier_ghz)


def large_scale_gain(
    topology: Topology,
    seed: int,
    *,
    carrier_ghz: float = 2.0,
    shadowing_sigma_db: float = 0.0,
) -> LargeScale:
    """Physical large-scale gains from path loss plus optional log-normal shadowing.

    Each user's shadowing substream draws one value per BS, in BS order, so
    gains are a pure function of (topology, seed).
    """
    cells = topology.num_cells
    m_sps = topology.num_sps
    k_sp = topology.users_per_sp
    beta = np.zeros((cells, cells, m_sps, k_sp))
    for l in range(cells):
        for m in range(m_sps):
            for k in range(k_sp):
                pos = topology.user_pos[l, m, k]
                d = np.hypot(topology.bs_pos[:, 0] - pos[0], topology.bs_pos[:, 1] - pos[1])
                pl = pathloss_db(d, carrier_ghz)
                if shadowing_sigma_db > 0.0:
                    gen = substream(seed, PURPOSE_SHADOWING, l, m, k)
                    pl = pl + shadowing_sigma_db * gen.standard_normal(cells)
                beta[l, :, m, k] = 10.0 ** (-pl / 10.0)
    return LargeScale(beta=beta)


GAIN_TARGET = 16.0


def normalize_gains(large_scale: LargeScale, topology: Topology) -> LargeScale:
    """Rescale all gains so the strongest array-summed link sits at GAIN_TARGET.

    The strongest link's total gain (per-entry gain times the serving array
    size) is pinned to a fixed level, so the per-cell channel curvature
    ||H_c^H H_c|| stays near that level for every array size and seed; that is
    the scale the horizon-based step weights are built for. All relative
    geometry is preserved, and SINRs stay physical as long as the noise power
    is divided by the same ``ref_gain``.
    """
    row_gains = np.array([
        large_scale.beta[l, c, m, k] * topology.n_antennas[c]
        for l in range(topology.num_cells)
        for c in range(topology.num_cells)
        for m in range(topology.num_sps)
        for k in range(topology.users_per_sp)
    ])
    ref = float(row_gains.max()) / GAIN_TARGET
    return LargeScale(beta=large_scale.beta / ref, ref_gain=large_scale.ref_gain * ref)


class FadingStreams:
    """Pre-assigned per-user RNG substreams driving the fading process."""

    def __init__(self, topology: Topology, seed: int):
        self._gens = {
            (l, m, k): substream(seed, PURPOSE_FADING, l, m, k)
            for l in range(topology.num_cells)
            for m in range(topology.num_sps)
            for k in range(topology.users_per_sp)
        }

    def draw_unit_rows(self, topology: Topology) -> np.ndarray:
        """One standard circularly-symmetric complex row per user (unit entry variance)."""
        n = topology.num_antennas
        rows = np.zeros((topology.num_users, n), dtype=np.complex128)
        for (l, m, k), gen in self._gens.items():
            z = gen.standard_normal((2, n))
            rows[topology.row_slice(l, m).start + k] = (z[0] + 1j * z[1]) / np.sqrt(2.0)
        return rows


@dataclass
class ChannelState:
    """Global channel at slot t with per-cell and per-(cell, SP) block views."""

    t: int
    h: np.ndarray  # (K, N)
    topology: Topology

    def local(self, c: int) -> np.ndarray:
        """Local view at BS c: all K users vs the N_c antennas of cell c."""
        return self.h[:, self.topology.col_slice(c)]

    def block(self, l: int, c: int, m: int) -> np.ndarray:
        """Block between the users of SP m in cell l and BS c."""
        return self.h[self.topology.row_slice(l, m), self.topology.col_slice(c)]


def _row_scales(topology: Topology, large_scale: LargeScale) -> np.ndarray:
    """Per-entry standard deviations, shape (K, N): sqrt(beta) per column block."""
    scales = np.zeros((topology.num_users, topology.num_antennas))
    for l in range(topology.num_cells):
        for m in range(topology.num_sps):
            for k in range(topology.users_per_sp):
                row = topology.row_slice(l, m).start + k
                for c in range(topology.num_cells):
                    scales[row, topology.col_slice(c)] = np.sqrt(large_scale.beta[l, c, m, k])
    return scales


def init_channel(topology: Topology, large_scale: LargeScale, streams: FadingStreams) -> ChannelState:
    """Draw the slot-1 channel: i.i.d. CN(0, beta) per entry in the block layout."""
    h = _row_scales(topology, large_scale) * streams.draw_unit_rows(topology)
    return ChannelState(t=1, h=h, topology=topology)


def step_channel(
    state: ChannelState,
    large_scale: LargeScale,
    alpha_h: float,
    streams: FadingStreams,
) -> ChannelState:
    """Advance one slot of the first-order Gauss-Markov recursion.

    h_{t+1} = alpha_h * h_t + z_t with z_t ~ CN(0, (1 - alpha_h^2) beta) drawn
    independently per user row. Innovations are drawn unconditionally so the
    stream position does not depend on alpha_h.
    """
    if not 0.0 <= alpha_h <= 1.0:
        raise ValueError(f"alpha_h must be in [0, 1], got {alpha_h}")
    innov = _row_scales(state.topology, large_scale) * streams.draw_unit_rows(state.topology)
    h = alpha_h * state.h + np.sqrt(1.0 - alpha_h * alpha_h) * innov
    return ChannelState(t=state.t + 1, h=h, topology=state.topology)


# --- channel trace dump / replay -------------------------------------------

_TRACE_MAGIC = b"WNVCHTR1"
_TRACE_HEADER = struct.Struct("<8sIIIIIQdd")  # magic, C, M, K_sp, N_c, T, seed, alpha_h, ref_gain


def write_trace(path, states: list[ChannelState], seed: int, alpha_h: float, ref_gain: float = 1.0) -> None:
    """Dump per-slot channels: fixed header then row-major complex128 per slot."""
    topo = states[0].topology
    with open(path, "wb") as fh:
        fh.write(_TRACE_HEADER.pack(
            _TRACE_MAGIC, topo.num_cells, topo.num_sps, topo.users_per_sp,
            topo.n_antennas[0], len(states), seed, alpha_h, ref_gain,
        ))
        for state in states:
            fh.write(np.ascontiguousarray(state.h, dtype=np.complex128).tobytes())


def read_trace(path) -> tuple[dict, list[np.ndarray]]:
    """Read a trace back; returns (header dict, list of K x N arrays)."""
    with open(path, "rb") as fh:
        raw = fh.read(_TRACE_HEADER.size)
        magic, cells, m_sps, k_sp, n_c, slots, seed, alpha_h, ref_gain = _TRACE_HEADER.unpack(raw)
        if magic != _TRACE_MAGIC:
            raise DimensionError(f"not a channel trace: bad magic {magic!r}")
        k = cells * m_sps * k_sp
        n = cells * n_c
        data = np.frombuffer(fh.read(), dtype=np.complex128)
    if data.size != slots * k * n:
        raise DimensionError(
            f"trace payload has {data.size} entries, expected {slots} x {k} x {n}"
        )
    header = {
        "cells": cells, "num_sps": m_sps, "users_per_sp": k_sp, "antennas_per_cell": n_c,
        "slots": slots, "seed": seed, "alpha_h": alpha_h, "ref_gain": ref_gain,
    }
    return header, [data[i * k * n:(i + 1) * k * n].reshape(k, n).copy() for i in range(slots)]


def replay_channel(topology: Topology, h_list: list[np.ndarray]):
    """Yield ChannelStates from dumped matrices, validating dimensions."""
    expect = (topology.num_users, topology.num_antennas)
    for i, h in enumerate(h_list):
        if h.shape != expect:
            raise DimensionError(f"trace slot {i + 1} has shape {h.shape}, expected {expect}")
        yield ChannelState(t=i + 1, h=h, topology=topology)


__all__ = [
    "ChannelState", "FadingStreams", "LargeScale", "Topology",
    "build_topology", "init_channel", "large_scale_gain", "normalize_gains",
    "pathloss_db", "read_trace", "replay_channel", "step_channel", "substream",
    "write_trace",
]
