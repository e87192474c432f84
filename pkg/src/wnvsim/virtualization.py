"""Service providers' zero-forcing virtual precoders and the demand matrices.

Each SP designs its precoder from its own users' channel block only. The
per-cell demand is the block-diagonal stack of the SPs' noiseless received
signals; the global demand is block-diagonal across cells, so its per-cell
column group doubles as the zero-padded embedding used by the per-cell loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelState, Topology
from .errors import DegenerateChannelError, SingularMatrixError
from .numerics import as_matrix, fro_norm, hermitian, hpd_solve


def zf_virtual_precoder(h, power: float) -> np.ndarray:
    """Zero-forcing precoder with an exact Frobenius power budget.

    W = omega * H^H (H H^H)^{-1}, omega chosen so ||W||_F^2 == power; then
    H @ W == omega * I.

    Raises
    ------
    DegenerateChannelError
        If H does not have full row rank (H H^H not positive-definite).
    """
    h = as_matrix(h, "h")
    if power <= 0:
        raise ValueError(f"power budget must be positive, got {power}")
    gram = h @ hermitian(h)
    try:
        x = hpd_solve(gram, h)  # (H H^H)^{-1} H
    except SingularMatrixError as exc:
        raise DegenerateChannelError(f"rank-deficient channel block: {exc}") from exc
    w0 = hermitian(x)           # H^H (H H^H)^{-1}
    return (np.sqrt(power) / fro_norm(w0)) * w0


@dataclass
class Demand:
    """Virtualization demand at slot t.

    ``virtual_precoders[c][m]`` is SP m's precoder in cell c (N_c x K_c^m),
    ``d_cell[c]`` the per-cell block-diagonal demand (K_c x K_c), and ``d``
    the global block-diagonal demand (K x K). The K x K_c embedding for cell c
    is exactly the cell's column group of ``d``.
    """

    t: int
    virtual_precoders: list[list[np.ndarray]]
    d_cell: list[np.ndarray]
    d: np.ndarray
    topology: Topology

    def embedded(self, c: int) -> np.ndarray:
        return self.d[:, self.topology.user_col_slice(c)]


def build_demand(channel: ChannelState, budgets) -> Demand:
    """Assemble all SPs' ZF precoders into per-cell and global demands.

    ``budgets[c][m]`` is the virtual transmit power allotted to SP m in cell
    c (the default split gives each SP an equal share of the cell's maximum
    power). Propagates DegenerateChannelError from rank-deficient blocks.
    """
    topo = channel.topology
    budgets = np.asarray(budgets, dtype=float)
    k_sp = topo.users_per_sp
    precoders: list[list[np.ndarray]] = []
    d_cell: list[np.ndarray] = []
    d = np.zeros((topo.num_users, topo.num_users), dtype=np.complex128)
    for c in range(topo.num_cells):
        row: list[np.ndarray] = []
        dc = np.zeros((topo.users_per_cell, topo.users_per_cell), dtype=np.complex128)
        for m in range(topo.num_sps):
            h_cm = channel.block(c, c, m)
            w = zf_virtual_precoder(h_cm, budgets[c, m])
            row.append(w)
            blk = slice(m * k_sp, (m + 1) * k_sp)
            dc[blk, blk] = h_cm @ w
        precoders.append(row)
        d_cell.append(dc)
        span = topo.user_col_slice(c)
        d[span, span] = dc
    return Demand(t=channel.t, virtual_precoders=precoders, d_cell=d_cell, d=d, topology=topo)


def equal_share_budgets(p_max_watts, num_sps: int) -> np.ndarray:
    """Default virtual power split: each SP gets p_max/M in its cell."""
    p_max = np.asarray(p_max_watts, dtype=float)
    return np.repeat(p_max[:, None] / num_sps, num_sps, axis=1)
