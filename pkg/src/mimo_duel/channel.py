"""Rayleigh fading draws and channel-matrix assembly for both architectures.

One realization stores a single pool of unit-variance fading per (BS, user)
link, drawn at the larger antenna count B*M. The co-located architecture
(one BS with B*M antennas) reads whole vectors; the distributed architecture
(B BSs with M antennas each) reads the first M entries of each link and
stacks them. Paired comparisons therefore run on common random numbers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .topology import NetworkTopology, PathLossModel, path_loss, wrapped_distance

__all__ = [
    "SystemKind",
    "FadingBlock",
    "ChannelRealization",
    "draw_fading",
    "draw_realization",
    "compound_lsm",
    "composite_nm",
    "interference_channel",
    "own_channel",
]


class SystemKind(enum.Enum):
    """Which architecture wields the B*M antennas of a cluster."""

    LSM = "lsm"          # each BS co-locates B*M antennas
    NM = "nm"            # B BSs with M antennas each, joint precoding

    def antennas_per_bs(self, B: int, M: int) -> int:
        return B * M if self is SystemKind.LSM else M


@dataclass(frozen=True)
class FadingBlock:
    """I.i.d. CN(0, 1) entries: real/imag parts each of variance 1/2."""

    entries: np.ndarray


def draw_fading(rng: np.random.Generator, rows: int, cols: int) -> FadingBlock:
    """Draw a rows x cols block of unit-variance complex Gaussians."""
    if rows < 1 or cols < 1:
        raise ValueError(f"fading block needs positive dimensions, got {rows}x{cols}")
    z = rng.standard_normal((rows, cols, 2))
    return FadingBlock(entries=(z[..., 0] + 1j * z[..., 1]) / np.sqrt(2.0))


@dataclass(frozen=True)
class ChannelRealization:
    """All channel vectors needed for one time slot.

    ``fading_own[l, b, u]`` is the B*M-entry fading from BS b of cluster l to
    the u-th scheduled user of cluster l; ``fading_meas[j, m, i]`` the fading
    from BS m of cluster j to the i-th measured user (always a scheduled user
    of the measured cluster; own-cluster entries are unused there). Path-loss
    gains are stored alongside with matching indexing.
    """

    topo: NetworkTopology
    M: int                             # antennas per BS, distributed layout
    K: int                             # users scheduled per cell
    sched_positions: np.ndarray        # (C, B, K, 2)
    measured_cluster: int
    measured: tuple[int, ...]          # in-cluster user indices, 0..K_c-1
    fading_own: np.ndarray             # (C, B, K_c, B*M) complex
    fading_meas: np.ndarray            # (C, B, n_meas, B*M) complex
    beta_own: np.ndarray               # (C, B, K_c)
    beta_meas: np.ndarray              # (C, B, n_meas)

    @property
    def B(self) -> int:
        return self.topo.bs_per_cluster

    @property
    def BM(self) -> int:
        return self.B * self.M

    @property
    def K_c(self) -> int:
        return self.B * self.K

    def cluster_user_positions(self, cluster: int) -> np.ndarray:
        """Positions of a cluster's K_c scheduled users, cell-major order."""
        return self.sched_positions[cluster].reshape(self.K_c, 2)


def draw_realization(
    topo: NetworkTopology,
    model: PathLossModel,
    M: int,
    sched_positions: np.ndarray,
    measured: tuple[int, ...],
    rng: np.random.Generator,
    measured_cluster: int | None = None,
) -> ChannelRealization:
    """Draw fading and evaluate path loss for one slot's scheduled users."""
    C, B, K, _ = sched_positions.shape
    BM = B * M
    K_c = B * K
    if measured_cluster is None:
        measured_cluster = topo.center_cluster
    n_meas = len(measured)

    # Per-cluster links: each cluster's BSs to its own K_c users.
    cluster_users = sched_positions.reshape(C, K_c, 2)
    r_own = wrapped_distance(
        topo, topo.bs_positions[:, :, None, :], cluster_users[:, None, :, :]
    )
    beta_own = path_loss(model, r_own)

    # Cross links: every BS to the measured users of the measured cluster.
    meas_pos = cluster_users[measured_cluster, list(measured)]
    r_meas = wrapped_distance(
        topo, topo.bs_positions[:, :, None, :], meas_pos[None, None, :, :]
    )
    beta_meas = path_loss(model, r_meas)

    fading_own = draw_fading(rng, C * B * K_c, BM).entries.reshape(C, B, K_c, BM)
    fading_meas = (
        draw_fading(rng, C * B * n_meas, BM).entries.reshape(C, B, n_meas, BM)
        if n_meas
        else np.zeros((C, B, 0, BM), dtype=complex)
    )
    return ChannelRealization(
        topo=topo,
        M=M,
        K=K,
        sched_positions=sched_positions,
        measured_cluster=measured_cluster,
        measured=tuple(measured),
        fading_own=fading_own,
        fading_meas=fading_meas,
        beta_own=beta_own,
        beta_meas=beta_meas,
    )


def compound_lsm(real: ChannelRealization, cluster: int, bs: int) -> np.ndarray:
    """Channel matrix (B*M x K_c) from one co-located BS to its cluster's users."""
    g = np.sqrt(real.beta_own[cluster, bs])[:, None] * real.fading_own[cluster, bs]
    return g.T.copy()


def composite_nm(real: ChannelRealization, cluster: int) -> np.ndarray:
    """Stacked channel matrix (B*M x K_c) from a cluster's B BSs to its users.

    Column u stacks the B per-BS M-antenna segments of user u in BS order.
    """
    M = real.M
    segs = (
        np.sqrt(real.beta_own[cluster])[:, :, None]
        * real.fading_own[cluster, :, :, :M]
    )                                             # (B, K_c, M)
    return segs.transpose(1, 0, 2).reshape(real.K_c, real.BM).T.copy()


def _measured_index(real: ChannelRealization, user: int) -> int:
    try:
        return real.measured.index(user)
    except ValueError:
        raise ValueError(
            f"user {user} of cluster {real.measured_cluster} was not measured"
        ) from None


def interference_channel(
    real: ChannelRealization, target_user: int, source: int | tuple[int, int],
    kind: SystemKind,
) -> np.ndarray:
    """Channel from an out-of-cluster source to a measured user.

    ``source`` is (cluster, bs) for the co-located architecture and a cluster
    id for the distributed one; either way it must lie outside the measured
    user's cluster.
    """
    i = _measured_index(real, target_user)
    if kind is SystemKind.LSM:
        j, m = source
        if j == real.measured_cluster:
            raise ValueError("interference source lies inside the user's own cluster")
        return np.sqrt(real.beta_meas[j, m, i]) * real.fading_meas[j, m, i]
    j = source
    if j == real.measured_cluster:
        raise ValueError("interference source lies inside the user's own cluster")
    segs = (
        np.sqrt(real.beta_meas[j, :, i])[:, None]
        * real.fading_meas[j, :, i, : real.M]
    )
    return segs.reshape(real.BM)


def own_channel(
    real: ChannelRealization, user: int, kind: SystemKind, bs: int | None = None
) -> np.ndarray:
    """Serving-side channel of an in-cluster user of the measured cluster.

    For the co-located architecture ``bs`` defaults to the user's own cell.
    """
    l = real.measured_cluster
    if kind is SystemKind.LSM:
        if bs is None:
            bs = user // real.K
        return np.sqrt(real.beta_own[l, bs, user]) * real.fading_own[l, bs, user]
    segs = (
        np.sqrt(real.beta_own[l, :, user])[:, None]
        * real.fading_own[l, :, user, : real.M]
    )
    return segs.reshape(real.BM)
