"""Cluster lattice geometry, wrap-around distances, user placement, path loss.

The network is a square lattice of cooperating clusters laid out on a flat
torus (wrap-around world), each cluster containing a grid of base stations.
Cells are the rectangular Voronoi regions of the BSs; because BS spacing is
uniform across cluster boundaries, the Voronoi cell of every BS is exactly
its grid rectangle and lies inside its cluster.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "NetworkTopology",
    "UserSet",
    "PathLossModel",
    "build_lattice",
    "wrapped_distance",
    "path_loss",
    "place_users",
]


def _grid_factors(n: int) -> tuple[int, int]:
    """Most-square factorization n = nx * ny with nx >= ny."""
    nx = math.isqrt(n)
    if nx * nx == n:
        return nx, nx
    nx += 1
    while n % nx:
        nx += 1
    return nx, n // nx


@dataclass(frozen=True)
class NetworkTopology:
    """Immutable BS layout on a torus of side ``world_extent``."""

    num_clusters: int
    bs_per_cluster: int
    cluster_side: float
    cluster_grid: int                 # clusters per world edge
    bs_grid: tuple[int, int]          # BS columns/rows per cluster
    bs_positions: np.ndarray          # (C, B, 2) world coordinates
    world_extent: float

    @property
    def cell_extent(self) -> tuple[float, float]:
        """Width/height of each rectangular cell."""
        bx, by = self.bs_grid
        return self.cluster_side / bx, self.cluster_side / by

    @property
    def center_cluster(self) -> int:
        g = self.cluster_grid
        return (g // 2) * g + g // 2

    def cluster_origin(self, cluster: int) -> np.ndarray:
        g = self.cluster_grid
        cx, cy = cluster % g, cluster // g
        return np.array([cx * self.cluster_side, cy * self.cluster_side])

    def cluster_center(self, cluster: int) -> np.ndarray:
        return self.cluster_origin(cluster) + self.cluster_side / 2.0

    def cell_origin(self, cluster: int, bs: int) -> np.ndarray:
        """Lower-left corner of the rectangular cell of one BS."""
        bx, _ = self.bs_grid
        jx, jy = bs % bx, bs // bx
        w, h = self.cell_extent
        return self.cluster_origin(cluster) + np.array([jx * w, jy * h])

    def cluster_neighbors(self, cluster: int) -> set[int]:
        """Distinct clusters adjacent (incl. diagonals) under wrap-around."""
        g = self.cluster_grid
        cx, cy = cluster % g, cluster // g
        out = set()
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                if dx == dy == 0:
                    continue
                out.add(((cy + dy) % g) * g + (cx + dx) % g)
        return out - {cluster}


@dataclass(frozen=True)
class UserSet:
    """Users placed in every cell: arrays indexed (cluster, cell, user)."""

    positions: np.ndarray             # (C, B, K_T, 2)

    @property
    def users_per_cell(self) -> int:
        return self.positions.shape[2]

    @property
    def total(self) -> int:
        return int(np.prod(self.positions.shape[:3]))


@dataclass(frozen=True)
class PathLossModel:
    """Power-law decay r**-alpha with a BS exclusion disk."""

    alpha: float = 3.5
    exclusion_radius: float = 10.0

    def __post_init__(self):
        if not self.alpha > 2:
            raise ConfigurationError(f"alpha must exceed 2, got {self.alpha}")
        if not self.exclusion_radius > 0:
            raise ConfigurationError(
                f"exclusion_radius must be positive, got {self.exclusion_radius}"
            )


def build_lattice(C: int, B: int, L: float) -> NetworkTopology:
    """Build a sqrt(C) x sqrt(C) cluster lattice, each cluster a BS grid.

    C must be a perfect square. B is factored into the most-square grid
    (square when B is a perfect square); BSs sit at the centers of the
    resulting sub-rectangles, so inter-BS spacing is uniform across the
    whole torus.
    """
    g = math.isqrt(C)
    if g * g != C or C < 1:
        raise ConfigurationError(f"C must be a perfect square, got C={C}")
    if B < 1:
        raise ConfigurationError(f"B must be positive, got B={B}")
    if not L > 0:
        raise ConfigurationError(f"L must be positive, got L={L}")
    bx, by = _grid_factors(B)

    w, h = L / bx, L / by
    pos = np.empty((C, B, 2))
    for c in range(C):
        cx, cy = c % g, c // g
        for b in range(B):
            jx, jy = b % bx, b // bx
            pos[c, b, 0] = cx * L + (jx + 0.5) * w
            pos[c, b, 1] = cy * L + (jy + 0.5) * h
    return NetworkTopology(
        num_clusters=C,
        bs_per_cluster=B,
        cluster_side=float(L),
        cluster_grid=g,
        bs_grid=(bx, by),
        bs_positions=pos,
        world_extent=float(g * L),
    )


def wrapped_distance(topo: NetworkTopology, a, b) -> np.ndarray | float:
    """Torus distance: coordinate differences reduced to [-W/2, W/2].

    Broadcasts over leading axes; the last axis holds (x, y).
    """
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    w = topo.world_extent
    d -= w * np.round(d / w)
    out = np.hypot(d[..., 0], d[..., 1])
    return float(out) if out.ndim == 0 else out


def path_loss(model: PathLossModel, r) -> np.ndarray | float:
    """Linear channel gain r**-alpha; r below the exclusion radius is a bug."""
    r = np.asarray(r, dtype=float)
    if np.any(r < model.exclusion_radius):
        raise ValueError(
            f"distance {float(np.min(r)):.3f} m below exclusion radius "
            f"{model.exclusion_radius} m; user placement is broken upstream"
        )
    out = r ** (-model.alpha)
    return float(out) if out.ndim == 0 else out


def place_users(
    topo: NetworkTopology, K_T: int, model: PathLossModel, rng: np.random.Generator
) -> UserSet:
    """Drop K_T users uniformly in every cell, outside the exclusion disk.

    Sampling uniformly in a BS's rectangular cell makes that BS the nearest
    one by construction; rejection only enforces the exclusion radius.
    """
    if K_T < 1:
        raise ConfigurationError(f"K_T must be at least 1, got {K_T}")
    C, B = topo.num_clusters, topo.bs_per_cluster
    w, h = topo.cell_extent
    if model.exclusion_radius >= min(w, h) / 2.0:
        raise ConfigurationError(
            f"exclusion_radius {model.exclusion_radius} m does not fit inside "
            f"cells of {w:.1f} x {h:.1f} m"
        )

    # Cell-local offsets from each BS (cells are centered on their BS).
    local = rng.uniform(-0.5, 0.5, size=(C, B, K_T, 2)) * np.array([w, h])
    while True:
        bad = np.hypot(local[..., 0], local[..., 1]) < model.exclusion_radius
        n_bad = int(bad.sum())
        if n_bad == 0:
            break
        local[bad] = rng.uniform(-0.5, 0.5, size=(n_bad, 2)) * np.array([w, h])
    return UserSet(positions=topo.bs_positions[:, :, None, :] + local)
