"""Zero-forcing and regularized zero-forcing downlink beams.

ZF beams are the columns of G (G^H G)^-1: beam i is orthogonal to every
other in-cluster user's channel. They are computed through a QR
factorization of the column-equilibrated channel matrix rather than an
explicit Gram inverse; equilibration leaves the normalized beam directions
unchanged (it rescales columns of the unnormalized solution) and keeps the
nulling residual at roundoff level despite path-loss spreads of many orders
of magnitude.

RZF replaces the Gram inverse by (G^H G + reg I)^-1, trading exact nulls for
signal power. Every beam is normalized to unit Euclidean norm so that equal
per-beam power allocation is applied outside.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import SystemKind
from .errors import ConfigurationError, SingularChannelError

__all__ = [
    "BeamformerSet",
    "PowerConfig",
    "zf_beams_lsm",
    "zf_beams_nm",
    "rzf_beams",
]

_RANK_RTOL = 1e-10


@dataclass(frozen=True)
class BeamformerSet:
    """Unit-norm beams transmitted by one owner (a BS or a whole cluster)."""

    beams: np.ndarray                  # (B*M, n_beams), unit columns
    cluster: int
    bs: int | None                     # None when the cluster jointly owns them
    scheme: str                        # "zf" | "rzf"
    users: tuple[int, ...]             # in-cluster user index per column

    @property
    def kind(self) -> SystemKind:
        return SystemKind.NM if self.bs is None else SystemKind.LSM

    @property
    def num_beams(self) -> int:
        return self.beams.shape[1]


@dataclass(frozen=True)
class PowerConfig:
    """Transmit power and noise bookkeeping, all in linear watts."""

    P_T: float                         # max power of one BS
    sigma2: float                      # noise power N0 * W
    K: int                             # beams per BS worth of power split

    def __post_init__(self):
        if not (self.P_T > 0 and self.sigma2 > 0 and self.K >= 1):
            raise ConfigurationError(f"invalid power configuration: {self}")

    @property
    def rho(self) -> float:
        """Per-beam transmit SNR P_T / (K sigma^2)."""
        return self.P_T / (self.K * self.sigma2)

    @property
    def per_beam_power(self) -> float:
        return self.P_T / self.K

    def cluster_power(self, B: int) -> float:
        """Total cluster power: B BSs' worth, identical for both layouts."""
        return B * self.P_T


def _equilibrated_zf(G: np.ndarray) -> np.ndarray:
    """Unnormalized ZF solution G (G^H G)^-1, batched over leading axes."""
    norms = np.linalg.norm(G, axis=-2, keepdims=True)
    if np.any(norms == 0):
        raise SingularChannelError("channel matrix has a zero column")
    Gs = G / norms
    Q, R = np.linalg.qr(Gs)
    diag = np.abs(np.diagonal(R, axis1=-2, axis2=-1))
    if np.any(diag < _RANK_RTOL * np.max(diag, axis=-1, keepdims=True)):
        raise SingularChannelError(
            "channel matrix is rank-deficient beyond solver tolerance"
        )
    k = G.shape[-1]
    eye = np.broadcast_to(np.eye(k, dtype=G.dtype), R.shape[:-2] + (k, k))
    # G_s (G_s^H G_s)^-1 = Q R^-H; scaled columns cancel in normalization.
    return Q @ np.linalg.solve(np.conj(np.swapaxes(R, -2, -1)), eye)


def _normalize(W: np.ndarray) -> np.ndarray:
    return W / np.linalg.norm(W, axis=-2, keepdims=True)


def _regularized_zf(G: np.ndarray, reg: float) -> np.ndarray:
    """Unnormalized RZF solution G (G^H G + reg I)^-1, batched."""
    k = G.shape[-1]
    Gh = np.conj(np.swapaxes(G, -2, -1))
    A = Gh @ G + reg * np.eye(k, dtype=G.dtype)
    # A is Hermitian positive definite: G A^-1 = (A^-1 G^H)^H.
    return np.conj(np.swapaxes(np.linalg.solve(A, Gh), -2, -1))


def zf_beams_lsm(
    G_bl: np.ndarray,
    owned_columns,
    *,
    cluster: int = 0,
    bs: int = 0,
) -> BeamformerSet:
    """ZF beams of one co-located BS toward its own K scheduled users.

    ``G_bl`` holds the channels to all K_c in-cluster users; the BS keeps
    only the columns of its own users but stays orthogonal to everyone.
    """
    owned = tuple(int(i) for i in owned_columns)
    BM, K_c = G_bl.shape
    if BM < K_c:
        raise SingularChannelError(
            f"{BM} antennas cannot zero-force {K_c} in-cluster users"
        )
    W = _equilibrated_zf(G_bl)[:, owned]
    return BeamformerSet(
        beams=_normalize(W), cluster=cluster, bs=bs, scheme="zf", users=owned
    )


def zf_beams_nm(G_l: np.ndarray, *, cluster: int = 0) -> BeamformerSet:
    """Joint ZF beams of a cluster toward all of its K_c scheduled users."""
    BM, K_c = G_l.shape
    if BM < K_c:
        raise SingularChannelError(
            f"{BM} antennas cannot zero-force {K_c} in-cluster users"
        )
    W = _equilibrated_zf(G_l)
    return BeamformerSet(
        beams=_normalize(W),
        cluster=cluster,
        bs=None,
        scheme="zf",
        users=tuple(range(K_c)),
    )


def rzf_beams(
    G: np.ndarray,
    reg: float,
    owned_columns=None,
    *,
    cluster: int = 0,
    bs: int | None = None,
) -> BeamformerSet:
    """Regularized ZF beams: G (G^H G + reg I)^-1, columns normalized.

    Pass ``owned_columns`` (and ``bs``) when a single co-located BS computes
    the precoder and keeps only its own users' columns; omit both for joint
    cluster-wide precoding.
    """
    if not reg > 0:
        raise ConfigurationError(f"regularization must be positive, got {reg}")
    K_c = G.shape[1]
    owned = (
        tuple(range(K_c))
        if owned_columns is None
        else tuple(int(i) for i in owned_columns)
    )
    W = _regularized_zf(G, reg)[:, owned]
    return BeamformerSet(
        beams=_normalize(W), cluster=cluster, bs=bs, scheme="rzf", users=owned
    )
