"""SINR evaluation and sample statistics.

SINR is computed directly from beam gains and the noise power; no data
symbols or noise samples are ever drawn. With per-beam transmit SNR
rho = P_T / (K sigma^2), a user's SINR is

    rho * |g^H w|^2 / (rho * (inter + intra) + 1)

where ``inter`` sums squared projections onto every beam transmitted by
other clusters and ``intra`` sums residual leakage from the own cluster
(identically zero under ZF).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .beamform import BeamformerSet, PowerConfig
from .channel import ChannelRealization, SystemKind, interference_channel, own_channel

__all__ = [
    "SinrSample",
    "SampleSet",
    "UtilityWeights",
    "sinr_zf",
    "sinr_rzf",
    "signal_power",
    "aggregate_interference",
    "intra_cluster_leakage",
    "coverage_probability",
    "ergodic_rate",
    "weighted_sum_rate",
    "empirical_cdf",
    "ks_statistic",
    "ks_statistic_one_sample",
    "dkw_band",
]

_ZF_LEAKAGE_GUARD = 1e-16


@dataclass(frozen=True)
class SinrSample:
    """One user's SINR decomposition for one slot (powers are pre-rho)."""

    user: int
    kind: SystemKind
    scheme: str
    signal_power: float
    interference_power: float
    intra_power: float
    sinr: float


@dataclass(frozen=True)
class SampleSet:
    """Immutable tagged collection of scalar Monte Carlo samples."""

    values: np.ndarray
    quantity: str
    meta: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size

    @property
    def sorted_values(self) -> np.ndarray:
        return np.sort(self.values)


@dataclass(frozen=True)
class UtilityWeights:
    """Nonnegative scheduler weight per user."""

    weights: Mapping[int, float]

    def __post_init__(self):
        if any(w < 0 for w in self.weights.values()):
            raise ValueError("weights must be nonnegative")

    def __getitem__(self, user: int) -> float:
        return self.weights[user]


def _beams_of_cluster(beams: Sequence[BeamformerSet], cluster: int, kind: SystemKind):
    return [b for b in beams if b.cluster == cluster and b.kind is kind]


def signal_power(
    kind: SystemKind,
    real: ChannelRealization,
    beams: Sequence[BeamformerSet],
    user: int,
) -> float:
    """|g^H w|^2 for the user's own beam."""
    l = real.measured_cluster
    if kind is SystemKind.LSM:
        bs = user // real.K
        own = next(
            b for b in _beams_of_cluster(beams, l, kind) if b.bs == bs
        )
    else:
        own = _beams_of_cluster(beams, l, kind)[0]
    w = own.beams[:, own.users.index(user)]
    g = own_channel(real, user, kind)
    return float(np.abs(np.vdot(g, w)) ** 2)


def aggregate_interference(
    kind: SystemKind,
    real: ChannelRealization,
    beams: Sequence[BeamformerSet],
    user: int,
) -> float:
    """Pre-rho sum of squared projections onto all out-of-cluster beams."""
    l = real.measured_cluster
    total = 0.0
    for bset in beams:
        if bset.kind is not kind or bset.cluster == l:
            continue
        source = (bset.cluster, bset.bs) if kind is SystemKind.LSM else bset.cluster
        f = interference_channel(real, user, source, kind)
        total += float(np.sum(np.abs(f.conj() @ bset.beams) ** 2))
    return total


def intra_cluster_leakage(
    kind: SystemKind,
    real: ChannelRealization,
    beams: Sequence[BeamformerSet],
    user: int,
) -> float:
    """Pre-rho leakage from the own cluster's other beams onto this user."""
    l = real.measured_cluster
    total = 0.0
    for bset in _beams_of_cluster(beams, l, kind):
        g = own_channel(real, user, kind, bs=bset.bs)
        gains = np.abs(g.conj() @ bset.beams) ** 2
        if user in bset.users:
            gains[bset.users.index(user)] = 0.0
        total += float(gains.sum())
    return total


def _sinr(
    kind: SystemKind,
    real: ChannelRealization,
    beams: Sequence[BeamformerSet],
    user: int,
    power: PowerConfig,
    scheme: str,
) -> SinrSample:
    sig = signal_power(kind, real, beams, user)
    inter = aggregate_interference(kind, real, beams, user)
    intra = intra_cluster_leakage(kind, real, beams, user)
    if scheme == "zf":
        if intra > _ZF_LEAKAGE_GUARD * sig:
            raise RuntimeError(
                f"ZF intra-cluster leakage {intra:.3e} exceeds "
                f"{_ZF_LEAKAGE_GUARD:.0e} of the signal {sig:.3e}; "
                "beamforming is broken"
            )
        intra = 0.0
    rho = power.rho
    return SinrSample(
        user=user,
        kind=kind,
        scheme=scheme,
        signal_power=sig,
        interference_power=inter,
        intra_power=intra,
        sinr=rho * sig / (rho * (inter + intra) + 1.0),
    )


def sinr_zf(
    kind: SystemKind,
    real: ChannelRealization,
    beams: Sequence[BeamformerSet],
    user: int,
    power: PowerConfig,
) -> SinrSample:
    """SINR under ZF: intra-cluster terms are nulled by construction."""
    return _sinr(kind, real, beams, user, power, "zf")


def sinr_rzf(
    kind: SystemKind,
    real: ChannelRealization,
    beams: Sequence[BeamformerSet],
    user: int,
    power: PowerConfig,
) -> SinrSample:
    """SINR under RZF: own-cluster residual leakage joins the denominator."""
    return _sinr(kind, real, beams, user, power, "rzf")


# --- sample statistics ------------------------------------------------------

def coverage_probability(samples: SampleSet, eta: float) -> float:
    """Fraction of samples at or above the threshold eta."""
    if len(samples) == 0:
        raise ValueError("coverage probability of an empty sample set")
    return float(np.mean(samples.values >= eta))


def ergodic_rate(samples: SampleSet) -> float:
    """Mean of log2(1 + sinr) over the samples, in bit/s/Hz."""
    if len(samples) == 0:
        raise ValueError("ergodic rate of an empty sample set")
    return float(np.mean(np.log2(1.0 + samples.values)))


def weighted_sum_rate(
    per_user: Mapping[int, SampleSet], weights: UtilityWeights
) -> float:
    """Sum over users of weight * ergodic rate, in bit/s/Hz."""
    total = 0.0
    for user, samples in per_user.items():
        try:
            w = weights[user]
        except KeyError:
            raise ValueError(f"no scheduling weight for user {user}") from None
        total += w * ergodic_rate(samples)
    return total


def empirical_cdf(samples: SampleSet) -> tuple[np.ndarray, np.ndarray]:
    """Right-continuous step CDF: (sorted values, i/n probabilities)."""
    if len(samples) == 0:
        raise ValueError("empirical CDF of an empty sample set")
    x = samples.sorted_values
    return x, np.arange(1, x.size + 1) / x.size


def ks_statistic(a: SampleSet, b: SampleSet) -> float:
    """Two-sample Kolmogorov-Smirnov statistic: sup |F_a - F_b|."""
    if len(a) == 0 or len(b) == 0:
        raise ValueError("KS statistic of an empty sample set")
    xa, xb = a.sorted_values, b.sorted_values
    grid = np.concatenate([xa, xb])
    fa = np.searchsorted(xa, grid, side="right") / xa.size
    fb = np.searchsorted(xb, grid, side="right") / xb.size
    return float(np.max(np.abs(fa - fb)))


def ks_statistic_one_sample(samples: SampleSet, cdf) -> float:
    """One-sample KS statistic against an analytic CDF callable."""
    if len(samples) == 0:
        raise ValueError("KS statistic of an empty sample set")
    x = samples.sorted_values
    n = x.size
    f = np.asarray(cdf(x), dtype=float)
    steps = np.arange(n + 1) / n
    return float(max(np.max(steps[1:] - f), np.max(f - steps[:-1])))


def dkw_band(n: int, alpha: float = 0.05) -> float:
    """Half-width of the DKW confidence band for an n-sample empirical CDF."""
    if n < 1:
        raise ValueError("sample count must be positive")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    return float(np.sqrt(np.log(2.0 / alpha) / (2.0 * n)))
