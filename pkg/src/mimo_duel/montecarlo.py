"""Trial orchestration: scheduling, channel draws, beam builds, sample runs.

Every trial is seeded deterministically from the master seed and the trial
index, results are merged in trial order, and both architectures are
evaluated on the same placements and the same fading pool, so runs are
bit-reproducible for any worker count and comparisons are paired.
"""

from __future__ import annotations

import functools
import hashlib
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .beamform import BeamformerSet, PowerConfig, rzf_beams, zf_beams_lsm, zf_beams_nm
from .channel import ChannelRealization, SystemKind, draw_realization
from .errors import ConfigurationError, SingularChannelError
from .metrics import SampleSet, aggregate_interference, signal_power, sinr_rzf, sinr_zf
from .topology import (
    NetworkTopology,
    PathLossModel,
    build_lattice,
    place_users,
    wrapped_distance,
)

__all__ = [
    "SimulationConfig",
    "TrialResult",
    "ProbeResult",
    "RateResult",
    "table1_config",
    "round_robin_schedule",
    "run_trials",
    "run_probe_experiment",
    "run_rate_experiment",
    "resolve_workers",
]

BOTH_KINDS = (SystemKind.LSM, SystemKind.NM)

_MAX_REDRAWS = 8


def _dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


@dataclass(frozen=True)
class SimulationConfig:
    """Full parameter set of one simulation run.

    Antenna counts follow the distributed layout: each BS has M antennas
    there, and B*M in the co-located layout, so both provide
    B*(M - K) + 1 spatial degrees of freedom per user.
    """

    C: int = 9                       # clusters
    B: int = 4                       # BSs per cluster
    L: float = 1000.0                # cluster side, m
    M: int = 5                       # antennas per BS, distributed layout
    K: int = 5                       # users scheduled per cell
    K_T: int = 60                    # user population per cell
    alpha: float = 3.5               # path-loss exponent
    exclusion_radius: float = 10.0   # m
    P_T_dbm: float = 43.0            # per-BS max power
    N0_dbm_hz: float = -174.0        # noise density
    W_hz: float = 20e6               # bandwidth
    scheme: str = "zf"               # "zf" | "rzf"
    trials: int = 10_000
    seed: int = 20140530
    probes: tuple[tuple[float, float], ...] = ((15.0, 15.0), (235.0, 235.0))

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.K > self.M:
            raise ConfigurationError(
                f"K: scheduled users per cell ({self.K}) must not exceed "
                f"antennas per BS M ({self.M})"
            )
        if self.K < 1:
            raise ConfigurationError(f"K must be at least 1, got {self.K}")
        if self.K_T % self.K:
            raise ConfigurationError(
                f"K_T: user population ({self.K_T}) must be divisible by K ({self.K})"
            )
        if self.scheme not in ("zf", "rzf"):
            raise ConfigurationError(f"scheme must be 'zf' or 'rzf', got {self.scheme}")
        if self.trials < 1:
            raise ConfigurationError(f"trials must be at least 1, got {self.trials}")
        # Delegates C/B/L and radius checks.
        topo = build_lattice(self.C, self.B, self.L)
        w, h = topo.cell_extent
        if self.exclusion_radius >= min(w, h) / 2.0:
            raise ConfigurationError(
                f"exclusion_radius {self.exclusion_radius} m does not fit in "
                f"{w:.0f} x {h:.0f} m cells"
            )
        for px, py in self.probes:
            if abs(px) > self.L / 2 or abs(py) > self.L / 2:
                raise ConfigurationError(
                    f"probes: ({px}, {py}) lies outside the center cluster"
                )

    # -- derived quantities --------------------------------------------------

    @property
    def BM(self) -> int:
        return self.B * self.M

    @property
    def K_c(self) -> int:
        return self.B * self.K

    @property
    def zeta(self) -> int:
        """Spatial degrees of freedom per user after zero-forcing."""
        return self.B * (self.M - self.K) + 1

    @property
    def groups(self) -> int:
        return self.K_T // self.K

    @property
    def P_T_w(self) -> float:
        return _dbm_to_watts(self.P_T_dbm)

    @property
    def sigma2_w(self) -> float:
        return _dbm_to_watts(self.N0_dbm_hz) * self.W_hz

    @property
    def rho(self) -> float:
        return self.P_T_w / (self.K * self.sigma2_w)

    def power(self) -> PowerConfig:
        return PowerConfig(P_T=self.P_T_w, sigma2=self.sigma2_w, K=self.K)

    def topology(self) -> NetworkTopology:
        return build_lattice(self.C, self.B, self.L)

    def pathloss(self) -> PathLossModel:
        return PathLossModel(alpha=self.alpha, exclusion_radius=self.exclusion_radius)

    def regularization(self) -> float:
        """RZF ridge term: 1/rho, one shared value per cluster."""
        return 1.0 / self.rho

    def config_hash(self) -> str:
        text = ";".join(f"{k}={v!r}" for k, v in sorted(vars(self).items()))
        return hashlib.sha256(text.encode()).hexdigest()[:12]


def table1_config(**overrides) -> SimulationConfig:
    """The default multicell benchmark configuration."""
    return replace(SimulationConfig(), **overrides) if overrides else SimulationConfig()


def round_robin_schedule(K_T: int, K: int, slot: int) -> np.ndarray:
    """Indices of the K users served in the given slot.

    Groups of K consecutive users take turns; every user is served exactly
    once per K_T/K slots, i.e. with long-run weight K/K_T.
    """
    if K_T % K:
        raise ConfigurationError(f"K_T ({K_T}) must be divisible by K ({K})")
    group = slot % (K_T // K)
    return np.arange(group * K, (group + 1) * K)


def resolve_workers() -> int:
    """Worker count: MIMO_DUEL_THREADS caps it, 0 or unset means auto."""
    raw = os.environ.get("MIMO_DUEL_THREADS", "").strip()
    auto = os.cpu_count() or 1
    if not raw:
        return auto
    try:
        cap = int(raw)
    except ValueError:
        raise ConfigurationError(f"MIMO_DUEL_THREADS must be an integer, got {raw!r}")
    if cap < 0:
        raise ConfigurationError(f"MIMO_DUEL_THREADS must be nonnegative, got {cap}")
    return auto if cap == 0 else min(cap, auto)


def run_trials(
    trials: int,
    per_trial: Callable[[int], object],
    merge: Callable[[object, object], object],
    workers: int | None = None,
):
    """Evaluate per_trial(0..trials-1) and fold results in trial order.

    Trials carry their own seeds, and merging always happens in index order,
    so the outcome is independent of the worker count.
    """
    if trials < 1:
        raise ConfigurationError(f"trials must be at least 1, got {trials}")
    if workers is None:
        workers = resolve_workers()
    if workers > 1 and trials > 1:
        chunk = max(1, trials // (workers * 8))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(per_trial, range(trials), chunksize=chunk))
    else:
        results = [per_trial(t) for t in range(trials)]
    return functools.reduce(merge, results)


# --- per-trial machinery ----------------------------------------------------

def _trial_rng(seed: int, *stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, *stream])


def _scheduled_positions(
    topo: NetworkTopology,
    model: PathLossModel,
    K_T: int,
    K: int,
    slot: int,
    rng: np.random.Generator,
) -> np.ndarray:
    users = place_users(topo, K_T, model, rng)
    return users.positions[:, :, round_robin_schedule(K_T, K, slot), :].copy()


def _beam_sets(
    config: SimulationConfig,
    real: ChannelRealization,
    scheme: str,
    kinds: Sequence[SystemKind],
    clusters: Iterable[int],
) -> list[BeamformerSet]:
    """ZF or RZF beams for the requested clusters and architectures.

    Equivalent to calling zf_beams_lsm / zf_beams_nm / rzf_beams per owner
    (asserted by tests) but solves all same-shape systems in one batched
    call, which dominates the per-trial cost otherwise.
    """
    from .beamform import _equilibrated_zf, _normalize, _regularized_zf

    cl = list(clusters)
    B, K, K_c, M, BM = config.B, config.K, config.K_c, config.M, config.BM
    reg = config.regularization()
    solve = (
        _equilibrated_zf if scheme == "zf" else lambda G: _regularized_zf(G, reg)
    )
    sets: list[BeamformerSet] = []
    if SystemKind.LSM in kinds and cl:
        g = np.sqrt(real.beta_own[cl])[..., None] * real.fading_own[cl]
        G = g.transpose(0, 1, 3, 2).reshape(len(cl) * B, BM, K_c)
        W = solve(G)
        for i, l in enumerate(cl):
            for b in range(B):
                owned = tuple(range(b * K, (b + 1) * K))
                beams = _normalize(W[i * B + b][:, owned])
                sets.append(
                    BeamformerSet(
                        beams=beams, cluster=l, bs=b, scheme=scheme, users=owned
                    )
                )
    if SystemKind.NM in kinds and cl:
        segs = (
            np.sqrt(real.beta_own[cl])[..., None] * real.fading_own[cl, :, :, :M]
        )                                            # (n, B, K_c, M)
        G = segs.transpose(0, 2, 1, 3).reshape(len(cl), K_c, BM).transpose(0, 2, 1)
        W = _normalize(solve(G))
        for i, l in enumerate(cl):
            sets.append(
                BeamformerSet(
                    beams=W[i],
                    cluster=l,
                    bs=None,
                    scheme=scheme,
                    users=tuple(range(K_c)),
                )
            )
    return sets


@dataclass(frozen=True)
class TrialResult:
    """Samples harvested from one trial, keyed (quantity, kind)."""

    samples: Mapping[tuple[str, SystemKind], np.ndarray]

    @staticmethod
    def merge(a: "TrialResult", b: "TrialResult") -> "TrialResult":
        keys = set(a.samples) | set(b.samples)
        return TrialResult(
            samples={
                k: np.concatenate(
                    [a.samples.get(k, np.empty(0)), b.samples.get(k, np.empty(0))]
                )
                for k in keys
            }
        )


@dataclass(frozen=True)
class ProbeResult:
    """Sample sets per quantity/architecture for one fixed probe location."""

    config: SimulationConfig
    probe: tuple[float, float]
    sample_sets: Mapping[tuple[str, SystemKind], SampleSet]

    def get(self, quantity: str, kind: SystemKind) -> SampleSet:
        return self.sample_sets[(quantity, kind)]


def _probe_cell(topo: NetworkTopology, probe_world: np.ndarray) -> int:
    center = topo.center_cluster
    r = wrapped_distance(topo, probe_world, topo.bs_positions[center])
    return int(np.argmin(r))


def _probe_trial(
    config: SimulationConfig,
    probe_world: np.ndarray,
    measure: tuple[str, ...],
    t: int,
) -> TrialResult:
    topo = config.topology()
    model = config.pathloss()
    center = topo.center_cluster
    cell = _probe_cell(topo, probe_world)
    user = cell * config.K
    power = config.power()

    rng = _trial_rng(config.seed, t)
    for _ in range(_MAX_REDRAWS):
        try:
            sched = _scheduled_positions(topo, model, config.K_T, config.K, t, rng)
            sched[center, cell, 0] = probe_world
            real = draw_realization(
                topo, model, config.M, sched, measured=(user,), rng=rng
            )
            out: dict[tuple[str, SystemKind], np.ndarray] = {}
            if "sinr" in measure:
                beams = _beam_sets(
                    config, real, config.scheme, BOTH_KINDS, range(config.C)
                )
                op = sinr_zf if config.scheme == "zf" else sinr_rzf
                for kind in BOTH_KINDS:
                    s = op(kind, real, beams, user, power)
                    out[("sinr", kind)] = np.array([s.sinr])
                    out[("signal", kind)] = np.array([s.signal_power])
                    out[("interference", kind)] = np.array([s.interference_power])
                return TrialResult(out)
            if "signal" in measure:
                beams = _beam_sets(config, real, config.scheme, BOTH_KINDS, [center])
                for kind in BOTH_KINDS:
                    out[("signal", kind)] = np.array(
                        [signal_power(kind, real, beams, user)]
                    )
            if "interference" in measure:
                others = [l for l in range(config.C) if l != center]
                beams = _beam_sets(config, real, config.scheme, BOTH_KINDS, others)
                for kind in BOTH_KINDS:
                    out[("interference", kind)] = np.array(
                        [aggregate_interference(kind, real, beams, user)]
                    )
            return TrialResult(out)
        except SingularChannelError:
            continue
    raise SingularChannelError(
        f"trial {t} kept drawing rank-deficient channels; configuration suspect"
    )


def run_probe_experiment(
    config: SimulationConfig,
    probe: tuple[float, float] | None = None,
    measure: tuple[str, ...] = ("signal", "interference"),
    workers: int | None = None,
) -> ProbeResult:
    """Monte Carlo at a fixed user location inside the center cluster.

    The probe position is given relative to the center-cluster center. Per
    trial the probe replaces one scheduled user of its cell; the remaining
    users are re-placed and served round-robin. Emits per-architecture
    samples of the requested quantities (pre-rho powers; "sinr" implies
    both powers as by-products).
    """
    if probe is None:
        probe = config.probes[0]
    bad = set(measure) - {"signal", "interference", "sinr"}
    if bad:
        raise ConfigurationError(f"unknown probe quantities: {sorted(bad)}")
    topo = config.topology()
    center_mid = topo.cluster_center(topo.center_cluster)
    probe_world = center_mid + np.asarray(probe, dtype=float)
    if np.any(np.abs(np.asarray(probe)) > config.L / 2):
        raise ConfigurationError(f"probe {probe} lies outside the center cluster")
    cell = _probe_cell(topo, probe_world)
    r_own = wrapped_distance(
        topo, probe_world, topo.bs_positions[topo.center_cluster, cell]
    )
    if r_own < config.exclusion_radius:
        raise ConfigurationError(
            f"probe {probe} sits within the exclusion radius of its BS"
        )

    merged = run_trials(
        config.trials,
        functools.partial(_probe_trial, config, probe_world, tuple(measure)),
        TrialResult.merge,
        workers=workers,
    )
    meta = {
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "trials": config.trials,
        "scheme": config.scheme,
        "probe": tuple(probe),
    }
    sets = {
        (q, kind): SampleSet(
            values=np.sort(v), quantity=q, meta={**meta, "kind": kind.value}
        )
        for (q, kind), v in merged.samples.items()
    }
    return ProbeResult(config=config, probe=tuple(probe), sample_sets=sets)


# --- rate experiment ---------------------------------------------------------

@dataclass(frozen=True)
class RateResult:
    """Center-cluster rate samples per (architecture, scheme).

    ``user_rates`` holds per-user rates averaged over that user's fading
    draws (unweighted, bit/s/Hz); ``slot_rates`` holds every instantaneous
    per-slot rate. The round-robin scheduling weight K/K_T is stored in the
    metadata and applied by reporting layers.
    """

    config: SimulationConfig
    user_rates: Mapping[tuple[SystemKind, str], SampleSet]
    slot_rates: Mapping[tuple[SystemKind, str], SampleSet]

    def percentile(
        self, kind: SystemKind, scheme: str, q: float, which: str = "user"
    ) -> float:
        table = self.user_rates if which == "user" else self.slot_rates
        return float(np.percentile(table[(kind, scheme)].values, q))


def _rate_trial(
    config: SimulationConfig,
    schemes: tuple[str, ...],
    fading_reps: int,
    t: int,
) -> TrialResult:
    """One placement x slot: serve the scheduled group over fading draws."""
    topo = config.topology()
    model = config.pathloss()
    center = topo.center_cluster
    power = config.power()
    placement, slot = divmod(t, config.groups)

    place_rng = _trial_rng(config.seed, 0, placement)
    users = place_users(topo, config.K_T, model, place_rng)
    sched = users.positions[
        :, :, round_robin_schedule(config.K_T, config.K, slot), :
    ].copy()
    measured = tuple(range(config.K_c))

    acc = {
        (scheme, kind): np.zeros(config.K_c)
        for scheme in schemes
        for kind in BOTH_KINDS
    }
    inst = {key: [] for key in acc}
    fading_rng = _trial_rng(config.seed, 1, t)
    for _ in range(fading_reps):
        for attempt in range(_MAX_REDRAWS):
            try:
                real = draw_realization(
                    topo, model, config.M, sched, measured=measured, rng=fading_rng
                )
                for scheme in schemes:
                    beams = _beam_sets(config, real, scheme, BOTH_KINDS, range(config.C))
                    op = sinr_zf if scheme == "zf" else sinr_rzf
                    for kind in BOTH_KINDS:
                        rates = np.array(
                            [
                                np.log2(1.0 + op(kind, real, beams, u, power).sinr)
                                for u in measured
                            ]
                        )
                        acc[(scheme, kind)] += rates
                        inst[(scheme, kind)].append(rates)
                break
            except SingularChannelError:
                continue
        else:
            raise SingularChannelError(f"rate trial {t}: channels stayed singular")

    out: dict[tuple[str, SystemKind], np.ndarray] = {}
    for (scheme, kind), totals in acc.items():
        out[(f"user_rate_{scheme}", kind)] = totals / fading_reps
        out[(f"slot_rate_{scheme}", kind)] = np.concatenate(inst[(scheme, kind)])
    return TrialResult(out)


def run_rate_experiment(
    config: SimulationConfig,
    schemes: tuple[str, ...] = ("zf",),
    placements: int = 2000,
    fading_reps: int = 1,
    workers: int | None = None,
) -> RateResult:
    """Rate CDFs of center-cluster users over placements, slots, and fading.

    Each placement serves all K_T/K round-robin groups once per fading
    repetition; every architecture (and every requested scheme) sees the
    same placements and the same fading pool.
    """
    for scheme in schemes:
        if scheme not in ("zf", "rzf"):
            raise ConfigurationError(f"unknown scheme {scheme!r}")
    trials = placements * config.groups
    merged = run_trials(
        trials,
        functools.partial(_rate_trial, config, tuple(schemes), fading_reps),
        TrialResult.merge,
        workers=workers,
    )
    meta = {
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "placements": placements,
        "fading_reps": fading_reps,
        "weight": config.K / config.K_T,
    }
    user_rates = {}
    slot_rates = {}
    for scheme in schemes:
        for kind in BOTH_KINDS:
            user_rates[(kind, scheme)] = SampleSet(
                values=np.sort(merged.samples[(f"user_rate_{scheme}", kind)]),
                quantity="user_rate",
                meta={**meta, "kind": kind.value, "scheme": scheme},
            )
            slot_rates[(kind, scheme)] = SampleSet(
                values=np.sort(merged.samples[(f"slot_rate_{scheme}", kind)]),
                quantity="slot_rate",
                meta={**meta, "kind": kind.value, "scheme": scheme},
            )
    return RateResult(config=config, user_rates=user_rates, slot_rates=slot_rates)
