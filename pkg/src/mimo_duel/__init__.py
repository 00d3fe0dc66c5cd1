"""Multicell downlink simulator comparing two interference mitigation routes:

co-located large-antenna ZF precoding per BS (LS-MIMO) versus joint
precoding across distributed BSs (network MIMO), plus the Gamma-law
machinery that predicts their signal, interference, and SINR statistics.
"""

from .analytic import (
    ClusterGeometryView,
    GammaParams,
    cluster_interference_dist,
    dominance_predicate,
    gamma_ccdf,
    gamma_cdf,
    gamma_moment_match,
    interference_dist_single_beam,
    signal_dist_lsm,
    signal_dist_nm,
    sinr_ccdf_semianalytic,
)
from .beamform import BeamformerSet, PowerConfig, rzf_beams, zf_beams_lsm, zf_beams_nm
from .channel import (
    ChannelRealization,
    FadingBlock,
    SystemKind,
    composite_nm,
    compound_lsm,
    draw_fading,
    draw_realization,
    interference_channel,
    own_channel,
)
from .errors import ConfigurationError, SingularChannelError
from .metrics import (
    SampleSet,
    SinrSample,
    UtilityWeights,
    aggregate_interference,
    coverage_probability,
    dkw_band,
    empirical_cdf,
    ergodic_rate,
    intra_cluster_leakage,
    ks_statistic,
    ks_statistic_one_sample,
    signal_power,
    sinr_rzf,
    sinr_zf,
    weighted_sum_rate,
)
from .montecarlo import (
    ProbeResult,
    RateResult,
    SimulationConfig,
    round_robin_schedule,
    run_probe_experiment,
    run_rate_experiment,
    run_trials,
    table1_config,
)
from .topology import (
    NetworkTopology,
    PathLossModel,
    UserSet,
    build_lattice,
    path_loss,
    place_users,
    wrapped_distance,
)

__version__ = "0.1.0"
