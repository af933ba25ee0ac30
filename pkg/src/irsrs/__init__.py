"""Link-level optimizer for a reflecting-surface-aided two-layer
rate-splitting downlink, with a NOMA baseline and Monte-Carlo studies."""

from .channels import CsitPair, apply_csit_error, resolve_csit_error_var, sample_channels
from .experiments import (
    ExperimentSpec,
    ResultRow,
    RunResult,
    parse_config_file,
    read_results,
    run_experiment,
    run_rate_region,
    run_wsr_vs_snr,
    write_results,
)
from .model import (
    ChannelSet,
    ConfigError,
    EqualizerSet,
    IrsCodebook,
    IrsSelection,
    MmseWeightSet,
    ModelError,
    NetworkConfig,
    PrecoderSet,
    RateAllocation,
    apply_selection,
    build_codebook,
    effective_channel,
    precoder_power,
    validate_config,
)
from .optimizer import (
    NOMA_SCHEME,
    RS_SCHEME,
    Solution,
    SolverOptions,
    ao_solve,
    noma_solve,
)
from .rates import (
    InfeasibleAllocationError,
    RateReport,
    SinrReport,
    compute_sinrs,
    rates_from_sinrs,
    total_rates,
    wsr,
)
from .wmmse import (
    mmse_equalizers,
    mmse_values,
    optimal_weights,
    stream_powers,
    wmse_objective,
)

__version__ = "0.1.0"
