"""Baseband simulator and analysis toolkit for multi-code multi-carrier
CDMA links driven through a nonlinear traveling-wave tube amplifier.

The transmit chain splits each user's bit stream onto orthogonal code
channels and subcarriers, spreads with a long pseudo-noise sequence, and
optionally predistorts before the amplifier.  The receiver is a bank of
coherent correlators.  Monte Carlo runs and Gaussian-approximation theory
curves share one record format and CSV schema.
"""

from .analysis import (
    BerRecord,
    binomial_ci95,
    conditional_ber,
    erfc,
    fading_averaged_ber,
    theoretical_curve,
)
from .channel import (
    ChannelRealization,
    NoiseSpec,
    PathTap,
    add_awgn,
    apply_multipath,
    draw_channel,
    path_power_profile,
    propagate_samples,
)
from .codes import (
    PRIMITIVE_TAPS,
    PnSequence,
    WalshMatrix,
    generate_msequence,
    generate_walsh,
    periodic_correlation,
)
from .config import ConfigError, load_config, saleh_from_keys, scenario_from_keys
from .harness import (
    CSV_HEADER,
    RunReport,
    Scenario,
    emit_csv,
    measure_variances,
    parse_csv,
    preset,
    run_scenario,
    scenario_echo,
)
from .hpa import (
    OperatingPoint,
    SalehParams,
    amam,
    ampm,
    apply_hpa,
    apply_predistorter,
    compute_obo,
    operating_point_for_power,
    pd_amplitude,
    set_operating_point,
)
from .receiver import (
    SOURCE_NAMES,
    BitDecisions,
    CorrelatorOutput,
    InterferenceVariances,
    correlate_slots,
    decompose_correlator_output,
    estimate_interference_variances,
    recover_bits,
    synthesize_source_frames,
)
from .txchain import (
    BasebandFrame,
    LinkConfig,
    UserSymbols,
    modulate_user,
    multicode_spread,
    parallel_to_serial,
    serial_to_parallel,
    slot_signatures,
    subcarrier_frequency,
    walsh_chip_indices,
)

__version__ = "0.1.0"

__all__ = [
    "BasebandFrame",
    "BerRecord",
    "BitDecisions",
    "CSV_HEADER",
    "ChannelRealization",
    "ConfigError",
    "CorrelatorOutput",
    "InterferenceVariances",
    "LinkConfig",
    "NoiseSpec",
    "OperatingPoint",
    "PRIMITIVE_TAPS",
    "PathTap",
    "PnSequence",
    "RunReport",
    "SOURCE_NAMES",
    "SalehParams",
    "Scenario",
    "UserSymbols",
    "WalshMatrix",
    "add_awgn",
    "amam",
    "ampm",
    "apply_hpa",
    "apply_multipath",
    "apply_predistorter",
    "binomial_ci95",
    "compute_obo",
    "conditional_ber",
    "correlate_slots",
    "decompose_correlator_output",
    "draw_channel",
    "emit_csv",
    "erfc",
    "estimate_interference_variances",
    "fading_averaged_ber",
    "generate_msequence",
    "generate_walsh",
    "load_config",
    "measure_variances",
    "modulate_user",
    "multicode_spread",
    "operating_point_for_power",
    "parallel_to_serial",
    "parse_csv",
    "path_power_profile",
    "pd_amplitude",
    "periodic_correlation",
    "preset",
    "propagate_samples",
    "recover_bits",
    "run_scenario",
    "saleh_from_keys",
    "scenario_echo",
    "scenario_from_keys",
    "serial_to_parallel",
    "set_operating_point",
    "slot_signatures",
    "subcarrier_frequency",
    "synthesize_source_frames",
    "theoretical_curve",
    "walsh_chip_indices",
]
