"""aoikit: age-of-information trace statistics, clock-bias analysis, FCFS
queue simulation, and a live UDP/TCP measurement harness."""

from .agestats import (
    GEOMETRIC,
    HFORM,
    QFORM,
    AgeSamplePath,
    AgeStatistics,
    AreaDecomposition,
    area_decomposition,
    compute_statistics,
    loss_runs,
    peak_average_age,
    penalty_average,
    sample_path,
    time_average_age,
)
from .penalty import (
    PenaltyDomainError,
    PenaltyFunction,
    exponential,
    linear,
    logarithmic,
)
from .queuesim import (
    SimConfig,
    SimResult,
    SweepPoint,
    SweepResult,
    bias_experiment,
    load_sweep,
    simulate_queue,
)
from .syncbias import (
    ClockBiasModel,
    ShiftedTrace,
    shift_reception,
    sync_bias_closed_form,
    sync_bias_direct,
)
from .trace import (
    NS_PER_S,
    Trace,
    TraceError,
    UpdateRecord,
    effective_trace,
    ns_to_s,
    read_trace_csv,
    s_to_ns,
    write_trace_csv,
)

__version__ = "0.1.0"
