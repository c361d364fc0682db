"""Dephasing dynamics and non-Markovianity of qubits under telegraph and
1/f^alpha noise."""

from .channel import (
    DensityMatrix,
    StatePair,
    apply_dephasing,
    apply_dephasing_two_qubit,
    optimal_pair_search,
    recoverable_distance,
    trace_distance,
)
from .exceptions import ConvergenceError, DomainError, QuadratureError
from .kernels import (
    ColoredKernel,
    ColoredParams,
    DephasingTrace,
    RtnParams,
    colored_dephasing,
    dephasing_trace,
    rtn_dephasing,
    switching_rate_pdf,
)
from .mc_oracle import (
    EnsembleStats,
    mc_colored_dephasing,
    mc_rtn_dephasing,
    sample_rate,
    sample_rtn_path,
)
from .measures import (
    MeasureReport,
    bcm_measure,
    blp_measure,
    flux,
    measure_report,
    non_markovianity_regime,
    quantum_capacity,
    quantum_capacity_curve,
    rtn_bcm_series,
    rtn_blp_closed,
    rtn_flux_analytic,
    trace_distance_curve,
    two_qubit_capacity,
)

__version__ = "0.1.0"
