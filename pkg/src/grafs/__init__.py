"""Band-limited quantum gate synthesis on Slepian-sequence coefficients."""

__version__ = "0.1.0"

from .quantum import (
    ControlPulse,
    ControlSystem,
    NumericalFailure,
    Propagation,
    PulseGrid,
    operator_from_dict,
    operator_to_dict,
    phase_invariant_fidelity,
    propagate,
    step_propagator,
    total_propagator,
    trace_fidelity,
)
from .slepian import (
    SlepianBasis,
    concentration,
    effective_dimension,
    endpoint_filter,
    generate_dpss,
)

__all__ = [
    "ControlPulse",
    "ControlSystem",
    "NumericalFailure",
    "Propagation",
    "PulseGrid",
    "SlepianBasis",
    "__version__",
    "concentration",
    "effective_dimension",
    "endpoint_filter",
    "generate_dpss",
    "operator_from_dict",
    "operator_to_dict",
    "phase_invariant_fidelity",
    "propagate",
    "step_propagator",
    "total_propagator",
    "trace_fidelity",
]
