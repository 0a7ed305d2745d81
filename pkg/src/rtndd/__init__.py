"""Simulation and analytic toolkit for dynamical decoupling of a qubit
coupled to 1/f noise from an ensemble of bistable charges."""

from .noise import (
    EnsembleSpec,
    Fluctuator,
    SwitchEvent,
    analytic_spectrum,
    ensemble_mean,
    ensemble_variance,
    next_flip_time,
    one_over_f_amplitude,
    sample_ensemble,
    sample_initial_state,
    switching_rates,
)
from .schedule import Drift, Pulse, PulseProtocol, Schedule, build_schedule
from .benchmarks import (
    AlphaDecomposition,
    SingleChargeParams,
    UnsupportedParametersError,
    UnsupportedRegimeError,
    Z_multi,
    Z_single,
    alpha,
    conditional_liouvillian,
    decay_a,
    decay_f,
    regularized_hyp2f1,
    transfer_matrix_Z,
    transfer_matrix_Z_cycles,
)

from .dynamics import (
    ObservableSeries,
    QubitParams,
    QubitState,
    propagator,
    pulse_unitary,
    run_ensemble,
    run_trajectory,
)

__version__ = "0.1.0"

