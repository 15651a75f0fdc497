"""Coin-tossing Markov chain approximations of general diffusions and their exit times."""

__version__ = "0.1.0"

from .chain import (
    ChainPath,
    ExtendedTime,
    extended_time_distance,
    hitting_time,
    path_value,
    simulate_chain,
)
from .conditions import (
    ConditionReport,
    TrendPolicy,
    check_condition_A,
    check_condition_B,
    check_condition_D,
)
from .errors import (
    ConfigError,
    DomainError,
    EmcelError,
    InconsistencyError,
    NumericalError,
    SchemeIntegrityError,
)
from .measure import (
    Atom,
    KernelValue,
    SpeedMeasure,
    StateSpace,
    brownian_speed_measure,
    cev_speed_measure,
    is_locally_finite_on,
    kernel_integral,
    measure_of_interval,
    sticky_brownian_speed_measure,
    tabulated_speed_measure,
)
from .montecarlo import (
    EmpiricalLaw,
    estimate_exit_law,
    expected_functional,
    ks_distance_truncated,
    simulate_exit_sample,
)
from .reference import (
    ReferenceLaw,
    besq_hit_zero_law,
    bm_exit_interval_law,
    cev_absorption_law,
    cev_to_besq,
)
from .scalefactors import (
    BoundaryThresholds,
    CustomScheme,
    EMCELScheme,
    ScaleFactorScheme,
    TruncatedEMCELScheme,
    WeakEulerCEVScheme,
    admissible_set_contains,
    boundary_threshold,
    emcel_scale,
    truncated_emcel_scale,
    weak_euler_cev_scale,
)
