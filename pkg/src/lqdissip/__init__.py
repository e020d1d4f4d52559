"""Dissipativity-based reformulation of indefinite linear-quadratic control.

An indefinite cost ``int s(y, u) dt`` of a dissipative system equals the
storage at the initial state plus the nonnegative cost ``int ||w||^2 dt`` of
the dissipation output ``w``.  This package computes the pieces for dense
state-space models and for semi-discretized transport, wave and heat
equations with boundary control.
"""
__version__ = "0.1.0"

from .dissipative import (  # noqa: E402
    ExtendedSystem,
    StateSpaceSystem,
    StorageCertificate,
    SupplyRate,
    check_dissipativity,
    dissipation_factor,
    extend_system,
    extended_supply,
    lure_residual,
    supply_eval,
    supply_matrix,
)
from .lure_lq import (  # noqa: E402
    FeedbackGain,
    LureSolution,
    ValueReport,
    combined_lure_check,
    maximality_probe,
    optimal_feedback,
    solve_singular_lq,
    stabilizing_feedback,
    value_functions,
)
from .models import (  # noqa: E402
    ModelBundle,
    build_heat,
    build_transport,
    build_wave,
    transport_exact_value,
    wave_exact_value,
)
from .simulate import (  # noqa: E402
    BalanceReport,
    Trajectory,
    cost_quadrature,
    dissipation_balance,
    simulate_lti,
    transport_characteristics,
)
