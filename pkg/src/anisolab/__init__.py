"""anisolab: a numerical laboratory for the anisotropic degenerate
diffusion prototype with direction-dependent exponents.

Solves u_t = sum_i d/dx_i(|u_{x_i}|^(p_i-2) u_{x_i}) on rectangular
grids and empirically verifies the intrinsic Harnack estimates and the
oscillation-decay route to Hoelder continuity in the matching intrinsic
geometry.
"""

from .geometry import (
    DomainBox,
    IntrinsicCylinder,
    PowerVector,
    SpaceTimeBox,
    check_conditions,
    cylinder_fits,
    harmonic_mean,
    intrinsic_distance,
    make_cylinder,
    pi_distance,
    sobolev_exponent,
)
from .harnack import (
    HarnackReport,
    HarnackSample,
    SampleSpec,
    backward_ratio,
    estimate_constants,
    eval_at,
    forward_ratio,
    implied_backward_constants,
    two_sided_check,
)
from .hoelder import (
    IterationParams,
    OscillationTrace,
    alpha_formula,
    decay_check,
    fit_alpha,
    hoelder_seminorm,
    iteration_schedule,
    oscillation,
    per_variable_hoelder_check,
)
from .kernels import available_backends, get_backend, set_backend
from .solver import (
    Grid,
    GridSolution,
    InstabilityError,
    RunLog,
    flux,
    gaussian_exact,
    sample_heat_kernel,
    solve,
    stable_dt,
    step,
)
from .weak import CosineBump, weak_residual

__version__ = "0.1.0"
