"""elcoord: bounded, connectivity-preserving coordination of planar
two-link manipulators.

The package simulates networks of torque-limited robots that rendezvous in
task space while keeping every initial communication link shorter than the
radius, and it evaluates the sufficient-condition certificates that
guarantee those properties before a run starts.

Modules: dynamics (robot model and sampled bounds), potential (the edge
potential), graph (fixed communication topology), control (the two laws
and saturation), certificates (budget/energy conditions and gain
synthesis), sim (closed-loop integration and logging), scenario (TOML
files), figures (PNG reports), cli (command line).
"""

from .control import (
    ActuationLimits,
    AdaptiveControl,
    AdaptiveGains,
    FilterState,
    OutputFeedbackGains,
    adaptive_control,
    neighbor_gradient_rate,
    neighbor_gradient_sum,
    output_feedback_control,
    project_theta_dot,
    saturate_adaptive,
    saturate_output_feedback,
)
from .certificates import (
    Certificate,
    check_adaptive_budget,
    check_adaptive_energy,
    check_all,
    check_output_feedback_budget,
    check_output_feedback_energy,
    check_two_agent_stopping,
    find_shape_constant,
    synthesize_output_feedback_gains,
)
from .dynamics import (
    SINGULARITY_TOL,
    DynamicBounds,
    JointState,
    RobotModel,
    TaskState,
    coriolis_matrix,
    estimate_bounds,
    forward_dynamics,
    forward_kinematics,
    gravity_vector,
    jacobian,
    jacobian_dot,
    mass_matrix,
    merge_bounds,
    min_singular_value,
    regressor,
    task_space_terms,
    task_velocity,
)
from .errors import (
    DisconnectedInitialGraph,
    ElcoordError,
    InvalidGeometry,
    NotFound,
    OutOfDomain,
    ParseError,
    RegionContainsSingularity,
    SingularConfiguration,
)
from .graph import (
    CommGraph,
    build_initial_graph,
    incidence_matrix,
    is_connected,
    weighted_laplacian,
)
from .potential import (
    PotentialSpec,
    grad_i,
    hessian,
    nu,
    psi,
    psi_at_r,
    psi_dprime,
    psi_prime,
    sigma,
)
from .scenario import BoundsRequest, dumps_scenario, load_scenario, save_scenario
from .sim import (
    ADAPTIVE,
    CONVERGED_HOLD,
    CONVERGED_TOL,
    OUTPUT_FEEDBACK,
    NetworkState,
    Scenario,
    SimEvent,
    TrajectoryLog,
    coordination_error,
    initial_state,
    lyapunov_value,
    run,
    run_many,
    step,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
