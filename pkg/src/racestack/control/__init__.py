from .bicycle import V_FLOOR, BicycleModel, augment_with_actuator, discretize, linearize_bicycle  # noqa: F401
from .lowlevel import (  # noqa: F401
    AllocatorConfig,
    PiVelocityConfig,
    PiVelocityController,
    YawMomentPid,
    YawPidConfig,
    allocate,
    geometry_matrix,
    pure_pursuit_steer,
    traction_limit,
)
from .mpc import (  # noqa: F401
    CondensedQp,
    MpcConfig,
    MpcSolution,
    NotSpd,
    PathEnded,
    ReferenceWindow,
    build_reference,
    condense_qp,
    rollout_cost,
    solve_mpc,
)
