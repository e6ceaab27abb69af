from .association import DaConfig, Landmark, LandmarkMap, associate  # noqa: F401
from .ekf import EkfState, ekf_add_landmark, ekf_init, ekf_predict, ekf_step, ekf_update  # noqa: F401
from .frontend import OdomIntegrationNoise, SlamFrontend  # noqa: F401
from .graph import OptimizeResult, PoseGraph, SingularSystem, add_keyframe, optimize_graph  # noqa: F401
from .velocity import estimate_velocity  # noqa: F401
