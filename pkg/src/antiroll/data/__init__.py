from .excite import ExcitationConfig, inject_excitation
from .hankel import (
    DataLibrary,
    ReducedLibrary,
    build_hankel,
    check_persistent_excitation,
    concatenate,
    numerical_rank,
    partition,
    svd_reduce,
    verify_trajectory_membership,
)
from .log import TrajectoryLog
from .store import load_library, read_header, save_library

__all__ = [
    "DataLibrary",
    "ExcitationConfig",
    "ReducedLibrary",
    "TrajectoryLog",
    "build_hankel",
    "check_persistent_excitation",
    "concatenate",
    "inject_excitation",
    "load_library",
    "numerical_rank",
    "partition",
    "read_header",
    "save_library",
    "svd_reduce",
    "verify_trajectory_membership",
]
