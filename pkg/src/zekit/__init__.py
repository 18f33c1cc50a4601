"""Zero-error capacity toolkit.

Operator systems (noncommutative graphs), channel synthesis from a target
graph, Knill-Laflamme zero-error code verification and multistart search,
positive-operator bases, and end-to-end superactivation reproductions.
"""

__version__ = "0.1.0"

from .errors import (
    AngleSumMismatch,
    ConstructionFailed,
    DimensionGuard,
    DimensionMismatch,
    HypothesisNotMet,
    InvalidInput,
    NotHermitian,
    NotUnit,
    SynthesisFailed,
    ZekitError,
)
from .matcore import Angle, PI, angle_sum, herm_eig_min, kron, kron_all, svd_rank
from .opsys import (
    OperatorSystem,
    SystemVerdict,
    make_N_theta,
    membership,
    tensor_all,
    tensor_systems,
    validate_system,
)

__all__ = [
    "Angle",
    "PI",
    "angle_sum",
    "herm_eig_min",
    "kron",
    "kron_all",
    "svd_rank",
    "OperatorSystem",
    "SystemVerdict",
    "make_N_theta",
    "membership",
    "tensor_all",
    "tensor_systems",
    "validate_system",
    "ZekitError",
    "NotHermitian",
    "DimensionMismatch",
    "InvalidInput",
    "NotUnit",
    "SynthesisFailed",
    "ConstructionFailed",
    "HypothesisNotMet",
    "AngleSumMismatch",
    "DimensionGuard",
]
