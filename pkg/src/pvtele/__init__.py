"""Continuous-variable teleportation with photon-varying non-Gaussian operations.

Characteristic functions of photon-subtracted/added two-mode Gaussian states
through multi-index Hermite functions, teleportation response ratios and
fidelities, optimization of generalized operations, and a truncated Fock-space
oracle for cross-checking.
"""

from .gaussian_states import (
    ChannelParams,
    GaussianState,
    SqueezingParam,
    apply_loss,
    tmsc,
    tmst,
    tmsv,
)
from .hermite import (
    HermiteParams,
    MultiIndex,
    PrecisionPolicy,
    hermite_general,
    hermite_two_mode_four_index,
    stirling2,
)
from .optimize import ObjectiveConfig, PSOConfig, objective, optimize_e, optimize_g
from .pv_ops import (
    GeneralizedPVSpec,
    GeneralizedPVState,
    PhotonVariedState,
    PVSpec,
    h_matrix,
    nla_coefficients,
    pv_cf,
    response_ratio,
)
from .teleport import (
    InputState,
    QuadratureGrid,
    ResourceCF,
    fidelity,
    h_max,
    h_prime,
    output_cf,
    response_function,
)

__version__ = "0.1.0"
