"""Generalized variances, skew informations and uncertainty relations for tracial positive maps.

The submodules are layered: :mod:`uncert.linalg` (Hermitian spectral
routines), :mod:`uncert.algebra` (block algebras and tracial maps),
:mod:`uncert.quantities`, :mod:`uncert.verifiers`, :mod:`uncert.instances`
and :mod:`uncert.campaign`. The most used names are re-exported here.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DomainMismatchError,
    InfeasibleDensityError,
    NotPhiDensityError,
    NotPSDError,
    NumericalError,
    SchemaError,
    UncertError,
    UnsupportedMapError,
)
from .linalg import (  # noqa: E402
    DEFAULT_TOL,
    Tolerance,
    eig_hermitian,
    geometric_mean,
    matrix_power,
    schur_positivity_check,
    SchurRoutes,
    schur_routes,
)
from .algebra import (  # noqa: E402
    BlockAlgebra,
    TracialMap,
    center_expectation,
    composite,
    make_phi_density,
    scaled_block_trace,
    usual_trace,
)
from .quantities import (  # noqa: E402
    gen_correlation_alpha,
    gen_covariance,
    gen_variance,
    j_quantity,
    kantorovich,
    skew_information_alpha,
    u_quantity,
)
from .verifiers import VerifierReport  # noqa: E402
from .instances import Instance, InstanceSpec, generate_instance  # noqa: E402
from .registry import THEOREMS, run_verifier, theorem_ids  # noqa: E402
from .campaign import CampaignConfig, counterexample_search, replay, run_campaign  # noqa: E402

__all__ = [
    "__version__",
    "UncertError", "ConfigError", "SchemaError", "NumericalError", "NotPSDError", "DomainMismatchError",
    "NotPhiDensityError", "InfeasibleDensityError", "UnsupportedMapError",
    "Tolerance", "DEFAULT_TOL", "eig_hermitian", "matrix_power", "geometric_mean",
    "SchurRoutes", "schur_routes", "schur_positivity_check",
    "BlockAlgebra", "TracialMap", "usual_trace", "scaled_block_trace", "center_expectation", "composite",
    "make_phi_density",
    "gen_covariance", "gen_variance", "gen_correlation_alpha", "skew_information_alpha", "j_quantity",
    "u_quantity", "kantorovich",
    "VerifierReport", "Instance", "InstanceSpec", "generate_instance",
    "THEOREMS", "theorem_ids", "run_verifier",
    "CampaignConfig", "run_campaign", "counterexample_search", "replay",
]
