"""Hermite moment approximations of linear kinetic equations with L2-stable wall conditions."""

__version__ = "0.1.0"

from .hermite import enumerate_indices, gauss_hermite_rule, hermite_eval, basis_eval  # noqa: E402
from .matrices import assemble, flux_matrix, half_matrix, onsager_matrix, theta, spectral_norm  # noqa: E402
from .kinetic import BGKOperator, bgk_apply, bc_project, orthogonal_project, q_seminorm  # noqa: E402
from .solver import DVMConfig, Mesh1D, MomentField, SolverConfig, dvm_run, run  # noqa: E402

__all__ = [
    "enumerate_indices", "gauss_hermite_rule", "hermite_eval", "basis_eval",
    "assemble", "flux_matrix", "half_matrix", "onsager_matrix", "theta", "spectral_norm",
    "BGKOperator", "bgk_apply", "bc_project", "orthogonal_project", "q_seminorm",
    "DVMConfig", "Mesh1D", "MomentField", "SolverConfig", "dvm_run", "run",
]
