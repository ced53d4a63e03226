"""Python bindings for the mvgf McKean-Vlasov gradient-flow library.

Scenarios are passed as config text in the same grammar the `mvgf` CLI reads.
Densities are numpy arrays of nodal values, shape (M,) or (M, M) with axis 0 = x.
"""

from ._mvgf import (
    ConfigError,
    NumericalError,
    __version__,
    cli,
    free_energy,
    lojasiewicz_fit,
    normalize_config,
    particles,
    run_flow,
    spectrum,
    stationary,
    tv_bound,
    w2_circle,
)

__all__ = [
    "ConfigError",
    "NumericalError",
    "__version__",
    "cli",
    "free_energy",
    "lojasiewicz_fit",
    "normalize_config",
    "particles",
    "run_flow",
    "spectrum",
    "stationary",
    "tv_bound",
    "w2_circle",
]
