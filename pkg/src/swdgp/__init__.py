"""Standing-wave decomposition Gaussian process regression."""
from .exact import DenseGPModel, FactorizationError, PredictiveResult, exact_fit, exact_fit_banded, exact_predict
from .gridgp import GridGPModel, grid_fit, grid_predict, grid_predict_fft
from .kernel import (
    BandedMatrix,
    GridSpec,
    KernelParams,
    PositivityError,
    auto_length_scale,
    banded_grid_kernel,
    max_length_scale_ratio,
    sparse_cross_kernel,
)
from .latent import (
    LatentFitError,
    LatentProjection,
    latent_fit,
    latent_predict,
    posterior_covariance_diag,
    residual_diagnostic,
)
from .swd import SWDEigensystem, build_eigensystem

__version__ = "0.1.0"

__all__ = [
    "BandedMatrix",
    "DenseGPModel",
    "FactorizationError",
    "GridGPModel",
    "GridSpec",
    "KernelParams",
    "LatentFitError",
    "LatentProjection",
    "PositivityError",
    "PredictiveResult",
    "SWDEigensystem",
    "auto_length_scale",
    "banded_grid_kernel",
    "build_eigensystem",
    "exact_fit",
    "exact_fit_banded",
    "exact_predict",
    "grid_fit",
    "grid_predict",
    "grid_predict_fft",
    "latent_fit",
    "latent_predict",
    "max_length_scale_ratio",
    "posterior_covariance_diag",
    "residual_diagnostic",
    "sparse_cross_kernel",
]
