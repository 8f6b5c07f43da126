"""MR image reconstruction with uncertainty quantification.

Reconstructs real-valued images from under-sampled multi-coil k-space by
Gibbs sampling an augmented posterior with a total-variation prior,
returning the posterior mean and a per-pixel marginal standard deviation
map, alongside zero-filled IFFT and ADMM baselines for comparison.
"""

from .baselines import AdmmConfig, admm_recon, admm_solve, ifft_recon
from .errors import ConfigError, InputError, MriUqError, NumericalError
from .experiments import (
    BenchmarkPlan,
    BenchmarkReport,
    MaskSpec,
    corrcoef,
    derive_seed,
    make_coils,
    make_mask,
    make_phantom,
    rmse,
    run_benchmark,
    sigma_for_snr,
)
from .forward_model import (
    CoilSensitivities,
    KSpaceData,
    SamplingMask,
    apply_mask,
    apply_phi,
    apply_phi_adjoint,
    mask_adjoint,
    simulate,
)
from .grids import GradientField, dft2, div, grad, idft2
from .sapg import SapgConfig, update_tau
from .spa_sampler import (
    ChainState,
    ReconResult,
    RunningMoments,
    SamplerConfig,
    run_chain,
)
from .tv_prox import TvConfig, tv_prox, tv_value

__version__ = "0.1.0"

__all__ = [
    "AdmmConfig",
    "BenchmarkPlan",
    "BenchmarkReport",
    "ChainState",
    "CoilSensitivities",
    "ConfigError",
    "GradientField",
    "InputError",
    "KSpaceData",
    "MaskSpec",
    "MriUqError",
    "NumericalError",
    "ReconResult",
    "RunningMoments",
    "SamplerConfig",
    "SamplingMask",
    "SapgConfig",
    "TvConfig",
    "admm_recon",
    "admm_solve",
    "apply_mask",
    "apply_phi",
    "apply_phi_adjoint",
    "corrcoef",
    "derive_seed",
    "dft2",
    "div",
    "grad",
    "idft2",
    "ifft_recon",
    "make_coils",
    "make_mask",
    "make_phantom",
    "mask_adjoint",
    "rmse",
    "run_benchmark",
    "run_chain",
    "sigma_for_snr",
    "simulate",
    "tv_prox",
    "tv_value",
    "update_tau",
]
