"""Split-and-augmented Gibbs sampler for MR reconstruction with uncertainty.

The target is the augmented posterior over (x, b, c, d, e, h1..h4, tau)
obtained by splitting the acquisition pipeline into b = x, c = S d,
d = F e, e = Phi x, each split softened by a Gaussian of scale rho and
shifted by an auxiliary offset h_i with prior scale alpha. Every
conditional is Gaussian except b, whose TV-weighted conditional is
advanced by one proximal Moreau-Yosida Langevin (P-MYULA) step per sweep:

    b+ = (1 - gamma/lam) b - gamma * (b - x - h1) / rho^2
         + (gamma/lam) * prox_{tau*lam*TV}(b) + sqrt(2*gamma) * xi.

Variance convention: every Gaussian factor exp(-||v||^2 / (2 s^2)) is read
per real coordinate, with complex vectors split into independent real and
imaginary parts. Complex conditional draws therefore use the stated
variance for the real part and again for the imaginary part. This is the
only reading under which the x-covariance rho^2 (Phi^T Phi + I)^(-1) and
the d-covariance rho^2 (S^T S + I)^(-1) are the exact conditionals of one
joint density, which the small-instance posterior oracle test requires.

The auxiliary draws use the means consistent with that joint:
h1 ~ s*(b - x), h2 ~ s*(Sd - c) ... with s = alpha^2/(rho^2 + alpha^2)
and shared variance rho^2 * s. During burn-in every sweep is followed by
one SAPG update of tau; after burn-in tau is frozen and the post burn-in
x samples feed a streaming mean/variance accumulator.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NumericalError
from .forward_model import (
    CoilSensitivities,
    KSpaceData,
    SamplingMask,
    apply_phi,
    apply_phi_adjoint,
    mask_adjoint,
)
from .grids import dft2, idft2
from .sapg import SapgConfig, update_tau
from .tv_prox import TvConfig, tv_prox, tv_value


@dataclass(frozen=True)
class SamplerConfig:
    """All tunables of the Gibbs chain.

    ``lam`` (Moreau-Yosida envelope) and ``gamma`` (Langevin step) default
    to rho^2 and rho^2/4; MYULA stability needs gamma <= lam. ``sigma`` is
    the per-real-coordinate noise std assumed by the likelihood. With
    ``sapg=None`` tau stays frozen at ``tau_init`` for the whole run.
    """

    rho: float = 1.0
    alpha: float = 10.0
    sigma: float = 1.0
    lam: float | None = None
    gamma: float | None = None
    n_mc: int = 20000
    n_bi: int = 17000
    seed: int = 0
    tau_init: float = 1.0
    tv: TvConfig = field(default_factory=TvConfig)
    sapg: SapgConfig | None = field(default_factory=SapgConfig)

    def __post_init__(self):
        if self.rho <= 0 or self.alpha <= 0 or self.sigma <= 0:
            raise ValueError("rho, alpha and sigma must be positive")
        if self.lam is None:
            object.__setattr__(self, "lam", self.rho**2)
        if self.gamma is None:
            object.__setattr__(self, "gamma", self.rho**2 / 4.0)
        if self.lam <= 0 or self.gamma <= 0:
            raise ValueError("lam and gamma must be positive")
        if self.gamma > self.lam:
            raise ValueError("MYULA stability requires gamma <= lam")
        if not 0 <= self.n_bi < self.n_mc:
            raise ValueError("need 0 <= n_bi < n_mc")
        if self.tau_init < 0:
            raise ValueError("tau_init must be nonnegative")
        if self.sapg is not None and not (
            self.sapg.tau_min <= self.tau_init <= self.sapg.tau_max
        ):
            raise ValueError("tau_init must lie in the SAPG projection set")


@dataclass
class ChainState:
    """All sampler variables at one iteration."""

    x: np.ndarray  # real (H, W)
    b: np.ndarray  # real (H, W)
    c: np.ndarray  # complex (L, M), compact
    d: np.ndarray  # complex (L, H, W)
    e: np.ndarray  # complex (L, H, W)
    h1: np.ndarray  # real (H, W)
    h2: np.ndarray  # complex (L, M), compact
    h3: np.ndarray  # complex (L, H, W)
    h4: np.ndarray  # complex (L, H, W)
    tau: float


@dataclass(frozen=True)
class ReconResult:
    """MMSE image, per-pixel marginal std and chain diagnostics."""

    mmse: np.ndarray
    std_map: np.ndarray
    tau_trace: np.ndarray
    n_used: int
    diagnostics: dict[str, np.ndarray]


class RunningMoments:
    """Streaming per-pixel mean and variance (Welford's one-pass update)."""

    def __init__(self, shape: tuple[int, ...]):
        self.count = 0
        self.mean = np.zeros(shape)
        self._m2 = np.zeros(shape)

    def push(self, value: np.ndarray) -> None:
        self.count += 1
        delta = value - self.mean
        self.mean += delta / self.count
        self._m2 += delta * (value - self.mean)

    def variance(self) -> np.ndarray:
        """Population variance (divide by n); zeros until two samples."""
        if self.count == 0:
            return np.zeros_like(self._m2)
        return self._m2 / self.count

    def std(self) -> np.ndarray:
        return np.sqrt(self.variance())


def _cnoise(rng: np.random.Generator, shape: tuple[int, ...], std: float) -> np.ndarray:
    """Complex noise with independent real/imag parts of the given std."""
    return std * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def sample_x(
    state: ChainState,
    coils: CoilSensitivities,
    cfg: SamplerConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw x ~ N(mu_x, Sigma_x), Sigma_x = rho^2 (Phi^T Phi + I)^(-1).

    The covariance is diagonal with entries rho^2 / (sos + 1), so the draw
    is one independent scalar Gaussian per pixel; the complex contribution
    enters through the real-restricted adjoint of Phi.
    """
    denom = coils.sos + 1.0
    mean = (apply_phi_adjoint(state.e - state.h4, coils) + state.b - state.h1) / denom
    std = cfg.rho / np.sqrt(denom)
    return mean + std * rng.standard_normal(mean.shape)


def sample_b(
    state: ChainState, cfg: SamplerConfig, rng: np.random.Generator
) -> np.ndarray:
    """One P-MYULA step targeting exp(-tau TV(b) - ||b-(x+h1)||^2/(2 rho^2))."""
    ratio = cfg.gamma / cfg.lam
    drift = (state.b - state.x - state.h1) / cfg.rho**2
    prox = tv_prox(state.b, state.tau * cfg.lam, cfg.tv)
    return (
        (1.0 - ratio) * state.b
        - cfg.gamma * drift
        + ratio * prox
        + np.sqrt(2.0 * cfg.gamma) * rng.standard_normal(state.b.shape)
    )


def sample_c(
    state: ChainState, y: KSpaceData, cfg: SamplerConfig, rng: np.random.Generator
) -> np.ndarray:
    """Draw c at the kept locations: the data/coupling compromise.

    mu_c = (rho^2 y + sigma^2 (S d + h2)) / (sigma^2 + rho^2), variance
    rho^2 sigma^2 / (rho^2 + sigma^2) per real component.
    """
    r2, s2 = cfg.rho**2, cfg.sigma**2
    sd = y.mask.select(state.d)
    mean = (r2 * y.values + s2 * (sd + state.h2)) / (s2 + r2)
    std = np.sqrt(r2 * s2 / (r2 + s2))
    return mean + _cnoise(rng, mean.shape, std)


def sample_d(
    state: ChainState,
    mask: SamplingMask,
    cfg: SamplerConfig,
    rng: np.random.Generator,
    fe: np.ndarray | None = None,
) -> np.ndarray:
    """Draw d with Sigma_d = rho^2 (S^T S + I)^(-1).

    At sampled locations the mean averages S^T(c - h2) with F e + h3 and
    the per-component variance is rho^2/2; unsampled locations see only
    F e + h3 with variance rho^2. ``fe`` may supply a precomputed
    dft2(state.e).
    """
    if fe is None:
        fe = dft2(state.e)
    sts = mask.keep.astype(np.float64)[None, :, :]
    num = mask.embed(state.c - state.h2) + fe + state.h3
    mean = num / (sts + 1.0)
    std = cfg.rho / np.sqrt(sts + 1.0)
    noise = rng.standard_normal(mean.shape) + 1j * rng.standard_normal(mean.shape)
    return mean + std * noise


def sample_e(
    state: ChainState,
    coils: CoilSensitivities,
    cfg: SamplerConfig,
    rng: np.random.Generator,
    phix: np.ndarray | None = None,
) -> np.ndarray:
    """Draw e: mean (Phi x + h4 + F^H(d - h3)) / 2, variance rho^2/2.

    Unitarity of F makes Sigma_e = rho^2 (F^H F + I)^(-1) = (rho^2/2) I.
    ``phix`` may supply a precomputed apply_phi(state.x, coils).
    """
    if phix is None:
        phix = apply_phi(state.x, coils)
    mean = 0.5 * (phix + state.h4 + idft2(state.d - state.h3))
    std = cfg.rho / np.sqrt(2.0)
    return mean + _cnoise(rng, mean.shape, std)


def sample_h(
    state: ChainState,
    coils: CoilSensitivities,
    mask: SamplingMask,
    cfg: SamplerConfig,
    rng: np.random.Generator,
    fe: np.ndarray | None = None,
    phix: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Draw the four auxiliary offsets given the current splits.

    Means are the split residuals scaled by s = alpha^2/(rho^2+alpha^2):
    s*(b - x), s*(c - Sd), s*(d - Fe), s*(e - Phi x); the shared variance
    is rho^2 * s per real component. As alpha -> inf the mean tends to the
    full residual and the variance to rho^2.
    """
    if fe is None:
        fe = dft2(state.e)
    if phix is None:
        phix = apply_phi(state.x, coils)
    s = cfg.alpha**2 / (cfg.rho**2 + cfg.alpha**2)
    std = np.sqrt(cfg.rho**2 * s)
    h1 = s * (state.b - state.x) + std * rng.standard_normal(state.x.shape)
    h2 = s * (state.c - mask.select(state.d)) + _cnoise(rng, state.c.shape, std)
    h3 = s * (state.d - fe) + _cnoise(rng, state.d.shape, std)
    h4 = s * (state.e - phix) + _cnoise(rng, state.e.shape, std)
    return h1, h2, h3, h4


def init_state(
    y: KSpaceData,
    coils: CoilSensitivities,
    mask: SamplingMask,
    cfg: SamplerConfig,
    x0: np.ndarray | None = None,
) -> ChainState:
    """Initialise the chain, by default at the zero-filled reconstruction.

    Passing ``x0`` (e.g. a cheap fixed-weight MAP estimate) shortens the
    transient; the splits start at their noiseless images of x0 and the
    offsets at zero.
    """
    if x0 is None:
        x0 = apply_phi_adjoint(idft2(mask_adjoint(y)), coils) / coils.sos
    else:
        x0 = np.array(x0, dtype=np.float64)
        if x0.shape != (coils.height, coils.width):
            raise ValueError(f"x0 shape {x0.shape} does not match the coil maps")
    e0 = apply_phi(x0, coils)
    d0 = dft2(e0)
    shape = (coils.L, coils.height, coils.width)
    return ChainState(
        x=x0,
        b=x0.copy(),
        c=y.values.copy(),
        d=d0,
        e=e0,
        h1=np.zeros_like(x0),
        h2=np.zeros_like(y.values),
        h3=np.zeros(shape, dtype=np.complex128),
        h4=np.zeros(shape, dtype=np.complex128),
        tau=cfg.tau_init,
    )


def _misfit(
    state: ChainState,
    y: KSpaceData,
    coils: CoilSensitivities,
    phix: np.ndarray | None = None,
) -> float:
    if phix is None:
        phix = apply_phi(state.x, coils)
    pred = y.mask.select(dft2(phix))
    return float(np.sum(np.abs(y.values - pred) ** 2))


def run_chain(
    y: KSpaceData,
    coils: CoilSensitivities,
    mask: SamplingMask,
    cfg: SamplerConfig,
    x0: np.ndarray | None = None,
) -> ReconResult:
    """Run the full Gibbs chain and accumulate the MMSE and std map.

    Sweep order per iteration: x, b, c, d, e, h1..h4. During the first
    ``n_bi`` sweeps a SAPG step updates tau after every sweep; afterwards
    tau is frozen at its final value and the x samples are averaged.
    Deterministic for a fixed cfg.seed. Raises NumericalError if the
    chain leaves the finite range.
    """
    if not np.array_equal(mask.keep, y.mask.keep):
        raise ValueError("mask does not match the k-space data")
    if (coils.height, coils.width) != (mask.height, mask.width):
        raise ValueError("coil maps do not match the mask shape")
    if y.L != coils.L:
        raise ValueError("k-space coil count does not match the sensitivity maps")

    rng = np.random.default_rng(cfg.seed)
    state = init_state(y, coils, mask, cfg, x0)
    sapg_cfg = None
    if cfg.sapg is not None:
        dim = cfg.sapg.dim or mask.height * mask.width
        sapg_cfg = replace(cfg.sapg, dim=dim)

    n_mc, n_bi = cfg.n_mc, cfg.n_bi
    tau_trace = np.empty(n_mc)
    tv_trace = np.empty(n_mc)
    misfit_trace = np.empty(n_mc)
    moments = RunningMoments(state.x.shape)
    fe = dft2(state.e)  # carried across sweeps; e only changes inside them

    for k in range(1, n_mc + 1):
        state.x = sample_x(state, coils, cfg, rng)
        state.b = sample_b(state, cfg, rng)
        state.c = sample_c(state, y, cfg, rng)
        state.d = sample_d(state, mask, cfg, rng, fe=fe)
        phix = apply_phi(state.x, coils)
        state.e = sample_e(state, coils, cfg, rng, phix=phix)
        fe = dft2(state.e)
        state.h1, state.h2, state.h3, state.h4 = sample_h(
            state, coils, mask, cfg, rng, fe=fe, phix=phix
        )

        if not np.all(np.isfinite(state.x)):
            raise NumericalError(f"chain diverged: non-finite x at iteration {k}")

        tv_x = tv_value(state.x, cfg.tv)
        if k <= n_bi and sapg_cfg is not None:
            state.tau = update_tau(state.tau, tv_x, k, sapg_cfg)
        if k > n_bi:
            moments.push(state.x)

        tau_trace[k - 1] = state.tau
        tv_trace[k - 1] = tv_x
        misfit_trace[k - 1] = _misfit(state, y, coils, phix=phix)

    return ReconResult(
        mmse=moments.mean.copy(),
        std_map=moments.std(),
        tau_trace=tau_trace,
        n_used=moments.count,
        diagnostics={
            "iteration": np.arange(1, n_mc + 1),
            "tau": tau_trace,
            "tv_x": tv_trace,
            "misfit": misfit_trace,
        },
    )
