"""Optimisation baselines: zero-filled IFFT, ADMM-TV and ADMM-Wav.

The ADMM solvers minimise

    0.5 * sigma^-2 * ||y - S F Phi x||^2 + reg_weight * R(x)

with R either isotropic TV or the l1 norm of an orthonormal single-level
Haar transform. Internally the objective is scaled by sigma^2 so the
noiseless limit stays well defined: the x-update solves
(Re A^H A + penalty I) x = Re A^H y + penalty (z - u) by a few warm-started
conjugate-gradient steps, the z-update is the TV prox or Haar
soft-threshold with weight sigma^2 * reg_weight / penalty, and the scaled
dual u accumulates the split residual.
"""

from __future__ import annotations

from dataclasses import dataclass, field

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
from .tv_prox import TvConfig, tv_prox, tv_value

PRIORS = ("tv", "haar-wavelet")


@dataclass(frozen=True)
class AdmmConfig:
    reg_weight: float = 0.1
    penalty: float = 1.0
    max_iters: int = 200
    tol: float = 1e-6  # relative primal-residual tolerance
    prior: str = "tv"
    cg_iters: int = 10
    tv: TvConfig = field(default_factory=lambda: TvConfig(max_iters=200, tol=1e-8))

    def __post_init__(self):
        if self.reg_weight < 0:
            raise ValueError("reg_weight must be nonnegative")
        if self.penalty <= 0:
            raise ValueError("penalty must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.prior not in PRIORS:
            raise ValueError(f"prior must be one of {PRIORS}, got {self.prior!r}")
        if self.cg_iters < 1:
            raise ValueError("cg_iters must be >= 1")


@dataclass(frozen=True)
class AdmmResult:
    x: np.ndarray
    objective_trace: np.ndarray  # spec objective, one value per iteration
    iterations: int
    converged: bool


def ifft_recon(
    y: KSpaceData, coils: CoilSensitivities, mask: SamplingMask
) -> np.ndarray:
    """Zero-filled inverse transform with coil combination.

    x = Re(Phi^H F^H S^T y) / diag(Phi^H Phi); for a single all-ones coil
    this is the real part of the inverse DFT of the zero-filled spectrum.
    """
    return apply_phi_adjoint(idft2(mask_adjoint(y, mask)), coils) / coils.sos


def soft_threshold(v: np.ndarray, threshold: float) -> np.ndarray:
    """Elementwise soft shrinkage: zero within the threshold, shift outside."""
    return np.sign(v) * np.maximum(np.abs(v) - threshold, 0.0)


def haar2(x: np.ndarray) -> np.ndarray:
    """Orthonormal single-level 2-D Haar transform (needs even H and W).

    Subbands are tiled [[LL, HL], [LH, HH]] in the output array.
    """
    h, w = x.shape
    if h % 2 or w % 2:
        raise ValueError("haar2 requires even height and width")
    a = x[0::2, 0::2]
    b = x[0::2, 1::2]
    c = x[1::2, 0::2]
    d = x[1::2, 1::2]
    ll = (a + b + c + d) / 2.0
    hl = (a - b + c - d) / 2.0
    lh = (a + b - c - d) / 2.0
    hh = (a - b - c + d) / 2.0
    return np.block([[ll, hl], [lh, hh]])


def ihaar2(coeffs: np.ndarray) -> np.ndarray:
    """Inverse of ``haar2``."""
    h, w = coeffs.shape
    if h % 2 or w % 2:
        raise ValueError("ihaar2 requires even height and width")
    hh2, wh2 = h // 2, w // 2
    ll = coeffs[:hh2, :wh2]
    hl = coeffs[:hh2, wh2:]
    lh = coeffs[hh2:, :wh2]
    hh = coeffs[hh2:, wh2:]
    x = np.empty((h, w))
    x[0::2, 0::2] = (ll + hl + lh + hh) / 2.0
    x[0::2, 1::2] = (ll - hl + lh - hh) / 2.0
    x[1::2, 0::2] = (ll + hl - lh - hh) / 2.0
    x[1::2, 1::2] = (ll - hl - lh + hh) / 2.0
    return x


def _regulariser(x: np.ndarray, cfg: AdmmConfig) -> float:
    if cfg.prior == "tv":
        return tv_value(x, cfg.tv)
    return float(np.sum(np.abs(haar2(x))))


def _prox(v: np.ndarray, weight: float, cfg: AdmmConfig) -> np.ndarray:
    if weight == 0.0:
        return v.copy()
    if cfg.prior == "tv":
        return tv_prox(v, weight, cfg.tv)
    return ihaar2(soft_threshold(haar2(v), weight))


def admm_solve(
    y: KSpaceData,
    coils: CoilSensitivities,
    mask: SamplingMask,
    cfg: AdmmConfig,
) -> AdmmResult:
    """Full ADMM run; exposes the objective trace for diagnostics."""
    sigma2 = y.sigma**2
    keep = mask.keep.astype(np.float64)

    def normal_op(v: np.ndarray) -> np.ndarray:
        # Re(A^H A) v + penalty * v in the sigma^2-scaled objective
        ks = keep * dft2(apply_phi(v, coils))
        return apply_phi_adjoint(idft2(ks), coils) + cfg.penalty * v

    rhs_data = apply_phi_adjoint(idft2(mask_adjoint(y, mask)), coils)

    def objective(x: np.ndarray) -> float:
        resid = y.values - mask.select(dft2(apply_phi(x, coils)))
        data = 0.5 * float(np.sum(np.abs(resid) ** 2))
        if sigma2 > 0:
            return data / sigma2 + cfg.reg_weight * _regulariser(x, cfg)
        return data  # noiseless limit: pure least squares, reg dropped from report

    x = ifft_recon(y, coils, mask)
    z = x.copy()
    u = np.zeros_like(x)
    prox_weight = sigma2 * cfg.reg_weight / cfg.penalty
    trace = []
    converged = False
    iterations = 0

    for it in range(1, cfg.max_iters + 1):
        iterations = it
        # x-update: warm-started CG on the normal equations
        rhs = rhs_data + cfg.penalty * (z - u)
        r = rhs - normal_op(x)
        p = r.copy()
        rs = float(np.sum(r * r))
        for _ in range(cfg.cg_iters):
            if rs <= 1e-28:
                break
            ap = normal_op(p)
            alpha = rs / float(np.sum(p * ap))
            x = x + alpha * p
            r = r - alpha * ap
            rs_new = float(np.sum(r * r))
            p = r + (rs_new / rs) * p
            rs = rs_new
        # z-update and scaled dual ascent
        z = _prox(x + u, prox_weight, cfg)
        u = u + x - z

        if not np.all(np.isfinite(x)):
            raise NumericalError(f"ADMM diverged: non-finite iterate at iteration {it}")
        trace.append(objective(x))
        prim = float(np.linalg.norm(x - z))
        if prim <= cfg.tol * max(float(np.linalg.norm(x)), 1e-30):
            converged = True
            break

    return AdmmResult(
        x=x,
        objective_trace=np.asarray(trace),
        iterations=iterations,
        converged=converged,
    )


def admm_recon(
    y: KSpaceData,
    coils: CoilSensitivities,
    mask: SamplingMask,
    cfg: AdmmConfig,
) -> np.ndarray:
    """ADMM reconstruction; returns the final x iterate."""
    return admm_solve(y, coils, mask, cfg).x
