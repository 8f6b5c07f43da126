"""Stochastic-approximation estimation of the TV regularisation weight.

One projected stochastic gradient step on the log marginal likelihood of
tau, driven by the current chain sample:

    tau <- clamp(tau + delta_t * (dim / tau - TV(x_t)), tau_min, tau_max)

with step sizes delta_t = delta0 / (dim * t^decay). The gradient uses the
1-homogeneity of TV: d/dtau log p(x | tau) = dim/tau - TV(x). ``dim``
defaults to the pixel count of the image; it can be overridden (e.g. to
N*L) to reproduce formulations that scale by the full data dimension.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SapgConfig:
    tau_min: float = 1e-4
    tau_max: float = 1e3
    delta0: float = 10.0
    decay: float = 0.8
    dim: int | None = None  # None: resolved to the image pixel count

    def __post_init__(self):
        if not 0 < self.tau_min < self.tau_max:
            raise ValueError("need 0 < tau_min < tau_max")
        if self.delta0 <= 0:
            raise ValueError("delta0 must be positive")
        if not 0.6 < self.decay <= 0.9:
            raise ValueError("decay must lie in (0.6, 0.9]")
        if self.dim is not None and self.dim < 1:
            raise ValueError("dim must be a positive integer")


def step_size(t: int, cfg: SapgConfig) -> float:
    """Decaying step delta_t = delta0 / (dim * t^decay), t >= 1."""
    if cfg.dim is None:
        raise ValueError("cfg.dim must be resolved before computing steps")
    return cfg.delta0 / (cfg.dim * t**cfg.decay)


def update_tau(tau: float, tv_x: float, t: int, cfg: SapgConfig) -> float:
    """One projected stochastic gradient step for tau at iteration t."""
    if t < 1:
        raise ValueError("iteration index must be >= 1")
    if tv_x < 0:
        raise ValueError("tv_x must be nonnegative")
    if not cfg.tau_min <= tau <= cfg.tau_max:
        raise ValueError("tau must lie inside the projection set")
    proposal = tau + step_size(t, cfg) * (cfg.dim / tau - tv_x)
    return float(min(max(proposal, cfg.tau_min), cfg.tau_max))
