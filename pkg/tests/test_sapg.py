import numpy as np
import pytest

from mriuq.sapg import SapgConfig, step_size, update_tau


def cfg_with(**kw):
    base = dict(tau_min=1e-4, tau_max=1e3, delta0=10.0, decay=0.8, dim=100)
    base.update(kw)
    return SapgConfig(**base)


def test_fixed_point_is_unchanged():
    cfg = cfg_with()
    tau = 2.0
    assert update_tau(tau, cfg.dim / tau, 5, cfg) == pytest.approx(tau, abs=1e-15)


def test_direct_arithmetic_example():
    # delta_1 = delta0 / (dim * 1^0.8) = 0.001 with delta0 = 0.1, dim = 100
    cfg = cfg_with(delta0=0.1)
    assert step_size(1, cfg) == pytest.approx(1e-3)
    assert update_tau(1.0, 50.0, 1, cfg) == pytest.approx(1.05)


def test_projection_clamps_both_ends():
    cfg = cfg_with(tau_min=0.5, tau_max=2.0, delta0=1e6)
    assert update_tau(1.0, 0.0, 1, cfg) == 2.0  # huge positive gradient
    assert update_tau(1.0, 1e9, 1, cfg) == 0.5  # huge negative gradient


def test_monotone_response_in_tv():
    cfg = cfg_with()
    outs = [update_tau(1.0, tv, 3, cfg) for tv in (0.0, 10.0, 200.0, 1e4)]
    assert all(a >= b for a, b in zip(outs, outs[1:]))


def test_output_always_inside_bounds():
    cfg = cfg_with(tau_min=0.2, tau_max=5.0)
    rng = np.random.default_rng(0)
    tau = 1.0
    for t in range(1, 500):
        tau = update_tau(tau, float(rng.uniform(0, 500)), t, cfg)
        assert cfg.tau_min <= tau <= cfg.tau_max


def test_step_sizes_decay():
    cfg = cfg_with()
    steps = [step_size(t, cfg) for t in (1, 2, 10, 100)]
    assert all(a > b for a, b in zip(steps, steps[1:]))


def laplace_harness(n_dims=4096, true_rate=2.0, iters=3000, seed=0):
    """SAPG driven by exact draws from a known-rate Laplace model.

    The absolute-value functional plays the role of TV; with samples from
    the true rate the update's fixed point is the true rate itself.
    """
    rng = np.random.default_rng(seed)
    cfg = SapgConfig(dim=n_dims)
    tau = 0.5
    for t in range(1, iters + 1):
        x = rng.laplace(scale=1.0 / true_rate, size=n_dims)
        tau = update_tau(tau, float(np.sum(np.abs(x))), t, cfg)
    return tau


def test_laplace_harness_recovers_rate():
    tau = laplace_harness()
    assert abs(tau - 2.0) / 2.0 < 0.10


def test_validation():
    with pytest.raises(ValueError):
        SapgConfig(tau_min=1.0, tau_max=0.5)
    with pytest.raises(ValueError):
        SapgConfig(delta0=0.0)
    with pytest.raises(ValueError):
        SapgConfig(decay=0.5)
    with pytest.raises(ValueError):
        SapgConfig(dim=0)
    cfg = cfg_with()
    with pytest.raises(ValueError):
        update_tau(1.0, -1.0, 1, cfg)
    with pytest.raises(ValueError):
        update_tau(1.0, 1.0, 0, cfg)
    with pytest.raises(ValueError):
        update_tau(2e3, 1.0, 1, cfg)
    with pytest.raises(ValueError):
        step_size(1, SapgConfig())  # dim unresolved
