import numpy as np
import pytest

from mriuq.errors import NumericalError
from mriuq.experiments import make_coils, make_mask, make_phantom, MaskSpec, rmse
from mriuq.forward_model import KSpaceData, SamplingMask, apply_phi, simulate
from mriuq.grids import dft2
from mriuq.spa_sampler import (
    ChainState,
    RunningMoments,
    SamplerConfig,
    init_state,
    run_chain,
    sample_b,
    sample_c,
    sample_d,
    sample_e,
    sample_h,
    sample_x,
)

from oracles import ZeroRng, augmented_gaussian_mean


def frozen_state(h=4, w=4, L=2, m=None, seed=0, tau=0.7):
    """Arbitrary but fixed chain state for conditional-draw tests."""
    rng = np.random.default_rng(seed)
    if m is None:
        m = (h * w) // 2
    cplx = lambda *shape: rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return ChainState(
        x=rng.standard_normal((h, w)),
        b=rng.standard_normal((h, w)),
        c=cplx(L, m),
        d=cplx(L, h, w),
        e=cplx(L, h, w),
        h1=rng.standard_normal((h, w)),
        h2=cplx(L, m),
        h3=cplx(L, h, w),
        h4=cplx(L, h, w),
        tau=tau,
    )


def checker_mask(h, w):
    return SamplingMask(np.indices((h, w)).sum(axis=0) % 2 == 0)


CFG = SamplerConfig(rho=0.8, alpha=1.3, sigma=0.5, seed=0, tau_init=0.7,
                    n_mc=10, n_bi=5)


def test_sample_x_plug_in_example():
    # single ones coil, rho = 1, e - h4 = b - h1 = v: mean v, variance 1/2
    rng = np.random.default_rng(1)
    v = rng.standard_normal((4, 4))
    coils = make_coils(1, 4, 4, "ones")
    state = frozen_state(L=1)
    state.e = (v + 0j)[None]
    state.h4 = np.zeros_like(state.e)
    state.b = v.copy()
    state.h1 = np.zeros_like(v)
    cfg = SamplerConfig(rho=1.0, alpha=1.0, sigma=1.0, n_mc=10, n_bi=5)
    assert np.allclose(sample_x(state, coils, cfg, ZeroRng()), v)
    draws = np.array([
        sample_x(state, coils, cfg, np.random.default_rng(s)) for s in range(20000)
    ])
    assert np.all(np.abs(draws.mean(axis=0) - v) < 4.5 * np.sqrt(0.5 / 20000))
    assert np.all(np.abs(draws.var(axis=0) - 0.5) < 0.05 * 0.5)


def test_sample_x_moments_multicoil():
    state = frozen_state()
    coils = make_coils(2, 4, 4, "gaussian-lobes")
    denom = coils.sos + 1.0
    mean_true = (
        np.real(np.sum(np.conj(coils.maps) * (state.e - state.h4), axis=0))
        + state.b - state.h1
    ) / denom
    var_true = CFG.rho**2 / denom
    rng = np.random.default_rng(2)
    draws = np.array([sample_x(state, coils, CFG, rng) for _ in range(20000)])
    z = np.abs(draws.mean(axis=0) - mean_true) / np.sqrt(var_true / 20000)
    assert np.max(z) < 4.5
    assert np.max(np.abs(draws.var(axis=0) / var_true - 1.0)) < 0.05


def test_sample_b_reduces_to_ula_at_zero_tau():
    # stationary moments of the discretised chain on decoupled pixels:
    # mean x + h1, variance 2 rho^4 / (2 rho^2 - gamma)
    rho, gamma = 1.0, 0.25
    cfg = SamplerConfig(rho=rho, alpha=1.0, sigma=1.0, gamma=gamma, n_mc=10, n_bi=5)
    state = frozen_state(h=2, w=2, L=1, tau=0.0)
    m = state.x + state.h1
    rng = np.random.default_rng(3)
    var_pred = 2 * rho**4 / (2 * rho**2 - gamma)
    samples = []
    for k in range(200_000):
        state.b = sample_b(state, cfg, rng)
        if k >= 2_000:
            samples.append(state.b.copy())
    samples = np.asarray(samples)
    assert np.max(np.abs(samples.mean(axis=0) - m)) < 0.05
    assert abs(np.mean(samples.var(axis=0)) / var_pred - 1.0) < 0.03


def test_sample_b_zero_drift_at_consistent_state():
    state = frozen_state(h=2, w=2, L=1, tau=0.0)
    state.b = state.x + state.h1
    out = sample_b(state, CFG, ZeroRng())
    assert np.allclose(out, state.b, atol=1e-14)


def test_sample_b_deterministic_part_hand_example():
    # rho=1, lam=0.8, gamma=0.2, constant b=2 (prox of a constant is itself):
    # b+ = 0.75*2 - 0.2*(2 - (x+h1)) + 0.25*2 = 1.6 + 0.2*(x+h1)
    cfg = SamplerConfig(rho=1.0, alpha=1.0, sigma=1.0, lam=0.8, gamma=0.2,
                        n_mc=10, n_bi=5)
    state = frozen_state(h=2, w=2, L=1, tau=0.7)
    state.b = np.full((2, 2), 2.0)
    xh = np.array([[1.0, 3.0], [2.0, 0.0]])
    state.x = xh
    state.h1 = np.zeros((2, 2))
    expected = np.array([[1.8, 2.2], [2.0, 1.6]])
    assert np.allclose(sample_b(state, cfg, ZeroRng()), expected, atol=1e-12)


def test_sample_c_sigma_to_zero_limit():
    state = frozen_state()
    mask = checker_mask(4, 4)
    rng = np.random.default_rng(4)
    y = KSpaceData(rng.standard_normal((2, mask.count))
                   + 1j * rng.standard_normal((2, mask.count)), mask)
    cfg = SamplerConfig(rho=0.8, alpha=1.0, sigma=1e-9, n_mc=10, n_bi=5)
    out = sample_c(state, y, cfg, ZeroRng())
    assert np.allclose(out, y.values, atol=1e-8)


def test_sample_c_equal_scales_average():
    state = frozen_state()
    mask = checker_mask(4, 4)
    rng = np.random.default_rng(5)
    y = KSpaceData(rng.standard_normal((2, mask.count))
                   + 1j * rng.standard_normal((2, mask.count)), mask)
    rho = 0.6
    cfg = SamplerConfig(rho=rho, alpha=1.0, sigma=rho, n_mc=10, n_bi=5)
    out = sample_c(state, y, cfg, ZeroRng())
    expected = (y.values + mask.select(state.d) + state.h2) / 2.0
    assert np.allclose(out, expected)


def test_sample_c_moments():
    state = frozen_state()
    mask = checker_mask(4, 4)
    rng0 = np.random.default_rng(6)
    y = KSpaceData(rng0.standard_normal((2, mask.count))
                   + 1j * rng0.standard_normal((2, mask.count)), mask)
    r2, s2 = CFG.rho**2, CFG.sigma**2
    mean_true = (r2 * y.values + s2 * (mask.select(state.d) + state.h2)) / (s2 + r2)
    var_true = r2 * s2 / (r2 + s2)  # per real component
    rng = np.random.default_rng(7)
    draws = np.array([sample_c(state, y, CFG, rng) for _ in range(20000)])
    for part in (np.real, np.imag):
        z = np.abs(part(draws).mean(axis=0) - part(mean_true)) / np.sqrt(var_true / 20000)
        assert np.max(z) < 4.5
        assert np.max(np.abs(part(draws).var(axis=0) / var_true - 1.0)) < 0.05


def test_sample_d_full_mask_variance():
    state = frozen_state(m=16)
    mask = SamplingMask(np.ones((4, 4), bool))
    rng = np.random.default_rng(8)
    draws = np.array([sample_d(state, mask, CFG, rng) for _ in range(20000)])
    var_true = CFG.rho**2 / 2.0
    for part in (np.real, np.imag):
        assert np.max(np.abs(part(draws).var(axis=0) / var_true - 1.0)) < 0.05


def test_sample_d_unsampled_location_mean_and_variance():
    state = frozen_state()
    mask = checker_mask(4, 4)
    out = sample_d(state, mask, CFG, ZeroRng())
    fe_h3 = dft2(state.e) + state.h3
    unsampled = ~mask.keep
    assert np.allclose(out[:, unsampled], fe_h3[:, unsampled])
    rng = np.random.default_rng(9)
    draws = np.array([sample_d(state, mask, CFG, rng) for _ in range(20000)])
    var = draws.real.var(axis=0)
    assert np.max(np.abs(var[:, unsampled] / CFG.rho**2 - 1.0)) < 0.05
    assert np.max(np.abs(var[:, mask.keep] / (CFG.rho**2 / 2) - 1.0)) < 0.05


def test_sample_e_mean_and_moments():
    state = frozen_state()
    coils = make_coils(2, 4, 4, "gaussian-lobes")
    rng0 = np.random.default_rng(10)
    v = rng0.standard_normal((2, 4, 4)) + 1j * rng0.standard_normal((2, 4, 4))
    state.h4 = v - apply_phi(state.x, coils)  # makes Phi x + h4 = v
    state.h3 = state.d - dft2(v)  # makes F^H (d - h3) = v
    out = sample_e(state, coils, CFG, ZeroRng())
    assert np.allclose(out, v)
    rng = np.random.default_rng(11)
    draws = np.array([sample_e(state, coils, CFG, rng) for _ in range(20000)])
    var_true = CFG.rho**2 / 2.0
    for part in (np.real, np.imag):
        z = np.abs(part(draws).mean(axis=0) - part(v)) / np.sqrt(var_true / 20000)
        assert np.max(z) < 4.5
        assert np.max(np.abs(part(draws).var(axis=0) / var_true - 1.0)) < 0.05


def test_sample_h_zero_means_at_consistent_splits():
    coils = make_coils(2, 4, 4, "gaussian-lobes")
    mask = checker_mask(4, 4)
    state = frozen_state()
    state.e = apply_phi(state.x, coils)
    state.d = dft2(state.e)
    state.c = mask.select(state.d)
    state.b = state.x.copy()
    h1, h2, h3, h4 = sample_h(state, coils, mask, CFG, ZeroRng())
    for h in (h1, h2, h3, h4):
        assert np.allclose(h, 0.0, atol=1e-12)


def test_sample_h_large_alpha_limit():
    coils = make_coils(2, 4, 4, "gaussian-lobes")
    mask = checker_mask(4, 4)
    state = frozen_state()
    cfg = SamplerConfig(rho=0.8, alpha=1e9, sigma=0.5, n_mc=10, n_bi=5)
    h1, h2, h3, h4 = sample_h(state, coils, mask, cfg, ZeroRng())
    assert np.allclose(h1, state.b - state.x, rtol=1e-9)
    assert np.allclose(h2, state.c - mask.select(state.d), rtol=1e-9)
    assert np.allclose(h3, state.d - dft2(state.e), rtol=1e-9)
    assert np.allclose(h4, state.e - apply_phi(state.x, coils), rtol=1e-9)


def test_sample_h_moments():
    coils = make_coils(2, 4, 4, "gaussian-lobes")
    mask = checker_mask(4, 4)
    state = frozen_state()
    s = CFG.alpha**2 / (CFG.rho**2 + CFG.alpha**2)
    var_true = CFG.rho**2 * s
    mean1 = s * (state.b - state.x)
    rng = np.random.default_rng(12)
    draws = np.array([sample_h(state, coils, mask, CFG, rng)[0] for _ in range(20000)])
    z = np.abs(draws.mean(axis=0) - mean1) / np.sqrt(var_true / 20000)
    assert np.max(z) < 4.5
    assert np.max(np.abs(draws.var(axis=0) / var_true - 1.0)) < 0.05


def test_noiseless_sweep_fixed_point_matches_dense_oracle():
    """With tau = 0 all conditional means are linear, so the zero-noise
    sweep converges to the stationary mean; it must equal the dense
    augmented-posterior mean for the conditionals to be coherent."""
    rho, alpha, sigma = 0.7, 1.5, 0.4
    h, w = 3, 2
    rng = np.random.default_rng(7)
    truth = rng.uniform(0, 1, (h, w))
    coils = make_coils(1, h, w, "ones")
    keep = np.ones((h, w), bool)
    keep[1, 1] = False
    mask = SamplingMask(keep)
    ks = simulate(truth, coils, mask, sigma=0.1, seed=11)
    oracle = augmented_gaussian_mean(ks.values, keep, coils.maps, rho, alpha, sigma)

    cfg = SamplerConfig(rho=rho, alpha=alpha, sigma=sigma, seed=0, tau_init=0.0,
                        sapg=None, n_mc=10, n_bi=0)
    state = init_state(ks, coils, mask, cfg)
    z = ZeroRng()
    for _ in range(8000):
        state.x = sample_x(state, coils, cfg, z)
        state.b = sample_b(state, cfg, z)
        state.c = sample_c(state, ks, cfg, z)
        state.d = sample_d(state, mask, cfg, z)
        state.e = sample_e(state, coils, cfg, z)
        state.h1, state.h2, state.h3, state.h4 = sample_h(state, coils, mask, cfg, z)
    assert np.max(np.abs(state.x - oracle["x"])) < 1e-9
    assert np.max(np.abs(state.b - oracle["b"])) < 1e-9
    assert np.max(np.abs(state.h1 - oracle["h1"])) < 1e-9
    c_fp = np.concatenate([state.c.ravel().real, state.c.ravel().imag])
    assert np.max(np.abs(c_fp - oracle["c"])) < 1e-9


def test_running_moments_match_two_pass():
    rng = np.random.default_rng(13)
    samples = rng.standard_normal((500, 6, 6))
    acc = RunningMoments((6, 6))
    for s in samples:
        acc.push(s)
    ref_mean = samples.mean(axis=0)
    ref_var = samples.var(axis=0)  # population variance
    assert np.max(np.abs(acc.mean - ref_mean)) < 1e-10 * np.max(np.abs(ref_mean))
    assert np.max(np.abs(acc.variance() - ref_var)) < 1e-10 * np.max(ref_var)


def test_run_chain_single_sample_average():
    truth = make_phantom("shepp-logan", 16, 16)
    coils = make_coils(1, 16, 16, "ones")
    mask = make_mask(MaskSpec(ratio=0.5, seed=3), 16, 16)
    ks = simulate(truth, coils, mask, sigma=0.01, seed=4)
    cfg = SamplerConfig(rho=0.1, alpha=0.1, sigma=0.01, n_mc=6, n_bi=5, seed=5,
                        tau_init=1.0)
    res = run_chain(ks, coils, mask, cfg)
    assert res.n_used == 1
    assert np.all(res.std_map == 0.0)
    assert np.all(np.isfinite(res.mmse))


def test_run_chain_deterministic():
    truth = make_phantom("blocks", 16, 16)
    coils = make_coils(1, 16, 16, "ones")
    mask = make_mask(MaskSpec(ratio=0.4, seed=6), 16, 16)
    ks = simulate(truth, coils, mask, sigma=0.01, seed=7)
    cfg = SamplerConfig(rho=0.05, alpha=0.05, sigma=0.01, n_mc=40, n_bi=20, seed=8)
    a = run_chain(ks, coils, mask, cfg)
    b = run_chain(ks, coils, mask, cfg)
    assert np.array_equal(a.mmse, b.mmse)
    assert np.array_equal(a.std_map, b.std_map)
    assert np.array_equal(a.tau_trace, b.tau_trace)
    assert np.array_equal(a.diagnostics["misfit"], b.diagnostics["misfit"])


def test_run_chain_recovers_fully_sampled_phantom():
    truth = make_phantom("shepp-logan", 64, 64)
    coils = make_coils(1, 64, 64, "ones")
    mask = SamplingMask(np.ones((64, 64), bool))
    sigma = 1e-3
    ks = simulate(truth, coils, mask, sigma=sigma, seed=9)
    cfg = SamplerConfig(rho=0.002, alpha=0.001, sigma=sigma / np.sqrt(2),
                        n_mc=400, n_bi=100, seed=10, tau_init=5.0, sapg=None)
    res = run_chain(ks, coils, mask, cfg)
    assert rmse(res.mmse, truth) <= 0.02  # 2% of the unit dynamic range


def test_run_chain_reports_divergence():
    truth = make_phantom("blocks", 16, 16)
    coils = make_coils(1, 16, 16, "ones")
    mask = make_mask(MaskSpec(ratio=0.5, seed=11), 16, 16)
    ks = simulate(truth, coils, mask, sigma=0.01, seed=12)
    # gamma/rho^2 = 50 makes the Langevin map strongly expansive
    rho = 0.1
    cfg = SamplerConfig(rho=rho, alpha=0.1, sigma=0.01, lam=100 * rho**2,
                        gamma=50 * rho**2, n_mc=1000, n_bi=100, seed=13,
                        tau_init=0.0, sapg=None)
    with np.errstate(all="ignore"):
        with pytest.raises(NumericalError):
            run_chain(ks, coils, mask, cfg)


def test_config_validation():
    with pytest.raises(ValueError):
        SamplerConfig(rho=0.0)
    with pytest.raises(ValueError):
        SamplerConfig(gamma=2.0, lam=1.0)
    with pytest.raises(ValueError):
        SamplerConfig(n_mc=100, n_bi=100)
    with pytest.raises(ValueError):
        SamplerConfig(tau_init=-1.0)
    with pytest.raises(ValueError):
        SamplerConfig(tau_init=0.0)  # outside the default SAPG projection set
    SamplerConfig(tau_init=0.0, sapg=None)  # fine with SAPG disabled
