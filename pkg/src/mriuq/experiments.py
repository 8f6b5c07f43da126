"""Phantoms, coil maps, sampling masks, metrics and the benchmark harness.

The benchmark reproduces, at desk scale, the shape of the full-scale
study: for each (method, ratio, seed) cell it simulates k-space from a
phantom at a target SNR, reconstructs, and reports RMSE; for the sampler
it additionally reports the Pearson correlation between the marginal std
map and the absolute error map. All randomness is derived from one
per-cell seed via fixed substreams, so a report is reproducible bit for
bit. Wall-clock timings are kept out of report.csv (they go to a separate
timings.csv) precisely so the report stays byte-identical across runs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .baselines import AdmmConfig, admm_recon, ifft_recon
from .fileio import write_csv, write_image, write_pgm16
from .forward_model import CoilSensitivities, KSpaceData, SamplingMask, simulate
from .grids import dft2
from .sapg import SapgConfig
from .spa_sampler import SamplerConfig, run_chain
from .tv_prox import TvConfig

PHANTOM_KINDS = ("shepp-logan", "blocks")
COIL_KINDS = ("ones", "gaussian-lobes")
MASK_SCHEMES = ("uniform-random", "variable-density-random")
METHODS = ("ifft", "admm-wav", "admm-tv", "mcmc-tv")

# substream indices for the documented per-seed derivation
_STREAMS = {"mask": 0, "noise": 1, "chain": 2}

# (intensity, half-axis a, half-axis b, x0, y0, angle in degrees) on [-1, 1]^2
_SHEPP_LOGAN = (
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
)


def derive_seed(seed: int, stream: str) -> int:
    """Deterministic substream seed for one top-level seed.

    Streams: "mask" (mask generation), "noise" (k-space noise),
    "chain" (sampler). Uses numpy's SeedSequence([seed, index]) hashing.
    """
    idx = _STREAMS[stream]
    return int(np.random.SeedSequence([int(seed), idx]).generate_state(1)[0])


@dataclass(frozen=True)
class MaskSpec:
    scheme: str = "variable-density-random"
    ratio: float = 0.3
    center_fraction: float = 0.04
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in MASK_SCHEMES:
            raise ValueError(f"scheme must be one of {MASK_SCHEMES}, got {self.scheme!r}")
        if not 0.0 < self.ratio <= 1.0:
            raise ValueError("ratio must lie in (0, 1]")
        if not 0.0 <= self.center_fraction < self.ratio:
            raise ValueError("center_fraction must lie in [0, ratio)")


def make_phantom(kind: str, h: int, w: int) -> np.ndarray:
    """Deterministic piecewise-smooth phantom with values in [0, 1]."""
    if kind not in PHANTOM_KINDS:
        raise ValueError(f"kind must be one of {PHANTOM_KINDS}, got {kind!r}")
    if h < 16 or w < 16:
        raise ValueError("phantom size must be at least 16x16")
    if kind == "shepp-logan":
        ys = np.linspace(-1.0, 1.0, h)[:, None]
        xs = np.linspace(-1.0, 1.0, w)[None, :]
        img = np.zeros((h, w))
        for inten, a, b, x0, y0, ang in _SHEPP_LOGAN:
            t = np.deg2rad(ang)
            xr = (xs - x0) * np.cos(t) + (ys - y0) * np.sin(t)
            yr = -(xs - x0) * np.sin(t) + (ys - y0) * np.cos(t)
            img += inten * ((xr / a) ** 2 + (yr / b) ** 2 <= 1.0)
        return np.clip(img, 0.0, 1.0)
    # blocks: disjoint axis-aligned rectangles, at least one pixel apart
    img = np.zeros((h, w))
    img[h // 6 : h // 2, w // 6 : w // 2] = 0.8
    img[h // 2 + h // 12 : h - h // 6, w // 2 + w // 12 : w - w // 8] = 0.4
    img[h // 8 : h // 8 + h // 8, w - w // 3 : w - w // 3 + w // 8] = 1.0
    return img


def make_coils(L: int, h: int, w: int, kind: str = "ones") -> CoilSensitivities:
    """Coil sensitivity maps with per-pixel sum of squares exactly one."""
    if kind not in COIL_KINDS:
        raise ValueError(f"kind must be one of {COIL_KINDS}, got {kind!r}")
    if L < 1:
        raise ValueError("need at least one coil")
    if kind == "ones":
        if L != 1:
            raise ValueError("'ones' coils are single-coil only")
        return CoilSensitivities(np.ones((1, h, w), dtype=np.complex128))
    ys = np.linspace(-1.0, 1.0, h)[:, None]
    xs = np.linspace(-1.0, 1.0, w)[None, :]
    maps = np.empty((L, h, w), dtype=np.complex128)
    for ell in range(L):
        angle = 2.0 * np.pi * ell / L
        cx, cy = 0.55 * np.cos(angle), 0.55 * np.sin(angle)
        mag = np.exp(-(((xs - cx) ** 2 + (ys - cy) ** 2)) / (2.0 * 0.55**2))
        phase = 0.5 * (ell + 1) * (xs * np.cos(angle) + ys * np.sin(angle))
        maps[ell] = mag * np.exp(1j * phase)
    sos = np.sqrt(np.sum(np.abs(maps) ** 2, axis=0))
    return CoilSensitivities(maps / sos[None, :, :])


def make_mask(spec: MaskSpec, h: int, w: int) -> SamplingMask:
    """Random sampling mask with exactly round(ratio*h*w) kept locations.

    The mask is built in the centred (fftshifted) frequency layout and
    shifted back, so "central square" means low frequencies and the DC
    location is always kept. The variable-density scheme keeps a fully
    sampled central square of about center_fraction*N locations and
    spreads the remainder uniformly outside it.
    """
    n = h * w
    total = int(np.rint(spec.ratio * n))
    if total < 1:
        raise ValueError("ratio keeps no samples")
    rng = np.random.default_rng(spec.seed)
    keep_shift = np.zeros((h, w), dtype=bool)
    dc = (h // 2) * w + (w // 2)  # DC lands at index 0 after ifftshift

    if spec.scheme == "uniform-random":
        sel = rng.choice(n, size=total, replace=False)
        if dc not in sel:
            sel[rng.integers(total)] = dc
        keep_shift.flat[sel] = True
    else:
        side = max(1, int(np.floor(np.sqrt(spec.center_fraction * n))))
        if side * side > total:
            raise ValueError("ratio keeps fewer samples than the central square")
        r0 = h // 2 - side // 2
        c0 = w // 2 - side // 2
        keep_shift[r0 : r0 + side, c0 : c0 + side] = True
        outside = np.flatnonzero(~keep_shift.ravel())
        extra = rng.choice(outside, size=total - side * side, replace=False)
        keep_shift.flat[extra] = True

    return SamplingMask(np.fft.ifftshift(keep_shift))


def rmse(a: np.ndarray, b: np.ndarray) -> float:
    """Root mean square error in the intensity scale of the inputs."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def corrcoef(u: np.ndarray, v: np.ndarray) -> float:
    """Pearson correlation of the flattened maps; errors on constant input."""
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise ValueError("inputs must have the same shape")
    if np.ptp(u) == 0.0 or np.ptp(v) == 0.0:
        raise ValueError("correlation undefined for a constant map")
    return float(np.corrcoef(u, v)[0, 1])


def sigma_for_snr(clean: np.ndarray, snr_db: float) -> float:
    """Noise std giving the target SNR over the kept k-space samples.

    SNR is mean |sample|^2 over sigma^2, with sigma^2 the per-sample
    complex noise variance of the simulator.
    """
    power = float(np.mean(np.abs(clean) ** 2))
    return float(np.sqrt(power * 10.0 ** (-snr_db / 10.0)))


@dataclass(frozen=True)
class BenchmarkPlan:
    """One full benchmark: methods x ratios x seeds on one phantom setup.

    The sampler runs with one fixed configuration across all cells,
    warm-started from a fixed-weight ADMM-TV solve (``init_reg_weight``;
    no ground truth involved). With ``slack_compensation`` the likelihood
    scale passed to the sampler is reduced so that the augmented model's
    marginal data variance matches the simulated noise level; with
    ``sapg_full_dim`` the tau updates use the full data dimension N*L.
    """

    methods: tuple[str, ...] = METHODS
    ratios: tuple[float, ...] = (0.05, 0.1, 0.2, 0.3, 0.4)
    seeds: tuple[int, ...] = (0, 1, 2)
    phantom_kind: str = "shepp-logan"
    height: int = 64
    width: int = 64
    coil_count: int = 4
    coil_kind: str = "gaussian-lobes"
    snr_db: float = 30.0
    mask_scheme: str = "variable-density-random"
    center_fraction: float = 0.04
    sampler: SamplerConfig = field(default_factory=lambda: benchmark_sampler_config())
    admm: AdmmConfig = field(default_factory=AdmmConfig)
    admm_grid: tuple[float, ...] = (1e-3, 1e-2, 1e-1, 1e0, 1e1)
    init_reg_weight: float = 10.0
    slack_compensation: bool = True
    sapg_full_dim: bool = True

    def __post_init__(self):
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}")


def benchmark_sampler_config(n_mc: int = 2000, n_bi: int = 300) -> SamplerConfig:
    """Sampler settings used by the benchmark harness.

    The coupling scales are tuned once on the phantom suite (the library
    defaults of SamplerConfig target unnormalised intensity scales) and
    then fixed for every cell; sigma is overwritten per cell from the
    simulated noise level. The tau updates use a faster step schedule
    than the library default so the weight reaches its fixed point well
    inside the short burn-in.
    """
    return SamplerConfig(
        rho=0.005,
        alpha=0.0025,
        sigma=1.0,
        n_mc=n_mc,
        n_bi=n_bi,
        tau_init=10.0,
        tv=TvConfig(max_iters=20, tol=1e-5),
        sapg=SapgConfig(delta0=200.0, decay=0.61),
    )


@dataclass(frozen=True)
class BenchmarkRow:
    method: str
    ratio: float
    seed: int
    rmse: float
    cc: float | None
    runtime_s: float


@dataclass(frozen=True)
class BenchmarkReport:
    rows: tuple[BenchmarkRow, ...]

    def mean_rmse(self, method: str, ratio: float) -> float:
        vals = [r.rmse for r in self.rows if r.method == method and r.ratio == ratio]
        if not vals:
            raise ValueError(f"no rows for {method} at ratio {ratio}")
        return float(np.mean(vals))

    def mean_cc(self, ratio: float) -> float:
        vals = [
            r.cc
            for r in self.rows
            if r.method == "mcmc-tv" and r.ratio == ratio and r.cc is not None
        ]
        if not vals:
            raise ValueError(f"no uncertainty rows at ratio {ratio}")
        return float(np.mean(vals))

    def summary_lines(self) -> list[str]:
        lines = ["method      ratio   mean_rmse   mean_cc"]
        methods = sorted({r.method for r in self.rows})
        ratios = sorted({r.ratio for r in self.rows})
        for m in methods:
            for rt in ratios:
                rmse_v = self.mean_rmse(m, rt)
                cc_cell = "-"
                if m == "mcmc-tv":
                    cc_cell = f"{self.mean_cc(rt):.3f}"
                lines.append(f"{m:<11} {rt:<7.2f} {rmse_v:<11.5f} {cc_cell}")
        return lines


def _report_rows(report: BenchmarkReport) -> list[list]:
    return [
        [r.method, r.ratio, r.seed, repr(r.rmse), None if r.cc is None else repr(r.cc)]
        for r in report.rows
    ]


def write_report(report: BenchmarkReport, out_dir) -> None:
    """Write report.csv (deterministic) and timings.csv (wall clock)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "report.csv", ["method", "ratio", "seed", "rmse", "cc"], _report_rows(report))
    write_csv(
        out / "timings.csv",
        ["method", "ratio", "seed", "runtime_s"],
        [[r.method, r.ratio, r.seed, f"{r.runtime_s:.3f}"] for r in report.rows],
    )


def run_benchmark(plan: BenchmarkPlan, out_dir=None) -> BenchmarkReport:
    """Run every (method, ratio, seed) cell of the plan, in plan order.

    ADMM methods pick reg_weight from plan.admm_grid by RMSE against the
    known ground truth, mirroring per-run oracle tuning; the sampler runs
    with the plan's fixed configuration and SAPG-estimated tau. With
    ``out_dir`` set, error maps, std maps, report.csv and timings.csv are
    written there.
    """
    truth = make_phantom(plan.phantom_kind, plan.height, plan.width)
    coils = make_coils(plan.coil_count, plan.height, plan.width, plan.coil_kind)
    out = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)

    data_cache: dict[tuple[float, int], KSpaceData] = {}

    def cell_data(ratio: float, seed: int) -> KSpaceData:
        key = (ratio, seed)
        if key not in data_cache:
            spec = MaskSpec(
                scheme=plan.mask_scheme,
                ratio=ratio,
                center_fraction=plan.center_fraction,
                seed=derive_seed(seed, "mask"),
            )
            mask = make_mask(spec, plan.height, plan.width)
            clean = mask.select(dft2(truth[None] * coils.maps))
            sigma = sigma_for_snr(clean, plan.snr_db)
            data_cache[key] = simulate(
                truth, coils, mask, sigma, derive_seed(seed, "noise")
            )
        return data_cache[key]

    rows: list[BenchmarkRow] = []
    for method in plan.methods:
        for ratio in plan.ratios:
            for seed in plan.seeds:
                ks = cell_data(ratio, seed)
                mask = ks.mask
                tic = time.perf_counter()
                cc = None
                std_map = None
                if method == "ifft":
                    xhat = ifft_recon(ks, coils, mask)
                elif method in ("admm-tv", "admm-wav"):
                    prior = "tv" if method == "admm-tv" else "haar-wavelet"
                    best = None
                    for weight in plan.admm_grid:
                        cfg = replace(plan.admm, reg_weight=weight, prior=prior)
                        cand = admm_recon(ks, coils, mask, cfg)
                        err = rmse(cand, truth)
                        if best is None or err < best[0]:
                            best = (err, cand)
                    xhat = best[1]
                else:  # mcmc-tv
                    base = plan.sampler
                    sigma_r = ks.sigma / np.sqrt(2.0)
                    sigma_model = sigma_r
                    if plan.slack_compensation:
                        slack = 3.0 * (base.rho**2 + base.alpha**2)
                        sigma_model = max(
                            np.sqrt(max(sigma_r**2 - slack, 0.0)), sigma_r / 2.0
                        )
                    sapg = base.sapg
                    if sapg is not None and plan.sapg_full_dim:
                        sapg = replace(
                            sapg, dim=plan.height * plan.width * coils.L
                        )
                    cfg = replace(
                        base,
                        sigma=sigma_model,
                        seed=derive_seed(seed, "chain"),
                        sapg=sapg,
                    )
                    x_init = admm_recon(
                        ks,
                        coils,
                        mask,
                        replace(plan.admm, reg_weight=plan.init_reg_weight, prior="tv"),
                    )
                    result = run_chain(ks, coils, mask, cfg, x0=x_init)
                    xhat = result.mmse
                    std_map = result.std_map
                    cc = corrcoef(std_map, np.abs(xhat - truth))
                runtime = time.perf_counter() - tic
                rows.append(BenchmarkRow(method, ratio, seed, rmse(xhat, truth), cc, runtime))

                if out is not None:
                    tag = f"r{int(round(ratio * 100)):02d}_s{seed}"
                    err_map = np.abs(xhat - truth)
                    write_image(out / f"err_{method}_{tag}.f64", err_map)
                    write_pgm16(out / f"err_{method}_{tag}.pgm", err_map)
                    if std_map is not None:
                        write_image(out / f"std_{method}_{tag}.f64", std_map)
                        write_pgm16(out / f"std_{method}_{tag}.pgm", std_map)

    report = BenchmarkReport(tuple(rows))
    if out is not None:
        write_report(report, out)
    return report
