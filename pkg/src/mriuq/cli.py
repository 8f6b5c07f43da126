"""Batch command-line interface: simulate | reconstruct | report | mask-gen.

Runs are configured by a flat key=value text file ('#' starts a comment)
plus command-line overrides; unknown keys are rejected. Every key has a
documented default (see DEFAULTS or `mriuq <cmd> --help-keys`). All
randomness flows from run.seed through fixed substreams (mask, noise,
chain), so identical config + seed reproduces identical bytes.

Exit codes: 0 success, 2 config error, 3 input error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import fileio
from .baselines import AdmmConfig, admm_recon, ifft_recon
from .errors import ConfigError, InputError, NumericalError
from .experiments import (
    MaskSpec,
    corrcoef,
    derive_seed,
    make_coils,
    make_mask,
    make_phantom,
    rmse,
    sigma_for_snr,
)
from .forward_model import CoilSensitivities, simulate
from .grids import dft2
from .sapg import SapgConfig
from .spa_sampler import SamplerConfig, run_chain
from .tv_prox import TvConfig

RECON_METHODS = ("mcmc-tv", "admm-tv", "admm-wav", "ifft")

# key -> (default, help); values are strings in the file and coerced on use
DEFAULTS: dict[str, tuple[str, str]] = {
    "phantom.kind": ("shepp-logan", "phantom for simulate: shepp-logan | blocks"),
    "image.height": ("64", "image height in pixels (>= 16)"),
    "image.width": ("64", "image width in pixels (>= 16)"),
    "coils.count": ("1", "number of receive coils"),
    "coils.kind": ("ones", "coil maps: ones | gaussian-lobes"),
    "mask.scheme": (
        "variable-density-random",
        "sampling scheme: uniform-random | variable-density-random",
    ),
    "mask.ratio": ("0.3", "fraction of k-space locations kept, in (0, 1]"),
    "mask.center_fraction": ("0.04", "fully sampled central fraction (variable density)"),
    "noise.snr_db": ("30", "target SNR of the simulated k-space in dB"),
    "sampler.rho": ("1.0", "splitting coupling std"),
    "sampler.alpha": ("10.0", "auxiliary offset prior std"),
    "sampler.sigma": ("auto", "likelihood noise std; auto = kspace sigma / sqrt(2)"),
    "sampler.lambda": ("auto", "Moreau-Yosida envelope; auto = rho^2"),
    "sampler.gamma": ("auto", "Langevin step; auto = rho^2 / 4"),
    "sampler.n_mc": ("20000", "total Gibbs sweeps"),
    "sampler.n_bi": ("17000", "burn-in sweeps (tau adapts here)"),
    "sampler.tau_init": ("1.0", "initial TV weight"),
    "tv.variant": ("isotropic", "TV flavour: isotropic | anisotropic"),
    "tv.max_iters": ("20", "Chambolle iterations inside the sampler"),
    "tv.tol": ("1e-5", "Chambolle dual-step tolerance"),
    "tv.step": ("0.25", "Chambolle dual step, in (0, 0.25]"),
    "sapg.enabled": ("true", "adapt tau during burn-in (false freezes tau_init)"),
    "sapg.tau_min": ("1e-4", "lower bound of the tau projection set"),
    "sapg.tau_max": ("1e3", "upper bound of the tau projection set"),
    "sapg.delta0": ("10.0", "step-size scale of the tau updates"),
    "sapg.decay": ("0.8", "step-size decay exponent, in (0.6, 0.9]"),
    "sapg.dim": ("auto", "dimension factor; auto = pixel count N, or an integer"),
    "admm.reg_weight": ("0.1", "regularisation weight of the ADMM baselines"),
    "admm.penalty": ("1.0", "ADMM penalty parameter"),
    "admm.max_iters": ("200", "maximum ADMM iterations"),
    "admm.tol": ("1e-6", "relative primal-residual stopping tolerance"),
    "admm.cg_iters": ("10", "CG steps per ADMM x-update"),
    "run.seed": ("0", "top-level seed; substreams are derived from it"),
    "run.method": ("mcmc-tv", "reconstruction method"),
    "run.out_dir": (".", "directory for inputs and outputs"),
}


class RunConfig:
    """Flat key-value configuration with typed accessors."""

    def __init__(self, values: dict[str, str]):
        self.values = values

    @classmethod
    def load(cls, path: str | None, overrides: dict[str, str]) -> "RunConfig":
        values = {k: v for k, (v, _) in DEFAULTS.items()}
        if path is not None:
            p = Path(path)
            if not p.exists():
                raise InputError(f"missing config file {p}")
            for lineno, raw in enumerate(p.read_text().splitlines(), start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{p}:{lineno}: expected key = value, got {raw!r}")
                key, val = (part.strip() for part in line.split("=", 1))
                if key not in DEFAULTS:
                    raise ConfigError(f"{p}:{lineno}: unknown key {key!r}")
                values[key] = val
        for key, val in overrides.items():
            if key not in DEFAULTS:
                raise ConfigError(f"unknown key {key!r}")
            values[key] = val
        return cls(values)

    def str_(self, key: str, choices: tuple[str, ...] | None = None) -> str:
        val = self.values[key]
        if choices is not None and val not in choices:
            raise ConfigError(f"{key} must be one of {choices}, got {val!r}")
        return val

    def int_(self, key: str) -> int:
        try:
            return int(self.values[key])
        except ValueError as exc:
            raise ConfigError(f"{key} must be an integer, got {self.values[key]!r}") from exc

    def float_(self, key: str) -> float:
        try:
            return float(self.values[key])
        except ValueError as exc:
            raise ConfigError(f"{key} must be a number, got {self.values[key]!r}") from exc

    def bool_(self, key: str) -> bool:
        val = self.values[key].lower()
        if val not in ("true", "false"):
            raise ConfigError(f"{key} must be true or false, got {self.values[key]!r}")
        return val == "true"

    def auto_float(self, key: str) -> float | None:
        return None if self.values[key] == "auto" else self.float_(key)


def _mask_spec(cfg: RunConfig) -> MaskSpec:
    try:
        return MaskSpec(
            scheme=cfg.str_("mask.scheme"),
            ratio=cfg.float_("mask.ratio"),
            center_fraction=cfg.float_("mask.center_fraction"),
            seed=derive_seed(cfg.int_("run.seed"), "mask"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _tv_config(cfg: RunConfig) -> TvConfig:
    try:
        return TvConfig(
            variant=cfg.str_("tv.variant"),
            max_iters=cfg.int_("tv.max_iters"),
            tol=cfg.float_("tv.tol"),
            step=cfg.float_("tv.step"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _sampler_config(cfg: RunConfig, data_sigma: float) -> SamplerConfig:
    sigma = cfg.auto_float("sampler.sigma")
    if sigma is None:
        sigma = data_sigma / np.sqrt(2.0)
    sapg = None
    if cfg.bool_("sapg.enabled"):
        dim = None if cfg.values["sapg.dim"] == "auto" else cfg.int_("sapg.dim")
        sapg = SapgConfig(
            tau_min=cfg.float_("sapg.tau_min"),
            tau_max=cfg.float_("sapg.tau_max"),
            delta0=cfg.float_("sapg.delta0"),
            decay=cfg.float_("sapg.decay"),
            dim=dim,
        )
    try:
        return SamplerConfig(
            rho=cfg.float_("sampler.rho"),
            alpha=cfg.float_("sampler.alpha"),
            sigma=sigma,
            lam=cfg.auto_float("sampler.lambda"),
            gamma=cfg.auto_float("sampler.gamma"),
            n_mc=cfg.int_("sampler.n_mc"),
            n_bi=cfg.int_("sampler.n_bi"),
            seed=derive_seed(cfg.int_("run.seed"), "chain"),
            tau_init=cfg.float_("sampler.tau_init"),
            tv=_tv_config(cfg),
            sapg=sapg,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _admm_config(cfg: RunConfig, prior: str) -> AdmmConfig:
    try:
        return AdmmConfig(
            reg_weight=cfg.float_("admm.reg_weight"),
            penalty=cfg.float_("admm.penalty"),
            max_iters=cfg.int_("admm.max_iters"),
            tol=cfg.float_("admm.tol"),
            prior=prior,
            cg_iters=cfg.int_("admm.cg_iters"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.values["run.out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_inputs(out: Path):
    mask = fileio.read_mask(out / "mask.pbm")
    coils = CoilSensitivities(fileio.read_complex_stack(out / "coils.c128"))
    ks = fileio.read_kspace(out / "kspace.c128", mask)
    return ks, coils, mask


def cmd_simulate(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    h, w = cfg.int_("image.height"), cfg.int_("image.width")
    try:
        truth = make_phantom(cfg.str_("phantom.kind", ("shepp-logan", "blocks")), h, w)
        coils = make_coils(cfg.int_("coils.count"), h, w, cfg.str_("coils.kind"))
        spec = _mask_spec(cfg)
        mask = make_mask(spec, h, w)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    clean = mask.select(dft2(truth[None] * coils.maps))
    sigma = sigma_for_snr(clean, cfg.float_("noise.snr_db"))
    ks = simulate(truth, coils, mask, sigma, derive_seed(cfg.int_("run.seed"), "noise"))

    fileio.write_image(out / "truth.f64", truth)
    fileio.write_pgm16(out / "truth.pgm", truth, scale=1.0)
    fileio.write_complex_stack(out / "coils.c128", coils.maps)
    fileio.write_mask(
        out / "mask.pbm",
        mask,
        {"ratio": spec.ratio, "scheme": spec.scheme, "seed": spec.seed},
    )
    fileio.write_kspace(out / "kspace.c128", ks, "mask.pbm")
    print(f"simulated {h}x{w} phantom -> {out} (sigma={sigma:.6g})")
    return 0


def cmd_mask_gen(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    h, w = cfg.int_("image.height"), cfg.int_("image.width")
    spec = _mask_spec(cfg)
    try:
        mask = make_mask(spec, h, w)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    fileio.write_mask(
        out / "mask.pbm",
        mask,
        {"ratio": spec.ratio, "scheme": spec.scheme, "seed": spec.seed},
    )
    print(f"wrote mask with {mask.count} kept locations -> {out / 'mask.pbm'}")
    return 0


def cmd_reconstruct(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    method = cfg.str_("run.method", RECON_METHODS)
    ks, coils, mask = _load_inputs(out)

    if method == "ifft":
        xhat = ifft_recon(ks, coils, mask)
    elif method in ("admm-tv", "admm-wav"):
        prior = "tv" if method == "admm-tv" else "haar-wavelet"
        xhat = admm_recon(ks, coils, mask, _admm_config(cfg, prior))
    else:
        result = run_chain(ks, coils, mask, _sampler_config(cfg, ks.sigma))
        xhat = result.mmse
        fileio.write_image(out / "std_mcmc-tv.f64", result.std_map)
        fileio.write_pgm16(out / "std_mcmc-tv.pgm", result.std_map)
        fileio.write_csv(
            out / "tau_trace.csv",
            ["iteration", "tau"],
            [[i + 1, repr(t)] for i, t in enumerate(result.tau_trace)],
        )
        diag = result.diagnostics
        fileio.write_csv(
            out / "diagnostics.csv",
            ["iteration", "tau", "tv_x", "misfit"],
            [
                [int(diag["iteration"][i]), repr(diag["tau"][i]),
                 repr(diag["tv_x"][i]), repr(diag["misfit"][i])]
                for i in range(len(diag["iteration"]))
            ],
        )

    fileio.write_image(out / f"xhat_{method}.f64", xhat)
    fileio.write_pgm16(out / f"xhat_{method}.pgm", xhat)
    print(f"reconstructed with {method} -> {out / f'xhat_{method}.f64'}")
    return 0


def cmd_report(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    truth_path = out / "truth.f64"
    if not truth_path.exists():
        raise InputError(f"missing ground truth {truth_path}")
    truth = fileio.read_image(truth_path)

    recons = sorted(out.glob("xhat_*.f64"))
    if not recons:
        raise InputError(f"no reconstruction outputs (xhat_*.f64) in {out}")
    ratio = cfg.float_("mask.ratio")
    seed = cfg.int_("run.seed")
    rows = []
    for path in recons:
        method = path.name[len("xhat_") : -len(".f64")]
        xhat = fileio.read_image(path)
        err = np.abs(xhat - truth)
        fileio.write_image(out / f"err_{method}.f64", err)
        fileio.write_pgm16(out / f"err_{method}.pgm", err)
        cc = None
        if method == "mcmc-tv":
            std_path = out / "std_mcmc-tv.f64"
            if not std_path.exists():
                raise InputError(
                    f"uncertainty correlation requested but std map {std_path} is missing"
                )
            cc = corrcoef(fileio.read_image(std_path), err)
        rows.append([method, ratio, seed, repr(rmse(xhat, truth)),
                     None if cc is None else repr(cc)])

    fileio.write_csv(out / "report.csv", ["method", "ratio", "seed", "rmse", "cc"], rows)
    print("method      ratio   seed  rmse        cc")
    for method, rt, sd, err_s, cc_s in rows:
        cc_cell = "-" if cc_s is None else f"{float(cc_s):.3f}"
        print(f"{method:<11} {rt:<7.2f} {sd:<5d} {float(err_s):<11.5f} {cc_cell}")
    return 0


def _print_keys() -> None:
    width = max(len(k) for k in DEFAULTS)
    for key, (default, help_text) in DEFAULTS.items():
        print(f"{key:<{width}}  default={default!r:<28} {help_text}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mriuq",
        description="MR reconstruction with uncertainty from under-sampled k-space",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "write phantom, coils, mask and noisy k-space files"),
        ("reconstruct", "reconstruct an image from simulated files"),
        ("report", "score completed reconstructions against the ground truth"),
        ("mask-gen", "write a sampling mask only"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="flat key=value configuration file")
        p.add_argument("--seed", type=int, help="override run.seed")
        p.add_argument("--ratio", type=float, help="override mask.ratio")
        p.add_argument("--out-dir", help="override run.out_dir")
        p.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override any config key (repeatable)",
        )
        p.add_argument(
            "--help-keys", action="store_true", help="list config keys and defaults"
        )
        if name == "reconstruct":
            p.add_argument("--method", choices=RECON_METHODS, help="override run.method")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.help_keys:
        _print_keys()
        return 0

    overrides: dict[str, str] = {}
    for item in args.set:
        if "=" not in item:
            print(f"error: --set expects KEY=VALUE, got {item!r}", file=sys.stderr)
            return 2
        key, val = item.split("=", 1)
        overrides[key.strip()] = val.strip()
    if args.seed is not None:
        overrides["run.seed"] = str(args.seed)
    if args.ratio is not None:
        overrides["mask.ratio"] = str(args.ratio)
    if args.out_dir is not None:
        overrides["run.out_dir"] = args.out_dir
    if getattr(args, "method", None) is not None:
        overrides["run.method"] = args.method

    commands = {
        "simulate": cmd_simulate,
        "reconstruct": cmd_reconstruct,
        "report": cmd_report,
        "mask-gen": cmd_mask_gen,
    }
    try:
        cfg = RunConfig.load(args.config, overrides)
        return commands[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
