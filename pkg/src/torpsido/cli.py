"""Command line runner: ``torpsido run CONFIG.json`` and ``torpsido selftest``.

Exit codes: 0 when every verdict passes, 1 when a verdict fails (the report
is still written), 2 for configuration or usage errors.

Config layout (all sections but ``experiment`` optional)::

    {
      "experiment": "commutator-decay",
      "geometry": {"n": 1, "d": 1, "Kmax": 256, "N": null},
      "decomposition": {"inner": 1.0, "outer": 2.0},
      "symbol": {"name": "weierstrass", "params": {"r": 0.5, "J": 8}},
      "estimate": {"j_range": [3, 7], "p": 2, "trials": 4, "seed": 0,
                   "family": "blocks", "tolerances": {"slope_tolerance": 0.35}},
      "output": {"dir": "out"}
    }

The output directory is taken from ``--out``, then ``$TORPSIDO_OUT``, then
``output.dir``, then ``./torpsido-out``.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time

import numpy as np

from .besov import EQUIVALENCE_CONSTANT, BesovParams, besov_norm, besov_norm_derivative_form, lp_norm
from .dyadic import BumpParams, build_dyadic, verify_dyadic
from .grid import (
    FrequencyLattice,
    GridFunction,
    NyquistError,
    TorusGrid,
    forward_transform,
    inverse_transform,
    random_coeffs,
)
from .psido import apply_block, apply_op, apply_via_kernel, kernel_block, localize
from .symbol import cosine, identity, make_symbol, symbol_norm
from .verify import (
    EstimateReport,
    HypothesisError,
    block_estimate_experiment,
    commutator_decay_experiment,
    kernel_bound_experiment,
    operator_norm_experiment,
    random_family,
)

log = logging.getLogger("torpsido")

EXPERIMENTS = (
    "check-dyadic",
    "kernel-bound",
    "block-estimate",
    "commutator-decay",
    "opnorm",
    "besov-norm",
    "selftest",
)

DEFAULT_TOLERANCES = {
    "growth_factor": 2.0,
    "slope_tolerance": 0.35,
    "stability_factor": 1.5,
    "window_factor": 2.0,
}

SELFTEST_CONFIG = {
    "experiment": "selftest",
    "geometry": {"n": 1, "d": 2, "Kmax": 16},
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


def _section(cfg, name):
    value = cfg.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError(f"field '{name}' must be an object")
    return value


def _number(sec, key, where, default=None, kind=float, allow_inf=False):
    value = sec.get(key, default)
    if value is None:
        return None
    if allow_inf and isinstance(value, str) and value.lower() in ("inf", "infinity"):
        return math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"field '{where}.{key}' must be a number, got {value!r}")
    if kind is int:
        if int(value) != value:
            raise ConfigError(f"field '{where}.{key}' must be an integer, got {value!r}")
        return int(value)
    return float(value)


class RunConfig:
    """Validated experiment configuration."""

    def __init__(self, raw):
        if not isinstance(raw, dict):
            raise ConfigError("top level must be a JSON object")
        self.raw = raw
        self.experiment = raw.get("experiment")
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"field 'experiment' must be one of {list(EXPERIMENTS)}, got {self.experiment!r}")
        geo = _section(raw, "geometry")
        self.n = _number(geo, "n", "geometry", 1, int)
        self.d = _number(geo, "d", "geometry", 1, int)
        self.Kmax = _number(geo, "Kmax", "geometry", 32, int)
        self.N = _number(geo, "N", "geometry", None, int)
        if self.n < 1 or self.d < 1 or self.Kmax < 1:
            raise ConfigError("fields 'geometry.n', 'geometry.d', 'geometry.Kmax' must be positive")
        if self.N is not None and self.N < 2 * self.Kmax + 1:
            raise ConfigError(f"field 'geometry.N' = {self.N} violates N >= 2*Kmax + 1 = {2 * self.Kmax + 1}")
        dec = _section(raw, "decomposition")
        try:
            self.bump = BumpParams(_number(dec, "inner", "decomposition", 1.0),
                                   _number(dec, "outer", "decomposition", 2.0))
        except ValueError as exc:
            raise ConfigError(f"field 'decomposition': {exc}") from None
        sym = _section(raw, "symbol")
        self.symbol_name = sym.get("name", "identity")
        self.symbol_params = sym.get("params", {})
        if not isinstance(self.symbol_params, dict):
            raise ConfigError("field 'symbol.params' must be an object")
        est = _section(raw, "estimate")
        self.estimate = est
        jr = est.get("j_range")
        if jr is not None:
            if not (isinstance(jr, list) and len(jr) == 2 and all(isinstance(v, int) for v in jr)) or jr[0] > jr[1]:
                raise ConfigError(f"field 'estimate.j_range' must be [lo, hi] with integers lo <= hi, got {jr!r}")
        self.j_range = None if jr is None else list(range(jr[0], jr[1] + 1))
        self.theta = _number(est, "theta", "estimate", 0.5)
        if not 0.0 < self.theta < 1.0:
            raise ConfigError(f"field 'estimate.theta' must lie in (0, 1), got {self.theta}")
        self.s = _number(est, "s", "estimate", None)
        self.p = _number(est, "p", "estimate", 2.0, allow_inf=True)
        self.q = _number(est, "q", "estimate", 1.0, allow_inf=True)
        for key in ("p", "q"):
            if getattr(self, key) < 1.0:
                raise ConfigError(f"field 'estimate.{key}' must lie in [1, inf]")
        self.trials = _number(est, "trials", "estimate", 4, int)
        self.seed = _number(est, "seed", "estimate", 0, int)
        self.family = est.get("family", "blocks")
        if self.family not in ("flat", "blocks", "dyadic", "localized"):
            raise ConfigError(f"field 'estimate.family' must be flat, blocks, dyadic or localized, got {self.family!r}")
        tol = _section(est, "tolerances") if "tolerances" in est else {}
        unknown = set(tol) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ConfigError(f"unknown fields in 'estimate.tolerances': {sorted(unknown)}")
        self.tolerances = {k: _number(tol, k, "estimate.tolerances", v) for k, v in DEFAULT_TOLERANCES.items()}
        self.output = _section(raw, "output")
        if self.experiment == "opnorm":
            if self.s is None:
                raise ConfigError("field 'estimate.s' is required for opnorm")
        if self.experiment in ("kernel-bound", "block-estimate", "commutator-decay") and self.j_range is None:
            raise ConfigError(f"field 'estimate.j_range' is required for {self.experiment}")

    def lattice(self):
        return FrequencyLattice(self.n, self.Kmax)

    def decomposition(self):
        return build_dyadic(self.lattice(), self.bump)

    def grid(self):
        return None if self.N is None else TorusGrid(self.n, self.N)

    def symbol(self):
        try:
            return make_symbol(self.symbol_name, n=self.n, d=self.d, **self.symbol_params)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"field 'symbol': {exc}") from None


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    return RunConfig(raw)


# --- experiments -------------------------------------------------------------


def _check_dyadic(cfg, workers):
    D = cfg.decomposition()
    rep = verify_dyadic(D, window_factor=cfg.tolerances["window_factor"])
    report = EstimateReport("check-dyadic", {"n": cfg.n, "Kmax": cfg.Kmax, "j_max": D.j_max,
                                             "rho_check": rep.rho_check,
                                             "bump": [cfg.bump.inner, cfg.bump.outer]})
    for alpha, vals in rep.c_alpha_per_j.items():
        name = "c_alpha_" + "".join(map(str, alpha))
        report.add_series(name, "j", [(0, rep.c_alpha_j0[alpha])] + list(enumerate(vals, start=1)))
    report.fits["partition_error"] = rep.partition_error
    report.fits["max_window_ratio"] = max(rep.window_ratio.values())
    report.verdicts.update({"support": rep.support_ok, "range": rep.range_ok,
                            "partition": rep.partition_ok, "uniform_differences": rep.uniform_ok})
    return report


def _kernel_bound(cfg, workers):
    return kernel_bound_experiment(cfg.symbol(), cfg.decomposition(), cfg.j_range, cfg.theta,
                                   grid=cfg.grid(), growth_factor=cfg.tolerances["growth_factor"],
                                   workers=workers)


def _family(cfg, D, d, s=0.0):
    return random_family(D.lattice, d, cfg.trials, cfg.seed, kind=cfg.family, s=s, D=D)


def _block_estimate(cfg, workers):
    a, D = cfg.symbol(), cfg.decomposition()
    return block_estimate_experiment(a, D, _family(cfg, D, a.d), cfg.p, cfg.j_range, grid=cfg.grid(),
                                     growth_factor=cfg.tolerances["growth_factor"], workers=workers)


def _commutator_decay(cfg, workers):
    a, D = cfg.symbol(), cfg.decomposition()
    return commutator_decay_experiment(a, D, _family(cfg, D, a.d), cfg.p, cfg.j_range, grid=cfg.grid(),
                                       slope_tolerance=cfg.tolerances["slope_tolerance"], workers=workers)


def _opnorm(cfg, workers):
    a = cfg.symbol()
    family = cfg.estimate.get("family", "dyadic")
    return operator_norm_experiment(a, cfg.lattice(), cfg.s, cfg.p, cfg.q, family=family,
                                    trials=cfg.trials, seed=cfg.seed, bump=cfg.bump,
                                    stability_factor=cfg.tolerances["stability_factor"])


def _besov(cfg, workers):
    D = cfg.decomposition()
    s = 1.5 if cfg.s is None else cfg.s
    params = BesovParams(s, cfg.p, cfg.q)
    grid = TorusGrid(cfg.n, 2 * cfg.Kmax + 1)
    fam = _family(cfg, D, cfg.d, s)
    norms = [besov_norm(F, D, params, grid).value for F in fam]
    report = EstimateReport("besov-norm", {"n": cfg.n, "d": cfg.d, "Kmax": cfg.Kmax, "s": s, "p": params.p,
                                           "q": params.q, "trials": cfg.trials, "seed": cfg.seed,
                                           "family": cfg.family})
    report.add_series("besov", "trial", enumerate(norms))
    s1 = s - math.floor(s)
    if 0.0 < s1 < 1.0 and s >= 0:
        ratios = [besov_norm_derivative_form(F, D, params, grid) / v for F, v in zip(fam, norms)]
        report.add_series("derivative_form_ratio", "trial", enumerate(ratios))
        report.fits["equivalence_constant"] = EQUIVALENCE_CONSTANT
        report.verdicts["derivative_form_equivalence"] = all(
            1.0 / EQUIVALENCE_CONSTANT <= r <= EQUIVALENCE_CONSTANT for r in ratios)
    report.verdicts["finite"] = bool(np.all(np.isfinite(norms)))
    return report


def _selftest(cfg, workers):
    """Exact identities on a small geometry."""
    n, d, K = cfg.n, cfg.d, min(cfg.Kmax, 16)
    L = FrequencyLattice(n, K)
    D = build_dyadic(L, cfg.bump)
    rng = np.random.default_rng(cfg.seed)
    F = random_coeffs(L, d, rng)
    b = cosine(n, d)
    grid = TorusGrid(n, 2 * (K + 1) + 1)
    f = inverse_transform(F, grid)
    checks = {}
    checks["round_trip"] = f.sup_distance(inverse_transform(forward_transform(f, L), grid))
    checks["constant_transform"] = abs(forward_transform(GridFunction(grid, np.ones(grid.shape + (1,))),
                                                         L).at((0,) * n)[0] - 1.0)
    checks["identity_operator"] = apply_op(identity(n, d), f).sup_distance(f)
    bvals = np.cos(grid.points[..., 0])[..., None]
    checks["multiplication_operator"] = apply_op(b, F, grid=grid).sup_distance(
        GridFunction(grid, bvals * f.values))
    checks["partition_reconstruction"] = apply_op(b, F, grid=grid, D=D).sup_distance(apply_op(b, F, grid=grid))
    checks["kernel_vs_frequency"] = max(
        apply_block(b, F, D, j, grid=grid).sup_distance(apply_via_kernel(kernel_block(b, D, j, grid), f))
        for j in range(D.j_max + 1))
    br = make_symbol("bracket", n=n, d=d, m=1.0)
    checks["multiplier_commutes"] = max(
        localize(apply_op(br, F, grid=grid), D, j).sup_distance(apply_block(br, F, D, j, grid=grid))
        for j in range(D.j_max + 1))
    checks["identity_symbol_norm"] = abs(symbol_norm(identity(n, d), L, grid).value - 1.0)
    const = GridFunction(grid, np.full(grid.shape + (d,), 0.5 + 0.0j))
    checks["besov_of_constant"] = max(
        abs(besov_norm(const, D, BesovParams(s, p, q)).value - lp_norm(const, 2))
        for s in (0.5, 1.0) for p in (1, 2, math.inf) for q in (1, math.inf))
    report = EstimateReport("selftest", {"n": n, "d": d, "Kmax": K, "N": grid.N, "seed": cfg.seed})
    report.add_series("residual", "check", checks.items())
    dyadic = verify_dyadic(D)
    for name, value in checks.items():
        report.verdicts[name] = bool(value <= 1e-10)
    report.verdicts["dyadic_conditions"] = dyadic.passed
    return report


_RUNNERS = {
    "check-dyadic": _check_dyadic,
    "kernel-bound": _kernel_bound,
    "block-estimate": _block_estimate,
    "commutator-decay": _commutator_decay,
    "opnorm": _opnorm,
    "besov-norm": _besov,
    "selftest": _selftest,
}


def execute(cfg, workers=1):
    """Run the configured experiment and return its report."""
    t0 = time.perf_counter()
    try:
        report = _RUNNERS[cfg.experiment](cfg, workers)
    except HypothesisError as exc:
        raise ConfigError(str(exc)) from None
    except NyquistError as exc:
        raise ConfigError(f"field 'geometry': {exc}") from None
    report.params["config"] = cfg.raw
    report.timing["seconds"] = time.perf_counter() - t0
    return report


def _summary(report):
    lines = [f"experiment: {report.experiment}"]
    for name, rows in report.series.items():
        vals = ", ".join(f"{r['value']:.4g}" for r in rows[:10])
        more = " ..." if len(rows) > 10 else ""
        lines.append(f"  {name:<28} {vals}{more}")
    for name, value in report.fits.items():
        lines.append(f"  {name:<28} {value:.6g}" if isinstance(value, float) else f"  {name:<28} {value}")
    for name, ok in report.verdicts.items():
        lines.append(f"  {'PASS' if ok else 'FAIL'}  {name}")
    for note in report.notes:
        lines.append(f"  note: {note}")
    return "\n".join(lines)


def _out_dir(args, cfg):
    return args.out or os.environ.get("TORPSIDO_OUT") or cfg.output.get("dir") or "torpsido-out"


def _write(report, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    stem = os.path.join(out_dir, report.experiment)
    report.to_json(stem + ".json")
    report.to_csv(stem + ".csv")
    return stem


def _run(cfg, args):
    report = execute(cfg, workers=args.threads)
    stem = _write(report, _out_dir(args, cfg))
    print(_summary(report))
    print(f"wrote {stem}.json and {stem}.csv")
    return 0 if report.passed else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="torpsido", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment from a JSON config")
    run.add_argument("config")
    for p in (run, sub.add_parser("selftest", help="run the built-in exact-identity checks")):
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=1, help="worker threads")
        p.add_argument("--verbose", action="store_true")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config) if args.command == "run" else RunConfig(SELFTEST_CONFIG)
        log.info("running %s", cfg.experiment)
        return _run(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
