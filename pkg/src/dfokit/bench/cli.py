"""Command-line harness: ``dfokit run``, ``dfokit verify-constants`` and ``dfokit compare``."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from ..drivers import ALGORITHMS, TrConfig
from ..errors import ConfigError, DfoError, MixedProblems
from ..interp import ModelKind
from ..problem_model import BoundedDeterministic, Exact, Stochastic, WholeSpace
from .constants import constant_checks, format_checks
from .problems import PROBLEMS, get_problem
from .report import compare_runs, export_report, format_table, load_report

EXIT_OK, EXIT_CHECKS_FAILED, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3

# run settings shared by flags and config files, with their converters
RUN_KEYS = {
    "problem": str, "algo": str, "seed": int, "delta0": float, "max_evals": int, "out": str,
    "noise_sigma": float, "noise_epsf": float, "model_kind": str, "n_points": int, "format": str,
}


class UsageError(ConfigError):
    """Configuration problem attributable to one command-line flag."""


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; blank lines and ``#`` comments are ignored."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"--config: cannot read {path}: {exc}") from exc
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"--config: {path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _convert(key, value):
    try:
        return RUN_KEYS[key](value)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"--{key.replace('_', '-')}: invalid value {value!r}") from exc


def resolve_run(args: argparse.Namespace) -> tuple[dict, TrConfig]:
    """Merge defaults, the config file and explicit flags (flags win)."""
    env_seed = os.environ.get("DFOKIT_SEED", "0")
    try:
        settings = {"seed": int(env_seed), "format": "json"}
    except ValueError:
        raise UsageError(f"DFOKIT_SEED: expected an integer, got {env_seed!r}") from None
    overrides = {}
    if args.config is not None:
        for key, value in read_config_file(args.config).items():
            if key in RUN_KEYS:
                settings[key] = _convert(key, value)
            else:
                overrides[key] = value
    for key in RUN_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    for key in ("delta0", "max_evals"):
        if key in settings:
            overrides[key] = settings[key]
    for key in ("problem", "algo"):
        if key not in settings:
            raise UsageError(f"--{key} is required")
    if settings["algo"] not in ALGORITHMS:
        raise UsageError(f"--algo: unknown variant {settings['algo']!r}; choose from {', '.join(ALGORITHMS)}")
    if settings["problem"] not in PROBLEMS:
        raise UsageError(f"--problem: unknown problem {settings['problem']!r}; choose from {', '.join(PROBLEMS)}")
    if settings.get("format") not in ("json", "csv"):
        raise UsageError("--format: choose json or csv")
    if "model_kind" in settings:
        try:
            settings["model_kind"] = ModelKind(settings["model_kind"]).value
        except ValueError:
            raise UsageError(f"--model-kind: choose from {', '.join(k.value for k in ModelKind)}") from None
    if settings.get("noise_sigma") is not None and settings.get("noise_epsf") is not None:
        raise UsageError("--noise-sigma and --noise-epsf are mutually exclusive")
    overrides["seed"] = settings["seed"]
    config = TrConfig.from_mapping(overrides)
    algo = settings["algo"]
    if algo == "noisy":
        eps = config.eps_f or settings.get("noise_epsf") or 0.0
        config = config.replace(eps_f=eps, r=max(config.r, 2 * eps))
    if algo == "storm":
        sigma = settings.get("noise_sigma") or 0.0
        if config.sigma is None:
            config = config.replace(sigma=sigma)
        if config.sigma > 0 and config.eps_f == 0:
            config = config.replace(eps_f=0.1, mu_c=0.1)
    return settings, config


def _oracle(problem, settings):
    if settings.get("noise_sigma"):
        mode = Stochastic(settings["noise_sigma"])
    elif settings.get("noise_epsf"):
        mode = BoundedDeterministic(settings["noise_epsf"], phase=settings["seed"])
    else:
        mode = Exact()
    return problem.oracle(mode), mode


def solve(settings: dict, config: TrConfig):
    """Run the configured algorithm on the configured problem; returns ``(problem, report)``."""
    problem = get_problem(settings["problem"])
    algo = settings["algo"]
    oracle, _ = _oracle(problem, settings)
    runner = ALGORITHMS[algo]
    kwargs = {}
    if "model_kind" in settings:
        if algo in ("classical", "second-order", "noisy"):
            raise UsageError(f"--model-kind: algorithm {algo!r} fixes its model")
        kwargs["model_kind"] = settings["model_kind"]
    elif problem.fun is None and algo == "first-order":
        kwargs["model_kind"] = ModelKind.COMPOSITE
    if "n_points" in settings:
        if algo not in ("first-order", "inaccurate", "self-correcting"):
            raise UsageError(f"--n-points: not used by {algo!r}")
        kwargs["n_points"] = settings["n_points"]
    if algo == "classical" and problem.hessian is None:
        config = config.replace(hessian="sr1")
    if algo == "constrained":
        feasible = problem.feasible if problem.feasible is not None else WholeSpace()
        return problem, runner(oracle, problem.x0, feasible, config, **kwargs)
    if problem.feasible is not None:
        raise UsageError(f"--problem: {problem.name!r} is constrained; use --algo constrained")
    return problem, runner(oracle, problem.x0, config, **kwargs)


def _meta(settings, config):
    cfg = config.as_dict()
    for key in ("model_kind", "n_points", "noise_sigma", "noise_epsf"):
        if key in settings:
            cfg[key] = settings[key]
    return {"problem": settings["problem"], "algo": settings["algo"], "seed": settings["seed"], "config": cfg}


def cmd_run(args) -> int:
    settings, config = resolve_run(args)
    problem, report = solve(settings, config)
    norm_grad = None
    if problem.gradient is not None:
        norm_grad = float(np.linalg.norm(problem.gradient(report.x)))
    out = settings.get("out") or f"{settings['problem']}-{settings['algo']}-{settings['seed']}.{settings['format']}"
    export_report(report, out, settings["format"], meta=_meta(settings, config), norm_grad=norm_grad)
    grad = f" |grad f|={norm_grad:.6e}" if norm_grad is not None else ""
    f_final = report.f_final if report.f_final is not None else report.f
    print(f"f={f_final:.6e}{grad} evals={report.evals} reason={report.reason.value} report={out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    checks = constant_checks()
    print(format_checks(checks))
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_CHECKS_FAILED


def cmd_compare(args) -> int:
    reports = []
    for path in args.reports:
        try:
            reports.append(load_report(path))
        except (OSError, ValueError) as exc:
            raise UsageError(f"reports: cannot load {path}: {exc}") from exc
    try:
        rows = compare_runs(reports, f_min=args.f_min)
    except MixedProblems as exc:
        raise UsageError(f"reports: {exc}") from exc
    print(format_table(rows))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dfokit", description="Derivative-free trust-region benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="solve one problem with one algorithm")
    run.add_argument("--problem", help=f"one of: {', '.join(PROBLEMS)}")
    run.add_argument("--algo", help=f"one of: {', '.join(ALGORITHMS)}")
    run.add_argument("--seed", type=int, help="random seed (default: $DFOKIT_SEED or 0)")
    run.add_argument("--delta0", type=float)
    run.add_argument("--max-evals", type=int)
    run.add_argument("--out", help="report path")
    run.add_argument("--format", choices=("json", "csv"))
    run.add_argument("--noise-sigma", type=float, help="Gaussian noise level")
    run.add_argument("--noise-epsf", type=float, help="bounded deterministic noise level")
    run.add_argument("--model-kind", help="interpolation model for the drivers that accept one")
    run.add_argument("--n-points", type=int, help="number of interpolation points (min-Frobenius)")
    run.add_argument("--config", help="file of key = value lines; flags take precedence")
    run.set_defaults(func=cmd_run)
    ver = sub.add_parser("verify-constants", help="check the closed-form set constants")
    ver.set_defaults(func=cmd_verify)
    cmp_ = sub.add_parser("compare", help="evaluations to tolerance for saved JSON reports")
    cmp_.add_argument("reports", nargs="+")
    cmp_.add_argument("--f-min", type=float)
    cmp_.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DfoError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
