"""Command-line front end.

Subcommands
-----------
select     run the full channel-selection pipeline and write a report
fit        fit a single WPLS model and print its coefficients
gradcheck  compare every analytic derivative against finite differences
simulate   generate a synthetic dataset and write it as CSV
bench      time the residual-Jacobian strategies over a channel-count grid

Options may also come from a plain-text config file of ``key = value``
lines (see README); explicit flags override file values.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields as dataclass_fields
from pathlib import Path

import numpy as np

from .benchmarks import benchmark_residual_jacobian
from .cv import load_plan, make_interleaved_plan, make_mc_plan
from .data_io import (ArtifConfig, generate_artif, load_dataset_csv,
                      write_dataset_csv, write_report)
from .dataset import Dataset
from .diagnostics import GRADIENT_CHECK_TOLERANCE, run_gradient_checks
from .exceptions import (CsvFormatError, DataValidationError, LineSearchError,
                         NumericalError, PerfectFitError)
from .selection import SelectConfig, srcek_select
from .wpls import wpls_implicit, wpls_vanilla

__all__ = ["main"]

USER_ERRORS = (DataValidationError, CsvFormatError, NumericalError,
               PerfectFitError, LineSearchError, OSError, ValueError)


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; '#' starts a comment."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataValidationError(
                    f"{path}: line {lineno}: expected 'key = value', got {line!r}"
                )
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return values


def _as_bool(text: str) -> bool:
    lowered = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise DataValidationError(f"cannot parse boolean from {text!r}")


class Settings:
    """Flag-over-file option resolution."""

    def __init__(self, args: argparse.Namespace, file_values: dict):
        self.args = vars(args)
        self.file = file_values

    def get(self, key: str, default=None, parse=None):
        flag = self.args.get(key.replace(".", "_"))
        if flag is not None:
            return flag
        if key in self.file:
            raw = self.file[key]
            return parse(raw) if parse else raw
        return default


def parse_cv_spec(spec: str, m: int, seed: int):
    """Parse a CV plan spec: ``mc[:d=..,J=..]``, ``interleaved:G=..``, ``file:path``."""
    kind, _, rest = spec.partition(":")
    kind = kind.strip()
    options = {}
    if kind == "file":
        return load_plan(rest)
    for item in rest.split(","):
        if item.strip():
            k, _, v = item.partition("=")
            options[k.strip()] = v.strip()
    if kind == "mc":
        d = int(options["d"]) if "d" in options else None
        j = int(options["J"]) if "J" in options else None
        plan_seed = int(options["seed"]) if "seed" in options else seed
        return make_mc_plan(m, test_size=d, n_folds=j, seed=plan_seed)
    if kind == "interleaved":
        if "G" not in options:
            raise DataValidationError("interleaved plan needs G=<groups>")
        return make_interleaved_plan(m, int(options["G"]))
    raise DataValidationError(
        f"unknown cv spec {spec!r}; expected mc[:..], interleaved:G=.., file:path"
    )


def _artif_config(settings: Settings, seed: int) -> ArtifConfig:
    kwargs = {"seed": seed}
    casts = {
        "n_objects": int, "n_channels": int, "group_size": int,
        "n_relevant_groups": int, "within_group_correlation": float,
        "noise_sd": float, "train_fraction": float, "seed": int,
    }
    for f in dataclass_fields(ArtifConfig):
        key = f"artif.{f.name}"
        if f.name == "coefficients":
            raw = settings.get(key)
            if raw is not None:
                kwargs["coefficients"] = tuple(
                    float(s) for s in str(raw).split(",") if s.strip())
        else:
            value = settings.get(key, parse=casts.get(f.name, str))
            if value is not None:
                kwargs[f.name] = value
    return ArtifConfig(**kwargs)


def _load_data(settings: Settings, seed: int) -> Dataset:
    use_artif = settings.get("artif", default=False, parse=_as_bool)
    path = settings.get("data")
    if use_artif:
        train, _, _ = generate_artif(_artif_config(settings, seed))
        return train
    if not path:
        raise DataValidationError("no dataset: pass --data FILE or --artif")
    return load_dataset_csv(
        path,
        delimiter=settings.get("delimiter", default=","),
        response_column=_parse_response_column(
            settings.get("response_column", default=-1)),
        header=settings.get("header", default=True, parse=_as_bool),
    )


def _parse_response_column(value):
    if isinstance(value, int):
        return value
    text = str(value)
    try:
        return int(text)
    except ValueError:
        return text


def cmd_select(args) -> int:
    settings = Settings(args, read_config_file(args.config) if args.config else {})
    seed = settings.get("seed", default=0, parse=int)
    data = _load_data(settings, seed)
    cv_spec = settings.get("cv")
    plan = parse_cv_spec(cv_spec, data.n_objects, seed) if cv_spec else None
    objective = settings.get("objective", default="abic")
    kind = {"abic": "embedded_abic", "embedded_abic": "embedded_abic",
            "rmsecv": "rmsecv"}.get(objective)
    if kind is None:
        raise DataValidationError(
            f"objective must be 'abic' or 'rmsecv', got {objective!r}")
    criterion = settings.get("criterion", default="abic")
    crit = {"abic": "min_abic", "min_abic": "min_abic",
            "rmsecv": "min_rmsecv", "min_rmsecv": "min_rmsecv"}.get(criterion)
    if crit is None:
        raise DataValidationError(
            f"criterion must be 'abic' or 'rmsecv', got {criterion!r}")
    cfg = SelectConfig(
        n_factors=settings.get("l", default=2, parse=int),
        objective_kind=kind,
        p=settings.get("p", default=1.0, parse=float),
        q=settings.get("q", default=2.0, parse=float),
        plan=plan,
        k_max=settings.get("k_max", parse=int),
        criterion=crit,
        post_optimize=settings.get("post_optimize", default=False, parse=_as_bool),
        seed=seed,
    )
    report = srcek_select(data, cfg)
    output = settings.get("output", default="report.json")
    write_report(report, output)
    w = report.winner
    label = "trivial model" if w.kind == "trivial" else \
        f"{w.k} channels {w.channels}"
    print(f"winner: {label} (criterion {w.criterion} = {w.criterion_value:.6g})")
    print(f"report written to {output}")
    return 0


def cmd_fit(args) -> int:
    settings = Settings(args, read_config_file(args.config) if args.config else {})
    seed = settings.get("seed", default=0, parse=int)
    data = _load_data(settings, seed)
    n_factors = settings.get("l", default=2, parse=int)
    fitter = {"deflation": wpls_vanilla, "implicit": wpls_implicit}[args.algorithm]
    model, _ = fitter(data, n_factors)
    print(f"factors_used: {model.factors_used}")
    print(f"intercept: {model.beta0!r}")
    for j, b in enumerate(model.beta):
        label = data.channel_labels[j] if data.channel_labels else f"ch{j}"
        print(f"{label}: {b!r}")
    return 0


def cmd_gradcheck(args) -> int:
    results = run_gradient_checks(seed=args.seed)
    worst = 0.0
    for name, err in results.items():
        print(f"{name}: max relative error {err:.3e}")
        worst = max(worst, err)
    if worst > GRADIENT_CHECK_TOLERANCE:
        print(f"FAIL: worst error {worst:.3e} exceeds {GRADIENT_CHECK_TOLERANCE:g}",
              file=sys.stderr)
        return 1
    print(f"all gradients within {GRADIENT_CHECK_TOLERANCE:g}")
    return 0


def cmd_simulate(args) -> int:
    settings = Settings(args, read_config_file(args.config) if args.config else {})
    seed = settings.get("seed", default=0, parse=int)
    cfg = _artif_config(settings, seed)
    train, external, truth = generate_artif(cfg)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_dataset_csv(train, out / "train.csv")
    write_dataset_csv(external, out / "external.csv")
    with open(out / "truth.json", "w", encoding="utf-8") as fh:
        json.dump({
            "relevant_channels": [int(c) for c in truth.relevant_channels],
            "coefficients": [float(c) for c in truth.coefficients],
        }, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {out / 'train.csv'} ({train.n_objects} objects), "
          f"{out / 'external.csv'} ({external.n_objects} objects), "
          f"{out / 'truth.json'}")
    return 0


def cmd_bench(args) -> int:
    n_values = [int(s) for s in args.n.split(",") if s.strip()]
    rows = benchmark_residual_jacobian(
        m=args.m, m_test=args.mtest, n_factors=args.l,
        n_values=n_values, repeats=args.reps, seed=args.seed)
    print("n,method,median_seconds")
    for row in rows:
        print(f"{row.n_channels},{row.method},{row.median_seconds!r}")
    return 0


def _add_data_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", help="CSV dataset path")
    parser.add_argument("--artif", action="store_const", const=True, default=None,
                        help="use a generated synthetic dataset instead of --data")
    parser.add_argument("--delimiter", help="CSV delimiter (default ,)")
    parser.add_argument("--response-column", dest="response_column",
                        help="response column index or header name (default last)")
    parser.add_argument("--no-header", dest="header", action="store_const",
                        const=False, default=None,
                        help="treat the first CSV line as data, not labels")
    parser.add_argument("--config", help="key = value config file; flags override")
    parser.add_argument("--seed", type=int, default=None, help="random seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="srcek",
        description="Channel selection for PLS regression by continuous embedding.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_select = sub.add_parser("select", help="run the selection pipeline")
    _add_data_flags(p_select)
    p_select.add_argument("--l", type=int, default=None, help="number of PLS factors")
    p_select.add_argument("--objective", choices=["abic", "rmsecv"], default=None,
                          help="objective to minimize (default abic)")
    p_select.add_argument("--p", type=float, default=None,
                          help="lower norm order of the size surrogate")
    p_select.add_argument("--q", type=float, default=None,
                          help="upper norm order of the size surrogate")
    p_select.add_argument("--cv", default=None,
                          help="CV plan: mc[:d=..,J=..,seed=..], interleaved:G=..,"
                               " or file:PATH (default mc)")
    p_select.add_argument("--k-max", dest="k_max", type=int, default=None,
                          help="largest candidate subset size (default min(n, 50))")
    p_select.add_argument("--criterion", choices=["abic", "rmsecv"], default=None,
                          help="selection criterion (default abic)")
    p_select.add_argument("--post-optimize", dest="post_optimize",
                          action="store_const", const=True, default=None,
                          help="re-optimize weights on the winning subset")
    p_select.add_argument("--output", default=None,
                          help="report path (default report.json)")
    p_select.set_defaults(func=cmd_select)

    p_fit = sub.add_parser("fit", help="fit one WPLS model and print it")
    _add_data_flags(p_fit)
    p_fit.add_argument("--l", type=int, default=None, help="number of PLS factors")
    p_fit.add_argument("--algorithm", choices=["deflation", "implicit"],
                       default="deflation")
    p_fit.set_defaults(func=cmd_fit)

    p_grad = sub.add_parser("gradcheck",
                            help="finite-difference check of all gradients")
    p_grad.add_argument("--seed", type=int, default=0)
    p_grad.set_defaults(func=cmd_gradcheck)

    p_sim = sub.add_parser("simulate", help="generate a synthetic dataset")
    p_sim.add_argument("--output-dir", default="artif-data")
    p_sim.add_argument("--config", help="key = value config file; flags override")
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.set_defaults(func=cmd_simulate)

    p_bench = sub.add_parser("bench", help="time the residual-Jacobian methods")
    p_bench.add_argument("--m", type=int, default=40, help="calibration objects")
    p_bench.add_argument("--mtest", type=int, default=10, help="test objects")
    p_bench.add_argument("--l", type=int, default=5, help="number of PLS factors")
    p_bench.add_argument("--n", default="500,1000,2000",
                         help="comma-separated channel counts")
    p_bench.add_argument("--reps", type=int, default=3,
                         help="timed repetitions per point")
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
