"""Command-line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 fit failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import (histogram_table, ks_uniform, qq_against_normal, qq_against_uniform,
                          render_qq_svg)
from .errors import DataError, DomainError, FitError
from .fileio import INTERCEPT, load_csv, load_model, save_model
from .models import MODEL_NAMES, FitReport, FittedModel, TobitFit, TweedieFit, TwoPartFit, fit_model
from .residuals import ResidualSet, normal_transform, proposed_residuals
from .simulation import ARMS, GENERATORS, ScenarioConfig, run_scenario

log = logging.getLogger("semidiag")

EXIT_USAGE, EXIT_DATA, EXIT_FIT = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _split(text: str | None) -> list[str] | None:
    if text is None:
        return None
    return [t.strip() for t in text.split(",") if t.strip()]


def _write(out_dir: Path, name: str, text: str) -> None:
    (out_dir / name).write_text(text, encoding="utf-8")


def _output_dir(args) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ------------------------------------------------------------------ #
# fit
# ------------------------------------------------------------------ #


def _coef_rows(names, coef, se) -> list[str]:
    lines = [f"{'term':<24}{'estimate':>22}{'std_error':>22}"]
    for i, name in enumerate(names):
        s = "" if se is None else format(se[i], ".10g")
        lines.append(f"{name:<24}{format(coef[i], '.10g'):>22}{s:>22}")
    return lines


def _report_block(title: str, report: FitReport) -> list[str]:
    return [f"[{title}]",
            f"log_likelihood={report.log_likelihood!r}",
            f"iterations={report.iterations}",
            f"converged={str(report.converged).lower()}"]


def fit_report_text(model: FittedModel, n: int) -> str:
    names = model.column_names
    lines = [f"family={model.family}", f"n={n}"]
    if isinstance(model, TwoPartFit):
        zero, pos = model.reports["zero"], model.reports["positive"]
        lines += _report_block("zero part: logistic", zero)
        lines += _coef_rows(names, model.zero_coef, zero.coefficient_standard_errors)
        lines += _report_block(f"positive part: {model.positive_family}", pos)
        lines += _coef_rows(names, model.positive_coef, pos.coefficient_standard_errors)
        lines += [f"{k}={v!r}" for k, v in sorted(model.shape_params.items())]
    else:
        lines += _report_block(model.family, model.report)
        lines += _coef_rows(names, model.coef, model.report.coefficient_standard_errors)
        if isinstance(model, TweedieFit):
            lines += [f"phi={model.phi!r}", f"power={model.power!r}", "[power profile]",
                      "power,phi_pearson,log_likelihood"]
            lines += [f"{p!r},{f!r},{ll!r}" for p, f, ll in model.report.extra["profile"]]
        elif isinstance(model, TobitFit):
            lines += [f"sigma={model.sigma!r}", f"limit={model.limit!r}"]
    return "\n".join(lines) + "\n"


def cmd_fit(args) -> int:
    data = load_csv(args.input, args.response, _split(args.covariates))
    model = fit_model(args.model, data, args.limit)
    out = _output_dir(args)
    save_model(model, out / "model.txt")
    _write(out, "fit_report.txt", fit_report_text(model, data.n))
    return 0


# ------------------------------------------------------------------ #
# residuals / validate
# ------------------------------------------------------------------ #


def _model_dataset(args, model: FittedModel, path):
    covariates = [c for c in model.column_names if c != INTERCEPT]
    requested = _split(args.covariates)
    if requested is not None and requested != covariates:
        raise DataError(f"covariates {requested} do not match the model's {covariates}")
    data = load_csv(path, args.response, covariates)
    if data.column_names != model.column_names:
        raise DataError(f"dataset columns {data.column_names} do not match model {model.column_names}")
    return data


def write_residual_outputs(out: Path, res: ResidualSet, prefix: str = "") -> None:
    lines = ["index,p0_hat,cdf_value,residual,residual_normal"]
    for i, row in enumerate(zip(res.p0_hat.tolist(), res.cdf_value.tolist(),
                                res.proposed.tolist(), res.normal_scale.tolist())):
        lines.append(f"{i}," + ",".join(repr(v) for v in row))
    _write(out, f"{prefix}residuals.csv", "\n".join(lines) + "\n")
    write_qq_outputs(out, res.proposed, res.normal_scale, prefix)
    _write(out, f"{prefix}p0_histogram.csv", histogram_table(res.p0_hat))
    _write(out, f"{prefix}uniformity.txt", ks_uniform(res.proposed).to_text())


def write_qq_outputs(out: Path, residuals, normal_scale, prefix: str = "", title: str = "") -> None:
    label = title or "residuals"
    uni = qq_against_uniform(residuals)
    nor = qq_against_normal(normal_scale)
    _write(out, f"{prefix}qq_uniform.csv", uni.to_csv())
    _write(out, f"{prefix}qq_uniform.svg", render_qq_svg(uni, f"{label}: uniform scale"))
    _write(out, f"{prefix}qq_normal.csv", nor.to_csv())
    _write(out, f"{prefix}qq_normal.svg", render_qq_svg(nor, f"{label}: normal scale"))


def _residuals_for(model: FittedModel, data) -> ResidualSet:
    return proposed_residuals(model.p0(data.design), model.cdf(data.response, data.design))


def cmd_residuals(args) -> int:
    model = load_model(args.model_file)
    data = _model_dataset(args, model, args.input)
    write_residual_outputs(_output_dir(args), _residuals_for(model, data))
    return 0


def cmd_validate(args) -> int:
    model = load_model(args.model_file)
    holdout = _model_dataset(args, model, args.holdout)
    write_residual_outputs(_output_dir(args), _residuals_for(model, holdout), prefix="oos_")
    return 0


# ------------------------------------------------------------------ #
# simulate / qq
# ------------------------------------------------------------------ #


def read_key_values(path) -> dict[str, str]:
    values = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


_SCENARIO_FLAGS = ("generator", "n", "seed", "reps", "arms", "beta0_zero", "sd", "halfwidth",
                   "power", "phi")


def scenario_from_args(args) -> ScenarioConfig:
    values = read_key_values(args.config) if args.config else {}
    for key in _SCENARIO_FLAGS:
        v = getattr(args, key)
        if v is not None:
            values[key] = v
    try:
        return ScenarioConfig.from_mapping(values)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"invalid scenario: {exc}") from None


def cmd_simulate(args) -> int:
    config = scenario_from_args(args)
    result = run_scenario(config)
    out = _output_dir(args)
    rows = ["rep,arm,ks,converged"]
    for o in sorted(result.outcomes, key=lambda o: (o.replication, config.arms.index(o.arm))):
        rows.append(f"{o.replication},{o.arm},{o.ks!r},{str(o.converged).lower()}")
    _write(out, "scenario.csv", "\n".join(rows) + "\n")
    agg = result.aggregate()
    keys = ("fits", "failures", "mean_ks", "sd_ks", "se_mean_ks", "q05_ks", "median_ks", "q95_ks")
    rows = ["arm," + ",".join(keys)]
    for arm in config.arms:
        rows.append(arm + "," + ",".join(repr(float(agg[arm].get(k, float("nan")))) for k in keys))
    _write(out, "aggregate.csv", "\n".join(rows) + "\n")
    for arm in config.arms:
        first = next((o for o in result.arm_outcomes(arm) if o.replication == 0), None)
        if first is not None and first.residuals is not None:
            write_qq_outputs(out, first.residuals.proposed, first.residuals.normal_scale,
                             prefix=f"{arm}_", title=f"{config.generator}, n={config.n}, {arm}")
    return 0


def cmd_qq(args) -> int:
    path = Path(args.input)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or args.column not in rows[0]:
        raise DataError(f"{path}: missing column {args.column!r}")
    try:
        r = np.array([float(row[args.column]) for row in rows])
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    if np.any((r < 0) | (r > 1)):
        raise DataError(f"{path}: column {args.column!r} must hold residuals in [0, 1]")
    out = _output_dir(args)
    write_qq_outputs(out, r, normal_transform(r), title=args.title or args.column)
    _write(out, "uniformity.txt", ks_uniform(r).to_text())
    return 0


# ------------------------------------------------------------------ #
# parser
# ------------------------------------------------------------------ #


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="semidiag", description=(
        "Fit regression models for semicontinuous outcomes and compute "
        "uniformity-based residual diagnostics."))
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    def data_args(p, model_file=False):
        p.add_argument("--input", required=True, help="CSV file with a header row")
        p.add_argument("--response", default="y", help="response column (default: y)")
        p.add_argument("--covariates", help="comma-separated covariates (default: all others)")
        p.add_argument("--output-dir", required=True)
        if model_file:
            p.add_argument("--model-file", required=True)

    p = sub.add_parser("fit", help="fit a model and write model.txt and fit_report.txt")
    data_args(p)
    p.add_argument("--model", required=True, choices=MODEL_NAMES)
    p.add_argument("--limit", type=float, default=0.0, help="Tobit detection limit (default 0)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("residuals", help="in-sample residuals, QQ data and plots")
    data_args(p, model_file=True)
    p.set_defaults(func=cmd_residuals)

    p = sub.add_parser("validate", help="out-of-sample errors on a held-out CSV")
    data_args(p, model_file=True)
    p.add_argument("--holdout", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="run a replicated simulation scenario")
    p.add_argument("--config", help="key=value scenario file; flags override it")
    p.add_argument("--generator", choices=GENERATORS)
    p.add_argument("--n")
    p.add_argument("--seed")
    p.add_argument("--reps")
    p.add_argument("--arms", help=f"comma-separated subset of {','.join(ARMS)}")
    p.add_argument("--beta0-zero", dest="beta0_zero")
    p.add_argument("--sd")
    p.add_argument("--halfwidth")
    p.add_argument("--power")
    p.add_argument("--phi")
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("qq", help="QQ data and plots for a residual column of a CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--column", default="residual")
    p.add_argument("--title")
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=cmd_qq)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"semidiag: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FitError as exc:
        print(f"semidiag: fit failed: {exc}", file=sys.stderr)
        return EXIT_FIT
    except (DataError, DomainError, FileNotFoundError) as exc:
        print(f"semidiag: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
