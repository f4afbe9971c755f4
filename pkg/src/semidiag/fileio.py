"""CSV ingestion and the plain-text model file format."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError
from .models import Dataset, FittedModel, TobitFit, TweedieFit, TwoPartFit

MODEL_FORMAT = "semidiag-model/1"
INTERCEPT = "intercept"


def load_csv(path, response_column: str, covariate_columns: Sequence[str] | None = None) -> Dataset:
    """Read a numeric CSV into a Dataset with an intercept column prepended.

    ``covariate_columns=None`` uses every column other than the response.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = [row for row in reader if row and any(cell.strip() for cell in row)]

    if response_column not in header:
        raise DataError(f"{path}: missing response column {response_column!r}")
    if covariate_columns is None:
        covariate_columns = [h for h in header if h != response_column]
    for col in covariate_columns:
        if col not in header:
            raise DataError(f"{path}: missing covariate column {col!r}")
    if INTERCEPT in covariate_columns:
        raise DataError(f"{path}: column name {INTERCEPT!r} is reserved")
    if not rows:
        raise DataError(f"{path}: no data rows")

    wanted = [response_column, *covariate_columns]
    index = [header.index(c) for c in wanted]
    values = np.empty((len(rows), len(wanted)))
    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise DataError(f"{path}: row {r + 1} has {len(row)} fields, expected {len(header)}")
        for c, (name, j) in enumerate(zip(wanted, index)):
            cell = row[j].strip()
            try:
                value = float(cell)
            except ValueError:
                raise DataError(f"{path}: row {r + 1}, column {name!r}: "
                                f"non-numeric value {cell!r}") from None
            if not math.isfinite(value):
                raise DataError(f"{path}: row {r + 1}, column {name!r}: non-finite value {cell!r}")
            values[r, c] = value

    y = values[:, 0]
    if np.any(y < 0):
        r = int(np.argmax(y < 0))
        raise DataError(f"{path}: row {r + 1}: negative response {y[r]!r}")
    design = np.column_stack([np.ones(len(rows)), values[:, 1:]])
    return Dataset(design, y, (INTERCEPT, *covariate_columns))


def write_csv(dataset: Dataset, path, response_column: str = "y") -> None:
    """Write a Dataset (without its intercept column) in the format load_csv reads."""
    names = [c for c in dataset.column_names if c != INTERCEPT]
    cols = [i for i, c in enumerate(dataset.column_names) if c != INTERCEPT]
    lines = [",".join([response_column, *names])]
    for y, row in zip(dataset.response.tolist(), dataset.design[:, cols].tolist()):
        lines.append(",".join(repr(v) for v in [y, *row]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ------------------------------------------------------------------ #
# Model files
# ------------------------------------------------------------------ #


def _num(v: float) -> str:
    return format(float(v), ".17g")


def _vec(v) -> str:
    return ",".join(_num(x) for x in np.asarray(v, dtype=float))


def dump_model(model: FittedModel) -> str:
    fields = [("format", MODEL_FORMAT), ("family", model.family),
              ("columns", ",".join(model.column_names))]
    if isinstance(model, TwoPartFit):
        fields += [("zero_coef", _vec(model.zero_coef)), ("positive_coef", _vec(model.positive_coef))]
        fields += [(k, _num(v)) for k, v in sorted(model.shape_params.items())]
    elif isinstance(model, TweedieFit):
        fields += [("coef", _vec(model.coef)), ("phi", _num(model.phi)), ("power", _num(model.power))]
    elif isinstance(model, TobitFit):
        fields += [("coef", _vec(model.coef)), ("sigma", _num(model.sigma)), ("limit", _num(model.limit))]
    else:
        raise TypeError(f"cannot serialise {type(model).__name__}")
    return "".join(f"{k}={v}\n" for k, v in fields)


def parse_model(text: str) -> FittedModel:
    fields = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise DataError(f"model file line {lineno}: expected key=value")
        fields[key.strip()] = value.strip()
    if fields.get("format") != MODEL_FORMAT:
        raise DataError(f"unsupported model file format {fields.get('format')!r}")
    try:
        family = fields["family"]
        columns = tuple(fields["columns"].split(","))
        vec = lambda k: np.array([float(x) for x in fields[k].split(",")])
        if family in ("twopart-gamma", "twopart-gb2"):
            pos = family.split("-", 1)[1]
            shape_keys = ("dispersion",) if pos == "gamma" else ("a", "p", "q")
            return TwoPartFit(vec("zero_coef"), pos, vec("positive_coef"),
                              {k: float(fields[k]) for k in shape_keys}, columns)
        if family == "tweedie":
            return TweedieFit(vec("coef"), float(fields["phi"]), float(fields["power"]), columns)
        if family == "tobit":
            return TobitFit(vec("coef"), float(fields["sigma"]), float(fields["limit"]), columns)
    except KeyError as exc:
        raise DataError(f"model file is missing field {exc.args[0]!r}") from None
    raise DataError(f"unknown model family {family!r}")


def save_model(model: FittedModel, path) -> None:
    Path(path).write_text(dump_model(model), encoding="utf-8")


def load_model(path) -> FittedModel:
    return parse_model(Path(path).read_text(encoding="utf-8"))
