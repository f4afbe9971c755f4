"""Shared data containers and the fitted-model contract."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

from ..errors import DataError, RankDeficientError


@dataclass(frozen=True)
class Dataset:
    """Design matrix (intercept in column 0) and a nonnegative response."""

    design: np.ndarray
    response: np.ndarray
    column_names: tuple[str, ...]

    def __post_init__(self):
        design = np.asarray(self.design, dtype=float)
        response = np.asarray(self.response, dtype=float)
        if design.ndim != 2:
            raise DataError("design must be a 2-d matrix")
        n, d = design.shape
        if response.shape != (n,):
            raise DataError(f"response length {response.shape} does not match {n} design rows")
        if len(self.column_names) != d:
            raise DataError(f"{len(self.column_names)} column names for {d} design columns")
        if n < d:
            raise DataError(f"need at least as many rows ({n}) as columns ({d})")
        if not (np.all(np.isfinite(design)) and np.all(np.isfinite(response))):
            raise DataError("design and response must be finite")
        if np.any(response < 0):
            raise DataError(f"negative response at row {int(np.argmax(response < 0))}")
        object.__setattr__(self, "design", design)
        object.__setattr__(self, "response", response)
        object.__setattr__(self, "column_names", tuple(self.column_names))

    @property
    def n(self) -> int:
        return self.design.shape[0]

    @property
    def is_zero(self) -> np.ndarray:
        return self.response == 0

    def select(self, columns: Sequence[str]) -> "Dataset":
        """Dataset restricted to the named design columns (order kept as given)."""
        idx = [self.column_names.index(c) for c in columns]
        return Dataset(self.design[:, idx], self.response, tuple(columns))

    def subset(self, rows) -> "Dataset":
        return Dataset(self.design[rows], self.response[rows], self.column_names)


@dataclass
class FitReport:
    log_likelihood: float
    iterations: int
    converged: bool
    coefficient_standard_errors: np.ndarray | None = None
    extra: dict = field(default_factory=dict)


@runtime_checkable
class FittedModel(Protocol):
    """Anything that can report P(Y = 0 | x) and F(y | x) row-wise."""

    family: str
    column_names: tuple[str, ...]

    def p0(self, design: np.ndarray) -> np.ndarray: ...

    def cdf(self, y: np.ndarray, design: np.ndarray) -> np.ndarray: ...


def _rows(x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    return np.atleast_2d(x), x.ndim == 1


def predict_p0(model: FittedModel, x):
    """P(Y = 0 | x) for one covariate vector or for every row of a matrix."""
    rows, single = _rows(x)
    out = model.p0(rows)
    return float(out[0]) if single else out


def conditional_cdf(model: FittedModel, y, x):
    """F(y | x) = p0(x) + (1 - p0(x)) G(y | x)."""
    rows, single = _rows(x)
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise DataError("conditional_cdf requires y >= 0")
    out = model.cdf(np.broadcast_to(y, (rows.shape[0],)) if y.ndim == 0 else y, rows)
    return float(out[0]) if single else out


def require_full_rank(design: np.ndarray) -> None:
    rank = np.linalg.matrix_rank(design)
    if rank < design.shape[1]:
        raise RankDeficientError(
            f"design matrix has rank {rank} < {design.shape[1]} columns")
