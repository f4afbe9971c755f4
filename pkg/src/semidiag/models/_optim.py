"""Quasi-Newton maximisation with a Newton polish to a tight gradient."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

GRAD_TOL = 1e-6


@dataclass
class MaxResult:
    x: np.ndarray
    value: float
    gradient: np.ndarray
    hessian: np.ndarray | None
    iterations: int
    converged: bool
    at_bound: np.ndarray


def fd_hessian(grad: Callable[[np.ndarray], np.ndarray], x: np.ndarray) -> np.ndarray:
    """Central-difference Hessian of an analytic gradient, symmetrised."""
    k = x.size
    hess = np.empty((k, k))
    for j in range(k):
        h = 1e-5 * max(1.0, abs(x[j]))
        up, down = x.copy(), x.copy()
        up[j] += h
        down[j] -= h
        hess[:, j] = (grad(up) - grad(down)) / (2 * h)
    return 0.5 * (hess + hess.T)


def _active(x, g, lower, upper):
    """Coordinates pinned at a bound with the gradient pushing outward."""
    return ((x <= lower) & (g < 0)) | ((x >= upper) & (g > 0))


def maximize(fun_grad: Callable[[np.ndarray], tuple[float, np.ndarray]], x0: np.ndarray,
             bounds: Sequence[tuple[float, float]] | None = None,
             gtol: float = GRAD_TOL, max_newton: int = 50, scale: float = 1.0) -> MaxResult:
    """Maximise ``fun`` given ``fun_grad(x) -> (fun, grad)``, optionally in a box.

    L-BFGS-B on ``fun / scale`` gets close, then damped Newton steps on a
    finite-difference Hessian (restricted to coordinates not pinned at a
    bound) drive the projected gradient sup-norm below ``gtol``.
    """
    x0 = np.asarray(x0, dtype=float)
    if bounds is None:
        lower, upper = np.full(x0.size, -np.inf), np.full(x0.size, np.inf)
    else:
        lower, upper = (np.array(b, dtype=float) for b in zip(*bounds))

    def neg(x):
        f, g = fun_grad(x)
        if not np.isfinite(f):
            return np.inf, np.zeros_like(x)
        return -f / scale, -g / scale

    res = optimize.minimize(neg, np.clip(x0, lower, upper), jac=True, method="L-BFGS-B",
                            bounds=list(zip(lower, upper)),
                            options={"maxiter": 5000, "gtol": 1e-12, "ftol": 1e-15})
    x = np.clip(res.x, lower, upper)
    f, g = fun_grad(x)
    iterations = int(res.nit)
    grad = lambda z: fun_grad(z)[1]
    for _ in range(max_newton):
        pinned = _active(x, g, lower, upper)
        free = ~pinned
        if np.max(np.abs(g[free]), initial=0.0) <= gtol:
            break
        hess = fd_hessian(grad, x)[np.ix_(free, free)]
        step = np.zeros_like(x)
        try:
            step[free] = np.linalg.solve(hess, -g[free])
        except np.linalg.LinAlgError:
            break
        if g @ step <= 0:
            # Not an ascent direction; fall back to a scaled gradient step.
            step[free] = g[free] / max(np.max(np.abs(hess)), 1.0)
        t = 1.0
        while t > 1e-10:
            trial = np.clip(x + t * step, lower, upper)
            f_new, g_new = fun_grad(trial)
            if np.isfinite(f_new) and f_new >= f - 1e-12 * abs(f):
                break
            t *= 0.5
        else:
            break
        x, f, g = trial, f_new, g_new
        iterations += 1
    pinned = _active(x, g, lower, upper)
    hess = fd_hessian(grad, x)
    converged = bool(np.max(np.abs(g[~pinned]), initial=0.0) <= gtol)
    return MaxResult(x, float(f), g, hess, iterations, converged, pinned)


def standard_errors(hessian: np.ndarray | None) -> np.ndarray | None:
    if hessian is None:
        return None
    try:
        cov = np.linalg.inv(-hessian)
    except np.linalg.LinAlgError:
        return None
    diag = np.diag(cov)
    if np.any(diag < 0):
        return None
    return np.sqrt(diag)
