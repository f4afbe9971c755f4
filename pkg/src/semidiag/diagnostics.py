"""QQ data, uniformity statistics and deterministic SVG rendering."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .special import normal_quantile


@dataclass(frozen=True)
class QQData:
    theoretical: np.ndarray
    sample: np.ndarray
    scale_label: str  # "uniform" or "normal"

    def __len__(self):
        return self.sample.size

    def to_csv(self) -> str:
        lines = ["theoretical,sample"]
        lines += [f"{t!r},{s!r}" for t, s in zip(self.theoretical.tolist(), self.sample.tolist())]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class UniformityReport:
    ks_statistic: float
    ks_pvalue_asymptotic: float
    n: int
    mean: float
    sd: float
    # Parameters were estimated before computing the residuals, so the
    # Kolmogorov p-value is only a nominal reference.
    pvalue_is_approximate: bool = True

    def to_text(self) -> str:
        rows = [
            ("n", self.n),
            ("ks_statistic", repr(self.ks_statistic)),
            ("ks_pvalue_asymptotic", repr(self.ks_pvalue_asymptotic)),
            ("mean", repr(self.mean)),
            ("sd", repr(self.sd)),
            ("pvalue_is_approximate", str(self.pvalue_is_approximate).lower()),
        ]
        return "".join(f"{k}={v}\n" for k, v in rows)


def plotting_positions(n: int) -> np.ndarray:
    return (np.arange(1, n + 1) - 0.5) / n


def qq_against_uniform(residuals) -> QQData:
    r = np.asarray(residuals, dtype=float).ravel()
    if r.size < 2:
        raise DomainError("QQ data needs at least two residuals")
    return QQData(plotting_positions(r.size), np.sort(r), "uniform")


def qq_against_normal(transformed) -> QQData:
    z = np.asarray(transformed, dtype=float).ravel()
    if z.size < 2:
        raise DomainError("QQ data needs at least two residuals")
    return QQData(normal_quantile(plotting_positions(z.size)), np.sort(z), "normal")


def kolmogorov_sf(t: float, tol: float = 1e-12) -> float:
    """P(sup |Brownian bridge| > t) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 t^2)."""
    if t <= 0:
        return 1.0
    total = 0.0
    k = 1
    while True:
        term = 2.0 * math.exp(-2.0 * k * k * t * t)
        total += term if k % 2 else -term
        if term < tol:
            break
        k += 1
    return min(max(total, 0.0), 1.0)


def ks_statistic(residuals) -> float:
    r = np.sort(np.asarray(residuals, dtype=float).ravel())
    n = r.size
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - r), np.max(r - (i - 1) / n)))


def ks_uniform(residuals) -> UniformityReport:
    """One-sample Kolmogorov-Smirnov distance to Uniform(0, 1)."""
    r = np.asarray(residuals, dtype=float).ravel()
    if r.size == 0:
        raise DomainError("KS statistic needs at least one value")
    if np.any((r < 0) | (r > 1)) or np.any(np.isnan(r)):
        raise DomainError("residuals must lie in [0, 1]")
    d = ks_statistic(r)
    return UniformityReport(
        ks_statistic=d,
        ks_pvalue_asymptotic=kolmogorov_sf(math.sqrt(r.size) * d),
        n=int(r.size),
        mean=float(np.mean(r)),
        sd=float(np.std(r, ddof=1)) if r.size > 1 else 0.0,
    )


def histogram_table(values, bins: int = 20) -> str:
    """Counts of values in equal-width bins over [0, 1] as CSV."""
    edges = np.linspace(0.0, 1.0, bins + 1)
    counts, _ = np.histogram(np.clip(np.asarray(values, dtype=float), 0.0, 1.0), bins=edges)
    lines = ["bin_lower,bin_upper,count"]
    lines += [f"{lo:.2f},{hi:.2f},{c}" for lo, hi, c in zip(edges[:-1], edges[1:], counts)]
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------ #
# SVG
# ------------------------------------------------------------------ #

SIZE = 600
MARGIN = 70

_AXIS_LABELS = {
    "uniform": ("Uniform quantiles", "Sample quantiles"),
    "normal": ("Standard normal quantiles", "Sample quantiles"),
}


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def render_qq_svg(qq: QQData, title: str) -> str:
    """Render a QQ plot as an SVG 1.1 document on a fixed 600x600 canvas.

    The output depends only on the input values, so identical data gives
    byte-identical documents.
    """
    xs, ys = np.asarray(qq.theoretical, dtype=float), np.asarray(qq.sample, dtype=float)
    finite = np.concatenate([xs[np.isfinite(xs)], ys[np.isfinite(ys)]])
    if qq.scale_label == "uniform":
        lo, hi = 0.0, 1.0
    else:
        lo, hi = float(finite.min()), float(finite.max())
        if hi - lo < 1e-9:
            lo, hi = lo - 1.0, hi + 1.0
    pad = 0.02 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    span = SIZE - 2 * MARGIN

    def px(v):
        return MARGIN + (v - lo) / (hi - lo) * span

    def py(v):
        return SIZE - MARGIN - (v - lo) / (hi - lo) * span

    xlabel, ylabel = _AXIS_LABELS.get(qq.scale_label, ("Theoretical", "Sample"))
    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">',
        f'<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="#ffffff"/>',
        f'<text x="{SIZE // 2}" y="30" text-anchor="middle" font-family="sans-serif" '
        f'font-size="16">{_escape(title)}</text>',
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{span}" height="{span}" '
        'fill="none" stroke="#000000" stroke-width="1"/>',
        f'<line class="reference" x1="{_fmt(px(lo))}" y1="{_fmt(py(lo))}" '
        f'x2="{_fmt(px(hi))}" y2="{_fmt(py(hi))}" stroke="#cc0000" stroke-width="1.5"/>',
    ]
    for tick in np.linspace(lo + pad, hi - pad, 5):
        out.append(f'<text x="{_fmt(px(tick))}" y="{SIZE - MARGIN + 18}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="11">{tick:.2f}</text>')
        out.append(f'<text x="{MARGIN - 8}" y="{_fmt(py(tick) + 4)}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="11">{tick:.2f}</text>')
    out.append(f'<text x="{SIZE // 2}" y="{SIZE - 20}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="13">{xlabel}</text>')
    out.append(f'<text x="20" y="{SIZE // 2}" text-anchor="middle" font-family="sans-serif" '
               f'font-size="13" transform="rotate(-90 20 {SIZE // 2})">{ylabel}</text>')
    out.append('<g fill="#1f4e9c" fill-opacity="0.6">')
    for x, y in zip(xs.tolist(), ys.tolist()):
        cx = min(max(px(x), MARGIN), SIZE - MARGIN) if math.isfinite(x) else MARGIN
        cy = min(max(py(y), MARGIN), SIZE - MARGIN) if math.isfinite(y) else MARGIN
        out.append(f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="2"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
