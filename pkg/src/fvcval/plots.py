"""Graphical metric outputs: Tippett, DET, ECE, and accuracy-precision plots.

Every plot is emitted twice: as a CSV data file (the source of truth, full
float precision) and as a self-contained SVG rendered from exactly the data
in that file. Rendering is deterministic, so re-rendering from a parsed data
file reproduces the image byte for byte.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from statistics import NormalDist

import numpy as np

from .calibration import LRSet
from .dataset import format_float
from .metrics import EcePoint, MetricsReport, rocch_points

STYLES = ("solid", "dashed", "dotted")

_CANVAS_W = 800
_CANVAS_H = 600
_MARGIN_L = 78
_MARGIN_R = 24
_MARGIN_T = 46
_MARGIN_B = 58

_DASH = {"solid": None, "dashed": "8,5", "dotted": "2,4"}
_PALETTE = ("#1f6fb4", "#d03a2f", "#2e8b57", "#8a2be2", "#b8860b", "#3b3b3b")

_DET_TICK_PERCENTS = (0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 40.0)
_DET_P_LO = 5e-4
_DET_P_HI = 0.5

_probit = NormalDist().inv_cdf


@dataclass(frozen=True)
class CurveSeries:
    """A named polyline with a draw style; x must never decrease."""

    name: str
    points: tuple[tuple[float, float], ...]
    style: str = "solid"

    def __post_init__(self) -> None:
        if self.style not in STYLES:
            raise ValueError(f"style must be one of {STYLES}, got {self.style!r}")
        if not self.points:
            raise ValueError(f"series {self.name!r} is empty")
        xs = [p[0] for p in self.points]
        ys = [p[1] for p in self.points]
        if not all(np.isfinite(xs)) or not all(np.isfinite(ys)):
            raise ValueError(f"series {self.name!r} contains non-finite coordinates")
        if any(b < a for a, b in zip(xs, xs[1:])):
            raise ValueError(f"series {self.name!r} has decreasing x coordinates")

    def xs(self) -> np.ndarray:
        return np.array([p[0] for p in self.points], dtype=np.float64)

    def ys(self) -> np.ndarray:
        return np.array([p[1] for p in self.points], dtype=np.float64)


def _rising_steps(values: np.ndarray) -> tuple[tuple[float, float], ...]:
    """Empirical cumulative proportion of values <= x, as step corners."""
    vals = np.sort(np.asarray(values, dtype=np.float64))
    uniq, counts = np.unique(vals, return_counts=True)
    cum = np.cumsum(counts) / vals.size
    pts: list[tuple[float, float]] = []
    prev = 0.0
    for v, c in zip(uniq, cum):
        pts.append((float(v), prev))
        pts.append((float(v), float(c)))
        prev = float(c)
    return tuple(pts)


def _falling_steps(values: np.ndarray) -> tuple[tuple[float, float], ...]:
    """Empirical proportion of values > x, as step corners."""
    vals = np.sort(np.asarray(values, dtype=np.float64))
    uniq, counts = np.unique(vals, return_counts=True)
    surv = 1.0 - np.cumsum(counts) / vals.size
    pts: list[tuple[float, float]] = []
    prev = 1.0
    for v, s in zip(uniq, surv):
        pts.append((float(v), prev))
        pts.append((float(v), float(s)))
        prev = float(s)
    return tuple(pts)


def _shift(points: tuple[tuple[float, float], ...], dx: float) -> tuple[tuple[float, float], ...]:
    return tuple((x + dx, y) for x, y in points)


def tippett_data(lrs: LRSet, ci95: float) -> list[CurveSeries]:
    """Tippett curves with precision bands.

    The rising solid curve is the cumulative proportion of same-speaker
    log10 LRs at or below x; the falling solid curve is the proportion of
    different-speakers log10 LRs above x. Each solid curve carries two dashed
    copies shifted horizontally by -ci95 and +ci95 as its 95% interval band.
    """
    if ci95 < 0:
        raise ValueError(f"ci95 must be >= 0, got {ci95}")
    ss = np.log10(lrs.ss_lrs())
    ds = np.log10(lrs.ds_lrs())
    if ss.size == 0 or ds.size == 0:
        raise ValueError(f"Tippett curves need both classes, got {ss.size} ss and {ds.size} ds LRs")
    ss_steps = _rising_steps(ss)
    ds_steps = _falling_steps(ds)
    return [
        CurveSeries("ss", ss_steps, "solid"),
        CurveSeries("ds", ds_steps, "solid"),
        CurveSeries("ss_ci_minus", _shift(ss_steps, -ci95), "dashed"),
        CurveSeries("ss_ci_plus", _shift(ss_steps, ci95), "dashed"),
        CurveSeries("ds_ci_minus", _shift(ds_steps, -ci95), "dashed"),
        CurveSeries("ds_ci_plus", _shift(ds_steps, ci95), "dashed"),
    ]


def det_data(lrs: LRSet) -> CurveSeries:
    """ROC convex hull vertices as raw (P_fa, P_miss) pairs.

    The probit warping of both axes happens at render time only; the data
    series carries raw probabilities.
    """
    hull = rocch_points(np.log10(lrs.ss_lrs()), np.log10(lrs.ds_lrs()))
    return CurveSeries("rocch", tuple((float(x), float(y)) for x, y in hull), "solid")


def write_series_csv(series: list[CurveSeries], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["series", "style", "x", "y"])
        for s in series:
            for x, y in s.points:
                writer.writerow([s.name, s.style, format_float(x), format_float(y)])


def read_series_csv(path: str | Path) -> list[CurveSeries]:
    path = Path(path)
    order: list[str] = []
    styles: dict[str, str] = {}
    pts: dict[str, list[tuple[float, float]]] = {}
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["series", "style", "x", "y"]:
            raise ValueError(f"{path}: unexpected series file header {header}")
        for name, style, x, y in reader:
            if name not in styles:
                order.append(name)
                styles[name] = style
                pts[name] = []
            pts[name].append((float(x), float(y)))
    return [CurveSeries(name, tuple(pts[name]), styles[name]) for name in order]


def write_ece_csv(points: list[EcePoint], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["prior_log10_odds", "ece_actual", "ece_pav", "ece_neutral"])
        for p in points:
            writer.writerow(
                [format_float(p.prior_log10_odds), format_float(p.ece_actual), format_float(p.ece_pav), format_float(p.ece_neutral)]
            )


def read_ece_csv(path: str | Path) -> list[EcePoint]:
    path = Path(path)
    out: list[EcePoint] = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["prior_log10_odds", "ece_actual", "ece_pav", "ece_neutral"]:
            raise ValueError(f"{path}: unexpected ECE file header {header}")
        for prior, actual, pav, neutral in reader:
            out.append(EcePoint(float(prior), float(actual), float(pav), float(neutral)))
    return out


# ---------------------------------------------------------------------------
# SVG rendering


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10.0 ** np.floor(np.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = np.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(float(0.0 if abs(t) < 1e-12 else t))
        t += step
    return ticks


def _fmt_tick(v: float) -> str:
    if v == int(v) and abs(v) < 1e6:
        return str(int(v))
    return f"{v:g}"


class _Frame:
    """Maps data coordinates into the fixed 800x600 SVG canvas."""

    def __init__(self, x_lo: float, x_hi: float, y_lo: float, y_hi: float):
        if x_hi <= x_lo:
            x_hi = x_lo + 1.0
        if y_hi <= y_lo:
            y_hi = y_lo + 1.0
        self.x_lo, self.x_hi = x_lo, x_hi
        self.y_lo, self.y_hi = y_lo, y_hi
        self.left = _MARGIN_L
        self.right = _CANVAS_W - _MARGIN_R
        self.top = _MARGIN_T
        self.bottom = _CANVAS_H - _MARGIN_B

    def px(self, x: float) -> float:
        return self.left + (x - self.x_lo) / (self.x_hi - self.x_lo) * (self.right - self.left)

    def py(self, y: float) -> float:
        return self.bottom - (y - self.y_lo) / (self.y_hi - self.y_lo) * (self.bottom - self.top)


def _svg_open(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_CANVAS_W}" height="{_CANVAS_H}" '
        f'viewBox="0 0 {_CANVAS_W} {_CANVAS_H}" font-family="Helvetica, Arial, sans-serif">',
        f'<rect x="0" y="0" width="{_CANVAS_W}" height="{_CANVAS_H}" fill="white"/>',
        f'<text x="{_CANVAS_W / 2:.2f}" y="24" font-size="16" text-anchor="middle">{_esc(title)}</text>',
    ]


def _axes(frame: _Frame, x_label: str, y_label: str, x_ticks: list[tuple[float, str]], y_ticks: list[tuple[float, str]]) -> list[str]:
    parts = [
        f'<rect x="{frame.left}" y="{frame.top}" width="{frame.right - frame.left}" '
        f'height="{frame.bottom - frame.top}" fill="none" stroke="black" stroke-width="1"/>'
    ]
    for xv, label in x_ticks:
        px = frame.px(xv)
        parts.append(f'<line x1="{px:.2f}" y1="{frame.bottom}" x2="{px:.2f}" y2="{frame.bottom + 5}" stroke="black"/>')
        parts.append(f'<text x="{px:.2f}" y="{frame.bottom + 19}" font-size="11" text-anchor="middle">{_esc(label)}</text>')
    for yv, label in y_ticks:
        py = frame.py(yv)
        parts.append(f'<line x1="{frame.left - 5}" y1="{py:.2f}" x2="{frame.left}" y2="{py:.2f}" stroke="black"/>')
        parts.append(f'<text x="{frame.left - 8}" y="{py + 4:.2f}" font-size="11" text-anchor="end">{_esc(label)}</text>')
    parts.append(
        f'<text x="{(frame.left + frame.right) / 2:.2f}" y="{_CANVAS_H - 16}" font-size="13" text-anchor="middle">{_esc(x_label)}</text>'
    )
    parts.append(
        f'<text x="20" y="{(frame.top + frame.bottom) / 2:.2f}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 20 {(frame.top + frame.bottom) / 2:.2f})">{_esc(y_label)}</text>'
    )
    return parts


def _polyline(points_px: list[tuple[float, float]], color: str, style: str) -> str:
    coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in points_px)
    dash = _DASH[style]
    dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
    return f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"{dash_attr}/>'


def _legend(entries: list[tuple[str, str, str]], frame: _Frame) -> list[str]:
    parts = []
    x0 = frame.right - 170
    y = frame.top + 16
    for name, color, style in entries:
        dash = _DASH[style]
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        parts.append(f'<line x1="{x0}" y1="{y - 4}" x2="{x0 + 28}" y2="{y - 4}" stroke="{color}" stroke-width="1.5"{dash_attr}/>')
        parts.append(f'<text x="{x0 + 34}" y="{y}" font-size="11">{_esc(name)}</text>')
        y += 16
    return parts


def _series_color(name: str, base_order: list[str]) -> str:
    base = name.split("_ci_")[0]
    if base not in base_order:
        base_order.append(base)
    return _PALETTE[base_order.index(base) % len(_PALETTE)]


def _render_linear(series: list[CurveSeries], title: str, x_label: str, y_label: str, svg_path: Path, y_floor: float | None = None) -> None:
    xs = np.concatenate([s.xs() for s in series])
    ys = np.concatenate([s.ys() for s in series])
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo, y_hi = float(ys.min()), float(ys.max())
    if y_floor is not None:
        y_lo = min(y_lo, y_floor)
    pad_x = 0.05 * (x_hi - x_lo or 1.0)
    pad_y = 0.05 * (y_hi - y_lo or 1.0)
    frame = _Frame(x_lo - pad_x, x_hi + pad_x, y_lo - pad_y, y_hi + pad_y)
    x_ticks = [(t, _fmt_tick(t)) for t in _nice_ticks(frame.x_lo, frame.x_hi)]
    y_ticks = [(t, _fmt_tick(t)) for t in _nice_ticks(frame.y_lo, frame.y_hi)]

    parts = _svg_open(title)
    parts += _axes(frame, x_label, y_label, x_ticks, y_ticks)
    base_order: list[str] = []
    legend = []
    for s in series:
        color = _series_color(s.name, base_order)
        parts.append(_polyline([(frame.px(x), frame.py(y)) for x, y in s.points], color, s.style))
        legend.append((s.name, color, s.style))
    parts += _legend(legend, frame)
    parts.append("</svg>")
    Path(svg_path).write_text("\n".join(parts) + "\n", encoding="utf-8")


def tippett_render(series: list[CurveSeries], svg_path: str | Path, data_path: str | Path, title: str = "Tippett plot") -> None:
    write_series_csv(series, data_path)
    _render_linear(series, title, "log10 likelihood ratio", "cumulative proportion", Path(svg_path))


def det_render(series: CurveSeries, svg_path: str | Path, data_path: str | Path, title: str = "DET plot") -> None:
    """Render the hull on probit-warped axes; the data file keeps raw values."""
    write_series_csv([series], data_path)
    lo, hi = _probit(_DET_P_LO), _probit(_DET_P_HI)
    frame = _Frame(lo, hi, lo, hi)
    ticks = [(_probit(p / 100.0), _fmt_tick(p)) for p in _DET_TICK_PERCENTS]
    parts = _svg_open(title)
    parts += _axes(frame, "false alarm probability (%)", "miss probability (%)", ticks, ticks)

    def warp(p: float) -> float:
        return _probit(min(max(p, _DET_P_LO), _DET_P_HI))

    pts = [(frame.px(warp(x)), frame.py(warp(y))) for x, y in series.points]
    parts.append(_polyline(pts, _PALETTE[0], series.style))
    parts.append("</svg>")
    Path(svg_path).write_text("\n".join(parts) + "\n", encoding="utf-8")


def ece_render(points: list[EcePoint], svg_path: str | Path, data_path: str | Path, title: str = "ECE plot") -> None:
    """Render the three cross-entropy curves; the data file mirrors the points."""
    if not points:
        raise ValueError("empty ECE curve")
    write_ece_csv(points, data_path)
    grid = tuple(p.prior_log10_odds for p in points)
    series = [
        CurveSeries("actual", tuple(zip(grid, (p.ece_actual for p in points))), "solid"),
        CurveSeries("pav", tuple(zip(grid, (p.ece_pav for p in points))), "dashed"),
        CurveSeries("neutral", tuple(zip(grid, (p.ece_neutral for p in points))), "dotted"),
    ]
    _render_linear(series, title, "prior log10 odds", "empirical cross-entropy (bits)", Path(svg_path), y_floor=0.0)


def write_accuracy_precision_csv(reports: list[tuple[str, MetricsReport]], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["system", "cllr_mean", "ci95", "cllr_pooled"])
        for name, rep in reports:
            writer.writerow([name, format_float(rep.cllr_mean), format_float(rep.ci95), format_float(rep.cllr_pooled)])


def read_accuracy_precision_csv(path: str | Path) -> list[tuple[str, float, float, float]]:
    path = Path(path)
    out = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["system", "cllr_mean", "ci95", "cllr_pooled"]:
            raise ValueError(f"{path}: unexpected header {header}")
        for name, mean, ci, pooled in reader:
            out.append((name, float(mean), float(ci), float(pooled)))
    return out


def accuracy_precision_render(
    reports: list[tuple[str, MetricsReport]],
    svg_path: str | Path,
    data_path: str | Path,
    title: str = "Accuracy and precision",
) -> None:
    """One marker per system at Cllr_mean with a vertical bar of half-length
    ci95, annotated with Cllr_pooled."""
    if not reports:
        raise ValueError("no reports to plot")
    write_accuracy_precision_csv(reports, data_path)
    n = len(reports)
    y_vals = [r.cllr_mean for _, r in reports] + [r.cllr_mean + r.ci95 for _, r in reports] + [max(0.0, r.cllr_mean - r.ci95) for _, r in reports]
    y_lo = 0.0
    y_hi = max(y_vals) * 1.15 or 1.0
    frame = _Frame(0.0, n + 1.0, y_lo, y_hi)
    x_ticks = [(i + 1.0, name) for i, (name, _) in enumerate(reports)]
    y_ticks = [(t, _fmt_tick(t)) for t in _nice_ticks(y_lo, y_hi)]
    parts = _svg_open(title)
    parts += _axes(frame, "system", "Cllr (mean, with 95% CI bar)", x_ticks, y_ticks)
    for i, (name, rep) in enumerate(reports):
        x = i + 1.0
        color = _PALETTE[i % len(_PALETTE)]
        px = frame.px(x)
        top = frame.py(rep.cllr_mean + rep.ci95)
        bot = frame.py(max(0.0, rep.cllr_mean - rep.ci95))
        mid = frame.py(rep.cllr_mean)
        parts.append(f'<line x1="{px:.2f}" y1="{top:.2f}" x2="{px:.2f}" y2="{bot:.2f}" stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<line x1="{px - 6:.2f}" y1="{top:.2f}" x2="{px + 6:.2f}" y2="{top:.2f}" stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<line x1="{px - 6:.2f}" y1="{bot:.2f}" x2="{px + 6:.2f}" y2="{bot:.2f}" stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<circle cx="{px:.2f}" cy="{mid:.2f}" r="4" fill="{color}"/>')
        parts.append(
            f'<text x="{px + 10:.2f}" y="{mid - 8:.2f}" font-size="11">pooled {rep.cllr_pooled:.3f}</text>'
        )
    parts.append("</svg>")
    Path(svg_path).write_text("\n".join(parts) + "\n", encoding="utf-8")
