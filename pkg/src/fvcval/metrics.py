"""Numerical validation metrics over per-trial likelihood ratios.

The headline number is the log-likelihood-ratio cost

    Cllr = 1/2 [ mean_i log2(1 + 1/LR_ss_i) + mean_j log2(1 + LR_ds_j) ]

which is 1.0 for a system that always answers LR = 1 and approaches 0 for
perfect evidence. Cllr_min is the same cost after the PAV-optimal monotone
recalibration (discrimination loss); Cllr_cal = Cllr - Cllr_min is the
calibration loss. Accuracy and precision variants (Cllr_mean, the 95% CI) are
computed over groups of repeated comparisons: one group per (questioned
recording, known speaker) pair. EER comes from the ROC convex hull, and the
empirical cross-entropy curve generalizes Cllr across prior odds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calibration import LRSet, TrialLR, isotonic_posteriors, pav_llr
from .dataset import Manifest
from .errors import NumericError, UndefinedPrecisionError
from .scoring import TrialScoreSet

CI95_MULTIPLIER = 1.96

DEFAULT_ECE_GRID_LO = -2.5
DEFAULT_ECE_GRID_HI = 2.5
DEFAULT_ECE_GRID_POINTS = 101


@dataclass(frozen=True)
class LrGroup:
    """log10 LRs of one questioned recording against one known speaker."""

    questioned_id: str
    known_speaker: str
    label: str
    log10_lrs: tuple[float, ...]


@dataclass(frozen=True)
class EcePoint:
    """Empirical cross-entropy at one prior, for three LR assignments.

    The PAV curve lower-bounds the actual curve wherever the actual LRs stay
    within the PAV fit's regularized range; at extreme priors a sharply
    separated system's clipped LRs can dip below it, so the relation is a
    diagnostic, not a constructor invariant.
    """

    prior_log10_odds: float
    ece_actual: float
    ece_pav: float
    ece_neutral: float


@dataclass(frozen=True)
class MetricsReport:
    """One row of the validation summary."""

    cllr_pooled: float
    cllr_mean: float
    ci95: float
    cllr_min: float
    cllr_cal: float
    eer: float


def _cllr_from_values(ss_lrs: np.ndarray, ds_lrs: np.ndarray) -> float:
    if ss_lrs.size == 0 or ds_lrs.size == 0:
        raise ValueError(f"Cllr needs both classes, got {ss_lrs.size} ss and {ds_lrs.size} ds LRs")
    ss_term = np.log2(1.0 + 1.0 / ss_lrs).mean()
    ds_term = np.log2(1.0 + ds_lrs).mean()
    return float(0.5 * (ss_term + ds_term))


def cllr(lrs: LRSet) -> float:
    """Pooled log-likelihood-ratio cost over all trials."""
    return _cllr_from_values(lrs.ss_lrs(), lrs.ds_lrs())


def cllr_min(scores: TrialScoreSet) -> float:
    """Discrimination loss: Cllr after PAV-optimal recalibration of the scores."""
    return cllr(pav_llr(scores))


def group_lrs(lrs: LRSet, manifest: Manifest) -> list[LrGroup]:
    """Group log10 LRs by (questioned recording, known speaker).

    Each group collects the repeated comparisons of one questioned recording
    against every known-condition recording of one speaker. Groups come out
    sorted by (questioned_id, known_speaker).
    """
    grouped: dict[tuple[str, str], list[float]] = {}
    labels: dict[tuple[str, str], str] = {}
    for t in lrs.trials:
        if t.questioned_id not in manifest or t.known_id not in manifest:
            raise ValueError(f"trial {t.questioned_id}/{t.known_id} does not resolve in the manifest")
        key = (t.questioned_id, t.known_speaker)
        grouped.setdefault(key, []).append(t.log10_lr)
        labels[key] = t.label
    return [
        LrGroup(questioned_id=q, known_speaker=spk, label=labels[(q, spk)], log10_lrs=tuple(vals))
        for (q, spk), vals in sorted(grouped.items())
    ]


def cllr_mean(groups: list[LrGroup], mean_domain: str = "log10") -> float:
    """Cllr over one LR per group.

    ``mean_domain="log10"`` (default) takes group means of log10 LR, i.e. the
    geometric mean LR; ``"linear"`` averages the LRs directly.
    """
    if mean_domain not in ("log10", "linear"):
        raise ValueError(f"mean_domain must be 'log10' or 'linear', got {mean_domain!r}")
    ss, ds = [], []
    for g in groups:
        vals = np.array(g.log10_lrs, dtype=np.float64)
        mean_lr = 10.0 ** vals.mean() if mean_domain == "log10" else (10.0**vals).mean()
        (ss if g.label == "ss" else ds).append(mean_lr)
    return _cllr_from_values(np.array(ss, dtype=np.float64), np.array(ds, dtype=np.float64))


def ci95(groups: list[LrGroup]) -> float:
    """Parametric 95% interval half-width of within-group log10 LR variability.

    Pooled within-group variance with denominator N - G over the groups that
    have at least two members (N members in such groups, G such groups),
    scaled by 1.96. Reported in plus-or-minus orders of magnitude.
    """
    ss_dev = 0.0
    n = 0
    g = 0
    for grp in groups:
        if len(grp.log10_lrs) < 2:
            continue
        vals = np.array(grp.log10_lrs, dtype=np.float64)
        ss_dev += float(((vals - vals.mean()) ** 2).sum())
        n += vals.size
        g += 1
    if g == 0:
        raise UndefinedPrecisionError("no group has >= 2 members; precision is undefined")
    return CI95_MULTIPLIER * float(np.sqrt(ss_dev / (n - g)))


def rocch_points(ss_scores: np.ndarray, ds_scores: np.ndarray) -> np.ndarray:
    """Vertices of the ROC convex hull as (P_fa, P_miss) rows, P_fa ascending.

    Operating points sweep a threshold t over all scores, classifying
    same-speaker when score > t (ties fall on the miss side); the hull is the
    lower convex envelope of those points and is monotone non-increasing.
    """
    ss = np.sort(np.asarray(ss_scores, dtype=np.float64))
    ds = np.sort(np.asarray(ds_scores, dtype=np.float64))
    if ss.size == 0 or ds.size == 0:
        raise ValueError(f"ROC needs both classes, got {ss.size} ss and {ds.size} ds scores")
    thresholds = np.unique(np.concatenate((ss, ds)))
    p_miss = np.searchsorted(ss, thresholds, side="right") / ss.size
    p_fa = 1.0 - np.searchsorted(ds, thresholds, side="right") / ds.size
    points = np.column_stack((np.concatenate(([1.0], p_fa)), np.concatenate(([0.0], p_miss))))

    # only the lowest miss rate per distinct P_fa can sit on the lower hull
    order = np.lexsort((points[:, 1], points[:, 0]))
    points = points[order]
    first_per_x = np.concatenate(([True], np.diff(points[:, 0]) > 0.0))
    points = points[first_per_x]

    hull: list[np.ndarray] = []
    for p in points:
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
            if cross <= 0.0:
                hull.pop()
            else:
                break
        hull.append(p)
    return np.vstack(hull)


def rocch_eer(ss_scores: np.ndarray, ds_scores: np.ndarray) -> float:
    """Equal error rate read off the ROC convex hull.

    Returns the ordinate where the hull crosses P_fa = P_miss, linearly
    interpolated along the crossing segment.
    """
    hull = rocch_points(ss_scores, ds_scores)
    diffs = hull[:, 1] - hull[:, 0]
    for i in range(len(hull)):
        if diffs[i] == 0.0:
            return float(hull[i, 0])
        if i + 1 < len(hull) and diffs[i] > 0.0 > diffs[i + 1]:
            frac = diffs[i] / (diffs[i] - diffs[i + 1])
            return float(hull[i, 0] + frac * (hull[i + 1, 0] - hull[i, 0]))
    raise NumericError("ROC convex hull does not cross the equal-error diagonal")


def eer_rocch(lrs: LRSet) -> float:
    """EER of the LR set, thresholding on log10 LR."""
    return rocch_eer(np.log10(lrs.ss_lrs()), np.log10(lrs.ds_lrs()))


def default_prior_grid() -> np.ndarray:
    """Symmetric prior log10 odds grid including 0."""
    return np.linspace(DEFAULT_ECE_GRID_LO, DEFAULT_ECE_GRID_HI, DEFAULT_ECE_GRID_POINTS)


def _ece_value(ss_lrs: np.ndarray, ds_lrs: np.ndarray, prior_log10_odds: float) -> float:
    odds = 10.0**prior_log10_odds
    p_ss = odds / (1.0 + odds)
    p_ds = 1.0 - p_ss
    ss_term = np.log2(1.0 + 1.0 / (ss_lrs * odds)).mean()
    ds_term = np.log2(1.0 + ds_lrs * odds).mean()
    return float(p_ss * ss_term + p_ds * ds_term)


def ece_curve(lrs: LRSet, prior_grid: np.ndarray | list[float], pav_lrs: LRSet | None = None) -> list[EcePoint]:
    """Empirical cross-entropy across a grid of prior log10 odds.

    Each point carries the cross-entropy of the actual LRs, of the
    PAV-optimized LRs, and of the neutral reference that always answers
    LR = 1. ``pav_lrs`` should be the PAV LR set belonging to the same trials
    (as produced by the pipeline); without it, PAV is applied to the actual
    LR values themselves.
    """
    grid = np.asarray(prior_grid, dtype=np.float64)
    if grid.size == 0:
        raise ValueError("prior grid is empty")
    ss = lrs.ss_lrs()
    ds = lrs.ds_lrs()
    if ss.size == 0 or ds.size == 0:
        raise ValueError(f"ECE needs both classes, got {ss.size} ss and {ds.size} ds LRs")
    if pav_lrs is None:
        pav_lrs = _pav_of_lr_values(lrs)
    pav_ss = pav_lrs.ss_lrs()
    pav_ds = pav_lrs.ds_lrs()
    ones_ss = np.ones_like(ss)
    ones_ds = np.ones_like(ds)
    return [
        EcePoint(
            prior_log10_odds=float(p),
            ece_actual=_ece_value(ss, ds, float(p)),
            ece_pav=_ece_value(pav_ss, pav_ds, float(p)),
            ece_neutral=_ece_value(ones_ss, ones_ds, float(p)),
        )
        for p in grid
    ]


def _pav_of_lr_values(lrs: LRSet) -> LRSet:
    flags = np.array([t.label == "ss" for t in lrs.trials], dtype=bool)
    post = isotonic_posteriors(lrs.log10_lrs(), flags)
    eps = 1.0 / (2.0 * flags.size)
    post = np.where(post == 0.0, eps, post)
    post = np.where(post == 1.0, 1.0 - eps, post)
    prior_odds = flags.sum() / (flags.size - flags.sum())
    return LRSet(
        [
            TrialLR(
                questioned_id=t.questioned_id,
                known_id=t.known_id,
                questioned_speaker=t.questioned_speaker,
                known_speaker=t.known_speaker,
                label=t.label,
                lr=float((p / (1.0 - p)) / prior_odds),
            )
            for t, p in zip(lrs.trials, post)
        ]
    )


def summarize(scores: TrialScoreSet, lrs: LRSet, manifest: Manifest) -> MetricsReport:
    """Assemble the full metric row for one system run."""
    if len(scores.trials) != len(lrs.trials):
        raise ValueError(f"{len(scores.trials)} scores vs {len(lrs.trials)} LRs")
    pooled = cllr(lrs)
    minimum = cllr_min(scores)
    groups = group_lrs(lrs, manifest)
    return MetricsReport(
        cllr_pooled=pooled,
        cllr_mean=cllr_mean(groups),
        ci95=ci95(groups),
        cllr_min=minimum,
        cllr_cal=pooled - minimum,
        eer=eer_rocch(lrs),
    )


REPORT_FIELDS = ("cllr_pooled", "cllr_mean", "ci95", "cllr_min", "cllr_cal", "eer")


def format_report_table(rows: list[tuple[str, MetricsReport | None]]) -> str:
    """Plain-text comparison table, sorted by decreasing Cllr_pooled.

    Systems whose run failed (report None) are listed last, marked absent.
    """
    done = [(name, rep) for name, rep in rows if rep is not None]
    failed = [name for name, rep in rows if rep is None]
    done.sort(key=lambda item: -item[1].cllr_pooled)
    header = f"{'System':<10} {'Cllr_pooled':>11} {'Cllr_mean':>10} {'CI95':>8} {'Cllr_min':>9} {'Cllr_cal':>9} {'EER%':>6}"
    lines = [header, "-" * len(header)]
    for name, rep in done:
        lines.append(
            f"{name:<10} {rep.cllr_pooled:>11.3f} {rep.cllr_mean:>10.3f} {rep.ci95:>8.3f} "
            f"{rep.cllr_min:>9.3f} {rep.cllr_cal:>9.3f} {100.0 * rep.eer:>5.1f}%"
        )
    for name in failed:
        lines.append(f"{name:<10} {'absent':>11}")
    return "\n".join(lines) + "\n"
