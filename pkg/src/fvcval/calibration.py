"""Score-to-likelihood-ratio conversion.

Two routes are provided. ``loo_calibrate`` is the operational one: each
trial's score is converted to an LR as the ratio of two Gaussian kernel
density estimates, where the same-speaker density leaves out all scores
produced by the trial's speaker(s) and the different-speakers density is
built from the scores produced by the trial's questioned utterance. No trial
is ever calibrated against information from its own speakers.

``pav_llr`` is the reference optimum: a pool-adjacent-violators isotonic fit
of the labels against the scores, yielding the best monotone score-to-LR map
in hindsight. Its Cllr is the discrimination loss floor.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import format_float
from .errors import DataValidationError, DegenerateSampleError, InsufficientSupportError
from .scoring import TrialScoreSet

DENSITY_FLOOR = 1e-300
DEFAULT_LOG10_LR_CLIP = 10.0

_SQRT_2PI = float(np.sqrt(2.0 * np.pi))


@dataclass(frozen=True)
class KdeModel:
    """A Gaussian kernel density estimate over a set of support scores."""

    support: np.ndarray
    bandwidth: float

    def __post_init__(self) -> None:
        support = np.asarray(self.support, dtype=np.float64)
        object.__setattr__(self, "support", support)
        if support.size < 2:
            raise ValueError(f"KDE needs >= 2 support points, got {support.size}")
        if not np.isfinite(support).all():
            raise ValueError("KDE support contains non-finite values")
        if not (np.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise ValueError(f"bandwidth must be positive and finite, got {self.bandwidth}")


def select_bandwidth(points: np.ndarray | list[float]) -> float:
    """Silverman's rule of thumb: 0.9 * min(sigma, IQR/1.34) * n**(-1/5).

    Sigma is the population standard deviation and the IQR uses linear
    quantile interpolation. A zero spread measure is ignored in the min;
    if both are zero the sample is degenerate.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.size < 2:
        raise ValueError(f"bandwidth selection needs >= 2 points, got {pts.size}")
    sigma = float(pts.std())
    iqr = float(np.percentile(pts, 75) - np.percentile(pts, 25))
    spreads = [s for s in (sigma, iqr / 1.34) if s > 0.0]
    if not spreads:
        raise DegenerateSampleError("all points identical; no bandwidth can be selected")
    return 0.9 * min(spreads) * pts.size ** (-0.2)


def kde_density(model: KdeModel, x: float | np.ndarray) -> float | np.ndarray:
    """Evaluate the density (1/(n h)) sum phi((x - s_j)/h) at x."""
    x_arr = np.asarray(x, dtype=np.float64)
    z = (x_arr[..., np.newaxis] - model.support) / model.bandwidth
    dens = np.exp(-0.5 * z * z).sum(axis=-1) / (model.support.size * model.bandwidth * _SQRT_2PI)
    return float(dens) if np.isscalar(x) or x_arr.ndim == 0 else dens


def kde_from_points(points: np.ndarray) -> KdeModel:
    return KdeModel(support=np.asarray(points, dtype=np.float64), bandwidth=select_bandwidth(points))


@dataclass(frozen=True)
class TrialLR:
    questioned_id: str
    known_id: str
    questioned_speaker: str
    known_speaker: str
    label: str
    lr: float

    @property
    def log10_lr(self) -> float:
        return float(np.log10(self.lr))


@dataclass
class LRSet:
    """Per-trial likelihood ratios with same/different-speaker counts.

    ``metadata`` describes how the LRs were produced (calibration method,
    bandwidth summary, clip bounds) and feeds the sidecar file.
    """

    trials: list[TrialLR]
    metadata: dict | None = None

    def __post_init__(self) -> None:
        for t in self.trials:
            if not (np.isfinite(t.lr) and t.lr > 0):
                raise ValueError(f"trial {t.questioned_id}/{t.known_id}: LR must be positive and finite, got {t.lr}")

    @property
    def n_ss(self) -> int:
        return sum(1 for t in self.trials if t.label == "ss")

    @property
    def n_ds(self) -> int:
        return sum(1 for t in self.trials if t.label == "ds")

    def ss_lrs(self) -> np.ndarray:
        return np.array([t.lr for t in self.trials if t.label == "ss"], dtype=np.float64)

    def ds_lrs(self) -> np.ndarray:
        return np.array([t.lr for t in self.trials if t.label == "ds"], dtype=np.float64)

    def log10_lrs(self) -> np.ndarray:
        return np.log10(np.array([t.lr for t in self.trials], dtype=np.float64))


def _loo_supports(
    scores: TrialScoreSet, index: int, exclude_known_speaker_from_ds: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    """Support score arrays (same-speaker, different-speakers) for one trial.

    Exposed for leakage checks; ``loo_calibrate`` uses the same construction.
    """
    trials = scores.trials
    t = trials[index]
    left_out = {t.questioned_speaker, t.known_speaker}
    ss_support = np.array(
        [u.score for u in trials if u.label == "ss" and u.questioned_speaker not in left_out],
        dtype=np.float64,
    )
    ds_support = np.array(
        [
            u.score
            for u in trials
            if u.label == "ds"
            and u.questioned_id == t.questioned_id
            and (not exclude_known_speaker_from_ds or u.known_speaker not in left_out)
        ],
        dtype=np.float64,
    )
    return ss_support, ds_support


def loo_calibrate(
    scores: TrialScoreSet,
    exclude_known_speaker_from_ds: bool = True,
    log10_clip: float = DEFAULT_LOG10_LR_CLIP,
) -> LRSet:
    """Leave-one-or-two-speakers-out cross-validated KDE calibration.

    For each trial score s: the numerator density is a KDE over all
    same-speaker scores except those produced by the trial's speaker (both
    speakers, for a different-speakers trial); the denominator density is a
    KDE over the different-speakers scores produced by the trial's questioned
    utterance, excluding (by default) scores against the trial's known
    speaker. Densities are floored at 1e-300 and log10 LR is clipped to
    [-log10_clip, +log10_clip].
    """
    if not (np.isfinite(log10_clip) and log10_clip > 0):
        raise ValueError(f"log10_clip must be positive and finite, got {log10_clip}")
    trials = scores.trials
    if not trials:
        raise ValueError("empty trial score set")

    ss = [t for t in trials if t.label == "ss"]
    ss_speakers = {t.questioned_speaker for t in ss}
    if len(ss_speakers) < 2:
        raise InsufficientSupportError(
            f"leave-out calibration needs same-speaker trials from >= 2 speakers, got {len(ss_speakers)}"
        )
    ss_scores = np.array([t.score for t in ss], dtype=np.float64)
    ss_by_speaker = np.array([t.questioned_speaker for t in ss])

    ds_grouped: dict[str, list[tuple[float, str]]] = {}
    for t in trials:
        if t.label == "ds":
            ds_grouped.setdefault(t.questioned_id, []).append((t.score, t.known_speaker))
    ds_by_qid = {
        qid: (
            np.array([s for s, _ in entries], dtype=np.float64),
            np.array([spk for _, spk in entries]),
        )
        for qid, entries in ds_grouped.items()
    }

    empty = (np.empty(0, dtype=np.float64), np.empty(0, dtype=str))
    ss_bandwidths: list[float] = []
    ds_bandwidths: list[float] = []
    out: list[TrialLR] = []
    for t in trials:
        left_out = {t.questioned_speaker, t.known_speaker}
        ss_support = ss_scores[~np.isin(ss_by_speaker, sorted(left_out))]
        ds_pool, ds_speakers = ds_by_qid.get(t.questioned_id, empty)
        if exclude_known_speaker_from_ds:
            ds_support = ds_pool[~np.isin(ds_speakers, sorted(left_out))]
        else:
            ds_support = ds_pool
        if ss_support.size < 2 or ds_support.size < 2:
            raise InsufficientSupportError(
                f"trial {t.questioned_id}/{t.known_id}: exclusions leave "
                f"{ss_support.size} same-speaker and {ds_support.size} different-speakers scores"
            )
        try:
            ss_model = kde_from_points(ss_support)
            ds_model = kde_from_points(ds_support)
        except DegenerateSampleError as exc:
            raise InsufficientSupportError(f"trial {t.questioned_id}/{t.known_id}: {exc}") from None
        ss_bandwidths.append(ss_model.bandwidth)
        ds_bandwidths.append(ds_model.bandwidth)
        f_ss = max(kde_density(ss_model, t.score), DENSITY_FLOOR)
        f_ds = max(kde_density(ds_model, t.score), DENSITY_FLOOR)
        llr = float(np.clip(np.log10(f_ss) - np.log10(f_ds), -log10_clip, log10_clip))
        out.append(
            TrialLR(
                questioned_id=t.questioned_id,
                known_id=t.known_id,
                questioned_speaker=t.questioned_speaker,
                known_speaker=t.known_speaker,
                label=t.label,
                lr=10.0 ** llr,
            )
        )
    metadata = {
        "method": "leave-out-kde",
        "bandwidth_rule": "silverman",
        "ss_bandwidth_min": min(ss_bandwidths),
        "ss_bandwidth_max": max(ss_bandwidths),
        "ds_bandwidth_min": min(ds_bandwidths),
        "ds_bandwidth_max": max(ds_bandwidths),
        "log10_lr_clip": log10_clip,
        "exclude_known_speaker_from_ds_density": exclude_known_speaker_from_ds,
        "density_floor": DENSITY_FLOOR,
    }
    return LRSet(out, metadata=metadata)


LR_FILE_COLUMNS = ("questioned_id", "known_id", "label", "log10_lr")


def write_lrs_csv(lrs: LRSet, path: str | Path, metadata: dict | None = None) -> None:
    """LR file plus an optional sidecar ``<name>.meta.json`` with run settings."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(LR_FILE_COLUMNS)
        for t in lrs.trials:
            writer.writerow([t.questioned_id, t.known_id, t.label, format_float(t.log10_lr)])
    if metadata is not None:
        meta_path = path.with_name(path.stem + ".meta.json")
        meta_path.write_text(json.dumps(metadata, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_lrs_csv(path: str | Path, scores: TrialScoreSet) -> LRSet:
    """Read an LR file back; speaker identities come from the matching score set."""
    path = Path(path)
    by_pair = {(t.questioned_id, t.known_id): t for t in scores.trials}
    out: list[TrialLR] = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != LR_FILE_COLUMNS:
            raise DataValidationError(f"{path}: unexpected header {header}")
        for qid, kid, label, log10_lr in reader:
            src = by_pair.get((qid, kid))
            if src is None:
                raise DataValidationError(f"{path}: trial {qid}/{kid} not present in the score set")
            out.append(
                TrialLR(
                    questioned_id=qid,
                    known_id=kid,
                    questioned_speaker=src.questioned_speaker,
                    known_speaker=src.known_speaker,
                    label=label,
                    lr=float(10.0 ** float(log10_lr)),
                )
            )
    return LRSet(out)


def isotonic_posteriors(score_values: np.ndarray, ss_flags: np.ndarray) -> np.ndarray:
    """Pool-adjacent-violators fit of binary labels against scores.

    Returns the non-decreasing-in-score posterior for each input, in input
    order. Tied scores are pooled first so the fit is a function of the
    score. Boundary posteriors may be exactly 0 or 1; see ``pav_llr`` for the
    regularized version.
    """
    values = np.asarray(score_values, dtype=np.float64)
    flags = np.asarray(ss_flags, dtype=np.float64)
    if values.shape != flags.shape or values.ndim != 1:
        raise ValueError("scores and labels must be 1-D arrays of equal length")
    if values.size == 0:
        raise ValueError("empty score set")

    order = np.argsort(values, kind="stable")
    sorted_vals = values[order]
    sorted_flags = flags[order]

    # one block per distinct score value
    boundaries = np.flatnonzero(np.diff(sorted_vals)) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [sorted_vals.size]))
    weights = (ends - starts).astype(np.float64)
    means = np.array([sorted_flags[s:e].mean() for s, e in zip(starts, ends)])

    # pool adjacent violators, merging backwards while monotonicity fails
    block_w: list[float] = []
    block_v: list[float] = []
    block_n: list[int] = []
    for w, v, s, e in zip(weights, means, starts, ends):
        block_w.append(w)
        block_v.append(v)
        block_n.append(e - s)
        while len(block_v) > 1 and block_v[-2] > block_v[-1]:
            w2, v2, n2 = block_w.pop(), block_v.pop(), block_n.pop()
            w1, v1, n1 = block_w.pop(), block_v.pop(), block_n.pop()
            block_w.append(w1 + w2)
            block_v.append((w1 * v1 + w2 * v2) / (w1 + w2))
            block_n.append(n1 + n2)

    fitted_sorted = np.repeat(block_v, block_n)
    fitted = np.empty_like(fitted_sorted)
    fitted[order] = fitted_sorted
    return fitted


def pav_llr(scores: TrialScoreSet) -> LRSet:
    """Optimal monotone score-to-LR map via PAV, as an LRSet.

    The isotonic posterior p of each trial is converted to an LR by dividing
    the posterior odds by the empirical prior odds N_ss/N_ds. Boundary
    posteriors of exactly 0 or 1 are regularized to 1/(2N) and 1 - 1/(2N)
    with N the total trial count, which keeps every LR finite and preserves
    monotonicity (any interior posterior is at least 1/N away from 0 and 1).
    """
    trials = scores.trials
    flags = np.array([t.label == "ss" for t in trials], dtype=bool)
    n_ss = int(flags.sum())
    n_ds = int(flags.size - n_ss)
    if n_ss == 0 or n_ds == 0:
        raise ValueError(f"PAV needs both classes, got {n_ss} ss and {n_ds} ds trials")

    post = isotonic_posteriors(np.array([t.score for t in trials]), flags)
    eps = 1.0 / (2.0 * flags.size)
    post = np.where(post == 0.0, eps, post)
    post = np.where(post == 1.0, 1.0 - eps, post)

    prior_odds = n_ss / n_ds
    lrs = (post / (1.0 - post)) / prior_odds
    out = [
        TrialLR(
            questioned_id=t.questioned_id,
            known_id=t.known_id,
            questioned_speaker=t.questioned_speaker,
            known_speaker=t.known_speaker,
            label=t.label,
            lr=float(lr),
        )
        for t, lr in zip(trials, lrs)
    ]
    return LRSet(out, metadata={"method": "pav"})
