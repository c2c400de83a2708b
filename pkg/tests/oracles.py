"""Independent reference implementations used to check the package.

Everything here is deliberately written from first principles with plain
loops and stdlib math, sharing no code with the implementations under test.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def cllr_direct(ss_lrs, ds_lrs) -> float:
    """Direct summation of the log-likelihood-ratio cost."""
    ss_sum = 0.0
    for lr in ss_lrs:
        ss_sum += math.log2(1.0 + 1.0 / lr)
    ds_sum = 0.0
    for lr in ds_lrs:
        ds_sum += math.log2(1.0 + lr)
    return 0.5 * (ss_sum / len(ss_lrs) + ds_sum / len(ds_lrs))


def ece_direct(ss_lrs, ds_lrs, prior_log10_odds: float) -> float:
    odds = 10.0**prior_log10_odds
    p_ss = odds / (1.0 + odds)
    p_ds = 1.0 - p_ss
    ss_sum = sum(math.log2(1.0 + 1.0 / (lr * odds)) for lr in ss_lrs)
    ds_sum = sum(math.log2(1.0 + lr * odds) for lr in ds_lrs)
    return p_ss * ss_sum / len(ss_lrs) + p_ds * ds_sum / len(ds_lrs)


def operating_points(ss_scores, ds_scores) -> list[tuple[float, float]]:
    """(P_fa, P_miss) for every threshold, classifying positive when score > t."""
    pts = [(1.0, 0.0)]
    for t in sorted(set(list(ss_scores) + list(ds_scores))):
        p_miss = sum(1 for s in ss_scores if s <= t) / len(ss_scores)
        p_fa = sum(1 for s in ds_scores if s > t) / len(ds_scores)
        pts.append((p_fa, p_miss))
    return pts


def eer_bruteforce(ss_scores, ds_scores) -> float:
    """Exhaustive minimum over all threshold pairs with interpolation.

    Any mixture of two operating points is achievable, so the optimal equal
    error rate is the smallest diagonal crossing over all point pairs (and
    over single points already on the diagonal).
    """
    pts = operating_points(ss_scores, ds_scores)
    best = math.inf
    for (x, y) in pts:
        if x == y:
            best = min(best, x)
    for (x1, y1), (x2, y2) in itertools.combinations(pts, 2):
        d1 = y1 - x1
        d2 = y2 - x2
        if d1 == d2:
            continue
        s = d1 / (d1 - d2)
        if 0.0 <= s <= 1.0:
            best = min(best, x1 + s * (x2 - x1))
    return best


def isotonic_bruteforce(score_values, ss_flags) -> np.ndarray:
    """Best monotone-in-score fit by exhaustive partition search.

    Ties are grouped first (the fit must be a function of the score); then
    every partition of the distinct-score blocks into consecutive runs with
    non-decreasing run means is scored by weighted squared error, and the
    best fit is expanded back to input order. Exponential in the number of
    distinct scores, so only usable on tiny fixtures.
    """
    values = list(score_values)
    flags = [float(f) for f in ss_flags]
    order = sorted(range(len(values)), key=lambda i: values[i])
    distinct: list[tuple[float, list[int]]] = []
    for i in order:
        if distinct and distinct[-1][0] == values[i]:
            distinct[-1][1].append(i)
        else:
            distinct.append((values[i], [i]))

    n_blocks = len(distinct)
    best_sse = math.inf
    best_fit: list[float] | None = None
    for cuts in itertools.product([0, 1], repeat=n_blocks - 1):
        runs: list[list[int]] = [[0]]
        for b, cut in enumerate(cuts, start=1):
            if cut:
                runs.append([b])
            else:
                runs[-1].append(b)
        means = []
        ok = True
        sse = 0.0
        prev = -math.inf
        for run in runs:
            members = [i for b in run for i in distinct[b][1]]
            mean = sum(flags[i] for i in members) / len(members)
            if mean < prev:
                ok = False
                break
            prev = mean
            sse += sum((flags[i] - mean) ** 2 for i in members)
            means.append((run, mean))
        if ok and sse < best_sse - 1e-15:
            best_sse = sse
            fit = [0.0] * len(values)
            for run, mean in means:
                for b in run:
                    for i in distinct[b][1]:
                        fit[i] = mean
            best_fit = fit
    assert best_fit is not None
    return np.array(best_fit)


def gaussian_kde_direct(support, bandwidth: float, x: float) -> float:
    total = 0.0
    for s in support:
        z = (x - s) / bandwidth
        total += math.exp(-0.5 * z * z)
    return total / (len(support) * bandwidth * math.sqrt(2.0 * math.pi))


def silverman_direct(points) -> float:
    pts = sorted(points)
    n = len(pts)
    mean = sum(pts) / n
    sigma = math.sqrt(sum((p - mean) ** 2 for p in pts) / n)

    def quantile(q: float) -> float:
        pos = q * (n - 1)
        lo = int(math.floor(pos))
        hi = min(lo + 1, n - 1)
        frac = pos - lo
        return pts[lo] * (1.0 - frac) + pts[hi] * frac

    iqr = quantile(0.75) - quantile(0.25)
    spreads = [s for s in (sigma, iqr / 1.34) if s > 0.0]
    return 0.9 * min(spreads) * n ** (-0.2)


def loo_calibrate_bruteforce(trials, exclude_known_speaker_from_ds: bool = True, log10_clip: float = 10.0):
    """From-scratch leave-out KDE calibration over ScoredTrial-like records.

    Returns the per-trial log10 LR list, computed entirely with plain loops:
    the same-speaker density leaves out the trial's speaker(s); the
    different-speakers density uses the scores of the trial's questioned
    utterance, optionally excluding the trial's known speaker.
    """
    floor = 1e-300
    out = []
    for t in trials:
        left_out = {t.questioned_speaker, t.known_speaker}
        ss_support = [
            u.score for u in trials if u.label == "ss" and u.questioned_speaker not in left_out
        ]
        ds_support = [
            u.score
            for u in trials
            if u.label == "ds"
            and u.questioned_id == t.questioned_id
            and (not exclude_known_speaker_from_ds or u.known_speaker not in left_out)
        ]
        assert len(ss_support) >= 2 and len(ds_support) >= 2
        f_ss = max(gaussian_kde_direct(ss_support, silverman_direct(ss_support), t.score), floor)
        f_ds = max(gaussian_kde_direct(ds_support, silverman_direct(ds_support), t.score), floor)
        llr = math.log10(f_ss) - math.log10(f_ds)
        out.append(min(max(llr, -log10_clip), log10_clip))
    return out


def trapezoid(fn, lo: float, hi: float, n: int = 20001) -> float:
    xs = np.linspace(lo, hi, n)
    ys = np.array([fn(float(x)) for x in xs])
    return float(np.trapezoid(ys, xs))
