"""Score computation for the four system variants SYS1-SYS4.

All variants score a questioned/known embedding pair with cosine similarity;
they differ in how the train-partition cohort is used to normalize either the
scores (SYS2, symmetric score normalization) or the embeddings themselves
(SYS3 full-cohort z-norm, SYS4 adaptive top-K cohort z-norm). SYS1 is the raw
cosine baseline and ignores the train partition entirely. Higher scores always
favour the same-speaker hypothesis.

Cohort statistics use the population convention (divide by n) throughout.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import EmbeddingSet, Manifest, enumerate_trials, format_float
from .errors import DataValidationError, DegenerateCohortError

SYSTEM_TAGS = ("SYS1", "SYS2", "SYS3", "SYS4")

DEFAULT_ADAPTIVE_COHORT_SIZE = 100

_STD_FLOOR = 1e-8


@dataclass(frozen=True)
class CohortStats:
    """Per-dimension mean and standard deviation of a cohort of embeddings."""

    mean: np.ndarray
    std: np.ndarray
    cohort_size: int


@dataclass(frozen=True)
class ScoreNormStats:
    """Mean and standard deviation of one embedding's scores against a cohort."""

    mean: float
    std: float


@dataclass(frozen=True)
class ScoredTrial:
    questioned_id: str
    known_id: str
    questioned_speaker: str
    known_speaker: str
    label: str
    score: float


@dataclass
class TrialScoreSet:
    """All trial scores for one system variant, in enumeration order."""

    system: str
    trials: list[ScoredTrial]

    def scores(self) -> np.ndarray:
        return np.array([t.score for t in self.trials], dtype=np.float64)

    def ss_scores(self) -> np.ndarray:
        return np.array([t.score for t in self.trials if t.label == "ss"], dtype=np.float64)

    def ds_scores(self) -> np.ndarray:
        return np.array([t.score for t in self.trials if t.label == "ds"], dtype=np.float64)


def cosine_score(w1: np.ndarray, w2: np.ndarray) -> float:
    """Cosine similarity of two embedding vectors, in [-1, 1]."""
    w1 = np.asarray(w1, dtype=np.float64)
    w2 = np.asarray(w2, dtype=np.float64)
    if w1.shape != w2.shape:
        raise ValueError(f"dimension mismatch: {w1.shape} vs {w2.shape}")
    n1 = np.linalg.norm(w1)
    n2 = np.linalg.norm(w2)
    if n1 == 0.0 or n2 == 0.0:
        raise ValueError("cosine similarity undefined for a zero-norm embedding")
    return float(np.dot(w1, w2) / (n1 * n2))


def score_norm_stats(scores: np.ndarray | list[float]) -> ScoreNormStats:
    """Population mean/std of one embedding's cohort score list."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size < 2:
        raise ValueError(f"cohort score list needs >= 2 entries, got {scores.size}")
    std = float(scores.std())
    if std == 0.0:
        raise DegenerateCohortError("cohort score list has zero standard deviation")
    return ScoreNormStats(mean=float(scores.mean()), std=std)


def snorm_score(raw: float, q_vs_cohort: np.ndarray | list[float], k_vs_cohort: np.ndarray | list[float]) -> float:
    """Symmetric score normalization.

    Standardizes the raw score by the mean/std of each side's cohort score
    list and averages the two standardized values.
    """
    q = score_norm_stats(q_vs_cohort)
    k = score_norm_stats(k_vs_cohort)
    return 0.5 * ((raw - q.mean) / q.std + (raw - k.mean) / k.std)


def cohort_stats(cohort: EmbeddingSet | np.ndarray, floor_zero_std: bool = False) -> CohortStats:
    """Per-dimension population mean/std over a cohort of embeddings.

    Zero-variance dimensions are an error unless ``floor_zero_std`` is set,
    in which case the standard deviation is floored at 1e-8.
    """
    matrix = cohort.matrix if isinstance(cohort, EmbeddingSet) else np.asarray(cohort, dtype=np.float64)
    if matrix.shape[0] < 2:
        raise ValueError(f"cohort needs >= 2 embeddings, got {matrix.shape[0]}")
    mean = matrix.mean(axis=0)
    std = matrix.std(axis=0)
    if (std == 0.0).any():
        if not floor_zero_std:
            bad = int(np.argmin(std > 0.0))
            raise DegenerateCohortError(f"cohort dimension {bad} has zero variance")
        std = np.maximum(std, _STD_FLOOR)
    return CohortStats(mean=mean, std=std, cohort_size=int(matrix.shape[0]))


def znorm_embedding(w: np.ndarray, stats: CohortStats) -> np.ndarray:
    """Component-wise (w - mean) / std."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape != stats.mean.shape:
        raise ValueError(f"dimension mismatch: {w.shape} vs {stats.mean.shape}")
    return (w - stats.mean) / stats.std


def adaptive_cohort(w: np.ndarray, cohort: EmbeddingSet, k: int = DEFAULT_ADAPTIVE_COHORT_SIZE) -> EmbeddingSet:
    """The k cohort embeddings most cosine-similar to ``w``.

    Ties are broken by recording_id so selection is deterministic. The
    returned subset preserves the cohort's storage order; with k equal to the
    cohort size it is the cohort itself.
    """
    if k < 2:
        raise ValueError(f"adaptive cohort size must be >= 2, got {k}")
    if len(cohort) < k:
        raise ValueError(f"cohort has {len(cohort)} embeddings, fewer than k={k}")
    sims = _cosine_matrix(np.asarray(w, dtype=np.float64)[np.newaxis, :], cohort.matrix)[0]
    ranked = sorted(range(len(cohort)), key=lambda i: (-sims[i], cohort.ids[i]))
    selected = sorted(ranked[:k])
    return cohort.subset([cohort.ids[i] for i in selected])


def score_trials(
    system: str,
    manifest: Manifest,
    embeddings: EmbeddingSet,
    adaptive_k: int = DEFAULT_ADAPTIVE_COHORT_SIZE,
    floor_zero_std: bool = False,
) -> TrialScoreSet:
    """Score every enumerated trial under one system variant.

    SYS1: raw cosine. SYS2: cosine followed by symmetric score normalization
    against the full train cohort. SYS3: embeddings z-normed per dimension
    with full-cohort statistics, then cosine. SYS4: each test embedding
    z-normed with the statistics of its own top-``adaptive_k`` cohort, then
    cosine. Output order equals trial enumeration order.
    """
    if system not in SYSTEM_TAGS:
        raise ValueError(f"unknown system tag {system!r}; expected one of {SYSTEM_TAGS}")
    trials = enumerate_trials(manifest)

    q_ids = sorted({t.questioned_id for t in trials})
    k_ids = sorted({t.known_id for t in trials})
    q_index = {rid: i for i, rid in enumerate(q_ids)}
    k_index = {rid: i for i, rid in enumerate(k_ids)}
    q_matrix = np.vstack([embeddings.vector(rid) for rid in q_ids])
    k_matrix = np.vstack([embeddings.vector(rid) for rid in k_ids])

    if system == "SYS1":
        score_matrix = _cosine_matrix(q_matrix, k_matrix)
    else:
        cohort_ids = sorted(rec.recording_id for rec in manifest.select(partition="train"))
        if len(cohort_ids) < 2:
            raise ValueError(f"{system} needs a train cohort of >= 2 embeddings, got {len(cohort_ids)}")
        cohort = embeddings.subset(cohort_ids)
        if system == "SYS2":
            score_matrix = _snorm_matrix(q_matrix, k_matrix, cohort.matrix)
        elif system == "SYS3":
            stats = cohort_stats(cohort, floor_zero_std=floor_zero_std)
            qz = (q_matrix - stats.mean) / stats.std
            kz = (k_matrix - stats.mean) / stats.std
            _require_nonzero_rows(qz, q_ids)
            _require_nonzero_rows(kz, k_ids)
            score_matrix = _cosine_matrix(qz, kz)
        else:
            qz = _adaptive_znorm(q_matrix, cohort, adaptive_k, floor_zero_std)
            kz = _adaptive_znorm(k_matrix, cohort, adaptive_k, floor_zero_std)
            _require_nonzero_rows(qz, q_ids)
            _require_nonzero_rows(kz, k_ids)
            score_matrix = _cosine_matrix(qz, kz)

    scored = []
    for t in trials:
        score = float(score_matrix[q_index[t.questioned_id], k_index[t.known_id]])
        scored.append(
            ScoredTrial(
                questioned_id=t.questioned_id,
                known_id=t.known_id,
                questioned_speaker=manifest[t.questioned_id].speaker_id,
                known_speaker=manifest[t.known_id].speaker_id,
                label=t.label,
                score=score,
            )
        )
    return TrialScoreSet(system=system, trials=scored)


SCORE_FILE_COLUMNS = ("questioned_id", "known_id", "label", "score")


def write_scores_csv(scores: TrialScoreSet, path: str | Path) -> None:
    """Score file: a system-tag comment line, a header, one row per trial."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(f"# system: {scores.system}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SCORE_FILE_COLUMNS)
        for t in scores.trials:
            writer.writerow([t.questioned_id, t.known_id, t.label, format_float(t.score)])


def read_scores_csv(path: str | Path, manifest: Manifest) -> TrialScoreSet:
    """Read a score file back; speaker identities are resolved via the manifest."""
    path = Path(path)
    system = ""
    trials: list[ScoredTrial] = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        first = fh.readline().strip()
        if not first.startswith("# system:"):
            raise DataValidationError(f"{path}: missing '# system:' comment line")
        system = first.split(":", 1)[1].strip()
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != SCORE_FILE_COLUMNS:
            raise DataValidationError(f"{path}: unexpected header {header}")
        for qid, kid, label, score in reader:
            trials.append(
                ScoredTrial(
                    questioned_id=qid,
                    known_id=kid,
                    questioned_speaker=manifest[qid].speaker_id,
                    known_speaker=manifest[kid].speaker_id,
                    label=label,
                    score=float(score),
                )
            )
    return TrialScoreSet(system=system, trials=trials)


def _require_nonzero_rows(matrix: np.ndarray, ids: list[str]) -> None:
    norms = np.linalg.norm(matrix, axis=1)
    if (norms == 0.0).any():
        bad = ids[int(np.argmin(norms > 0.0))]
        raise ValueError(f"normalization produced a zero-norm embedding for {bad!r}")


def _cosine_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    if (na == 0.0).any() or (nb == 0.0).any():
        raise ValueError("cosine similarity undefined for a zero-norm embedding")
    return (a @ b.T) / np.outer(na, nb)


def _snorm_matrix(q_matrix: np.ndarray, k_matrix: np.ndarray, cohort_matrix: np.ndarray) -> np.ndarray:
    raw = _cosine_matrix(q_matrix, k_matrix)
    q_cohort = _cosine_matrix(q_matrix, cohort_matrix)
    k_cohort = _cosine_matrix(k_matrix, cohort_matrix)
    mu_q = q_cohort.mean(axis=1)
    sd_q = q_cohort.std(axis=1)
    mu_k = k_cohort.mean(axis=1)
    sd_k = k_cohort.std(axis=1)
    if (sd_q == 0.0).any() or (sd_k == 0.0).any():
        raise DegenerateCohortError("a cohort score list has zero standard deviation")
    return 0.5 * ((raw - mu_q[:, None]) / sd_q[:, None] + (raw - mu_k[None, :]) / sd_k[None, :])


def _adaptive_znorm(matrix: np.ndarray, cohort: EmbeddingSet, k: int, floor_zero_std: bool) -> np.ndarray:
    out = np.empty_like(matrix)
    for i, w in enumerate(matrix):
        stats = cohort_stats(adaptive_cohort(w, cohort, k), floor_zero_std=floor_zero_std)
        out[i] = (w - stats.mean) / stats.std
    return out
