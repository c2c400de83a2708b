"""Shared fixture builders for the test suite."""

from __future__ import annotations

import numpy as np

from fvcval.calibration import LRSet, TrialLR
from fvcval.dataset import EmbeddingSet, Manifest, RecordingMeta
from fvcval.scoring import ScoredTrial, TrialScoreSet


def make_lrset(ss_log10, ds_log10) -> LRSet:
    """LRSet from raw log10 LR values, with fabricated distinct trial ids."""
    trials = []
    for i, v in enumerate(ss_log10):
        spk = f"A{i:03d}"
        trials.append(TrialLR(f"q{i:03d}", f"k{i:03d}", spk, spk, "ss", 10.0 ** float(v)))
    for j, v in enumerate(ds_log10):
        trials.append(TrialLR(f"q{j:03d}", f"kx{j:03d}", f"A{j:03d}", f"B{j:03d}", "ds", 10.0 ** float(v)))
    return LRSet(trials)


def make_scoreset(scores, labels, system: str = "SYS1") -> TrialScoreSet:
    """TrialScoreSet from parallel score/label lists ('ss' or 'ds')."""
    trials = []
    for i, (s, lab) in enumerate(zip(scores, labels)):
        q_spk = f"A{i:03d}"
        k_spk = q_spk if lab == "ss" else f"B{i:03d}"
        trials.append(ScoredTrial(f"q{i:03d}", f"k{i:03d}", q_spk, k_spk, lab, float(s)))
    return TrialScoreSet(system=system, trials=trials)


def paper_shaped_manifest(dim: int = 4, seed: int = 11) -> tuple[Manifest, EmbeddingSet]:
    """Manifest mirroring the published evaluation's partition counts.

    Train: 105 speakers, 191 questioned + 232 known recordings.
    Test: 61 speakers, 61 questioned + 162 known recordings.
    """
    records: list[RecordingMeta] = []

    def add(speaker: str, condition: str, partition: str, count: int) -> None:
        for sess in range(1, count + 1):
            rid = f"{speaker}-{condition[0]}{sess}"
            records.append(RecordingMeta(rid, speaker, sess, condition, partition))

    for i in range(105):
        spk = f"t{i:03d}"
        add(spk, "questioned", "train", 2 if i < 86 else 1)
        add(spk, "known", "train", 3 if i < 22 else 2)
    for i in range(61):
        spk = f"u{i:03d}"
        add(spk, "questioned", "test", 1)
        add(spk, "known", "test", 3 if i < 40 else 2)

    rng = np.random.default_rng(seed)
    matrix = rng.normal(size=(len(records), dim))
    embeddings = EmbeddingSet([r.recording_id for r in records], matrix)
    return Manifest(records, embedding_dim=dim), embeddings
