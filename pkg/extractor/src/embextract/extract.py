"""Batch extraction pipeline: job file in, manifest plus embeddings out.

Output files follow the evaluation toolkit's published interchange formats:
a manifest CSV (``recording_id,speaker_id,session,condition,partition``) and
either a text embedding matrix (``recording_id,v1,...,vD`` per line) or
packed little-endian float32 records with a ``<name>.idx`` sidecar. Rows are
written in job order. Undecodable files are reported and skipped; a vector
of unexpected dimension aborts the job.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio import AudioError, read_wav, resample
from .job import ExtractionJob, JobEntry

MANIFEST_COLUMNS = ("recording_id", "speaker_id", "session", "condition", "partition")

FLOAT_FORMAT = ".16e"


class DimensionMismatchError(RuntimeError):
    """The backend produced a vector of the wrong dimension (fatal)."""


@dataclass
class ExtractionResult:
    manifest_path: Path
    embeddings_path: Path
    extracted: list[str] = field(default_factory=list)
    failures: list[tuple[str, str]] = field(default_factory=list)


def extract_embeddings(
    job: ExtractionJob,
    backend,
    out_dir: str | Path,
    embedding_format: str = "csv",
    max_seconds: float | None = None,
) -> ExtractionResult:
    """Embed every decodable file in the job and write the dataset files.

    ``max_seconds`` truncates each waveform before embedding when set.
    Per-file decode errors are collected in the result and do not abort the
    batch; a dimension mismatch against the job's expected dimension does.
    """
    if embedding_format not in ("csv", "f32"):
        raise ValueError(f"embedding_format must be 'csv' or 'f32', got {embedding_format!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    kept: list[JobEntry] = []
    vectors: list[np.ndarray] = []
    failures: list[tuple[str, str]] = []
    for entry in job.entries:
        try:
            samples, rate = read_wav(entry.audio_path)
            samples = resample(samples, rate, backend.expected_sample_rate)
            if max_seconds is not None:
                samples = samples[: int(max_seconds * backend.expected_sample_rate)]
            vec = np.asarray(backend.embed(samples, backend.expected_sample_rate), dtype=np.float64)
        except AudioError as exc:
            failures.append((entry.recording_id, str(exc)))
            continue
        if vec.shape != (job.embedding_dim,):
            raise DimensionMismatchError(
                f"{entry.recording_id}: backend produced dimension {vec.shape}, expected ({job.embedding_dim},)"
            )
        kept.append(entry)
        vectors.append(vec)
    if not kept:
        raise AudioError("no file in the job could be embedded")

    manifest_path = out_dir / "manifest.csv"
    with manifest_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_COLUMNS)
        for e in kept:
            writer.writerow([e.recording_id, e.speaker_id, e.session, e.condition, e.partition])

    matrix = np.vstack(vectors)
    if embedding_format == "csv":
        embeddings_path = out_dir / "embeddings.csv"
        with embeddings_path.open("w", encoding="utf-8", newline="") as fh:
            for e, row in zip(kept, matrix):
                fh.write(e.recording_id + "," + ",".join(format(v, FLOAT_FORMAT) for v in row) + "\n")
    else:
        embeddings_path = out_dir / "embeddings.f32"
        embeddings_path.write_bytes(matrix.astype("<f4").tobytes(order="C"))
        idx_path = out_dir / "embeddings.f32.idx"
        with idx_path.open("w", encoding="utf-8", newline="") as fh:
            fh.write(f"{job.embedding_dim}\n")
            for e in kept:
                fh.write(e.recording_id + "\n")

    return ExtractionResult(
        manifest_path=manifest_path,
        embeddings_path=embeddings_path,
        extracted=[e.recording_id for e in kept],
        failures=failures,
    )
