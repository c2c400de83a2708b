"""Extraction job description: manifest rows plus audio paths."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

JOB_COLUMNS = ("recording_id", "speaker_id", "session", "condition", "partition", "audio_path")
CONDITIONS = ("questioned", "known")
PARTITIONS = ("train", "test")

DEFAULT_EMBEDDING_DIM = 192


class JobError(ValueError):
    """The job description file is malformed."""


@dataclass(frozen=True)
class JobEntry:
    recording_id: str
    speaker_id: str
    session: int
    condition: str
    partition: str
    audio_path: Path


@dataclass
class ExtractionJob:
    """A batch of audio files to embed, with per-file manifest metadata."""

    entries: list[JobEntry]
    embedding_dim: int = DEFAULT_EMBEDDING_DIM
    model_id: str = ""

    def __post_init__(self) -> None:
        if not self.entries:
            raise JobError("job lists no recordings")
        seen: set[str] = set()
        for e in self.entries:
            if e.recording_id in seen:
                raise JobError(f"duplicate recording_id {e.recording_id!r}")
            seen.add(e.recording_id)


def parse_job(path: str | Path, embedding_dim: int = DEFAULT_EMBEDDING_DIM, model_id: str = "") -> ExtractionJob:
    """Parse a job CSV: the manifest schema plus an audio_path column.

    Relative audio paths are resolved against the job file's directory.
    """
    path = Path(path)
    base = path.parent
    entries: list[JobEntry] = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise JobError(f"{path}: empty job file") from None
        if tuple(h.strip() for h in header) != JOB_COLUMNS:
            raise JobError(f"{path}: expected header {','.join(JOB_COLUMNS)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(JOB_COLUMNS):
                raise JobError(f"{path}: line {lineno}: expected {len(JOB_COLUMNS)} fields, got {len(row)}")
            rid, spk, session, condition, partition, audio = (c.strip() for c in row)
            try:
                session_idx = int(session)
            except ValueError:
                raise JobError(f"{path}: line {lineno}: session must be an integer") from None
            if condition not in CONDITIONS:
                raise JobError(f"{path}: line {lineno}: condition must be one of {CONDITIONS}")
            if partition not in PARTITIONS:
                raise JobError(f"{path}: line {lineno}: partition must be one of {PARTITIONS}")
            audio_path = Path(audio)
            if not audio_path.is_absolute():
                audio_path = base / audio_path
            entries.append(JobEntry(rid, spk, session_idx, condition, partition, audio_path))
    return ExtractionJob(entries=entries, embedding_dim=embedding_dim, model_id=model_id)
