"""Manifest data model, embedding I/O, trial enumeration, and synthetic data.

A dataset is a manifest (one row of recording metadata per utterance) plus an
embedding set holding one fixed-dimension vector per recording. Test-partition
recordings are compared pairwise across the questioned/known conditions;
train-partition recordings only ever serve as a normalization cohort.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataValidationError

CONDITIONS = ("questioned", "known")
PARTITIONS = ("train", "test")
LABELS = ("ss", "ds")

MANIFEST_COLUMNS = ("recording_id", "speaker_id", "session", "condition", "partition")

_TEXT_EMBEDDING_SUFFIXES = (".csv", ".txt")
_BINARY_EMBEDDING_SUFFIXES = (".f32", ".bin")

# 17 significant digits: every float64 written to a text file parses back
# to the identical value.
FLOAT_FORMAT = ".16e"


def format_float(x: float) -> str:
    return format(float(x), FLOAT_FORMAT)


@dataclass(frozen=True)
class RecordingMeta:
    """Metadata for one recording in a manifest."""

    recording_id: str
    speaker_id: str
    session: int
    condition: str
    partition: str

    def __post_init__(self) -> None:
        if not self.recording_id:
            raise DataValidationError("recording_id must be non-empty")
        if not self.speaker_id:
            raise DataValidationError(f"{self.recording_id}: speaker_id must be non-empty")
        if self.session < 1:
            raise DataValidationError(f"{self.recording_id}: session must be >= 1, got {self.session}")
        if self.condition not in CONDITIONS:
            raise DataValidationError(f"{self.recording_id}: condition must be one of {CONDITIONS}, got {self.condition!r}")
        if self.partition not in PARTITIONS:
            raise DataValidationError(f"{self.recording_id}: partition must be one of {PARTITIONS}, got {self.partition!r}")


@dataclass
class Manifest:
    """A validated collection of recording metadata.

    ``embedding_dim`` is filled in once the manifest has been paired with an
    embedding set (see :func:`load_dataset`); it is None for a manifest parsed
    on its own.
    """

    records: list[RecordingMeta]
    embedding_dim: int | None = None
    source_note: str = ""
    _by_id: dict[str, RecordingMeta] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not self.records:
            raise DataValidationError("manifest has no records")
        by_id: dict[str, RecordingMeta] = {}
        for rec in self.records:
            if rec.recording_id in by_id:
                raise DataValidationError(f"duplicate recording_id {rec.recording_id!r}")
            by_id[rec.recording_id] = rec
        self._by_id = by_id

    def __getitem__(self, recording_id: str) -> RecordingMeta:
        try:
            return self._by_id[recording_id]
        except KeyError:
            raise DataValidationError(f"unknown recording_id {recording_id!r}") from None

    def __contains__(self, recording_id: str) -> bool:
        return recording_id in self._by_id

    def select(self, partition: str | None = None, condition: str | None = None) -> list[RecordingMeta]:
        out = []
        for rec in self.records:
            if partition is not None and rec.partition != partition:
                continue
            if condition is not None and rec.condition != condition:
                continue
            out.append(rec)
        return out

    def speakers(self, partition: str | None = None) -> set[str]:
        return {rec.speaker_id for rec in self.select(partition=partition)}


class EmbeddingSet:
    """Immutable set of equally sized embedding vectors keyed by recording id."""

    def __init__(self, ids: list[str] | tuple[str, ...], matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise DataValidationError(f"embedding matrix must be 2-D, got shape {matrix.shape}")
        if len(ids) != matrix.shape[0]:
            raise DataValidationError(f"{len(ids)} ids for {matrix.shape[0]} embedding rows")
        if matrix.shape[1] < 1:
            raise DataValidationError("embedding dimension must be >= 1")
        if len(set(ids)) != len(ids):
            raise DataValidationError("duplicate recording_id in embedding set")
        self.ids: tuple[str, ...] = tuple(ids)
        self.matrix = matrix
        self.matrix.setflags(write=False)
        self._row: dict[str, int] = {rid: i for i, rid in enumerate(self.ids)}

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, recording_id: str) -> bool:
        return recording_id in self._row

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    def vector(self, recording_id: str) -> np.ndarray:
        try:
            return self.matrix[self._row[recording_id]]
        except KeyError:
            raise DataValidationError(f"no embedding for recording_id {recording_id!r}") from None

    def subset(self, ids: list[str] | tuple[str, ...]) -> "EmbeddingSet":
        rows = [self._row[rid] for rid in ids]
        return EmbeddingSet(list(ids), self.matrix[rows].copy())

    def validate(self) -> None:
        """Reject non-finite values and zero-norm vectors, naming the recording."""
        finite = np.isfinite(self.matrix).all(axis=1)
        if not finite.all():
            bad = self.ids[int(np.argmin(finite))]
            raise DataValidationError(f"embedding {bad!r} contains non-finite values")
        norms = np.linalg.norm(self.matrix, axis=1)
        if not (norms > 0.0).all():
            bad = self.ids[int(np.argmin(norms > 0.0))]
            raise DataValidationError(f"embedding {bad!r} has zero norm")


@dataclass(frozen=True)
class Trial:
    """One questioned-vs-known comparison, labeled by speaker identity."""

    questioned_id: str
    known_id: str
    label: str

    def __post_init__(self) -> None:
        if self.label not in LABELS:
            raise DataValidationError(f"trial label must be one of {LABELS}, got {self.label!r}")


def parse_manifest(path: str | Path) -> Manifest:
    """Parse and validate a manifest CSV.

    Expected header: ``recording_id,speaker_id,session,condition,partition``.
    Raises DataValidationError naming the offending line on malformed input.
    """
    path = Path(path)
    records: list[RecordingMeta] = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataValidationError(f"{path}: empty manifest file") from None
        if tuple(h.strip() for h in header) != MANIFEST_COLUMNS:
            raise DataValidationError(f"{path}: line 1: expected header {','.join(MANIFEST_COLUMNS)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(MANIFEST_COLUMNS):
                raise DataValidationError(f"{path}: line {lineno}: expected {len(MANIFEST_COLUMNS)} fields, got {len(row)}")
            rid, spk, session, condition, partition = (c.strip() for c in row)
            try:
                session_idx = int(session)
            except ValueError:
                raise DataValidationError(f"{path}: line {lineno}: session must be an integer, got {session!r}") from None
            try:
                records.append(RecordingMeta(rid, spk, session_idx, condition, partition))
            except DataValidationError as exc:
                raise DataValidationError(f"{path}: line {lineno}: {exc}") from None
    if not records:
        raise DataValidationError(f"{path}: manifest has no data rows")
    try:
        return Manifest(records)
    except DataValidationError as exc:
        raise DataValidationError(f"{path}: {exc}") from None


def write_manifest(manifest: Manifest, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_COLUMNS)
        for rec in manifest.records:
            writer.writerow([rec.recording_id, rec.speaker_id, rec.session, rec.condition, rec.partition])


def load_embeddings(path: str | Path) -> EmbeddingSet:
    """Load an embedding set; the format is chosen by file extension.

    ``.csv``/``.txt``: one line per recording, ``recording_id,v1,...,vD``.
    ``.f32``/``.bin``: packed little-endian float32 records plus a sibling
    ``<name>.idx`` index whose first line is the dimension and whose
    remaining lines are recording ids in storage order.
    """
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix in _TEXT_EMBEDDING_SUFFIXES:
        embs = _load_text_embeddings(path)
    elif suffix in _BINARY_EMBEDDING_SUFFIXES:
        embs = _load_binary_embeddings(path)
    else:
        raise DataValidationError(f"{path}: unrecognized embedding file extension {suffix!r}")
    embs.validate()
    return embs


def write_embeddings(embeddings: EmbeddingSet, path: str | Path) -> None:
    """Write an embedding set in the format implied by the file extension.

    The binary format stores float32, so values outside float32 precision are
    quantized; the text format round-trips float64 exactly.
    """
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix in _TEXT_EMBEDDING_SUFFIXES:
        with path.open("w", encoding="utf-8", newline="") as fh:
            for rid, row in zip(embeddings.ids, embeddings.matrix):
                fh.write(rid + "," + ",".join(format_float(v) for v in row) + "\n")
    elif suffix in _BINARY_EMBEDDING_SUFFIXES:
        matrix32 = embeddings.matrix.astype("<f4")
        path.write_bytes(matrix32.tobytes(order="C"))
        idx_path = path.with_name(path.name + ".idx")
        with idx_path.open("w", encoding="utf-8", newline="") as fh:
            fh.write(f"{embeddings.dim}\n")
            for rid in embeddings.ids:
                fh.write(rid + "\n")
    else:
        raise DataValidationError(f"{path}: unrecognized embedding file extension {suffix!r}")


def _load_text_embeddings(path: Path) -> EmbeddingSet:
    ids: list[str] = []
    rows: list[np.ndarray] = []
    dim: int | None = None
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) < 2:
                raise DataValidationError(f"{path}: line {lineno}: expected recording_id plus components")
            rid = parts[0].strip()
            try:
                vec = np.array([float(p) for p in parts[1:]], dtype=np.float64)
            except ValueError:
                raise DataValidationError(f"{path}: line {lineno}: non-numeric embedding component") from None
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise DataValidationError(f"{path}: line {lineno}: dimension {vec.size} != {dim}")
            ids.append(rid)
            rows.append(vec)
    if not ids:
        raise DataValidationError(f"{path}: embedding file has no rows")
    return EmbeddingSet(ids, np.vstack(rows))


def _load_binary_embeddings(path: Path) -> EmbeddingSet:
    idx_path = path.with_name(path.name + ".idx")
    if not idx_path.exists():
        raise DataValidationError(f"{path}: missing index file {idx_path.name}")
    lines = idx_path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise DataValidationError(f"{idx_path}: empty index file")
    try:
        dim = int(lines[0].strip())
    except ValueError:
        raise DataValidationError(f"{idx_path}: first line must be the embedding dimension") from None
    ids = [line.strip() for line in lines[1:] if line.strip()]
    if not ids:
        raise DataValidationError(f"{idx_path}: index lists no recordings")
    raw = np.frombuffer(path.read_bytes(), dtype="<f4")
    if raw.size != len(ids) * dim:
        raise DataValidationError(f"{path}: expected {len(ids) * dim} float32 values, found {raw.size}")
    return EmbeddingSet(ids, raw.reshape(len(ids), dim).astype(np.float64))


def load_dataset(manifest_path: str | Path, embeddings_path: str | Path) -> tuple[Manifest, EmbeddingSet]:
    """Load and cross-validate a manifest plus its embeddings.

    Every manifest record must resolve to exactly one embedding of a common
    dimension; the test partition must contain at least one questioned and
    one known recording.
    """
    manifest = parse_manifest(manifest_path)
    embeddings = load_embeddings(embeddings_path)
    for rec in manifest.records:
        if rec.recording_id not in embeddings:
            raise DataValidationError(f"no embedding found for recording_id {rec.recording_id!r}")
    if not manifest.select(partition="test", condition="questioned"):
        raise DataValidationError("test partition contains no questioned recordings")
    if not manifest.select(partition="test", condition="known"):
        raise DataValidationError("test partition contains no known recordings")
    manifest.embedding_dim = embeddings.dim
    return manifest, embeddings


def enumerate_trials(manifest: Manifest) -> list[Trial]:
    """Cross all test questioned recordings with all test known recordings.

    Order is deterministic: sorted by questioned_id, then known_id.
    """
    questioned = sorted(manifest.select(partition="test", condition="questioned"), key=lambda r: r.recording_id)
    known = sorted(manifest.select(partition="test", condition="known"), key=lambda r: r.recording_id)
    if not questioned:
        raise DataValidationError("test partition contains no questioned recordings")
    if not known:
        raise DataValidationError("test partition contains no known recordings")
    trials = []
    for q in questioned:
        for k in known:
            label = "ss" if q.speaker_id == k.speaker_id else "ds"
            trials.append(Trial(q.recording_id, k.recording_id, label))
    return trials


def synthesize_dataset(
    n_speakers: int,
    sessions_per_speaker: int,
    dim: int,
    channel_offset: np.ndarray | float,
    noise_scale: float,
    seed: int,
) -> tuple[Manifest, EmbeddingSet]:
    """Generate a deterministic synthetic dataset for testing.

    Each speaker gets a latent mean drawn from a standard normal; each
    (speaker, session) pair yields one questioned and one known recording,
    both equal to the mean plus isotropic Gaussian session noise. Questioned
    recordings are additionally shifted by ``channel_offset`` (a scalar is
    broadcast across dimensions), modeling a between-condition channel
    mismatch. The first ceil(n/2) speakers form the train partition, the
    rest the test partition. Output is bit-identical for a fixed seed.
    """
    if n_speakers < 2:
        raise ValueError(f"n_speakers must be >= 2, got {n_speakers}")
    if sessions_per_speaker < 1:
        raise ValueError(f"sessions_per_speaker must be >= 1, got {sessions_per_speaker}")
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    if not noise_scale > 0:
        raise ValueError(f"noise_scale must be > 0, got {noise_scale}")
    offset = np.broadcast_to(np.asarray(channel_offset, dtype=np.float64), (dim,))

    rng = np.random.default_rng(seed)
    means = rng.normal(size=(n_speakers, dim))
    noise = rng.normal(scale=noise_scale, size=(n_speakers, sessions_per_speaker, 2, dim))

    n_train = (n_speakers + 1) // 2
    records: list[RecordingMeta] = []
    ids: list[str] = []
    rows: list[np.ndarray] = []
    for s in range(n_speakers):
        speaker = f"spk{s:03d}"
        partition = "train" if s < n_train else "test"
        for sess in range(1, sessions_per_speaker + 1):
            for c, condition in enumerate(CONDITIONS):
                rid = f"{speaker}-s{sess}-{condition[0]}"
                vec = means[s] + noise[s, sess - 1, c]
                if condition == "questioned":
                    vec = vec + offset
                records.append(RecordingMeta(rid, speaker, sess, condition, partition))
                ids.append(rid)
                rows.append(vec)
    # float32 round trip keeps the binary embedding format bit-exact
    matrix = np.vstack(rows).astype(np.float32).astype(np.float64)
    manifest = Manifest(
        records,
        embedding_dim=dim,
        source_note=(
            f"synthetic: n_speakers={n_speakers} sessions={sessions_per_speaker} "
            f"dim={dim} noise_scale={noise_scale} seed={seed}"
        ),
    )
    embeddings = EmbeddingSet(ids, matrix)
    embeddings.validate()
    return manifest, embeddings
