"""Batch audio-to-speaker-embedding extraction adapter.

Turns a job CSV (manifest metadata plus audio paths) into the evaluation
toolkit's manifest and embedding files, using either the public pretrained
speaker-verification model or a deterministic offline spectral backend.
"""

from .audio import AudioError, read_wav, resample, write_wav
from .backends import BackendError, PretrainedSpeakerEncoder, SpectralStatsEncoder, make_backend
from .extract import DimensionMismatchError, ExtractionResult, extract_embeddings
from .job import DEFAULT_EMBEDDING_DIM, ExtractionJob, JobEntry, JobError, parse_job

__version__ = "0.1.0"
