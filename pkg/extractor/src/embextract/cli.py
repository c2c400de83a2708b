"""Command line for batch embedding extraction."""

from __future__ import annotations

import argparse
import sys

from .audio import AudioError
from .backends import BackendError, make_backend
from .extract import DimensionMismatchError, extract_embeddings
from .job import DEFAULT_EMBEDDING_DIM, JobError, parse_job


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="embextract", description="Extract speaker embeddings from audio batches")
    parser.add_argument("job", help="job CSV: recording_id,speaker_id,session,condition,partition,audio_path")
    parser.add_argument("--out", required=True, help="output directory for manifest.csv and embeddings")
    parser.add_argument("--backend", choices=("spectral", "pretrained"), default="pretrained")
    parser.add_argument("--dim", type=int, default=DEFAULT_EMBEDDING_DIM, help="expected embedding dimension")
    parser.add_argument("--model-id", default="", help="checkpoint identifier for the pretrained backend")
    parser.add_argument("--format", choices=("csv", "f32"), default="csv", help="embedding file format")
    parser.add_argument("--max-seconds", type=float, default=None, help="truncate each recording before embedding")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = parse_job(args.job, embedding_dim=args.dim, model_id=args.model_id)
        backend = make_backend(args.backend, dim=args.dim, model_id=args.model_id)
        result = extract_embeddings(job, backend, args.out, embedding_format=args.format, max_seconds=args.max_seconds)
    except (JobError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (BackendError, DimensionMismatchError, AudioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for rid, reason in result.failures:
        print(f"skipped {rid}: {reason}", file=sys.stderr)
    print(f"embedded {len(result.extracted)} recordings ({len(result.failures)} skipped)")
    print(f"wrote {result.manifest_path} and {result.embeddings_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
