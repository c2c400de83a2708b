"""Command-line pipeline: validate, synth, and run.

A single JSON config file drives everything; a few flags override it on the
command line. ``run`` produces, per requested system, the score file, LR file
(plus calibration sidecar), metric reports, and the four plots, then a
comparison table across systems sorted by decreasing Cllr_pooled.

Exit codes: 0 success, 1 usage error, 2 data validation failure, 3 numeric
failure (degenerate cohort, insufficient density support).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import calibration, dataset, metrics, plots, scoring
from .errors import DataValidationError, NumericError

OUTPUT_DIR_ENV = "FVCVAL_OUTPUT_DIR"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


@dataclass
class SynthConfig:
    n_speakers: int = 20
    sessions_per_speaker: int = 3
    dim: int = 192
    channel_offset: float = 0.0
    noise_scale: float = 1.0


@dataclass
class RunConfig:
    manifest: str | None = None
    embeddings: str | None = None
    systems: tuple[str, ...] = scoring.SYSTEM_TAGS
    adaptive_cohort_size: int = scoring.DEFAULT_ADAPTIVE_COHORT_SIZE
    bandwidth_rule: str = "silverman"
    log10_lr_clip: float = calibration.DEFAULT_LOG10_LR_CLIP
    exclude_known_speaker_from_ds_density: bool = True
    floor_zero_variance: bool = False
    ece_grid_lo: float = metrics.DEFAULT_ECE_GRID_LO
    ece_grid_hi: float = metrics.DEFAULT_ECE_GRID_HI
    ece_grid_points: int = metrics.DEFAULT_ECE_GRID_POINTS
    output_dir: str = "out"
    seed: int = 0
    synth: SynthConfig = field(default_factory=SynthConfig)

    def validate(self) -> None:
        if self.adaptive_cohort_size < 2:
            raise DataValidationError(f"adaptive_cohort_size must be >= 2, got {self.adaptive_cohort_size}")
        if not self.log10_lr_clip > 0:
            raise DataValidationError(f"log10_lr_clip must be > 0, got {self.log10_lr_clip}")
        if self.bandwidth_rule != "silverman":
            raise DataValidationError(f"unknown bandwidth_rule {self.bandwidth_rule!r}")
        unknown = [s for s in self.systems if s not in scoring.SYSTEM_TAGS]
        if unknown:
            raise DataValidationError(f"unknown systems {unknown}; expected a subset of {scoring.SYSTEM_TAGS}")
        if not self.systems:
            raise DataValidationError("no systems requested")
        grid = self.ece_grid()
        if float(np.abs(grid).min()) > 1e-12:
            raise DataValidationError("ECE prior grid must contain the point 0")

    def ece_grid(self) -> np.ndarray:
        if self.ece_grid_points < 1:
            raise DataValidationError(f"ece_grid_points must be >= 1, got {self.ece_grid_points}")
        return np.linspace(self.ece_grid_lo, self.ece_grid_hi, self.ece_grid_points)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataValidationError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise DataValidationError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise DataValidationError(f"{path}: config must be a JSON object")
    synth_raw = raw.pop("synth", {})
    known_synth = {f for f in SynthConfig.__dataclass_fields__}
    bad = set(synth_raw) - known_synth
    if bad:
        raise DataValidationError(f"{path}: unknown synth keys {sorted(bad)}")
    known = {f for f in RunConfig.__dataclass_fields__} - {"synth"}
    bad = set(raw) - known
    if bad:
        raise DataValidationError(f"{path}: unknown config keys {sorted(bad)}")
    if "systems" in raw:
        raw["systems"] = tuple(raw["systems"])
    cfg = RunConfig(synth=SynthConfig(**synth_raw), **raw)
    cfg.validate()
    return cfg


def _apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    env_out = os.environ.get(OUTPUT_DIR_ENV)
    if env_out:
        cfg = replace(cfg, output_dir=env_out)
    if getattr(args, "out", None):
        cfg = replace(cfg, output_dir=args.out)
    if getattr(args, "manifest", None):
        cfg = replace(cfg, manifest=args.manifest)
    if getattr(args, "embeddings", None):
        cfg = replace(cfg, embeddings=args.embeddings)
    if getattr(args, "system", None):
        cfg = replace(cfg, systems=tuple(args.system))
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    cfg.validate()
    return cfg


def _load_dataset(cfg: RunConfig) -> tuple[dataset.Manifest, dataset.EmbeddingSet]:
    if not cfg.manifest or not cfg.embeddings:
        raise DataValidationError("config must provide 'manifest' and 'embeddings' paths")
    return dataset.load_dataset(cfg.manifest, cfg.embeddings)


def cmd_validate(cfg: RunConfig) -> int:
    manifest, _embeddings = _load_dataset(cfg)
    trials = dataset.enumerate_trials(manifest)
    n_ss = sum(1 for t in trials if t.label == "ss")
    for part in dataset.PARTITIONS:
        recs = manifest.select(partition=part)
        print(f"{part}: {len(recs)} recordings / {len(manifest.speakers(part))} speakers")
    n_q = len(manifest.select(partition="test", condition="questioned"))
    n_k = len(manifest.select(partition="test", condition="known"))
    print(f"test questioned: {n_q} recordings; test known: {n_k} recordings")
    print(f"trials: {len(trials)} ({n_ss} same-speaker, {len(trials) - n_ss} different-speakers)")
    print(f"embedding dimension: {manifest.embedding_dim}")
    return EXIT_OK


def cmd_synth(cfg: RunConfig) -> int:
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest, embeddings = dataset.synthesize_dataset(
        n_speakers=cfg.synth.n_speakers,
        sessions_per_speaker=cfg.synth.sessions_per_speaker,
        dim=cfg.synth.dim,
        channel_offset=cfg.synth.channel_offset,
        noise_scale=cfg.synth.noise_scale,
        seed=cfg.seed,
    )
    manifest_path = out_dir / "manifest.csv"
    embeddings_path = out_dir / "embeddings.csv"
    dataset.write_manifest(manifest, manifest_path)
    dataset.write_embeddings(embeddings, embeddings_path)
    for part in dataset.PARTITIONS:
        recs = manifest.select(partition=part)
        print(f"{part}: {len(recs)} recordings / {len(manifest.speakers(part))} speakers")
    print(f"wrote {manifest_path} and {embeddings_path}")
    return EXIT_OK


def _run_one_system(
    system: str,
    cfg: RunConfig,
    manifest: dataset.Manifest,
    embeddings: dataset.EmbeddingSet,
    out_dir: Path,
) -> metrics.MetricsReport:
    written: list[Path] = []

    def target(name: str) -> Path:
        p = out_dir / name
        written.append(p)
        return p

    try:
        scores = scoring.score_trials(
            system,
            manifest,
            embeddings,
            adaptive_k=cfg.adaptive_cohort_size,
            floor_zero_std=cfg.floor_zero_variance,
        )
        scoring.write_scores_csv(scores, target(f"scores_{system}.csv"))

        lrs = calibration.loo_calibrate(
            scores,
            exclude_known_speaker_from_ds=cfg.exclude_known_speaker_from_ds_density,
            log10_clip=cfg.log10_lr_clip,
        )
        written.append(out_dir / f"lrs_{system}.meta.json")
        calibration.write_lrs_csv(lrs, target(f"lrs_{system}.csv"), metadata=lrs.metadata)

        report = metrics.summarize(scores, lrs, manifest)
        pav = calibration.pav_llr(scores)
        ece_points = metrics.ece_curve(lrs, cfg.ece_grid(), pav_lrs=pav)

        target(f"report_{system}.txt").write_text(
            metrics.format_report_table([(system, report)]), encoding="utf-8"
        )
        target(f"report_{system}.json").write_text(
            json.dumps({f: getattr(report, f) for f in metrics.REPORT_FIELDS}, indent=2) + "\n",
            encoding="utf-8",
        )

        plots.tippett_render(
            plots.tippett_data(lrs, report.ci95),
            target(f"tippett_{system}.svg"),
            target(f"tippett_{system}.csv"),
            title=f"Tippett plot - {system}",
        )
        plots.det_render(
            plots.det_data(lrs),
            target(f"det_{system}.svg"),
            target(f"det_{system}.csv"),
            title=f"DET plot - {system}",
        )
        plots.ece_render(
            ece_points,
            target(f"ece_{system}.svg"),
            target(f"ece_{system}.csv"),
            title=f"ECE plot - {system}",
        )
        plots.accuracy_precision_render(
            [(system, report)],
            target(f"accuracy_precision_{system}.svg"),
            target(f"accuracy_precision_{system}.csv"),
            title=f"Accuracy and precision - {system}",
        )
        return report
    except Exception:
        for p in written:
            p.unlink(missing_ok=True)
        raise


def cmd_run(cfg: RunConfig) -> int:
    manifest, embeddings = _load_dataset(cfg)
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    rows: list[tuple[str, metrics.MetricsReport | None]] = []
    failures: list[tuple[str, Exception]] = []
    for system in cfg.systems:
        try:
            report = _run_one_system(system, cfg, manifest, embeddings, out_dir)
            rows.append((system, report))
            print(f"{system}: done")
        except (NumericError, ValueError) as exc:
            rows.append((system, None))
            failures.append((system, exc))
            print(f"{system}: failed: {exc}", file=sys.stderr)

    table = metrics.format_report_table(rows)
    (out_dir / "comparison.txt").write_text(table, encoding="utf-8")
    comparison = {
        name: ({f: getattr(rep, f) for f in metrics.REPORT_FIELDS} if rep is not None else None)
        for name, rep in rows
    }
    (out_dir / "comparison.json").write_text(json.dumps(comparison, indent=2) + "\n", encoding="utf-8")
    print(table, end="")
    return EXIT_NUMERIC if failures else EXIT_OK


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="fvcval", description="Forensic voice comparison validation pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON config file")
    common.add_argument("--out", help="output directory override")

    p_validate = sub.add_parser("validate", parents=[common], help="check dataset invariants and print counts")
    p_validate.add_argument("--manifest", help="manifest CSV override")
    p_validate.add_argument("--embeddings", help="embedding file override")

    p_synth = sub.add_parser("synth", parents=[common], help="write a synthetic dataset")
    p_synth.add_argument("--seed", type=int, help="generator seed override")

    p_run = sub.add_parser("run", parents=[common], help="score, calibrate, evaluate, and plot")
    p_run.add_argument("--manifest", help="manifest CSV override")
    p_run.add_argument("--embeddings", help="embedding file override")
    p_run.add_argument("--system", action="append", choices=scoring.SYSTEM_TAGS, help="restrict to one or more systems")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        if args.command == "validate":
            return cmd_validate(cfg)
        if args.command == "synth":
            return cmd_synth(cfg)
        return cmd_run(cfg)
    except DataValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
