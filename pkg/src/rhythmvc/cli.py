"""Command-line entry point wiring the library into batch workflows.

Every subcommand is a thin mapping onto library calls; exit code 0 means
success, 1 a usage error, 2 a data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .config import RunConfig
from .convert import convert_pipeline, knn_index
from .envelope import detect_extrema, dump_extrema, sonority_envelope
from .featureio import (
    load_audio,
    load_model,
    read_feature_matrix,
    save_model,
    write_feature_matrix,
)
from .metrics import rate_report, wer
from .rhythm import build_profile
from .segmenter import dp_segment, fit_segmenter, frame_log_probs, segments_to_dicts

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _feature_paths(entries: list[str]) -> list[Path]:
    paths: list[Path] = []
    for entry in entries:
        p = Path(entry)
        if p.is_dir():
            paths.extend(sorted(p.glob("*.npy")))
        else:
            paths.append(p)
    if not paths:
        raise ValueError("no feature files found")
    return paths


def _paired_audio(feature_path: Path, audio_dir: str) -> Path:
    candidate = Path(audio_dir) / (feature_path.stem + ".wav")
    if not candidate.exists():
        raise ValueError(f"no audio file for {feature_path.name} (expected {candidate})")
    return candidate


def _load_corpus(feature_entries: list[str], audio_dir: str, cfg: RunConfig):
    corpus = []
    for fpath in _feature_paths(feature_entries):
        feat = read_feature_matrix(fpath, frame_rate=cfg.frame_rate)
        wave = load_audio(
            _paired_audio(fpath, audio_dir),
            target_rate=cfg.sample_rate,
            target_level_db=cfg.target_level_db,
            resample_beta=cfg.resample_beta,
        )
        corpus.append((feat, wave))
    return corpus


def _map_jobs(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_train_segmenter(args, cfg: RunConfig) -> int:
    corpus = _load_corpus(args.features, args.audio, cfg)
    k = args.clusters if args.clusters is not None else cfg.n_clusters
    seed = args.seed if args.seed is not None else cfg.seed
    model = fit_segmenter(
        corpus,
        k=k,
        seed=seed,
        frame_rate=cfg.frame_rate,
        max_iter=cfg.kmeans_max_iter,
        tol=cfg.kmeans_tol,
        silence_margin_db=cfg.silence_margin_db,
        voicing_threshold=cfg.voicing_threshold,
    )
    save_model(model, args.out)
    logger.info("trained segmenter with %d centroids -> %s", model.n_centroids, args.out)
    return EXIT_OK


def _cmd_segment(args, cfg: RunConfig) -> int:
    model = load_model(args.segmenter)
    gamma = args.gamma if args.gamma is not None else cfg.gamma
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def one(fpath: Path):
        try:
            feat = read_feature_matrix(fpath, frame_rate=cfg.frame_rate)
            typed = dp_segment(frame_log_probs(feat, model), gamma)
        except ValueError as exc:
            raise ValueError(f"{fpath}: {exc}") from exc
        out = out_dir / (fpath.stem + ".segments.json")
        out.write_text(json.dumps(segments_to_dicts(typed), indent=2) + "\n", encoding="utf-8")
        return out

    written = _map_jobs(one, _feature_paths(args.features), args.jobs)
    logger.info("wrote %d segmentations to %s", len(written), out_dir)
    return EXIT_OK


def _cmd_analyze(args, cfg: RunConfig) -> int:
    corpus = _load_corpus(args.features, args.audio, cfg)
    model = load_model(args.segmenter)
    gamma = args.gamma if args.gamma is not None else cfg.gamma
    profile = build_profile(
        corpus,
        model,
        speaker_id=args.speaker_id,
        frame_rate=cfg.frame_rate,
        gamma=gamma,
        min_samples=cfg.min_gamma_samples,
    )
    save_model(profile, args.out)
    logger.info(
        "speaker %s: %.3f syllables/s, %.3f sonorants/s",
        profile.speaker_id,
        profile.syllable_rate,
        profile.sonorant_rate,
    )
    report = rate_report([profile])
    out = Path(args.out)
    rates_out = Path(args.rates_out) if args.rates_out else out.with_suffix(".rates.tsv")
    densities_out = (
        Path(args.densities_out) if args.densities_out else out.with_suffix(".densities.tsv")
    )
    rates_out.write_text(report.rates_tsv(), encoding="utf-8")
    densities_out.write_text(report.densities_tsv(), encoding="utf-8")
    return EXIT_OK


def _cmd_convert(args, cfg: RunConfig) -> int:
    rhythm_mode = args.rhythm if args.rhythm is not None else "none"
    voice = (args.voice or "off") == "on"
    k = args.k if args.k is not None else cfg.k_neighbors
    gamma = args.gamma if args.gamma is not None else cfg.gamma
    interp = args.interp if args.interp is not None else cfg.stretch_interp

    src_profile = load_model(args.src_profile) if args.src_profile else None
    tgt_profile = load_model(args.tgt_profile) if args.tgt_profile else None
    segmenter = load_model(args.segmenter) if args.segmenter else None
    db = None
    if voice:
        if not args.db:
            raise ValueError("--voice on requires --db with target feature files")
        db = knn_index(
            [read_feature_matrix(p, frame_rate=cfg.frame_rate) for p in _feature_paths([args.db])],
            k=k,
        )

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def one(fpath: Path):
        start = time.perf_counter()
        try:
            feat = read_feature_matrix(fpath, frame_rate=cfg.frame_rate)
            wave = None
            if rhythm_mode == "syllable_fine":
                if not args.audio:
                    raise ValueError("syllable_fine rhythm conversion requires --audio")
                wave = load_audio(
                    _paired_audio(fpath, args.audio),
                    target_rate=cfg.sample_rate,
                    target_level_db=cfg.target_level_db,
                    resample_beta=cfg.resample_beta,
                )
            converted, plan = convert_pipeline(
                feat,
                wave,
                segmenter,
                src_profile,
                tgt_profile,
                rhythm_mode=rhythm_mode,
                voice=voice,
                db=db,
                k=k,
                gamma=gamma,
                factor_min=cfg.factor_min,
                factor_max=cfg.factor_max,
                interp=interp,
            )
        except ValueError as exc:
            raise ValueError(f"{fpath}: {exc}") from exc
        out_path = out_dir / fpath.name
        write_feature_matrix(converted, out_path)
        if plan is not None:
            plan_path = out_dir / (fpath.stem + ".plan.json")
            plan_path.write_text(json.dumps(plan.to_dicts(), indent=2) + "\n", encoding="utf-8")
        logger.info("converted %s in %.3f s", fpath.name, time.perf_counter() - start)
        return out_path

    written = _map_jobs(one, _feature_paths(args.features), args.jobs)
    logger.info("wrote %d converted files to %s", len(written), out_dir)
    return EXIT_OK


def _read_utterance_file(path: str) -> dict[str, str]:
    utterances: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        utt_id, sep, text = line.partition("\t")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected tab-separated id and text")
        utterances[utt_id.strip()] = text
    return utterances


def _cmd_wer(args, cfg: RunConfig) -> int:
    refs = _read_utterance_file(args.ref)
    hyps = _read_utterance_file(args.hyp)
    if set(refs) != set(hyps):
        missing = sorted(set(refs) ^ set(hyps))
        raise ValueError(f"reference/hypothesis id mismatch: {missing[:5]}")
    ids = list(refs)
    report = wer(
        [refs[i] for i in ids],
        [hyps[i] for i in ids],
        casefold=not args.no_casefold,
        strip_punct=not args.keep_punct,
    )
    lines = [
        "metric\tvalue",
        f"wer\t{report.wer:.4f}",
        f"substitutions\t{report.substitutions}",
        f"insertions\t{report.insertions}",
        f"deletions\t{report.deletions}",
        f"ref_words\t{report.ref_words}",
    ]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def _cmd_report(args, cfg: RunConfig) -> int:
    profiles = [load_model(p) for p in args.profiles]
    labels = args.labels
    report = rate_report(profiles, labels)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "rates.tsv").write_text(report.rates_tsv(), encoding="utf-8")
    (out_dir / "densities.tsv").write_text(report.densities_tsv(), encoding="utf-8")
    sys.stdout.write(report.rates_tsv())
    return EXIT_OK


def _cmd_envelope(args, cfg: RunConfig) -> int:
    wave = load_audio(
        args.audio,
        target_rate=cfg.sample_rate,
        target_level_db=cfg.target_level_db,
        resample_beta=cfg.resample_beta,
    )
    frame_rate = args.frame_rate if args.frame_rate is not None else cfg.frame_rate
    env = sonority_envelope(
        wave,
        frame_rate,
        n_bands=cfg.envelope_bands,
        lo_hz=cfg.envelope_lo_hz,
        hi_hz=cfg.envelope_hi_hz,
        smooth_hz=cfg.envelope_smooth_hz,
    )
    extrema = detect_extrema(
        env, prominence=cfg.peak_prominence, min_distance_s=cfg.min_peak_distance_s
    )
    text = dump_extrema(env, extrema)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rhythmvc", description=__doc__)
    parser.add_argument("--config", help="path to a JSON run configuration")
    parser.add_argument("--log-level", default="INFO")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train-segmenter", help="train the speech-type segmenter")
    p.add_argument("--features", nargs="+", required=True)
    p.add_argument("--audio", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--clusters", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_train_segmenter)

    p = sub.add_parser("segment", help="typed segmentation of feature files")
    p.add_argument("--features", nargs="+", required=True)
    p.add_argument("--segmenter", required=True)
    p.add_argument("--gamma", type=float)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("analyze", help="build a speaker rhythm profile")
    p.add_argument("--features", nargs="+", required=True)
    p.add_argument("--audio", required=True)
    p.add_argument("--segmenter", required=True)
    p.add_argument("--speaker-id", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--gamma", type=float)
    p.add_argument("--rates-out")
    p.add_argument("--densities-out")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("convert", help="rhythm and/or voice conversion of feature files")
    p.add_argument("--features", nargs="+", required=True)
    p.add_argument("--audio")
    p.add_argument("--segmenter")
    p.add_argument("--src-profile")
    p.add_argument("--tgt-profile")
    p.add_argument(
        "--rhythm",
        choices=["none", "syllable_global", "syllable_fine", "urhythmic_global", "urhythmic_fine"],
    )
    p.add_argument("--voice", choices=["on", "off"])
    p.add_argument("--db", help="directory or file with target-speaker features")
    p.add_argument("--k", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--interp", choices=["linear", "nearest"])
    p.add_argument("--out-dir", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=_cmd_convert)

    p = sub.add_parser("wer", help="score hypotheses against references")
    p.add_argument("--ref", required=True)
    p.add_argument("--hyp", required=True)
    p.add_argument("--no-casefold", action="store_true")
    p.add_argument("--keep-punct", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_wer)

    p = sub.add_parser("report", help="rate table and density samples for profiles")
    p.add_argument("--profiles", nargs="+", required=True)
    p.add_argument("--labels", nargs="+")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("envelope", help="dump the sonority envelope and extrema as TSV")
    p.add_argument("--audio", required=True)
    p.add_argument("--frame-rate", type=float)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_envelope)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=getattr(logging, args.log_level.upper(), logging.INFO))
    try:
        cfg = RunConfig.load(args.config)
        cfg.validate()
        return args.func(args, cfg)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
