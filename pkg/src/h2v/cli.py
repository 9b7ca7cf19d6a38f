"""Command-line surface: shots, select, convert, train, eval, synth.

Exit codes: 0 success, 2 configuration problem, 3 bad input data,
4 internal fault. Progress and events go to stderr as JSON-lines;
result files carry the active config hash for provenance.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

from .config import (
    PipelineConfig,
    config_hash,
    load_config,
    parse_override,
    with_updates,
)
from .errors import ConfigError, DataError, H2VError
from .media import (
    Frame,
    Y4MWriter,
    _write_json,
    load_frame_sequence,
    parse_annotations,
    parse_candidates,
    parse_shots,
    read_image,
    write_annotations,
    write_candidates,
    write_image,
    write_pgm,
    write_shots,
    write_y4m,
)
from .pipeline import (
    build_scorer,
    convert_video,
    evaluate_image_selection,
    evaluate_plan,
    frame_id,
    sorted_records,
)
from .plan import crop_frame, parse_crop_plan, write_crop_plan
from .select import (
    TrainSample,
    save_dss_model,
    save_rank_model,
    select_subject,
    top1_accuracy,
    train_dss,
    train_rankss,
)
from .shots import detect_shots


def log_line(obj: dict) -> None:
    print(json.dumps(obj, sort_keys=True), file=sys.stderr, flush=True)


# ---------------------------------------------------------------------------
# shared input plumbing


def _build_config(args) -> PipelineConfig:
    cfg = load_config(getattr(args, "config", None))
    overrides = {}
    for text in getattr(args, "set", None) or []:
        key, value = parse_override(text)
        overrides[key] = value
    if getattr(args, "aspect", None):
        overrides["aspect"] = args.aspect
    if getattr(args, "model", None):
        overrides["model"] = args.model
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if overrides:
        cfg = with_updates(cfg, overrides)
    return cfg


def _frames_by_id(path: str) -> dict[str, Frame]:
    """Map image ids to frames.

    Directories key frames by file stem; video streams and single images
    key them by frame index as f00000, f00001, ...
    """
    p = Path(path)
    if p.is_dir():
        from .media import _IMAGE_SUFFIXES

        files = sorted(
            f for f in p.iterdir()
            if f.is_file() and f.suffix.lower() in _IMAGE_SUFFIXES
        )
        if not files:
            raise DataError(f"{path}: no image files found")
        return {f.stem: read_image(f) for f in files}
    seq = load_frame_sequence(path)
    return {frame_id(t): seq.frames[t] for t in range(len(seq))}


def _require(value, flag: str):
    if value is None:
        raise ConfigError(f"{flag} is required for this command")
    return value


def _uniform_dims(annotations) -> tuple[int, int]:
    dims = {(r.width, r.height) for r in annotations.records}
    if len(dims) != 1:
        raise DataError(f"annotations mix frame sizes: {sorted(dims)}")
    return next(iter(dims))


# ---------------------------------------------------------------------------
# subcommands


def cmd_shots(args) -> int:
    cfg = _build_config(args)
    seq = load_frame_sequence(args.input)
    shots = detect_shots(seq, cfg.sbd_params())
    _write_json({"shots": [[s, e] for s, e in shots],
                 "config": config_hash(cfg)}, args.out)
    log_line({"event": "shots", "count": len(shots),
              "shots": [[s, e] for s, e in shots]})
    return 0


def cmd_select(args) -> int:
    cfg = _build_config(args)
    frames = _frames_by_id(args.input)
    candidates = parse_candidates(args.candidates)
    scorer = build_scorer(cfg)

    dump_dir = None
    if args.dump_features:
        dump_dir = Path(args.dump_features)
        dump_dir.mkdir(parents=True, exist_ok=True)

    selections = []
    for record in sorted(candidates.records, key=lambda r: r.image_id):
        frame = frames.get(record.image_id)
        if frame is None:
            raise DataError(f"no frame for candidate id {record.image_id!r}")
        boxes = [d.primary_box for d in record.detections]
        entry = {"id": record.image_id, "chosen": None, "box": None,
                 "scores": []}
        if boxes:
            scores = scorer.score_boxes(frame, boxes)
            idx = select_subject(scores, boxes)
            entry.update(chosen=idx, box=boxes[idx].as_list(),
                         scores=[float(s) for s in scores])
        selections.append(entry)
        if dump_dir is not None:
            _dump_feature_maps(frame, record.image_id, dump_dir, cfg)

    _write_json({"config": config_hash(cfg), "selections": selections},
                args.out)
    log_line({"event": "select", "images": len(selections)})
    return 0


def _dump_feature_maps(frame: Frame, image_id: str, dump_dir: Path,
                       cfg: PipelineConfig) -> None:
    from .features import spectral_residual_saliency, tenengrad_map
    import numpy as np

    sal = spectral_residual_saliency(frame)
    sharp = tenengrad_map(frame, cfg.head.grad_threshold)
    for name, plane in (("saliency", sal), ("sharpness", sharp)):
        peak = float(np.max(plane))
        norm = plane / peak if peak > 0 else plane
        write_pgm(dump_dir / f"{image_id}_{name}.pgm", norm)


def cmd_convert(args) -> int:
    cfg = _build_config(args)
    seq = load_frame_sequence(args.input)
    candidates = (parse_candidates(args.candidates)
                  if args.candidates else None)
    shots = parse_shots(args.shots) if args.shots else None

    started = time.perf_counter()
    result = convert_video(
        seq, cfg,
        candidates=candidates,
        mode=args.mode,
        use_sbd=not args.no_sbd,
        shots=shots,
        log_fn=log_line,
    )
    elapsed = time.perf_counter() - started

    write_crop_plan(result.plan, args.out)
    if args.dump_track:
        _write_json({"config": result.config_digest,
                     "frames": result.trajectory}, args.dump_track)
    if args.render:
        _stream_render(seq, result.plan, args.render)
    log_line({"event": "timing", "frames": len(seq),
              "seconds": round(elapsed, 3),
              "fps": round(len(seq) / elapsed, 2) if elapsed > 0 else None})
    return 0


def _stream_render(seq, plan, path: str) -> None:
    win = plan.windows[0]
    even = win.w % 2 == 0 and win.h % 2 == 0
    sub = "420" if seq.colorspace == "yuv420" and even else "444"
    with Y4MWriter(path, win.w, win.h, seq.fps, seq.colorspace, sub) as out:
        for i, frame in enumerate(seq.frames):
            out.write(crop_frame(frame, plan.windows[i], i))


def cmd_train(args) -> int:
    cfg = _build_config(args)
    annotations = parse_annotations(_require(args.annotations, "--annotations"))
    frames = _frames_by_id(_require(args.frames, "--frames"))
    samples = []
    for record in sorted_records(annotations):
        frame = frames.get(record.image_id)
        if frame is None:
            raise DataError(f"no frame for annotation id {record.image_id!r}")
        samples.append(TrainSample.from_annotation(frame, record))
    log_line({"event": "dataset", "images": len(samples)})

    if args.mode == "nss":
        if args.out:
            raise ConfigError(
                "the fixed-weight head has no parameters to save; "
                "drop --out for --mode nss")
        scorer = build_scorer(replace(cfg, head=replace(cfg.head, kind="nss"),
                                      model=None))
        top1 = top1_accuracy(scorer.score_boxes, samples)
        log_line({"event": "summary", "mode": "nss", "top1": round(top1, 4),
                  "config": config_hash(cfg)})
        return 0

    out = _require(args.out, "--out")
    if args.mode == "dss":
        if args.labels:
            log_line({"event": "warn",
                      "message": "--labels only affects rankss training"})
        result = train_dss(samples, cfg.dss_train_params(), log_fn=log_line)
        save_dss_model(result.head, out)
        summary = {"event": "summary", "mode": "dss",
                   "epochs": len(result.history)}
    else:
        params = cfg.rank_train_params()
        if args.labels:
            params = replace(params, mode=args.labels)
        result = train_rankss(samples, params, log_fn=log_line)
        save_rank_model(result.selector, out)
        summary = {"event": "summary", "mode": "rankss",
                   "labels": params.mode, "epochs": len(result.history),
                   "final_violation_rate": round(result.final_violation_rate,
                                                 6)}
    summary.update(model=str(out), config=config_hash(cfg))
    log_line(summary)
    return 0


def cmd_eval(args) -> int:
    cfg = _build_config(args)
    annotations = parse_annotations(_require(args.annotations, "--annotations"))

    if args.mode == "image":
        frames = _frames_by_id(_require(args.frames, "--frames"))
        candidates = parse_candidates(_require(args.candidates,
                                               "--candidates"))
        scorer = build_scorer(cfg)
        report = evaluate_image_selection(scorer, frames, annotations,
                                          candidates)
        body = report.as_dict()
        row = {"method": cfg.head.kind, "max_iou": report.mean_max_iou,
               "min_cdr": report.mean_min_cdr,
               "min_bde": report.mean_min_bde, "map@0.5": report.map50}
        columns = ["method", "max_iou", "min_cdr", "min_bde", "map@0.5"]
    else:
        plan = parse_crop_plan(_require(args.plan, "--plan"))
        width, height = _uniform_dims(annotations)
        result = evaluate_plan(plan, annotations, width, height)
        body = result.as_dict()
        row = {"method": cfg.head.kind, "avg_min_cdr": result.avg_min_cdr,
               "jdr": result.jdr, "recall": result.recall}
        if args.fps is not None:
            row["fps"] = args.fps
        columns = ["method", "avg_min_cdr", "jdr", "recall", "fps"]

    body["config"] = config_hash(cfg)
    if args.report:
        _write_json(body, args.report)
    if args.csv:
        from .metrics import report_csv

        Path(args.csv).write_text(report_csv([row], columns))
    log_line({"event": "eval", **{k: v for k, v in body.items()
                                  if k not in ("per_image",)}})
    return 0


def cmd_synth(args) -> int:
    from . import synth

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {"kind": args.kind, "seed": args.seed}

    if args.kind == "images":
        dataset = synth.ImageDataset(args.n, args.seed, args.width,
                                     args.height)
        frames_dir = out_dir / "frames"
        frames_dir.mkdir(exist_ok=True)
        ann_records = []
        cand_records = []
        for frame, record, cand in dataset.iter_samples():
            write_image(frame, frames_dir / f"{record.image_id}.png")
            ann_records.append(record)
            cand_records.append(cand)
        from .media import AnnotationSet, CandidateSet

        write_annotations(AnnotationSet(ann_records),
                          out_dir / "annotations.json")
        write_candidates(CandidateSet(cand_records),
                         out_dir / "candidates.json")
        manifest["images"] = len(ann_records)
    elif args.kind == "video":
        video = synth.make_multishot_video(
            seed=args.seed, n_shots=args.n,
            candidate_jitter=args.jitter, motion=args.motion)
        write_y4m(video.seq, out_dir / "video.y4m")
        write_annotations(video.annotations, out_dir / "annotations.json")
        write_candidates(video.candidates, out_dir / "candidates.json")
        write_shots(video.shots, out_dir / "shots.json")
        manifest.update(shots=len(video.shots), frames=len(video.seq))
    else:
        seq = synth.make_crossfade_video(args.seed)
        write_y4m(seq, out_dir / "video.y4m")
        manifest["frames"] = len(seq)

    _write_json(manifest, out_dir / "manifest.json")
    log_line({"event": "synth", **manifest})
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="pipeline config JSON")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config key (repeatable)")

    parser = argparse.ArgumentParser(
        prog="h2v",
        description="Convert horizontal video to vertical by "
                    "subject-preserving cropping.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("shots", parents=[common],
                       help="detect hard cuts and write shot spans")
    p.add_argument("--in", dest="input", required=True,
                   help="video (.y4m) or image directory")
    p.add_argument("--out", required=True, help="shots JSON path")
    p.set_defaults(func=cmd_shots)

    p = sub.add_parser("select", parents=[common],
                       help="score candidate boxes and pick a subject "
                            "per image")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--candidates", required=True, help="candidate JSON")
    p.add_argument("--out", required=True, help="selections JSON path")
    p.add_argument("--model", help="model checkpoint for learned heads")
    p.add_argument("--dump-features", metavar="DIR",
                   help="write saliency/sharpness maps as PGM")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("convert", parents=[common],
                       help="plan (and optionally render) a vertical crop")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True, help="crop plan JSON path")
    p.add_argument("--candidates", help="candidate JSON sidecar")
    p.add_argument("--shots", help="shots JSON overriding detection")
    p.add_argument("--model", help="model checkpoint for learned heads")
    p.add_argument("--mode", choices=("tracked", "per_frame"),
                   default="tracked")
    p.add_argument("--no-sbd", action="store_true",
                   help="treat the whole video as one shot")
    p.add_argument("--aspect", help="output aspect, e.g. 9:16")
    p.add_argument("--render", metavar="OUT.y4m",
                   help="write the cropped video")
    p.add_argument("--dump-track", metavar="OUT.json",
                   help="write the per-frame trajectory")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("train", parents=[common],
                       help="train a subject-selection head")
    p.add_argument("--mode", choices=("nss", "dss", "rankss"), required=True)
    p.add_argument("--labels", choices=("soft", "hard"),
                   help="pair supervision for rankss")
    p.add_argument("--frames", help="image directory or video")
    p.add_argument("--annotations", help="annotation JSON")
    p.add_argument("--out", help="checkpoint path")
    p.add_argument("--seed", type=int, help="override config seed")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common],
                       help="score selections or a crop plan against "
                            "annotations")
    p.add_argument("--mode", choices=("image", "video"), required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--frames", help="image mode: frames source")
    p.add_argument("--candidates", help="image mode: candidate JSON")
    p.add_argument("--model", help="model checkpoint for learned heads")
    p.add_argument("--plan", help="video mode: crop plan JSON")
    p.add_argument("--fps", type=float,
                   help="video mode: fill the throughput column")
    p.add_argument("--report", help="report JSON path")
    p.add_argument("--csv", help="summary table path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", parents=[common],
                       help="generate synthetic data")
    p.add_argument("--kind", choices=("images", "video", "crossfade"),
                   required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n", type=int, default=100,
                   help="image count or shot count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--width", type=int, default=192)
    p.add_argument("--height", type=int, default=108)
    p.add_argument("--motion", type=float, default=0.0,
                   help="video kind: main-actor drift in px/frame")
    p.add_argument("--jitter", type=float, default=0.0,
                   help="video kind: candidate box noise in px")
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except H2VError as e:
        log_line({"event": "error", "kind": type(e).__name__,
                  "message": str(e)})
        return e.exit_code
    except Exception as e:  # noqa: BLE001  a bug, not bad input
        log_line({"event": "error", "kind": "InternalFault",
                  "message": f"{type(e).__name__}: {e}"})
        return 4


if __name__ == "__main__":
    sys.exit(main())
