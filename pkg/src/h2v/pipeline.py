"""End-to-end conversion: shots -> select -> track -> smooth -> plan.

Each shot is processed independently: the subject is selected at the
shot's first frame, tracked until a verification event or the shot end,
and re-selected whenever verification fires. Per-shot center tracks are
smoothed and turned into a rate-limited vertical crop plan.

Ablation switches: ``mode="per_frame"`` replaces tracking+smoothing with
frame-by-frame selection, and ``use_sbd=False`` treats the video as a
single shot.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .config import PipelineConfig, config_hash
from .errors import ConfigError, DataError
from .features import detect_bright_regions
from .geometry import BBox
from .media import AnnotationSet, CandidateSet, Frame, FrameSequence
from .metrics import VideoEvalResult, evaluate_video, gt_crop_window
from .plan import CropPlan, crop_window, plan_video
from .select import (
    NssHead,
    load_dss_model,
    load_rank_model,
    select_subject,
)
from .shots import detect_shots
from .track import ShotTracker, kalman_smooth

MODES = ("tracked", "per_frame")


def frame_id(t: int) -> str:
    return f"f{t:05d}"


@dataclass
class SelectionEvent:
    """One selection call and the verification cause that triggered it."""

    frame: int
    cause: str            # shot_start | low_confidence | coverage_violation |
                          # track_lost | per_frame
    chosen: int | None
    n_candidates: int
    fallback: bool

    def as_dict(self) -> dict:
        return {
            "event": "selection",
            "frame": self.frame,
            "cause": self.cause,
            "chosen": self.chosen,
            "n_candidates": self.n_candidates,
            "fallback": self.fallback,
        }


@dataclass
class ShotOutcome:
    shot: tuple[int, int]
    centers: list[tuple[float, float]]
    events: list[SelectionEvent]
    used_fallback: bool
    trail: list[dict] = field(default_factory=list)


@dataclass
class ConvertResult:
    plan: CropPlan
    shots: list[tuple[int, int]]
    events: list[SelectionEvent]
    mode: str
    config_digest: str
    fallback_shots: list[int] = field(default_factory=list)
    trajectory: list[dict] = field(default_factory=list)


def build_scorer(cfg: PipelineConfig, colorspace: str = "rgb"):
    """Scoring head named by cfg.head.kind; learned heads need cfg.model."""
    kind = cfg.head.kind
    if kind == "nss":
        return NssHead(cfg.head.nss_weights, cfg.head.raw_concat,
                       colorspace, cfg.head.grad_threshold)
    if cfg.model is None:
        raise ConfigError(f"head.kind={kind!r} needs a model file (cfg.model)")
    if kind == "dss":
        return load_dss_model(cfg.model, colorspace, cfg.head.grad_threshold)
    return load_rank_model(cfg.model, cfg.head.short_side, colorspace,
                           cfg.head.grad_threshold)


def candidate_boxes(candidates: CandidateSet | None, t: int, frame: Frame,
                    colorspace: str = "rgb") -> list[BBox]:
    """Candidate boxes for frame t: sidecar when given, else the builtin
    bright-region detector."""
    if candidates is not None:
        record = candidates.by_id.get(frame_id(t))
        if record is None:
            return []
        return [d.primary_box for d in record.detections]
    return [d.primary_box for d in
            detect_bright_regions(frame, colorspace)]


def _process_shot_tracked(seq: FrameSequence, shot: tuple[int, int],
                          scorer, candidates: CandidateSet | None,
                          cfg: PipelineConfig,
                          aspect: tuple[int, int]) -> ShotOutcome:
    s, e = shot
    width, height = seq.width, seq.height
    events: list[SelectionEvent] = []
    centers: list[tuple[float, float]] = []
    tracker: ShotTracker | None = None
    used_fallback = False

    def try_select(t: int, cause: str) -> None:
        nonlocal tracker, used_fallback
        boxes = candidate_boxes(candidates, t, seq.frames[t], seq.colorspace)
        if not boxes:
            events.append(SelectionEvent(t, cause, None, 0, True))
            tracker = None
            used_fallback = True
            return
        scores = scorer.score_boxes(seq.frames[t], boxes)
        idx = select_subject(scores, boxes)
        events.append(SelectionEvent(t, cause, idx, len(boxes), False))
        tracker = ShotTracker(seq.frames[t], boxes, idx,
                              cfg.tracker_params(), seq.colorspace)

    try_select(s, "shot_start")
    trail: list[dict] = []
    for t in range(s, e):
        if t > s and tracker is not None:
            tracker.step(seq.frames[t])
            cx, _ = tracker.primary.box.center()
            window, _ = crop_window(cx, width, height, aspect)
            event = tracker.needs_reselection(t, window.as_bbox())
            if event is not None:
                try_select(t, event.cause)
        if tracker is not None:
            centers.append(tracker.primary.box.center())
            entry = {"t": t, "box": tracker.primary.box.as_list(),
                     "conf": tracker.primary.confidence}
        else:
            centers.append((width / 2.0, height / 2.0))
            entry = {"t": t, "box": None, "conf": 0.0}
        if events and events[-1].frame == t:
            entry["event"] = events[-1].cause
        trail.append(entry)

    smoothed = kalman_smooth(centers, cfg.smoothing.sigma_p,
                             cfg.smoothing.sigma_m)
    return ShotOutcome(shot, smoothed, events, used_fallback, trail)


def _process_shot_per_frame(seq: FrameSequence, shot: tuple[int, int],
                            scorer, candidates: CandidateSet | None,
                            cfg: PipelineConfig) -> ShotOutcome:
    s, e = shot
    width, height = seq.width, seq.height
    events: list[SelectionEvent] = []
    centers: list[tuple[float, float]] = []
    used_fallback = False
    trail: list[dict] = []
    for t in range(s, e):
        boxes = candidate_boxes(candidates, t, seq.frames[t], seq.colorspace)
        if not boxes:
            events.append(SelectionEvent(t, "per_frame", None, 0, True))
            centers.append((width / 2.0, height / 2.0))
            used_fallback = True
            trail.append({"t": t, "box": None, "conf": 0.0,
                          "event": "per_frame"})
            continue
        scores = scorer.score_boxes(seq.frames[t], boxes)
        idx = select_subject(scores, boxes)
        events.append(SelectionEvent(t, "per_frame", idx, len(boxes), False))
        centers.append(boxes[idx].center())
        trail.append({"t": t, "box": boxes[idx].as_list(), "conf": 1.0,
                      "event": "per_frame"})
    return ShotOutcome(shot, centers, events, used_fallback, trail)


def convert_video(seq: FrameSequence, cfg: PipelineConfig,
                  candidates: CandidateSet | None = None,
                  scorer=None, mode: str = "tracked", use_sbd: bool = True,
                  shots: list[tuple[int, int]] | None = None,
                  log_fn=None) -> ConvertResult:
    """Plan a vertical crop for a whole video.

    ``shots`` overrides boundary detection when given. The result's plan
    carries the config hash, the shot list, and fallback flags in its
    provenance block, so two runs over identical inputs serialize to
    byte-identical JSON.
    """
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    if shots is None:
        shots = (detect_shots(seq, cfg.sbd_params()) if use_sbd
                 else [(0, len(seq))])
    scorer = scorer if scorer is not None else build_scorer(cfg, seq.colorspace)
    aspect = cfg.aspect_pair()

    def run(shot: tuple[int, int]) -> ShotOutcome:
        if mode == "per_frame":
            return _process_shot_per_frame(seq, shot, scorer, candidates, cfg)
        return _process_shot_tracked(seq, shot, scorer, candidates, cfg, aspect)

    if cfg.workers > 1 and len(shots) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(run, shots))
    else:
        outcomes = [run(shot) for shot in shots]

    centers_x: list[float] = []
    events: list[SelectionEvent] = []
    fallback_shots: list[int] = []
    trajectory: list[dict] = []
    for i, outcome in enumerate(outcomes):
        centers_x.extend(cx for cx, _ in outcome.centers)
        events.extend(outcome.events)
        trajectory.extend(outcome.trail)
        if outcome.used_fallback:
            fallback_shots.append(i)

    digest = config_hash(cfg)
    provenance = {
        "config": digest,
        "mode": mode,
        "sbd": use_sbd,
        "shots": [[s, e] for s, e in shots],
    }
    if fallback_shots:
        provenance["center_fallback_shots"] = fallback_shots
    plan = plan_video(centers_x, shots, seq.width, seq.height, aspect,
                      cfg.planner.max_slew, provenance)
    result = ConvertResult(plan=plan, shots=shots, events=events, mode=mode,
                           config_digest=digest,
                           fallback_shots=fallback_shots,
                           trajectory=trajectory)
    if log_fn is not None:
        log_fn({"event": "shots", "shots": [[s, e] for s, e in shots]})
        for event in events:
            log_fn(event.as_dict())
        if fallback_shots:
            log_fn({"event": "center_fallback",
                    "shots": fallback_shots})
    return result


# ---------------------------------------------------------------------------
# ground truth and evaluation wiring


def sorted_records(annotations: AnnotationSet):
    return sorted(annotations.records, key=lambda r: r.image_id)


def video_ground_truth(annotations: AnnotationSet, width: int, height: int,
                       aspect: tuple[int, int] = (9, 16)) -> list[list[BBox]]:
    """Per-frame ground-truth crop windows derived from subject boxes.

    Each main subject yields a full-height window of the target aspect
    horizontally centered on it.
    """
    gts = []
    for record in sorted_records(annotations):
        windows = [gt_crop_window(e.primary_box, width, height, aspect)
                   for e in record.main_subjects]
        if not windows:
            raise DataError(f"{record.image_id}: no main subject")
        gts.append(windows)
    return gts


def evaluate_plan(plan: CropPlan, annotations: AnnotationSet, width: int,
                  height: int) -> VideoEvalResult:
    gts = video_ground_truth(annotations, width, height, plan.aspect)
    crops = [w.as_bbox() for w in plan.windows]
    return evaluate_video(crops, gts, width)


def evaluate_image_selection(scorer, frames: dict[str, Frame],
                             annotations: AnnotationSet,
                             candidates: CandidateSet,
                             iou_threshold: float = 0.5):
    """Run a scorer over candidate sidecars and compare to annotations."""
    from .metrics import evaluate_images

    predictions: dict[str, BBox] = {}
    gt_boxes: dict[str, list[BBox]] = {}
    frame_dims: dict[str, tuple[float, float]] = {}
    for record in sorted_records(annotations):
        image_id = record.image_id
        if image_id not in frames:
            raise DataError(f"no frame loaded for annotation {image_id!r}")
        cand = candidates.by_id.get(image_id)
        if cand is None:
            raise DataError(f"no candidates for image {image_id!r}")
        boxes = [d.primary_box for d in cand.detections]
        if not boxes:
            raise DataError(f"empty candidate list for image {image_id!r}")
        scores = scorer.score_boxes(frames[image_id], boxes)
        idx = select_subject(scores, boxes)
        predictions[image_id] = boxes[idx]
        gt_boxes[image_id] = [e.primary_box for e in record.main_subjects]
        frame_dims[image_id] = (float(record.width), float(record.height))
    return evaluate_images(predictions, gt_boxes, frame_dims, iou_threshold)
