"""Synthetic scene generator for training and benchmark fixtures.

Scenes hold textured rectangular actors on a noisy background. Each
actor has a position, scale, blur level, facing flag and linear motion
path. Ground-truth subject ranks come from a fixed composite of four
cues, so generated labels always follow the documented selection rule:

    composite = 0.3 * centrality + 0.2 * sharpness
              + 0.3 * relative size + 0.2 * facing

The actor maximizing the composite is rank 0; the rest follow in
descending composite order. Rendering is fully deterministic for a
given (spec, seed) pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, EmptyInputError, InternalFault
from .features import _box_filter_reflect, position_term
from .geometry import BBox, iou
from .media import (
    AnnotationRecord,
    AnnotationSet,
    CandidateRecord,
    CandidateSet,
    Detection,
    Frame,
    FrameSequence,
    SubjectEntry,
)

COMPOSITE_WEIGHTS = {
    "central": 0.3,
    "focal": 0.2,
    "proportional": 0.3,
    "postural": 0.2,
}
AREA_SATURATION = 0.18       # body area fraction that counts as "large"
FACE_HEIGHT = 0.30           # face box fraction of body height
FACE_WIDTH = 0.60            # face box fraction of body width

_PALETTE = [
    (0.62, 0.38, 0.30),
    (0.30, 0.52, 0.62),
    (0.40, 0.58, 0.34),
    (0.58, 0.50, 0.26),
    (0.48, 0.34, 0.58),
    (0.30, 0.56, 0.52),
]


@dataclass(frozen=True)
class ActorSpec:
    """One synthetic actor: geometry, appearance and motion."""

    position: tuple[float, float]    # top-left as fraction of frame dims
    scale: float                     # body height as fraction of frame height
    blur: float = 0.0                # 0 = sharp, 1 = strongest blur
    facing: bool = True
    motion: tuple[float, float] = (0.0, 0.0)   # px per frame
    bounce: bool = False             # reflect the path off the frame edges
    visible: tuple[int, int] | None = None     # [t0, t1) frame range
    aspect: float = 0.42             # body width / height
    palette: int = 0
    texture_seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.scale <= 1.0:
            raise ConfigError(f"actor scale {self.scale} outside (0, 1]")
        if not 0.0 <= self.blur <= 1.0:
            raise ConfigError(f"actor blur {self.blur} outside [0, 1]")
        if self.aspect <= 0:
            raise ConfigError("actor aspect must be positive")

    def body_box(self, width: int, height: int, t: int = 0) -> BBox:
        h = max(int(round(self.scale * height)), 8)
        w = max(int(round(self.aspect * h)), 6)
        px = self.position[0] * width + self.motion[0] * t
        py = self.position[1] * height + self.motion[1] * t
        if self.bounce:
            px = _fold(px, 0.0, float(width - w))
            py = _fold(py, 0.0, float(height - h))
        return BBox(float(int(round(px))), float(int(round(py))),
                    float(w), float(h))

    def face_box(self, width: int, height: int, t: int = 0) -> BBox | None:
        if not self.facing:
            return None
        body = self.body_box(width, height, t)
        fw = max(int(round(body.w * FACE_WIDTH)), 4)
        fh = max(int(round(body.h * FACE_HEIGHT)), 4)
        fx = int(round(body.x + (body.w - fw) / 2))
        fy = int(round(body.y + 0.06 * body.h))
        return BBox(float(fx), float(fy), float(fw), float(fh))

    def visible_at(self, t: int) -> bool:
        if self.visible is None:
            return True
        return self.visible[0] <= t < self.visible[1]


@dataclass(frozen=True)
class SceneSpec:
    """Synthetic clip description: dims, actors, background, length."""

    width: int = 192
    height: int = 108
    actors: tuple[ActorSpec, ...] = ()
    bg_level: float = 0.12
    bg_tint: tuple[float, float, float] = (1.0, 1.0, 1.0)
    n_frames: int = 1

    def __post_init__(self):
        if self.width < 32 or self.height < 32:
            raise ConfigError(
                f"scene dims {self.width}x{self.height} below 32x32")
        if self.n_frames < 1:
            raise ConfigError("scene needs at least one frame")
        if not self.actors:
            raise ConfigError("scene needs at least one actor")
        if not 0.0 <= self.bg_level <= 0.8:
            raise ConfigError("bg_level must be in [0, 0.8]")


def _fold(value: float, lo: float, hi: float) -> float:
    """Reflect a coordinate into [lo, hi] (triangular folding)."""
    span = hi - lo
    if span <= 0:
        return lo
    m = (value - lo) % (2.0 * span)
    return lo + (span - abs(m - span))


# ---------------------------------------------------------------------------
# ground-truth attributes


def actor_attributes(actor: ActorSpec, width: int, height: int,
                     t: int = 0) -> dict[str, float]:
    body = actor.body_box(width, height, t)
    return {
        "central": position_term(body, width, height),
        "focal": 1.0 - actor.blur,
        "proportional": min(1.0, body.area() / (AREA_SATURATION * width * height)),
        "postural": 1.0 if actor.facing else 0.0,
    }


def composite_score(actor: ActorSpec, width: int, height: int,
                    t: int = 0) -> float:
    attrs = actor_attributes(actor, width, height, t)
    return sum(COMPOSITE_WEIGHTS[k] * attrs[k] for k in COMPOSITE_WEIGHTS)


def scene_composites(spec: SceneSpec, t: int = 0) -> np.ndarray:
    return np.array([composite_score(a, spec.width, spec.height, t)
                     for a in spec.actors])


def scene_ranks(spec: SceneSpec, t: int = 0) -> np.ndarray:
    """Rank per actor (0 = highest composite), ties broken by actor index."""
    comps = scene_composites(spec, t)
    order = sorted(range(len(comps)), key=lambda i: (-comps[i], i))
    ranks = np.zeros(len(comps), dtype=int)
    for r, i in enumerate(order):
        ranks[i] = r
    return ranks


# ---------------------------------------------------------------------------
# rendering


def _body_texture(h: int, w: int, palette: int,
                  rng: np.random.Generator) -> np.ndarray:
    base = np.array(_PALETTE[palette % len(_PALETTE)])
    period = rng.uniform(5.0, 9.0)
    phase = rng.uniform(0.0, period)
    xx = np.arange(w)[None, :] + np.zeros((h, 1))
    stripes = 0.5 + 0.5 * np.sin(2 * math.pi * (xx + phase) / period)
    tex = base[None, None, :] * (0.45 + 0.55 * stripes)[..., None]
    tex = tex + rng.normal(0.0, 0.02, (h, w, 3))
    return np.clip(tex, 0.0, 1.0)


def _face_texture(h: int, w: int, rng: np.random.Generator) -> np.ndarray:
    cell = 2
    yy = (np.arange(h)[:, None] // cell) % 2
    xx = (np.arange(w)[None, :] // cell) % 2
    checker = (yy + xx) % 2
    tex = np.where(checker[..., None] == 1, 0.95, 0.25)
    tex = tex * np.ones((h, w, 3))
    tex = tex + rng.normal(0.0, 0.015, (h, w, 3))
    return np.clip(tex, 0.0, 1.0)


def _blur_patch(patch: np.ndarray, blur: float) -> np.ndarray:
    radius = int(round(3 * blur))
    if radius <= 0:
        return patch
    out = np.empty_like(patch)
    for c in range(patch.shape[2]):
        out[:, :, c] = _box_filter_reflect(patch[:, :, c], radius)
    return out


def _actor_patch(actor: ActorSpec, width: int, height: int) -> np.ndarray:
    """Stable per-actor appearance; independent of position and time."""
    body = actor.body_box(width, height, 0)
    h, w = int(body.h), int(body.w)
    rng = np.random.default_rng(np.random.SeedSequence([actor.texture_seed, 5]))
    patch = _body_texture(h, w, actor.palette, rng)
    face = actor.face_box(width, height, 0)
    if face is not None:
        fx = int(face.x - body.x)
        fy = int(face.y - body.y)
        fw, fh = int(face.w), int(face.h)
        patch[fy:fy + fh, fx:fx + fw] = _face_texture(fh, fw, rng)
    return _blur_patch(patch, actor.blur)


def _validate_fit(spec: SceneSpec) -> None:
    for i, actor in enumerate(spec.actors):
        for t in range(spec.n_frames):
            if not actor.visible_at(t):
                continue
            box = actor.body_box(spec.width, spec.height, t)
            if (box.x < 0 or box.y < 0 or box.right > spec.width
                    or box.bottom > spec.height):
                raise ConfigError(
                    f"actor {i} does not fit the frame at t={t}: "
                    f"{box.as_list()} in {spec.width}x{spec.height}"
                )


@dataclass
class SynthClip:
    """Rendered scene plus its ground truth and detector-style sidecar."""

    spec: SceneSpec
    seq: FrameSequence
    annotations: AnnotationSet
    candidates: CandidateSet

    def frame_id(self, t: int) -> str:
        return f"f{t:05d}"

    def subject_box(self, t: int) -> BBox:
        record = self.annotations.records[t]
        return record.main_subjects[0].primary_box


def gen_synthetic(spec: SceneSpec, seed, candidate_jitter: float = 0.0,
                  conf_range: tuple[float, float] = (0.7, 0.99)) -> SynthClip:
    """Render a scene spec into frames, annotations, and candidates.

    ``seed`` may be an int or a list of ints. Candidate boxes equal the
    true actor boxes in shuffled order, optionally jittered by up to
    ``candidate_jitter`` pixels, with confidences drawn uniformly.
    """
    _validate_fit(spec)
    entropy = seed if isinstance(seed, (list, tuple)) else [seed]
    root = np.random.SeedSequence(list(entropy))
    bg_rng = np.random.default_rng(root.spawn(1)[0])
    cand_rng = np.random.default_rng(root.spawn(1)[0])

    tint = np.array(spec.bg_tint)
    bg = spec.bg_level * tint[None, None, :] + bg_rng.normal(
        0.0, 0.02, (spec.height, spec.width, 3))
    bg = np.clip(bg, 0.0, 1.0)
    patches = [_actor_patch(a, spec.width, spec.height) for a in spec.actors]

    frames = []
    records = []
    cand_records = []
    for t in range(spec.n_frames):
        img = bg.copy()
        entries = []
        boxes_now = []
        ranks = scene_ranks(spec, t)
        for actor, patch in zip(spec.actors, patches):
            if not actor.visible_at(t):
                continue
            body = actor.body_box(spec.width, spec.height, t)
            x, y = int(body.x), int(body.y)
            h, w = patch.shape[:2]
            img[y:y + h, x:x + w] = patch
            boxes_now.append((actor, body))
        frames.append(Frame.from_array(img))

        visible_idx = [i for i, a in enumerate(spec.actors) if a.visible_at(t)]
        vis_ranks = sorted(range(len(visible_idx)),
                           key=lambda k: ranks[visible_idx[k]])
        order = np.zeros(len(visible_idx), dtype=int)
        for r, k in enumerate(vis_ranks):
            order[k] = r
        for k, i in enumerate(visible_idx):
            actor = spec.actors[i]
            entries.append(SubjectEntry(
                rank=int(order[k]),
                face=actor.face_box(spec.width, spec.height, t),
                body=actor.body_box(spec.width, spec.height, t),
            ))
        if not entries:
            raise ConfigError(f"no visible actors at frame {t}")
        records.append(AnnotationRecord(
            image_id=f"f{t:05d}", width=spec.width, height=spec.height,
            entries=entries))

        det_order = cand_rng.permutation(len(entries))
        detections = []
        for k in det_order:
            e = entries[k]
            conf = float(cand_rng.uniform(*conf_range))
            face, body = e.face, e.body
            if candidate_jitter > 0:
                face = _jitter_box(face, candidate_jitter, cand_rng,
                                   spec.width, spec.height)
                body = _jitter_box(body, candidate_jitter, cand_rng,
                                   spec.width, spec.height)
            detections.append(Detection(conf=conf, face=face, body=body))
        cand_records.append(CandidateRecord(
            image_id=f"f{t:05d}", width=spec.width, height=spec.height,
            detections=detections))

    return SynthClip(
        spec=spec,
        seq=FrameSequence(frames),
        annotations=AnnotationSet(records),
        candidates=CandidateSet(cand_records),
    )


def _jitter_box(box: BBox | None, amount: float, rng: np.random.Generator,
                width: int, height: int) -> BBox | None:
    if box is None:
        return None
    dx = rng.uniform(-amount, amount)
    dy = rng.uniform(-amount, amount)
    return BBox(box.x + dx, box.y + dy, box.w, box.h).clamped(width, height)


# ---------------------------------------------------------------------------
# random scene sampling (image datasets)


def sample_actor(rng: np.random.Generator, width: int, height: int,
                 texture_seed: int) -> ActorSpec:
    scale = float(rng.uniform(0.32, 0.85))
    aspect = float(rng.uniform(0.36, 0.5))
    h = max(int(round(scale * height)), 8)
    w = max(int(round(aspect * h)), 6)
    fx = float(rng.uniform(0.0, (width - w) / width))
    fy = float(rng.uniform(0.02, max((height - h) / height - 0.01, 0.03)))
    blur = 0.0 if rng.uniform() < 0.5 else float(rng.uniform(0.3, 1.0))
    return ActorSpec(
        position=(fx, fy),
        scale=scale,
        blur=blur,
        facing=bool(rng.uniform() < 0.5),
        aspect=aspect,
        palette=int(rng.integers(len(_PALETTE))),
        texture_seed=texture_seed,
    )


def sample_scene(rng: np.random.Generator, width: int = 192,
                 height: int = 108, n_actors: int | None = None,
                 margin: float = 0.05, max_tries: int = 200) -> SceneSpec:
    """Random static scene whose top-2 composite gap is at least ``margin``."""
    for attempt in range(max_tries):
        n = n_actors if n_actors is not None else int(
            rng.choice([1, 2, 3, 4], p=[0.1, 0.4, 0.3, 0.2]))
        actors: list[ActorSpec] = []
        ok = True
        for k in range(n):
            placed = False
            for _ in range(30):
                cand = sample_actor(rng, width, height,
                                    int(rng.integers(1 << 30)))
                body = cand.body_box(width, height)
                if (body.right > width or body.bottom > height
                        or body.x < 0 or body.y < 0):
                    continue
                if all(iou(body, a.body_box(width, height)) <= 0.25
                       for a in actors):
                    actors.append(cand)
                    placed = True
                    break
            if not placed:
                ok = False
                break
        if not ok:
            continue
        spec = SceneSpec(width=width, height=height, actors=tuple(actors),
                         bg_level=float(rng.uniform(0.08, 0.18)))
        comps = np.sort(scene_composites(spec))[::-1]
        if len(comps) == 1 or comps[0] - comps[1] >= margin:
            return spec
    raise InternalFault(
        f"could not sample a scene with margin {margin} in {max_tries} tries")


class ImageDataset:
    """Deterministic lazily-rendered image dataset with labels.

    ``sample(i)`` is independent of access order: every image derives its
    randomness from (seed, i) alone.
    """

    def __init__(self, n: int, seed: int = 0, width: int = 192,
                 height: int = 108):
        if n < 1:
            raise EmptyInputError("dataset needs at least one image")
        self.n = int(n)
        self.seed = int(seed)
        self.width = int(width)
        self.height = int(height)

    def __len__(self) -> int:
        return self.n

    def spec(self, i: int) -> SceneSpec:
        rng = np.random.default_rng(np.random.SeedSequence([self.seed, i, 0]))
        return sample_scene(rng, self.width, self.height)

    def sample(self, i: int) -> tuple[Frame, AnnotationRecord, CandidateRecord]:
        if not 0 <= i < self.n:
            raise EmptyInputError(f"index {i} outside dataset of {self.n}")
        clip = gen_synthetic(self.spec(i), [self.seed, i, 1])
        frame = clip.seq.frames[0]
        record = replace(clip.annotations.records[0], image_id=f"img{i:05d}")
        cand = replace(clip.candidates.records[0], image_id=f"img{i:05d}")
        return frame, record, cand

    def iter_samples(self, indices=None):
        for i in (range(self.n) if indices is None else indices):
            yield self.sample(i)


# ---------------------------------------------------------------------------
# video fixtures


@dataclass
class TrackingVideo:
    seq: FrameSequence
    boxes: list[BBox | None]     # ground-truth subject box per frame
    kind: str
    clip: SynthClip = field(repr=False)


def make_tracking_video(kind: str, seed: int = 0, n_frames: int = 40,
                        width: int = 192, height: int = 108) -> TrackingVideo:
    """Single-actor clip with a known motion pattern.

    kinds: ``static`` (no motion), ``linear`` (3 px/frame rightwards),
    ``disappear`` (static, removed from frame 15 on).
    """
    base = ActorSpec(position=(0.12, 0.2), scale=0.55, facing=True,
                     texture_seed=seed * 7 + 3)
    if kind == "static":
        actor = replace(base, position=(0.4, 0.2))
    elif kind == "linear":
        actor = replace(base, motion=(3.0, 0.0))
        end = base.position[0] * width + 3.0 * (n_frames - 1)
        if end + base.body_box(width, height).w >= width:
            raise ConfigError(
                f"{n_frames} frames at 3 px/frame leave the {width} px frame")
    elif kind == "disappear":
        actor = replace(base, position=(0.4, 0.2), visible=(0, 15))
    else:
        raise ConfigError(f"unknown tracking video kind {kind!r}")

    backdrop = ActorSpec(position=(0.78, 0.55), scale=0.34, facing=False,
                         blur=0.8, texture_seed=seed * 7 + 11, palette=3)
    spec = SceneSpec(width=width, height=height,
                     actors=(actor, backdrop), n_frames=n_frames)
    clip = gen_synthetic(spec, [seed, 90])
    boxes: list[BBox | None] = []
    for t in range(n_frames):
        boxes.append(actor.body_box(width, height, t)
                     if actor.visible_at(t) else None)
    return TrackingVideo(seq=clip.seq, boxes=boxes, kind=kind, clip=clip)


@dataclass
class MultiShotVideo:
    seq: FrameSequence
    shots: list[tuple[int, int]]
    annotations: AnnotationSet
    candidates: CandidateSet
    subject_boxes: list[BBox]    # rank-0 box per frame

    @property
    def boundaries(self) -> list[int]:
        return [s for s, _ in self.shots[1:]]


def make_multishot_video(seed: int = 0, n_shots: int = 3,
                         shot_len: tuple[int, int] = (10, 18),
                         width: int = 160, height: int = 96,
                         candidate_jitter: float = 0.0,
                         motion: float = 0.0,
                         bounce: bool = False,
                         actors_per_shot: tuple[int, int] = (1, 2)
                         ) -> MultiShotVideo:
    """Hard-cut concatenation of independently sampled scenes.

    Consecutive shots cycle through distinct background tints and levels
    so cuts are unambiguous. ``motion`` adds a horizontal drift to every
    shot's main actor; with ``bounce`` the drift reflects off the frame
    edges instead of stopping short.
    """
    if n_shots < 1:
        raise ConfigError("need at least one shot")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 40]))
    tints = [(1.0, 0.75, 0.55), (0.55, 0.8, 1.0), (0.65, 1.0, 0.7),
             (1.0, 0.65, 0.9)]
    levels = [0.10, 0.30, 0.20, 0.38]

    scenes = []
    for k in range(n_shots):
        length = int(rng.integers(shot_len[0], shot_len[1] + 1))
        lo, hi = actors_per_shot
        scene = sample_scene(rng, width, height,
                             n_actors=int(rng.integers(lo, hi + 1)))
        if motion:
            main = int(np.argmin(scene_ranks(scene)))
            actors = list(scene.actors)
            a = actors[main]
            body = a.body_box(width, height)
            vx = motion if body.center()[0] < width / 2 else -motion
            if bounce:
                actors[main] = replace(a, motion=(vx, 0.0), bounce=True)
            else:
                span = vx * (length - 1)
                if body.x + span < 0 or body.right + span > width:
                    vx = -vx
                actors[main] = replace(a, motion=(vx, 0.0))
            scene = replace(scene, actors=tuple(actors))
        scenes.append(replace(scene, n_frames=length,
                              bg_tint=tints[k % len(tints)],
                              bg_level=levels[k % len(levels)]))
    return _concat_scenes(scenes, seed, 41, candidate_jitter)


def _concat_scenes(scenes: list[SceneSpec], seed: int, tag: int,
                   candidate_jitter: float) -> MultiShotVideo:
    """Render each scene and join them into one hard-cut video."""
    frames = []
    shots = []
    records = []
    cand_records = []
    subject_boxes: list[BBox] = []
    t0 = 0
    for k, scene in enumerate(scenes):
        length = scene.n_frames
        clip = gen_synthetic(scene, [seed, tag, k],
                             candidate_jitter=candidate_jitter)
        frames.extend(clip.seq.frames)
        for t in range(length):
            gt = t0 + t
            records.append(replace(clip.annotations.records[t],
                                   image_id=f"f{gt:05d}"))
            cand_records.append(replace(clip.candidates.records[t],
                                        image_id=f"f{gt:05d}"))
            subject_boxes.append(clip.subject_box(t))
        shots.append((t0, t0 + length))
        t0 += length

    return MultiShotVideo(
        seq=FrameSequence(frames),
        shots=shots,
        annotations=AnnotationSet(records),
        candidates=CandidateSet(cand_records),
        subject_boxes=subject_boxes,
    )


def make_ablation_video(seed: int = 0, n_shots: int = 3,
                        shot_len: tuple[int, int] = (16, 20),
                        velocity: float = 5.0,
                        candidate_jitter: float = 1.0) -> MultiShotVideo:
    """Multi-shot video tuned to expose smoothing trade-offs.

    Each shot holds one wide actor bouncing horizontally. The frame and
    actor widths are chosen so the actor's center sweeps exactly the
    range where the output window moves freely, so direction reversals
    land mid-frame where they show up in the metrics instead of being
    absorbed by window clamping.
    """
    width, height = 112, 96
    rng = np.random.default_rng(np.random.SeedSequence([seed, 45]))
    tints = [(1.0, 0.75, 0.55), (0.55, 0.8, 1.0), (0.65, 1.0, 0.7),
             (1.0, 0.65, 0.9)]
    levels = [0.10, 0.30, 0.20, 0.38]

    scenes = []
    for k in range(n_shots):
        length = int(rng.integers(shot_len[0], shot_len[1] + 1))
        fx = float(rng.uniform(0.05, 0.45))
        vx = velocity if k % 2 == 0 else -velocity
        actor = ActorSpec(
            position=(fx, 0.18),
            scale=0.62,
            blur=0.0,
            facing=True,
            motion=(vx, 0.0),
            bounce=True,
            aspect=0.9,
            palette=k % len(_PALETTE),
            texture_seed=int(rng.integers(0, 2**31)),
        )
        scenes.append(SceneSpec(width=width, height=height, actors=(actor,),
                                bg_tint=tints[k % len(tints)],
                                bg_level=levels[k % len(levels)],
                                n_frames=length))
    return _concat_scenes(scenes, seed, 46, candidate_jitter)


def make_crossfade_video(seed: int = 0, pre: int = 14, fade: int = 10,
                         post: int = 14, width: int = 160,
                         height: int = 96) -> FrameSequence:
    """Two scenes joined by a linear crossfade; contains no hard cut."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 60]))
    a = sample_scene(rng, width, height)
    b = sample_scene(rng, width, height)
    b = replace(b, bg_tint=(0.6, 0.8, 1.0), bg_level=0.3)
    fa = gen_synthetic(a, [seed, 61]).seq.frames[0]
    fb = gen_synthetic(b, [seed, 62]).seq.frames[0]
    frames = [fa] * pre
    for k in range(fade):
        alpha = (k + 1) / (fade + 1)
        mix = (1 - alpha) * fa.data + alpha * fb.data
        frames.append(Frame.from_array(mix))
    frames.extend([fb] * post)
    return FrameSequence(frames)


@dataclass
class JitterBenchmark:
    """Pixel-free smoothing benchmark: a smooth path plus noisy estimates."""

    width: int
    height: int
    true_centers: list[tuple[float, float]]
    noisy_centers: list[tuple[float, float]]
    subject_boxes: list[BBox]


def make_jitter_benchmark(seed: int = 0, n_frames: int = 90,
                          width: int = 1920, height: int = 1080,
                          velocity: float = 1.2, jitter: float = 4.0,
                          box_size: tuple[float, float] = (220.0, 520.0)
                          ) -> JitterBenchmark:
    """Linear horizontal drift observed through uniform +-jitter noise."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 70]))
    bw, bh = box_size
    cy = height * 0.45
    x0 = width / 2 - velocity * (n_frames - 1) / 2
    true_centers = []
    noisy_centers = []
    boxes = []
    for t in range(n_frames):
        cx = x0 + velocity * t
        true_centers.append((cx, cy))
        noisy_centers.append((cx + rng.uniform(-jitter, jitter),
                              cy + rng.uniform(-jitter, jitter)))
        boxes.append(BBox(cx - bw / 2, cy - bh / 2, bw, bh))
    return JitterBenchmark(width=width, height=height,
                           true_centers=true_centers,
                           noisy_centers=noisy_centers,
                           subject_boxes=boxes)
