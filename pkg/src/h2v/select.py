"""Subject selection: scoring heads, ranking losses, and training loops.

Three interchangeable scorers map candidate boxes to subject scores:

* ``NssHead`` — fixed weighted sum of non-semantic cues (saliency,
  sharpness, size, centrality); no training.
* ``DssHead`` — small MLP regressing subject probability from the
  6-dim candidate descriptor; trained with squared error.
* ``RankSelector`` — convolutional head over the pooled feature stack of
  each candidate region, trained with a squared-error term plus a
  pairwise ranking hinge over candidates of the same image.

All scorers are unary: a candidate's score never depends on which other
candidates are present.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, EmptyInputError
from .features import (
    CELL,
    FeatureEncoder,
    box_cell_mean,
    build_feature_stack,
    grid_dims,
    loc_prior,
    position_term,
    resize_plane,
    size_term,
    spectral_residual_saliency,
    tenengrad_map,
)
from .geometry import BBox, iou
from .media import AnnotationRecord, Frame
from .nn import (
    Bottleneck,
    Mlp,
    Module,
    SGD,
    Tensor,
    concat,
    load_weights,
    save_weights,
    step_lr,
)
from .nn import functional as F

PAIR_MODES = ("hard", "soft")


# ---------------------------------------------------------------------------
# N-SS: fixed-weight combination of non-semantic cues


class NssHead:
    """Weighted sum of saliency, sharpness, size and centrality cues.

    ``weights`` are (saliency, sharpness, size, position). With
    ``raw_concat=True`` the same budget is spread over the raw 6-dim
    descriptor instead: the position weight is split over x/W and y/H and
    the size weight over w/W and h/H.
    """

    def __init__(self, weights: tuple[float, float, float, float] = (0.3, 0.1, 0.3, 0.3),
                 raw_concat: bool = False, colorspace: str = "rgb",
                 grad_threshold: float = 0.05):
        if len(weights) != 4:
            raise ConfigError("nss weights must have 4 entries")
        self.weights = tuple(float(w) for w in weights)
        self.raw_concat = bool(raw_concat)
        self.colorspace = colorspace
        self.grad_threshold = grad_threshold

    def score_terms(self, sal: float, sharp: float, size: float, pos: float) -> float:
        ws, wb, wz, wp = self.weights
        return ws * sal + wb * sharp + wz * size + wp * pos

    def score_boxes(self, frame: Frame, boxes: list[BBox]) -> np.ndarray:
        if not boxes:
            return np.zeros(0)
        stack = build_feature_stack(frame, None, self.colorspace,
                                    self.grad_threshold)
        w, h = frame.width, frame.height
        ws, wb, wz, wp = self.weights
        out = np.zeros(len(boxes))
        for i, box in enumerate(boxes):
            sal = box_cell_mean(stack.sal, box, w, h)
            sharp = box_cell_mean(stack.sharp, box, w, h)
            if self.raw_concat:
                prior = loc_prior(box, w, h)
                w6 = np.array([ws, wb, wp / 2, wp / 2, wz / 2, wz / 2])
                out[i] = float(w6 @ np.concatenate([[sal, sharp], prior]))
            else:
                out[i] = self.score_terms(sal, sharp,
                                          size_term(box, w, h),
                                          position_term(box, w, h))
        return out


# ---------------------------------------------------------------------------
# D-SS: descriptor regression


class DssHead(Module):
    """MLP from the 6-dim candidate descriptor to a subject score."""

    def __init__(self, rng: np.random.Generator, hidden: tuple[int, ...] = (32, 32),
                 colorspace: str = "rgb", grad_threshold: float = 0.05):
        self.colorspace = colorspace
        self.grad_threshold = grad_threshold
        self.mlp = Mlp([6, *hidden, 1], rng)

    def forward(self, descriptors: Tensor) -> Tensor:
        return self.mlp(descriptors).reshape((descriptors.data.shape[0],))

    def score_descriptors(self, descriptors: np.ndarray) -> np.ndarray:
        return self.forward(Tensor(np.atleast_2d(descriptors))).data.copy()

    def score_boxes(self, frame: Frame, boxes: list[BBox]) -> np.ndarray:
        if not boxes:
            return np.zeros(0)
        desc = image_descriptors(frame, boxes, self.colorspace,
                                 self.grad_threshold)
        return self.score_descriptors(desc)


def image_descriptors(frame: Frame, boxes: list[BBox], colorspace: str = "rgb",
                      grad_threshold: float = 0.05,
                      planes: tuple[np.ndarray, np.ndarray] | None = None) -> np.ndarray:
    """(K, 6) descriptor matrix for candidate boxes of one frame.

    ``planes`` may carry precomputed (saliency, sharpness) grids so that
    training loops do not redo the classical feature transforms.
    """
    if planes is None:
        sal_plane = spectral_residual_saliency(frame, colorspace)
        sharp_plane = tenengrad_map(frame, grad_threshold, colorspace)
    else:
        sal_plane, sharp_plane = planes
    w, h = frame.width, frame.height
    out = np.zeros((len(boxes), 6))
    for i, box in enumerate(boxes):
        out[i, 0] = box_cell_mean(sal_plane, box, w, h)
        out[i, 1] = box_cell_mean(sharp_plane, box, w, h)
        out[i, 2:] = loc_prior(box, w, h)
    return out


# ---------------------------------------------------------------------------
# Rank-SS: pooled feature-stack head


class RankHead(Module):
    """Per-candidate head: 3 bottleneck blocks, GAP, location prior, FC."""

    def __init__(self, channels: int, rng: np.random.Generator,
                 mid: int = 8, fc_sizes: tuple[int, ...] = (256, 64)):
        if channels <= 0 or mid <= 0:
            raise ConfigError("rank head needs positive channel counts")
        self.blocks = [Bottleneck(channels, mid, rng) for _ in range(3)]
        self.fc = Mlp([channels + 4, *fc_sizes, 1], rng)
        self.channels = channels

    def forward(self, feats: Tensor, priors: np.ndarray) -> Tensor:
        x = feats
        for block in self.blocks:
            x = block(x)
        pooled = F.global_avg_pool(x)                       # (K, C)
        z = concat([pooled, Tensor(np.asarray(priors, dtype=np.float64))],
                   axis=1)                                  # (K, C+4)
        return self.fc(z).reshape((feats.data.shape[0],))


@dataclass
class PreparedImage:
    """Cached per-image state reused across training epochs."""

    width: int                 # original frame dims
    height: int
    resized: Frame
    sal: np.ndarray            # handcrafted planes on the resized grid
    sharp: np.ndarray
    scale_x: float             # resized / original
    scale_y: float


class RankSelector:
    """Feature encoder + rank head over candidate regions of one image.

    The frame is resized so its shorter side equals ``short_side``; the
    three cue maps live on a 16 px cell grid of the resized frame, and
    each candidate box is pooled from that grid to a fixed 14x14 patch.
    """

    def __init__(self, encoder: FeatureEncoder, head: RankHead,
                 short_side: int = 128, colorspace: str = "rgb",
                 grad_threshold: float = 0.05, roi_size: int = 14,
                 sampling_ratio: int = 2):
        if short_side < 32:
            raise ConfigError(f"short_side {short_side} is below 32")
        if head.channels != 2 + encoder.out_channels:
            raise ConfigError(
                f"head expects {head.channels} channels, feature stack has "
                f"{2 + encoder.out_channels}"
            )
        self.encoder = encoder
        self.head = head
        self.short_side = int(short_side)
        self.colorspace = colorspace
        self.grad_threshold = grad_threshold
        self.roi_size = int(roi_size)
        self.sampling_ratio = int(sampling_ratio)

    # -- geometry ----------------------------------------------------------

    def resize_frame(self, frame: Frame) -> Frame:
        short = min(frame.width, frame.height)
        if short == self.short_side:
            return frame
        scale = self.short_side / short
        rh = max(int(round(frame.height * scale)), 1)
        rw = max(int(round(frame.width * scale)), 1)
        planes = [resize_plane(frame.data[:, :, c], rh, rw)
                  for c in range(frame.channels)]
        return Frame.from_array(np.stack(planes, axis=2))

    def prepare(self, frame: Frame) -> PreparedImage:
        resized = self.resize_frame(frame)
        return PreparedImage(
            width=frame.width,
            height=frame.height,
            resized=resized,
            sal=spectral_residual_saliency(resized, self.colorspace),
            sharp=tenengrad_map(resized, self.grad_threshold, self.colorspace),
            scale_x=resized.width / frame.width,
            scale_y=resized.height / frame.height,
        )

    def _rois(self, prep: PreparedImage, boxes: list[BBox]) -> np.ndarray:
        rois = np.zeros((len(boxes), 5))
        for i, b in enumerate(boxes):
            rois[i, 1] = b.x * prep.scale_x / CELL
            rois[i, 2] = b.y * prep.scale_y / CELL
            rois[i, 3] = b.right * prep.scale_x / CELL
            rois[i, 4] = b.bottom * prep.scale_y / CELL
        return rois

    # -- forward -----------------------------------------------------------

    def _stack_tensor(self, prep: PreparedImage) -> Tensor:
        gh, gw = grid_dims(prep.resized.height, prep.resized.width)
        raw = self.encoder(prep.resized)
        embed = F.bilinear_resize(raw, gh, gw)
        return concat([Tensor(prep.sal[None, None]),
                       Tensor(prep.sharp[None, None]),
                       embed], axis=1)

    def score_prepared(self, prep: PreparedImage, boxes: list[BBox]) -> Tensor:
        if not boxes:
            raise EmptyInputError("no candidate boxes to score")
        stack = self._stack_tensor(prep)
        feats = F.roi_align(stack, self._rois(prep, boxes),
                            self.roi_size, self.sampling_ratio)
        priors = np.stack([loc_prior(b, prep.width, prep.height)
                           for b in boxes])
        return self.head(feats, priors)

    def score(self, frame: Frame, boxes: list[BBox]) -> Tensor:
        return self.score_prepared(self.prepare(frame), boxes)

    def score_boxes(self, frame: Frame, boxes: list[BBox]) -> np.ndarray:
        if not boxes:
            return np.zeros(0)
        return self.score(frame, boxes).data.copy()

    # -- parameters ----------------------------------------------------------

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        return (self.encoder.named_parameters("encoder")
                + self.head.named_parameters("head"))

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        own = dict(self.named_parameters())
        missing = sorted(set(own) - set(state))
        extra = sorted(set(state) - set(own))
        if missing or extra:
            raise DataError(
                f"checkpoint mismatch: missing={missing} unexpected={extra}"
            )
        for name, p in own.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != p.data.shape:
                raise DataError(
                    f"shape mismatch for {name}: checkpoint {value.shape}, "
                    f"model {p.data.shape}"
                )
            p.data = value.copy()


# ---------------------------------------------------------------------------
# final selection


def select_subject(scores: np.ndarray, boxes: list[BBox]) -> int | None:
    """Index of the winning candidate, or None when there are none.

    Ties on score go to the larger box, then to the lower index.
    """
    if len(boxes) != len(scores):
        raise DataError(
            f"{len(scores)} scores for {len(boxes)} boxes"
        )
    if not boxes:
        return None
    return max(range(len(boxes)),
               key=lambda i: (scores[i], boxes[i].area(), -i))


# ---------------------------------------------------------------------------
# losses


def loss_pt(scores: Tensor, labels: np.ndarray) -> Tensor:
    """Mean squared error between scores and binary subject labels."""
    return F.mse(scores, np.asarray(labels, dtype=np.float64))


def pair_incidence(ranks: np.ndarray, mode: str = "hard") -> np.ndarray:
    """(P, K) matrix of ordered-pair rows for the ranking hinge.

    Row p encodes the comparison of a better candidate b against a worse
    one w as -1 at b and +1 at w, so that ``incidence @ scores`` yields
    s_w - s_b for every ordered pair. Every unordered pair contributes
    two identical rows (both orderings), matching a mean over all K(K-1)
    ordered pairs when all ranks are distinct.

    hard mode compares every pair with distinct ranks; soft mode only
    pairs the top-ranked candidate against the others.
    """
    if mode not in PAIR_MODES:
        raise ConfigError(f"pair mode must be one of {PAIR_MODES}, got {mode!r}")
    ranks = np.asarray(ranks)
    k = len(ranks)
    rows = []
    for i in range(k):
        for j in range(k):
            if i == j or ranks[i] == ranks[j]:
                continue
            if mode == "soft" and ranks[i] != 0 and ranks[j] != 0:
                continue
            better, worse = (i, j) if ranks[i] < ranks[j] else (j, i)
            row = np.zeros(k)
            row[better] = -1.0
            row[worse] = 1.0
            rows.append(row)
    if not rows:
        return np.zeros((0, k))
    return np.stack(rows)


def loss_pair(scores: Tensor, ranks: np.ndarray, margin: float = 0.1,
              mode: str = "hard",
              incidence: np.ndarray | None = None) -> tuple[Tensor, int]:
    """Mean hinge over ordered comparable pairs; returns (loss, pair count)."""
    if incidence is None:
        incidence = pair_incidence(ranks, mode)
    if incidence.shape[0] == 0:
        return Tensor(np.zeros(())), 0
    return F.pairwise_hinge(scores, incidence, margin), incidence.shape[0]


def combined_loss(scores: Tensor, labels: np.ndarray, ranks: np.ndarray,
                  epoch: int, margin: float = 0.1, w_pt: float = 0.5,
                  w_pair: float = 1.5, warmup_epochs: int = 30,
                  mode: str = "hard",
                  incidence: np.ndarray | None = None) -> dict:
    """Weighted sum of the pointwise and pairwise terms.

    The pairwise term enters the total only from ``warmup_epochs`` on;
    its value is still reported during warm-up for logging.
    """
    l_pt = loss_pt(scores, labels)
    l_pair, pairs = loss_pair(scores, ranks, margin, mode, incidence)
    active = epoch >= warmup_epochs
    total = l_pt * w_pt
    if active and pairs:
        total = total + l_pair * w_pair
    return {"l_pt": l_pt, "l_pair": l_pair, "total": total,
            "pairs": pairs, "pair_active": active}


def violation_count(scores: np.ndarray, ranks: np.ndarray) -> tuple[int, int]:
    """(violated, comparable) over unordered pairs with distinct ranks.

    A pair is violated when the better-ranked candidate does not score
    strictly higher.
    """
    scores = np.asarray(scores)
    ranks = np.asarray(ranks)
    violated = comparable = 0
    k = len(ranks)
    for i in range(k):
        for j in range(i + 1, k):
            if ranks[i] == ranks[j]:
                continue
            comparable += 1
            better, worse = (i, j) if ranks[i] < ranks[j] else (j, i)
            if scores[better] <= scores[worse]:
                violated += 1
    return violated, comparable


def violation_rate(pairs: list[tuple[int, int]]) -> float:
    """Aggregate violation fraction over per-image (violated, comparable)."""
    violated = sum(v for v, _ in pairs)
    comparable = sum(n for _, n in pairs)
    return violated / comparable if comparable else 0.0


# ---------------------------------------------------------------------------
# RoI augmentation


def perturb_box(box: BBox, frame_w: int, frame_h: int,
                rng: np.random.Generator, jitter: float = 0.1,
                min_iou: float = 0.5, max_tries: int = 50) -> BBox:
    """Randomly shift and rescale a box by up to ``jitter`` of its size,
    keeping overlap with the original at or above ``min_iou``."""
    cx, cy = box.center()
    for _ in range(max_tries):
        dx = rng.uniform(-jitter, jitter) * box.w
        dy = rng.uniform(-jitter, jitter) * box.h
        sw = 1.0 + rng.uniform(-jitter, jitter)
        sh = 1.0 + rng.uniform(-jitter, jitter)
        nw, nh = box.w * sw, box.h * sh
        cand = BBox(cx + dx - nw / 2, cy + dy - nh / 2, nw, nh)
        cand = cand.clamped(frame_w, frame_h)
        if iou(cand, box) >= min_iou:
            return cand
    return box


def augment_rois(boxes: list[BBox], ranks: np.ndarray, frame_w: int,
                 frame_h: int, rng: np.random.Generator, n_target: int = 20,
                 jitter: float = 0.1, min_iou: float = 0.5
                 ) -> tuple[list[BBox], np.ndarray]:
    """Grow a candidate set to ``n_target`` region proposals.

    The originals come first unchanged; the remainder cycles through them
    with jittered copies that inherit the source rank.
    """
    if not boxes:
        raise EmptyInputError("cannot augment an empty candidate set")
    n = len(boxes)
    total = max(n, n_target)
    out_boxes: list[BBox] = []
    out_ranks = np.zeros(total, dtype=int)
    for k in range(total):
        i = k % n
        out_ranks[k] = ranks[i]
        if k < n:
            out_boxes.append(boxes[i])
        else:
            out_boxes.append(perturb_box(boxes[i], frame_w, frame_h, rng,
                                         jitter, min_iou))
    return out_boxes, out_ranks


def augmented_ranks(ranks: np.ndarray, n_target: int = 20) -> np.ndarray:
    """Rank pattern that augment_rois produces, without drawing boxes."""
    n = len(ranks)
    total = max(n, n_target)
    return np.array([ranks[k % n] for k in range(total)], dtype=int)


# ---------------------------------------------------------------------------
# training data


@dataclass
class TrainSample:
    """One labelled image: candidate boxes with subject ranks (0 = best)."""

    frame: Frame
    boxes: list[BBox]
    ranks: np.ndarray

    def __post_init__(self):
        if not self.boxes:
            raise EmptyInputError("training sample has no boxes")
        self.ranks = np.asarray(self.ranks, dtype=int)
        if len(self.ranks) != len(self.boxes):
            raise DataError(
                f"{len(self.ranks)} ranks for {len(self.boxes)} boxes"
            )
        if (self.ranks < 0).any():
            raise DataError("ranks must be non-negative")

    @property
    def labels(self) -> np.ndarray:
        return (self.ranks == 0).astype(np.float64)

    @classmethod
    def from_annotation(cls, frame: Frame, record: AnnotationRecord) -> "TrainSample":
        boxes = [e.primary_box for e in record.entries]
        ranks = np.array([e.rank for e in record.entries], dtype=int)
        return cls(frame=frame, boxes=boxes, ranks=ranks)


def _batches(order: np.ndarray, size: int):
    for i in range(0, len(order), size):
        yield order[i:i + size]


# ---------------------------------------------------------------------------
# Rank-SS training


@dataclass
class RankTrainParams:
    epochs: int = 50
    warmup_epochs: int = 30
    base_lr: float = 0.01
    lr_decay: float = 0.1
    lr_period: int = 10
    momentum: float = 0.9
    batch_size: int = 4
    rois_per_image: int = 20
    jitter: float = 0.1
    min_iou: float = 0.5
    margin: float = 0.1
    w_pt: float = 0.5
    w_pair: float = 1.5
    mode: str = "hard"
    seed: int = 0
    short_side: int = 128
    embed_channels: int = 8
    mid_channels: int = 8
    fc_sizes: tuple[int, ...] = (256, 64)
    colorspace: str = "rgb"
    grad_threshold: float = 0.05
    violation_samples: int | None = None   # cap for the per-epoch measurement

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be at least 1")
        if self.violation_samples is not None and self.violation_samples < 1:
            raise ConfigError("violation_samples must be at least 1 when set")
        if self.warmup_epochs < 0:
            raise ConfigError("warmup_epochs must be non-negative")
        if self.mode not in PAIR_MODES:
            raise ConfigError(
                f"mode must be one of {PAIR_MODES}, got {self.mode!r}")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be at least 1")
        if self.rois_per_image < 1:
            raise ConfigError("rois_per_image must be at least 1")
        if not 0 < self.min_iou <= 1:
            raise ConfigError("min_iou must be in (0, 1]")
        self.fc_sizes = tuple(int(s) for s in self.fc_sizes)


@dataclass
class EpochStats:
    epoch: int
    l_pt: float
    l_pair: float
    lr: float
    violation_rate: float       # measured before this epoch's updates
    pair_active: bool

    def as_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "l_pt": round(self.l_pt, 8),
            "l_pair": round(self.l_pair, 8),
            "lr": self.lr,
            "violation_rate": round(self.violation_rate, 6),
            "pair_active": self.pair_active,
        }


@dataclass
class RankTrainResult:
    selector: RankSelector
    history: list[EpochStats]
    final_violation_rate: float
    params: RankTrainParams = field(repr=False)


def build_rank_selector(params: RankTrainParams,
                        rng: np.random.Generator | None = None) -> RankSelector:
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence([params.seed, 11]))
    encoder = FeatureEncoder(params.embed_channels, rng)
    head = RankHead(2 + params.embed_channels, rng, params.mid_channels,
                    params.fc_sizes)
    return RankSelector(encoder, head, params.short_side, params.colorspace,
                        params.grad_threshold)


def _train_violation(selector: RankSelector, prepared: list[PreparedImage],
                     samples: list[TrainSample]) -> float:
    pairs = []
    for prep, sample in zip(prepared, samples):
        scores = selector.score_prepared(prep, sample.boxes).data
        pairs.append(violation_count(scores, sample.ranks))
    return violation_rate(pairs)


def train_rankss(samples: list[TrainSample], params: RankTrainParams,
                 log_fn=None) -> RankTrainResult:
    """Train the rank head end to end on labelled candidate sets.

    Each epoch redraws the jittered region proposals, walks the images in
    a reshuffled order in small batches, and records epoch-mean losses.
    The logged violation rate is measured on the unaugmented candidates
    before the epoch's updates, so entry ``warmup_epochs`` reflects the
    purely pointwise-trained model. With ``violation_samples`` set, that
    measurement (and the final one) runs on a fixed seeded subset so large
    runs do not spend most of their time scoring rather than training.
    """
    if not samples:
        raise EmptyInputError("no training samples")
    selector = build_rank_selector(params)
    prepared = [selector.prepare(s.frame) for s in samples]
    if params.violation_samples is not None and params.violation_samples < len(samples):
        pick = np.random.default_rng(
            np.random.SeedSequence([params.seed, 401])
        ).choice(len(samples), params.violation_samples, replace=False)
        vio_prepared = [prepared[i] for i in pick]
        vio_samples = [samples[i] for i in pick]
    else:
        vio_prepared, vio_samples = prepared, samples
    aug_ranks = [augmented_ranks(s.ranks, params.rois_per_image)
                 for s in samples]
    labels = [(r == 0).astype(np.float64) for r in aug_ranks]
    incidences = [pair_incidence(r, params.mode) for r in aug_ranks]
    opt = SGD(selector.named_parameters(), params.base_lr, params.momentum)

    history: list[EpochStats] = []
    for epoch in range(params.epochs):
        lr = step_lr(params.base_lr, epoch, params.lr_decay, params.lr_period)
        opt.lr = lr
        vio = _train_violation(selector, vio_prepared, vio_samples)

        aug_rng = np.random.default_rng(
            np.random.SeedSequence([params.seed, 211, epoch]))
        boxes_ep = [augment_rois(s.boxes, s.ranks, s.frame.width,
                                 s.frame.height, aug_rng,
                                 params.rois_per_image, params.jitter,
                                 params.min_iou)[0]
                    for s in samples]
        order = np.random.default_rng(
            np.random.SeedSequence([params.seed, 307, epoch])
        ).permutation(len(samples))

        pt_sum = pair_sum = 0.0
        for batch in _batches(order, params.batch_size):
            opt.zero_grad()
            total = None
            for idx in batch:
                scores = selector.score_prepared(prepared[idx], boxes_ep[idx])
                parts = combined_loss(
                    scores, labels[idx], aug_ranks[idx], epoch,
                    params.margin, params.w_pt, params.w_pair,
                    params.warmup_epochs, params.mode, incidences[idx])
                pt_sum += float(parts["l_pt"].data)
                pair_sum += float(parts["l_pair"].data)
                share = parts["total"] * (1.0 / len(batch))
                total = share if total is None else total + share
            total.backward()
            opt.step()

        stats = EpochStats(
            epoch=epoch,
            l_pt=pt_sum / len(samples),
            l_pair=pair_sum / len(samples),
            lr=lr,
            violation_rate=vio,
            pair_active=epoch >= params.warmup_epochs,
        )
        history.append(stats)
        if log_fn is not None:
            log_fn(stats.as_dict())

    final_vio = _train_violation(selector, vio_prepared, vio_samples)
    return RankTrainResult(selector=selector, history=history,
                           final_violation_rate=final_vio, params=params)


# ---------------------------------------------------------------------------
# D-SS training


@dataclass
class DssTrainParams:
    epochs: int = 60
    base_lr: float = 0.05
    lr_decay: float = 0.1
    lr_period: int = 40
    momentum: float = 0.9
    batch_size: int = 4
    rois_per_image: int = 20
    jitter: float = 0.1
    min_iou: float = 0.5
    seed: int = 0
    hidden: tuple[int, ...] = (32, 32)
    colorspace: str = "rgb"
    grad_threshold: float = 0.05

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be at least 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be at least 1")
        self.hidden = tuple(int(s) for s in self.hidden)


@dataclass
class DssTrainResult:
    head: DssHead
    history: list[dict]
    params: DssTrainParams = field(repr=False)


def train_dss(samples: list[TrainSample], params: DssTrainParams,
              log_fn=None) -> DssTrainResult:
    """Train the descriptor MLP with squared error on subject labels."""
    if not samples:
        raise EmptyInputError("no training samples")
    rng = np.random.default_rng(np.random.SeedSequence([params.seed, 17]))
    head = DssHead(rng, params.hidden, params.colorspace,
                   params.grad_threshold)
    planes = [(spectral_residual_saliency(s.frame, params.colorspace),
               tenengrad_map(s.frame, params.grad_threshold, params.colorspace))
              for s in samples]
    aug_ranks = [augmented_ranks(s.ranks, params.rois_per_image)
                 for s in samples]
    labels = [(r == 0).astype(np.float64) for r in aug_ranks]
    opt = SGD(head.named_parameters(), params.base_lr, params.momentum)

    history: list[dict] = []
    for epoch in range(params.epochs):
        lr = step_lr(params.base_lr, epoch, params.lr_decay, params.lr_period)
        opt.lr = lr
        aug_rng = np.random.default_rng(
            np.random.SeedSequence([params.seed, 223, epoch]))
        descs = []
        for s, pl in zip(samples, planes):
            boxes, _ = augment_rois(s.boxes, s.ranks, s.frame.width,
                                    s.frame.height, aug_rng,
                                    params.rois_per_image, params.jitter,
                                    params.min_iou)
            descs.append(image_descriptors(s.frame, boxes, params.colorspace,
                                           params.grad_threshold, pl))
        order = np.random.default_rng(
            np.random.SeedSequence([params.seed, 331, epoch])
        ).permutation(len(samples))

        loss_sum = 0.0
        for batch in _batches(order, params.batch_size):
            opt.zero_grad()
            x = np.concatenate([descs[i] for i in batch])
            y = np.concatenate([labels[i] for i in batch])
            pred = head(Tensor(x))
            loss = F.mse(pred, y)
            loss_sum += float(loss.data) * len(batch)
            loss.backward()
            opt.step()

        entry = {"epoch": epoch, "l_pt": round(loss_sum / len(samples), 8),
                 "lr": lr}
        history.append(entry)
        if log_fn is not None:
            log_fn(entry)
    return DssTrainResult(head=head, history=history, params=params)


# ---------------------------------------------------------------------------
# evaluation helpers


def top1_accuracy(score_fn, samples: list[TrainSample]) -> float:
    """Fraction of images whose top-scored candidate is the rank-0 one."""
    if not samples:
        raise EmptyInputError("no samples to evaluate")
    hits = 0
    for s in samples:
        scores = score_fn(s.frame, s.boxes)
        idx = select_subject(scores, s.boxes)
        if idx is not None and s.ranks[idx] == 0:
            hits += 1
    return hits / len(samples)


# ---------------------------------------------------------------------------
# checkpoints


def save_rank_model(selector: RankSelector, path: str | Path) -> None:
    save_weights(selector.state_dict(), path)


def load_rank_model(path: str | Path, short_side: int = 128,
                    colorspace: str = "rgb", grad_threshold: float = 0.05,
                    seed: int = 0) -> RankSelector:
    """Rebuild a RankSelector from a weight file, inferring layer sizes."""
    state = load_weights(path)
    try:
        out_channels = state["encoder.mix.weight"].shape[0]
        mid = state["head.blocks.0.reduce.weight"].shape[0]
        fc_keys = sorted(
            (k for k in state if k.startswith("head.fc.layers.")
             and k.endswith(".weight")),
            key=lambda k: int(k.split(".")[3]))
        fc_sizes = tuple(state[k].shape[0] for k in fc_keys[:-1])
    except KeyError as e:
        raise DataError(f"checkpoint is missing tensor {e}") from e
    rng = np.random.default_rng(seed)
    encoder = FeatureEncoder(out_channels, rng)
    head = RankHead(2 + out_channels, rng, mid, fc_sizes)
    selector = RankSelector(encoder, head, short_side, colorspace,
                            grad_threshold)
    selector.load_state_dict(state)
    return selector


def save_dss_model(head: DssHead, path: str | Path) -> None:
    save_weights(head.state_dict(), path)


def load_dss_model(path: str | Path, colorspace: str = "rgb",
                   grad_threshold: float = 0.05, seed: int = 0) -> DssHead:
    state = load_weights(path)
    keys = sorted((k for k in state if k.endswith(".weight")),
                  key=lambda k: int(k.split(".")[2]))
    if not keys:
        raise DataError("checkpoint holds no weight tensors")
    hidden = tuple(state[k].shape[0] for k in keys[:-1])
    head = DssHead(np.random.default_rng(seed), hidden, colorspace,
                   grad_threshold)
    head.load_state_dict(state)
    return head
