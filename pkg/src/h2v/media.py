"""Frame containers, video/image IO, and annotation schemas.

Pixel data is stored as float64 in [0, 1], shape (H, W, C) with C in {1, 3}.
Y4M files keep their raw YCbCr planes (no colourspace conversion on load),
which makes a read/write round trip bit-exact.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    CoverageError,
    DataError,
    DimensionMismatchError,
    EmptyInputError,
    GeometryError,
    SchemaError,
)
from .geometry import BBox

MIN_FRAME_SIDE = 16
MAX_RANK = 6

# BT.601 luma weights, used when collapsing RGB to a single plane.
_LUMA_R, _LUMA_G, _LUMA_B = 0.299, 0.587, 0.114

_COLORSPACES = ("rgb", "gray", "yuv444", "yuv420")


# ---------------------------------------------------------------------------
# frame containers


@dataclass(frozen=True)
class Frame:
    """A single image plane stack, float64 in [0, 1], shape (H, W, C)."""

    data: np.ndarray

    def __post_init__(self):
        a = self.data
        if not isinstance(a, np.ndarray) or a.ndim != 3:
            raise DataError("frame data must be a (H, W, C) ndarray")
        h, w, c = a.shape
        if c not in (1, 3):
            raise DataError(f"frame must have 1 or 3 channels, got {c}")
        if h < MIN_FRAME_SIDE or w < MIN_FRAME_SIDE:
            raise DataError(
                f"frame dimensions {w}x{h} below minimum {MIN_FRAME_SIDE}px side"
            )
        if a.dtype != np.float64:
            object.__setattr__(self, "data", a.astype(np.float64))
            a = self.data
        if not np.isfinite(a).all():
            raise DataError("frame contains non-finite pixel values")
        lo = float(a.min())
        hi = float(a.max())
        if lo < -1e-9 or hi > 1.0 + 1e-9:
            raise DataError(f"pixel values outside [0, 1]: min={lo:.4g} max={hi:.4g}")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @staticmethod
    def from_array(a: np.ndarray) -> "Frame":
        a = np.asarray(a, dtype=np.float64)
        if a.ndim == 2:
            a = a[:, :, None]
        return Frame(np.clip(a, 0.0, 1.0))


@dataclass
class FrameSequence:
    """An ordered, dimension-consistent list of frames plus stream metadata."""

    frames: list[Frame]
    fps: tuple[int, int] = (25, 1)
    colorspace: str = "rgb"

    def __post_init__(self):
        if not self.frames:
            raise EmptyInputError("frame sequence is empty")
        if self.colorspace not in _COLORSPACES:
            raise DataError(f"unknown colorspace {self.colorspace!r}")
        num, den = self.fps
        if num <= 0 or den <= 0:
            raise DataError(f"invalid frame rate {self.fps!r}")
        f0 = self.frames[0]
        for i, f in enumerate(self.frames):
            if (f.width, f.height, f.channels) != (f0.width, f0.height, f0.channels):
                raise DimensionMismatchError(
                    f"frame {i} is {f.width}x{f.height}x{f.channels}, "
                    f"expected {f0.width}x{f0.height}x{f0.channels}"
                )

    def __len__(self) -> int:
        return len(self.frames)

    def __getitem__(self, i: int) -> Frame:
        return self.frames[i]

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def height(self) -> int:
        return self.frames[0].height

    @property
    def channels(self) -> int:
        return self.frames[0].channels


def to_gray(frame: Frame, colorspace: str = "rgb") -> np.ndarray:
    """Collapse a frame to a single (H, W) luminance plane in [0, 1]."""
    a = frame.data
    if frame.channels == 1 or colorspace.startswith("yuv"):
        return a[:, :, 0]
    return _LUMA_R * a[:, :, 0] + _LUMA_G * a[:, :, 1] + _LUMA_B * a[:, :, 2]


def sequence_gray(seq: FrameSequence) -> np.ndarray:
    """Stack the whole sequence as one (T, H, W) luminance array."""
    return np.stack([to_gray(f, seq.colorspace) for f in seq.frames])


# ---------------------------------------------------------------------------
# Y4M


_Y4M_MAGIC = b"YUV4MPEG2"


def _parse_y4m_header(header: str, path: str) -> tuple[int, int, tuple[int, int], str]:
    width = height = 0
    fps = (25, 1)
    subsampling = "420"
    for token in header.split(" ")[1:]:
        if not token:
            continue
        key, val = token[0], token[1:]
        if key == "W":
            width = int(val)
        elif key == "H":
            height = int(val)
        elif key == "F":
            m = re.fullmatch(r"(\d+):(\d+)", val)
            if not m:
                raise DataError(f"{path}: bad frame-rate token F{val}")
            fps = (int(m.group(1)), int(m.group(2)))
        elif key == "C":
            if val in ("420", "420jpeg", "420paldv", "420mpeg2"):
                subsampling = "420"
            elif val == "444":
                subsampling = "444"
            else:
                raise DataError(f"{path}: unsupported chroma mode C{val}")
        # I (interlace), A (pixel aspect) and X (extensions) are ignored
    if width <= 0 or height <= 0:
        raise DataError(f"{path}: missing or invalid W/H in Y4M header")
    return width, height, fps, subsampling


def read_y4m(path: str | Path) -> FrameSequence:
    """Load a YUV4MPEG2 stream. 4:2:0 chroma is replicated up to full size."""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from e
    if not blob.startswith(_Y4M_MAGIC):
        raise DataError(f"{path}: not a YUV4MPEG2 stream")
    try:
        nl = blob.index(b"\n")
    except ValueError:
        raise DataError(f"{path}: truncated Y4M header") from None
    width, height, fps, sub = _parse_y4m_header(
        blob[:nl].decode("ascii", "replace"), str(path)
    )
    if sub == "420" and (width % 2 or height % 2):
        raise DataError(f"{path}: 4:2:0 stream with odd dimensions {width}x{height}")

    ysize = width * height
    csize = ysize // 4 if sub == "420" else ysize
    frames: list[Frame] = []
    off = nl + 1
    while off < len(blob):
        try:
            fnl = blob.index(b"\n", off)
        except ValueError:
            raise DataError(
                f"{path}: truncated frame header at frame {len(frames)}"
            ) from None
        if not blob[off:fnl].startswith(b"FRAME"):
            raise DataError(f"{path}: malformed frame marker at frame {len(frames)}")
        off = fnl + 1
        end = off + ysize + 2 * csize
        if end > len(blob):
            raise DataError(f"{path}: truncated pixel data at frame {len(frames)}")
        y = np.frombuffer(blob, np.uint8, ysize, off).reshape(height, width)
        u = np.frombuffer(blob, np.uint8, csize, off + ysize)
        v = np.frombuffer(blob, np.uint8, csize, off + ysize + csize)
        if sub == "420":
            u = u.reshape(height // 2, width // 2).repeat(2, 0).repeat(2, 1)
            v = v.reshape(height // 2, width // 2).repeat(2, 0).repeat(2, 1)
        else:
            u = u.reshape(height, width)
            v = v.reshape(height, width)
        data = np.stack([y, u, v], axis=2).astype(np.float64) / 255.0
        frames.append(Frame(data))
        off = end
    if not frames:
        raise EmptyInputError(f"{path}: Y4M stream contains no frames")
    return FrameSequence(frames, fps=fps, colorspace=f"yuv{'420' if sub == '420' else '444'}")


def _to_yuv_planes(frame: Frame, colorspace: str) -> np.ndarray:
    """Return (H, W, 3) YCbCr planes in [0, 1] for any source colorspace."""
    a = frame.data
    if colorspace.startswith("yuv"):
        return a
    if frame.channels == 1:
        out = np.empty((frame.height, frame.width, 3))
        out[:, :, 0] = a[:, :, 0]
        out[:, :, 1:] = 0.5
        return out
    y = _LUMA_R * a[:, :, 0] + _LUMA_G * a[:, :, 1] + _LUMA_B * a[:, :, 2]
    cb = 0.5 + (a[:, :, 2] - y) * 0.564
    cr = 0.5 + (a[:, :, 0] - y) * 0.713
    return np.clip(np.stack([y, cb, cr], axis=2), 0.0, 1.0)


def _plane_bytes(plane: np.ndarray) -> bytes:
    return np.clip(np.round(plane * 255.0), 0, 255).astype(np.uint8).tobytes()


class Y4MWriter:
    """Incremental YUV4MPEG2 writer; frames go to disk as they arrive."""

    def __init__(self, path: str | Path, width: int, height: int,
                 fps: tuple[int, int] = (25, 1), colorspace: str = "rgb",
                 subsampling: str = "444"):
        if subsampling not in ("420", "444"):
            raise DataError(f"unsupported chroma mode {subsampling!r}")
        if subsampling == "420" and (width % 2 or height % 2):
            raise DataError(
                f"cannot write 4:2:0 with odd dimensions {width}x{height}"
            )
        self.width = width
        self.height = height
        self.colorspace = colorspace
        self.subsampling = subsampling
        self._f = open(path, "wb")
        header = (
            f"YUV4MPEG2 W{width} H{height} "
            f"F{fps[0]}:{fps[1]} Ip A1:1 C{subsampling}\n"
        )
        self._f.write(header.encode("ascii"))

    def write(self, frame: Frame) -> None:
        if (frame.width, frame.height) != (self.width, self.height):
            raise DimensionMismatchError(
                f"frame is {frame.width}x{frame.height}, "
                f"stream is {self.width}x{self.height}"
            )
        yuv = _to_yuv_planes(frame, self.colorspace)
        self._f.write(b"FRAME\n")
        self._f.write(_plane_bytes(yuv[:, :, 0]))
        for c in (1, 2):
            plane = yuv[:, :, c]
            if self.subsampling == "420":
                h2, w2 = plane.shape[0] // 2, plane.shape[1] // 2
                plane = plane.reshape(h2, 2, w2, 2).mean(axis=(1, 3))
            self._f.write(_plane_bytes(plane))

    def close(self) -> None:
        self._f.close()

    def __enter__(self) -> "Y4MWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def write_y4m(seq: FrameSequence, path: str | Path, subsampling: str | None = None) -> None:
    """Write a YUV4MPEG2 stream; chroma mode defaults to the source's."""
    if subsampling is None:
        subsampling = "420" if seq.colorspace == "yuv420" else "444"
    with Y4MWriter(path, seq.width, seq.height, seq.fps, seq.colorspace,
                   subsampling) as w:
        for frame in seq.frames:
            w.write(frame)


# ---------------------------------------------------------------------------
# image directories


_IMAGE_SUFFIXES = (".png", ".ppm", ".pgm", ".jpg", ".jpeg", ".bmp")


def read_image(path: str | Path) -> Frame:
    from PIL import Image

    try:
        with Image.open(path) as im:
            if im.mode in ("L", "I;16", "I"):
                a = np.asarray(im.convert("L"), dtype=np.float64)[:, :, None]
            else:
                a = np.asarray(im.convert("RGB"), dtype=np.float64)
    except (OSError, ValueError) as e:
        raise DataError(f"cannot decode image {path}: {e}") from e
    return Frame(a / 255.0)


def write_image(frame: Frame, path: str | Path, colorspace: str = "rgb") -> None:
    from PIL import Image

    a = frame.data
    if colorspace.startswith("yuv"):
        a = _yuv_to_rgb(a)
    u8 = np.clip(np.round(a * 255.0), 0, 255).astype(np.uint8)
    if u8.shape[2] == 1:
        Image.fromarray(u8[:, :, 0], "L").save(path)
    else:
        Image.fromarray(u8, "RGB").save(path)


def _yuv_to_rgb(a: np.ndarray) -> np.ndarray:
    y = a[:, :, 0]
    cb = a[:, :, 1] - 0.5
    cr = a[:, :, 2] - 0.5
    r = y + cr / 0.713
    b = y + cb / 0.564
    g = (y - _LUMA_R * r - _LUMA_B * b) / _LUMA_G
    return np.clip(np.stack([r, g, b], axis=2), 0.0, 1.0)


def read_image_dir(path: str | Path) -> FrameSequence:
    path = Path(path)
    files = sorted(
        p for p in path.iterdir()
        if p.is_file() and p.suffix.lower() in _IMAGE_SUFFIXES
    )
    if not files:
        raise EmptyInputError(f"{path}: no image files found")
    frames = []
    for i, p in enumerate(files):
        try:
            frames.append(read_image(p))
        except DataError as e:
            raise DataError(f"frame {i} ({p.name}): {e}") from e
    return FrameSequence(frames, colorspace="rgb" if frames[0].channels == 3 else "gray")


def load_frame_sequence(path: str | Path) -> FrameSequence:
    """Load a video from a .y4m file or a directory of numbered images."""
    path = Path(path)
    if path.is_dir():
        return read_image_dir(path)
    if not path.exists():
        raise DataError(f"input not found: {path}")
    if path.suffix.lower() == ".y4m":
        return read_y4m(path)
    return FrameSequence([read_image(path)])


def write_pgm(path: str | Path, plane: np.ndarray) -> None:
    """Dump a single [0, 1] plane as a binary PGM (debug visualisation)."""
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2:
        raise DataError("PGM dump expects a 2-D plane")
    u8 = np.clip(np.round(plane * 255.0), 0, 255).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(f"P5\n{plane.shape[1]} {plane.shape[0]}\n255\n".encode("ascii"))
        f.write(u8.tobytes())


# ---------------------------------------------------------------------------
# annotation / candidate schemas


@dataclass(frozen=True)
class SubjectEntry:
    """One annotated person: optional face and body boxes plus importance rank.

    Rank 0 marks a main subject; larger ranks are progressively less
    important. At least one of face/body must be present.
    """

    rank: int
    face: BBox | None = None
    body: BBox | None = None

    def __post_init__(self):
        if not isinstance(self.rank, int) or isinstance(self.rank, bool):
            raise SchemaError(f"rank must be an integer, got {self.rank!r}")
        if not 0 <= self.rank <= MAX_RANK:
            raise SchemaError(f"rank {self.rank} outside [0, {MAX_RANK}]")
        if self.face is None and self.body is None:
            raise SchemaError("entry needs at least one of face/body boxes")

    @property
    def primary_box(self) -> BBox:
        """The box used for geometry: face when present, else body."""
        return self.face if self.face is not None else self.body  # type: ignore[return-value]


@dataclass
class AnnotationRecord:
    image_id: str
    width: int
    height: int
    entries: list[SubjectEntry]

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise SchemaError(f"{self.image_id}: non-positive frame dimensions")
        if not self.entries:
            raise SchemaError(f"{self.image_id}: no annotated entries")
        ranks = [e.rank for e in self.entries]
        nonzero = [r for r in ranks if r != 0]
        if len(set(nonzero)) != len(nonzero):
            raise SchemaError(f"{self.image_id}: duplicate non-zero ranks {nonzero}")
        if 0 not in ranks:
            raise SchemaError(f"{self.image_id}: no rank-0 (main) subject")

    @property
    def main_subjects(self) -> list[SubjectEntry]:
        return [e for e in self.entries if e.rank == 0]

    @property
    def is_multi_subject(self) -> bool:
        return len(self.main_subjects) > 1


@dataclass
class AnnotationSet:
    records: list[AnnotationRecord]

    def __post_init__(self):
        self.by_id = {r.image_id: r for r in self.records}
        if len(self.by_id) != len(self.records):
            raise SchemaError("duplicate image ids in annotation set")

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


def _parse_box(obj, where: str) -> BBox | None:
    if obj is None:
        return None
    if not (isinstance(obj, (list, tuple)) and len(obj) == 4):
        raise SchemaError(f"{where}: box must be [x, y, w, h], got {obj!r}")
    try:
        return BBox.from_list([float(v) for v in obj])
    except (TypeError, ValueError) as e:
        raise SchemaError(f"{where}: {e}") from e
    except GeometryError as e:
        raise SchemaError(f"{where}: {e}") from e


def _load_json(source) -> dict:
    if isinstance(source, dict):
        return source
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from e
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: invalid JSON: {e}") from e
    if not isinstance(obj, dict):
        raise SchemaError(f"{path}: top level must be an object")
    return obj


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise SchemaError(f"{where}: missing required key {key!r}")
    return obj[key]


def parse_annotations(source) -> AnnotationSet:
    """Parse an annotation JSON document (path, or already-decoded dict)."""
    obj = _load_json(source)
    images = _require(obj, "images", "annotations")
    if not isinstance(images, list) or not images:
        raise SchemaError("annotations: 'images' must be a non-empty list")
    records = []
    for img in images:
        image_id = str(_require(img, "id", "annotations.images[]"))
        where = f"image {image_id}"
        width = int(_require(img, "width", where))
        height = int(_require(img, "height", where))
        raw_entries = _require(img, "entries", where)
        if not isinstance(raw_entries, list):
            raise SchemaError(f"{where}: 'entries' must be a list")
        entries = []
        for j, ent in enumerate(raw_entries):
            ewhere = f"{where} entry {j}"
            entries.append(
                SubjectEntry(
                    rank=_require(ent, "rank", ewhere),
                    face=_parse_box(ent.get("face"), ewhere),
                    body=_parse_box(ent.get("body"), ewhere),
                )
            )
        records.append(AnnotationRecord(image_id, width, height, entries))
    return AnnotationSet(records)


def write_annotations(ann: AnnotationSet, path: str | Path) -> None:
    doc = {
        "images": [
            {
                "id": r.image_id,
                "width": r.width,
                "height": r.height,
                "entries": [
                    {
                        "face": e.face.as_list() if e.face else None,
                        "body": e.body.as_list() if e.body else None,
                        "rank": e.rank,
                    }
                    for e in r.entries
                ],
            }
            for r in ann.records
        ]
    }
    _write_json(doc, path)


@dataclass(frozen=True)
class Detection:
    """One candidate subject from a detector, with confidence in [0, 1]."""

    conf: float
    face: BBox | None = None
    body: BBox | None = None

    def __post_init__(self):
        if not (isinstance(self.conf, (int, float)) and math.isfinite(self.conf)):
            raise SchemaError(f"confidence must be finite, got {self.conf!r}")
        if not 0.0 <= self.conf <= 1.0:
            raise SchemaError(f"confidence {self.conf} outside [0, 1]")
        if self.face is None and self.body is None:
            raise SchemaError("detection needs at least one of face/body boxes")

    @property
    def primary_box(self) -> BBox:
        return self.face if self.face is not None else self.body  # type: ignore[return-value]


@dataclass
class CandidateRecord:
    image_id: str
    width: int
    height: int
    detections: list[Detection]

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise SchemaError(f"{self.image_id}: non-positive frame dimensions")


@dataclass
class CandidateSet:
    records: list[CandidateRecord]

    def __post_init__(self):
        self.by_id = {r.image_id: r for r in self.records}
        if len(self.by_id) != len(self.records):
            raise SchemaError("duplicate image ids in candidate set")

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


def _clamp_detection_box(box: BBox | None, width: int, height: int, where: str) -> BBox | None:
    if box is None:
        return None
    try:
        return box.clamped(width, height)
    except GeometryError as e:
        raise GeometryError(f"{where}: {e}") from e


def parse_candidates(source) -> CandidateSet:
    """Parse detector output JSON; boxes are clamped to the frame."""
    obj = _load_json(source)
    images = _require(obj, "images", "candidates")
    if not isinstance(images, list):
        raise SchemaError("candidates: 'images' must be a list")
    records = []
    for img in images:
        image_id = str(_require(img, "id", "candidates.images[]"))
        where = f"image {image_id}"
        width = int(_require(img, "width", where))
        height = int(_require(img, "height", where))
        raw = img.get("entries", [])
        dets = []
        for j, ent in enumerate(raw):
            ewhere = f"{where} candidate {j}"
            conf = _require(ent, "conf", ewhere)
            if isinstance(conf, bool) or not isinstance(conf, (int, float)):
                raise SchemaError(f"{ewhere}: 'conf' must be a number")
            face = _clamp_detection_box(
                _parse_box(ent.get("face"), ewhere), width, height, ewhere
            )
            body = _clamp_detection_box(
                _parse_box(ent.get("body"), ewhere), width, height, ewhere
            )
            dets.append(Detection(conf=float(conf), face=face, body=body))
        records.append(CandidateRecord(image_id, width, height, dets))
    return CandidateSet(records)


def write_candidates(cands: CandidateSet, path: str | Path) -> None:
    doc = {
        "images": [
            {
                "id": r.image_id,
                "width": r.width,
                "height": r.height,
                "entries": [
                    {
                        "face": d.face.as_list() if d.face else None,
                        "body": d.body.as_list() if d.body else None,
                        "conf": d.conf,
                    }
                    for d in r.detections
                ],
            }
            for r in cands.records
        ]
    }
    _write_json(doc, path)


def _write_json(doc: dict, path: str | Path) -> None:
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


# ---------------------------------------------------------------------------
# shots JSON


def write_shots(shots: Sequence[tuple[int, int]], path: str | Path) -> None:
    _write_json({"shots": [[int(s), int(e)] for s, e in shots]}, path)


def parse_shots(source) -> list[tuple[int, int]]:
    """Parse shot ranges [[start, end], ...] with end exclusive."""
    obj = _load_json(source)
    raw = _require(obj, "shots", "shots")
    if not isinstance(raw, list) or not raw:
        raise SchemaError("shots: 'shots' must be a non-empty list")
    shots = []
    prev_end = None
    for i, pair in enumerate(raw):
        if not (isinstance(pair, list) and len(pair) == 2):
            raise SchemaError(f"shots[{i}]: expected [start, end]")
        s, e = int(pair[0]), int(pair[1])
        if s < 0 or e <= s:
            raise SchemaError(f"shots[{i}]: invalid range [{s}, {e})")
        if prev_end is not None and s != prev_end:
            raise SchemaError(
                f"shots[{i}]: starts at {s} but previous shot ended at {prev_end}"
            )
        prev_end = e
        shots.append((s, e))
    return shots
