"""
Pullback mask volumes and their metadata

A pullback directory holds ``meta.txt`` (``key=value`` lines, one per
:class:`PullbackMeta` field) and one binary PGM mask per frame,
``frame_0000.pgm`` onwards. Mask pixels are labels: 0 background, 1 lumen,
2 calcification. The catheter center is assumed at the image center and
masks are Cartesian.
"""

import dataclasses
import logging
import os
import re

import numpy as np

from stentpred.util.misc import StentpredError, write_to_file


__all__ = ["BACKGROUND", "LUMEN", "CALCIFICATION", "PRE", "POST",
           "PHENOTYPES", "PullbackError", "PullbackMeta", "Pullback",
           "read_pgm", "write_pgm", "load_pullback", "save_pullback",
           "validate_pair"]


logger = logging.getLogger(__name__)

BACKGROUND, LUMEN, CALCIFICATION = 0, 1, 2
LABELS = (BACKGROUND, LUMEN, CALCIFICATION)

PRE, POST = "pre", "post"
PHASES = (PRE, POST)
PHENOTYPES = ("nodule", "protrusion", "sheet")

META_FILENAME = "meta.txt"
_frame_re = re.compile(r"^frame_(\d{4})\.pgm$")


class PullbackError(StentpredError):
    def __init__(self, message, frame=None, field=None):
        self.frame = frame
        self.field = field
        prefix = []
        if frame is not None:
            prefix.append("frame {}".format(frame))
        if field is not None:
            prefix.append("field '{}'".format(field))
        if prefix:
            message = "{}: {}".format(", ".join(prefix), message)
        StentpredError.__init__(self, message)


def frame_filename(index):
    return "frame_{:04d}.pgm".format(index)


@dataclasses.dataclass(frozen=True)
class PullbackMeta:
    pullback_id: str
    phase: str
    frame_count: int
    pixel_spacing_mm: float
    lesion_start_frame: int
    lesion_end_frame: int
    patient_id: str
    frame_pitch_mm: float = 0.2
    stent_start_frame: int = None
    stent_end_frame: int = None
    phenotype: str = None

    def check(self, require_stent=True):
        if self.phase not in PHASES:
            raise PullbackError("unknown phase '{}'".format(self.phase),
                                field="phase")
        if self.frame_count < 1:
            raise PullbackError("must be positive", field="frame_count")
        if not self.frame_pitch_mm > 0:
            raise PullbackError("must be positive", field="frame_pitch_mm")
        if not self.pixel_spacing_mm > 0:
            raise PullbackError("must be positive", field="pixel_spacing_mm")
        if not 0 <= self.lesion_start_frame <= self.lesion_end_frame < self.frame_count:
            raise PullbackError(
                "lesion bounds [{}, {}] outside [0, {})".format(
                    self.lesion_start_frame, self.lesion_end_frame,
                    self.frame_count),
                field="lesion_start_frame")
        if require_stent and self.phase == POST:
            for name in ("stent_start_frame", "stent_end_frame"):
                if getattr(self, name) is None:
                    raise PullbackError("required for post-stent pullbacks",
                                        field=name)
        if self.has_stent():
            if not 0 <= self.stent_start_frame <= self.stent_end_frame < self.frame_count:
                raise PullbackError(
                    "stent bounds [{}, {}] outside [0, {})".format(
                        self.stent_start_frame, self.stent_end_frame,
                        self.frame_count),
                    field="stent_start_frame")
        if self.phenotype is not None and self.phenotype not in PHENOTYPES:
            raise PullbackError("unknown phenotype '{}'".format(self.phenotype),
                                field="phenotype")

    def has_stent(self):
        return self.stent_start_frame is not None and self.stent_end_frame is not None

    @property
    def lesion_frames(self):
        return range(self.lesion_start_frame, self.lesion_end_frame + 1)

    @property
    def stent_frames(self):
        if not self.has_stent():
            return range(0)
        return range(self.stent_start_frame, self.stent_end_frame + 1)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_text(self):
        lines = []
        for field in dataclasses.fields(self):
            value = getattr(self, field.name)
            lines.append("{}={}".format(field.name,
                                        "" if value is None else value))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        raw = dict()
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise PullbackError("line {}: expected key=value".format(lineno),
                                    field=META_FILENAME)
            key, value = line.split("=", 1)
            raw[key.strip()] = value.strip()

        kwargs = dict()
        for field in dataclasses.fields(cls):
            if field.name not in raw:
                if field.default is dataclasses.MISSING:
                    raise PullbackError("missing", field=field.name)
                continue
            value = raw.pop(field.name)
            if value == "":
                if field.default is dataclasses.MISSING:
                    raise PullbackError("empty", field=field.name)
                kwargs[field.name] = None
                continue
            try:
                if field.type in (int, "int"):
                    kwargs[field.name] = int(value)
                elif field.type in (float, "float"):
                    kwargs[field.name] = float(value)
                else:
                    kwargs[field.name] = value
            except ValueError:
                raise PullbackError("cannot parse '{}'".format(value),
                                    field=field.name)
        if raw:
            raise PullbackError("unknown keys: {}".format(", ".join(sorted(raw))),
                                field=META_FILENAME)
        meta = cls(**kwargs)
        meta.check()
        return meta


class Pullback:
    """Ordered frames of label masks plus metadata

    Parameters
    ----------
    meta : PullbackMeta
    frames : array-like, (frame_count, height, width)
        Label masks. The array is copied and made read-only; a pullback is
        immutable after construction.
    """
    def __init__(self, meta, frames):
        frames = np.array(frames, dtype=np.uint8)
        if frames.ndim != 3:
            raise PullbackError("frames must be a (frames, height, width) array",
                                field="frames")
        meta.check(require_stent=False)
        if frames.shape[0] != meta.frame_count:
            raise PullbackError("{} frames given, frame_count is {}".format(
                frames.shape[0], meta.frame_count), field="frame_count")
        for index in range(frames.shape[0]):
            check_frame_mask(frames[index], index)
        frames.setflags(write=False)
        self.meta = meta
        self.frames = frames

    @property
    def frame_count(self):
        return self.frames.shape[0]

    @property
    def height(self):
        return self.frames.shape[1]

    @property
    def width(self):
        return self.frames.shape[2]

    def check_lesion_lumen(self):
        for index in self.meta.lesion_frames:
            if not np.any(self.frames[index] == LUMEN):
                raise PullbackError("no lumen pixels inside the lesion",
                                    frame=index, field="labels")

    def lumen_areas_mm2(self):
        counts = np.count_nonzero(self.frames == LUMEN, axis=(1, 2))
        return counts*self.meta.pixel_spacing_mm**2

    def __eq__(self, other):
        if not isinstance(other, Pullback):
            return NotImplemented
        return self.meta == other.meta and np.array_equal(self.frames, other.frames)

    def __repr__(self):
        return "Pullback('{}', {}, {} frames, {}x{})".format(
            self.meta.pullback_id, self.meta.phase, self.frame_count,
            self.width, self.height)


def check_frame_mask(labels, index=None):
    bad = ~np.isin(labels, LABELS)
    if np.any(bad):
        value = int(labels[bad][0])
        raise PullbackError("label value {} outside {{0,1,2}}".format(value),
                            frame=index, field="labels")


def _pgm_tokens(data, count):
    tokens = []
    pos = 0
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos+1].isspace():
            pos += 1
        if data[pos:pos+1] == b"#":
            while pos < len(data) and data[pos:pos+1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos+1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated header")
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates the header from the raster
    return tokens, pos + 1


def read_pgm(filename):
    with open(filename, "rb") as f:
        data = f.read()
    try:
        tokens, offset = _pgm_tokens(data, 4)
        if tokens[0] != b"P5":
            raise ValueError("not a binary PGM (P5) file")
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as e:
        raise PullbackError("{}: {}".format(os.path.basename(filename), e))
    if maxval != 255:
        raise PullbackError("{}: maxval {} (expected 255)".format(
            os.path.basename(filename), maxval))
    raster = data[offset:offset + width*height]
    if len(raster) != width*height:
        raise PullbackError("{}: truncated raster".format(
            os.path.basename(filename)))
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy()


def write_pgm(filename, labels):
    labels = np.asarray(labels, dtype=np.uint8)
    height, width = labels.shape
    with open(filename, "wb") as f:
        f.write("P5\n{} {}\n255\n".format(width, height).encode("ascii"))
        f.write(np.ascontiguousarray(labels).tobytes())


def load_pullback(path):
    meta_path = os.path.join(path, META_FILENAME)
    try:
        with open(meta_path, encoding="utf-8") as f:
            meta = PullbackMeta.from_text(f.read())
    except FileNotFoundError:
        raise PullbackError("no {} in {}".format(META_FILENAME, path))

    indices = set()
    for name in os.listdir(path):
        m = _frame_re.match(name)
        if m:
            indices.add(int(m.group(1)))
    expected = set(range(meta.frame_count))
    missing = sorted(expected - indices)
    if missing:
        raise PullbackError("mask file {} missing".format(frame_filename(missing[0])),
                            frame=missing[0], field="frame_count")
    extra = sorted(indices - expected)
    if extra:
        raise PullbackError("unexpected mask file {} (frame_count is {})".format(
            frame_filename(extra[0]), meta.frame_count),
            frame=extra[0], field="frame_count")

    frames = []
    shape = None
    for index in range(meta.frame_count):
        labels = read_pgm(os.path.join(path, frame_filename(index)))
        if shape is None:
            shape = labels.shape
        elif labels.shape != shape:
            raise PullbackError("size {}x{} differs from frame 0 ({}x{})".format(
                labels.shape[1], labels.shape[0], shape[1], shape[0]),
                frame=index, field="labels")
        check_frame_mask(labels, index)
        frames.append(labels)
    pullback = Pullback(meta, np.stack(frames))
    pullback.check_lesion_lumen()
    logger.debug("loaded %r from %s", pullback, path)
    return pullback


def save_pullback(pullback, path):
    os.makedirs(path, exist_ok=True)
    write_to_file(os.path.join(path, META_FILENAME), pullback.meta.to_text())
    for index in range(pullback.frame_count):
        write_pgm(os.path.join(path, frame_filename(index)),
                  pullback.frames[index])


def validate_pair(pre, post):
    """List the reasons a pre/post pair cannot be analyzed together.

    An empty list means the pair is analyzable.
    """
    report = []
    if pre.meta.phase != PRE:
        report.append("pre pullback '{}' has phase '{}'".format(
            pre.meta.pullback_id, pre.meta.phase))
    if post.meta.phase != POST:
        report.append("post pullback '{}' has phase '{}'".format(
            post.meta.pullback_id, post.meta.phase))
    if pre.meta.patient_id != post.meta.patient_id:
        report.append("patient_id mismatch: '{}' vs '{}'".format(
            pre.meta.patient_id, post.meta.patient_id))
    if not np.isclose(pre.meta.pixel_spacing_mm, post.meta.pixel_spacing_mm,
                      rtol=1e-9, atol=0):
        report.append("pixel_spacing_mm mismatch: {} vs {}".format(
            pre.meta.pixel_spacing_mm, post.meta.pixel_spacing_mm))
    if not np.isclose(pre.meta.frame_pitch_mm, post.meta.frame_pitch_mm,
                      rtol=1e-9, atol=0):
        report.append("frame_pitch_mm mismatch: {} vs {}".format(
            pre.meta.frame_pitch_mm, post.meta.frame_pitch_mm))
    if not post.meta.has_stent():
        report.append("post pullback '{}' lacks stent bounds".format(
            post.meta.pullback_id))
    if (pre.width, pre.height) != (post.width, post.height):
        report.append("frame size mismatch: {}x{} vs {}x{}".format(
            pre.width, pre.height, post.width, post.height))
    return report
