"""Frame I/O, RGB stacking, mode-to-image conversion and colour transfer."""

from __future__ import annotations

import fnmatch
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from . import kernels
from .dmd import SnapshotMatrix
from .errors import DimensionError, FrameIOError, NumericalError, UsageError

logger = logging.getLogger(__name__)

__all__ = [
    "IMAGE_SUFFIXES",
    "FrameSequence",
    "BackgroundModel",
    "ColorStats",
    "natural_sort_key",
    "read_image",
    "write_png",
    "quantize_u8",
    "load_sequence",
    "build_data_matrix",
    "unstack_vector",
    "unstack_matrix",
    "normalize_mode_image",
    "statistical_mode_image",
    "rgb_to_lab",
    "lab_to_rgb",
    "color_stats",
    "match_lab_statistics",
    "reinhard_transfer",
]

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp")

# RGB -> LMS cone space, as published by Reinhard et al. (2001)
RGB_TO_LMS = np.array(
    [
        [0.3811, 0.5783, 0.0402],
        [0.1967, 0.7244, 0.0782],
        [0.0241, 0.1288, 0.8444],
    ]
)
# The published inverse is rounded to 4 digits and is off by ~7e-3; the exact
# inverse keeps the round trip at machine precision.
LMS_TO_RGB = np.linalg.inv(RGB_TO_LMS)
LOG_LMS_TO_LAB = np.diag([1 / np.sqrt(3), 1 / np.sqrt(6), 1 / np.sqrt(2)]) @ np.array(
    [[1.0, 1.0, 1.0], [1.0, 1.0, -2.0], [1.0, -1.0, 0.0]]
)
LAB_TO_LOG_LMS = np.array(
    [[1.0, 1.0, 1.0], [1.0, 1.0, -1.0], [1.0, -2.0, 0.0]]
) @ np.diag([np.sqrt(3) / 3, np.sqrt(6) / 6, np.sqrt(2) / 2])

LMS_FLOOR = 1e-4
STD_FLOOR = 1e-12


# Containers ==================================================================
@dataclass(frozen=True)
class FrameSequence:
    """``N`` same-sized 8-bit RGB frames, stored as one ``(N, m, n, 3)`` array."""

    frames: np.ndarray
    source_names: tuple[str, ...] = ()

    def __post_init__(self):
        frames = np.asarray(self.frames)
        if frames.ndim != 4 or frames.shape[-1] != 3:
            raise DimensionError(f"frames must have shape (N, m, n, 3), got {frames.shape}")
        if frames.shape[0] < 1:
            raise DimensionError("a frame sequence needs at least one frame")
        if frames.dtype != np.uint8:
            raise TypeError(f"frames must be uint8, got {frames.dtype}")
        object.__setattr__(self, "frames", frames)
        names = tuple(self.source_names) or tuple(f"frame{i:05d}" for i in range(frames.shape[0]))
        if len(names) != frames.shape[0]:
            raise DimensionError(f"{len(names)} source names for {frames.shape[0]} frames")
        object.__setattr__(self, "source_names", names)

    @property
    def N(self) -> int:
        return self.frames.shape[0]

    @property
    def m(self) -> int:
        return self.frames.shape[1]

    @property
    def n(self) -> int:
        return self.frames.shape[2]


@dataclass(frozen=True)
class BackgroundModel:
    image: np.ndarray
    mode_index: int | None = None
    abs_mu: float | None = None
    color_transfer_applied: bool = False

    def __post_init__(self):
        image = np.asarray(self.image, dtype=np.float64)
        if image.ndim != 3 or image.shape[-1] != 3:
            raise DimensionError(f"background image must be (m, n, 3), got {image.shape}")
        object.__setattr__(self, "image", image)

    def to_u8(self) -> np.ndarray:
        return quantize_u8(self.image)


@dataclass(frozen=True)
class ColorStats:
    mean: np.ndarray = field(default_factory=lambda: np.zeros(3))
    std: np.ndarray = field(default_factory=lambda: np.zeros(3))


# File handling ===============================================================
_DIGITS = re.compile(r"(\d+)")


def natural_sort_key(name: str) -> tuple:
    """Sort key comparing digit runs numerically and text case-insensitively.

    >>> sorted(["in0100.png", "in0009.png", "in0010.png"], key=natural_sort_key)
    ['in0009.png', 'in0010.png', 'in0100.png']
    """
    parts = _DIGITS.split(name)
    return tuple(int(p) if i % 2 else p.lower() for i, p in enumerate(parts))


def read_image(path: str | Path) -> np.ndarray:
    """Decode an image file to an ``(m, n, 3)`` uint8 RGB array.

    Alpha is dropped; single-channel images are replicated to three channels
    with a warning.
    """
    path = Path(path)
    try:
        with Image.open(path) as img:
            img.load()
            mode = img.mode
            if mode in ("L", "LA", "I", "I;16", "F", "1"):
                logger.warning("%s is grayscale; replicating to 3 channels", path.name)
                gray = np.asarray(img.convert("L"), dtype=np.uint8)
                return np.repeat(gray[..., None], 3, axis=2)
            return np.asarray(img.convert("RGB"), dtype=np.uint8)
    except FileNotFoundError as exc:
        raise FrameIOError(f"file not found: {path}") from exc
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise FrameIOError(f"cannot decode image {path}: {exc}") from exc


def quantize_u8(image: np.ndarray) -> np.ndarray:
    """Map ``[0, 1]`` floats to uint8, rounding halves away from zero."""
    image = np.asarray(image, dtype=np.float64)
    if not np.all(np.isfinite(image)):
        raise NumericalError("cannot quantise an image with non-finite values")
    return np.floor(np.clip(image, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def write_png(path: str | Path, image: np.ndarray) -> Path:
    """Write an 8-bit PNG. Float input is taken to be in ``[0, 1]``."""
    path = Path(path)
    image = np.asarray(image)
    if image.dtype != np.uint8:
        image = quantize_u8(image)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        Image.fromarray(image, mode="RGB").save(path, format="PNG")
    except OSError as exc:
        raise FrameIOError(f"cannot write {path}: {exc}") from exc
    return path


def load_sequence(directory: str | Path, pattern: str = "*") -> FrameSequence:
    """Load every image in ``directory`` whose name matches ``pattern``.

    Files are ordered by :func:`natural_sort_key`, so ``in9.png`` comes before
    ``in10.png``. Only PNG, JPEG and BMP files are considered.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FrameIOError(f"not a directory: {directory}")
    paths = [
        p
        for p in directory.iterdir()
        if p.is_file()
        and p.suffix.lower() in IMAGE_SUFFIXES
        and fnmatch.fnmatch(p.name, pattern)
    ]
    if not paths:
        raise FrameIOError(f"no images matching {pattern!r} in {directory}")
    paths.sort(key=lambda p: natural_sort_key(p.name))

    frames = [read_image(p) for p in paths]
    shape = frames[0].shape
    offenders = [p.name for p, f in zip(paths, frames) if f.shape != shape]
    if offenders:
        raise DimensionError(
            f"frames differ in size from {paths[0].name} {shape[:2]}: " + ", ".join(offenders)
        )
    logger.info("loaded %d frames of %dx%d from %s", len(frames), shape[0], shape[1], directory)
    return FrameSequence(np.stack(frames), tuple(p.name for p in paths))


# Stacking ====================================================================
def build_data_matrix(seq: FrameSequence) -> SnapshotMatrix:
    """Stack each frame into a ``3mn`` column: R plane, then G, then B, each
    flattened in row-major order."""
    N, m, n, _ = seq.frames.shape
    values = seq.frames.transpose(3, 1, 2, 0).reshape(3 * m * n, N).astype(np.float64)
    return SnapshotMatrix(values, m, n)


def unstack_vector(v, m: int, n: int) -> np.ndarray:
    """Inverse of the column layout: a ``3mn`` vector to ``(3, m, n)`` planes.

    Complex input is reduced to its elementwise magnitude.
    """
    v = np.asarray(v)
    if v.ndim != 1 or v.shape[0] != 3 * m * n:
        raise DimensionError(f"vector of shape {v.shape} does not hold 3*{m}*{n} values")
    if np.iscomplexobj(v):
        v = np.abs(v)
    return v.astype(np.float64).reshape(3, m, n)


def unstack_matrix(P: SnapshotMatrix) -> np.ndarray:
    """Recover the ``(N, m, n, 3)`` frame array from a snapshot matrix."""
    planes = P.values.reshape(3, P.m, P.n, P.N)
    return planes.transpose(3, 1, 2, 0)


def normalize_mode_image(planes: np.ndarray, joint: bool = False) -> np.ndarray:
    """Min-max scale ``(3, m, n)`` planes to an ``(m, n, 3)`` image in [0, 1].

    Channels are scaled independently unless ``joint`` is set, in which case
    one min/max over all three channels is used. A constant channel (or
    constant image, with ``joint``) becomes 0.5.
    """
    planes = np.asarray(planes, dtype=np.float64)
    if planes.ndim != 3 or planes.shape[0] != 3:
        raise DimensionError(f"expected (3, m, n) planes, got {planes.shape}")
    if not np.all(np.isfinite(planes)):
        raise NumericalError("mode planes contain non-finite values")
    if joint:
        lo = np.full((3, 1, 1), planes.min())
        hi = np.full((3, 1, 1), planes.max())
    else:
        lo = planes.min(axis=(1, 2), keepdims=True)
        hi = planes.max(axis=(1, 2), keepdims=True)
    span = hi - lo
    flat = span == 0
    out = np.where(flat, 0.5, (planes - lo) / np.where(flat, 1.0, span))
    return np.clip(out, 0.0, 1.0).transpose(1, 2, 0)


def statistical_mode_image(seq: FrameSequence, statistic: str = "mode") -> np.ndarray:
    """Per-pixel temporal statistic of the sequence, as uint8 ``(m, n, 3)``.

    ``"mode"`` takes the most frequent value (smallest on ties) and
    ``"median"`` the lower median.
    """
    stack = seq.frames.reshape(seq.N, -1)
    if statistic == "mode":
        flat = kernels.temporal_mode(stack)
    elif statistic == "median":
        flat = kernels.lower_median(stack)
    else:
        raise UsageError(f"unknown statistic {statistic!r}; use 'mode' or 'median'")
    return flat.reshape(seq.m, seq.n, 3)


# Colour transfer =============================================================
def _as_unit_rgb(image) -> np.ndarray:
    if isinstance(image, BackgroundModel):
        image = image.image
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[-1] != 3:
        raise DimensionError(f"expected an (m, n, 3) image, got {image.shape}")
    if image.dtype == np.uint8:
        return image.astype(np.float64) / 255.0
    return image.astype(np.float64)


def rgb_to_lab(rgb: np.ndarray) -> np.ndarray:
    """RGB in [0, 1] to the decorrelated l-alpha-beta space (base-10 log).

    LMS responses are floored at ``1e-4`` before the logarithm so black
    pixels stay finite.
    """
    lms = rgb @ RGB_TO_LMS.T
    log_lms = np.log10(np.maximum(lms, LMS_FLOOR))
    return log_lms @ LOG_LMS_TO_LAB.T


def lab_to_rgb(lab: np.ndarray) -> np.ndarray:
    lms = 10.0 ** (lab @ LAB_TO_LOG_LMS.T)
    return lms @ LMS_TO_RGB.T


def color_stats(image) -> ColorStats:
    """Per-channel mean and population standard deviation in l-alpha-beta."""
    lab = rgb_to_lab(_as_unit_rgb(image)).reshape(-1, 3)
    return ColorStats(mean=lab.mean(axis=0), std=lab.std(axis=0))


def match_lab_statistics(source, target) -> np.ndarray:
    """Shift and scale ``target`` in l-alpha-beta to the statistics of
    ``source``. Returns the unclamped RGB result."""
    src = _as_unit_rgb(source)
    tgt = _as_unit_rgb(target)
    if src.shape != tgt.shape:
        raise DimensionError(f"source {src.shape} and target {tgt.shape} differ in size")
    src_stats = color_stats(src)
    lab = rgb_to_lab(tgt)
    flat = lab.reshape(-1, 3)
    t_mean, t_std = flat.mean(axis=0), flat.std(axis=0)
    ratio = np.where(t_std < STD_FLOOR, 1.0, src_stats.std / np.where(t_std < STD_FLOOR, 1.0, t_std))
    lab = (lab - t_mean) * ratio + src_stats.mean
    return lab_to_rgb(lab)


def reinhard_transfer(source, target) -> BackgroundModel:
    """Give ``target`` the colour statistics of ``source``.

    Parameters
    ----------
    source : (m, n, 3) array
        Colour reference, uint8 or float in [0, 1].
    target : BackgroundModel or (m, n, 3) array
        Image to recolour, channels in [0, 1].

    Returns
    -------
    BackgroundModel
        The recoloured image clamped to [0, 1], with the provenance of
        ``target`` carried over.
    """
    rgb = np.clip(match_lab_statistics(source, target), 0.0, 1.0)
    if isinstance(target, BackgroundModel):
        return BackgroundModel(rgb, target.mode_index, target.abs_mu, True)
    return BackgroundModel(rgb, color_transfer_applied=True)
