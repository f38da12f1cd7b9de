"""Colour Quality Measure: PSNR on reversible-YUV planes, luma-weighted."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import DimensionError, NumericalError

__all__ = [
    "LUMA_WEIGHT",
    "CHROMA_WEIGHT",
    "PSNR_CAP",
    "YuvPlanes",
    "CqmReport",
    "rct_yuv",
    "rct_rgb",
    "psnr",
    "cqm",
]

# rod/cone ratio weights of the CQM definition
LUMA_WEIGHT = 0.9449
CHROMA_WEIGHT = 0.0551
PSNR_CAP = 100.0
PEAK = 255.0


@dataclass(frozen=True)
class YuvPlanes:
    Y: np.ndarray
    U: np.ndarray
    V: np.ndarray


@dataclass(frozen=True)
class CqmReport:
    psnr_y: float
    psnr_u: float
    psnr_v: float
    cqm: float
    capped: bool
    luma_weight: float = LUMA_WEIGHT
    chroma_weight: float = CHROMA_WEIGHT

    def __post_init__(self):
        if abs(self.luma_weight + self.chroma_weight - 1.0) > 1e-12:
            raise ValueError("CQM weights must sum to 1")

    def to_dict(self) -> dict:
        return {
            "psnrY": self.psnr_y,
            "psnrU": self.psnr_u,
            "psnrV": self.psnr_v,
            "cqm": self.cqm,
            "capped": self.capped,
        }

    def as_record(self) -> dict:
        return asdict(self)


def rct_yuv(image) -> YuvPlanes:
    """Reversible colour transform on an ``(m, n, 3)`` image in 0-255 scale.

    ``Y = (R + 2G + B) / 4``, ``U = B - G``, ``V = R - G``, in floating point
    (no flooring).
    """
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 3 or img.shape[-1] != 3:
        raise DimensionError(f"expected an (m, n, 3) image, got {img.shape}")
    if not np.all(np.isfinite(img)):
        raise NumericalError("image contains non-finite values")
    R, G, B = img[..., 0], img[..., 1], img[..., 2]
    return YuvPlanes(Y=(R + 2.0 * G + B) / 4.0, U=B - G, V=R - G)


def rct_rgb(planes: YuvPlanes) -> np.ndarray:
    """Exact inverse of :func:`rct_yuv`."""
    G = planes.Y - (planes.U + planes.V) / 4.0
    return np.stack([planes.V + G, G, planes.U + G], axis=-1)


def _psnr(a: np.ndarray, b: np.ndarray, peak: float) -> tuple[float, bool]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"plane shapes differ: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP, True
    return 10.0 * np.log10(peak * peak / mse), False


def psnr(a, b, peak: float = PEAK) -> float:
    """Peak signal-to-noise ratio in dB; identical inputs give 100 dB."""
    return _psnr(a, b, peak)[0]


def cqm(ground_truth, background) -> CqmReport:
    """Score ``background`` against ``ground_truth`` (both 0-255 scale).

    The result is symmetric in its arguments.
    """
    gt = np.asarray(ground_truth, dtype=np.float64)
    bg = np.asarray(background, dtype=np.float64)
    if gt.shape != bg.shape:
        raise DimensionError(f"image sizes differ: {gt.shape} vs {bg.shape}")
    a, b = rct_yuv(gt), rct_yuv(bg)
    py, cy = _psnr(a.Y, b.Y, PEAK)
    pu, cu = _psnr(a.U, b.U, PEAK)
    pv, cv = _psnr(a.V, b.V, PEAK)
    score = py * LUMA_WEIGHT + ((pu + pv) / 2.0) * CHROMA_WEIGHT
    return CqmReport(
        psnr_y=float(py),
        psnr_u=float(pu),
        psnr_v=float(pv),
        cqm=float(score),
        capped=bool(cy or cu or cv),
    )
