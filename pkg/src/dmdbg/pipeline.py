"""End-to-end background extraction on a loaded frame sequence."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np

from . import dmd, kernels
from .errors import UsageError
from .imaging import (
    BackgroundModel,
    FrameSequence,
    build_data_matrix,
    normalize_mode_image,
    reinhard_transfer,
    statistical_mode_image,
    unstack_vector,
)

logger = logging.getLogger(__name__)

__all__ = ["ExtractConfig", "Extraction", "extract_background", "median_baseline", "realize_mode"]

COLOR_TRANSFER_CHOICES = ("on", "off", "both")
NORMALIZATION_CHOICES = ("per-channel", "joint")
REALIZATION_CHOICES = ("magnitude", "real")


@dataclass(frozen=True)
class ExtractConfig:
    rank_tol: float = dmd.DEFAULT_RANK_TOL
    delta_t: float = dmd.DEFAULT_DELTA_T
    color_transfer: str = "both"
    normalization: str = "per-channel"
    mode_realization: str = "magnitude"
    color_source: str = "mode"
    svd_method: str = "qr"

    def __post_init__(self):
        if not 0.0 < self.rank_tol < 1.0:
            raise UsageError(f"rank tolerance must lie in (0, 1), got {self.rank_tol}")
        if not self.delta_t > 0:
            raise UsageError(f"time step must be positive, got {self.delta_t}")
        for name, value, choices in (
            ("color_transfer", self.color_transfer, COLOR_TRANSFER_CHOICES),
            ("normalization", self.normalization, NORMALIZATION_CHOICES),
            ("mode_realization", self.mode_realization, REALIZATION_CHOICES),
            ("color_source", self.color_source, ("mode", "median")),
            ("svd_method", self.svd_method, dmd.SVD_METHODS),
        ):
            if value not in choices:
                raise UsageError(f"{name} must be one of {choices}, got {value!r}")

    @property
    def wants_transfer(self) -> bool:
        return self.color_transfer in ("on", "both")


@dataclass(frozen=True)
class Extraction:
    """Backgrounds plus the diagnostics needed to explain them."""

    dmd: BackgroundModel
    dmd_ct: BackgroundModel | None
    mode_index: int
    abs_mu: float
    sigma: complex
    rank: int
    n_frames: int
    seconds_dmd: float
    seconds_ct: float | None


def realize_mode(vector: np.ndarray, how: str = "magnitude") -> np.ndarray:
    """Turn a complex mode into a real ``3mn`` vector.

    The phase is first rotated so the largest-magnitude entry is real and
    positive, which makes ``"real"`` independent of the eigensolver's
    arbitrary phase.
    """
    vector = np.asarray(vector)
    if how == "magnitude":
        return np.abs(vector)
    if how == "real":
        pivot = vector[np.argmax(np.abs(vector))]
        if pivot != 0:
            vector = vector * (np.conj(pivot) / abs(pivot))
        return np.real(vector).astype(np.float64)
    raise UsageError(f"mode realization must be one of {REALIZATION_CHOICES}, got {how!r}")


def extract_background(seq: FrameSequence, config: ExtractConfig | None = None) -> Extraction:
    """Run the DMD background chain and, if configured, the colour transfer.

    The colour-transferred image reuses the already selected mode; the
    decomposition runs once.
    """
    config = config or ExtractConfig()
    t0 = time.perf_counter()
    P = build_data_matrix(seq)
    result = dmd.decompose(
        P, rank_tol=config.rank_tol, delta_t=config.delta_t, svd_method=config.svd_method
    )
    selection = dmd.select_background_mode(result)
    planes = unstack_vector(realize_mode(selection.background_vector, config.mode_realization), seq.m, seq.n)
    image = normalize_mode_image(planes, joint=config.normalization == "joint")
    background = BackgroundModel(image, selection.index, selection.abs_mu, False)
    seconds_dmd = time.perf_counter() - t0
    logger.info(
        "rank %d, selected mode %d, sigma=%s, |mu|=%.3e",
        result.rank,
        selection.index,
        result.sigma[selection.index],
        selection.abs_mu,
    )

    transferred, seconds_ct = None, None
    if config.wants_transfer:
        t1 = time.perf_counter()
        source = statistical_mode_image(seq, config.color_source)
        transferred = reinhard_transfer(source, background)
        seconds_ct = seconds_dmd + time.perf_counter() - t1

    return Extraction(
        dmd=background,
        dmd_ct=transferred,
        mode_index=selection.index,
        abs_mu=selection.abs_mu,
        sigma=complex(result.sigma[selection.index]),
        rank=result.rank,
        n_frames=seq.N,
        seconds_dmd=seconds_dmd,
        seconds_ct=seconds_ct,
    )


def median_baseline(seq: FrameSequence) -> np.ndarray:
    """Per-pixel, per-channel lower temporal median as a uint8 image."""
    return kernels.lower_median(seq.frames.reshape(seq.N, -1)).reshape(seq.m, seq.n, 3)
