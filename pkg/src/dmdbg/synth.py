"""Deterministic synthetic sequences with a known background.

Three kinds are available:

``static``
    Every frame is the same textured image.
``moving-square``
    A mid-gray square hops across a grid of cells, one cell per frame, in a
    seeded order. Each pixel is covered in at most ``ceil(N / cells)``
    frames, well under half the sequence.
``two-mode``
    A rectangle in the middle of the frame flickers sinusoidally with a
    period of ``FLICKER_PERIOD`` frames around the static background. The
    phase advances across the rectangle (a travelling wave), so the flicker
    spans two spatial patterns and shows up as a conjugate eigenvalue pair
    ``exp(+-2j*pi/FLICKER_PERIOD)``.

The output directory mirrors the SBI layout (``input/`` and ``GT/``) so the
benchmark harness can consume it directly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import UsageError
from .imaging import FrameSequence, write_png

__all__ = ["KINDS", "FLICKER_PERIOD", "Synthetic", "textured_background", "generate", "write_synthetic"]

KINDS = ("static", "moving-square", "two-mode")
FLICKER_PERIOD = 8
FLICKER_AMPLITUDE = 40.0
SQUARE_GRAY = 128


@dataclass(frozen=True)
class Synthetic:
    kind: str
    seed: int
    sequence: FrameSequence
    background: np.ndarray
    occlusion: np.ndarray
    flicker_mask: np.ndarray
    flicker_frequency: float

    @property
    def max_occlusion(self) -> int:
        return int(self.occlusion.max())

    def metadata(self) -> dict:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "frames": self.sequence.N,
            "width": self.sequence.n,
            "height": self.sequence.m,
            "max_occlusion": self.max_occlusion,
            "flicker_period": FLICKER_PERIOD if self.kind == "two-mode" else None,
            "flicker_frequency": self.flicker_frequency,
        }


def textured_background(height: int, width: int, rng: np.random.Generator) -> np.ndarray:
    """Smooth colour ramps plus noise, spanning 0..255 in every channel."""
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    fy = yy / max(height - 1, 1)
    fx = xx / max(width - 1, 1)
    base = np.stack(
        [20 + 200 * fx, 30 + 200 * fy, 40 + 180 * (fx + fy) / 2],
        axis=-1,
    )
    base += rng.integers(-15, 16, size=base.shape)
    base[0, 0] = 0
    base[-1, -1] = 255
    return np.clip(np.round(base), 0, 255).astype(np.uint8)


def generate(kind: str, frames: int, width: int, height: int, seed: int = 0) -> Synthetic:
    if kind not in KINDS:
        raise UsageError(f"unknown synthetic kind {kind!r}; choose from {KINDS}")
    if frames < 2:
        raise UsageError(f"need at least 2 frames, got {frames}")
    if width < 1 or height < 1:
        raise UsageError(f"invalid size {width}x{height}")

    rng = np.random.default_rng(seed)
    bg = textured_background(height, width, rng)
    stack = np.repeat(bg[None], frames, axis=0)
    occlusion = np.zeros((height, width), dtype=np.int64)
    mask = np.zeros((height, width), dtype=bool)
    freq = 0.0

    if kind == "moving-square":
        side = max(2, min(width, height) // 6)
        rows, cols = height // side, width // side
        cells = rows * cols
        if cells < 3:
            raise UsageError(f"{width}x{height} is too small for a moving square")
        order = np.concatenate(
            [rng.permutation(cells) for _ in range(math.ceil(frames / cells))]
        )[:frames]
        for t, cell in enumerate(order):
            y, x = (cell // cols) * side, (cell % cols) * side
            stack[t, y : y + side, x : x + side] = SQUARE_GRAY
            occlusion[y : y + side, x : x + side] += 1
        if 2 * occlusion.max() >= frames:
            raise UsageError(
                f"square covers a pixel in {occlusion.max()} of {frames} frames; "
                "use more frames or a larger image"
            )
    elif kind == "two-mode":
        mask[height // 4 : height - height // 4, width // 4 : width - width // 4] = True
        bgf = bg.astype(np.float64)
        amp = np.minimum(FLICKER_AMPLITUDE, np.minimum(bgf, 255.0 - bgf))
        freq = 2 * math.pi / FLICKER_PERIOD
        t = np.arange(frames, dtype=np.float64)[:, None, None, None]
        x0, x1 = width // 4, width - width // 4
        phase = 2 * math.pi * (np.arange(width) - x0) / max(x1 - x0, 1)
        phase = phase[None, None, :, None]
        wave = np.rint(bgf[None] + amp[None] * np.sin(freq * t + phase))
        stack = np.where(mask[None, :, :, None], wave, stack).astype(np.uint8)

    return Synthetic(
        kind=kind,
        seed=seed,
        sequence=FrameSequence(np.ascontiguousarray(stack)),
        background=bg,
        occlusion=occlusion,
        flicker_mask=mask,
        flicker_frequency=freq,
    )


def write_synthetic(synthetic: Synthetic, out_dir: str | Path) -> Path:
    """Write ``input/frameNNNN.png``, ``GT/gt.png`` and ``synth.json``."""
    out_dir = Path(out_dir)
    for i, frame in enumerate(synthetic.sequence.frames):
        write_png(out_dir / "input" / f"frame{i:04d}.png", frame)
    write_png(out_dir / "GT" / "gt.png", synthetic.background)
    (out_dir / "synth.json").write_text(json.dumps(synthetic.metadata(), indent=2) + "\n")
    return out_dir
