"""Colour scene-background extraction with dynamic mode decomposition."""

from .dmd import (
    DmdResult,
    ModeSelection,
    SnapshotMatrix,
    SnapshotSplit,
    ThinSvd,
    companion_oracle,
    decompose,
    dynamic_modes,
    eigen_reduced,
    fourier_frequencies,
    reduced_operator,
    select_background_mode,
    snapshot_svd,
    split_snapshots,
)
from .errors import (
    DataShapeError,
    DegenerateInputError,
    DimensionError,
    DmdBgError,
    FrameIOError,
    NoBackgroundModeError,
    NumericalError,
    SequenceTooShortError,
    UsageError,
)
from .imaging import (
    BackgroundModel,
    FrameSequence,
    build_data_matrix,
    load_sequence,
    read_image,
    normalize_mode_image,
    reinhard_transfer,
    statistical_mode_image,
    unstack_vector,
)
from .kernels import BACKEND as KERNEL_BACKEND
from .metrics import CqmReport, cqm, psnr, rct_yuv
from .pipeline import ExtractConfig, extract_background, median_baseline

__version__ = "0.1.0"
