"""Dynamic mode decomposition of a stacked-RGB snapshot matrix.

The full propagator ``A`` with ``P2 = A @ P1`` is never formed. Everything
happens in the ``r``-dimensional subspace spanned by the left singular
vectors of ``P1``::

    P1 = U diag(S) V^T
    Htilde = U^T P2 V diag(S)^-1
    Htilde w_j = sigma_j w_j
    Psi = P2 V diag(S)^-1 W
    mu_j = log(sigma_j) / dt

The background is the mode whose Fourier frequency ``mu_j`` lies closest
to the origin.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _threads
from .errors import (
    DegenerateInputError,
    DimensionError,
    NoBackgroundModeError,
    NumericalError,
    SequenceTooShortError,
    UsageError,
)

__all__ = [
    "DEFAULT_RANK_TOL",
    "DEFAULT_DELTA_T",
    "SnapshotMatrix",
    "SnapshotSplit",
    "ThinSvd",
    "DmdResult",
    "ModeSelection",
    "split_snapshots",
    "snapshot_svd",
    "reduced_operator",
    "eigen_reduced",
    "dynamic_modes",
    "fourier_frequencies",
    "select_background_mode",
    "companion_oracle",
    "decompose",
]

DEFAULT_RANK_TOL = 1e-10
DEFAULT_DELTA_T = 1.0
SVD_METHODS = ("qr", "snapshots")


# Data containers =============================================================
@dataclass(frozen=True)
class SnapshotMatrix:
    """Frames as columns, channel blocks stacked R, G, B.

    Rows ``[0, mn)`` hold the red plane of each frame in row-major scanline
    order, rows ``[mn, 2mn)`` the green plane and ``[2mn, 3mn)`` the blue one.
    """

    values: np.ndarray
    m: int
    n: int

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 2:
            raise DimensionError(f"snapshot matrix must be 2-D, got {values.ndim}-D")
        if self.m < 1 or self.n < 1:
            raise DimensionError(f"invalid frame size {self.m}x{self.n}")
        if values.shape[0] != 3 * self.m * self.n:
            raise DimensionError(
                f"snapshot matrix has {values.shape[0]} rows, expected "
                f"3*{self.m}*{self.n} = {3 * self.m * self.n}"
            )
        if values.shape[1] < 1:
            raise DimensionError("snapshot matrix has no columns")
        object.__setattr__(self, "values", values)

    @property
    def N(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class SnapshotSplit:
    P1: np.ndarray
    P2: np.ndarray


@dataclass(frozen=True)
class ThinSvd:
    """Truncated thin SVD ``P1 ~= U @ diag(S) @ V.T``.

    ``S`` is strictly positive and non-increasing; ``U`` and ``V`` have
    orthonormal columns. ``discarded`` holds the singular values dropped by
    the rank tolerance.
    """

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray
    discarded: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def rank(self) -> int:
        return self.S.shape[0]


@dataclass(frozen=True)
class DmdResult:
    """Everything the decomposition produces for one snapshot matrix."""

    Htilde: np.ndarray
    sigma: np.ndarray
    omega: np.ndarray
    Psi: np.ndarray
    mu: np.ndarray
    delta_t: float
    svd: ThinSvd

    @property
    def rank(self) -> int:
        return self.svd.rank

    @property
    def singular_values(self) -> np.ndarray:
        return self.svd.S

    @property
    def valid(self) -> np.ndarray:
        """Mask of modes with a defined Fourier frequency (``sigma != 0``)."""
        return self.sigma != 0


@dataclass(frozen=True)
class ModeSelection:
    index: int
    abs_mu: float
    background_vector: np.ndarray


# Helpers =====================================================================
def _as_matrix(P) -> np.ndarray:
    if isinstance(P, SnapshotMatrix):
        return P.values
    P = np.asarray(P)
    if P.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {P.shape}")
    return P


def _fix_signs(U: np.ndarray, V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flip singular vector pairs so each column of ``V`` has its
    largest-magnitude entry positive. Makes the factors reproducible across
    SVD routes."""
    if V.size == 0:
        return U, V
    pivot = V[np.argmax(np.abs(V), axis=0), np.arange(V.shape[1])]
    signs = np.where(pivot < 0, -1.0, 1.0)
    return U * signs, V * signs


# Operations ==================================================================
def split_snapshots(P) -> SnapshotSplit:
    """Split ``[p_1 ... p_N]`` into ``P1 = [p_1 ... p_{N-1}]`` and
    ``P2 = [p_2 ... p_N]``."""
    values = _as_matrix(P)
    if values.shape[1] < 2:
        raise SequenceTooShortError(
            f"need at least 2 snapshots for DMD, got {values.shape[1]}"
        )
    return SnapshotSplit(P1=values[:, :-1], P2=values[:, 1:])


def snapshot_svd(P1, rank_tol: float = DEFAULT_RANK_TOL, method: str = "qr") -> ThinSvd:
    """Thin SVD of the first snapshot block, truncated at ``rank_tol * s_max``.

    Parameters
    ----------
    P1 : (M, K) array_like
        First snapshot block. Typically ``M = 3mn`` is far larger than ``K``.
    rank_tol : float
        Relative tolerance in ``(0, 1)``. Singular values ``s_i <= rank_tol *
        s_max`` are discarded.
    method : {"qr", "snapshots"}
        ``"qr"`` (default) factors ``P1 = QR`` and takes the SVD of the small
        ``K x K`` factor ``R``. ``"snapshots"`` is the classical method of
        snapshots: eigendecomposition of the Gram matrix ``P1^T P1``. Both cost
        ``O(M K^2)``, but the Gram route squares the condition number, so
        singular values below about ``sqrt(eps) * s_max`` come out as noise.
        Those spurious directions produce phantom modes near ``sigma = 1`` on
        exactly low-rank sequences, hence the QR default. The snapshots route
        therefore never keeps singular values below ``sqrt(K * eps) * s_max``,
        whatever ``rank_tol`` says.

    Returns
    -------
    ThinSvd
    """
    if not 0.0 < rank_tol < 1.0:
        raise UsageError(f"rank tolerance must lie in (0, 1), got {rank_tol}")
    if method not in SVD_METHODS:
        raise UsageError(f"unknown SVD method {method!r}; choose from {SVD_METHODS}")
    A = np.asarray(P1, dtype=np.float64)
    if A.ndim != 2 or A.size == 0:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NumericalError("snapshot block contains non-finite values")

    with _threads.limited():
        if method == "qr":
            Q, R = np.linalg.qr(A, mode="reduced")
            Ur, s, Vt = np.linalg.svd(R, full_matrices=False)
            U = Q @ Ur
            V = Vt.T
        else:
            gram = A.T @ A
            evals, evecs = np.linalg.eigh(gram)
            order = np.argsort(evals, kind="stable")[::-1]
            s = np.sqrt(np.clip(evals[order], 0.0, None))
            V = evecs[:, order]
            U = None

    if s.size == 0 or not s[0] > 0.0:
        raise DegenerateInputError("snapshot block is all zero; no singular value to retain")
    cutoff = rank_tol
    if method == "snapshots":
        cutoff = max(rank_tol, float(np.sqrt(A.shape[1] * np.finfo(np.float64).eps)))
    keep = s > cutoff * s[0]
    r = int(np.count_nonzero(keep))
    S, discarded = s[:r], s[r:]
    V = V[:, :r]
    if U is None:
        with _threads.limited():
            U = (A @ V) / S
    else:
        U = U[:, :r]
    U, V = _fix_signs(U, V)
    return ThinSvd(U=U, S=S, V=V, discarded=discarded)


def reduced_operator(svd: ThinSvd, P2) -> np.ndarray:
    """Project the snapshot dynamics onto the POD basis:
    ``Htilde = U^T @ P2 @ V @ diag(S)^-1``."""
    P2 = np.asarray(P2, dtype=np.float64)
    if P2.ndim != 2 or P2.shape != (svd.U.shape[0], svd.V.shape[0]):
        raise DimensionError(
            f"P2 has shape {P2.shape}, expected "
            f"({svd.U.shape[0]}, {svd.V.shape[0]}) to match the SVD factors"
        )
    with _threads.limited():
        return ((svd.U.T @ P2) @ svd.V) / svd.S


def eigen_reduced(Htilde) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of the reduced operator.

    Eigenvalues are returned in descending order of magnitude (stable, so
    equal magnitudes keep LAPACK's order); each eigenvector column has unit
    2-norm.
    """
    H = np.asarray(Htilde, dtype=np.float64)
    if H.ndim != 2 or H.shape[0] != H.shape[1] or H.shape[0] < 1:
        raise DimensionError(f"reduced operator must be square and non-empty, got {H.shape}")
    if not np.all(np.isfinite(H)):
        raise NumericalError(
            f"reduced operator ({H.shape[0]}x{H.shape[1]}) contains non-finite entries"
        )
    try:
        sigma, omega = np.linalg.eig(H)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"eigensolver failed on {H.shape[0]}x{H.shape[1]} reduced operator "
            f"(max |entry| = {np.abs(H).max():.3e}): {exc}"
        ) from exc
    sigma = sigma.astype(np.complex128)
    omega = omega.astype(np.complex128)
    order = np.argsort(-np.abs(sigma), kind="stable")
    sigma, omega = sigma[order], omega[:, order]
    omega = omega / np.linalg.norm(omega, axis=0)
    return sigma, omega


def dynamic_modes(P2, svd: ThinSvd, omega) -> np.ndarray:
    """``Psi = P2 @ V @ diag(S)^-1 @ omega``, one mode per column."""
    P2 = np.asarray(P2, dtype=np.float64)
    omega = np.asarray(omega)
    if P2.ndim != 2 or P2.shape[1] != svd.V.shape[0]:
        raise DimensionError(
            f"P2 has shape {P2.shape}; expected {svd.V.shape[0]} columns"
        )
    if omega.ndim != 2 or omega.shape[0] != svd.rank:
        raise DimensionError(
            f"eigenvector matrix has shape {omega.shape}; expected {svd.rank} rows"
        )
    # (N-1) x r coefficients first, so the tall product happens once
    with _threads.limited():
        return P2 @ ((svd.V / svd.S) @ omega)


def fourier_frequencies(sigma, delta_t: float = DEFAULT_DELTA_T) -> np.ndarray:
    """Continuous-time frequencies ``mu_j = log(sigma_j) / delta_t``.

    Uses the principal logarithm with the argument in ``(-pi, pi]``. A zero
    eigenvalue has no frequency and yields ``nan + nan*j``.
    """
    if not delta_t > 0:
        raise UsageError(f"time step must be positive, got {delta_t}")
    sigma = np.asarray(sigma, dtype=np.complex128)
    mu = np.full(sigma.shape, complex(np.nan, np.nan))
    ok = sigma != 0
    z = sigma[ok]
    # adding +0.0 turns a -0.0 imaginary part into +0.0, so the negative real
    # axis maps to +pi rather than -pi
    arg = np.arctan2(z.imag + 0.0, z.real)
    mu[ok] = (np.log(np.abs(z)) + 1j * arg) / delta_t
    return mu


def select_background_mode(dmd: DmdResult) -> ModeSelection:
    """Pick the valid mode whose frequency is closest to zero.

    Ties go to the lowest index in the descending-``|sigma|`` ordering.
    """
    valid = np.asarray(dmd.valid)
    if not valid.any():
        raise NoBackgroundModeError("every eigenvalue is zero; no background mode exists")
    magnitudes = np.where(valid, np.abs(dmd.mu), np.inf)
    index = int(np.argmin(magnitudes))
    return ModeSelection(
        index=index,
        abs_mu=float(magnitudes[index]),
        background_vector=dmd.Psi[:, index],
    )


def companion_oracle(split: SnapshotSplit) -> tuple[np.ndarray, np.ndarray]:
    """Companion-matrix form of the snapshot dynamics, for cross-checking.

    Solves ``min ||P1 c - p_N||`` (minimum-norm solution) and assembles the
    ``(N-1) x (N-1)`` shift matrix with unit subdiagonal and ``c`` as last
    column, so that ``P1 @ H ~= P2``.
    """
    P1 = np.asarray(split.P1, dtype=np.float64)
    P2 = np.asarray(split.P2, dtype=np.float64)
    k = P1.shape[1]
    if k < 2:
        raise SequenceTooShortError(
            f"companion matrix needs at least 3 snapshots, got {k + 1}"
        )
    c, *_ = np.linalg.lstsq(P1, P2[:, -1], rcond=None)
    H = np.zeros((k, k))
    H[1:, :-1] = np.eye(k - 1)
    H[:, -1] = c
    return H, np.linalg.eigvals(H).astype(np.complex128)


def decompose(
    P,
    rank_tol: float = DEFAULT_RANK_TOL,
    delta_t: float = DEFAULT_DELTA_T,
    svd_method: str = "qr",
) -> DmdResult:
    """Run the whole chain: split, SVD, reduced operator, eigenpairs, modes
    and frequencies."""
    split = split_snapshots(P)
    svd = snapshot_svd(split.P1, rank_tol=rank_tol, method=svd_method)
    Htilde = reduced_operator(svd, split.P2)
    sigma, omega = eigen_reduced(Htilde)
    Psi = dynamic_modes(split.P2, svd, omega)
    mu = fourier_frequencies(sigma, delta_t)
    return DmdResult(
        Htilde=Htilde,
        sigma=sigma,
        omega=omega,
        Psi=Psi,
        mu=mu,
        delta_t=float(delta_t),
        svd=svd,
    )
