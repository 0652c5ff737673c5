"""Hermitian matrix primitives and the shared tolerance policy.

Every rank decision in the package goes through :func:`eig_cutoff`, so the
classical and quantum code paths agree on what counts as "zero".
"""
from __future__ import annotations

import contextlib
import contextvars
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import NotHermitian, NotPSD, NotSquare

ZERO_FLOOR = 1e-14


@dataclass(frozen=True)
class Tolerance:
    """Numerical tolerances.

    abs_eps
        Equality tolerance for Frobenius-norm comparisons, mixed as
        ``max(abs_eps, abs_eps * norm)``.
    eig_cut_rel
        Eigenvalues at or below ``eig_cut_rel * lambda_max`` are treated as
        zero; negatives inside that band are clamped instead of rejected.
    """

    abs_eps: float = 1e-9
    eig_cut_rel: float = 1e-10

    def __post_init__(self) -> None:
        if not (self.abs_eps > 0 and self.eig_cut_rel > 0):
            raise ValueError("tolerances must be strictly positive")

    def bound(self, *norms: float) -> float:
        return self.abs_eps * max(1.0, *norms)


DEFAULT_TOLERANCE = Tolerance()
_current: contextvars.ContextVar[Tolerance] = contextvars.ContextVar(
    "retrodiction_tolerance", default=DEFAULT_TOLERANCE
)


def get_tolerance(tol: Tolerance | None = None) -> Tolerance:
    return _current.get() if tol is None else tol


@contextlib.contextmanager
def use_tolerance(tol: Tolerance) -> Iterator[Tolerance]:
    """Temporarily replace the ambient tolerance (context-local)."""
    token = _current.set(tol)
    try:
        yield tol
    finally:
        _current.reset(token)


def eig_cutoff(scale: float, tol: Tolerance | None = None) -> float:
    """Threshold below which an eigenvalue of a PSD matrix counts as zero."""
    tol = get_tolerance(tol)
    if scale <= 0:
        return ZERO_FLOOR
    return tol.eig_cut_rel * scale


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def frob(m: np.ndarray) -> float:
    return float(np.linalg.norm(m))


def close(a: np.ndarray, b: np.ndarray, tol: Tolerance | None = None) -> bool:
    tol = get_tolerance(tol)
    return frob(a - b) <= tol.bound(frob(a), frob(b))


def rel_residual(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius distance normalized by ``max(1, |a|, |b|)``."""
    return frob(a - b) / max(1.0, frob(a), frob(b))


def _check_hermitian(m: np.ndarray, tol: Tolerance) -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NotSquare(f"expected a square matrix, got shape {m.shape}")
    norm = frob(m)
    if frob(m - dagger(m)) > tol.abs_eps * max(1.0, norm):
        raise NotHermitian(
            f"matrix deviates from Hermitian by {frob(m - dagger(m)):.3e}"
        )
    return (m + dagger(m)) / 2


def herm_eig(
    m: np.ndarray, tol: Tolerance | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns eigenvalues in descending order and the matching unitary
    eigenvector matrix (columns), so that ``m = V diag(lam) V^dagger``.
    """
    tol = get_tolerance(tol)
    h = _check_hermitian(m, tol)
    lam, vec = np.linalg.eigh(h)
    return lam[::-1].copy(), vec[:, ::-1].copy()


def _psd_spectrum(
    m: np.ndarray, tol: Tolerance, scale: float | None
) -> tuple[np.ndarray, np.ndarray, float]:
    lam, vec = herm_eig(m, tol)
    ref = float(lam[0]) if lam.size else 0.0
    if scale is not None:
        ref = max(ref, scale)
    cut = eig_cutoff(ref, tol)
    if lam.size and lam[-1] < -max(tol.eig_cut_rel * ref, ZERO_FLOOR):
        raise NotPSD(f"eigenvalue {lam[-1]:.3e} below clamp band")
    return lam, vec, cut


def psd_sqrt(
    m: np.ndarray, tol: Tolerance | None = None, scale: float | None = None
) -> np.ndarray:
    """Principal square root of a PSD matrix.

    Eigenvalues at or below the rank cutoff are treated as zero, so the root
    has exactly the support reported by ``support_projection``.
    """
    lam, vec, cut = _psd_spectrum(m, get_tolerance(tol), scale)
    root = np.where(lam > cut, np.sqrt(np.clip(lam, 0.0, None)), 0.0)
    return (vec * root) @ dagger(vec)


def pinv_psd(
    m: np.ndarray, tol: Tolerance | None = None, scale: float | None = None
) -> np.ndarray:
    """Moore-Penrose pseudo-inverse of a PSD matrix.

    ``scale`` overrides the reference magnitude for the rank cutoff; pass the
    largest eigenvalue of the enclosing direct sum so that a block holding
    only rounding noise is not mistaken for support.
    """
    lam, vec, cut = _psd_spectrum(m, get_tolerance(tol), scale)
    inv = np.zeros_like(lam)
    keep = lam > cut
    inv[keep] = 1.0 / lam[keep]
    return (vec * inv) @ dagger(vec)


def pinv_sqrt_psd(
    m: np.ndarray, tol: Tolerance | None = None, scale: float | None = None
) -> np.ndarray:
    """Square root of the pseudo-inverse, computed from one eigensolve."""
    lam, vec, cut = _psd_spectrum(m, get_tolerance(tol), scale)
    inv = np.zeros_like(lam)
    keep = lam > cut
    inv[keep] = 1.0 / np.sqrt(lam[keep])
    return (vec * inv) @ dagger(vec)


def support_projection(
    m: np.ndarray, tol: Tolerance | None = None, scale: float | None = None
) -> np.ndarray:
    """Orthogonal projection onto the span of eigenvectors above the cutoff."""
    lam, vec, cut = _psd_spectrum(m, get_tolerance(tol), scale)
    sup = vec[:, lam > cut]
    return sup @ dagger(sup)


def rank(m: np.ndarray, tol: Tolerance | None = None, scale: float | None = None) -> int:
    lam, _, cut = _psd_spectrum(m, get_tolerance(tol), scale)
    return int(np.count_nonzero(lam > cut))


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_isometry(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """Random isometry C^cols -> C^rows (orthonormal columns)."""
    if rows < cols:
        raise ValueError(f"isometry needs rows >= cols, got {rows} < {cols}")
    z = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def complete_orthonormal(cols: np.ndarray, total: int) -> np.ndarray:
    """Extend orthonormal columns to ``total`` columns, deterministically.

    At each step the standard basis vector with the largest component
    outside the current span is projected and appended (lowest index wins
    ties), so the result depends only on the input columns.
    """
    dim = cols.shape[0]
    if total > dim:
        raise ValueError(f"cannot fit {total} orthonormal vectors in C^{dim}")
    q = np.array(cols, dtype=complex).reshape(dim, -1)
    while q.shape[1] < total:
        resid = np.eye(dim, dtype=complex) - q @ dagger(q)
        k = int(np.argmax(np.linalg.norm(resid, axis=0)))
        v = resid[:, k]
        v = v - q @ (dagger(q) @ v)
        q = np.column_stack([q, v / np.linalg.norm(v)])
    return q
