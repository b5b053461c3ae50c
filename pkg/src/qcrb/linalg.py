"""Dense complex-matrix primitives with a single tolerance policy.

Every tolerance in the package is relative to the operator norm of its
subject with an absolute floor of ``TOL_FLOOR``, so checks behave the same
for rescaled inputs and never underflow to an impossible exact test.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NotHermitian

HERM_TOL = 1e-10
PSD_TOL = 1e-9
RCOND = 1e-10
CLUSTER_FACTOR = 1e-8
RANK_TOL = 1e-9
TOL_FLOOR = 1e-12


def as_matrix(a) -> np.ndarray:
    """Coerce to a finite dense complex matrix."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got array of rank {m.ndim}")
    if not (np.all(np.isfinite(m.real)) and np.all(np.isfinite(m.imag))):
        raise ValueError("matrix has non-finite entries")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.asarray(a).conj().T


def operator_norm(a) -> float:
    """Largest singular value."""
    m = as_matrix(a)
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def scaled_tol(tol: float, norm: float) -> float:
    """Tolerance relative to an operator norm, floored at ``TOL_FLOOR``."""
    return max(tol * norm, TOL_FLOOR)


def hermiticity_defect(a) -> float:
    """max |A_ij - conj(A_ji)|; infinity for non-square input."""
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        return float("inf")
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(m - dagger(m))))


def require_hermitian(a, tol: float = HERM_TOL) -> np.ndarray:
    """Validate hermiticity and return the symmetrized matrix."""
    m = as_matrix(a)
    defect = hermiticity_defect(m)
    if defect > scaled_tol(tol, operator_norm(m)):
        raise NotHermitian(f"hermiticity defect {defect:.3e} exceeds tolerance")
    return 0.5 * (m + dagger(m))


@dataclass(frozen=True)
class SpectralDecomposition:
    """Distinct eigenvalues (descending) with their spectral projectors."""

    eigenvalues: tuple[float, ...]
    projectors: tuple[np.ndarray, ...]

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    def reconstruct(self) -> np.ndarray:
        return sum(v * p for v, p in zip(self.eigenvalues, self.projectors))

    def apply(self, phi) -> np.ndarray:
        return sum(phi(v) * p for v, p in zip(self.eigenvalues, self.projectors))


def spectral_decomposition(a, cluster_tol: float | None = None) -> SpectralDecomposition:
    """Eigenvalues and projectors of a Hermitian matrix.

    Raw eigenvalues closer than ``cluster_tol`` (default: ``CLUSTER_FACTOR``
    times the spectral range, floored) are merged into a single projector so
    degenerate spectra yield one projector per level.
    """
    h = require_hermitian(a)
    vals, vecs = np.linalg.eigh(h)
    # descending order
    vals = vals[::-1]
    vecs = vecs[:, ::-1]
    if cluster_tol is None:
        spread = float(vals[0] - vals[-1])
        cluster_tol = max(CLUSTER_FACTOR * spread, TOL_FLOOR)
    eigenvalues = []
    projectors = []
    start = 0
    for k in range(1, len(vals) + 1):
        if k == len(vals) or vals[start] - vals[k] > cluster_tol:
            block = vecs[:, start:k]
            proj = block @ dagger(block)
            projectors.append(0.5 * (proj + dagger(proj)))
            eigenvalues.append(float(np.mean(vals[start:k])))
            start = k
    return SpectralDecomposition(tuple(eigenvalues), tuple(projectors))


def pseudo_inverse(a, rcond: float = RCOND) -> np.ndarray:
    """Moore-Penrose inverse of a Hermitian matrix via its eigensystem.

    Eigenvalues with |lambda| <= rcond * max|lambda| are treated as zero;
    the zero matrix maps to the zero matrix.
    """
    h = require_hermitian(a)
    vals, vecs = np.linalg.eigh(h)
    cutoff = rcond * np.max(np.abs(vals)) if vals.size else 0.0
    inv = np.where(np.abs(vals) > cutoff, 1.0 / np.where(vals == 0, 1.0, vals), 0.0)
    out = (vecs * inv) @ dagger(vecs)
    return 0.5 * (out + dagger(out))


def psd_gap(a) -> float:
    """Smallest eigenvalue; the caller decides PSD via ``psd_gap >= -tol``."""
    h = require_hermitian(a)
    if h.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh(h)[0])


def psd_sqrt(a, tol: float = PSD_TOL) -> np.ndarray:
    """Square root of a PSD matrix, clamping roundoff-negative eigenvalues."""
    h = require_hermitian(a)
    vals, vecs = np.linalg.eigh(h)
    floor = -scaled_tol(tol, operator_norm(h))
    if np.any(vals < floor):
        raise DomainError(
            f"matrix is not positive semidefinite (min eigenvalue {vals.min():.3e})"
        )
    root = np.sqrt(np.clip(vals, 0.0, None))
    out = (vecs * root) @ dagger(vecs)
    return 0.5 * (out + dagger(out))


def hermitian_basis(n: int) -> list[np.ndarray]:
    """Hilbert-Schmidt orthonormal basis of the n x n Hermitian matrices.

    Ordering: diagonal units first, then for each i < j the symmetric and
    antisymmetric off-diagonal pairs. Length is n**2.
    """
    basis = []
    for i in range(n):
        e = np.zeros((n, n), dtype=complex)
        e[i, i] = 1.0
        basis.append(e)
    r = 1.0 / np.sqrt(2.0)
    for i in range(n):
        for j in range(i + 1, n):
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = r
            e[j, i] = r
            basis.append(e)
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = -1j * r
            e[j, i] = 1j * r
            basis.append(e)
    return basis
