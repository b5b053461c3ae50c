"""Density operators, observables and their second-moment statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import DimensionMismatch, DomainError

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

TRACE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Observable:
    """Hermitian matrix representing a real-valued physical quantity."""

    matrix: np.ndarray

    def __post_init__(self):
        m = linalg.require_hermitian(self.matrix)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian, positive semidefinite, unit-trace matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = linalg.require_hermitian(self.matrix)
        gap = float(np.linalg.eigvalsh(m)[0])
        if gap < -linalg.scaled_tol(linalg.PSD_TOL, linalg.operator_norm(m)):
            raise DomainError(f"state has negative eigenvalue {gap:.3e}")
        tr = float(np.trace(m).real)
        if abs(tr - 1.0) > TRACE_TOL:
            raise DomainError(f"state trace {tr!r} differs from 1")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def pure(cls, vector) -> "DensityOperator":
        """Rank-one projector onto the (normalized) vector."""
        v = np.asarray(vector, dtype=complex).reshape(-1)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        v = v / norm
        return cls(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityOperator":
        return cls(np.eye(dim, dtype=complex) / dim)


def _check_dims(x: Observable | DensityOperator, y: Observable | DensityOperator):
    if x.dim != y.dim:
        raise DimensionMismatch(f"dimensions {x.dim} and {y.dim} differ")


def _real_trace(m: np.ndarray, what: str = "trace") -> float:
    tr = complex(np.trace(m))
    if abs(tr.imag) > 1e-10 * max(1.0, abs(tr.real)):
        raise ArithmeticError(f"{what} has imaginary part {tr.imag:.3e}")
    return tr.real


def expectation(x: Observable, rho: DensityOperator) -> float:
    """Tr rho X."""
    _check_dims(x, rho)
    return _real_trace(rho.matrix @ x.matrix, "expectation")


def variance(x: Observable, rho: DensityOperator) -> float:
    """Tr rho (X - m)^2 with m the expectation; clamped at zero."""
    _check_dims(x, rho)
    m = expectation(x, rho)
    centered = x.matrix - m * np.eye(x.dim)
    v = _real_trace(rho.matrix @ centered @ centered, "variance")
    if v < -linalg.PSD_TOL:
        raise ArithmeticError(f"variance {v:.3e} is negative beyond tolerance")
    return max(v, 0.0)


def covariance_matrix(xs, rho: DensityOperator) -> np.ndarray:
    """Symmetrized covariance matrix of observables in a state.

    Entry (i, j) is Tr rho {(Xi-mi)(Xj-mj) + (Xj-mj)(Xi-mi)} / 2; the
    result is real symmetric and positive semidefinite up to roundoff.
    Means are subtracted explicitly before forming the products.
    """
    xs = list(xs)
    if not xs:
        raise ValueError("need at least one observable")
    for x in xs:
        _check_dims(x, rho)
    eye = np.eye(rho.dim)
    centered = [x.matrix - expectation(x, rho) * eye for x in xs]
    k = len(xs)
    cov = np.zeros((k, k))
    for i in range(k):
        for j in range(i, k):
            sym = centered[i] @ centered[j] + centered[j] @ centered[i]
            cov[i, j] = cov[j, i] = 0.5 * _real_trace(rho.matrix @ sym, "covariance")
    return cov


def function_of_observable(x: Observable, phi) -> Observable:
    """Apply a real scalar function through the spectral resolution."""
    dec = linalg.spectral_decomposition(x.matrix)
    values = []
    for lam in dec.eigenvalues:
        try:
            val = phi(lam)
        except (ValueError, ZeroDivisionError, OverflowError) as exc:
            raise DomainError(f"function undefined at eigenvalue {lam!r}: {exc}") from exc
        val = complex(val)
        if abs(val.imag) > linalg.TOL_FLOOR or not np.isfinite(val.real):
            raise DomainError(f"function value at eigenvalue {lam!r} is not finite real")
        values.append(val.real)
    out = sum(v * p for v, p in zip(values, dec.projectors))
    return Observable(out)


def variance_product_bound(
    x: Observable, y: Observable, rho: DensityOperator
) -> tuple[float, float]:
    """Product of variances and its commutator/anticommutator lower bound.

    Returns ``(lhs, rhs)`` with ``lhs = Var(X)Var(Y)`` and
    ``rhs = (Tr rho [Xc,Yc]/2i)^2 + (Tr rho {Xc,Yc}/2)^2`` over the
    mean-centered operators; ``lhs >= rhs`` up to roundoff.
    """
    _check_dims(x, rho)
    _check_dims(y, rho)
    lhs = variance(x, rho) * variance(y, rho)
    eye = np.eye(rho.dim)
    xc = x.matrix - expectation(x, rho) * eye
    yc = y.matrix - expectation(y, rho) * eye
    comm = _real_trace(rho.matrix @ (xc @ yc - yc @ xc) / 2j, "commutator term")
    anti = 0.5 * _real_trace(rho.matrix @ (xc @ yc + yc @ xc), "anticommutator term")
    return lhs, comm**2 + anti**2
