"""Parametric families on finite grids and the CRB machinery.

The parameter space is a finite grid, so "estimable", "balanced" and the
Fisher-map conditions all become finite-dimensional linear algebra that can
be checked exactly. Fisher maps are stored as one matrix per grid point.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import linalg
from .errors import (
    DimensionMismatch,
    GridPointNotFound,
    NotUnbiased,
    SingularMixing,
)
from .states import DensityOperator, Observable, covariance_matrix, expectation
from .validation import CheckResult

logger = logging.getLogger(__name__)

UNBIASED_TOL = 1e-9
FISHER_TOL = 1e-9
RANGE_TOL = 1e-8
DERIVATIVE_TRACE_TOL = 1e-9
DEFAULT_FD_STEP = 1e-5
POINT_MATCH_TOL = 1e-12


def _as_point(theta, d: int) -> tuple[float, ...]:
    if np.isscalar(theta):
        point = (float(theta),)
    else:
        point = tuple(float(t) for t in np.asarray(theta).reshape(-1))
    if len(point) != d:
        raise DimensionMismatch(f"point {point} has {len(point)} coordinates, grid has {d}")
    return point


@dataclass(frozen=True, eq=False)
class ParameterGrid:
    """Finite list of parameter points in R^d plus a finite-difference step."""

    points: tuple[tuple[float, ...], ...]
    fd_step: float = DEFAULT_FD_STEP

    def __post_init__(self):
        if not self.points:
            raise ValueError("grid needs at least one point")
        pts = tuple(_as_point(p, len(_as_point(self.points[0], len(np.atleast_1d(self.points[0]))))) for p in self.points) if False else None
        d = len(np.atleast_1d(np.asarray(self.points[0], dtype=float)))
        pts = tuple(_as_point(p, d) for p in self.points)
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                if max(abs(a - b) for a, b in zip(pts[i], pts[j])) <= POINT_MATCH_TOL:
                    raise ValueError(f"grid points {i} and {j} coincide")
        if not self.fd_step > 0:
            raise ValueError("finite-difference step must be positive")
        object.__setattr__(self, "points", pts)

    @property
    def d(self) -> int:
        return len(self.points[0])

    def __len__(self) -> int:
        return len(self.points)

    def index_of(self, theta) -> int:
        point = _as_point(theta, self.d)
        for k, p in enumerate(self.points):
            if max(abs(a - b) for a, b in zip(point, p)) <= POINT_MATCH_TOL:
                return k
        raise GridPointNotFound(f"{point} is not a grid point")

    @classmethod
    def from_1d(cls, values, fd_step: float = DEFAULT_FD_STEP) -> "ParameterGrid":
        return cls(tuple((float(v),) for v in values), fd_step)


@dataclass(frozen=True, eq=False)
class ParametricFamily:
    """One density operator per grid point, with optional derivative data.

    ``derivative_states[k][j]`` is the Hermitian matrix d rho / d theta_j at
    grid point k. ``state_fn`` maps an off-grid parameter vector to a state
    matrix and is required by recipes that need higher derivatives.
    """

    grid: ParameterGrid
    states: tuple[DensityOperator, ...]
    derivative_states: tuple[tuple[np.ndarray, ...], ...] | None = None
    state_fn: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if len(self.states) != len(self.grid):
            raise DimensionMismatch("one state per grid point required")
        n = self.states[0].dim
        for s in self.states:
            if s.dim != n:
                raise DimensionMismatch("all states must share one dimension")
        if self.derivative_states is not None:
            derivs = []
            if len(self.derivative_states) != len(self.grid):
                raise DimensionMismatch("derivative data must cover every grid point")
            for per_point in self.derivative_states:
                if len(per_point) != self.grid.d:
                    raise DimensionMismatch("one derivative per coordinate required")
                row = []
                for dm in per_point:
                    h = linalg.require_hermitian(dm)
                    tr = abs(complex(np.trace(h)))
                    if tr > DERIVATIVE_TRACE_TOL:
                        raise ValueError(f"state derivative has trace {tr:.3e}")
                    h.setflags(write=False)
                    row.append(h)
                derivs.append(tuple(row))
            object.__setattr__(self, "derivative_states", tuple(derivs))

    @property
    def dim(self) -> int:
        return self.states[0].dim

    def state_at(self, theta) -> DensityOperator:
        return self.states[self.grid.index_of(theta)]

    def derivative_at(self, theta, coord: int = 0) -> np.ndarray:
        if self.derivative_states is None:
            raise ValueError("family carries no derivative data")
        return self.derivative_states[self.grid.index_of(theta)][coord]

    @classmethod
    def from_states(cls, grid, states, derivatives=None, state_fn=None) -> "ParametricFamily":
        return cls(grid, tuple(states), derivatives, state_fn)

    @classmethod
    def from_callback(cls, grid: ParameterGrid, fn, fd_step: float | None = None) -> "ParametricFamily":
        """Evaluate states on the grid and central-difference the derivatives."""
        h = grid.fd_step if fd_step is None else fd_step
        states = []
        derivs = []
        for point in grid.points:
            p = np.asarray(point, dtype=float)
            states.append(DensityOperator(fn(p)))
            row = []
            for j in range(grid.d):
                step = np.zeros(grid.d)
                step[j] = h
                dm = (linalg.as_matrix(fn(p + step)) - linalg.as_matrix(fn(p - step))) / (2.0 * h)
                row.append(0.5 * (dm + linalg.dagger(dm)))
            derivs.append(tuple(row))
        return cls(grid, tuple(states), tuple(derivs), fn)


@dataclass(frozen=True, eq=False)
class FisherMapSample:
    """Operator-valued map sampled on the grid, one matrix per point."""

    values: tuple[np.ndarray, ...]

    def __post_init__(self):
        vals = tuple(linalg.as_matrix(v) for v in self.values)
        if not vals:
            raise ValueError("empty Fisher map")
        n = vals[0].shape[0]
        for v in vals:
            if v.shape != (n, n):
                raise DimensionMismatch("all samples must be n x n")
        for v in vals:
            v.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return self.values[0].shape[0]

    def value_at(self, grid: ParameterGrid, theta) -> np.ndarray:
        return self.values[grid.index_of(theta)]


@dataclass(frozen=True, eq=False)
class EstimableBinding:
    """A parametric function (values on the grid) with an unbiased estimator."""

    f_values: tuple[float, ...]
    estimator: Observable


def estimable_binding(
    fam: ParametricFamily,
    estimator: Observable,
    f_values=None,
    tol: float = UNBIASED_TOL,
) -> EstimableBinding:
    """Bind an estimator to its parametric function, enforcing unbiasedness.

    When ``f_values`` is omitted the function is read off the family as
    Tr rho(theta) X, which is unbiased by construction.
    """
    if f_values is None:
        f_values = tuple(expectation(estimator, s) for s in fam.states)
    else:
        f_values = tuple(float(v) for v in f_values)
        if len(f_values) != len(fam.grid):
            raise DimensionMismatch("one function value per grid point required")
    report = is_unbiased(estimator, f_values, fam, tol)
    if not report.ok:
        raise NotUnbiased(f"unbiasedness defect {report.worst:.3e} exceeds {tol:g}")
    return EstimableBinding(f_values, estimator)


def is_unbiased(
    x: Observable, f_values, fam: ParametricFamily, tol: float = UNBIASED_TOL
) -> CheckResult:
    """Largest deviation of Tr rho(theta) X from f(theta) over the grid."""
    worst = 0.0
    for s, f in zip(fam.states, f_values):
        worst = max(worst, abs(expectation(x, s) - float(f)))
    return CheckResult(worst <= tol, worst, "unbiasedness defect")


def balanced_space_basis(
    fam: ParametricFamily, rank_tol: float = linalg.RANK_TOL
) -> list[Observable]:
    """Hilbert-Schmidt orthonormal basis of the grid-balanced observables.

    Balanced means Tr rho(theta) X = 0 at every grid point; the basis is the
    real nullspace of the constraint map over the n^2-dimensional real space
    of Hermitian matrices.
    """
    n = fam.dim
    herm = linalg.hermitian_basis(n)
    rows = np.empty((len(fam.grid), len(herm)))
    for k, s in enumerate(fam.states):
        for b, hmat in enumerate(herm):
            rows[k, b] = float(np.trace(s.matrix @ hmat).real)
    _, sv, vt = np.linalg.svd(rows, full_matrices=True)
    rank = int(np.sum(sv > rank_tol))
    basis = []
    for coeffs in vt[rank:]:
        mat = sum(c * hmat for c, hmat in zip(coeffs, herm))
        basis.append(Observable(0.5 * (mat + linalg.dagger(mat))))
    return basis


def validate_fisher_map(
    f: FisherMapSample,
    fam: ParametricFamily,
    tol: float = FISHER_TOL,
    basis: Sequence[Observable] | None = None,
) -> CheckResult:
    """Check the two defining Fisher-map conditions on the grid.

    (i) Tr rho(theta) F(theta) vanishes, and (ii) the symmetrized pairing
    of F with every balanced observable vanishes; linearity makes checking
    a basis of the balanced space sufficient.
    """
    if len(f.values) != len(fam.grid):
        raise DimensionMismatch("one map sample per grid point required")
    if f.dim != fam.dim:
        raise DimensionMismatch("map and family dimensions differ")
    if basis is None:
        basis = balanced_space_basis(fam)
    centering = 0.0
    balance = 0.0
    for s, fv in zip(fam.states, f.values):
        centering = max(centering, abs(complex(np.trace(s.matrix @ fv))))
        for z in basis:
            pair = np.trace(s.matrix @ (linalg.dagger(fv) @ z.matrix + z.matrix @ fv))
            balance = max(balance, abs(complex(pair)))
    worst = max(centering, balance)
    return CheckResult(
        worst <= tol, worst, f"centering {centering:.3e}, balance {balance:.3e}"
    )


def sesquilinear_form(x, y, rho: DensityOperator) -> complex:
    """B(X, Y) = Tr X^dag rho Y; positive semidefinite in X = Y."""
    xm = linalg.as_matrix(x.matrix if isinstance(x, Observable) else x)
    ym = linalg.as_matrix(y.matrix if isinstance(y, Observable) else y)
    if xm.shape != ym.shape or xm.shape[0] != rho.dim:
        raise DimensionMismatch("operands must match the state dimension")
    return complex(np.trace(linalg.dagger(xm) @ rho.matrix @ ym))


def fisher_form(
    f: FisherMapSample, g: FisherMapSample, fam: ParametricFamily, theta
) -> float:
    """Fisher information form Re Tr rho(theta) F(theta)^dag G(theta)."""
    k = fam.grid.index_of(theta)
    rho = fam.states[k].matrix
    return float(np.trace(rho @ linalg.dagger(f.values[k]) @ g.values[k]).real)


def information_matrix(
    fs: Sequence[FisherMapSample], fam: ParametricFamily, theta
) -> np.ndarray:
    """Gram matrix of the Fisher maps under the information form at theta."""
    fs = list(fs)
    m = np.zeros((len(fs), len(fs)))
    for i in range(len(fs)):
        for j in range(i, len(fs)):
            m[i, j] = m[j, i] = fisher_form(fs[i], fs[j], fam, theta)
    return m


def crb_tensor(
    binding: EstimableBinding, f: FisherMapSample, fam: ParametricFamily, theta
) -> float:
    """Symmetrized pairing of an unbiased estimator with a Fisher map.

    For genuine Fisher maps the value is independent of which unbiased
    estimator realizes the function.
    """
    k = fam.grid.index_of(theta)
    rho = fam.states[k].matrix
    x = binding.estimator.matrix
    fv = f.values[k]
    val = complex(0.5 * np.trace(rho @ (linalg.dagger(fv) @ x + x @ fv)))
    if abs(val.imag) > 1e-10 * max(1.0, abs(val.real)):
        raise ArithmeticError(f"pairing has imaginary part {val.imag:.3e}")
    return val.real


def lambda_matrix(
    bindings: Sequence[EstimableBinding],
    fs: Sequence[FisherMapSample],
    fam: ParametricFamily,
    theta,
) -> np.ndarray:
    """Matrix of pairings, one row per function and one column per map."""
    return np.array(
        [[crb_tensor(b, f, fam, theta) for f in fs] for b in bindings]
    ).reshape(len(bindings), len(fs))


@dataclass(frozen=True, eq=False)
class CrbReport:
    """Covariance, information, pairing matrix and the resulting bound.

    ``gap_spectrum`` holds the eigenvalues of cov - bound in ascending
    order; validity of the bound means its minimum is >= -psd_tol.
    ``range_residual`` measures how far the pairing rows leave the column
    space of the information matrix; a genuine violation indicates an
    inconsistent setup and is flagged rather than silently absorbed by
    the pseudo-inverse.
    """

    theta: tuple[float, ...]
    cov: np.ndarray
    info: np.ndarray
    lam: np.ndarray
    bound: np.ndarray
    gap_spectrum: np.ndarray
    range_residual: float
    range_ok: bool

    @property
    def min_gap(self) -> float:
        return float(self.gap_spectrum[0])


def crb_bound(
    bindings: Sequence[EstimableBinding],
    fs: Sequence[FisherMapSample],
    fam: ParametricFamily,
    theta,
    rcond: float = linalg.RCOND,
    range_tol: float = RANGE_TOL,
) -> CrbReport:
    """Matrix lower bound Lambda I^- Lambda' on the estimator covariance.

    The generalized inverse is the spectral Moore-Penrose inverse with the
    given relative cutoff. With no Fisher maps the bound is zero.
    """
    bindings = list(bindings)
    point = fam.grid.points[fam.grid.index_of(theta)]
    rho = fam.state_at(theta)
    cov = covariance_matrix([b.estimator for b in bindings], rho)
    m = len(bindings)
    if len(fs) == 0:
        info = np.zeros((0, 0))
        lam = np.zeros((m, 0))
        bound = np.zeros((m, m))
        residual = 0.0
    else:
        info = information_matrix(fs, fam, theta)
        lam = lambda_matrix(bindings, fs, fam, theta)
        pinv = linalg.pseudo_inverse(info, rcond)
        bound = lam @ pinv @ lam.T
        bound = 0.5 * (bound + bound.T)
        proj = info @ pinv
        residual = linalg.operator_norm(lam - lam @ proj.T)
    scale = max(linalg.operator_norm(lam), linalg.TOL_FLOOR)
    range_ok = residual <= range_tol * scale
    if not range_ok:
        logger.warning(
            "lambda rows leave the information column space (residual %.3e)", residual
        )
    gap = np.linalg.eigvalsh(cov - bound)
    return CrbReport(point, cov, info, lam, bound, gap, residual, range_ok)


def min_variance_over_balanced(
    binding: EstimableBinding, fam: ParametricFamily, theta
) -> tuple[float, Observable]:
    """Minimize Var(X + Z | theta) over the balanced space.

    The variance is a quadratic in the balanced coefficients; the minimum
    solves the normal equations of its Gram matrix (real parts of the
    state's sesquilinear form). With an empty balanced space the estimator
    is returned unchanged.
    """
    rho = fam.state_at(theta)
    x = binding.estimator
    basis = balanced_space_basis(fam)
    base_var = float(covariance_matrix([x], rho)[0, 0])
    if not basis:
        return base_var, x
    eye = np.eye(rho.dim)
    xc = x.matrix - expectation(x, rho) * eye
    g = np.array([sesquilinear_form(xc, z.matrix, rho).real for z in basis])
    k = len(basis)
    gram = np.zeros((k, k))
    for i in range(k):
        for j in range(i, k):
            gram[i, j] = gram[j, i] = sesquilinear_form(
                basis[i].matrix, basis[j].matrix, rho
            ).real
    coeffs = -linalg.pseudo_inverse(gram) @ g
    value = base_var + 2.0 * float(coeffs @ g) + float(coeffs @ gram @ coeffs)
    optimal = Observable(
        x.matrix + sum(c * z.matrix for c, z in zip(coeffs, basis))
    )
    return max(value, 0.0), optimal


def check_monotonicity(
    bindings: Sequence[EstimableBinding],
    fs: Sequence[FisherMapSample],
    fam: ParametricFamily,
    theta,
    psd_tol: float = linalg.PSD_TOL,
) -> CheckResult:
    """Appending a Fisher map may only raise the bound (PSD difference)."""
    fs = list(fs)
    if len(fs) < 2:
        raise ValueError("need at least two Fisher maps to compare nested bounds")
    full = crb_bound(bindings, fs, fam, theta).bound
    prefix = crb_bound(bindings, fs[:-1], fam, theta).bound
    gap = linalg.psd_gap(full - prefix)
    return CheckResult(gap >= -psd_tol, min(gap, 0.0), "nested-bound spectral gap")


def mix_fisher_maps(
    fs: Sequence[FisherMapSample], mixers: Sequence[np.ndarray]
) -> list[FisherMapSample]:
    """Recombine maps by an invertible per-point real matrix.

    ``mixers[k]`` acts at grid point k: G_j = sum_r A[j, r] F_r. The CRB
    bound computed from the recombined maps matches the original one.
    """
    fs = list(fs)
    if not fs:
        return []
    npoints = len(fs[0].values)
    if len(mixers) != npoints:
        raise DimensionMismatch("one mixing matrix per grid point required")
    mats = []
    for k, a in enumerate(mixers):
        a = np.asarray(a, dtype=float)
        if a.shape != (len(fs), len(fs)):
            raise DimensionMismatch("mixing matrices must be n_maps x n_maps")
        det = float(np.linalg.det(a))
        if abs(det) < 1e-12:
            raise SingularMixing(f"mixing matrix at grid index {k} has det {det:.3e}")
        logger.debug("mixing condition number at grid index %d: %.3e", k, np.linalg.cond(a))
        mats.append(a)
    out = []
    for j in range(len(fs)):
        vals = []
        for k in range(npoints):
            vals.append(sum(mats[k][j, r] * fs[r].values[k] for r in range(len(fs))))
        out.append(FisherMapSample(tuple(vals)))
    return out
