"""Generalized measurements: statistics, collapse, composition, entropy."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import DimensionMismatch, ZeroProbabilityOutcome
from .states import DensityOperator, Observable
from .validation import CheckResult

COMPLETENESS_TOL = 1e-9
COLLAPSE_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class GeneralizedMeasurement:
    """Finite outcome set with one Kraus operator per outcome.

    Construction checks shapes only; completeness of the Kraus family is
    the job of :func:`validate` so that defective measurements can still
    be inspected.
    """

    outcomes: tuple[str, ...]
    kraus: tuple[np.ndarray, ...]

    def __post_init__(self):
        outcomes = tuple(str(s) for s in self.outcomes)
        kraus = tuple(linalg.as_matrix(k) for k in self.kraus)
        if len(outcomes) != len(kraus):
            raise ValueError("one Kraus operator per outcome required")
        if not kraus:
            raise ValueError("measurement needs at least one outcome")
        if len(set(outcomes)) != len(outcomes):
            raise ValueError("outcome labels must be distinct")
        n = kraus[0].shape[0]
        for k in kraus:
            if k.shape != (n, n):
                raise DimensionMismatch("all Kraus operators must be n x n")
        for k in kraus:
            k.setflags(write=False)
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "kraus", kraus)

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[0]

    def povm_elements(self) -> tuple[np.ndarray, ...]:
        """The positive operators T(s) = L(s)^dag L(s)."""
        out = []
        for k in self.kraus:
            t = linalg.dagger(k) @ k
            out.append(0.5 * (t + linalg.dagger(t)))
        return tuple(out)

    def completeness_defect(self) -> float:
        total = sum(self.povm_elements())
        return linalg.operator_norm(total - np.eye(self.dim))


@dataclass(frozen=True, eq=False)
class OutcomeDistribution:
    """Probabilities per outcome label, clamped into [0, 1]."""

    outcomes: tuple[str, ...]
    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if np.any(p < -linalg.PSD_TOL) or np.any(p > 1.0 + linalg.PSD_TOL):
            raise ArithmeticError(f"probabilities out of range: {p}")
        total = float(p.sum())
        if abs(total - 1.0) > COMPLETENESS_TOL:
            raise ArithmeticError(f"probabilities sum to {total!r}")
        p = np.clip(p, 0.0, 1.0)
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)

    def __getitem__(self, label: str) -> float:
        return float(self.probabilities[self.outcomes.index(label)])


def validate(m: GeneralizedMeasurement, tol: float = COMPLETENESS_TOL) -> CheckResult:
    """Report how far the Kraus family is from resolving the identity."""
    defect = m.completeness_defect()
    return CheckResult(defect <= tol, defect, "sum of L(s)^dag L(s) vs identity")


def outcome_probabilities(
    m: GeneralizedMeasurement, rho: DensityOperator
) -> OutcomeDistribution:
    """p(s) = Tr rho L(s)^dag L(s)."""
    if m.dim != rho.dim:
        raise DimensionMismatch(f"dimensions {m.dim} and {rho.dim} differ")
    p = [float(np.trace(rho.matrix @ t).real) for t in m.povm_elements()]
    return OutcomeDistribution(m.outcomes, np.array(p))


def collapse(
    m: GeneralizedMeasurement,
    rho: DensityOperator,
    outcome: str,
    floor: float = COLLAPSE_FLOOR,
) -> DensityOperator:
    """Post-measurement state L(s) rho L(s)^dag / p(s)."""
    if m.dim != rho.dim:
        raise DimensionMismatch(f"dimensions {m.dim} and {rho.dim} differ")
    k = m.kraus[m.outcomes.index(outcome)]
    raw = k @ rho.matrix @ linalg.dagger(k)
    p = float(np.trace(raw).real)
    if p <= floor:
        raise ZeroProbabilityOutcome(f"outcome {outcome!r} has probability {p!r}")
    return DensityOperator(raw / p)


def compose_sequential(
    m1: GeneralizedMeasurement, m2: GeneralizedMeasurement
) -> GeneralizedMeasurement:
    """Measurement m1 followed by m2 as one compound measurement.

    Outcome (s1, s2) carries the operator L2(s2) L1(s1); the outcome set is
    ordered with s1 major so serialization is deterministic.
    """
    if m1.dim != m2.dim:
        raise DimensionMismatch(f"dimensions {m1.dim} and {m2.dim} differ")
    outcomes = []
    kraus = []
    for s1, k1 in zip(m1.outcomes, m1.kraus):
        for s2, k2 in zip(m2.outcomes, m2.kraus):
            outcomes.append(f"{s1},{s2}")
            kraus.append(k2 @ k1)
    return GeneralizedMeasurement(tuple(outcomes), tuple(kraus))


def entropy(m: GeneralizedMeasurement, rho: DensityOperator) -> float:
    """Shannon entropy of the outcome distribution, in bits."""
    p = outcome_probabilities(m, rho).probabilities
    return float(-sum(q * math.log2(q) for q in p if q > 0.0))


def entropic_bound(l: GeneralizedMeasurement, m: GeneralizedMeasurement) -> float:
    """State-independent lower bound on H(l|rho) + H(m|rho), in bits.

    Equals -2 log2 max_{s,t} ||X(s)^1/2 Y(t)^1/2|| over the POVM elements
    of the two measurements.
    """
    if l.dim != m.dim:
        raise DimensionMismatch(f"dimensions {l.dim} and {m.dim} differ")
    roots_l = [linalg.psd_sqrt(t) for t in l.povm_elements()]
    roots_m = [linalg.psd_sqrt(t) for t in m.povm_elements()]
    overlap = max(linalg.operator_norm(a @ b) for a in roots_l for b in roots_m)
    if overlap <= 0.0:
        return math.inf
    return -2.0 * math.log2(overlap)


def measurement_mean_variance(
    m: GeneralizedMeasurement, values, rho: DensityOperator
) -> tuple[float, float]:
    """Mean and variance of the real value assigned to each outcome."""
    v = np.asarray(values, dtype=float)
    if v.shape != (len(m.outcomes),):
        raise DimensionMismatch("one value per outcome required")
    p = outcome_probabilities(m, rho).probabilities
    mean = float(v @ p)
    var = float((v**2) @ p - mean**2)
    return mean, max(var, 0.0)


def projective_measurement(x: Observable, cluster_tol: float | None = None):
    """PVM of an observable: eigenvalues as labels, projectors as Kraus ops.

    Returns ``(measurement, eigenvalues)`` with outcomes ordered by
    descending eigenvalue.
    """
    dec = linalg.spectral_decomposition(x.matrix, cluster_tol)
    labels = tuple(f"{v:.12g}" for v in dec.eigenvalues)
    meas = GeneralizedMeasurement(labels, dec.projectors)
    return meas, np.array(dec.eigenvalues)


def computational_pvm(dim: int) -> GeneralizedMeasurement:
    """Projective measurement in the standard basis with labels 0..dim-1."""
    kraus = []
    for i in range(dim):
        p = np.zeros((dim, dim), dtype=complex)
        p[i, i] = 1.0
        kraus.append(p)
    return GeneralizedMeasurement(tuple(str(i) for i in range(dim)), tuple(kraus))


def hadamard_pvm() -> GeneralizedMeasurement:
    """Qubit PVM onto the plus/minus basis."""
    plus = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)
    minus = np.array([1.0, -1.0], dtype=complex) / np.sqrt(2.0)
    return GeneralizedMeasurement(
        ("+", "-"), (np.outer(plus, plus.conj()), np.outer(minus, minus.conj()))
    )


def trine_povm() -> GeneralizedMeasurement:
    """Symmetric three-outcome qubit POVM in the real x-z plane.

    Elements are (2/3) |psi_k><psi_k| with Bloch vectors 120 degrees apart;
    Kraus operators are the positive square roots.
    """
    kraus = []
    for k in range(3):
        angle = 2.0 * math.pi * k / 3.0
        ket = np.array([math.cos(angle / 2.0), math.sin(angle / 2.0)], dtype=complex)
        t = (2.0 / 3.0) * np.outer(ket, ket.conj())
        kraus.append(linalg.psd_sqrt(t))
    return GeneralizedMeasurement(("0", "1", "2"), tuple(kraus))
