"""Fidelity figures of merit.

``state_fidelity`` is the Uhlmann fidelity (with a fast path when either
state is pure).  ``cj_fidelity`` evaluates a protocol as a channel by feeding
half of an m-pair maximally entangled state through it and measuring the
overlap with the ideal gate's image; it lower-bounds the state fidelity for
any input under the same settings.  The infidelity ratio
``(1 - F_incoherent) / (1 - F_coherent)`` is the advantage figure used by
every experiment in this package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qmath import (
    TOL,
    DensityMatrix,
    DimensionMismatchError,
    SubsystemShape,
    bell_state,
    dagger,
)


@dataclass
class FidelityReport:
    """Coherent-vs-incoherent comparison for one protocol configuration."""

    f_coherent: float
    f_incoherent: float
    ratio: float
    success_probability: float

    @classmethod
    def build(
        cls, f_coherent: float, f_incoherent: float, success_probability: float
    ) -> "FidelityReport":
        return cls(
            f_coherent=f_coherent,
            f_incoherent=f_incoherent,
            ratio=infidelity_ratio(f_incoherent, f_coherent),
            success_probability=success_probability,
        )


def _sqrtm_psd(m: np.ndarray) -> np.ndarray:
    """Hermitian matrix square root with spectral-noise suppression.

    Eigenvalues below the rounding floor are clamped to zero; otherwise
    sqrt turns 1e-16-sized noise into 1e-8-sized contributions.
    """
    evals, evecs = np.linalg.eigh(m)
    floor = max(1e-13 * max(float(evals[-1]), 0.0), 0.0)
    evals = np.where(evals > floor, evals, 0.0)
    return (evecs * np.sqrt(evals)) @ dagger(evecs)


def _purity(m: np.ndarray) -> float:
    return float(np.real(np.trace(m @ m)))


def state_fidelity(rho: DensityMatrix, sigma: DensityMatrix, tol: float = TOL) -> float:
    """Uhlmann fidelity of two normalized states (squared-trace convention)."""
    a, b = rho.matrix, sigma.matrix
    if a.shape != b.shape:
        raise DimensionMismatchError("states have different dimensions")
    # Pure-state fast path: F = <psi| sigma |psi>.
    for first, second in ((a, b), (b, a)):
        if _purity(first) > 1.0 - tol:
            evals, evecs = np.linalg.eigh(first)
            psi = evecs[:, -1]
            return float(np.clip(np.real(np.vdot(psi, second @ psi)), 0.0, 1.0))
    s = _sqrtm_psd(a)
    inner = _sqrtm_psd(s @ b @ s)
    return float(np.clip(np.real(np.trace(inner)) ** 2, 0.0, 1.0))


def infidelity_ratio(f_incoherent: float, f_coherent: float) -> float:
    """(1 - F0) / (1 - F); +inf when the coherent run is exact but F0 is not."""
    if f_coherent >= 1.0:
        return math.inf if f_incoherent < 1.0 else 1.0
    return (1.0 - f_incoherent) / (1.0 - f_coherent)


def weighted_cj(outcomes: list[tuple[float, float]]) -> tuple[float, float]:
    """Combine (probability, cj_fidelity) pairs into (P, weighted mean F)."""
    if not outcomes:
        raise ValueError("no outcomes to average")
    p_total = sum(p for p, _ in outcomes)
    if p_total <= 0.0:
        return 0.0, 1.0
    f = sum(p * fq for p, fq in outcomes) / p_total
    return p_total, f


def cj_input(m: int) -> tuple[np.ndarray, SubsystemShape]:
    """|Phi+_m><Phi+_m| on 2m qubits, test block first, result block second."""
    psi = bell_state(m)
    shape = SubsystemShape((2,) * (2 * m))
    return psi, shape


def cj_target(u: np.ndarray, m: int) -> np.ndarray:
    """(1_t (x) U) |Phi+_m>, the image of the ideal computation."""
    psi = bell_state(m)
    d = 2**m
    full = np.kron(np.eye(d, dtype=complex), u)
    return full @ psi


def cj_overlap(rho_out: DensityMatrix, u: np.ndarray, m: int) -> float:
    """<Phi+_m| (1 (x) U+) rho (1 (x) U) |Phi+_m> for a normalized rho."""
    target = cj_target(u, m)
    val = np.real(np.vdot(target, rho_out.matrix @ target))
    return float(np.clip(val, 0.0, 1.0))


def cj_fidelity(protocol, u: np.ndarray, m: int) -> float:
    """CJ fidelity of a state transformer acting on the result half.

    ``protocol`` maps a DensityMatrix over 2m qubits (test block idle, result
    block processed) to a possibly unnormalized DensityMatrix on the same
    layout.  The returned value is the Eq.-style overlap of the normalized
    output with the ideal gate's image.
    """
    psi, shape = cj_input(m)
    rho_in = DensityMatrix.from_ket(psi, shape)
    rho_out = protocol(rho_in)
    tr = rho_out.trace
    if tr <= 0.0:
        raise ValueError("protocol output has non-positive trace")
    if not rho_out.normalized:
        rho_out = rho_out.normalize()
    return cj_overlap(rho_out, u, m)
