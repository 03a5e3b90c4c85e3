"""Iterated (nested) protocol runs computed entirely in process-matrix space.

Each iteration treats the channel produced by the previous one as the noise
of a fresh probabilistic run with its own branch count and auxiliary state,
always post-selecting the control on its uniform-superposition element and
every auxiliary on the ideal image of its initial state.  The recursion
never materializes the exponentially many effective branches.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channels import ProcessMatrix, pauli_basis
from .qmath import (
    KET0,
    KET1,
    KET_L,
    KET_MINUS,
    KET_PLUS,
    KET_R,
    dagger,
    kron_pow,
    normalized,
)


@dataclass
class NestedPlan:
    """Iteration schedule: branch counts and auxiliary states per round."""

    u: np.ndarray
    d_seq: list[int]
    aux_seq: list[np.ndarray]

    def __post_init__(self) -> None:
        if len(self.d_seq) != len(self.aux_seq):
            raise ValueError("d_seq and aux_seq must have equal length")
        if not self.d_seq:
            raise ValueError("a plan needs at least one iteration")
        if any(d < 2 for d in self.d_seq):
            raise ValueError("every branch count must be >= 2")
        self.u = np.asarray(self.u, dtype=complex)
        self.aux_seq = [normalized(a) for a in self.aux_seq]

    @property
    def n(self) -> int:
        return len(self.d_seq)


def default_aux_sequence(m: int, n: int) -> list[np.ndarray]:
    """The cycling single-qubit-product pattern |1..>, |0..>, |+..>, |-..>, |R..>, |L..>."""
    if n < 1:
        raise ValueError("n must be >= 1")
    cycle = [KET1, KET0, KET_PLUS, KET_MINUS, KET_R, KET_L]
    return [kron_pow(cycle[k % 6], m) for k in range(n)]


def _pauli_expectations(u: np.ndarray, aux: np.ndarray, m: int) -> np.ndarray:
    """c_i = <aux| U+ sigma_i U |aux> over the Pauli-product basis."""
    evolved = u @ aux
    return np.array([np.vdot(evolved, s @ evolved) for s in pauli_basis(m)])


def chi_iteration(
    lam: np.ndarray, c: np.ndarray, d: int
) -> tuple[np.ndarray, float]:
    """One post-selected round in chi space; returns (normalized lambda, probability).

    ``c`` holds the auxiliary Pauli expectations; the fully sensitive case is
    c = (1, 0, ..., 0), for which the round reduces to the closed-form
    full-sensitivity update.  The a2^(d-1) prefactor only scales the success
    probability, so the normalized coefficients stay well defined even when
    it underflows at very large branch counts.
    """
    a2 = float(np.real(np.einsum("i,ij,j->", c, lam, c.conj())))
    if a2 <= 0.0:
        raise ValueError("auxiliary projection has zero acceptance probability")
    v_right = lam @ c.conj()  # sum_n lambda_in c_n*
    v_left = lam.T @ c  # sum_m c_m lambda_mj
    core = lam + (d - 1) / a2 * np.outer(v_right, v_left)
    tr = float(np.real(np.trace(core)))
    prob = (a2 ** (d - 1) / d) * tr  # may underflow to 0.0 for huge d
    return core / tr, float(prob)


def nested_chi(chi0: ProcessMatrix, plan: NestedPlan) -> tuple[ProcessMatrix, float]:
    """Run the recursion for every iteration of the plan.

    Returns the normalized final process matrix and the cumulative success
    probability (the product of per-round post-selection probabilities, each
    taken after renormalizing the previous round).
    """
    m = chi0.m
    lam = chi0.lam.copy()
    total_prob = 1.0
    for d, aux in zip(plan.d_seq, plan.aux_seq):
        if aux.shape[0] != 2**m:
            raise ValueError("auxiliary state does not match the channel width")
        c = _pauli_expectations(plan.u, aux, m)
        lam, prob = chi_iteration(lam, c, d)
        total_prob *= prob
    return ProcessMatrix(m, lam), total_prob


def nested_chi_fully_sensitive(
    chi0: ProcessMatrix, d_seq: list[int]
) -> tuple[ProcessMatrix, float]:
    """The recursion with an ideal fully sensitive auxiliary every round."""
    lam = chi0.lam.copy()
    c = np.zeros(lam.shape[0], dtype=complex)
    c[0] = 1.0
    total_prob = 1.0
    for d in d_seq:
        lam, prob = chi_iteration(lam, c, d)
        total_prob *= prob
    return ProcessMatrix(chi0.m, lam), total_prob


def register_doubling_schedule(d: int, n: int) -> list[int]:
    """Branch counts (d, beta_1, beta_2, ...) whose resource total is d^(2^(n-1)).

    Round k uses as many branches as the total register count accumulated so
    far, which is what makes the closed-form fidelity bound tight.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    seq, registers = [d], d
    for _ in range(n - 1):
        seq.append(registers)
        registers *= seq[-1]
    return seq


def beta_registers(d: int, n: int) -> float:
    """Total register count d^(2^(n-1)); saturates to inf beyond float range."""
    exponent = 2 ** (n - 1)
    try:
        return float(d) ** exponent
    except OverflowError:
        return float("inf")


def nested_fully_sensitive(d: int, n: int, p_ne: float) -> tuple[float, float]:
    """Closed-form fidelity lower bound of the n-round fully sensitive scheme.

    Returns (bound, beta) with beta = d^(2^(n-1)) the total register count.
    The bound equals 1 - (1 - p_ne) / (1 + (beta - 1) p_ne) and saturates to
    1 when beta overflows the floating range.
    """
    if d < 2 or n < 1 or not 0.0 <= p_ne <= 1.0:
        raise ValueError("need d >= 2, n >= 1, p_ne in [0, 1]")
    beta = beta_registers(d, n)
    if np.isinf(beta):
        return 1.0, beta
    bound = 1.0 - (1.0 - p_ne) / (1.0 + (beta - 1.0) * p_ne)
    return float(bound), beta
