"""Quantum channel representations and standard noise families.

A channel is held as a :class:`KrausChannel` (operator-sum form) or as a
:class:`ProcessMatrix` (coefficients over the Pauli-product basis).  The two
are interconvertible; the process-matrix coefficient ``lambda[0, 0]`` is the
no-error probability of the channel.

The single-qubit Pauli ordering is fixed as (I, Z, X, Y) and extended to m
qubits digit-wise in base 4, so index 0 is always the identity product.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .qmath import (
    ID2,
    TOL,
    X,
    Y,
    Z,
    DensityMatrix,
    DimensionMismatchError,
    dagger,
    embed,
    kron,
)

PAULI_1Q = (ID2, Z, X, Y)
PAULI_LABELS = ("I", "Z", "X", "Y")


def pauli_basis(m: int) -> list[np.ndarray]:
    """All 4^m Pauli products in base-4 digit order (first qubit most significant)."""
    out = []
    for digits in product(range(4), repeat=m):
        out.append(kron(*(PAULI_1Q[d] for d in digits)))
    return out


@dataclass
class KrausChannel:
    """A CPTP map as a finite list of equal-dimension square Kraus operators."""

    operators: list[np.ndarray]

    def __post_init__(self) -> None:
        if not self.operators:
            raise ValueError("a channel needs at least one Kraus operator")
        ops = [np.asarray(k, dtype=complex) for k in self.operators]
        d = ops[0].shape[0]
        for k in ops:
            if k.shape != (d, d):
                raise DimensionMismatchError("Kraus operators differ in shape")
        self.operators = ops

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    @property
    def n_qubits(self) -> int:
        m = int(round(np.log2(self.dim)))
        if 2**m != self.dim:
            raise DimensionMismatchError(f"dimension {self.dim} is not a power of two")
        return m

    def completeness_defect(self) -> float:
        acc = sum(dagger(k) @ k for k in self.operators)
        return float(np.max(np.abs(acc - np.eye(self.dim))))

    def validate(self, tol: float = TOL) -> None:
        defect = self.completeness_defect()
        if defect > tol:
            raise ValueError(f"Kraus completeness violated by {defect}")


@dataclass
class ProcessMatrix:
    """Coefficients lambda_ij of a channel over the Pauli-product basis."""

    m: int
    lam: np.ndarray

    def __post_init__(self) -> None:
        self.lam = np.asarray(self.lam, dtype=complex)
        d = 4**self.m
        if self.lam.shape != (d, d):
            raise DimensionMismatchError(f"lambda must be {d}x{d} for m={self.m}")

    @property
    def p_ne(self) -> float:
        return float(np.real(self.lam[0, 0]))

    def validate(self, tol: float = TOL, require_tp: bool = True) -> None:
        """Hermiticity, positivity, Cauchy-Schwarz; optionally trace preservation.

        Post-selected updates produce valid (Hermitian, PSD) coefficient
        matrices that are not trace preserving as maps, so the TP check can
        be switched off for them.
        """
        lam = self.lam
        if np.max(np.abs(lam - dagger(lam))) > tol:
            raise ValueError("process matrix is not Hermitian")
        evals = np.linalg.eigvalsh(lam)
        if evals.min() < -tol:
            raise ValueError(f"process matrix has negative eigenvalue {evals.min()}")
        if require_tp:
            paulis = pauli_basis(self.m)
            acc = np.zeros_like(paulis[0])
            for i, si in enumerate(paulis):
                for j, sj in enumerate(paulis):
                    if abs(lam[i, j]) > 1e-14:
                        acc = acc + lam[i, j] * (dagger(sj) @ si)
            if np.max(np.abs(acc - np.eye(2**self.m))) > max(tol, 1e-8):
                raise ValueError("process matrix is not trace preserving")
        diag = np.real(np.diag(lam))
        for i in range(lam.shape[0]):
            for j in range(lam.shape[0]):
                if abs(lam[i, j]) ** 2 > diag[i] * diag[j] + tol:
                    raise ValueError(f"Cauchy-Schwarz violated at ({i}, {j})")


def identity_channel(dim: int) -> KrausChannel:
    return KrausChannel([np.eye(dim, dtype=complex)])


def dephasing(p0: float) -> KrausChannel:
    """Single-qubit dephasing: K0 = sqrt(p0) I, K1 = sqrt(1-p0) Z."""
    if not 0.0 <= p0 <= 1.0:
        raise ValueError(f"p0 must be in [0, 1], got {p0}")
    ops = [np.sqrt(p0) * ID2]
    if p0 < 1.0:
        ops.append(np.sqrt(1.0 - p0) * Z)
    return KrausChannel(ops)


def depolarizing(p0: float) -> KrausChannel:
    """Single-qubit depolarizing: K0 = sqrt(p0) I, Ki = sqrt((1-p0)/3) {X, Y, Z}."""
    if not 0.0 <= p0 <= 1.0:
        raise ValueError(f"p0 must be in [0, 1], got {p0}")
    ops = [np.sqrt(p0) * ID2]
    if p0 < 1.0:
        w = np.sqrt((1.0 - p0) / 3.0)
        ops += [w * X, w * Y, w * Z]
    return KrausChannel(ops)


def tensor_channel(ch: KrausChannel, m: int) -> KrausChannel:
    """Independent copies of ``ch`` on m registers: all r^m operator products."""
    if m < 1:
        raise ValueError("m must be >= 1")
    ops = [np.array([[1.0]], dtype=complex)]
    for _ in range(m):
        ops = [kron(a, k) for a in ops for k in ch.operators]
    return KrausChannel(ops)


def tensor_two(a: KrausChannel, b: KrausChannel) -> KrausChannel:
    """Independent channels on two adjacent registers."""
    return KrausChannel([kron(ka, kb) for ka in a.operators for kb in b.operators])


def apply(ch: KrausChannel, rho: DensityMatrix, targets=None) -> DensityMatrix:
    """Apply the channel to ``targets`` (all subsystems when omitted)."""
    if targets is None:
        targets = tuple(range(rho.shape.n_subsystems))
    ops = [embed(k, targets, rho.shape) for k in ch.operators]
    out = np.zeros_like(rho.matrix)
    for k in ops:
        out += k @ rho.matrix @ dagger(k)
    return DensityMatrix(out, rho.shape, rho.normalized)


def apply_matrix(ch: KrausChannel, mat: np.ndarray) -> np.ndarray:
    """Kraus sum on a bare matrix of the channel's own dimension."""
    out = np.zeros_like(mat, dtype=complex)
    for k in ch.operators:
        out += k @ mat @ dagger(k)
    return out


def kraus_to_chi(ch: KrausChannel) -> ProcessMatrix:
    """Expand each Kraus operator in the Pauli basis and accumulate lambda."""
    m = ch.n_qubits
    paulis = pauli_basis(m)
    d = 2**m
    # alpha[j, i] = Tr(sigma_i^dag K_j) / 2^m, lambda_mn = sum_j alpha_jm alpha_jn*
    alpha = np.array(
        [[np.trace(dagger(s) @ k) / d for s in paulis] for k in ch.operators]
    )
    return ProcessMatrix(m, np.einsum("jm,jn->mn", alpha, alpha.conj()))


def chi_to_kraus(chi: ProcessMatrix, tol: float = TOL) -> KrausChannel:
    """Canonical (orthogonal) Kraus set from the eigendecomposition of lambda."""
    evals, evecs = np.linalg.eigh(chi.lam)
    if evals.min() < -tol:
        raise ValueError(f"process matrix has negative eigenvalue {evals.min()}")
    paulis = pauli_basis(chi.m)
    ops = []
    for mu, v in zip(evals, evecs.T):
        if mu <= tol:
            continue
        k = sum(c * s for c, s in zip(v, paulis))
        ops.append(np.sqrt(mu) * k)
    if not ops:
        raise ValueError("process matrix has no positive weight")
    # Largest weight first so the dominant (no-error) operator is ops[0].
    ops.sort(key=lambda k: -abs(np.trace(k)))
    return KrausChannel(ops)


def canonicalize(ch: KrausChannel) -> KrausChannel:
    """Round-trip through the process matrix, pruning redundant operators."""
    return chi_to_kraus(kraus_to_chi(ch))


def compose(first: KrausChannel, second: KrausChannel) -> KrausChannel:
    """Channel equal to ``first`` then ``second``; Kraus count multiplies."""
    if first.dim != second.dim:
        raise DimensionMismatchError("cannot compose channels of different dimension")
    return KrausChannel(
        [k2 @ k1 for k2 in second.operators for k1 in first.operators]
    )


def stinespring(ch: KrausChannel) -> np.ndarray:
    """Isometry V: H_s -> H_s (x) H_e with V|psi> = sum_j (K_j|psi>) (x) |j>."""
    d = ch.dim
    r = len(ch.operators)
    v = np.zeros((d * r, d), dtype=complex)
    for j, k in enumerate(ch.operators):
        # Row blocks ordered system-major: basis |s>|e| at index s * r + e.
        v[j::r, :] = k
    return v


def random_channel(m: int, rank: int, rng: np.random.Generator) -> KrausChannel:
    """Haar-random rank-``rank`` channel on m qubits via a random isometry."""
    d = 2**m
    if not 1 <= rank <= d * d:
        raise ValueError(f"rank must be in [1, {d * d}]")
    g = rng.standard_normal((d * rank, d)) + 1j * rng.standard_normal((d * rank, d))
    q, _ = np.linalg.qr(g)
    ops = [q[i * d : (i + 1) * d, :] for i in range(rank)]
    return KrausChannel(ops)


def channel_distance(a: KrausChannel, b: KrausChannel) -> float:
    """Max entrywise difference of the two maps applied to all matrix units."""
    d = a.dim
    if b.dim != d:
        raise DimensionMismatchError("channels act on different dimensions")
    worst = 0.0
    for i in range(d):
        for j in range(d):
            unit = np.zeros((d, d), dtype=complex)
            unit[i, j] = 1.0
            worst = max(worst, float(np.max(np.abs(apply_matrix(a, unit) - apply_matrix(b, unit)))))
    return worst
