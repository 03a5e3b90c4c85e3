"""Dense complex linear algebra over tensor products of mixed-dimension subsystems.

Every state and operator in this package is a plain numpy array.  A composite
Hilbert space is described by a :class:`SubsystemShape` (an ordered list of
local dimensions, e.g. ``[d, 2, 2]`` for one d-level control factor and two
qubits).  All matrices are dense; the largest composites used anywhere in the
package are around dimension 1000.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import prod

import numpy as np

TOL = 1e-9

# Single-qubit constants.
ID2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S = np.array([[1, 0], [0, 1j]], dtype=complex)
T_GATE = np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex)

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
KET_PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
KET_MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)
KET_R = np.array([1, 1j], dtype=complex) / np.sqrt(2)  # +1 eigenstate of Y
KET_L = np.array([1, -1j], dtype=complex) / np.sqrt(2)  # -1 eigenstate of Y

CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
CZ = np.diag([1, 1, 1, -1]).astype(complex)


class DimensionMismatchError(ValueError):
    """Operator/state dimensions are inconsistent with the subsystem shape."""


@dataclass(frozen=True)
class SubsystemShape:
    """Ordered local dimensions of a composite space.

    The total dimension is the product of the local ones.  Instances are
    immutable and hashable so they can be shared freely.
    """

    dims: tuple[int, ...]

    def __init__(self, dims) -> None:
        dims = tuple(int(d) for d in dims)
        if any(d < 2 for d in dims):
            raise ValueError(f"local dimensions must be >= 2, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def total_dim(self) -> int:
        return prod(self.dims)

    @property
    def n_subsystems(self) -> int:
        return len(self.dims)

    def check_indices(self, targets) -> tuple[int, ...]:
        targets = tuple(int(t) for t in targets)
        if len(set(targets)) != len(targets):
            raise ValueError(f"duplicate subsystem indices {targets}")
        for t in targets:
            if not 0 <= t < self.n_subsystems:
                raise IndexError(f"subsystem index {t} out of range")
        return targets


def qubits(n: int) -> SubsystemShape:
    return SubsystemShape((2,) * n)


def kron(*mats: np.ndarray) -> np.ndarray:
    """Tensor product of one or more matrices / vectors, left factor outermost."""
    out = np.asarray(mats[0], dtype=complex)
    for m in mats[1:]:
        out = np.kron(out, np.asarray(m, dtype=complex))
    return out


def kron_pow(mat: np.ndarray, n: int) -> np.ndarray:
    return kron(*([mat] * n))


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(m.T)


def is_unitary(m: np.ndarray, tol: float = TOL) -> bool:
    m = np.asarray(m)
    if m.shape[0] != m.shape[1]:
        return False
    return np.max(np.abs(dagger(m) @ m - np.eye(m.shape[0]))) < tol


def is_hermitian(m: np.ndarray, tol: float = TOL) -> bool:
    return np.max(np.abs(m - dagger(m))) < tol


def projector(ket: np.ndarray) -> np.ndarray:
    ket = np.asarray(ket, dtype=complex).reshape(-1)
    return np.outer(ket, ket.conj())


def normalized(ket: np.ndarray) -> np.ndarray:
    ket = np.asarray(ket, dtype=complex).reshape(-1)
    return ket / np.linalg.norm(ket)


def embed(op: np.ndarray, targets, shape: SubsystemShape) -> np.ndarray:
    """Embed ``op`` acting on ``targets`` into the full space, identity elsewhere.

    ``op`` must have dimension equal to the product of the target local
    dimensions, with its tensor factors ordered as in ``targets``.
    """
    targets = shape.check_indices(targets)
    dims = shape.dims
    op = np.asarray(op, dtype=complex)
    t_dim = prod(dims[t] for t in targets)
    if op.shape != (t_dim, t_dim):
        raise DimensionMismatchError(
            f"operator is {op.shape}, targets {targets} span dimension {t_dim}"
        )
    n = shape.n_subsystems
    rest = [i for i in range(n) if i not in targets]
    r_dim = prod(dims[i] for i in rest) if rest else 1
    full = np.kron(op, np.eye(r_dim, dtype=complex))
    # full currently acts on (targets..., rest...); permute back to natural order.
    order = list(targets) + rest
    perm = np.argsort(order)  # position of subsystem i in the current layout
    tensor = full.reshape([dims[i] for i in order] * 2)
    tensor = np.transpose(tensor, list(perm) + [p + n for p in perm])
    d_tot = shape.total_dim
    return np.ascontiguousarray(tensor.reshape(d_tot, d_tot))


def permute_subsystems(vec_or_mat: np.ndarray, perm, shape: SubsystemShape) -> np.ndarray:
    """Reorder subsystems so that new position i holds old subsystem perm[i]."""
    perm = list(perm)
    dims = list(shape.dims)
    new_dims = [dims[p] for p in perm]
    a = np.asarray(vec_or_mat, dtype=complex)
    if a.ndim == 1:
        return a.reshape(dims).transpose(perm).reshape(-1)
    n = len(dims)
    t = a.reshape(dims * 2).transpose(perm + [p + n for p in perm])
    d = prod(new_dims)
    return np.ascontiguousarray(t.reshape(d, d))


@dataclass
class DensityMatrix:
    """A (possibly unnormalized) density operator over a subsystem shape.

    The protocols in this package produce unnormalized states whose trace is
    the probability of the associated measurement record, so ``normalized``
    records whether a unit trace is expected.
    """

    matrix: np.ndarray
    shape: SubsystemShape
    normalized: bool = True

    def __post_init__(self) -> None:
        self.matrix = np.asarray(self.matrix, dtype=complex)
        d = self.shape.total_dim
        if self.matrix.shape != (d, d):
            raise DimensionMismatchError(
                f"matrix is {self.matrix.shape}, shape implies {(d, d)}"
            )

    @classmethod
    def from_ket(cls, ket: np.ndarray, shape: SubsystemShape) -> "DensityMatrix":
        return cls(projector(ket), shape, normalized=True)

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def normalize(self) -> "DensityMatrix":
        tr = np.trace(self.matrix)
        if abs(tr) < 1e-300:
            raise ValueError("cannot normalize a zero-trace state")
        return DensityMatrix(self.matrix / tr, self.shape, normalized=True)

    def validate(self, tol: float = TOL) -> None:
        """Check Hermiticity, positivity and the trace convention."""
        m = self.matrix
        if not is_hermitian(m, tol):
            raise ValueError("density matrix is not Hermitian")
        evals = np.linalg.eigvalsh(m)
        if evals.min() < -tol:
            raise ValueError(f"density matrix has negative eigenvalue {evals.min()}")
        tr = self.trace
        if self.normalized:
            if abs(tr - 1.0) > tol:
                raise ValueError(f"normalized state has trace {tr}")
        elif not -tol <= tr <= 1.0 + tol:
            raise ValueError(f"unnormalized state has trace {tr} outside [0, 1]")

    def evolve(self, u: np.ndarray) -> "DensityMatrix":
        return DensityMatrix(u @ self.matrix @ dagger(u), self.shape, self.normalized)


def partial_trace(rho: DensityMatrix, keep) -> DensityMatrix:
    """Trace out every subsystem not listed in ``keep`` (order preserved)."""
    keep = rho.shape.check_indices(keep)
    dims = rho.shape.dims
    n = len(dims)
    drop = [i for i in range(n) if i not in keep]
    t = rho.matrix.reshape(dims * 2)
    for idx in sorted(drop, reverse=True):
        t = np.trace(t, axis1=idx, axis2=idx + t.ndim // 2)
    new_dims = [dims[i] for i in sorted(keep)]
    d = prod(new_dims) if new_dims else 1
    out = t.reshape(d, d)
    if list(keep) != sorted(keep):
        inner = SubsystemShape(new_dims)
        perm = [sorted(keep).index(k) for k in keep]
        out = permute_subsystems(out, perm, inner)
        new_dims = [dims[i] for i in keep]
    return DensityMatrix(out, SubsystemShape(new_dims), rho.normalized)


def project(rho: DensityMatrix, ket: np.ndarray, targets) -> DensityMatrix:
    """Partial expectation <ket|rho|ket> on ``targets``; targets are removed.

    The result is unnormalized: its trace is the probability of finding
    ``ket`` on the target subsystems.
    """
    targets = rho.shape.check_indices(targets)
    dims = rho.shape.dims
    n = len(dims)
    ket = np.asarray(ket, dtype=complex).reshape(-1)
    t_dim = prod(dims[t] for t in targets)
    if ket.shape[0] != t_dim:
        raise DimensionMismatchError(
            f"ket has dimension {ket.shape[0]}, targets span {t_dim}"
        )
    rest = [i for i in range(n) if i not in targets]
    order = list(targets) + rest
    t = rho.matrix.reshape(dims * 2).transpose(order + [o + n for o in order])
    r_dim = prod(dims[i] for i in rest) if rest else 1
    t = t.reshape(t_dim, r_dim, t_dim, r_dim)
    out = np.einsum("i,ikjl,j->kl", ket.conj(), t, ket, optimize=True)
    if not rest:
        raise ValueError("projecting every subsystem; use an expectation value instead")
    new_dims = [dims[i] for i in rest]
    return DensityMatrix(out, SubsystemShape(new_dims), normalized=False)


def measure_register(rho: DensityMatrix, basis: list[np.ndarray], targets):
    """Project ``targets`` onto each element of an orthonormal basis.

    Returns a list of (probability, unnormalized DensityMatrix on the
    remaining subsystems), one entry per basis element.
    """
    out = []
    for ket in basis:
        reduced = project(rho, ket, targets)
        out.append((reduced.trace, reduced))
    return out


def complete_basis(first: np.ndarray) -> list[np.ndarray]:
    """Orthonormal basis whose first element is ``first``.

    Completed by Gram-Schmidt against the canonical basis vectors in index
    order, which makes the completion deterministic.
    """
    first = normalized(first)
    d = first.shape[0]
    basis = [first]
    for i in range(d):
        if len(basis) == d:
            break
        v = np.zeros(d, dtype=complex)
        v[i] = 1.0
        for b in basis:
            v = v - b * np.vdot(b, v)
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            basis.append(v / norm)
    if len(basis) != d:
        raise RuntimeError("Gram-Schmidt failed to complete the basis")
    return basis


def bell_state(m: int = 1) -> np.ndarray:
    """|Phi+_m> over 2m qubits laid out as [test_1..test_m, result_1..result_m]."""
    d = 2**m
    psi = np.zeros(d * d, dtype=complex)
    for x in range(d):
        psi[x * d + x] = 1.0
    return psi / np.sqrt(d)


def random_ket(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a Ginibre matrix."""
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))
