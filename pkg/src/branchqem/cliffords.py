"""The single-qubit Clifford group, used as the default correction set."""

from __future__ import annotations

import numpy as np

from .qmath import H, ID2, S, kron


def _phase_canonical(u: np.ndarray) -> np.ndarray:
    """Fix the global phase so the first nonzero entry is real positive."""
    flat = u.reshape(-1)
    idx = int(np.argmax(np.abs(flat) > 1e-9))
    phase = flat[idx] / abs(flat[idx])
    return u / phase


def _key(u: np.ndarray) -> tuple:
    c = np.round(_phase_canonical(u), 9)
    return tuple((float(x.real), float(x.imag)) for x in c.reshape(-1))


def single_qubit_cliffords() -> list[np.ndarray]:
    """All 24 single-qubit Cliffords, in a fixed deterministic order."""
    found: dict[tuple, np.ndarray] = {_key(ID2): ID2.copy()}
    frontier = [ID2.copy()]
    while frontier:
        nxt = []
        for u in frontier:
            for g in (H, S):
                v = _phase_canonical(g @ u)
                k = _key(v)
                if k not in found:
                    found[k] = v
                    nxt.append(v)
        frontier = nxt
    group = [found[k] for k in sorted(found)]
    assert len(group) == 24
    return group


def clifford_corrections(m: int) -> list[np.ndarray]:
    """Tensor products of single-qubit Cliffords over m qubits (24^m elements)."""
    base = single_qubit_cliffords()
    out = base
    for _ in range(m - 1):
        out = [kron(a, b) for a in out for b in base]
    return out
