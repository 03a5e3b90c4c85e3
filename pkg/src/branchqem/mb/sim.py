"""Sequential cluster-state simulation with lazy vertex materialization.

Vertices are created no earlier than needed: measuring a vertex first
materializes its neighbours, creates its incident edges, and applies its
local noise (exactly once, after all of its edges exist).  Because an edge
commutes with everything not touching its endpoints and single-vertex noise
commutes with disjoint operations, this interleaving is exactly equivalent
to building the whole noisy cluster up front.

Two backends share the scheduling logic: ``density`` evolves an exact
density matrix over the active set and can enumerate measurement branches;
``pure`` evolves a trajectory state vector, sampling one Kraus operator per
noise application and one outcome per measurement.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import prod

import numpy as np

from ..channels import KrausChannel
from ..qmath import CZ, KET_PLUS
from .patterns import GraphSpec, Measurement, MeasurementPattern

X1 = np.array([[0, 1], [1, 0]], dtype=complex)
Z1 = np.array([[1, 0], [0, -1]], dtype=complex)

DEFAULT_ACTIVE_CAP = 12


class ActiveSetCapError(RuntimeError):
    """The lazy frontier would exceed the configured width cap."""


class AlreadyMeasuredError(ValueError):
    """The vertex was measured earlier in this run."""


def _apply_axes(t: np.ndarray, op: np.ndarray, axes: list[int]) -> np.ndarray:
    """Apply ``op`` to the listed axes of a tensor, preserving axis order."""
    rest = [i for i in range(t.ndim) if i not in axes]
    moved = np.transpose(t, axes + rest)
    lead = prod(t.shape[i] for i in axes)
    out = op @ moved.reshape(lead, -1)
    out = out.reshape([t.shape[i] for i in axes] + [t.shape[i] for i in rest])
    inv = np.argsort(axes + rest)
    return np.transpose(out, inv)


@dataclass
class MbSimState:
    """Active-set simulation state; never shared mutably between branches."""

    graph: GraphSpec
    backend: str  # "density" | "pure"
    ext_dim: int
    active: list
    state: np.ndarray
    noise: dict
    rng: np.random.Generator | None = None
    materialized: set = field(default_factory=set)
    measured: set = field(default_factory=set)
    noised: set = field(default_factory=set)
    edges_done: set = field(default_factory=set)
    outcomes: dict = field(default_factory=dict)
    weight: float = 1.0  # cumulative branch probability (pure backend)
    active_cap: int = DEFAULT_ACTIVE_CAP

    # -- tensor bookkeeping ------------------------------------------------
    @property
    def dims(self) -> list[int]:
        return [self.ext_dim] + [2] * len(self.active)

    @property
    def trace(self) -> float:
        if self.backend == "pure":
            return self.weight
        return float(np.real(np.trace(self.state)))

    def _pos(self, v) -> int:
        return 1 + self.active.index(v)

    def copy(self) -> "MbSimState":
        return MbSimState(
            graph=self.graph,
            backend=self.backend,
            ext_dim=self.ext_dim,
            active=list(self.active),
            state=self.state.copy(),
            noise=self.noise,
            rng=self.rng,
            materialized=set(self.materialized),
            measured=set(self.measured),
            noised=set(self.noised),
            edges_done=set(self.edges_done),
            outcomes=dict(self.outcomes),
            weight=self.weight,
            active_cap=self.active_cap,
        )

    def apply_op(self, op: np.ndarray, vertices: list) -> None:
        targets = [self._pos(v) for v in vertices]
        if self.backend == "pure":
            self.state = _apply_axes(self.state.reshape(self.dims), op, targets).reshape(-1)
        else:
            dims = self.dims
            n = len(dims)
            t = self.state.reshape(dims + dims)
            t = _apply_axes(t, op, targets)
            t = _apply_axes(t, op.conj(), [p + n for p in targets])
            d = prod(dims)
            self.state = t.reshape(d, d)

    # -- construction ------------------------------------------------------
    def materialize(self, v) -> None:
        if v in self.materialized:
            return
        if len(self.active) + 1 > self.active_cap:
            raise ActiveSetCapError(
                f"active set would exceed the cap of {self.active_cap} qubits"
            )
        self.materialized.add(v)
        self.active.append(v)
        if self.backend == "pure":
            self.state = np.kron(self.state.reshape(-1), KET_PLUS)
        else:
            plus = np.outer(KET_PLUS, KET_PLUS.conj())
            self.state = np.kron(self.state, plus)

    def ensure_ready(self, v) -> None:
        """Materialize neighbours, create v's edges, then apply v's noise."""
        if v not in self.materialized:
            self.materialize(v)
        for u in self.graph.neighbors(v):
            if u in self.measured:
                continue
            if u not in self.materialized:
                self.materialize(u)
            key = (min(v, u), max(v, u))
            if key not in self.edges_done:
                self.edges_done.add(key)
                self.apply_op(CZ, [v, u])
        ch = self.noise.get(v)
        if ch is not None and v not in self.noised:
            self.noised.add(v)
            self._apply_noise(ch, v)

    def _apply_noise(self, ch: KrausChannel, v) -> None:
        if self.backend == "density":
            dims = self.dims
            n = len(dims)
            pos = self._pos(v)
            t = self.state.reshape(dims + dims)
            acc = None
            for k in ch.operators:
                term = _apply_axes(t, k, [pos])
                term = _apply_axes(term, k.conj(), [pos + n])
                acc = term if acc is None else acc + term
            d = prod(dims)
            self.state = acc.reshape(d, d)
        else:
            pos = self._pos(v)
            dims = self.dims
            branches, probs = [], []
            for k in ch.operators:
                cand = _apply_axes(self.state.reshape(dims), k, [pos]).reshape(-1)
                probs.append(float(np.real(np.vdot(cand, cand))))
                branches.append(cand)
            probs_arr = np.array(probs)
            probs_arr = probs_arr / probs_arr.sum()
            idx = int(self.rng.choice(len(branches), p=probs_arr))
            self.state = branches[idx] / np.linalg.norm(branches[idx])

    # -- measurement -------------------------------------------------------
    def _basis_kets(self, meas: Measurement) -> list[np.ndarray]:
        if meas.kind == "Z":
            return [np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)]
        theta = meas.angle(self.outcomes)
        b0 = np.array([1, np.exp(1j * theta)], dtype=complex) / np.sqrt(2)
        b1 = np.array([1, -np.exp(1j * theta)], dtype=complex) / np.sqrt(2)
        return [b0, b1]

    def _project_out(self, v, ket: np.ndarray) -> tuple[float, np.ndarray]:
        """Contract vertex v against <ket|; returns (branch weight, new state)."""
        pos = self._pos(v)
        dims = self.dims
        n = len(dims)
        if self.backend == "pure":
            t = self.state.reshape(dims)
            vec = np.tensordot(ket.conj(), t, axes=([0], [pos])).reshape(-1)
            return float(np.real(np.vdot(vec, vec))), vec
        t = self.state.reshape(dims + dims)
        half = np.tensordot(ket.conj(), t, axes=([0], [pos]))
        # Row axis removed; the matching column axis moved from n+pos to n+pos-1.
        full = np.tensordot(half, ket, axes=([n + pos - 1], [0]))
        d = prod(dims) // dims[pos]
        mat = full.reshape(d, d)
        return float(np.real(np.trace(mat))), mat

    def _commit(self, v, bit: int, weight: float, new_state: np.ndarray) -> None:
        self.active.remove(v)
        self.measured.add(v)
        self.outcomes[v] = bit
        if self.backend == "pure":
            norm = np.linalg.norm(new_state)
            if norm <= 0.0:
                raise ValueError("projected a zero-probability branch")
            self.state = new_state / norm
            self.weight *= weight
        else:
            self.state = new_state  # unnormalized: trace = joint probability

    def measure_vertex(
        self,
        v,
        meas: Measurement | None = None,
        mode: str = "sample",
        fixed: int | None = None,
    ):
        """Measure an active vertex, removing it from the active set.

        ``sample`` draws the outcome, ``fix`` forces ``fixed``; both mutate
        this state and return the outcome bit.  ``enumerate`` leaves this
        state untouched and returns both branches as new states (density
        backend: unnormalized, their traces are the joint probabilities).
        """
        if v in self.measured:
            raise AlreadyMeasuredError(f"vertex {v} was already measured")
        self.ensure_ready(v)
        if meas is None:
            meas = Measurement(v, "X")
        kets = self._basis_kets(meas)
        if mode == "fix":
            weight, new_state = self._project_out(v, kets[fixed])
            self._commit(v, fixed, weight, new_state)
            return fixed
        if mode == "sample":
            if self.backend == "pure":
                # One projection suffices: the complement weight is 1 - w0.
                w0, s0 = self._project_out(v, kets[0])
                if self.rng.random() < w0:
                    self._commit(v, 0, w0, s0)
                    return 0
                w1, s1 = self._project_out(v, kets[1])
                self._commit(v, 1, w1, s1)
                return 1
            w0, s0 = self._project_out(v, kets[0])
            w1, s1 = self._project_out(v, kets[1])
            total = w0 + w1
            p0 = w0 / total if total > 0 else 0.5
            bit = 0 if self.rng.random() < p0 else 1
            self._commit(v, bit, (w0, w1)[bit], (s0, s1)[bit])
            return bit
        if mode == "enumerate":
            branches = []
            for bit, ket in enumerate(kets):
                clone = self.copy()
                weight, new_state = clone._project_out(v, ket)
                clone._commit(v, bit, weight, new_state)
                branches.append(clone)
            return branches
        raise ValueError(f"unknown measurement mode {mode!r}")


def build_cluster(
    graph: GraphSpec,
    noise: dict | None = None,
    input_state: np.ndarray | None = None,
    ext_dim: int = 1,
    backend: str = "density",
    rng: np.random.Generator | None = None,
    active_cap: int = DEFAULT_ACTIVE_CAP,
) -> MbSimState:
    """Start a lazy simulation; input vertices are materialized immediately.

    ``input_state`` covers [external block, inputs in graph order]; omitted
    inputs default to |+> each.  ``noise`` maps vertex ids to single-qubit
    channels (applied once, after all edges of the vertex exist).
    """
    inputs = list(graph.inputs)
    if input_state is None:
        vec = np.ones(1, dtype=complex)
        for _ in range(len(inputs)):
            vec = np.kron(vec, KET_PLUS)
        if ext_dim != 1:
            raise ValueError("an external block needs an explicit input state")
        input_state = vec
    input_state = np.asarray(input_state, dtype=complex).reshape(-1)
    expect = ext_dim * 2 ** len(inputs)
    if input_state.shape[0] != expect:
        raise ValueError(f"input state must have dimension {expect}")
    input_state = input_state / np.linalg.norm(input_state)
    if backend == "pure":
        state = input_state
    else:
        state = np.outer(input_state, input_state.conj())
    return MbSimState(
        graph=graph,
        backend=backend,
        ext_dim=ext_dim,
        active=list(inputs),
        state=state,
        noise=dict(noise or {}),
        rng=rng,
        materialized=set(inputs),
        active_cap=active_cap,
    )


def materialize_all(sim: MbSimState) -> MbSimState:
    """Eagerly build the whole noisy cluster (small graphs only)."""
    for v in sim.graph.vertices:
        sim.ensure_ready(v)
    # ensure_ready applies noise per vertex; edges are created pairwise once.
    return sim


def reorder_to(sim: MbSimState, order: list) -> None:
    """Permute the active vertices into the given order (external slot fixed)."""
    if set(order) != set(sim.active):
        raise ValueError("order must list exactly the active vertices")
    perm = [0] + [sim._pos(v) for v in order]
    dims = sim.dims
    if sim.backend == "pure":
        sim.state = np.transpose(sim.state.reshape(dims), perm).reshape(-1)
    else:
        n = len(dims)
        t = sim.state.reshape(dims + dims)
        t = np.transpose(t, perm + [p + n for p in perm])
        d = prod(dims)
        sim.state = t.reshape(d, d)
    sim.active = list(order)


@dataclass
class PatternRunResult:
    outcomes: dict
    sim: MbSimState
    byproduct_exponents: list[tuple[int, int]]


def run_pattern(
    pattern: MeasurementPattern,
    input_state: np.ndarray | None = None,
    ext_dim: int = 1,
    noise: dict | None = None,
    backend: str = "pure",
    rng: np.random.Generator | None = None,
    mode: str = "sample",
    fixed_bits: dict | None = None,
    active_cap: int = DEFAULT_ACTIVE_CAP,
    apply_corrections: bool = True,
) -> PatternRunResult:
    """Execute a pattern start to finish on one outcome branch.

    Measurements follow the pattern order; outcomes are sampled unless
    ``fixed_bits`` pins them.  Afterwards the output vertices are readied
    (creating any output-output edges and their noise), the byproduct frame
    is applied (unless ``apply_corrections`` is false), and the active set is
    reordered to the output wires.
    """
    sim = build_cluster(
        pattern.graph,
        noise=noise,
        input_state=input_state,
        ext_dim=ext_dim,
        backend=backend,
        rng=rng,
        active_cap=active_cap,
    )
    for v in pattern.order:
        if fixed_bits is not None and v in fixed_bits:
            sim.measure_vertex(v, pattern.measurements[v], "fix", fixed_bits[v])
        else:
            sim.measure_vertex(v, pattern.measurements[v], mode="sample")
    for v in pattern.graph.outputs:
        sim.ensure_ready(v)
    exponents = []
    for wire, rule in enumerate(pattern.byproducts):
        x, z = rule.exponents(sim.outcomes)
        exponents.append((x, z))
        out_v = pattern.graph.outputs[wire]
        if apply_corrections:
            if x:
                sim.apply_op(X1, [out_v])
            if z:
                sim.apply_op(Z1, [out_v])
    reorder_to(sim, list(pattern.graph.outputs))
    return PatternRunResult(dict(sim.outcomes), sim, exponents)


def enumerate_pattern(
    pattern: MeasurementPattern,
    input_state: np.ndarray | None = None,
    ext_dim: int = 1,
    noise: dict | None = None,
    active_cap: int = DEFAULT_ACTIVE_CAP,
    apply_corrections: bool = True,
) -> list[PatternRunResult]:
    """All outcome branches of a pattern run (density backend, exact)."""
    if len(pattern.order) > 16:
        raise ValueError("too many measurements to enumerate")
    base = build_cluster(
        pattern.graph,
        noise=noise,
        input_state=input_state,
        ext_dim=ext_dim,
        backend="density",
        active_cap=active_cap,
    )
    frontier = [base]
    for v in pattern.order:
        nxt = []
        for sim in frontier:
            nxt.extend(sim.measure_vertex(v, pattern.measurements[v], "enumerate"))
        frontier = nxt
    results = []
    for sim in frontier:
        for v in pattern.graph.outputs:
            sim.ensure_ready(v)
        exponents = []
        for wire, rule in enumerate(pattern.byproducts):
            x, z = rule.exponents(sim.outcomes)
            exponents.append((x, z))
            out_v = pattern.graph.outputs[wire]
            if apply_corrections:
                if x:
                    sim.apply_op(X1, [out_v])
                if z:
                    sim.apply_op(Z1, [out_v])
        reorder_to(sim, list(pattern.graph.outputs))
        results.append(PatternRunResult(dict(sim.outcomes), sim, exponents))
    return results
