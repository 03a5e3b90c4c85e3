"""Gate-based superposed error mitigation on a d-branch register layout.

The engine distributes an input register over d branches with a
controlled-SWAP keyed to a native d-level control, runs the noisy computation
independently in every branch, reassembles with a second controlled-SWAP, and
enumerates all control/auxiliary measurement outcomes by brute-force
projection of the composite density matrix.

Choi-style evaluation widens every register to 2m qubits: the leading m
qubits (test block) idle while the computation and the noise act on the
trailing m.  Swapping whole widened registers is equivalent to swapping only
the computation halves because nothing touches a test block between the two
controlled-SWAPs.

The module also carries the closed-form counterparts used as oracles: the
post-selected output density matrix, the depolarizing probability/fidelity
bounds, and the process-matrix update of the fully sensitive protocol.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import channels as ch
from .channels import KrausChannel, ProcessMatrix, kraus_to_chi
from .cliffords import clifford_corrections
from .metrics import FidelityReport, cj_input, cj_overlap, weighted_cj
from .qmath import (
    CNOT,
    ID2,
    T_GATE,
    TOL,
    DensityMatrix,
    SubsystemShape,
    bell_state,
    complete_basis,
    dagger,
    embed,
    kron,
    normalized,
    project,
    projector,
)

ZERO_PROB = 1e-12


def generalized_x_basis(d: int) -> list[np.ndarray]:
    """The d orthonormal vectors (1/sqrt d) sum_k exp(2 pi i k l / d) |k>."""
    if d < 2:
        raise ValueError("d must be >= 2")
    out = []
    for el in range(d):
        phases = np.exp(2j * np.pi * np.arange(d) * el / d)
        out.append(phases / np.sqrt(d))
    return out


def _cswap_on_registers(d: int, reg_dim: int) -> np.ndarray:
    """Controlled-SWAP on shape [d] + [reg_dim]*d: control |i> swaps 0 <-> i."""
    dim = d * reg_dim**d
    u = np.zeros((dim, dim), dtype=complex)
    strides = [reg_dim ** (d - 1 - r) for r in range(d)]
    for c in range(d):
        base_c = c * reg_dim**d
        for idx in range(reg_dim**d):
            regs = [(idx // strides[r]) % reg_dim for r in range(d)]
            if c > 0:
                regs[0], regs[c] = regs[c], regs[0]
            new_idx = sum(v * strides[r] for r, v in enumerate(regs))
            u[base_c + new_idx, base_c + idx] = 1.0
    return u


def cswap_unitary(d: int, m: int) -> np.ndarray:
    """Controlled-SWAP over one main and d-1 auxiliary m-qubit registers."""
    if d < 2 or m < 1:
        raise ValueError("need d >= 2 and m >= 1")
    return _cswap_on_registers(d, 2**m)


@dataclass
class GbConfig:
    """Everything a gate-based protocol run needs.

    ``reg_width`` is the register width in qubits; it equals ``m`` for plain
    runs.  Choi-style runs double it, in which case the computation and the
    noise act on the trailing ``m`` qubits of every register while the
    leading (test) qubits idle.
    """

    d: int
    m: int
    u: np.ndarray
    noise: KrausChannel
    aux_state: np.ndarray
    aux_meas_state: np.ndarray
    mode: str = "probabilistic"  # probabilistic | quasi_deterministic | deterministic
    keep_rule: tuple = ("keep_all",)  # ("drop_worst", k) | ("threshold", p) | ("keep_all",)
    cswap_noise: float | None = None
    correction_set: list[np.ndarray] | None = None
    reg_width: int | None = None

    def __post_init__(self) -> None:
        if self.d < 2:
            raise ValueError("d must be >= 2")
        self.u = np.asarray(self.u, dtype=complex)
        if self.u.shape != (2**self.m, 2**self.m):
            raise ValueError("computation unitary does not match m")
        if self.noise.dim != 2**self.m:
            raise ValueError("noise channel does not match m")
        if self.reg_width is None:
            self.reg_width = self.m
        if self.reg_width < self.m:
            raise ValueError("register width cannot be smaller than m")
        if self.cswap_noise is not None and self.d != 2:
            raise ValueError("the Fredkin noise model requires d = 2")
        self.aux_state = normalized(self.aux_state)
        self.aux_meas_state = normalized(self.aux_meas_state)
        reg = 2**self.reg_width
        if self.aux_state.shape[0] != reg or self.aux_meas_state.shape[0] != reg:
            raise ValueError("auxiliary states do not match the register width")

    @property
    def reg_dim(self) -> int:
        return 2**self.reg_width

    @property
    def shape(self) -> SubsystemShape:
        return SubsystemShape([self.d] + [self.reg_dim] * self.d)

    @property
    def idle(self) -> int:
        return self.reg_width - self.m

    def full_u(self) -> np.ndarray:
        """Computation embedded on the trailing m qubits of one register."""
        if self.idle == 0:
            return self.u
        return kron(np.eye(2**self.idle, dtype=complex), self.u)

    def full_noise(self) -> KrausChannel:
        if self.idle == 0:
            return self.noise
        pad = np.eye(2**self.idle, dtype=complex)
        return KrausChannel([kron(pad, k) for k in self.noise.operators])


@dataclass
class ProtocolOutcome:
    """One post-measurement branch of a protocol run."""

    control_outcome: int
    aux_outcomes: tuple[int, ...]
    rho: DensityMatrix  # unnormalized, on the surviving main register
    probability: float
    correction: np.ndarray | None = None
    fidelity: float = 0.0


def _apply_ideal_cswap(rho: np.ndarray, config: GbConfig) -> np.ndarray:
    u = _cswap_on_registers(config.d, config.reg_dim)
    return u @ rho @ dagger(u)


def _apply_noisy_cswap(rho: np.ndarray, config: GbConfig) -> np.ndarray:
    """d=2 controlled-SWAP as Fredkin gates, depolarizing noise after each.

    The j-th Fredkin swaps the j-th computation qubit of both registers under
    the control qubit and is followed by single-qubit depolarizing channels
    (no-error probability ``cswap_noise``) on the control and on both swapped
    qubits.  Idle test qubits of widened registers are untouched.
    """
    w = config.reg_width
    fine = SubsystemShape([2] + [2] * (2 * w))
    dep = ch.depolarizing(config.cswap_noise)
    state = DensityMatrix(rho, fine, normalized=True)
    swap2 = np.eye(4, dtype=complex)[[0, 2, 1, 3]]
    fredkin = np.zeros((8, 8), dtype=complex)
    fredkin[:4, :4] = np.eye(4)
    fredkin[4:, 4:] = swap2
    for j in range(config.m):
        qubit_a = 1 + config.idle + j
        qubit_b = 1 + w + config.idle + j
        gate = embed(fredkin, [0, qubit_a, qubit_b], fine)
        state = state.evolve(gate)
        for target in (0, qubit_a, qubit_b):
            state = ch.apply(dep, state, [target])
    return state.matrix


def run_gb(config: GbConfig, input_state: np.ndarray) -> list[ProtocolOutcome]:
    """Brute-force simulation of one protocol run, enumerating all outcomes.

    Builds control (x) register_0 (x) ... (x) register_{d-1}, applies the
    controlled-SWAP, runs (ideal U then noise) independently per register,
    applies the controlled-SWAP again, then projects onto every product of a
    generalized-X control element with auxiliary basis states.  The auxiliary
    measurement basis has ``aux_meas_state`` as element 0 and is completed
    deterministically by Gram-Schmidt.
    """
    d, shape = config.d, config.shape
    input_state = normalized(np.asarray(input_state, dtype=complex))
    if input_state.shape[0] != config.reg_dim:
        raise ValueError("input state does not match the register width")

    psi = np.full(d, 1.0 / np.sqrt(d), dtype=complex)
    psi = np.kron(psi, input_state)
    for _ in range(d - 1):
        psi = np.kron(psi, config.aux_state)
    rho = projector(psi)

    def apply_cswap(r: np.ndarray) -> np.ndarray:
        if config.cswap_noise is None:
            return _apply_ideal_cswap(r, config)
        return _apply_noisy_cswap(r, config)

    rho = apply_cswap(rho)

    u_full = config.full_u()
    noise_full = config.full_noise()
    for reg in range(d):
        u_emb = embed(u_full, [reg + 1], shape)
        rho = u_emb @ rho @ dagger(u_emb)
        out = np.zeros_like(rho)
        for k in noise_full.operators:
            full = embed(k, [reg + 1], shape)
            out += full @ rho @ dagger(full)
        rho = out

    rho = apply_cswap(rho)

    state = DensityMatrix(rho, shape, normalized=True)
    control_basis = generalized_x_basis(d)
    aux_basis = complete_basis(config.aux_meas_state)

    outcomes: list[ProtocolOutcome] = []
    for el, control_ket in enumerate(control_basis):
        after_control = project(state, control_ket, [0])
        _enumerate_aux(after_control, el, (), aux_basis, outcomes)
    return outcomes


def _enumerate_aux(
    state: DensityMatrix,
    control_outcome: int,
    chosen: tuple[int, ...],
    aux_basis: list[np.ndarray],
    outcomes: list[ProtocolOutcome],
) -> None:
    """Depth-first enumeration of auxiliary outcomes; register 0 survives."""
    if state.shape.n_subsystems == 1:
        outcomes.append(
            ProtocolOutcome(
                control_outcome=control_outcome,
                aux_outcomes=chosen,
                rho=state,
                probability=state.trace,
            )
        )
        return
    last = state.shape.n_subsystems - 1
    for idx, ket in enumerate(aux_basis):
        reduced = project(state, ket, [last])
        _enumerate_aux(reduced, control_outcome, (idx,) + chosen, aux_basis, outcomes)


def designated_outcome(outcomes: list[ProtocolOutcome]) -> ProtocolOutcome:
    """The post-selected branch: control element 0, every auxiliary on element 0."""
    for out in outcomes:
        if out.control_outcome == 0 and all(a == 0 for a in out.aux_outcomes):
            return out
    raise LookupError("designated outcome missing from the outcome list")


def outcome_completeness_defect(outcomes: list[ProtocolOutcome]) -> float:
    return abs(sum(o.probability for o in outcomes) - 1.0)


def analytic_rho_out(
    noise: KrausChannel,
    u: np.ndarray,
    phi0: np.ndarray,
    phif: np.ndarray,
    d: int,
    input_state: np.ndarray,
) -> tuple[DensityMatrix, float]:
    """Closed-form post-selected output state and its probability.

    Evaluates the two-term interference formula directly from the Kraus
    overlaps <phi_f| K_i U |phi_0>; the trace of the returned (unnormalized)
    state is the probability of the designated control/auxiliary outcome.
    """
    u = np.asarray(u, dtype=complex)
    phi0 = normalized(phi0)
    phif = normalized(phif)
    psi = normalized(input_state)
    dim = u.shape[0]
    overlaps = np.array([np.vdot(phif, k @ (u @ phi0)) for k in noise.operators])
    a2 = float(np.sum(np.abs(overlaps) ** 2))
    a_d = a2 ** (d - 1)

    vecs = [k @ (u @ psi) for k in noise.operators]
    incoherent = np.zeros((dim, dim), dtype=complex)
    for v in vecs:
        incoherent += np.outer(v, v.conj())
    if a2 <= 0.0:
        out = np.zeros_like(incoherent)
    else:
        # Coefficient of K_i U rho U+ K_j+ is conj(o_i) o_j with
        # o_k = <phi_f| K_k U |phi_0>.
        coherent_vec = sum(np.conj(o) * v for o, v in zip(overlaps, vecs))
        cross = np.outer(coherent_vec, np.conj(coherent_vec))
        out = (a_d / d) * (incoherent + (d - 1) * cross / a2)
    m_qubits = int(round(np.log2(dim)))
    rho = DensityMatrix(out, SubsystemShape((2,) * m_qubits), normalized=False)
    return rho, rho.trace


def omega_params(
    noise: KrausChannel, u: np.ndarray, phi0: np.ndarray, phif: np.ndarray
) -> tuple[float, float]:
    """Auxiliary sensitivity diagnostics (omega_1, omega_2).

    omega_1 is computed over the canonical (orthogonal) Kraus set with the
    largest-trace operator taken as the no-error anchor; it is undefined for
    a noiseless channel, which is signaled with ValueError.
    """
    chi = kraus_to_chi(noise)
    p_ne = chi.p_ne
    if p_ne >= 1.0 - TOL:
        raise ValueError("omega_1 is undefined for a noiseless channel")
    canonical = ch.chi_to_kraus(chi)
    phi0 = normalized(phi0)
    phif = normalized(phif)
    evolved = np.asarray(u, dtype=complex) @ phi0
    total = 0.0
    for k in canonical.operators[1:]:
        total += abs(np.vdot(evolved, k @ evolved)) ** 2
    omega1 = 1.0 - total / (1.0 - p_ne)
    omega2 = abs(np.vdot(phif, evolved)) ** 2
    return float(np.clip(omega1, 0.0, 1.0)), float(np.clip(omega2, 0.0, 1.0))


def depolarizing_bounds(d: int, m: int, p0: float) -> tuple[float, float]:
    """Post-selection probability and fidelity lower bound, tensor depolarizing."""
    if d < 2 or not 0.0 <= p0 <= 1.0:
        raise ValueError("need d >= 2 and p0 in [0, 1]")
    if p0 == 0.0:
        return 0.0, 0.0
    pm = p0**m
    prob = p0 ** (m * d) + (p0 ** (m * d) / d) * (1.0 / pm - 1.0)
    fid = d * pm / (pm * (d - 1) + 1.0)
    return float(prob), float(fid)


def chi_update_full_sensitivity(chi: ProcessMatrix, d: int) -> tuple[ProcessMatrix, float]:
    """Process-matrix update of the fully sensitive post-selected protocol.

    Returns the normalized updated coefficients and the success probability.
    lambda'_00 exceeds lambda_00 whenever lambda_00 lies in (1/2, 1).
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    lam = chi.lam
    l00 = float(np.real(lam[0, 0]))
    col = lam[:, 0]
    prob = (l00 ** (d - 1) + (d - 1) * l00 ** (d - 2) * float(np.sum(np.abs(col) ** 2))) / d
    new = l00 ** (d - 2) * (l00 * lam + (d - 1) * np.outer(col, col.conj())) / (d * prob)
    return ProcessMatrix(chi.m, new), float(prob)


def correlated_dephasing_channel(p0: float) -> KrausChannel:
    """Two-qubit correlated dephasing with amplitudes {p0 II, p1 ZZ, sqrt(p0 p1) IZ/ZI}.

    p1 = 1 - p0; completeness follows from (p0 + p1)^2 = 1.  The no-error
    weight of this channel is p0^2.
    """
    if not 0.0 <= p0 <= 1.0:
        raise ValueError("p0 must be in [0, 1]")
    p1 = 1.0 - p0
    from .qmath import ID2, Z

    return KrausChannel(
        [
            p0 * kron(ID2, ID2),
            p1 * kron(Z, Z),
            np.sqrt(p0 * p1) * kron(ID2, Z),
            np.sqrt(p0 * p1) * kron(Z, ID2),
        ]
    )


def cz_dephasing_bounds(p0: float, d: int) -> tuple[float, float]:
    """Closed-form (P, F) of the post-selected run for CZ on |++> with the
    correlated dephasing model and the |+1> auxiliary.

    The auxiliary is insensitive to the IZ error, which survives even at
    large branch counts; the remaining errors are suppressed.
    """
    if d < 2 or not 0.0 <= p0 <= 1.0:
        raise ValueError("need d >= 2 and p0 in [0, 1]")
    p1 = 1.0 - p0
    prob = (
        p0 ** (d + 1)
        + p0**d * p1 * (p1 + p0 / d)
        + p0 ** (d - 1) * p1 / d
    )
    fid = d * p0**2 / (p1 + p0 * (p0 * p1 + d * (p0 + p1**2)))
    return float(prob), float(fid)


def cz_dephasing_limit(p0: float) -> tuple[float, float]:
    """Large-d limits of the closed forms: (P / p0^d, F_infinity)."""
    p1 = 1.0 - p0
    return float(p0 + p1**2), float(1.0 - p1**2 / (p0 + p1**2))


def incoherent_cj_fidelity(u: np.ndarray, noise: KrausChannel, m: int) -> float:
    """CJ fidelity of the bare noisy computation (the incoherent reference)."""
    psi, shape = cj_input(m)
    rho = DensityMatrix.from_ket(psi, shape)
    targets = list(range(m, 2 * m))
    rho = rho.evolve(embed(u, targets, shape))
    rho = ch.apply(noise, rho, targets)
    return cj_overlap(rho, u, m)


def choi_config(
    d: int,
    m: int,
    u: np.ndarray,
    noise: KrausChannel,
    mode: str = "probabilistic",
    keep_rule: tuple = ("keep_all",),
    cswap_noise: float | None = None,
    aux_state: np.ndarray | None = None,
    aux_meas_state: np.ndarray | None = None,
    correction_set: list[np.ndarray] | None = None,
) -> GbConfig:
    """A Choi-widened configuration: registers of 2m qubits, test block idle.

    By default the auxiliary registers hold m maximally entangled pairs (the
    fully sensitive choice) and the post-selection target is the ideal image
    of that state, which realizes (omega_1, omega_2) = (1, 1) for any noise.
    """
    if aux_state is None:
        aux_state = bell_state(m)
    aux_state = normalized(aux_state)
    if aux_meas_state is None:
        aux_meas_state = kron(np.eye(2**m, dtype=complex), u) @ aux_state
    return GbConfig(
        d=d,
        m=m,
        u=u,
        noise=noise,
        aux_state=aux_state,
        aux_meas_state=aux_meas_state,
        mode=mode,
        keep_rule=keep_rule,
        cswap_noise=cswap_noise,
        correction_set=correction_set,
        reg_width=2 * m,
    )


def run_gb_choi(config: GbConfig) -> list[ProtocolOutcome]:
    """Run the protocol on the result half of |Phi+_m> (the CJ input)."""
    if config.idle != config.m:
        raise ValueError("run_gb_choi needs a Choi-widened configuration")
    return run_gb(config, bell_state(config.m))


def probabilistic_report(config: GbConfig) -> FidelityReport:
    """Post-selected CJ fidelity, probability and ratio for a Choi-widened run."""
    outcomes = run_gb_choi(config)
    chosen = designated_outcome(outcomes)
    if chosen.probability < ZERO_PROB:
        raise ValueError("designated outcome has zero probability")
    f = cj_overlap(chosen.rho.normalize(), config.u, config.m)
    f0 = incoherent_cj_fidelity(config.u, config.noise, config.m)
    return FidelityReport.build(f, f0, chosen.probability)


def quasi_deterministic(
    config: GbConfig, outcomes: list[ProtocolOutcome]
) -> tuple[list[ProtocolOutcome], FidelityReport]:
    """Correct every outcome, keep a subset per the post-processing rule.

    For each outcome the correction search is exhaustive over the declared
    correction set (single-qubit Cliffords per computation qubit by default),
    maximizing that branch's CJ overlap.  ``keep_rule`` then selects which
    branches survive: ("drop_worst", k), ("threshold", p_min), or
    ("keep_all",), the last being the fully deterministic protocol.  The
    report carries the weighted CJ average and the incoherent reference.
    """
    if config.idle != config.m:
        raise ValueError("the correction search needs a Choi-widened configuration")
    corrections = config.correction_set
    if corrections is None:
        corrections = clifford_corrections(config.m)
    if not corrections:
        raise ValueError("empty correction set")
    m = config.m
    pad = np.eye(2**m, dtype=complex)
    # Stack of target vectors (1 (x) C+) |Phi_U> for a vectorized search.
    from .metrics import cj_target

    target = cj_target(config.u, m)
    stack = np.stack([kron(pad, dagger(c)) @ target for c in corrections])

    corrected: list[ProtocolOutcome] = []
    for out in outcomes:
        if out.probability < ZERO_PROB:
            # Zero-probability branches are kept with fidelity 1 by convention
            # and never contribute to the weighted average.
            corrected.append(
                ProtocolOutcome(
                    out.control_outcome, out.aux_outcomes, out.rho,
                    out.probability, correction=None, fidelity=1.0,
                )
            )
            continue
        rho_n = out.rho.matrix / out.rho.trace
        fids = np.real(np.einsum("ci,ij,cj->c", stack.conj(), rho_n, stack, optimize=True))
        best = int(np.argmax(fids))
        corrected.append(
            ProtocolOutcome(
                out.control_outcome, out.aux_outcomes, out.rho, out.probability,
                correction=corrections[best],
                fidelity=float(np.clip(fids[best], 0.0, 1.0)),
            )
        )

    kept = _apply_keep_rule(config.keep_rule, corrected)
    weighted = [(o.probability, o.fidelity) for o in kept if o.probability >= ZERO_PROB]
    p_total, f_avg = weighted_cj(weighted) if weighted else (0.0, 1.0)
    f0 = incoherent_cj_fidelity(config.u, config.noise, config.m)
    return kept, FidelityReport.build(f_avg, f0, p_total)


def _apply_keep_rule(rule: tuple, outcomes: list[ProtocolOutcome]) -> list[ProtocolOutcome]:
    kind = rule[0]
    if kind == "keep_all":
        return outcomes
    live = [o for o in outcomes if o.probability >= ZERO_PROB]
    if kind == "drop_worst":
        k = int(rule[1])
        ranked = sorted(live, key=lambda o: o.fidelity)
        dropped = {id(o) for o in ranked[:k]}
        return [o for o in outcomes if id(o) not in dropped]
    if kind == "threshold":
        p_min = float(rule[1])
        ranked = sorted(live, key=lambda o: -o.fidelity)
        kept_ids, acc = set(), 0.0
        for o in ranked:
            kept_ids.add(id(o))
            acc += o.probability
            if acc >= p_min:
                break
        return [o for o in outcomes if id(o) in kept_ids or o.probability < ZERO_PROB]
    raise ValueError(f"unknown keep rule {rule!r}")


def run_gb_report(config: GbConfig) -> FidelityReport:
    """Dispatch on the configured post-processing mode (Choi-widened runs)."""
    if config.mode == "probabilistic":
        return probabilistic_report(config)
    outcomes = run_gb_choi(config)
    rule = config.keep_rule if config.mode == "quasi_deterministic" else ("keep_all",)
    cfg = config if config.keep_rule == rule else _with_rule(config, rule)
    _, report = quasi_deterministic(cfg, outcomes)
    return report


def _with_rule(config: GbConfig, rule: tuple) -> GbConfig:
    return GbConfig(
        d=config.d, m=config.m, u=config.u, noise=config.noise,
        aux_state=config.aux_state, aux_meas_state=config.aux_meas_state,
        mode=config.mode, keep_rule=rule, cswap_noise=config.cswap_noise,
        correction_set=config.correction_set, reg_width=config.reg_width,
    )


def layered_circuit(n_layers: int, p0: float) -> tuple[np.ndarray, KrausChannel]:
    """A depth-n benchmark on two qubits: each layer is a cNOT then T on both.

    Depolarizing noise with single-qubit no-error probability ``p0`` follows
    every gate on each qubit it touches.  Returns the composed ideal unitary
    and the effective two-qubit channel referred to the output frame, i.e.
    the total map is rho -> E(U rho U+); the pair feeds straight into a
    protocol configuration.
    """
    if n_layers < 1:
        raise ValueError("n_layers must be >= 1")
    t2 = kron(T_GATE, T_GATE)
    dep1 = ch.depolarizing(p0)
    dep2 = ch.tensor_channel(dep1, 2)
    dep_q0 = KrausChannel([kron(k, ID2) for k in dep1.operators])
    dep_q1 = KrausChannel([kron(ID2, k) for k in dep1.operators])

    u_total = np.eye(4, dtype=complex)
    eff = ch.identity_channel(4)

    def absorb(gate: np.ndarray, gate_noise: list[KrausChannel]) -> None:
        nonlocal u_total, eff
        moved = KrausChannel([gate @ k @ dagger(gate) for k in eff.operators])
        for noise in gate_noise:
            moved = ch.compose(moved, noise)
        eff = ch.canonicalize(moved)
        u_total = gate @ u_total

    for _ in range(n_layers):
        absorb(CNOT, [dep2])
        absorb(t2, [dep_q0, dep_q1])
    return u_total, eff
