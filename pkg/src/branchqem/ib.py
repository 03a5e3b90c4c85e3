"""Interferometric superposed error mitigation.

Here the input alone is routed through d branches along with the vacuum; no
auxiliary registers exist.  The output control-system density matrix has the
incoherent channel output on its diagonal blocks, while each off-diagonal
(i, j) block is W_i (U rho U+) W_j+ with W the branch's vacuum interference
operator.  Closed forms for W are provided for dephasing and depolarizing
noise generated by Gaussian stochastic fields, together with a Monte Carlo
oracle that re-derives them from sampled field trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import channels as ch
from .channels import KrausChannel
from .cliffords import clifford_corrections
from .metrics import FidelityReport, cj_input, cj_overlap, cj_target, weighted_cj
from .qmath import (
    ID2,
    X,
    Y,
    Z,
    DensityMatrix,
    SubsystemShape,
    dagger,
    embed,
    kron,
    normalized,
)
from .gb import generalized_x_basis, incoherent_cj_fidelity

ZERO_PROB = 1e-12


@dataclass
class VacuumInterferenceOp:
    """Per-branch averaged evolution operator weighting the coherence blocks."""

    w: np.ndarray

    def __post_init__(self) -> None:
        self.w = np.asarray(self.w, dtype=complex)
        norm = np.linalg.norm(self.w, ord=2)
        if norm > 1.0 + 1e-6:
            raise ValueError(f"vacuum interference operator has norm {norm} > 1")

    @property
    def dim(self) -> int:
        return self.w.shape[0]


def vio_dephasing(p0: float) -> VacuumInterferenceOp:
    """(2 p0 - 1)^(1/4) times the identity; vanishes at the fully dephasing point."""
    if not 0.5 <= p0 <= 1.0:
        raise ValueError("dephasing stochastic fields give p0 in [1/2, 1]")
    return VacuumInterferenceOp((2.0 * p0 - 1.0) ** 0.25 * ID2)


def vio_depolarizing(p0: float) -> VacuumInterferenceOp:
    """((4 p0 - 1)/3)^(3/8) times the identity; vanishes at the fully mixing point."""
    if not 0.25 <= p0 <= 1.0:
        raise ValueError("isotropic stochastic fields give p0 in [1/4, 1]")
    return VacuumInterferenceOp(((4.0 * p0 - 1.0) / 3.0) ** 0.375 * ID2)


def dephasing_p0(gamma_t: float) -> float:
    """No-error probability of the z-field model after time t: (1 + e^-Gt)/2."""
    return 0.5 * (1.0 + np.exp(-gamma_t))


def depolarizing_p0(gamma_t: float) -> float:
    """No-error probability of the isotropic model: (1 + 3 e^-2Gt)/4."""
    return 0.25 * (1.0 + 3.0 * np.exp(-2.0 * gamma_t))


@dataclass
class OracleEstimate:
    """Monte Carlo estimates with one-sigma statistical errors."""

    p0: float
    p0_err: float
    vio_scalar: complex
    vio_err: float
    vio_matrix: np.ndarray
    n_samples: int


def stochastic_field_oracle(
    channel_kind: str,
    gamma_t: float,
    n_samples: int,
    rng: np.random.Generator,
    max_gamma_dt: float = 1e-3,
) -> OracleEstimate:
    """Estimate p0 and the vacuum interference operator from field trajectories.

    Trajectories discretize the Gaussian stochastic Hamiltonian into steps
    with Gamma * dt <= ``max_gamma_dt``; each step draws an independent field
    per axis.  p0 is estimated as the mean of |tr V / 2|^2 over trajectories
    and the interference operator as the trajectory average of V itself.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if gamma_t < 0.0:
        raise ValueError("gamma_t must be nonnegative")
    if gamma_t == 0.0:
        return OracleEstimate(1.0, 0.0, 1.0 + 0j, 0.0, ID2.copy(), n_samples)
    n_steps = max(1, int(np.ceil(gamma_t / max_gamma_dt)))
    gdt = gamma_t / n_steps
    sigma = np.sqrt(2.0 * gdt)  # per-step field scale: mu sqrt(dt) with var(mu) = 2 Gamma

    if channel_kind == "dephasing":
        # Steps commute; the accumulated phase is the sum of per-step draws.
        phi = np.zeros(n_samples)
        for _ in range(n_steps):
            phi += rng.normal(0.0, sigma, size=n_samples)
        half = np.exp(-0.5j * phi)
        vs = np.zeros((n_samples, 2, 2), dtype=complex)
        vs[:, 0, 0] = half
        vs[:, 1, 1] = np.conj(half)
    elif channel_kind == "depolarizing":
        vs = np.broadcast_to(ID2, (n_samples, 2, 2)).copy()
        paulis = np.stack([X, Y, Z])
        for _ in range(n_steps):
            mu = rng.normal(0.0, sigma, size=(n_samples, 3))
            theta = np.linalg.norm(mu, axis=1) / 2.0
            axis = mu / np.maximum(np.linalg.norm(mu, axis=1), 1e-300)[:, None]
            ndots = np.einsum("sk,kij->sij", axis, paulis)
            step = (
                np.cos(theta)[:, None, None] * ID2
                - 1j * np.sin(theta)[:, None, None] * ndots
            )
            vs = np.einsum("sij,sjk->sik", step, vs)
    else:
        raise ValueError(f"unknown channel kind {channel_kind!r}")

    half_traces = 0.5 * np.trace(vs, axis1=1, axis2=2)
    p0_samples = np.abs(half_traces) ** 2
    p0 = float(np.mean(p0_samples))
    p0_err = float(np.std(p0_samples, ddof=1) / np.sqrt(n_samples))
    vio_matrix = np.mean(vs, axis=0)
    scalar_samples = half_traces  # V is trace-dominated; identity component
    vio_scalar = complex(np.mean(scalar_samples))
    vio_err = float(np.std(scalar_samples.real, ddof=1) / np.sqrt(n_samples))
    return OracleEstimate(p0, p0_err, vio_scalar, vio_err, vio_matrix, n_samples)


@dataclass
class IbConfig:
    """Interferometric run: one channel, one interference operator per branch."""

    d: int
    m: int
    u: np.ndarray
    noise: KrausChannel
    vio: VacuumInterferenceOp
    mode: str = "probabilistic"  # probabilistic | deterministic
    correction_set: list[np.ndarray] | None = None

    def __post_init__(self) -> None:
        if self.d < 2:
            raise ValueError("d must be >= 2")
        self.u = np.asarray(self.u, dtype=complex)
        dim = 2**self.m
        if self.u.shape != (dim, dim):
            raise ValueError("computation unitary does not match m")
        if self.noise.dim != dim:
            raise ValueError("noise channel does not match m")
        if self.vio.dim != dim:
            raise ValueError("interference operator does not match m")


def tensor_vio(single: VacuumInterferenceOp, m: int) -> VacuumInterferenceOp:
    """Independent per-qubit fields: the m-qubit operator is a tensor power."""
    w = single.w
    for _ in range(m - 1):
        w = kron(w, single.w)
    return VacuumInterferenceOp(w)


@dataclass
class IbOutcome:
    """One control-measurement branch of an interferometric run."""

    control_outcome: int
    rho: DensityMatrix  # unnormalized
    probability: float


def _branch_blocks(
    u: np.ndarray,
    noise: KrausChannel,
    vio_factors: list[np.ndarray],
    rho_in: np.ndarray,
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Diagonal (incoherent) block and the per-branch coherent factors M_i."""
    evolved = u @ rho_in @ dagger(u)
    diag = np.zeros_like(evolved)
    for k in noise.operators:
        diag += k @ evolved @ dagger(k)
    coh = [w @ evolved for w in vio_factors]
    return diag, coh


def ib_output(config: IbConfig, input_state: np.ndarray) -> list[IbOutcome]:
    """All control outcomes of a single superposed gate application.

    Builds the control (x) system density matrix with the incoherent output
    on the diagonal and W_i (U rho U+) W_j+ off the diagonal, then projects
    the control onto every generalized-X element.  Probabilities sum to one.
    """
    return _ib_outcomes(
        config.d,
        [config.u],
        [config.noise],
        [config.vio],
        input_state,
        m=config.m,
    )


def ib_sequence(
    gates: list[tuple[np.ndarray, KrausChannel, VacuumInterferenceOp]],
    d: int,
    input_state: np.ndarray,
    m: int,
) -> list[IbOutcome]:
    """Several gates applied in sequence inside every branch.

    The diagonal blocks concatenate the per-gate noisy maps; each coherence
    block carries the ordered product of the per-gate interference-operator
    and gate factors.
    """
    if not gates:
        raise ValueError("need at least one gate")
    us = [np.asarray(u, dtype=complex) for u, _, _ in gates]
    noises = [n for _, n, _ in gates]
    vios = [v for _, _, v in gates]
    return _ib_outcomes(d, us, noises, vios, input_state, m=m)


def _ib_outcomes(
    d: int,
    us: list[np.ndarray],
    noises: list[KrausChannel],
    vios: list[VacuumInterferenceOp],
    input_state: np.ndarray,
    m: int,
) -> list[IbOutcome]:
    if d < 2:
        raise ValueError("d must be >= 2")
    psi = normalized(np.asarray(input_state, dtype=complex))
    dim = psi.shape[0]
    if dim != us[0].shape[0]:
        raise ValueError("input dimension does not match the gates")
    rho = np.outer(psi, psi.conj())

    diag = rho
    coherent = rho
    for u, noise, vio in zip(us, noises, vios):
        diag_evolved = u @ diag @ dagger(u)
        acc = np.zeros_like(diag_evolved)
        for k in noise.operators:
            acc += k @ diag_evolved @ dagger(k)
        diag = acc
        coherent = (vio.w @ u) @ coherent @ dagger(vio.w @ u)

    # Identical branches: every off-diagonal block is the same coherent term.
    basis = generalized_x_basis(d)
    outcomes = []
    for el, ket in enumerate(basis):
        # (1/d^2) sum_ij exp(i phases) B_ij with B_ii = diag, B_ij = coherent.
        weights = np.outer(ket, ket.conj())  # |<l|i><j|l>| phases, 1/d included
        s_all = complex(np.sum(weights))
        s_diag = complex(np.trace(weights))
        block = (s_diag * diag + (s_all - s_diag) * coherent) / d
        shape = SubsystemShape((2,) * m) if dim == 2**m else SubsystemShape((dim,))
        out = DensityMatrix(block, shape, normalized=False)
        outcomes.append(IbOutcome(el, out, out.trace))
    return outcomes


def run_ib(config: IbConfig, input_state: np.ndarray | None = None) -> FidelityReport:
    """Choi-style report for an interferometric run.

    The default input is the result half of |Phi+_m>; the interference
    operators, the gate and the noise act on that half while the test block
    idles.  Probabilistic mode keeps the aligned control outcome only;
    deterministic mode averages every outcome, optionally after an
    exhaustive per-outcome correction search.
    """
    m = config.m
    psi, _ = cj_input(m)
    pad = np.eye(2**m, dtype=complex)
    wide = IbConfig(
        d=config.d,
        m=2 * m,
        u=kron(pad, config.u),
        noise=KrausChannel([kron(pad, k) for k in config.noise.operators]),
        vio=VacuumInterferenceOp(kron(pad, config.vio.w)),
        mode=config.mode,
        correction_set=config.correction_set,
    )
    outcomes = ib_output(wide, psi if input_state is None else input_state)
    f0 = incoherent_cj_fidelity(config.u, config.noise, m)

    if config.mode == "probabilistic":
        chosen = outcomes[0]
        if chosen.probability < ZERO_PROB:
            raise ValueError("aligned control outcome has zero probability")
        f = cj_overlap(chosen.rho.normalize(), config.u, m)
        return FidelityReport.build(f, f0, chosen.probability)

    corrections = config.correction_set
    if corrections is None:
        corrections = [np.eye(2**m, dtype=complex)]
    target = cj_target(config.u, m)
    stack = np.stack([kron(pad, dagger(c)) @ target for c in corrections])
    weighted = []
    for out in outcomes:
        if out.probability < ZERO_PROB:
            continue
        rho_n = out.rho.matrix / out.probability
        fids = np.real(np.einsum("ci,ij,cj->c", stack.conj(), rho_n, stack, optimize=True))
        weighted.append((out.probability, float(np.clip(np.max(fids), 0.0, 1.0))))
    p_total, f_avg = weighted_cj(weighted)
    return FidelityReport.build(f_avg, f0, p_total)


def vio_from_phases(
    noise: KrausChannel, weights: np.ndarray, phases: np.ndarray
) -> VacuumInterferenceOp:
    """W = sum_j sqrt(w_j) e^(-i phi_j) K_j for an explicit environment state.

    The branch's environment reference state is sum_j sqrt(w_j) e^(i phi_j)
    |j> over the channel's dilation basis; its overlaps with the leaked
    environment components weight the Kraus operators.
    """
    weights = np.asarray(weights, dtype=float)
    phases = np.asarray(phases, dtype=float)
    if len(weights) != len(noise.operators) or len(phases) != len(noise.operators):
        raise ValueError("need one weight and one phase per Kraus operator")
    if abs(np.sum(weights) - 1.0) > 1e-9 or np.any(weights < 0.0):
        raise ValueError("weights must be a probability vector")
    w = sum(
        np.sqrt(wt) * np.exp(-1j * ph) * k
        for wt, ph, k in zip(weights, phases, noise.operators)
    )
    return VacuumInterferenceOp(w)


def purified_reference(
    d: int,
    u: np.ndarray,
    noise: KrausChannel,
    env_states: list[np.ndarray],
    input_state: np.ndarray,
) -> np.ndarray:
    """Brute-force control (x) system state with explicit branch environments.

    Builds the global pure state in which branch i applies the channel's
    dilation referenced to that branch's environment state while all other
    environments stay untouched, then traces the environments out.  Used as
    the oracle for the interference-operator construction.
    """
    psi = normalized(np.asarray(input_state, dtype=complex))
    dim = psi.shape[0]
    r = len(noise.operators)
    env_states = [normalized(e) for e in env_states]
    if len(env_states) != d:
        raise ValueError("need one environment state per branch")
    # Global layout: control (d) x system (dim) x env_0 (r) x ... x env_{d-1} (r).
    total = d * dim * r**d
    state = np.zeros(total, dtype=complex)
    evolved_branch = [k @ (u @ psi) for k in noise.operators]
    for i in range(d):
        for leak in range(r):
            # System correlated with env_i component |leak>, others in reference.
            amp = evolved_branch[leak]
            envs = []
            for b in range(d):
                envs.append(
                    np.eye(r, dtype=complex)[leak] if b == i else env_states[b]
                )
            vec = amp
            for e in envs:
                vec = np.kron(vec, e)
            block = np.zeros(d, dtype=complex)
            block[i] = 1.0 / np.sqrt(d)
            state += np.kron(block, vec)
    full = np.outer(state, state.conj())
    shape = SubsystemShape([d, dim] + [r] * d)
    rho = DensityMatrix(full, shape, normalized=True)
    from .qmath import partial_trace

    return partial_trace(rho, [0, 1]).matrix
