import numpy as np
import pytest

from branchqem import channels as ch
from branchqem import gb, ib, qmath


def test_vio_dephasing_values():
    assert abs(ib.vio_dephasing(1.0).w[0, 0] - 1.0) < 1e-12
    assert abs(ib.vio_dephasing(0.75).w[0, 0] - 0.5**0.25) < 1e-12
    assert abs(ib.vio_dephasing(0.5).w[0, 0]) < 1e-12  # vanishes when fully dephasing


def test_vio_depolarizing_values():
    assert abs(ib.vio_depolarizing(1.0).w[0, 0] - 1.0) < 1e-12
    assert abs(ib.vio_depolarizing(0.25).w[0, 0]) < 1e-12
    p0 = 0.7
    assert abs(ib.vio_depolarizing(p0).w[0, 0] - ((4 * p0 - 1) / 3) ** 0.375) < 1e-12


def test_vio_domain_floors():
    with pytest.raises(ValueError):
        ib.vio_dephasing(0.4)
    with pytest.raises(ValueError):
        ib.vio_depolarizing(0.2)


def test_field_model_p0_forms():
    for gt in (0.1, 0.5, 1.0):
        assert abs(ib.dephasing_p0(gt) - 0.5 * (1 + np.exp(-gt))) < 1e-12
        assert abs(ib.depolarizing_p0(gt) - 0.25 * (1 + 3 * np.exp(-2 * gt))) < 1e-12


def test_oracle_zero_time():
    est = ib.stochastic_field_oracle("dephasing", 0.0, 10, np.random.default_rng(0))
    assert est.p0 == 1.0 and est.vio_scalar == 1.0 + 0j


def test_oracle_dephasing_converges():
    gt = np.log(2)
    est = ib.stochastic_field_oracle(
        "dephasing", gt, 20000, np.random.default_rng(1)
    )
    assert abs(est.p0 - 0.75) < 4 * est.p0_err
    assert abs(est.vio_scalar.real - 0.5**0.25) < 4 * est.vio_err


def test_oracle_depolarizing_converges():
    gt = 0.5
    est = ib.stochastic_field_oracle(
        "depolarizing", gt, 20000, np.random.default_rng(2)
    )
    assert abs(est.p0 - ib.depolarizing_p0(gt)) < 4 * est.p0_err
    assert abs(est.vio_scalar.real - np.exp(-0.75 * gt)) < 4 * est.vio_err


def test_ib_output_zero_noise():
    cfg = ib.IbConfig(
        d=3, m=1, u=qmath.T_GATE, noise=ch.identity_channel(2),
        vio=ib.VacuumInterferenceOp(qmath.ID2),
    )
    outs = ib.ib_output(cfg, qmath.KET_PLUS)
    assert abs(outs[0].probability - 1.0) < 1e-12
    ideal = np.outer(qmath.T_GATE @ qmath.KET_PLUS, (qmath.T_GATE @ qmath.KET_PLUS).conj())
    assert np.max(np.abs(outs[0].rho.matrix - ideal)) < 1e-12


@pytest.mark.parametrize("d", [2, 3, 4])
def test_ib_output_probabilities_sum_and_psd(d):
    p0 = 0.8
    cfg = ib.IbConfig(
        d=d, m=1, u=qmath.T_GATE, noise=ch.dephasing(p0), vio=ib.vio_dephasing(p0)
    )
    rng = np.random.default_rng(3)
    outs = ib.ib_output(cfg, qmath.random_ket(2, rng))
    assert abs(sum(o.probability for o in outs) - 1.0) < 1e-9
    for o in outs:
        evals = np.linalg.eigvalsh(o.rho.matrix)
        assert evals.min() > -1e-9


def test_ib_diagonal_blocks_equal_incoherent():
    # keeping all outcomes and summing them reproduces the bare noisy map
    p0 = 0.8
    cfg = ib.IbConfig(
        d=3, m=1, u=qmath.T_GATE, noise=ch.dephasing(p0), vio=ib.vio_dephasing(p0)
    )
    rng = np.random.default_rng(4)
    psi = qmath.random_ket(2, rng)
    outs = ib.ib_output(cfg, psi)
    total = sum(o.rho.matrix for o in outs)
    direct = ch.apply_matrix(
        ch.dephasing(p0), qmath.T_GATE @ np.outer(psi, psi.conj()) @ qmath.dagger(qmath.T_GATE)
    )
    assert np.max(np.abs(total - direct)) < 1e-10


def test_ib_nonzero_outcomes_share_fidelity():
    p0 = 0.8
    cfg = ib.IbConfig(
        d=4, m=1, u=qmath.T_GATE, noise=ch.dephasing(p0), vio=ib.vio_dephasing(p0)
    )
    psi = qmath.bell_state(1)
    pad = np.eye(2, dtype=complex)
    wide = ib.IbConfig(
        d=4, m=2, u=qmath.kron(pad, qmath.T_GATE),
        noise=ch.KrausChannel([qmath.kron(pad, k) for k in ch.dephasing(p0).operators]),
        vio=ib.VacuumInterferenceOp(qmath.kron(pad, ib.vio_dephasing(p0).w)),
    )
    outs = ib.ib_output(wide, psi)
    from branchqem.metrics import cj_overlap

    fids = [cj_overlap(o.rho.normalize(), qmath.T_GATE, 1) for o in outs[1:]]
    assert max(fids) - min(fids) < 1e-10


def test_ib_sequence_single_gate_reduces():
    p0 = 0.8
    rng = np.random.default_rng(5)
    psi = qmath.random_ket(2, rng)
    cfg = ib.IbConfig(
        d=2, m=1, u=qmath.T_GATE, noise=ch.dephasing(p0), vio=ib.vio_dephasing(p0)
    )
    a = ib.ib_output(cfg, psi)
    b = ib.ib_sequence([(qmath.T_GATE, ch.dephasing(p0), ib.vio_dephasing(p0))], 2, psi, 1)
    for oa, ob in zip(a, b):
        assert np.max(np.abs(oa.rho.matrix - ob.rho.matrix)) < 1e-12


def test_ib_sequence_two_noiseless_gates():
    ident = ch.identity_channel(2)
    w = ib.VacuumInterferenceOp(qmath.ID2)
    outs = ib.ib_sequence(
        [(qmath.T_GATE, ident, w), (qmath.H, ident, w)], 2, qmath.KET0, 1
    )
    assert abs(outs[0].probability - 1.0) < 1e-12


def test_ib_sequence_dephasing_product_scaling():
    # two dephasing gates: the coherence block scales as sqrt(2 p0 - 1)
    p0 = 0.9
    psi = qmath.KET_PLUS
    gates = [(qmath.T_GATE, ch.dephasing(p0), ib.vio_dephasing(p0))] * 2
    outs = ib.ib_sequence(gates, 2, psi, 1)
    # compare off-diagonal part against a manual two-step construction
    u2 = qmath.T_GATE @ qmath.T_GATE
    evolved = u2 @ np.outer(psi, psi.conj()) @ qmath.dagger(u2)
    scale = (2 * p0 - 1) ** 0.5
    diag = np.outer(psi, psi.conj())
    for gate, noise, _ in gates:
        diag = gate @ diag @ qmath.dagger(gate)
        diag = ch.apply_matrix(noise, diag)
    expect0 = 0.5 * (diag + scale * evolved)
    assert np.max(np.abs(outs[0].rho.matrix - expect0)) < 1e-10


def test_run_ib_ratio_approaches_d():
    for d in (2, 3, 4):
        p0 = 0.999
        cfg = ib.IbConfig(
            d=d, m=1, u=qmath.T_GATE, noise=ch.dephasing(p0), vio=ib.vio_dephasing(p0)
        )
        rep = ib.run_ib(cfg)
        assert abs(rep.ratio - d) / d < 0.02


def test_run_ib_below_gb_reference():
    # the gate-based fully sensitive run detects more errors at equal p0
    for p0 in (0.8, 0.9, 0.99):
        cfg = ib.IbConfig(
            d=2, m=1, u=qmath.T_GATE, noise=ch.dephasing(p0), vio=ib.vio_dephasing(p0)
        )
        rep = ib.run_ib(cfg)
        gb_ratio = p0 * (2 - 1) + 1
        assert rep.ratio <= gb_ratio + 1e-9


def test_run_ib_completely_dephasing_no_advantage():
    cfg = ib.IbConfig(
        d=2, m=1, u=qmath.T_GATE, noise=ch.dephasing(0.5), vio=ib.vio_dephasing(0.5)
    )
    rep = ib.run_ib(cfg)
    assert abs(rep.f_coherent - rep.f_incoherent) < 1e-9
    assert abs(rep.ratio - 1.0) < 1e-9


def test_run_ib_deterministic_mode():
    p0 = 0.9
    cfg = ib.IbConfig(
        d=3, m=1, u=qmath.T_GATE, noise=ch.dephasing(p0),
        vio=ib.vio_dephasing(p0), mode="deterministic",
    )
    rep = ib.run_ib(cfg)
    assert abs(rep.success_probability - 1.0) < 1e-9
    assert rep.f_coherent <= 1.0


def test_tensor_vio():
    w = ib.vio_dephasing(0.9)
    w2 = ib.tensor_vio(w, 2)
    assert np.max(np.abs(w2.w - qmath.kron(w.w, w.w))) < 1e-12


def test_phase_model_matches_purified_reference():
    rng = np.random.default_rng(6)
    for _ in range(5):
        noise = ch.random_channel(1, 2, rng)
        phases = rng.uniform(-np.pi, np.pi, size=2)
        weights = rng.dirichlet(np.ones(2))
        w_op = ib.vio_from_phases(noise, weights, phases)
        env = np.sqrt(weights) * np.exp(1j * phases)
        psi = qmath.random_ket(2, rng)
        u = qmath.random_unitary(2, rng)
        d = 2
        ref = ib.purified_reference(d, u, noise, [env, env], psi)
        cfg = ib.IbConfig(d=d, m=1, u=u, noise=noise, vio=w_op)
        outs = ib.ib_output(cfg, psi)
        from branchqem.qmath import DensityMatrix, SubsystemShape, project

        ref_dm = DensityMatrix(ref, SubsystemShape([2, 2]), True)
        for el, ket in enumerate(gb.generalized_x_basis(d)):
            blk = project(ref_dm, ket, [0])
            assert np.max(np.abs(blk.matrix - outs[el].rho.matrix)) < 1e-10


def test_vio_norm_guard():
    with pytest.raises(ValueError):
        ib.VacuumInterferenceOp(2.0 * qmath.ID2)
