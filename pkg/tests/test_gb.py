import numpy as np
import pytest

from branchqem import channels as ch
from branchqem import gb, qmath
from branchqem.metrics import cj_overlap


def test_generalized_x_basis_d2():
    basis = gb.generalized_x_basis(2)
    assert np.allclose(basis[0], qmath.KET_PLUS)
    assert np.allclose(basis[1], qmath.KET_MINUS)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_generalized_x_basis_orthonormal(d):
    basis = gb.generalized_x_basis(d)
    g = np.array([[np.vdot(a, b) for b in basis] for a in basis])
    assert np.max(np.abs(g - np.eye(d))) < 1e-12
    assert np.allclose(basis[0], np.ones(d) / np.sqrt(d))


def test_cswap_control_zero_identity():
    u = gb.cswap_unitary(3, 1)
    block = u[: 8, : 8]
    assert np.allclose(block, np.eye(8))


def test_cswap_swap_action():
    u = gb.cswap_unitary(2, 1)
    rng = np.random.default_rng(0)
    psi, phi = qmath.random_ket(2, rng), qmath.random_ket(2, rng)
    ket1 = np.zeros(2)
    ket1[1] = 1.0
    state = qmath.kron(ket1, psi, phi)
    out = u @ state
    assert np.allclose(out, qmath.kron(ket1, phi, psi))


@pytest.mark.parametrize("d,m", [(2, 1), (3, 1), (2, 2)])
def test_cswap_self_inverse(d, m):
    u = gb.cswap_unitary(d, m)
    assert np.allclose(u @ u, np.eye(u.shape[0]))
    assert qmath.is_unitary(u)


def test_run_gb_zero_noise_designated_outcome():
    u = qmath.T_GATE
    cfg = gb.GbConfig(
        d=3, m=1, u=u, noise=ch.identity_channel(2),
        aux_state=qmath.KET0, aux_meas_state=u @ qmath.KET0,
    )
    outs = gb.run_gb(cfg, qmath.KET_PLUS)
    des = gb.designated_outcome(outs)
    assert abs(des.probability - 1.0) < 1e-9
    ideal = np.outer(u @ qmath.KET_PLUS, (u @ qmath.KET_PLUS).conj())
    assert np.max(np.abs(des.rho.normalize().matrix - ideal)) < 1e-9


def test_run_gb_outcome_completeness():
    rng = np.random.default_rng(1)
    for _ in range(5):
        d = int(rng.integers(2, 5))
        cfg = gb.GbConfig(
            d=d, m=1, u=qmath.random_unitary(2, rng),
            noise=ch.random_channel(1, int(rng.integers(1, 5)), rng),
            aux_state=qmath.random_ket(2, rng),
            aux_meas_state=qmath.random_ket(2, rng),
        )
        outs = gb.run_gb(cfg, qmath.random_ket(2, rng))
        assert gb.outcome_completeness_defect(outs) < 1e-9


def test_analytic_matches_brute_force():
    rng = np.random.default_rng(2)
    for _ in range(20):
        d = int(rng.integers(2, 5))
        noise = ch.random_channel(1, int(rng.integers(1, 5)), rng)
        u = qmath.random_unitary(2, rng)
        phi0 = qmath.random_ket(2, rng)
        phif = qmath.random_ket(2, rng)
        psi = qmath.random_ket(2, rng)
        cfg = gb.GbConfig(d=d, m=1, u=u, noise=noise,
                          aux_state=phi0, aux_meas_state=phif)
        des = gb.designated_outcome(gb.run_gb(cfg, psi))
        rho_a, prob_a = gb.analytic_rho_out(noise, u, phi0, phif, d, psi)
        assert np.max(np.abs(des.rho.matrix - rho_a.matrix)) < 1e-10
        assert abs(des.probability - prob_a) < 1e-10


def test_analytic_full_sensitivity_two_term_form():
    # fully sensitive auxiliary reduces the formula to its two-term shape
    p0, d = 0.9, 3
    noise = ch.depolarizing(p0)
    u = np.eye(2, dtype=complex)
    rng = np.random.default_rng(3)
    psi = qmath.random_ket(2, rng)
    # widened registers: Bell-pair auxiliary is fully sensitive
    wide_noise = ch.KrausChannel([qmath.kron(qmath.ID2, k) for k in noise.operators])
    bell = qmath.bell_state(1)
    rho, prob = gb.analytic_rho_out(
        wide_noise, np.eye(4, dtype=complex), bell, bell, d, qmath.kron(psi, psi)
    )
    vecs = [k @ qmath.kron(psi, psi) for k in wide_noise.operators]
    expected = (p0 ** (d - 1) / d) * sum(
        np.outer(v, v.conj()) for v in vecs[1:]
    ) + p0**d * np.outer(vecs[0], vecs[0].conj()) / p0
    assert np.max(np.abs(rho.matrix - expected)) < 1e-10


def test_analytic_large_d_limit():
    # fully sensitive: normalized output approaches the ideal image
    p0 = 0.9
    noise = ch.KrausChannel(
        [qmath.kron(qmath.ID2, k) for k in ch.depolarizing(p0).operators]
    )
    bell = qmath.bell_state(1)
    rho, prob = gb.analytic_rho_out(
        noise, np.eye(4, dtype=complex), bell, bell, 4000, bell
    )
    out = rho.normalize()
    assert np.max(np.abs(out.matrix - np.outer(bell, bell.conj()))) < 1e-3


def test_omega_params():
    u = np.eye(2, dtype=complex)
    deph = ch.dephasing(0.9)
    # |0> is a Z eigenstate: insensitive
    w1, w2 = gb.omega_params(deph, u, qmath.KET0, qmath.KET0)
    assert abs(w1) < 1e-9 and abs(w2 - 1.0) < 1e-9
    # |+> is fully sensitive to Z
    w1, w2 = gb.omega_params(deph, u, qmath.KET_PLUS, qmath.KET_PLUS)
    assert abs(w1 - 1.0) < 1e-9 and abs(w2 - 1.0) < 1e-9
    # Bell auxiliary: fully sensitive to any Pauli channel
    wide = ch.KrausChannel([qmath.kron(qmath.ID2, k) for k in ch.depolarizing(0.8).operators])
    bell = qmath.bell_state(1)
    w1, w2 = gb.omega_params(wide, np.eye(4, dtype=complex), bell, bell)
    assert abs(w1 - 1.0) < 1e-9 and abs(w2 - 1.0) < 1e-9


def test_omega_noiseless_signalled():
    with pytest.raises(ValueError):
        gb.omega_params(ch.identity_channel(2), qmath.ID2, qmath.KET0, qmath.KET0)


def test_depolarizing_bounds():
    assert gb.depolarizing_bounds(3, 2, 1.0) == (1.0, 1.0)
    p, f = gb.depolarizing_bounds(2, 1, 0.9)
    assert abs(p - 0.855) < 1e-12
    assert abs(f - 2 * 0.9 / 1.9) < 1e-12
    # d -> infinity: F -> 1, P -> p0^(m d)
    p_big, f_big = gb.depolarizing_bounds(200, 1, 0.99)
    assert f_big > 0.999
    assert abs(p_big - 0.99**200 * (1 + (1 / 0.99 - 1) / 200)) < 1e-12


@pytest.mark.parametrize("p0,d,m", [(0.8, 2, 1), (0.9, 3, 2), (0.97, 5, 2)])
def test_choi_probabilistic_matches_bounds(p0, d, m):
    # closed-form evaluation through the analytic output (exact at any d)
    u = np.eye(2**m, dtype=complex)
    noise = ch.tensor_channel(ch.depolarizing(p0), m)
    wide = ch.KrausChannel(
        [qmath.kron(np.eye(2**m, dtype=complex), k) for k in noise.operators]
    )
    bell = qmath.bell_state(m)
    rho, prob = gb.analytic_rho_out(
        wide, np.eye(4**m, dtype=complex), bell, bell, d, bell
    )
    p_exp, f_exp = gb.depolarizing_bounds(d, m, p0)
    assert abs(prob - p_exp) < 1e-9
    f = float(np.real(np.vdot(bell, rho.matrix @ bell)) / prob)
    assert abs(f - f_exp) < 1e-9


def test_brute_force_choi_run_small():
    p0 = 0.9
    cfg = gb.choi_config(d=2, m=1, u=qmath.T_GATE, noise=ch.depolarizing(p0))
    rep = gb.probabilistic_report(cfg)
    p_exp, f_exp = gb.depolarizing_bounds(2, 1, p0)
    assert abs(rep.success_probability - p_exp) < 1e-9
    assert abs(rep.f_coherent - f_exp) < 1e-9
    assert abs(rep.f_incoherent - p0) < 1e-9
    assert abs(rep.ratio - (p0 + 1)) < 1e-9


def test_chi_update_matches_depolarizing_bounds():
    for d in (2, 3, 5):
        for m in (1, 2):
            chi = ch.kraus_to_chi(ch.tensor_channel(ch.depolarizing(0.9), m))
            upd, prob = gb.chi_update_full_sensitivity(chi, d)
            p_exp, f_exp = gb.depolarizing_bounds(d, m, 0.9)
            assert abs(prob - p_exp) < 1e-12
            assert abs(np.real(upd.lam[0, 0]) - f_exp) < 1e-12


def test_chi_update_noiseless_channel():
    # lambda_00 = 1 (no noise): the update leaves the map unchanged at P = 1
    chi = ch.kraus_to_chi(ch.identity_channel(2))
    upd, prob = gb.chi_update_full_sensitivity(chi, 3)
    assert abs(prob - 1.0) < 1e-12
    assert np.max(np.abs(upd.lam - chi.lam)) < 1e-12


def test_chi_update_advantage_random_channels():
    rng = np.random.default_rng(4)
    checked = 0
    while checked < 100:
        chi0 = ch.kraus_to_chi(ch.random_channel(1, 4, rng))
        t = rng.uniform(0.5, 0.99)
        chi_id = np.zeros_like(chi0.lam)
        chi_id[0, 0] = 1.0
        lam = (1 - t) * chi0.lam + t * chi_id
        chi = ch.ProcessMatrix(1, lam)
        l00 = np.real(chi.lam[0, 0])
        if not 0.5 < l00 < 1.0:
            continue
        checked += 1
        prev = None
        for d in (2, 3, 4, 5):
            upd, _ = gb.chi_update_full_sensitivity(chi, d)
            val = np.real(upd.lam[0, 0])
            assert val > l00
            if prev is not None:
                assert val >= prev - 1e-12
            prev = val


def test_chi_update_consistent_with_analytic_channel():
    # full-sensitivity chi update equals the channel induced by the
    # closed-form output under Bell-pair conditions
    p0, d = 0.85, 3
    noise = ch.depolarizing(p0)
    chi = ch.kraus_to_chi(noise)
    upd, prob = gb.chi_update_full_sensitivity(chi, d)
    wide = ch.KrausChannel([qmath.kron(qmath.ID2, k) for k in noise.operators])
    bell = qmath.bell_state(1)
    rho, p2 = gb.analytic_rho_out(wide, np.eye(4, dtype=complex), bell, bell, d, bell)
    assert abs(prob - p2) < 1e-12
    # Choi matrix of the updated chi acting on the result half
    out = rho.normalize().matrix
    paulis = ch.pauli_basis(1)
    acc = np.zeros((4, 4), dtype=complex)
    phi = np.outer(bell, bell.conj())
    for i, si in enumerate(paulis):
        for j, sj in enumerate(paulis):
            full_i = qmath.kron(qmath.ID2, si)
            full_j = qmath.kron(qmath.ID2, sj)
            acc += upd.lam[i, j] * (full_i @ phi @ full_j.conj().T)
    assert np.max(np.abs(acc - out)) < 1e-9


def test_quasi_deterministic_keep_all_probability_one():
    cfg = gb.choi_config(
        d=2, m=1, u=qmath.T_GATE, noise=ch.dephasing(0.9),
        mode="deterministic", keep_rule=("keep_all",),
    )
    outcomes = gb.run_gb_choi(cfg)
    kept, report = gb.quasi_deterministic(cfg, outcomes)
    assert abs(report.success_probability - 1.0) < 1e-9
    assert report.f_coherent <= 1.0


def test_quasi_deterministic_zero_noise():
    cfg = gb.choi_config(
        d=2, m=1, u=qmath.T_GATE, noise=ch.identity_channel(2),
        mode="deterministic",
    )
    outcomes = gb.run_gb_choi(cfg)
    kept, report = gb.quasi_deterministic(cfg, outcomes)
    assert abs(report.f_coherent - 1.0) < 1e-9
    assert abs(report.success_probability - 1.0) < 1e-9


def test_quasi_deterministic_T_drop_worst_advantage():
    # drop-worst post-processing: success probability above the
    # probabilistic run and an advantage over the incoherent case
    for p0 in (0.9, 0.95, 0.99):
        cfg = gb.choi_config(
            d=2, m=1, u=qmath.T_GATE, noise=ch.dephasing(p0),
            mode="quasi_deterministic", keep_rule=("drop_worst", 1),
        )
        outcomes = gb.run_gb_choi(cfg)
        kept, report = gb.quasi_deterministic(cfg, outcomes)
        prob_rep = gb.probabilistic_report(cfg)
        assert report.success_probability >= prob_rep.success_probability - 1e-9
        assert report.ratio > 1.0


def test_threshold_keep_rule():
    cfg = gb.choi_config(
        d=2, m=1, u=qmath.T_GATE, noise=ch.dephasing(0.9),
        mode="quasi_deterministic", keep_rule=("threshold", 0.99),
    )
    outcomes = gb.run_gb_choi(cfg)
    kept, report = gb.quasi_deterministic(cfg, outcomes)
    assert report.success_probability >= 0.99 - 1e-9


def test_noisy_cswap_ideal_limit():
    p0 = 0.9
    clean = gb.choi_config(d=2, m=1, u=qmath.T_GATE, noise=ch.depolarizing(p0))
    noisy = gb.choi_config(
        d=2, m=1, u=qmath.T_GATE, noise=ch.depolarizing(p0), cswap_noise=1.0
    )
    rep_a = gb.probabilistic_report(clean)
    rep_b = gb.probabilistic_report(noisy)
    assert abs(rep_a.f_coherent - rep_b.f_coherent) < 1e-9
    assert abs(rep_a.success_probability - rep_b.success_probability) < 1e-9


def test_noisy_cswap_requires_d2():
    with pytest.raises(ValueError):
        gb.choi_config(d=3, m=1, u=qmath.T_GATE, noise=ch.dephasing(0.9), cswap_noise=0.99)


def test_noisy_cswap_degrades_fidelity():
    p0 = 0.99
    clean = gb.probabilistic_report(
        gb.choi_config(d=2, m=1, u=qmath.T_GATE, noise=ch.depolarizing(p0))
    )
    noisy = gb.probabilistic_report(
        gb.choi_config(
            d=2, m=1, u=qmath.T_GATE, noise=ch.depolarizing(p0), cswap_noise=0.99
        )
    )
    assert noisy.f_coherent < clean.f_coherent


def test_layered_circuit_ideal_unitary():
    u, noise = gb.layered_circuit(1, 1.0)
    expected = qmath.kron(qmath.T_GATE, qmath.T_GATE) @ qmath.CNOT
    assert np.max(np.abs(u - expected)) < 1e-12
    assert len(noise.operators) == 1


def test_layered_circuit_matches_direct_composition():
    # effective channel in the output frame reproduces gate-by-gate noise
    rng = np.random.default_rng(5)
    p0 = 0.95
    n_layers = 2
    u, eff = gb.layered_circuit(n_layers, p0)
    psi = qmath.random_ket(4, rng)
    out = ch.apply_matrix(eff, u @ np.outer(psi, psi.conj()) @ u.conj().T)
    # direct: alternate gates and noise
    rho = np.outer(psi, psi.conj())
    t2 = qmath.kron(qmath.T_GATE, qmath.T_GATE)
    dep1 = ch.depolarizing(p0)
    dep2 = ch.tensor_channel(dep1, 2)
    dep_q0 = ch.KrausChannel([qmath.kron(k, qmath.ID2) for k in dep1.operators])
    dep_q1 = ch.KrausChannel([qmath.kron(qmath.ID2, k) for k in dep1.operators])
    for _ in range(n_layers):
        rho = qmath.CNOT @ rho @ qmath.CNOT.conj().T
        rho = ch.apply_matrix(dep2, rho)
        rho = t2 @ rho @ t2.conj().T
        rho = ch.apply_matrix(dep_q0, rho)
        rho = ch.apply_matrix(dep_q1, rho)
    assert np.max(np.abs(out - rho)) < 1e-10


def test_layered_incoherent_fidelity_decreases():
    prev = 1.0
    for n in (1, 2, 3, 4):
        u, eff = gb.layered_circuit(n, 0.99)
        f0 = gb.incoherent_cj_fidelity(u, eff, 2)
        assert f0 < prev + 1e-12
        prev = f0


def test_correlated_dephasing_channel_is_tensor_dephasing():
    c = gb.correlated_dephasing_channel(0.9)
    c.validate()
    t = ch.tensor_channel(ch.dephasing(0.9), 2)
    assert ch.channel_distance(c, t) < 1e-12
