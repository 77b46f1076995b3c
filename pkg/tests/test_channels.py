import numpy as np
import pytest

from realrb.channels import (
    Channel,
    amplitude_damping,
    avg_fidelity_from_bc,
    check_density_matrix,
    coherent,
    dephasing,
    depolarizing,
    flip_operator,
    haar_fidelity_oracle,
    haar_orthogonal,
    haar_unitary,
    max_entangled_projector,
    noise_model,
    projectors,
    random_cptp_channel,
    rebit_fidelity_from_b,
    twirl_analytic,
    twirl_average,
    twirled_channel_from_coefficients,
    twirled_power_apply,
    unvec,
    vec,
)
from realrb.clifford import enumerate_closure, sample_real_clifford

Z = np.array([[1.0, 0.0], [0.0, -1.0]])
H = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
KET0 = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)


def clifford_c1():
    return enumerate_closure([Z, H], cap=32)


def transposition_channel(d):
    # vec(rho^T) reshuffles exactly like the flip operator
    return Channel(flip_operator(d))


# ---------------------------------------------------------------------------
# vectorization and channel basics
# ---------------------------------------------------------------------------


def test_vec_is_column_stacking():
    a = np.array([[1, 3], [2, 4]])
    assert np.array_equal(vec(a), [1, 2, 3, 4])
    assert np.array_equal(unvec(vec(a)), a)


def test_vec_abc_identity():
    rng = np.random.default_rng(0)
    a, x, b = (rng.standard_normal((3, 3)) for _ in range(3))
    assert np.allclose(vec(a @ x @ b), np.kron(b.T, a) @ vec(x))


def test_kraus_superop_agree_on_states():
    rng = np.random.default_rng(1)
    chan = random_cptp_channel(3, 2, rng)
    rho = random_cptp_channel(3, 3, rng).choi()[:3, :3]
    rho = rho + rho.conj().T + 3 * np.eye(3)
    rho /= np.trace(rho)
    direct = sum(k @ rho @ k.conj().T for k in chan.kraus_operators())
    assert np.allclose(chan.apply(rho), direct, atol=1e-12)


def test_kraus_recovery_from_superop_only():
    rng = np.random.default_rng(2)
    chan = random_cptp_channel(2, 3, rng)
    rebuilt = Channel.from_kraus(Channel(chan.superop).kraus_operators())
    assert np.allclose(rebuilt.superop, chan.superop, atol=1e-10)


def test_adjoint_pairing():
    rng = np.random.default_rng(3)
    chan = random_cptp_channel(2, 2, rng)
    rho = np.array([[0.7, 0.1j], [-0.1j, 0.3]])
    e = np.array([[0.9, 0.2], [0.2, 0.4]])
    lhs = np.trace(e @ chan.apply(rho))
    rhs = np.trace(chan.apply_adjoint(e) @ rho)
    assert abs(lhs - rhs) < 1e-12


def test_composition_and_tensor():
    rng = np.random.default_rng(4)
    a = random_cptp_channel(2, 2, rng)
    b = random_cptp_channel(2, 2, rng)
    rho = np.array([[0.6, 0.2], [0.2, 0.4]], dtype=complex)
    assert np.allclose((a @ b).apply(rho), a.apply(b.apply(rho)), atol=1e-12)
    u = haar_orthogonal(2, rng)
    v = haar_orthogonal(2, rng)
    prod = Channel.from_unitary(u).tensor(Channel.from_unitary(v))
    assert np.allclose(prod.superop, Channel.from_unitary(np.kron(u, v)).superop, atol=1e-12)


def test_choi_of_identity_is_max_entangled():
    assert np.allclose(Channel.identity(3).choi(), max_entangled_projector(3), atol=1e-14)


def test_choi_of_fully_depolarizing():
    d = 4
    assert np.allclose(depolarizing(0.0, d).choi(), np.eye(d * d) / d**2, atol=1e-12)


def test_choi_of_transposition_elementwise_oracle():
    # independent oracle: assemble (id (x) transpose) of the entangled state
    # entry by entry and compare against both F/d and the channel's Choi
    for d in (2, 3):
        eij = lambda i, j: np.eye(d)[:, [i]] @ np.eye(d)[[j], :]
        tau = sum(
            np.kron(eij(i, j), eij(i, j).T) for i in range(d) for j in range(d)
        ) / d
        assert np.allclose(tau, flip_operator(d) / d, atol=1e-14)
        assert np.allclose(transposition_channel(d).choi(), tau, atol=1e-14)


def test_choi_partial_trace_and_cptp_flags():
    rng = np.random.default_rng(5)
    for d in (2, 4):
        chan = random_cptp_channel(d, 3, rng)
        assert chan.is_cptp()
        tau = chan.choi()
        assert abs(np.trace(tau) - 1.0) < 1e-10
        reduced = np.einsum("abcb->ac", tau.reshape(d, d, d, d))
        assert np.allclose(reduced, np.eye(d) / d, atol=1e-10)
    assert not transposition_channel(2).is_cptp()


def test_check_density_matrix():
    check_density_matrix(np.eye(2) / 2)
    with pytest.raises(ValueError):
        check_density_matrix(np.eye(2))
    with pytest.raises(ValueError):
        check_density_matrix(np.array([[1.5, 0], [0, -0.5]]))


# ---------------------------------------------------------------------------
# projectors
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("d", [2, 3, 4])
def test_projector_algebra(d):
    p0, p1, p2 = projectors(d)
    assert np.allclose(p0 + p1 + p2, np.eye(d * d), atol=1e-14)
    assert abs(np.trace(p0) - 1) < 1e-12
    assert abs(np.trace(p1) - d * (d - 1) / 2) < 1e-12
    assert abs(np.trace(p2) - (d * (d + 1) / 2 - 1)) < 1e-12
    for i, pi in enumerate((p0, p1, p2)):
        for j, pj in enumerate((p0, p1, p2)):
            expected = pi if i == j else np.zeros_like(pi)
            assert np.max(np.abs(pi @ pj - expected)) < 1e-12


# ---------------------------------------------------------------------------
# analytic twirl
# ---------------------------------------------------------------------------


def test_twirl_identity_channel():
    coeffs = twirl_analytic(Channel.identity(2))
    assert np.allclose([coeffs.a, coeffs.b, coeffs.c], [1.0, 1.0, 1.0], atol=1e-12)


@pytest.mark.parametrize("d,p", [(2, 0.9), (4, 0.7)])
def test_twirl_depolarizing(d, p):
    coeffs = twirl_analytic(depolarizing(p, d))
    assert np.allclose([coeffs.a, coeffs.b, coeffs.c], [1.0, p, p], atol=1e-12)


def test_twirl_transposition():
    coeffs = twirl_analytic(transposition_channel(2))
    assert np.allclose([coeffs.a, coeffs.b, coeffs.c], [1.0, 1.0, -1.0], atol=1e-12)


def test_twirl_coordinates_consistency():
    rng = np.random.default_rng(6)
    for d in (2, 4):
        coeffs = twirl_analytic(random_cptp_channel(d, 2, rng))
        assert abs(coeffs.a - 1.0) < 1e-9  # trace preserving
        assert abs(coeffs.a - (coeffs.alpha + coeffs.beta + coeffs.gamma)) < 1e-12
        assert abs(coeffs.b - (coeffs.alpha - coeffs.gamma / (d - 1))) < 1e-12
        assert abs(coeffs.c - (coeffs.alpha + coeffs.gamma / (d - 1))) < 1e-12


def test_coherent_rotation_twirl_closed_form():
    # conjugation by exp(-i eps Y) has twirl coordinates (1, cos 2eps, 1)
    eps = 0.3
    coeffs = twirl_analytic(coherent("Y", eps))
    assert np.allclose([coeffs.a, coeffs.b, coeffs.c], [1.0, np.cos(2 * eps), 1.0], atol=1e-12)


def test_coherent_after_depolarizing_splits_b_and_c():
    chan = coherent("Y", 0.1) @ depolarizing(0.95, 2)
    coeffs = twirl_analytic(chan)
    assert abs(coeffs.b - coeffs.c) > 1e-3


# ---------------------------------------------------------------------------
# empirical twirl
# ---------------------------------------------------------------------------


def test_group_average_matches_analytic_twirl():
    rng = np.random.default_rng(7)
    group = clifford_c1()
    for _ in range(5):
        chan = random_cptp_channel(2, 2, rng)
        averaged = twirl_average(chan, group)
        analytic = twirled_channel_from_coefficients(twirl_analytic(chan))
        assert np.linalg.norm(averaged.superop - analytic.superop) < 1e-10


def test_twirl_fixes_identity_channel():
    averaged = twirl_average(Channel.identity(2), clifford_c1())
    assert np.linalg.norm(averaged.superop - np.eye(4)) < 1e-12


def test_twirl_idempotent_and_fixes_commutant():
    rng = np.random.default_rng(8)
    group = clifford_c1()
    chan = random_cptp_channel(2, 2, rng)
    once = twirl_average(chan, group)
    twice = twirl_average(once, group)
    assert np.linalg.norm(twice.superop - once.superop) < 1e-10
    analytic = twirled_channel_from_coefficients(twirl_analytic(chan))
    refixed = twirl_average(analytic, group)
    assert np.linalg.norm(refixed.superop - analytic.superop) < 1e-10


def test_choi_twirl_equals_channel_twirl():
    rng = np.random.default_rng(9)
    for n in (1, 2):
        d = 1 << n
        elems = [sample_real_clifford(n, rng) for _ in range(6)]
        chan = random_cptp_channel(d, 2, rng)
        tau = chan.choi()
        tau_avg = np.zeros_like(tau)
        for el in elems:
            w = np.kron(el.dense, el.dense)
            tau_avg += w.T @ tau @ w
        tau_avg /= len(elems)
        assert np.linalg.norm(twirl_average(chan, elems).choi() - tau_avg) < 1e-10


def test_monte_carlo_twirl_converges():
    rng = np.random.default_rng(10)
    chan = random_cptp_channel(4, 2, rng)
    elems = [sample_real_clifford(2, rng) for _ in range(2000)]
    averaged = twirl_average(chan, elems)
    analytic = twirled_channel_from_coefficients(twirl_analytic(chan))
    assert np.linalg.norm(averaged.superop - analytic.superop) < 0.15


# ---------------------------------------------------------------------------
# twirled powers
# ---------------------------------------------------------------------------


def test_twirled_power_m0_and_m1():
    rng = np.random.default_rng(11)
    coeffs = twirl_analytic(random_cptp_channel(2, 2, rng))
    rho = np.array([[0.7, 0.2 + 0.1j], [0.2 - 0.1j, 0.3]])
    assert np.allclose(twirled_power_apply(coeffs, 0, rho), rho, atol=1e-12)
    once = twirled_channel_from_coefficients(coeffs).apply(rho)
    assert np.allclose(twirled_power_apply(coeffs, 1, rho), once, atol=1e-12)


def test_twirled_power_depolarizing_scalar_oracle():
    p = 0.9
    coeffs = twirl_analytic(depolarizing(p, 2))
    out = twirled_power_apply(coeffs, 3, KET0)
    assert np.allclose(out, p**3 * KET0 + (1 - p**3) * np.eye(2) / 2, atol=1e-12)


# ---------------------------------------------------------------------------
# noise zoo
# ---------------------------------------------------------------------------


def test_depolarizing_p1_is_identity():
    assert np.allclose(depolarizing(1.0, 4).superop, np.eye(16), atol=1e-12)


@pytest.mark.parametrize("gamma", [0.0, 0.02, 0.5, 1.0])
def test_amplitude_damping_cptp(gamma):
    for n in (1, 2):
        assert amplitude_damping(gamma, n).is_cptp()


def test_dephasing_cptp_and_action():
    chan = dephasing(0.4, 2)
    assert chan.is_cptp()
    rho = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
    out = chan.apply(rho)
    assert np.allclose(np.diag(out), [0.5, 0.5])
    assert abs(out[0, 1] - 0.3) < 1e-12


def test_noise_model_dispatch_and_ranges():
    spec = {
        "kind": "composite",
        "factors": [
            {"kind": "coherent", "axis": "Y", "epsilon": 0.05},
            {"kind": "depolarizing", "p": 0.995},
        ],
    }
    chan = noise_model(spec, 1)
    direct = coherent("Y", 0.05) @ depolarizing(0.995, 2)
    assert np.allclose(chan.superop, direct.superop, atol=1e-12)
    assert chan.is_cptp()
    with pytest.raises(ValueError):
        noise_model({"kind": "depolarizing", "p": 1.5}, 1)
    with pytest.raises(ValueError):
        noise_model({"kind": "nonsense"}, 1)


# ---------------------------------------------------------------------------
# fidelities
# ---------------------------------------------------------------------------


def test_fidelity_formulas_trivial_points():
    for d in (2, 4, 8):
        assert abs(avg_fidelity_from_bc(1.0, 1.0, d) - 1.0) < 1e-14
        assert abs(rebit_fidelity_from_b(1.0, d) - 1.0) < 1e-14
    p = 0.93
    assert abs(avg_fidelity_from_bc(p, p, 2) - (1 + p) / 2) < 1e-14
    assert abs(rebit_fidelity_from_b(p, 2) - (1 + p) / 2) < 1e-14


def test_haar_samples_are_orthogonal_unitary_with_right_moments():
    rng = np.random.default_rng(12)
    o = haar_orthogonal(3, rng, size=4000)
    assert np.allclose(o @ o.transpose(0, 2, 1), np.eye(3), atol=1e-10)
    assert abs(o.mean()) < 0.02
    assert abs((o**2).mean() - 1 / 3) < 0.02
    u = haar_unitary(3, rng, size=4000)
    assert np.allclose(u @ u.conj().transpose(0, 2, 1), np.eye(3), atol=1e-10)
    assert abs((np.abs(u) ** 2).mean() - 1 / 3) < 0.02


def test_haar_oracle_identity_channel():
    rng = np.random.default_rng(13)
    est, se = haar_fidelity_oracle(Channel.identity(2), "unitary", 500, rng)
    assert abs(est - 1.0) < 1e-12 and se < 1e-12


def test_haar_oracle_matches_formulas():
    rng = np.random.default_rng(14)
    p = 0.9
    chan = depolarizing(p, 2)
    est, se = haar_fidelity_oracle(chan, "unitary", 20_000, rng)
    assert abs(est - (1 + p) / 2) < 3 * se
    coeffs = twirl_analytic(dephasing(0.3, 2))
    est, se = haar_fidelity_oracle(dephasing(0.3, 2), "orthogonal", 20_000, rng)
    assert abs(est - rebit_fidelity_from_b(coeffs.b, 2)) < 3 * se
