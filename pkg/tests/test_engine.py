import numpy as np
import pytest

from realrb.channels import Channel, depolarizing, noise_model, twirl_analytic
from realrb.engine import (
    DATASET_LABELS,
    DecayDataset,
    DecayRow,
    ExperimentConfig,
    SimulationError,
    abc_from_spam,
    default_lengths,
    generate_sequence,
    measurement_effects,
    prepared_states,
    run_campaign,
    simulate_sequence,
    spam_arrays,
)
from tests.test_clifford import conjugation_holds

KET0 = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
Y_PLUS = np.array([[0.5, -0.5j], [0.5j, 0.5]], dtype=complex)


def make_config(**kw):
    base = dict(
        n=1,
        noise={"kind": "depolarizing", "p": 0.9},
        seed=1234,
        lengths=(1, 2, 4, 8),
        sequences_per_length=5,
        shots=0,
    )
    base.update(kw)
    return ExperimentConfig(**base)


# ---------------------------------------------------------------------------
# sequences
# ---------------------------------------------------------------------------


def test_length_one_sequence_is_element_and_inverse():
    rng = np.random.default_rng(0)
    seq = generate_sequence(1, 2, rng)
    assert len(seq) == 2
    assert np.linalg.norm(seq[1].dense @ seq[0].dense - np.eye(4)) < 1e-10


@pytest.mark.parametrize("n,m", [(1, 8), (2, 8), (2, 33), (3, 5)])
def test_sequences_compose_to_identity(n, m):
    rng = np.random.default_rng(n * 100 + m)
    seq = generate_sequence(m, n, rng)
    total = np.eye(1 << n)
    for el in seq:
        total = el.dense @ total
    assert np.linalg.norm(total - np.eye(1 << n)) < 1e-8


def test_inversion_element_is_valid_clifford():
    rng = np.random.default_rng(5)
    for n in (1, 2):
        seq = generate_sequence(6, n, rng)
        assert conjugation_holds(seq[-1])


def test_generate_sequence_rejects_m0():
    with pytest.raises(ValueError):
        generate_sequence(0, 1, np.random.default_rng(0))


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------


def test_noiseless_sequence_gives_overlap():
    rng = np.random.default_rng(7)
    effects = measurement_effects(1)
    for _ in range(5):
        seq = generate_sequence(4, 1, rng)
        p = simulate_sequence(seq, None, KET0, effects[("plus", "plus")])
        assert abs(p - np.trace(effects[("plus", "plus")] @ KET0).real) < 1e-10


def test_effect_identity_gives_unity():
    rng = np.random.default_rng(8)
    noise = noise_model({"kind": "amplitude_damping", "gamma": 0.3}, 1)
    seq = generate_sequence(5, 1, rng)
    assert abs(simulate_sequence(seq, noise, KET0, np.eye(2)) - 1.0) < 1e-10


def test_depolarizing_survival_is_exact_per_sequence():
    # global depolarizing commutes with every conjugation, so each sequence
    # gives exactly 1/2 + p^m / 2 with no sequence-to-sequence spread
    p = 0.9
    noise = depolarizing(p, 2)
    rng = np.random.default_rng(9)
    for m in (1, 3, 7):
        for _ in range(3):
            seq = generate_sequence(m, 1, rng)
            val = simulate_sequence(seq, noise, KET0, KET0)
            assert abs(val - (0.5 + p**m / 2)) < 1e-12


def test_shot_sampling_is_binomial_and_seeded():
    noise = depolarizing(0.9, 2)
    seq = generate_sequence(2, 1, np.random.default_rng(10))
    a = simulate_sequence(seq, noise, KET0, KET0, shots=1000, rng=np.random.default_rng(3))
    b = simulate_sequence(seq, noise, KET0, KET0, shots=1000, rng=np.random.default_rng(3))
    assert a == b
    assert 0.0 <= a <= 1.0


def test_broken_channel_detected():
    bad = Channel(2.0 * np.eye(4))
    seq = generate_sequence(1, 1, np.random.default_rng(11))
    with pytest.raises(SimulationError):
        simulate_sequence(seq, bad, KET0, np.eye(2))


# ---------------------------------------------------------------------------
# decay offsets
# ---------------------------------------------------------------------------


def test_abc_reference_points():
    assert abc_from_spam(KET0, KET0) == pytest.approx((0.5, 0.5, 0.0), abs=1e-12)
    assert abc_from_spam(Y_PLUS, Y_PLUS) == pytest.approx((0.5, 0.0, 0.5), abs=1e-12)
    assert abc_from_spam(KET0, np.eye(2)) == pytest.approx((1.0, 0.0, 0.0), abs=1e-12)


def test_default_spam_offsets():
    # plus rows decay only in b, minus rows only in c, with unit contrast
    for n in (1, 2):
        preps = prepared_states(n)
        effects = measurement_effects(n)
        a, b, c = abc_from_spam(preps["plus"], effects[("plus", "plus")])
        assert (a, b, c) == pytest.approx((0.5, 0.5, 0.0), abs=1e-12)
        a, b, c = abc_from_spam(preps["minus"], effects[("minus", "plus")])
        assert (a, b, c) == pytest.approx((0.5, 0.0, 0.5), abs=1e-12)
        a, b, c = abc_from_spam(preps["minus"], effects[("minus", "minus")])
        assert (a, b, c) == pytest.approx((0.5, 0.0, -0.5), abs=1e-12)


def test_default_lengths_doubling():
    assert default_lengths(256) == (4, 8, 16, 32, 64, 128, 256)
    assert default_lengths(4) == (4,)
    with pytest.raises(ValueError):
        default_lengths(2)


# ---------------------------------------------------------------------------
# campaigns
# ---------------------------------------------------------------------------


def test_campaign_depolarizing_exact_values():
    p = 0.9
    config = make_config(noise={"kind": "depolarizing", "p": p})
    data = run_campaign(config)
    assert len(data.rows) == len(config.lengths) * 4
    rows = data.row_map()
    for m in config.lengths:
        assert rows[(m, "plus", "plus")].mean == pytest.approx(0.5 + p**m / 2, abs=1e-12)
        assert rows[(m, "plus", "minus")].mean == pytest.approx(0.5 - p**m / 2, abs=1e-12)
        assert rows[(m, "minus", "plus")].mean == pytest.approx(0.5 + p**m / 2, abs=1e-12)
        assert rows[(m, "minus", "minus")].mean == pytest.approx(0.5 - p**m / 2, abs=1e-12)
        assert rows[(m, "plus", "plus")].stderr < 1e-12


def test_campaign_is_deterministic_and_thread_invariant():
    config = make_config(shots=100)
    a = run_campaign(config)
    b = run_campaign(config)
    c = run_campaign(config, threads=4)
    assert a == b == c


def test_campaign_means_in_unit_interval():
    config = make_config(noise={"kind": "amplitude_damping", "gamma": 0.1}, shots=200)
    data = run_campaign(config)
    for r in data.rows:
        assert 0.0 <= r.mean <= 1.0
        assert r.stderr >= 0.0


def test_campaign_matches_twirled_decay_model():
    # expected-decay invariant: exact-expectation means agree with
    # A + b^m B + c^m C at the analytic twirl coordinates
    noise_spec = {
        "kind": "composite",
        "factors": [
            {"kind": "coherent", "axis": "Y", "epsilon": 0.05},
            {"kind": "depolarizing", "p": 0.995},
        ],
    }
    config = make_config(
        noise=noise_spec, lengths=(4, 8, 16, 32), sequences_per_length=50, seed=20260810
    )
    coeffs = twirl_analytic(noise_model(noise_spec, config.n))
    preps, effects = spam_arrays(config)
    data = run_campaign(config)
    for row in data.rows:
        a, b, c = abc_from_spam(preps[row.prep], effects[(row.prep, row.meas)])
        model = a + coeffs.b**row.m * b + coeffs.c**row.m * c
        assert abs(row.mean - model) <= 3.0 * max(row.stderr, 1e-12), (row, model)


def test_spam_error_changes_offsets():
    # amplitude damping fixes |0><0|, so the shift shows up on the
    # antisymmetric preparation and on the measurement side
    clean = make_config()
    noisy = make_config(
        prep_error={"kind": "amplitude_damping", "gamma": 0.05},
        meas_error={"kind": "amplitude_damping", "gamma": 0.05},
    )
    p_clean, e_clean = spam_arrays(clean)
    p_noisy, e_noisy = spam_arrays(noisy)
    _, _, c0 = abc_from_spam(p_clean["minus"], e_clean[("minus", "plus")])
    _, _, c1 = abc_from_spam(p_noisy["minus"], e_clean[("minus", "plus")])
    assert abs(c1 - c0) > 1e-3
    a0, b0, _ = abc_from_spam(p_clean["plus"], e_clean[("plus", "plus")])
    a1, b1, _ = abc_from_spam(p_clean["plus"], e_noisy[("plus", "plus")])
    assert abs(a1 - a0) > 1e-3 or abs(b1 - b0) > 1e-3


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------


def test_csv_roundtrip():
    data = run_campaign(make_config())
    text = data.to_csv()
    assert text.splitlines()[0] == "m,prep,meas,mean,stderr,M,shots"
    back = DecayDataset.from_csv(text, config=data.config)
    assert back == data


def test_json_roundtrip():
    data = run_campaign(make_config(shots=50))
    back = DecayDataset.from_json(data.to_json())
    assert back == data
    assert back.config["seed"] == 1234


def test_csv_header_mismatch_rejected():
    with pytest.raises(ValueError):
        DecayDataset.from_csv("a,b,c\n1,2,3\n")


def test_dataset_series_sorted():
    data = run_campaign(make_config())
    series = data.series("plus", "plus")
    assert [r.m for r in series] == sorted(r.m for r in series)


def test_config_validation():
    with pytest.raises(ValueError):
        make_config(n=0)
    with pytest.raises(ValueError):
        make_config(lengths=(0, 4))
    with pytest.raises(ValueError):
        make_config(shots=-1)
    with pytest.raises(ValueError):
        make_config(sequences_per_length=1)
