import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pseudoherm.errors import (
    DimensionMismatch,
    IncompletePovm,
    InconsistentData,
    InvalidPovm,
    NotLocalPovm,
    SingularFrame,
    ValidationError,
)
from pseudoherm.ensembles import random_density, random_metric_matrix, random_unitary
from pseudoherm.metric import Metric, MetricState, expectation
from pseudoherm.tomography import (
    OUTCOMES,
    SternGerlachConfig,
    g_hs_inner,
    joint_probabilities,
    pauli_expectations_from_records,
    pauli_frame,
    pauli_settings,
    read_dataset,
    reconstruct,
    reconstruct_from_records,
    rotation_unitary,
    sampling_superoperator,
    sigma_dot,
    simulate_dataset,
    stern_gerlach_probabilities,
    trace_distance,
    verify_no_signalling,
    write_dataset,
)

from conftest import BELL, CNOT, I2, SX, SY, SZ

seeds = st.integers(0, 2**32 - 1)
BELL_RHO = np.outer(BELL, BELL.conj())


def test_pauli_frame_single_qubit_identity_metric():
    f = pauli_frame(1)
    for E, P in zip(f.elements, (I2, SX, SY, SZ)):
        np.testing.assert_array_equal(E, P)
    np.testing.assert_allclose(f.weights, [0.25] * 4)


def test_deformed_frame_is_g_orthogonal():
    m = Metric(np.diag([4.0, 1.0]))
    f = pauli_frame(1, m)
    for i, j in itertools.product(range(4), repeat=2):
        expected = 2.0 if i == j else 0.0
        assert abs(g_hs_inner(f.elements[i], f.elements[j], m) - expected) < 1e-12
    np.testing.assert_allclose(f.elements[1], m.eta_inv @ SX @ m.eta)


def test_two_qubit_frame_contents():
    f = pauli_frame(2)
    assert len(f.elements) == 16
    assert f.labels[0] == "II"
    lookup = dict(zip(f.labels, f.elements))
    np.testing.assert_array_equal(lookup["XZ"], np.kron(SX, SZ))
    np.testing.assert_array_equal(lookup["IY"], np.kron(I2, SY))
    np.testing.assert_array_equal(lookup["ZI"], np.kron(SZ, I2))


def test_pauli_frame_dimension_check():
    with pytest.raises(DimensionMismatch):
        pauli_frame(2, Metric.identity(2))


@given(seeds, st.sampled_from([1, 2]))
def test_tightness_transport(seed, n):
    m = Metric(random_metric_matrix(2**n, seed))
    f = pauli_frame(n, m)
    W = sampling_superoperator(f)
    assert np.max(np.abs(W - np.eye(4**n))) <= 1e-10
    assert f.conjugation_residual <= 1e-10


def test_missing_sigma_z_is_singular():
    f = pauli_frame(1, labels=["I", "X", "Y"])
    assert f.condition_number == np.inf
    assert np.linalg.matrix_rank(f.superoperator) == 3
    with pytest.raises(SingularFrame):
        reconstruct([1, 0, 0], f)


def test_reconstruct_exact_examples():
    f = pauli_frame(1)
    rho = np.diag([1.0, 0.0])
    rec = reconstruct([1, 0, 0, 1], f)
    np.testing.assert_allclose(rec.state.rho_bar, rho, atol=1e-15)
    m = Metric(np.diag([4.0, 1.0]))
    s = MetricState.from_euclidean(rho, m)
    fd = pauli_frame(1, m)
    rec = reconstruct(fd.exact_expectations(s), fd)
    assert np.max(np.abs(rec.raw - s.rho_bar)) < 1e-12
    assert not rec.psd_projected


def test_reconstruct_mapping_input_and_errors():
    f = pauli_frame(1)
    rec = reconstruct({0: 1.0, 1: 0.0, 2: 0.0, 3: -1.0}, f)
    np.testing.assert_allclose(rec.state.hermitized(), np.diag([0, 1]), atol=1e-15)
    with pytest.raises(ValidationError):
        reconstruct({0: 1.0}, f)
    with pytest.raises(InconsistentData):
        reconstruct([1, 0, 0, 1.5], f)


@given(seeds, st.sampled_from([1, 2]))
def test_round_trip_random_states(seed, n):
    rng = np.random.default_rng(seed)
    d = 2**n
    m = Metric(random_metric_matrix(d, rng))
    s = MetricState.from_euclidean(random_density(d, rng), m)
    f = pauli_frame(n, m)
    rec = reconstruct(f.exact_expectations(s), f)
    assert np.max(np.abs(rec.raw - s.rho_bar)) <= 1e-10


def test_tomographic_equivalence(rng):
    m = Metric(random_metric_matrix(4, rng))
    s_bar = MetricState.from_euclidean(random_density(4, rng), m)
    s_euc = MetricState(s_bar.hermitized(), Metric.identity(4))
    rec_bar = reconstruct(pauli_frame(2, m).exact_expectations(s_bar), pauli_frame(2, m))
    rec_euc = reconstruct(pauli_frame(2).exact_expectations(s_euc), pauli_frame(2))
    assert np.max(np.abs(m.eta @ rec_bar.raw @ m.eta_inv - rec_euc.raw)) < 1e-10
    # sampled data: the same records reconstruct both, related by conjugation
    recs = simulate_dataset(s_bar, pauli_settings(2), 500, seed=3)
    a = reconstruct_from_records(recs, 2, m)
    b = reconstruct_from_records(recs, 2)
    assert np.max(np.abs(m.eta @ a.raw @ m.eta_inv - b.raw)) < 1e-10


def test_sampled_reconstruction_converges(rng):
    m = Metric(random_metric_matrix(2, rng))
    s = MetricState.from_euclidean(random_density(2, rng), m)
    dist = []
    for shots in (100, 10_000):
        rec = reconstruct_from_records(simulate_dataset(s, pauli_settings(1), shots, seed=11), 1, m)
        dist.append(trace_distance(rec.state, s))
    assert dist[1] < 5 / np.sqrt(10_000)
    assert dist[1] < dist[0]


def test_psd_projection_flag():
    f = pauli_frame(1)
    # Bloch vector of length > 1 is inside each element's norm but not a state
    rec = reconstruct([1, 0.9, 0.9, 0.0], f)
    assert rec.psd_projected
    assert rec.min_eigenvalue < 0
    assert np.linalg.eigvalsh(rec.state.hermitized())[0] >= -1e-12


def test_stern_gerlach_examples():
    up = MetricState(np.diag([1.0, 0.0]), Metric.identity(2))
    p = stern_gerlach_probabilities(up, SternGerlachConfig.along([0, 0, 1]))
    assert p[0.5] == pytest.approx(1.0) and p[-0.5] == pytest.approx(0.0, abs=1e-15)
    p = stern_gerlach_probabilities(up, SternGerlachConfig.along([1, 0, 0]))
    assert p[0.5] == pytest.approx(0.5) and p[-0.5] == pytest.approx(0.5)
    with pytest.raises(DimensionMismatch):
        stern_gerlach_probabilities(MetricState(np.eye(4) / 4, Metric.identity(4)), SternGerlachConfig(0, 0))


def test_quarter_turn_rotation(rng):
    # exp(-i pi/4 sigma_y): theta = pi/2 about n_perp = +y, which measures +x
    U1 = rotation_unitary(np.pi / 2, 0.0)
    np.testing.assert_allclose(U1, (I2 - 1j * SY) / np.sqrt(2), atol=1e-15)
    cfg = SternGerlachConfig(np.pi / 2, 0.0)
    np.testing.assert_allclose(cfg.direction, [1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(cfg.field, np.pi / 2 * np.array([0, 1, 0]), atol=1e-15)
    rho = random_density(2, rng)
    state = MetricState(rho, Metric.identity(2))
    p = stern_gerlach_probabilities(state, cfg)
    for k, m in enumerate(OUTCOMES):
        ket = np.eye(2)[k]
        assert p[m] == pytest.approx(np.real(ket @ U1.conj().T @ rho @ U1 @ ket), abs=1e-14)
    assert p[0.5] - p[-0.5] == pytest.approx(np.trace(rho @ SX).real, abs=1e-14)
    # conjugating the other way round measures the opposite direction
    opposite = stern_gerlach_probabilities(state, SternGerlachConfig(np.pi / 2, np.pi))
    for k, m in enumerate(OUTCOMES):
        ket = np.eye(2)[k]
        assert opposite[m] == pytest.approx(np.real(ket @ U1 @ rho @ U1.conj().T @ ket), abs=1e-14)


def test_stern_gerlach_config_validation():
    with pytest.raises(ValidationError):
        SternGerlachConfig(0.1, 0.2, interaction_time=0.0)
    with pytest.raises(ValidationError):
        SternGerlachConfig(0.1, 0.2, gyromagnetic=0.0)
    cfg = SternGerlachConfig(0.7, 0.3, gyromagnetic=2.0, interaction_time=0.5)
    np.testing.assert_allclose(cfg.field, 0.7 * cfg.n_perp)


@given(st.floats(0, np.pi), st.floats(-np.pi, np.pi))
def test_rotation_identity(theta, phi):
    U = rotation_unitary(theta, phi)
    n = SternGerlachConfig(theta, phi).direction
    assert np.max(np.abs(U @ SZ @ U.conj().T - sigma_dot(n))) <= 1e-12


@given(seeds, st.floats(0, np.pi), st.floats(-np.pi, np.pi))
def test_born_bridge(seed, theta, phi):
    rng = np.random.default_rng(seed)
    m = Metric(random_metric_matrix(2, rng))
    s = MetricState.from_euclidean(random_density(2, rng), m)
    cfg = SternGerlachConfig(theta, phi)
    p = stern_gerlach_probabilities(s, cfg)
    assert abs(sum(p.values()) - 1) < 1e-12
    sigma_bar = m.eta_inv @ sigma_dot(cfg.direction) @ m.eta
    assert abs(sum(k * v for k, v in p.items()) - 0.5 * expectation(sigma_bar, s).real) <= 1e-10


def test_bell_z_correlations():
    s = MetricState(BELL_RHO, Metric.identity(4))
    recs = simulate_dataset(s, [[[0, 0, 1], [0, 0, 1]]], 2000, seed=5)
    counts = {r.outcomes: r.count for r in recs}
    assert counts[(0.5, -0.5)] == 0 and counts[(-0.5, 0.5)] == 0
    assert sum(counts.values()) == 2000
    assert abs(counts[(0.5, 0.5)] / 2000 - 0.5) < 4 * np.sqrt(0.25 / 2000)


def test_product_state_frequencies_factorize(rng):
    a, b = random_density(2, rng), random_density(2, rng)
    s = MetricState(np.kron(a, b), Metric.identity(4))
    dirs = [[1, 0, 0], [0, 1, 0]]
    shots = 20_000
    recs = simulate_dataset(s, [dirs], shots, seed=9)
    pa = joint_probabilities(MetricState(a, Metric.identity(2)), [dirs[0]])
    pb = joint_probabilities(MetricState(b, Metric.identity(2)), [dirs[1]])
    for r in recs:
        i, j = OUTCOMES.index(r.outcomes[0]), OUTCOMES.index(r.outcomes[1])
        p = pa[i] * pb[j]
        assert abs(r.count / shots - p) <= 3 * np.sqrt(p * (1 - p) / shots)


def test_representation_independent_statistics(rng):
    m = Metric(random_metric_matrix(4, rng))
    a = simulate_dataset(MetricState.from_euclidean(BELL_RHO, m), pauli_settings(2), 300, seed=2)
    b = simulate_dataset(MetricState(BELL_RHO, Metric.identity(4)), pauli_settings(2), 300, seed=2)
    assert [r.count for r in a] == [r.count for r in b]


def test_monte_carlo_within_binomial_bounds(rng):
    s = MetricState.from_euclidean(random_density(2, rng), Metric(random_metric_matrix(2, rng)))
    shots = 1000
    for k, dirs in enumerate(pauli_settings(1)):
        p = stern_gerlach_probabilities(s, SternGerlachConfig.along(dirs[0]))
        recs = simulate_dataset(s, [dirs], shots, seed=100 + k)
        for r in recs:
            q = p[r.outcomes[0]]
            assert abs(r.count / shots - q) <= 4 * np.sqrt(q * (1 - q) / shots) + 1e-12


def test_dataset_round_trip_and_determinism():
    s = MetricState(BELL_RHO, Metric.identity(4))
    recs = simulate_dataset(s, pauli_settings(2), 100, seed=4)
    text = write_dataset(recs)
    assert text == write_dataset(simulate_dataset(s, pauli_settings(2), 100, seed=4))
    back = read_dataset(text)
    assert [(r.party_dirs, r.outcomes, r.count) for r in back] == [(r.party_dirs, r.outcomes, r.count) for r in recs]
    est = pauli_expectations_from_records(back, 2)
    assert est["II"] == 1.0
    assert est["ZZ"] == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        read_dataset('{"party_dirs": [[0,0,1]], "outcomes": [0.7], "count": 1}\n')


def test_no_signalling_euclidean_bell():
    s = MetricState(BELL_RHO, Metric.identity(4))
    povm = [np.kron(I2, np.diag([1.0, 0.0])), np.kron(I2, np.diag([0.0, 1.0]))]
    rep = verify_no_signalling(s, (2, 2), povm)
    assert rep.holds and rep.max_deviation < 1e-12


def test_no_signalling_deformed(rng):
    m = Metric(random_metric_matrix(4, rng))
    s = MetricState.from_euclidean(BELL_RHO, m)
    V = random_unitary(2, rng)
    povm = [m.eta_inv @ np.kron(I2, V @ np.diag(e) @ V.conj().T) @ m.eta for e in ([1.0, 0.0], [0.0, 1.0])]
    rep = verify_no_signalling(s, (2, 2), povm)
    assert rep.holds and rep.max_deviation <= 1e-10


def test_no_signalling_errors(rng):
    s = MetricState(BELL_RHO, Metric.identity(4))
    nonlocal_povm = [CNOT @ np.kron(np.diag(e), I2) @ CNOT for e in ([1.0, 0.0], [0.0, 1.0])]
    with pytest.raises(NotLocalPovm):
        verify_no_signalling(s, (2, 2), nonlocal_povm)
    with pytest.raises(IncompletePovm):
        verify_no_signalling(s, (2, 2), [np.kron(I2, np.diag([1.0, 0.0]))])
    with pytest.raises(InvalidPovm):
        verify_no_signalling(s, (2, 2), [np.kron(I2, np.diag([2.0, 0.0])), np.kron(I2, np.diag([-1.0, 1.0]))])
    assert issubclass(IncompletePovm, ValidationError)
