"""Tests for tomography module."""

import math

import numpy as np
import pytest

from polcoh.errors import DimensionError, NormalizationWarning, PositivityWarning
from polcoh.fock import (
    CoherenceTensor,
    FixedNState,
    coherence_tensor,
    fock_state,
    make_fixed_n_state,
    noon_state,
    random_mixed_state,
    random_pure_state,
)
from polcoh.recipe import reconstruct, settings_plan
from polcoh.sampler import exact_records
from polcoh.tomography import (
    LINEAR_TABLE,
    QUADRATIC_TABLE,
    STOKES_MATRICES,
    StokesCovariance,
    classical_stokes,
    coherences_from_density,
    density_from_coherences,
    stokes_means,
    stokes_variances,
)


@pytest.fixture
def rng():
    """Seeded generator for random states."""
    return np.random.default_rng(5)


def two_mode_operators(cutoff: int) -> tuple[np.ndarray, np.ndarray]:
    """a1 and a2 on a truncated two-mode space."""
    lower = np.diag(np.sqrt(np.arange(1, cutoff + 1)), k=1)
    eye = np.eye(cutoff + 1)
    return np.kron(lower, eye), np.kron(eye, lower)


def embed(state: FixedNState, cutoff: int) -> np.ndarray:
    """Density matrix of a fixed-N state in the truncated two-mode space."""
    N = state.N
    dim = cutoff + 1
    basis = np.zeros((dim * dim, N + 1))
    for n in range(N + 1):
        basis[n * dim + (N - n), n] = 1.0
    return basis @ state.density_matrix() @ basis.T


def stokes_oracle(state: FixedNState) -> tuple[np.ndarray, np.ndarray]:
    """Means and covariance from explicit Stokes operators."""
    cutoff = state.N + 2
    a1, a2 = two_mode_operators(cutoff)
    modes = (a1, a2)
    rho = embed(state, cutoff)
    ops = [
        sum(M[k, l] * modes[k].conj().T @ modes[l] for k in range(2) for l in range(2))
        for M in STOKES_MATRICES
    ]
    means = np.array([np.trace(rho @ op).real for op in ops])
    cov = np.array(
        [
            [np.trace(rho @ (oi @ oj + oj @ oi)).real / 2 - means[i] * means[j] for j, oj in enumerate(ops)]
            for i, oi in enumerate(ops)
        ]
    )
    return means, cov


def test_density_round_trip(rng):
    """Coherences rebuild the original density matrix."""
    for N in range(1, 7):
        for _ in range(100):
            state = random_mixed_state(N, rng)
            estimate = density_from_coherences(coherence_tensor(state))
            assert np.max(np.abs(estimate.state.density - state.density)) < 1e-8
            assert estimate.warnings == ()
            assert estimate.trace == pytest.approx(1.0)


def test_density_from_reconstructed_records(rng):
    """Exact records go through reconstruct and back to the density matrix."""
    for N in range(1, 7):
        plan = settings_plan(N)
        for _ in range(100):
            state = random_mixed_state(N, rng)
            estimate = density_from_coherences(reconstruct(exact_records(state, plan), N))
            assert np.max(np.abs(estimate.state.density - state.density)) <= 1e-7


def test_density_of_pure_state(rng):
    """Pure states come back as rank-one projectors."""
    state = random_pure_state(4, rng)
    estimate = density_from_coherences(coherence_tensor(state))
    assert np.allclose(estimate.state.density, np.outer(state.amplitudes, state.amplitudes.conj()))
    estimate.state.check()


def test_coherences_from_density_inverts(rng):
    """coherences_from_density is the exact inverse of density_from_coherences."""
    state = random_mixed_state(3, rng)
    tensor = coherences_from_density(state)
    assert np.allclose(tensor.values, coherence_tensor(state).values)
    back = density_from_coherences(tensor).state
    assert np.allclose(back.density, state.density)


def test_noon_tomography_from_records():
    """NOON2 records give the NOON2 density with corners one half."""
    records = exact_records(noon_state(2), settings_plan(2))
    estimate = density_from_coherences(reconstruct(records, 2))
    expected = np.zeros((3, 3))
    expected[0, 0] = expected[0, 2] = expected[2, 0] = expected[2, 2] = 0.5
    assert np.allclose(estimate.state.density, expected, atol=1e-10)


def test_normalization_warning(rng):
    """A trace far from one is reported, not raised."""
    tensor = coherence_tensor(random_mixed_state(2, rng))
    doubled = CoherenceTensor(N=2, values=2 * tensor.values)
    estimate = density_from_coherences(doubled)
    assert estimate.trace == pytest.approx(2.0)
    assert any(isinstance(w, NormalizationWarning) for w in estimate.warnings)


def test_positivity_warning_and_projection():
    """Negative eigenvalues warn, and projection removes them."""
    raw = FixedNState(N=1, kind="mixed", density=np.diag([1.5, -0.5]))
    tensor = coherences_from_density(raw)
    estimate = density_from_coherences(tensor)
    assert estimate.min_eigenvalue == pytest.approx(-0.5)
    assert [type(w) for w in estimate.warnings] == [PositivityWarning]

    projected = density_from_coherences(tensor, project_psd=True)
    assert projected.warnings == ()
    assert projected.trace == pytest.approx(1.0)
    assert np.allclose(projected.state.density, np.diag([1.0, 0.0]))
    projected.state.check()


def test_classical_stokes():
    """Horizontal, diagonal and circular light."""
    assert classical_stokes(1, 0).s1 == pytest.approx(1.0)
    diagonal = classical_stokes(1 / math.sqrt(2), 1 / math.sqrt(2))
    assert diagonal.s2 == pytest.approx(1.0)
    assert diagonal.s3 == pytest.approx(0.0)
    circular = classical_stokes(1 / math.sqrt(2), 1j / math.sqrt(2))
    assert circular.s3 == pytest.approx(1.0)
    assert circular.s0 == pytest.approx(1.0)


def test_stokes_means_match_classical_for_single_photon():
    """A single photon has the Stokes vector of its mode function."""
    alpha1, alpha2 = 0.6, 0.8j
    state = make_fixed_n_state(1, [alpha2, alpha1])
    means = stokes_means(coherence_tensor(state, 1))
    expected = classical_stokes(alpha1, alpha2)
    assert means.as_array() == pytest.approx(expected.as_array())


def test_fock_state_variances():
    """|1,0> has definite S0 and S1 and unit variance in S2 and S3."""
    state = fock_state(1, 1)
    cov = stokes_variances(coherence_tensor(state, 1), coherence_tensor(state, 2))
    assert np.allclose(np.diag(cov.v), [0.0, 0.0, 1.0, 1.0])
    assert np.allclose(cov.v, cov.v.T)


def test_vacuum_variances_vanish():
    """The vacuum has zero Stokes means and covariance."""
    vacuum = fock_state(0, 0)
    first, second = coherence_tensor(vacuum, 1), coherence_tensor(vacuum, 2)
    assert np.max(np.abs(stokes_variances(first, second).v)) <= 1e-12
    assert stokes_means(first).as_array() == pytest.approx([0.0] * 4, abs=1e-12)


def test_stokes_against_operator_oracle(rng):
    """Means and covariance agree with explicit operators on 200 states."""
    for count in range(200):
        N = 1 + count % 4
        state = random_pure_state(N, rng) if count % 2 else random_mixed_state(N, rng)
        means, cov = stokes_oracle(state)
        first, second = coherence_tensor(state, 1), coherence_tensor(state, 2)
        assert np.allclose(stokes_means(first).as_array(), means, atol=1e-9)
        assert np.allclose(stokes_variances(first, second).v, cov, atol=1e-9)


def test_stokes_from_reconstructed_coherences(rng):
    """Reconstructed first and second order coherences give the same Stokes data."""
    state = random_mixed_state(3, rng)
    first = reconstruct(exact_records(state, settings_plan(1)), 1)
    second = reconstruct(exact_records(state, settings_plan(2)), 2)
    means, cov = stokes_oracle(state)
    assert np.allclose(stokes_means(first).as_array(), means, atol=1e-8)
    assert np.allclose(stokes_variances(first, second).v, cov, atol=1e-8)


def test_stokes_order_checks(rng):
    """Tensors of the wrong order raise DimensionError."""
    state = random_mixed_state(2, rng)
    with pytest.raises(DimensionError):
        stokes_means(coherence_tensor(state, 2))
    with pytest.raises(DimensionError):
        stokes_variances(coherence_tensor(state, 1), coherence_tensor(state, 1))


def test_expansion_tables_are_symmetric():
    """Generated tables are symmetric in the Stokes indices."""
    assert np.allclose(QUADRATIC_TABLE, QUADRATIC_TABLE.transpose(1, 0, 2, 3))
    assert np.allclose(LINEAR_TABLE, LINEAR_TABLE.transpose(1, 0, 2, 3))


def test_covariance_shape():
    """Only 4x4 matrices are accepted."""
    with pytest.raises(DimensionError):
        StokesCovariance(np.eye(3))
