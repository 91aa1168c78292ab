import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import moments_reference
from ngbound import fock
from ngbound.exceptions import CutoffTooSmallError, InvalidInputError, InvalidStateError

complex_vectors = st.lists(
    st.tuples(st.floats(-1, 1), st.floats(-1, 1)), min_size=1, max_size=10
).filter(lambda v: sum(a * a + b * b for a, b in v) > 1e-3)


def test_from_diagonal_normalizes():
    rho = fock.from_diagonal([2.0, 1.0, 1.0])
    np.testing.assert_allclose(rho.diagonal, [0.5, 0.25, 0.25])
    assert rho.is_diagonal
    assert fock.validate(rho).ok


def test_from_diagonal_pads_to_dim():
    rho = fock.from_diagonal([1.0], dim=5)
    assert rho.dim == 5 and rho.diagonal[0] == 1


@pytest.mark.parametrize("weights", [[], [-0.5, 1.5], [0.0, 0.0], [np.nan, 1.0]])
def test_from_diagonal_rejects(weights):
    with pytest.raises(InvalidInputError):
        fock.from_diagonal(weights)


def test_from_pure_rejects_zero_vector():
    with pytest.raises(InvalidInputError):
        fock.from_pure([0, 0])


@given(complex_vectors)
@settings(max_examples=50, deadline=None)
def test_pure_states_are_valid(v):
    rho = fock.from_pure([complex(a, b) for a, b in v])
    rep = fock.validate(rho)
    assert rep.ok
    assert fock.purity(rho) == pytest.approx(1.0, abs=1e-12)


@given(complex_vectors)
@settings(max_examples=40, deadline=None)
def test_moments_match_operator_products(v):
    rho = fock.from_pure([complex(a, b) for a, b in v])
    d, gamma = moments_reference(rho.elements)
    np.testing.assert_allclose(fock.moments(rho).mean, d, atol=1e-12)
    np.testing.assert_allclose(fock.covariance(rho), gamma, atol=1e-11)
    # uncertainty principle
    assert np.linalg.det(gamma) >= 1 - 1e-9


def test_vacuum_covariance_is_identity():
    np.testing.assert_allclose(fock.covariance(fock.from_diagonal([1.0], dim=3)), np.eye(2), atol=1e-15)


def test_fock_one_covariance():
    np.testing.assert_allclose(fock.covariance(fock.from_diagonal([0, 1.0])), 3 * np.eye(2), atol=1e-14)


def test_validate_flags_non_positive():
    m = np.array([[1.2, 0], [0, -0.2]], dtype=complex)
    rep = fock.validate(fock.from_matrix(m))
    assert not rep.positive and rep.normalized
    assert "positive" in rep.failures()


def test_validate_flags_non_hermitian():
    m = np.array([[0.5, 0.3], [0.1, 0.5]], dtype=complex)
    assert not fock.validate(fock.from_matrix(m)).hermitian


def test_from_matrix_rejects_bad_shapes():
    with pytest.raises(InvalidStateError):
        fock.from_matrix(np.ones((2, 3)))
    with pytest.raises(InvalidStateError):
        fock.from_matrix(np.array([[np.inf]]))


@pytest.mark.parametrize("mu_g", [0.1, 0.3, 0.7, 1.0])
def test_thermal_state_purity(mu_g):
    rho = fock.thermal_state(mu_g)
    assert rho.truncated
    assert fock.purity(rho) == pytest.approx(mu_g, abs=1e-12)
    g = fock.covariance(rho)
    assert 1 / np.sqrt(np.linalg.det(g)) == pytest.approx(mu_g, abs=1e-10)


def test_truncated_tail_check():
    rho = fock.FockDensityMatrix(np.diag([0.5, 0.3, 0.2]).astype(complex), truncated=True)
    with pytest.raises(CutoffTooSmallError):
        fock.moments(rho)
    # exact finite states are never flagged
    fock.moments(fock.from_diagonal([0.5, 0.3, 0.2]))


def test_phase_average_keeps_populations_and_lowers_purity():
    rng = np.random.default_rng(3)
    v = rng.normal(size=7) + 1j * rng.normal(size=7)
    rho = fock.from_pure(v)
    avg = fock.phase_average(rho)
    np.testing.assert_allclose(avg.diagonal, rho.diagonal)
    assert avg.is_diagonal
    assert fock.purity(avg) <= fock.purity(rho)


@pytest.mark.parametrize("rho", [
    fock.from_diagonal([0.2, 0.8]),
    fock.from_pure([1, 1j, 0.5]),
    fock.from_matrix(np.array([[0.6, 0.1j], [-0.1j, 0.4]])),
])
def test_json_roundtrip(rho, tmp_path):
    payload = fock.state_to_json(rho)
    path = tmp_path / "s.json"
    path.write_text(json.dumps(payload))
    back = fock.load_state(path)
    np.testing.assert_allclose(back.elements, rho.elements, atol=1e-15)


def test_json_pure_format():
    rho = fock.state_from_json({"dim": 4, "pure": [[0, 0], [1, 0]]})
    assert rho.dim == 4 and rho.diagonal[1] == pytest.approx(1)


@pytest.mark.parametrize("payload", [
    [],
    {"dim": 2},
    {"dim": 2, "diagonal": [1, 0], "pure": [[1, 0]]},
    {"dim": -1, "diagonal": [1]},
    {"dim": 2, "pure": [1, 0]},
    {"dim": 1, "diagonal": [1, 0]},
])
def test_json_rejects(payload):
    with pytest.raises(InvalidStateError):
        fock.state_from_json(payload)


def test_load_state_malformed(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{\"dim\": 2, ")
    with pytest.raises(InvalidStateError, match="malformed"):
        fock.load_state(path)


def test_padding():
    rho = fock.from_pure([0.6, 0.8])
    big = rho.padded(6)
    assert big.dim == 6 and fock.purity(big) == pytest.approx(1)
    with pytest.raises(InvalidInputError):
        big.padded(3)
