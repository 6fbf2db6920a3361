import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entangled_games import linalg as la
from entangled_games.errors import BoundViolation, ValidationError


def _kron_loop(a, b):
    # index-loop oracle for the Kronecker product
    m, n = a.shape
    p, q = b.shape
    out = np.zeros((m * p, n * q), dtype=complex)
    for i, j, k, l in itertools.product(range(m), range(n), range(p), range(q)):
        out[i * p + k, j * q + l] = a[i, j] * b[k, l]
    return out


def _partial_trace_loop(dm, dims, keep):
    n = len(dims)
    kept_dims = [dims[k] for k in keep]
    dk = int(np.prod(kept_dims)) if keep else 1
    out = np.zeros((dk, dk), dtype=complex)
    t = dm.reshape(dims + dims)
    for row in itertools.product(*[range(d) for d in dims]):
        for col in itertools.product(*[range(d) for d in dims]):
            if any(row[i] != col[i] for i in range(n) if i not in keep):
                continue
            r = np.ravel_multi_index([row[k] for k in keep], kept_dims) if keep else 0
            c = np.ravel_multi_index([col[k] for k in keep], kept_dims) if keep else 0
            out[r, c] += t[row + col]
    return out


@pytest.mark.parametrize("shapes", [((2, 2), (3, 3)), ((1, 3), (2, 1)), ((3, 2), (2, 2))])
def test_tensor_matches_index_loop(rng, shapes):
    a = rng.standard_normal(shapes[0]) + 1j * rng.standard_normal(shapes[0])
    b = rng.standard_normal(shapes[1]) + 1j * rng.standard_normal(shapes[1])
    np.testing.assert_allclose(la.tensor(a, b), _kron_loop(a, b), atol=1e-14)


def test_tensor_all_is_associative(rng):
    mats = [la.random_hermitian(d, rng) for d in (2, 3, 2)]
    np.testing.assert_allclose(la.tensor_all(*mats), la.tensor(la.tensor(mats[0], mats[1]), mats[2]), atol=1e-12)


@pytest.mark.parametrize("dims,keep", [
    ([2, 2], [0]), ([2, 2], [1]), ([2, 3], [1]), ([2, 3, 2], [0, 2]),
    ([3, 2, 2], [1]), ([2, 2, 2], []), ([2, 2], [0, 1]),
])
def test_partial_trace_matches_index_loop(rng, dims, keep):
    rho = la.random_density_matrix(int(np.prod(dims)), rng)
    np.testing.assert_allclose(la.partial_trace(rho, dims, keep), _partial_trace_loop(rho, dims, keep), atol=1e-13)


def test_partial_trace_rejects_bad_dims(rng):
    with pytest.raises(ValidationError):
        la.partial_trace(np.eye(4), [2, 3], [0])
    with pytest.raises(ValidationError):
        la.partial_trace(np.eye(4), [2, 2], [2])


@pytest.mark.parametrize("d", [1, 2, 3, 5, 8])
def test_trace_norm_matches_singular_values(rng, d):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    assert la.trace_norm(a) == pytest.approx(np.linalg.svd(a, compute_uv=False).sum(), abs=1e-10)


def test_trace_norm_of_hermitian_is_absolute_spectrum(rng):
    h = la.random_hermitian(6, rng)
    assert la.trace_norm(h) == pytest.approx(np.abs(np.linalg.eigvalsh(h)).sum(), abs=1e-12)


@pytest.mark.parametrize("d", [1, 2, 4, 7, 12])
def test_jacobi_matches_lapack(rng, d):
    h = la.random_hermitian(d, rng)
    w_j, v_j = la.hermitian_eig(h, method="jacobi")
    w_l, _ = la.hermitian_eig(h)
    np.testing.assert_allclose(w_j, w_l, atol=1e-10)
    np.testing.assert_allclose(v_j @ np.diag(w_j) @ v_j.conj().T, h, atol=1e-10)
    np.testing.assert_allclose(v_j.conj().T @ v_j, np.eye(d), atol=1e-10)


def test_jacobi_handles_degenerate_spectrum(rng):
    u = la.haar_unitary(4, rng)
    h = u @ np.diag([1.0, 1.0, -2.0, -2.0]) @ u.conj().T
    w, v = la.jacobi_eigh(h)
    np.testing.assert_allclose(w, [-2, -2, 1, 1], atol=1e-10)
    np.testing.assert_allclose(v @ np.diag(w) @ v.conj().T, h, atol=1e-10)


def test_hermitian_eig_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        la.hermitian_eig(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError):
        la.hermitian_eig(np.eye(2), method="qr")


@pytest.mark.parametrize("d,n", [(1, 1), (2, 2), (3, 2), (4, 3), (5, 5)])
def test_random_pvm_is_valid(rng, d, n):
    ops = la.random_pvm(d, n, rng)
    la.check_pvm(ops)
    assert ops.shape == (n, d, d)


def test_check_pvm_rejects_overlap():
    p = np.array([[1, 0], [0, 0]])
    with pytest.raises(ValidationError):
        la.check_pvm([p, p])
    with pytest.raises(ValidationError):
        la.check_pvm([p, np.zeros((2, 2))])


@pytest.mark.parametrize("bad", [
    np.array([[1, 1], [0, 0]]),
    np.array([[0.5, 0], [0, 0.5]]),
    np.ones(3),
])
def test_check_projector_rejects(bad):
    with pytest.raises(ValidationError):
        la.check_projector(bad)


def test_check_state_rejects_unnormalized():
    with pytest.raises(ValidationError):
        la.check_state([1.0, 1.0])
    with pytest.raises(ValidationError):
        la.check_state(np.eye(2))


def test_nearest_projector_rounds_spectrum(rng):
    u = la.haar_unitary(4, rng)
    h = u @ np.diag([0.1, 0.49, 0.51, 0.9]) @ u.conj().T
    p = la.nearest_projector(h)
    assert la.is_projector(p)
    assert np.trace(p).real == pytest.approx(2.0)
    np.testing.assert_allclose(p, u[:, 2:] @ u[:, 2:].conj().T, atol=1e-12)


def test_psd_sqrt_squares_back(rng):
    rho = la.random_density_matrix(5, rng)
    s = la.psd_sqrt(rho)
    np.testing.assert_allclose(s @ s, rho, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(d=st.integers(1, 6), seed=st.integers(0, 2**32 - 1), rank=st.integers(1, 6))
def test_gentle_measurement_property(d, seed, rank):
    rng = np.random.default_rng(seed)
    rho = la.random_density_matrix(d, rng, rank=min(rank, d))
    u = la.haar_unitary(d, rng)
    x = u @ np.diag(rng.random(d)) @ u.conj().T
    distance, bound = la.gentle_measurement_bound(rho, x)
    assert distance <= bound + 1e-9


def test_gentle_measurement_exact_for_projector_containing_support(rng):
    psi = la.random_state(3, rng)
    rho = np.outer(psi, psi.conj())
    distance, bound = la.gentle_measurement_bound(rho, rho)
    assert distance == pytest.approx(0.0, abs=1e-12)
    assert bound == pytest.approx(0.0, abs=1e-6)


def test_gentle_measurement_rejects_bad_inputs(rng):
    rho = la.random_density_matrix(2, rng)
    with pytest.raises(ValidationError):
        la.gentle_measurement_bound(rho, 2 * np.eye(2))
    with pytest.raises(ValidationError):
        la.gentle_measurement_bound(2 * rho, np.eye(2))


def test_bound_violation_is_raised_when_bound_broken(monkeypatch, rng):
    rho = la.random_density_matrix(2, rng)
    x = np.diag([1.0, 0.0])
    monkeypatch.setattr(la, "trace_norm", lambda a: 10.0)
    with pytest.raises(BoundViolation):
        la.gentle_measurement_bound(rho, x)


@pytest.mark.parametrize("d", [1, 2, 5])
def test_haar_unitary_is_unitary(rng, d):
    u = la.haar_unitary(d, rng)
    np.testing.assert_allclose(u @ u.conj().T, np.eye(d), atol=1e-12)
