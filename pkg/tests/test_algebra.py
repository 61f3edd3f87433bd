import numpy as np
import pytest
from hypothesis import given, settings

from chernlab import algebra as A
from conftest import metric_and_hermitian, random_hermitian, random_metric


@given(metric_and_hermitian())
@settings(max_examples=60, deadline=None)
def test_rho_roundtrip(pair):
    g, a = pair
    h = A.rho_inv(g, a)
    np.testing.assert_allclose(A.rho(g, h), a, rtol=1e-13, atol=1e-13)
    back = A.rho_inv(g, A.rho(g, h))
    np.testing.assert_allclose(back.eta, h.eta, rtol=1e-13, atol=1e-13)


@given(metric_and_hermitian())
@settings(max_examples=60, deadline=None)
def test_real_complex_roundtrip(pair):
    g, _ = pair
    r = A.to_real(g)
    np.testing.assert_allclose(r, r.T, atol=1e-14)
    jr = A.j_real(g.shape[-1])
    np.testing.assert_allclose(jr.T @ r @ jr, r, atol=1e-12)
    np.testing.assert_allclose(A.to_complex(r), g, rtol=1e-14, atol=1e-14)


@given(metric_and_hermitian())
@settings(max_examples=60, deadline=None)
def test_traces_and_trace_form_agree(pair):
    g, a = pair
    h = A.rho_inv(g, a)
    tr_r, tr_c = A.traces(h)
    assert tr_r == 2.0 * tr_c
    np.testing.assert_allclose(tr_c, A.trace_form(g, A.rho(g, h)), rtol=1e-13, atol=1e-13)


@given(metric_and_hermitian())
@settings(max_examples=60, deadline=None)
def test_sym_pairing_is_positive_and_matches_real_pairing(pair):
    g, a = pair
    h = A.rho_inv(g, a)
    assert A.inner(g, h, h) > 0.0
    real = A.inner(g, A.RealEndo(A.endo_to_real(h.endo)), A.RealEndo(A.endo_to_real(h.endo)))
    np.testing.assert_allclose(A.inner(g, h, h), real, rtol=1e-12)
    # the contraction 2 Re sum H^{i jbar} a_{jbar i}
    hup = h.endo @ np.linalg.inv(g)
    np.testing.assert_allclose(A.inner(g, h, A.rho_inv(g, a)), 2.0 * np.einsum("ij,ji->", hup, a).real, rtol=1e-12)


def test_sym_pairing_is_symmetric(rng):
    g = random_metric(rng, 3)
    a, b = A.rho_inv(g, random_hermitian(rng, 3)), A.rho_inv(g, random_hermitian(rng, 3))
    np.testing.assert_allclose(A.inner(g, a, b), A.inner(g, b, a), rtol=1e-13)


def test_metric_apply_matches_real_metric(rng):
    g = random_metric(rng, 2)
    x = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    y = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    xr, yr = A.vector_to_real(x), A.vector_to_real(y)
    np.testing.assert_allclose(A.metric_apply(g, x, y), yr @ A.to_real(g) @ xr, rtol=1e-13)
    np.testing.assert_allclose(A.vector_from_real(xr), x, atol=1e-15)


def test_omega_form_is_metric_of_complex_structure(rng):
    g = random_metric(rng, 2)
    x = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    y = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    # omega(X, Y) = g(JX, Y), and J acts on (1,0) components as multiplication by i
    np.testing.assert_allclose(A.form_apply(g, x, y), A.metric_apply(g, 1j * x, y), rtol=1e-13)


def test_oneform_real_roundtrip_and_pairing():
    dx = np.array([0.5 + 0j])
    np.testing.assert_allclose(A.oneform_to_real(dx), [1.0, 0.0])
    np.testing.assert_allclose(A.oneform_from_real(np.array([1.0, 0.0])), dx)
    g = np.array([[0.5]])
    assert A.inner(g, A.OneForm(dx), A.OneForm(dx)) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize(
    "g, eta, expected",
    [
        (0.5 * np.eye(2), 0.5 * np.eye(2), (4.0, 2.0)),
        (0.5 * np.eye(2), np.zeros((2, 2)), (0.0, 0.0)),
        (0.5 * np.eye(2), 0.5 * np.diag([1.0, -1.0]), (0.0, 0.0)),
    ],
)
def test_traces_examples(g, eta, expected):
    assert A.traces(A.Sym11Value(eta.astype(complex), g)) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize(
    "g, a, expected",
    [
        (0.5 * np.eye(1), np.eye(1), 2.0),
        (np.diag([0.5, 2.0]), np.diag([0.5, 2.0]), 2.0),
    ],
)
def test_trace_form_examples(g, a, expected):
    assert A.trace_form(g, a) == pytest.approx(expected, abs=1e-15)


def test_to_real_examples():
    np.testing.assert_allclose(A.to_real(0.5 * np.eye(1)), np.eye(2))
    np.testing.assert_allclose(A.to_real(0.5 * np.exp(0.4) * np.eye(1)), np.exp(0.4) * np.eye(2))
    jr = A.j_real(2)
    np.testing.assert_array_equal(jr @ jr, -np.eye(4))
    # J d/dx = d/dy
    np.testing.assert_array_equal(jr @ np.array([1.0, 0.0, 0.0, 0.0]), [0.0, 1.0, 0.0, 0.0])


def test_identity_pairing_is_real_dimension(rng):
    g = random_metric(rng, 3)
    ident = A.Sym11Value.identity(g)
    assert A.inner(g, ident, ident) == pytest.approx(6.0, rel=1e-13)


def test_rejects_non_hermitian_and_singular():
    with pytest.raises(A.GeometryError, match="not Hermitian"):
        A.check_hermitian(np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(A.GeometryError, match="positive definite"):
        A.rho_inv(np.diag([1.0, -1.0]), np.eye(2))
    with pytest.raises(A.GeometryError, match="dimension mismatch"):
        A.rho(np.eye(2), A.Sym11Value(np.eye(3, dtype=complex), np.eye(3)))
    with pytest.raises(A.GeometryError):
        A.Sym11Value(np.eye(2, dtype=complex), np.eye(3))


def test_traces_reject_corrupted_eta():
    with pytest.raises(A.GeometryError, match="imaginary"):
        A.traces(A.Sym11Value(np.array([[1.0j]]), np.eye(1)))


def test_kind_mismatch_in_pairing(rng):
    g = random_metric(rng, 1)
    with pytest.raises((A.GeometryError, TypeError)):
        A.inner(g, A.OneForm(np.ones(1, complex)), A.Sym11Value.identity(g))
