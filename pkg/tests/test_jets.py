import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chernlab import jets as J


def fd_gradient(fn, x, h=1e-5):
    grads = []
    for a in range(x.shape[-1]):
        e = np.zeros_like(x)
        e[..., a] = h
        grads.append((fn(x + e) - fn(x - e)) / (2 * h))
    return np.stack(grads, axis=1)


def fd_hessian(fn, x, h=1e-4):
    n = x.shape[-1]
    out = np.empty((x.shape[0], n, n))
    for a in range(n):
        for b in range(n):
            ea = np.zeros_like(x)
            eb = np.zeros_like(x)
            ea[..., a] = h
            eb[..., b] = h
            out[:, a, b] = (fn(x + ea + eb) - fn(x + ea - eb) - fn(x - ea + eb) + fn(x - ea - eb)) / (4 * h * h)
    return out


def grad(jet):
    """First partials with the point axis first, ``(N, n)``."""
    return np.moveaxis(jet.d(1), 0, -1)


def hess(jet):
    """Second partials with the point axis first, ``(N, n, n)``."""
    return np.moveaxis(jet.d(2), (0, 1), (-2, -1))


def test_variables_are_coordinate_jets():
    pts = np.array([[0.3, -1.2], [2.0, 0.5]])
    x, y = J.variables(pts, 2)
    np.testing.assert_array_equal(x.value, pts[:, 0])
    np.testing.assert_array_equal(grad(x), np.array([[1.0, 0.0], [1.0, 0.0]]))
    np.testing.assert_array_equal(y.d(2), np.zeros((2, 2, 2)))


@pytest.mark.parametrize(
    "name, jet_fn, np_fn",
    [
        ("exp", lambda x, y: J.exp(x * y), lambda p: np.exp(p[:, 0] * p[:, 1])),
        ("log", lambda x, y: J.log(2.0 + x * x + y), lambda p: np.log(2.0 + p[:, 0] ** 2 + p[:, 1])),
        ("sin", lambda x, y: J.sin(3 * x - y), lambda p: np.sin(3 * p[:, 0] - p[:, 1])),
        ("cos", lambda x, y: J.cos(x) * J.sin(y), lambda p: np.cos(p[:, 0]) * np.sin(p[:, 1])),
        ("power", lambda x, y: J.power(1.5 + x * x, -2.5), lambda p: (1.5 + p[:, 0] ** 2) ** -2.5),
        ("sqrt", lambda x, y: J.sqrt(1.0 + x * x + y * y), lambda p: np.sqrt(1.0 + p[:, 0] ** 2 + p[:, 1] ** 2)),
        ("quotient", lambda x, y: (x + 2.0) / (3.0 + y * y), lambda p: (p[:, 0] + 2.0) / (3.0 + p[:, 1] ** 2)),
        ("reciprocal", lambda x, y: J.reciprocal(2.0 + J.cos(x + y)), lambda p: 1.0 / (2.0 + np.cos(p.sum(1)))),
        ("integer_power", lambda x, y: (x - y) ** 3, lambda p: (p[:, 0] - p[:, 1]) ** 3),
    ],
)
def test_scalar_jets_match_finite_differences(name, jet_fn, np_fn, rng):
    pts = rng.uniform(-0.8, 0.8, size=(7, 2))
    jet = jet_fn(*J.variables(pts, 2))
    np.testing.assert_allclose(jet.value, np_fn(pts), rtol=1e-14, atol=1e-14)
    np.testing.assert_allclose(grad(jet), fd_gradient(np_fn, pts), rtol=1e-7, atol=1e-8)
    np.testing.assert_allclose(hess(jet), fd_hessian(np_fn, pts), rtol=1e-5, atol=1e-5)


@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
@settings(max_examples=30, deadline=None)
def test_leibniz_rule_holds_to_roundoff(seed, order):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1, 1, size=(4, 3))
    x, y, z = J.variables(pts, order)
    f = J.sin(x + 2 * y) + z * z
    g = J.exp(0.3 * x * z) - y
    prod = f * g
    # first derivatives via the product rule
    np.testing.assert_allclose(grad(prod), grad(f) * g.value[:, None] + f.value[:, None] * grad(g), atol=1e-13)
    if order >= 2:
        expected = (
            hess(f) * g.value[:, None, None]
            + np.einsum("na,nb->nab", grad(f), grad(g))
            + np.einsum("na,nb->nab", grad(g), grad(f))
            + f.value[:, None, None] * hess(g)
        )
        np.testing.assert_allclose(hess(prod), expected, atol=1e-12)


def test_second_derivatives_are_symmetric(rng):
    pts = rng.uniform(-1, 1, size=(5, 4))
    x1, y1, x2, y2 = J.variables(pts, 3)
    f = J.exp(x1 * y2) * J.cos(x2 - y1 * y1) / (2.0 + J.sin(x1 + x2))
    d2 = f.d(2)
    np.testing.assert_allclose(d2, np.swapaxes(d2, 0, 1), atol=1e-12)
    d3 = f.d(3)
    np.testing.assert_allclose(d3, np.einsum("abcn->bcan", d3), atol=1e-11)
    np.testing.assert_allclose(d3, np.einsum("abcn->bacn", d3), atol=1e-11)


def test_matrix_inverse_and_logdet(rng):
    pts = rng.uniform(-1, 1, size=(6, 2))
    x, y = J.variables(pts, 2)
    a = J.stack([J.stack([2.0 + x * x, 0.3 * y], -1), J.stack([0.3 * y, 1.5 + J.cos(x)], -1)], -2)
    ainv = J.inv(a)
    ident = a @ ainv
    np.testing.assert_allclose(ident.value, np.broadcast_to(np.eye(2), (6, 2, 2)), atol=1e-14)
    np.testing.assert_allclose(ident.d(1), 0.0, atol=1e-14)
    np.testing.assert_allclose(ident.d(2), 0.0, atol=1e-13)

    def logdet(p):
        m = np.stack(
            [np.stack([2.0 + p[:, 0] ** 2, 0.3 * p[:, 1]], -1), np.stack([0.3 * p[:, 1], 1.5 + np.cos(p[:, 0])], -1)],
            -2,
        )
        return np.log(np.linalg.det(m))

    ld = J.logdet(a)
    np.testing.assert_allclose(ld.value, logdet(pts), rtol=1e-14)
    np.testing.assert_allclose(grad(ld), fd_gradient(logdet, pts), rtol=1e-7, atol=1e-9)
    np.testing.assert_allclose(hess(ld), fd_hessian(logdet, pts), rtol=1e-5, atol=1e-6)


def test_complex_derivatives_of_holomorphic_function(rng):
    pts = rng.uniform(-1, 1, size=(5, 2))
    x, y = J.variables(pts, 2)
    z = x + 1j * y
    w = z * z * z
    zv = pts[:, 0] + 1j * pts[:, 1]
    np.testing.assert_allclose(w.dz(0).value, 3 * zv**2, atol=1e-14)
    np.testing.assert_allclose(w.dzb(0).value, 0.0, atol=1e-14)
    np.testing.assert_allclose(w.dz(0).dz(0).value, 6 * zv, atol=1e-13)


def test_truncate_and_partial_shift_order(rng):
    pts = rng.uniform(-1, 1, size=(3, 2))
    x, y = J.variables(pts, 3)
    f = J.exp(x) * y
    assert f.truncate(1).order == 1
    assert f.partial(0).order == 2
    np.testing.assert_allclose(f.partial(0).value, np.exp(pts[:, 0]) * pts[:, 1])
