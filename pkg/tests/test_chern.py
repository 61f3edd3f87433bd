import numpy as np
import pytest

from chernlab import algebra as A
from chernlab import chern as C
from chernlab.manifolds import ZOO, jet_eval, make_rng, random_perturbation, random_scalar, scalar_preset, zoo

HOPF_POINT = np.array([[1.0, 0.0, 0.0, 0.0]])


def geometry(name, n=20, seed=0, order=2):
    spec = zoo(name)
    pts = spec.sample(make_rng(seed, "test_chern", name), n)
    return spec, pts, jet_eval(spec, spec.metric, pts, order)


def hopf_z(pts):
    return pts[:, 0::2] + 1j * pts[:, 1::2]


# ------------------------------------------------------------ golden values
def test_hopf_christoffel_closed_form():
    _, pts, g = geometry("hopf")
    z = hopf_z(pts)
    r2 = np.sum(np.abs(z) ** 2, axis=1)
    expected = -np.einsum("kj,ni->nkij", np.eye(2), np.conj(z)) / r2[:, None, None, None]
    np.testing.assert_allclose(C.chern_christoffel(g), expected, atol=1e-14)
    g0 = jet_eval(zoo("hopf"), zoo("hopf").metric, HOPF_POINT, 2)
    assert C.chern_christoffel(g0)[0, 0, 0, 0] == pytest.approx(-1.0, abs=1e-15)


def test_hopf_christoffel_against_spatial_finite_differences():
    # independent oracle: Gamma_i = G^-1 d_i G with d_i = (d_x - i d_y) / 2 by central differences
    spec = zoo("hopf")
    p = np.array([[1.1, -0.3, 0.4, 0.2]])
    g = jet_eval(spec, spec.metric, p, 2)
    step = 1e-6
    ginv = np.linalg.inv(g.value[0])
    out = np.empty((2, 2, 2), dtype=complex)
    for i in range(2):
        dx = np.zeros(4)
        dy = np.zeros(4)
        dx[2 * i] = dy[2 * i + 1] = step
        gx = (spec.metric(p + dx, 0).value - spec.metric(p - dx, 0).value)[0] / (2 * step)
        gy = (spec.metric(p + dy, 0).value - spec.metric(p - dy, 0).value)[0] / (2 * step)
        # Gamma^k_{ij} = g^{k rbar} d_i g_{rbar j}
        out[:, i, :] = ginv @ (0.5 * (gx - 1j * gy))
    np.testing.assert_allclose(C.chern_christoffel(g)[0], out, atol=1e-8)


def test_conformal_curve_christoffel():
    _, pts, g = geometry("conformal_torus1")
    # g = e^{2u}/2 with u = 0.1 cos x: Gamma = 2 d_z u = -0.1 sin x
    np.testing.assert_allclose(C.chern_christoffel(g)[:, 0, 0, 0], -0.1 * np.sin(pts[:, 0]), atol=1e-14)


def test_cp1_curvature_at_origin():
    spec = zoo("cp1")
    g = jet_eval(spec, spec.metric, np.zeros((1, 2)), 2)
    assert C.chern_curvature(g)[0, 0, 0, 0, 0] == pytest.approx(4.0, abs=1e-13)


def test_hopf_ricci_form_closed_form():
    _, pts, g = geometry("hopf")
    z = hopf_z(pts)
    r2 = np.sum(np.abs(z) ** 2, axis=1)[:, None, None]
    expected = 2.0 * (np.eye(2) / r2 - np.einsum("nj,ni->nji", z, np.conj(z)) / r2**2)
    form, s = C.chern_ricci(g)
    np.testing.assert_allclose(form, expected, atol=1e-13)
    g0 = jet_eval(zoo("hopf"), zoo("hopf").metric, HOPF_POINT, 2)
    form0, s0 = C.chern_ricci(g0)
    np.testing.assert_allclose(form0[0], np.diag([0.0, 2.0]), atol=1e-14)
    np.testing.assert_allclose(np.sort(np.linalg.eigvals(s0.endo[0]).real), [0.0, 2.0], atol=1e-14)


@pytest.mark.parametrize("name, expected", [("hopf", 4.0), ("cp1", 2.0), ("cp1xcp1", 4.0), ("flat_torus2", 0.0)])
def test_scalar_curvature_constants(name, expected):
    _, _, g = geometry(name, n=100)
    np.testing.assert_allclose(C.chern_scalar(g), expected, atol=1e-10)


def test_cp1_ricci_endomorphism_is_identity():
    _, _, g = geometry("cp1")
    _, s = C.chern_ricci(g)
    np.testing.assert_allclose(s.endo, np.broadcast_to(np.eye(1), s.endo.shape), atol=1e-12)


def test_hopf_lee_form():
    _, pts, g = geometry("hopf")
    z = hopf_z(pts)
    tl = C.torsion_and_lee(g)
    np.testing.assert_allclose(tl.theta, -np.conj(z) / np.sum(np.abs(z) ** 2, axis=1)[:, None], atol=1e-11)
    # theta = -d log|z|^2 is co-closed for the metric 2 delta / r^2
    np.testing.assert_allclose(tl.dstar_theta, 0.0, atol=1e-12)
    np.testing.assert_allclose(tl.torsion, -np.swapaxes(tl.torsion, -1, -2), atol=1e-15)


@pytest.mark.parametrize("name", [n for n in ZOO if zoo(n).is_kahler])
def test_kahler_metrics_have_no_torsion(name):
    _, _, g = geometry(name)
    tl = C.torsion_and_lee(g)
    np.testing.assert_allclose(tl.theta, 0.0, atol=1e-12)
    np.testing.assert_allclose(tl.dstar_theta, 0.0, atol=1e-12)
    gam = C.chern_christoffel(g)
    np.testing.assert_allclose(gam, np.swapaxes(gam, -1, -2), atol=1e-12)


@pytest.mark.parametrize("name, expected", [("cp1", 0.0), ("flat_torus1", 0.0), ("cp1xcp1", 0.0)])
def test_first_chern_einstein_residual_vanishes(name, expected):
    _, _, g = geometry(name)
    np.testing.assert_allclose(C.fce_residual(g), expected, atol=1e-11)


def test_hopf_is_not_first_chern_einstein():
    _, _, g = geometry("hopf")
    # S = diag(0, 2) in a unitary frame against (scal / 2m) Id = Id: |diag(-1, 1)| = 2
    np.testing.assert_allclose(C.fce_residual(g), 2.0, atol=1e-12)


# --------------------------------------------------------------- identities
@pytest.mark.parametrize("name", list(ZOO))
def test_curvature_hermitian_symmetry(name):
    _, _, g = geometry(name)
    om = C.chern_curvature(g)
    np.testing.assert_allclose(np.conj(om), np.einsum("njilk->nijkl", om), atol=1e-12 * max(1, np.abs(om).max()))


@pytest.mark.parametrize("name", list(ZOO))
def test_ricci_matches_log_det_oracle(name):
    _, _, g = geometry(name)
    form, _ = C.chern_ricci(g)
    np.testing.assert_allclose(form, C.ricci_logdet(g), atol=1e-10 * max(1, np.abs(form).max()))


@pytest.mark.parametrize("name", list(ZOO))
def test_chern_laplacian_identity(name):
    spec, pts, g = geometry(name, n=50)
    u = jet_eval(spec, random_scalar(spec, make_rng(1, "u", name)), pts, 2)
    geo = C.ChernGeometry(g)
    lhs = A.trace_form(geo.g, C.ddc_scalar(u))
    du = np.stack([u.dz(k).value for k in range(spec.m)], axis=1)
    rhs = geo.laplacian(u) + A.inner_oneform(geo.g, du, geo.theta)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10 * max(1.0, np.abs(u.value).max()))


def test_flat_laplacian_and_hessian_of_cosine():
    spec, pts, g = geometry("flat_torus1")
    u = jet_eval(spec, scalar_preset(spec, "cos_x"), pts, 2)
    lap, hess, lc = C.levi_civita(g, u)
    np.testing.assert_allclose(lap, np.cos(pts[:, 0]), atol=1e-14)
    expected = np.zeros((len(pts), 2, 2))
    expected[:, 0, 0] = -np.cos(pts[:, 0])
    np.testing.assert_allclose(hess, expected, atol=1e-14)
    np.testing.assert_array_equal(lc, 0.0)
    np.testing.assert_allclose(A.trace_form(C.ChernGeometry(g).g, C.ddc_scalar(u)), np.cos(pts[:, 0]), atol=1e-14)


def test_height_is_first_eigenfunction_on_cp1():
    spec, pts, g = geometry("cp1")
    u = jet_eval(spec, scalar_preset(spec, "height"), pts, 2)
    lap, hess, lc = C.levi_civita(g, u)
    np.testing.assert_allclose(lap, 2.0 * u.value, atol=1e-12)
    np.testing.assert_allclose(np.trace(hess, axis1=1, axis2=2), -lap, atol=1e-11)
    np.testing.assert_array_equal(lc, np.swapaxes(lc, 2, 3))


@pytest.mark.parametrize("name, expected", [("cp1", 2.0), ("cp1xcp1", 4.0), ("hopf", 3.0), ("flat_torus1", 0.0)])
def test_riemannian_scalar_curvature(name, expected):
    _, _, g = geometry(name, order=3)
    np.testing.assert_allclose(C.riemannian_scalar(g), expected, atol=1e-9)


@pytest.mark.parametrize("name", [n for n in ZOO if zoo(n).is_kahler])
def test_chern_and_riemannian_scalar_agree_on_kahler(name):
    _, _, g = geometry(name, order=3)
    np.testing.assert_allclose(C.chern_scalar(g), C.riemannian_scalar(g), atol=1e-9)


@pytest.mark.parametrize("name", ["kahler_torus2", "cp1xcp1", "conformal_torus1"])
def test_divergences_agree_on_kahler(name):
    spec, pts, g = geometry(name)
    eta = jet_eval(spec, random_perturbation(spec, make_rng(2, "h", name)), pts, 2)
    dg, dn = C.divergences(g, eta)
    np.testing.assert_allclose(dg, dn, atol=1e-11)


def test_divergences_differ_on_hopf():
    spec, pts, g = geometry("hopf")
    eta = jet_eval(spec, random_perturbation(spec, make_rng(2, "h", "hopf")), pts, 2)
    dg, dn = C.divergences(g, eta)
    assert np.abs(dg - dn).max() > 1e-3
    ident = jet_eval(spec, spec.metric, pts, 2)
    for d in C.divergences(g, ident):
        np.testing.assert_allclose(d, 0.0, atol=1e-13)


@pytest.mark.parametrize("name", list(ZOO))
def test_covariant_derivative_of_identity_vanishes(name):
    _, _, g = geometry(name)
    np.testing.assert_allclose(C.chern_cov_deriv(g, g, 1), 0.0, atol=1e-12)


@pytest.mark.parametrize("name", ["hopf", "conformal_torus2", "cp1xcp1"])
def test_ricci_identity_for_second_covariant_derivative(name):
    spec, pts, g = geometry(name)
    eta = jet_eval(spec, random_perturbation(spec, make_rng(3, "h", name)), pts, 3)
    d2 = C.chern_cov_deriv(g, eta, 2)  # raises if the Ricci identity fails
    geo = C.ChernGeometry(g)
    defect = C.commutator_defect(geo, geo.endo_jet(eta).value, d2)
    assert np.abs(defect).max() <= 1e-10


def test_trace_of_covariant_derivative_is_derivative_of_trace():
    spec, pts, g = geometry("hopf")
    eta = jet_eval(spec, random_perturbation(spec, make_rng(4, "h")), pts, 2)
    geo = C.ChernGeometry(g)
    nab = C.chern_cov_deriv(g, eta, 1)
    tr = geo.endo_jet(eta).trace()
    for k in range(spec.m):
        np.testing.assert_allclose(np.trace(nab[:, k], axis1=-2, axis2=-1), tr.dz(k).value, atol=1e-11)


def test_lee_frame_formula_matches(rng):
    spec, pts, g = geometry("hopf")
    x = rng.standard_normal((len(pts), 2)) + 1j * rng.standard_normal((len(pts), 2))
    geo = C.ChernGeometry(g)
    direct = 2.0 * np.einsum("ni,ni->n", geo.theta, x).real
    np.testing.assert_allclose(C.lee_form_frame(g, x), direct, atol=1e-11)


def test_singular_and_low_order_inputs_are_rejected():
    spec = zoo("flat_torus1")
    pts = np.zeros((1, 2))
    with pytest.raises(ValueError, match="order"):
        C.ChernGeometry(jet_eval(spec, spec.metric, pts, 1))
    bad = jet_eval(spec, spec.metric, pts, 2) * 0.0
    with pytest.raises(A.GeometryError, match="positive definite"):
        C.chern_scalar(bad)
    with pytest.raises(ValueError, match="order >= 3"):
        C.riemannian_scalar(jet_eval(spec, spec.metric, pts, 2))
    with pytest.raises(ValueError):
        C.chern_cov_deriv(jet_eval(spec, spec.metric, pts, 2), jet_eval(spec, spec.metric, pts, 2), 3)
