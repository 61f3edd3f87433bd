"""First and second variations of Chern quantities along metric perturbations.

Perturbations follow the path ``g_t = g((Id + t h) ., ..)``; in matrices the
lowered form moves as ``eta_t = G + t eta`` with ``eta = G H``.  Every
primed quantity here is a derivative at ``t = 0`` along that path, except
:func:`second_var`, which is the iterated derivative with ``h`` held fixed
as an endomorphism (see :func:`second_order_path`).

Tangent vectors ``X, Y`` are arrays of (1,0) components, shape ``(N, m)``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import algebra as A
from . import jets as J
from .chern import ChernGeometry, _comm, ddc_scalar, fce_residual
from .jets import Jet
from .manifolds import Field, ManifoldSpec, jet_eval, make_manifold, make_rng, perturbation_preset, scalar_preset
from .quadrature import QuadratureRule, integrate, quadrature_rule

__all__ = [
    "VariationInput",
    "ObstructionReport",
    "KernelError",
    "var_connection",
    "var_trace",
    "var_curvature",
    "var_ricci_form",
    "var_lee",
    "var_laplacian",
    "var_ricci_endo",
    "var_pairing",
    "gamma",
    "gamma_parts",
    "gamma_star",
    "second_var",
    "second_var_kahler",
    "second_order_path",
    "obstruction",
    "instability_witness",
    "KERNEL_TOL",
]

KERNEL_TOL = 1e-8
KAHLER_TOL = 1e-10


class KernelError(A.GeometryError):
    """Obstruction inputs that are not in the required kernels."""


class VariationInput:
    """Metric, perturbation(s) and optional scalar field at the same points.

    Parameters
    ----------
    gjet : Jet
        Metric jet, order >= 2.
    hjets : sequence of Jet
        One or two ``eta`` jets (lowered perturbations), order >= 2.
    ujet : Jet, optional
        Scalar jet, order >= 2.
    """

    def __init__(self, gjet: Jet | ChernGeometry, hjets: Sequence[Jet] | Jet, ujet: Jet | None = None, points=None):
        if isinstance(hjets, Jet):
            hjets = (hjets,)
        hjets = tuple(hjets)
        if not 1 <= len(hjets) <= 2:
            raise ValueError("VariationInput takes one or two perturbations")
        self.geo = gjet if isinstance(gjet, ChernGeometry) else ChernGeometry(gjet)
        for h in hjets:
            if h.shape != self.geo.gjet.shape:
                raise A.GeometryError(f"perturbation shape {h.shape} does not match metric {self.geo.gjet.shape}")
            A.check_hermitian(h.value)
        self.etajets = hjets
        self.ujet = ujet
        self.points = points

    @classmethod
    def at(cls, spec: ManifoldSpec, points, hfields, ufield: Field | None = None, order: int = 2):
        """Evaluate fields of ``spec`` at ``points`` and bundle them."""
        if callable(hfields):
            hfields = (hfields,)
        g = jet_eval(spec, spec.metric, points, order)
        hs = [jet_eval(spec, f, points, order) for f in hfields]
        u = jet_eval(spec, ufield, points, order) if ufield is not None else None
        return cls(g, hs, u, points)

    @property
    def g(self) -> np.ndarray:
        return self.geo.g

    @property
    def m(self) -> int:
        return self.geo.m

    def eta(self, k: int = 0) -> np.ndarray:
        return self.etajets[k].value

    def endo_jet(self, k: int = 0) -> Jet:
        return self._endo_jets[k]

    def endo(self, k: int = 0) -> np.ndarray:
        return self._endo_jets[k].value

    @cached_property
    def _endo_jets(self) -> list[Jet]:
        return [self.geo.endo_jet(e) for e in self.etajets]

    @cached_property
    def _trace_jets(self) -> list[Jet]:
        return [h.trace().real for h in self._endo_jets]

    def trace_jet(self, k: int = 0) -> Jet:
        """Jet of the function ``tr^C h_k = Re tr(G^-1 eta_k)``."""
        return self._trace_jets[k]

    def dtrace(self, k: int = 0) -> np.ndarray:
        """``dz`` components of ``d tr^C h_k``."""
        p1 = self._trace_jets[k].parts[1]
        return np.moveaxis(0.5 * (p1[0::2] - 1j * p1[1::2]), 0, 1)

    def require_u(self) -> Jet:
        if self.ujet is None:
            raise ValueError("this variation needs a scalar field u")
        return self.ujet

    def h_real(self, k: int = 0) -> np.ndarray:
        return A.endo_to_real(self.endo(k))


def _pair_vec(x: np.ndarray) -> np.ndarray:
    """Components of a real vector along ``(d_1..d_m, d_1bar..d_mbar)``."""
    return np.concatenate([x, np.conj(x)], axis=-1)


# --------------------------------------------------------- first variations
def var_connection(inp: VariationInput, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``nabla'_X Y = 1/2[(nabla_X h)(Y) - J (nabla_{JX} h)(Y)]``.

    The two halves combine into the (1,0) part ``X^l (nabla_l h)(Y)``.
    """
    first = inp.geo.first_cov(inp.endo_jet(0))
    out = np.zeros_like(np.asarray(y, dtype=complex))
    for l in range(inp.m):
        out = out + x[:, l, None] * np.einsum("nij,nj->ni", first[l].value, y)
    return out


def var_trace(inp: VariationInput, a: np.ndarray) -> np.ndarray:
    """``(Tr^C)'(alpha) = -1/2 g(h, rho^-1(alpha))``."""
    return -0.5 * A.inner_sym(inp.g, inp.eta(0), a)


def var_curvature(inp: VariationInput, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``Omega'(X, Y)`` on (1,0) vectors for constant coordinate fields ``X, Y``.

    ``2 Omega' = [Omega(X,Y), h] + J (nabla_X nabla_{JY} h - nabla_Y nabla_{JX} h)``.
    """
    geo = inp.geo
    h = inp.endo_jet(0)
    d2 = geo.second_cov(h)
    coeff = np.einsum("ni,nj->nji", x, np.conj(y)) - np.einsum("ni,nj->nji", y, np.conj(x))
    omega_xy = np.einsum("nji,njiab->nab", coeff, geo.curvature_endo)
    vx, vy = _pair_vec(x), _pair_vec(y)
    vjx, vjy = _pair_vec(1j * x), _pair_vec(1j * y)
    xjy = np.einsum("na,nb,nabij->nij", vx, vjy, d2)
    yjx = np.einsum("na,nb,nabij->nij", vy, vjx, d2)
    return 0.5 * (_comm(omega_xy, h.value) + 1j * (xjy - yjx))


def curvature_on(geo: ChernGeometry, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``Omega(X, Y)`` on (1,0) vectors for real vectors ``X, Y``."""
    coeff = np.einsum("ni,nj->nji", x, np.conj(y)) - np.einsum("ni,nj->nji", y, np.conj(x))
    return np.einsum("nji,njiab->nab", coeff, geo.curvature_endo)


def var_ricci_form(inp: VariationInput) -> np.ndarray:
    """``S~' = 1/2 dd^c(tr^C h)`` as a (1,1)-form matrix."""
    return 0.5 * ddc_scalar(inp.trace_jet(0))


def var_lee(inp: VariationInput) -> np.ndarray:
    """``theta' = d(tr^C h) - delta^nabla h`` in ``dz`` components."""
    first = inp.geo.first_cov(inp.endo_jet(0))
    chern_div = sum(first[i].value[:, i, :] for i in range(inp.m))
    return inp.dtrace(0) - chern_div


def _divergences(inp: VariationInput, k: int) -> tuple[np.ndarray, np.ndarray]:
    """``(delta_g h_k, delta^nabla h_k)`` in ``dz`` components."""
    geo = inp.geo
    hjet = inp.endo_jet(k)
    first = geo.first_cov(hjet)
    chern_div = sum(first[i].value[:, i, :] for i in range(inp.m))
    hr = hjet.truncate(1)._map(lambda _, p: A.endo_to_real(p))
    dh = np.moveaxis(hr.parts[1], 0, 1)
    lc, hv = geo.lc, hr.value
    div_real = np.einsum("naab->nb", dh) + np.einsum("naad,ndb->nb", lc, hv) - np.einsum("nad,ndab->nb", hv, lc)
    return A.oneform_from_real(div_real), chern_div


def _du(ujet: Jet) -> np.ndarray:
    p1 = ujet.parts[1]
    return np.moveaxis(0.5 * (p1[0::2] - 1j * p1[1::2]), 0, 1)


def var_laplacian(inp: VariationInput) -> np.ndarray:
    """``Delta'u = g(Hess u, h) + g(du, delta_g h) - g(du, d tr^C h)``."""
    u = inp.require_u()
    geo = inp.geo
    hess = geo.g_real_inv @ geo.hessian(u)
    delta_g, _ = _divergences(inp, 0)
    du = _du(u)
    return (
        A.inner_endo(geo.g_real, hess, inp.h_real(0))
        + A.inner_oneform(inp.g, du, delta_g)
        - A.inner_oneform(inp.g, du, inp.dtrace(0))
    )


def var_ricci_endo(inp: VariationInput, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``g(S'(X), Y) = -g((h S)(X), Y) + 1/2 dd^c(tr^C h)(X, JY)``."""
    hs = inp.endo(0) @ inp.geo.ricci_endo
    hsx = np.einsum("nij,nj->ni", hs, x)
    return -A.metric_apply(inp.g, hsx, y) + A.form_apply(var_ricci_form(inp), x, 1j * y)


def var_pairing(inp: VariationInput, alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """``g(alpha, beta)' = -g(alpha o h, beta)`` for one-forms in ``dz`` components."""
    ah = np.einsum("nk,nki->ni", alpha, inp.endo(0))
    return -A.inner_oneform(inp.g, ah, beta)


# ------------------------------------------------------- gamma and adjoint
def gamma_parts(inp: VariationInput, k: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Both closed forms of ``gamma(h)``: with ``tr^C`` and with ``tr^R = 2 tr^C``."""
    geo = inp.geo
    f = inp.trace_jet(k)
    theta = geo.theta
    hs = A.inner_sym(inp.g, inp.eta(k), geo.ricci)
    complex_form = geo.laplacian(f) + A.inner_oneform(inp.g, inp.dtrace(k), theta) - hs
    fr = 2.0 * f
    dfr = 2.0 * inp.dtrace(k)
    real_form = 0.5 * (geo.laplacian(fr) + A.inner_oneform(inp.g, dfr, theta)) - hs
    return complex_form, real_form


def gamma(inp: VariationInput, k: int = 0) -> np.ndarray:
    """Linearized Chern scalar curvature ``Delta tr^C h + g(d tr^C h, theta) - g(h, S)``.

    Examples
    --------
    On the Hopf surface with ``h = Id`` the value is ``-4``.
    """
    a, b = gamma_parts(inp, k)
    defect = float(np.max(np.abs(a - b), initial=0.0))
    if defect > 1e-12 * max(1.0, float(np.max(np.abs(a), initial=0.0))):
        raise A.GeometryError(f"gamma forms disagree by {defect:.3e}")
    return a


def gamma_star(geo: ChernGeometry | VariationInput, ujet: Jet | None = None) -> A.Sym11Value:
    """Formal adjoint ``1/2(Delta u - g(du, theta) + (d^* theta) u) Id - u S``."""
    if isinstance(geo, VariationInput):
        ujet = geo.require_u() if ujet is None else ujet
        geo = geo.geo
    if ujet is None:
        raise ValueError("gamma_star needs a scalar field u")
    u = ujet.value
    coeff = 0.5 * (geo.laplacian(ujet) - A.inner_oneform(geo.g, _du(ujet), geo.theta) + geo.dstar_theta * u)
    eta = coeff[:, None, None] * geo.g - u[:, None, None] * geo.ricci
    return A.Sym11Value(eta, geo.g)


# ------------------------------------------------------- second variation
def second_var(inp: VariationInput, kahler_check: bool | None = None) -> np.ndarray:
    """Second differential of the Chern scalar curvature in directions ``(h1, h2)``.

    With a single perturbation ``h1 = h2``.  When the metric is Kahler at the
    given points (torsion below ``1e-10``), the Kahler form of the formula is
    evaluated too and must agree to ``1e-10``.
    """
    geo = inp.geo
    k1, k2 = 0, len(inp.etajets) - 1
    g = inp.g
    f1 = inp.trace_jet(k1)
    df1 = inp.dtrace(k1)
    hess1 = geo.g_real_inv @ geo.hessian(f1)
    delta_g2, delta_c2 = _divergences(inp, k2)
    theta_h2 = np.einsum("nk,nki->ni", geo.theta, inp.endo(k2))
    h1, h2 = inp.endo(k1), inp.endo(k2)
    h2s = h2 @ geo.ricci_endo
    ddc2 = ddc_scalar(inp.trace_jet(k2))
    value = (
        A.inner_endo(geo.g_real, hess1, inp.h_real(k2))
        + A.inner_oneform(g, df1, delta_g2 - delta_c2)
        - A.inner_oneform(g, df1, theta_h2)
        + 2.0 * np.einsum("nij,nji->n", h1, h2s).real
        - 0.5 * A.inner_sym(g, inp.eta(k1), ddc2)
    )
    if kahler_check is None:
        kahler_check = float(np.max(np.abs(geo.torsion), initial=0.0)) <= KAHLER_TOL
    if kahler_check:
        alt = second_var_kahler(inp)
        defect = float(np.max(np.abs(value - alt), initial=0.0))
        if defect > KAHLER_TOL * max(1.0, float(np.max(np.abs(value), initial=0.0))):
            raise A.GeometryError(f"Kahler second-variation forms disagree by {defect:.3e}")
    return value


def second_var_kahler(inp: VariationInput) -> np.ndarray:
    """``g(Hess tr^C h1, h2) + g(h1, Hess tr^C h2) + g(h1, h2 Ric)`` (Kahler metrics only)."""
    geo = inp.geo
    k1, k2 = 0, len(inp.etajets) - 1
    hess1 = geo.g_real_inv @ geo.hessian(inp.trace_jet(k1))
    hess2 = geo.g_real_inv @ geo.hessian(inp.trace_jet(k2))
    h2s = inp.endo(k2) @ geo.ricci_endo
    return (
        A.inner_endo(geo.g_real, hess1, inp.h_real(k2))
        + A.inner_endo(geo.g_real, inp.h_real(k1), hess2)
        + 2.0 * np.einsum("nij,nji->n", inp.endo(k1), h2s).real
    )


def second_order_path(gjet: Jet, etajet: Jet, t: float) -> Jet:
    """``G exp(t H)`` to second order, ``G + t eta + t^2/2 eta G^-1 eta``.

    Along this path the endomorphism ``h`` is transported as a fixed tensor,
    so its second derivative at ``t = 0`` is the iterated derivative that the
    second-variation formula describes.  The linear path ``G + t eta`` differs
    by the first variation in the direction ``h o h``.
    """
    ginv = J.inv(gjet)
    return gjet + t * etajet + (0.5 * t * t) * (etajet @ ginv @ etajet)


# ------------------------------------------------------------- obstruction
@dataclass
class ObstructionReport:
    manifold: str
    u_desc: str
    h_desc: str
    value: float
    quad_order: int
    est_error: float
    residuals: dict = field(default_factory=dict)
    nodes: int = 0
    seconds: float = 0.0

    @property
    def quotable(self) -> bool:
        return self.est_error < 1e-4 * max(1.0, abs(self.value))


def _sym_norm(v: A.Sym11Value) -> np.ndarray:
    return np.sqrt(np.maximum(A.inner_sym(v.g, v.eta, v.eta), 0.0))


def _obstruction_integral(spec, rule, u_field, h_field, threads):
    stats: list[tuple[float, float]] = []

    def integrand(nodes):
        g = spec.metric(nodes, 2)
        h = h_field(nodes, 2)
        u = u_field(nodes, 2)
        inp = VariationInput(g, (h,), u)
        gs = float(np.max(_sym_norm(gamma_star(inp)), initial=0.0))
        gh = float(np.max(np.abs(gamma(inp)), initial=0.0))
        stats.append((gs, gh))
        return u.value * second_var(inp, kahler_check=spec.is_kahler)

    value = integrate(integrand, rule, threads=threads)
    gs = max(s[0] for s in stats)
    gh = max(s[1] for s in stats)
    return value, gs, gh


def obstruction(
    spec: ManifoldSpec,
    rule: QuadratureRule,
    u_field: Field,
    h_field: Field,
    u_desc: str = "u",
    h_desc: str = "h",
    coarse_rule: QuadratureRule | None = None,
    threads: int | None = None,
    tol: float = KERNEL_TOL,
) -> ObstructionReport:
    """``int u (scal^Ch)''(h, h)`` with kernel validation of ``u`` and ``h``.

    Raises
    ------
    KernelError
        If ``max |gamma^*(u)|`` or ``max |gamma(h)|`` over the nodes exceeds ``tol``.
    """
    start = time.perf_counter()
    value, gs, gh = _obstruction_integral(spec, rule, u_field, h_field, threads)
    residuals = {"gamma_star_u": gs, "gamma_h": gh}
    if gs > tol:
        raise KernelError(f"u is not in the kernel of gamma*: max residual {gs:.3e} > {tol:g}")
    if gh > tol:
        raise KernelError(f"h is not in the kernel of gamma: max residual {gh:.3e} > {tol:g}")
    est = float("nan")
    if coarse_rule is not None:
        coarse, _, _ = _obstruction_integral(spec, coarse_rule, u_field, h_field, threads)
        est = abs(value - coarse)
    return ObstructionReport(
        spec.name,
        u_desc,
        h_desc,
        value,
        rule.order,
        est,
        residuals,
        rule.size,
        time.perf_counter() - start,
    )


WITNESS_VALUE = 128.0 * np.pi**2 / 3.0


def validate_einstein_eigenfunction(spec: ManifoldSpec, u_field: Field, n_points: int = 200, seed: int = 0) -> dict:
    """Check that ``spec`` is first-Chern-Einstein and ``u`` an eigenfunction.

    Returns the residuals; raises :class:`KernelError` when the metric is not
    Einstein (``fce_residual > 1e-9``), the scalar curvature is not
    constant, or ``Delta u != (lambda / m) u`` beyond ``1e-8``.
    """
    pts = spec.sample(make_rng(seed, spec.name, "witness-validation"), n_points)
    geo = ChernGeometry(jet_eval(spec, spec.metric, pts, 2))
    fce = float(np.max(fce_residual(geo)))
    lam = float(np.mean(geo.scal))
    lam_spread = float(np.max(np.abs(geo.scal - lam)))
    u = jet_eval(spec, u_field, pts, 2)
    eig = float(np.max(np.abs(geo.laplacian(u) - (lam / spec.m) * u.value)))
    out = {"fce_residual": fce, "lambda": lam, "lambda_spread": lam_spread, "eigen_residual": eig}
    if fce > 1e-9 or lam_spread > 1e-9:
        raise KernelError(f"metric is not first-Chern-Einstein: residual {fce:.3e}, scal spread {lam_spread:.3e}")
    if eig > KERNEL_TOL:
        raise KernelError(f"u is not a (lambda/m)-eigenfunction: residual {eig:.3e}")
    return out


WITNESS_AZIMUTH = 16


def instability_witness(
    n: int = 32,
    n_phi: int = WITNESS_AZIMUTH,
    threads: int | None = None,
    u_shift: float = 0.0,
    constant_h: bool = False,
) -> ObstructionReport:
    """Obstruction integral on ``CP^1 x CP^1`` with ``u`` the first-factor height.

    The perturbation is ``h = (1 + u)(Id_1 + (-Id_2))``, which lies in the
    kernel of ``gamma`` at the product Kahler-Einstein metric; ``u`` lies in
    the kernel of ``gamma^*``.  The integral equals ``128 pi^2 / 3``, so the
    Chern scalar curvature map is not linearization stable there.

    The integrand is a polynomial of low degree in the embedding
    coordinates, so ``n_phi`` azimuth nodes per sphere (default 16)
    integrate it exactly in the azimuth; ``n`` is the Gauss-Legendre order
    in ``cos(theta)``.

    ``u_shift`` adds a constant to ``u`` (a non-kernel input, for negative
    tests); ``constant_h`` uses ``h = Id_1 + (-Id_2)`` as a zero control.
    """
    spec = make_manifold("fs_product", radii=(1.0, 1.0))
    height = scalar_preset(spec, "height")

    def u_field(pts, order):
        return height(pts, order) + u_shift

    checks = validate_einstein_eigenfunction(spec, u_field)
    if constant_h:
        h_field = perturbation_preset(spec, "traceless")
        h_desc = "Id_1 + (-Id_2)"
    else:
        h_field = perturbation_preset(spec, "witness", scalar=height)
        h_desc = "(1 + u)(Id_1 + (-Id_2))"
    rule = quadrature_rule(spec, n, n_phi)
    coarse = quadrature_rule(spec, max(2, n // 2), max(2, n_phi // 2))
    report = obstruction(
        spec, rule, u_field, h_field, "first-factor height", h_desc, coarse_rule=coarse, threads=threads
    )
    report.residuals.update(checks)
    return report
