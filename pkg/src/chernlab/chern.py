"""Chern connection quantities of a Hermitian metric at a batch of points.

All functions take the metric as a :class:`~chernlab.jets.Jet` whose value
has shape ``(N, m, m)`` (one batch axis).  Index conventions for returned
arrays, after the batch axis:

``christoffel[k, i, j]``
    ``Gamma^k_{ij}``, the Chern connection ``nabla_{d_i} d_j = Gamma^k_{ij} d_k``.
``curvature[j, i, l, k]``
    ``Omega_{jbar i lbar k}``.
``ricci[j, i]``
    matrix of the Chern-Ricci form ``rho_g(S)`` in the package convention.
``torsion[k, i, j]``
    ``T^k_{ij}``; the Lee form is ``theta_i = T^k_{ik}`` summed over ``k``.

Real-coordinate arrays use the order ``(x^1, y^1, ..., x^m, y^m)``.
"""

from __future__ import annotations

from functools import cached_property
from typing import NamedTuple

import numpy as np

from . import algebra as A
from . import jets as J
from .jets import Jet

__all__ = [
    "ChernGeometry",
    "TorsionLee",
    "chern_christoffel",
    "chern_curvature",
    "chern_ricci",
    "ricci_logdet",
    "chern_scalar",
    "torsion_and_lee",
    "lee_form_frame",
    "ddc_scalar",
    "levi_civita",
    "riemannian_scalar",
    "divergences",
    "chern_cov_deriv",
    "fce_residual",
    "commutator_defect",
]

CROSS_CHECK_RTOL = 1e-10


def _dz_arr(jet: Jet) -> np.ndarray:
    """``d_k f`` with the derivative index right after the batch axis."""
    p1 = jet.parts[1]
    return np.moveaxis(0.5 * (p1[0::2] - 1j * p1[1::2]), 0, 1)


def _ddbar_arr(jet: Jet) -> np.ndarray:
    """``d_i d_jbar f`` arranged as ``[N, j, i, ...]``."""
    p2 = jet.parts[2]
    xx, xy = p2[0::2, 0::2], p2[0::2, 1::2]
    yx, yy = p2[1::2, 0::2], p2[1::2, 1::2]
    d = 0.25 * (xx + 1j * xy - 1j * yx + yy)  # [i, j, N, ...]
    return np.moveaxis(d, (0, 1), (2, 1))


def _cross_check(name: str, a: np.ndarray, b: np.ndarray, rtol: float = CROSS_CHECK_RTOL) -> float:
    defect = float(np.max(np.abs(a - b), initial=0.0))
    scale = max(1.0, float(np.max(np.abs(b), initial=0.0)))
    if defect > rtol * scale:
        raise A.GeometryError(f"{name} cross-check failed: defect {defect:.3e} (scale {scale:.3e})")
    return defect


def _comm(a, b):
    return a @ b - b @ a


class TorsionLee(NamedTuple):
    torsion: np.ndarray
    theta: np.ndarray
    dstar_theta: np.ndarray


class ChernGeometry:
    """Lazily computed Chern and Levi-Civita data of one metric jet.

    Parameters
    ----------
    gjet : Jet
        Metric jet of order at least 2, value shape ``(N, m, m)``.
    """

    def __init__(self, gjet: Jet):
        if gjet.order < 2:
            raise ValueError(f"metric jet must have order >= 2, got {gjet.order}")
        if gjet.value.ndim != 3:
            raise ValueError(f"metric value must have shape (N, m, m), got {gjet.shape}")
        A.check_metric(gjet.value)
        self.gjet = gjet
        self.m = gjet.shape[-1]
        self.n = 2 * self.m

    # ---------------------------------------------------------- basic
    @property
    def g(self) -> np.ndarray:
        return self.gjet.value

    @cached_property
    def ginv(self) -> np.ndarray:
        return np.linalg.inv(self.g)

    @cached_property
    def ginv_jet(self) -> Jet:
        return J.inv(self.gjet.truncate(self.gjet.order - 1))

    @cached_property
    def ginv_full(self) -> Jet:
        return J.inv(self.gjet)

    def endo_jet(self, etajet: Jet) -> Jet:
        """Jet of ``H = G^-1 eta`` at the order of the inputs."""
        return self.ginv_full @ etajet

    @cached_property
    def gamma_jets(self) -> list[Jet]:
        """``Gamma_i = G^-1 d_i G`` as jets; entry ``[k, j] = Gamma^k_{ij}``."""
        return [self.ginv_jet @ self.gjet.dz(i) for i in range(self.m)]

    @cached_property
    def christoffel(self) -> np.ndarray:
        return np.stack([gj.value for gj in self.gamma_jets], axis=-2)

    # ------------------------------------------------------ curvature
    @cached_property
    def dg(self) -> np.ndarray:
        return _dz_arr(self.gjet)  # [N, i, l, k]

    @cached_property
    def curvature(self) -> np.ndarray:
        dg = self.dg
        dbg = np.conj(np.swapaxes(dg, -1, -2))  # d_jbar G = (d_j G)^H
        quad = np.einsum("njlr,nrs,nisk->njilk", dbg, self.ginv, dg)
        return -_ddbar_arr(self.gjet) + quad

    @cached_property
    def curvature_endo(self) -> np.ndarray:
        """``Omega(d_i, d_jbar)`` acting on (1,0) vectors, ``[N, j, i, :, :]``."""
        return -np.einsum("nab,njibc->njiac", self.ginv, self.curvature)

    @cached_property
    def ricci(self) -> np.ndarray:
        return np.einsum("nkl,njilk->nji", self.ginv, self.curvature)

    @cached_property
    def ricci_logdet(self) -> np.ndarray:
        return -_ddbar_arr(J.logdet(self.gjet))

    @cached_property
    def ricci_endo(self) -> np.ndarray:
        return self.ginv @ self.ricci

    @cached_property
    def scal(self) -> np.ndarray:
        return 2.0 * np.einsum("nkl,nij,njilk->n", self.ginv, self.ginv, self.curvature).real

    # ------------------------------------------------- torsion and Lee
    @cached_property
    def torsion(self) -> np.ndarray:
        gam = self.christoffel
        return gam - np.swapaxes(gam, -1, -2)

    @cached_property
    def theta_jet(self) -> Jet:
        m = self.m
        comps = []
        for i in range(m):
            t = None
            for k in range(m):
                term = self.gamma_jets[i][..., k, k] - self.gamma_jets[k][..., k, i]
                t = term if t is None else t + term
            comps.append(t)
        return J.stack(comps, axis=-1)

    @property
    def theta(self) -> np.ndarray:
        return self.theta_jet.value

    @cached_property
    def dstar_theta(self) -> np.ndarray:
        return self.codifferential(self.theta_jet)

    # ------------------------------------------------ real coordinates
    @cached_property
    def real_jet(self) -> Jet:
        return A.to_real(self.gjet)

    @property
    def g_real(self) -> np.ndarray:
        return self.real_jet.value

    @cached_property
    def g_real_inv(self) -> np.ndarray:
        return np.linalg.inv(self.g_real)

    @cached_property
    def lc_jet(self) -> Jet:
        """Levi-Civita symbols ``Gamma^c_{ab}`` as a jet, value ``[N, c, a, b]``."""
        r = self.real_jet
        n = self.n
        rinv = J.inv(r.truncate(r.order - 1))
        d = [r.partial(a) for a in range(n)]  # d[a][..., x, y] = d_a R_xy
        d_arr = J.stack(d, axis=-3)  # [N, a, x, y]
        # lowered symbols [N, d, a, b] = 1/2 (d_a R_db + d_b R_da - d_d R_ab)
        low = 0.5 * (
            d_arr._map(lambda k, p: np.swapaxes(p, -3, -2))
            + d_arr._map(lambda k, p: np.moveaxis(p, -3, -1))
            - d_arr
        )
        return J.einsum("cd,dab->cab", rinv, low)

    @property
    def lc(self) -> np.ndarray:
        return self.lc_jet.value

    @cached_property
    def sqrt_det_jet(self) -> Jet:
        return J.exp(0.5 * J.logdet(self.real_jet.truncate(1)).real)

    def codifferential(self, form_jet: Jet) -> np.ndarray:
        """``d^* alpha`` of a real one-form jet given by ``dz`` components."""
        real = J.stack(
            [c for i in range(self.m) for c in (2.0 * form_jet[..., i].real, -2.0 * form_jet[..., i].imag)],
            axis=-1,
        ).truncate(1)
        rinv = J.inv(self.real_jet.truncate(1))
        vec = self.sqrt_det_jet[..., None] * J.einsum("ab,b->a", rinv, real)
        div = sum(vec.parts[1][a][..., a] for a in range(self.n))
        return (-div / self.sqrt_det_jet.value).real

    def hessian(self, ujet: Jet) -> np.ndarray:
        """Covariant Hessian ``[N, a, b]`` (lower indices) of a scalar jet."""
        du = np.moveaxis(ujet.parts[1], 0, -1)
        ddu = np.moveaxis(ujet.parts[2], (0, 1), (-2, -1))
        return ddu - np.einsum("ncab,nc->nab", self.lc, du)

    def laplacian(self, ujet: Jet) -> np.ndarray:
        """Positive Laplacian ``d^* d u``."""
        return -np.einsum("nab,nab->n", self.g_real_inv, self.hessian(ujet))

    # ------------------------------------------- derivatives of endos
    def _direction(self, a: int, jet: Jet) -> Jet:
        return jet.dz(a) if a < self.m else jet.dzb(a - self.m)

    def first_cov(self, hjet: Jet) -> list[Jet]:
        """``nabla_a h`` (on (1,0) vectors) for the ``2m`` complex directions."""
        out = []
        for a in range(2 * self.m):
            k = self._direction(a, hjet)
            if a < self.m:
                gam = self.gamma_jets[a]
                k = k + (gam @ hjet - hjet @ gam)
            out.append(k)
        return out

    def second_cov(self, hjet: Jet) -> np.ndarray:
        """``nabla_a (nabla_b h)`` with coordinate fields, ``[N, a, b, :, :]``."""
        first = self.first_cov(hjet)
        rows = []
        for a in range(2 * self.m):
            row = []
            for b in range(2 * self.m):
                v = self._direction(a, first[b]).value
                if a < self.m:
                    v = v + _comm(self.christoffel[:, :, a, :], first[b].value)
                row.append(v)
            rows.append(np.stack(row, axis=1))
        return np.stack(rows, axis=1)


# ----------------------------------------------------------- public API
def _geom(gjet) -> ChernGeometry:
    return gjet if isinstance(gjet, ChernGeometry) else ChernGeometry(gjet)


def chern_christoffel(gjet) -> np.ndarray:
    """Chern Christoffel symbols ``[N, k, i, j]``; the antiholomorphic ones vanish."""
    return _geom(gjet).christoffel


def chern_curvature(gjet) -> np.ndarray:
    """Chern curvature components ``Omega_{jbar i lbar k}`` as ``[N, j, i, l, k]``."""
    return _geom(gjet).curvature


def ricci_logdet(gjet) -> np.ndarray:
    """Chern-Ricci form matrix from ``-d dbar log det G``."""
    return _geom(gjet).ricci_logdet


def chern_ricci(gjet) -> tuple[np.ndarray, A.Sym11Value]:
    """Chern-Ricci form matrix and the endomorphism ``S``.

    The contraction of the curvature is cross-checked against
    ``-d dbar log det G``; a mismatch raises :class:`GeometryError`.

    Examples
    --------
    On the Hopf surface at ``z = (1, 0)`` the form is ``diag(0, 2)``.
    """
    geo = _geom(gjet)
    _cross_check("Ricci form", geo.ricci, geo.ricci_logdet)
    return geo.ricci, A.Sym11Value(geo.ricci, geo.g)


def chern_scalar(gjet) -> np.ndarray:
    """Chern scalar curvature ``2 g^{k lbar} g^{i jbar} Omega_{jbar i lbar k}``.

    Cross-checked against ``2 Tr^C`` of the log-det Ricci form.

    Examples
    --------
    The Hopf surface has constant value 4 and the unit ``CP^1`` has 2.
    """
    geo = _geom(gjet)
    _cross_check("scalar curvature", geo.scal, 2.0 * A.trace_form(geo.g, geo.ricci_logdet))
    return geo.scal


def torsion_and_lee(gjet) -> TorsionLee:
    """Torsion ``T^k_{ij}``, Lee form ``dz`` components and ``d^* theta``.

    The Lee form is cross-checked against the frame formula
    ``theta(X) = Tr^C_g(X contracted into d omega)`` on a few directions.
    """
    geo = _geom(gjet)
    probes = np.eye(geo.m, dtype=complex)
    probes = np.concatenate([probes, 1j * probes, np.full((1, geo.m), 0.3 - 0.7j)])
    for x in probes:
        xs = np.broadcast_to(x, geo.theta.shape)
        direct = 2.0 * np.einsum("ni,ni->n", geo.theta, xs).real
        _cross_check("Lee form", direct, lee_form_frame(geo, xs))
    return TorsionLee(geo.torsion, geo.theta, geo.dstar_theta)


def lee_form_frame(gjet, x: np.ndarray) -> np.ndarray:
    """``theta(X)`` from ``Tr^C_g(X contracted into d omega)`` in real coordinates."""
    geo = _geom(gjet)
    jr = A.j_real(geo.m)
    omega = jr.T @ geo.real_jet  # omega_ab = g(J d_a, d_b)
    dw = np.moveaxis(omega.parts[1], 0, 1)  # [N, a, b, c] = d_a omega_bc
    d_omega = dw + np.einsum("nbca->nabc", dw) + np.einsum("ncab->nabc", dw)
    xr = A.vector_to_real(x)
    b = np.einsum("na,nabc->nbc", xr, d_omega)
    return 0.5 * np.einsum("nbc,cd,ndb->n", b, jr, geo.g_real_inv)


def ddc_scalar(ujet: Jet) -> np.ndarray:
    """Matrix ``-2 d_i d_jbar u`` of the real (1,1)-form ``dd^c u``."""
    return -2.0 * _ddbar_arr(ujet)


def levi_civita(gjet, ujet: Jet) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Positive Laplacian, Hessian endomorphism and Levi-Civita symbols.

    Returns
    -------
    lap : ndarray ``(N,)``
    hess : ndarray ``(N, 2m, 2m)``, the endomorphism ``X -> nabla_X grad u``
    lc : ndarray ``(N, 2m, 2m, 2m)``, ``Gamma^c_{ab}``
    """
    geo = _geom(gjet)
    h = geo.hessian(ujet)
    return geo.laplacian(ujet), geo.g_real_inv @ h, geo.lc


def riemannian_scalar(gjet) -> np.ndarray:
    """Riemannian scalar curvature from the Levi-Civita symbols (needs order 3)."""
    geo = _geom(gjet)
    if geo.gjet.order < 3:
        raise ValueError("riemannian_scalar needs a metric jet of order >= 3")
    lc = geo.lc_jet
    gam = lc.value
    dgam = np.moveaxis(lc.parts[1], 0, 1)  # [N, e, c, a, b] = d_e Gamma^c_ab
    # Ric_bd = d_a Gamma^a_db - d_d Gamma^a_ab + Gamma^a_ae Gamma^e_db - Gamma^a_de Gamma^e_ab
    ric = (
        np.einsum("naadb->ndb", dgam)
        - np.einsum("ndaab->ndb", dgam)
        + np.einsum("naae,nedb->ndb", gam, gam)
        - np.einsum("nade,neab->ndb", gam, gam)
    )
    return np.einsum("nbd,ndb->n", geo.g_real_inv, ric)


def divergences(gjet, etajet: Jet) -> tuple[np.ndarray, np.ndarray]:
    """``(delta_g h, delta^nabla h)`` as ``dz`` components.

    ``delta_g`` is the Levi-Civita divergence ``(D_a h)^a_b`` and
    ``delta^nabla`` the Chern one ``(nabla_i h)^i_j``, for ``h = G^-1 eta``.
    """
    geo = _geom(gjet)
    hjet = geo.ginv_jet @ etajet
    first = geo.first_cov(hjet)
    chern = sum(first[i].value[:, i, :] for i in range(geo.m))
    hr = hjet.truncate(1)._map(lambda k, p: A.endo_to_real(p))
    dh = np.moveaxis(hr.parts[1], 0, 1)  # [N, a, c, b]
    lc = geo.lc
    hv = hr.value
    div_real = (
        np.einsum("naab->nb", dh)
        + np.einsum("naad,ndb->nb", lc, hv)
        - np.einsum("nad,ndab->nb", hv, lc)
    )
    return A.oneform_from_real(div_real), chern


def chern_cov_deriv(gjet, etajet: Jet, order: int = 1) -> np.ndarray:
    """Chern covariant derivatives of ``h = G^-1 eta`` on (1,0) vectors.

    Directions ``a < m`` are ``d/dz^a`` and ``a >= m`` are ``d/dzbar^(a-m)``.
    ``order=1`` returns ``[N, a, :, :]``; ``order=2`` returns the iterated
    derivative ``nabla_a nabla_b h`` along coordinate fields, ``[N, a, b, :, :]``.
    The Ricci identity ``[nabla_a, nabla_b] h = -[Omega(a, b), h]`` is checked.
    """
    geo = _geom(gjet)
    hjet = geo.endo_jet(etajet)
    if order == 1:
        return np.stack([k.value for k in geo.first_cov(hjet)], axis=1)
    if order != 2:
        raise ValueError("order must be 1 or 2")
    d2 = geo.second_cov(hjet)
    _cross_check("Ricci identity", commutator_defect(geo, hjet.value, d2), np.zeros(1))
    return d2


def commutator_defect(geo: ChernGeometry, h: np.ndarray, d2: np.ndarray) -> np.ndarray:
    """``[nabla_i, nabla_jbar] h + [Omega(d_i, d_jbar), h]`` for all ``i, j``."""
    m = geo.m
    out = np.empty(d2.shape[:1] + (m, m) + d2.shape[-2:], dtype=complex)
    for i in range(m):
        for j in range(m):
            lhs = d2[:, i, m + j] - d2[:, m + j, i]
            out[:, j, i] = lhs + _comm(geo.curvature_endo[:, j, i], h)
    scale = max(1.0, float(np.max(np.abs(d2))))
    return out / scale


def fce_residual(gjet) -> np.ndarray:
    """Pointwise ``|S - (scal / 2m) Id|_g``, zero on first-Chern-Einstein metrics."""
    geo = _geom(gjet)
    dev = geo.ricci - (geo.scal / (2 * geo.m))[:, None, None] * geo.g
    return np.sqrt(np.maximum(A.inner_sym(geo.g, dev, dev), 0.0))
