"""Verification harness: finite-difference oracles, identity suites and reports.

Every check compares an analytic quantity with an independent oracle on
seeded samples and produces a :class:`CheckReport`.  Relative errors are
normwise over the whole sample set::

    max_rel_err = max |analytic - oracle| / max |oracle|

so isolated near-zero oracle values do not inflate the error.

Check modes
-----------
``rel``
    pass iff ``max_rel_err <= tol``.
``abs``
    pass iff ``max_abs_err <= tol`` (identities on unit-scaled fields).
``lower_bound``
    pass iff the observed quantity (stored in ``max_abs_err``) exceeds ``tol``.
``expect_fail``
    negative control; pass iff ``max_rel_err > tol``, i.e. the oracle is
    visibly broken by the deliberately bad setting.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import algebra as A
from . import jets as J
from . import linearization as L
from .chern import ChernGeometry, _dz_arr, commutator_defect, ddc_scalar, fce_residual, riemannian_scalar
from .manifolds import (
    ZOO,
    ManifoldSpec,
    jet_eval,
    make_rng,
    perturbation_preset,
    random_perturbation,
    random_scalar,
    scalar_preset,
    zoo,
)
from .quadrature import integrate, quadrature_rule

__all__ = [
    "CheckReport",
    "SuiteConfig",
    "FDResult",
    "fd_derivative",
    "richardson",
    "adjointness_test",
    "run_suite",
    "CHECKS",
    "DEFAULT_GRIDS",
]

DEFAULT_GRIDS = {
    "flat_torus1": 64,
    "flat_torus2": 16,
    "conformal_torus1": 32,
    "conformal_torus2": 16,
    "kahler_torus2": 16,
    "hopf": 16,
    "cp1": 32,
    "cp1xcp1": 32,
}
SPHERE_AZIMUTH = 16  # exact for the band-limited fields used here
ADJOINT_PAIRS = {"flat_torus1": 10}
ADJOINT_PAIRS_DEFAULT = 5


@dataclass
class CheckReport:
    check: str
    manifold: str
    seed: int
    samples: int
    max_abs_err: float
    max_rel_err: float
    tol: float
    passed: bool
    seconds: float
    mode: str = "rel"
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _powers_of_two(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass
class SuiteConfig:
    """Which checks to run where, with what seed, step sizes and grids."""

    manifolds: Sequence[str] = tuple(ZOO)
    checks: Sequence[str] | None = None
    seed: int = 42
    dts: Sequence[float] = (1e-2, 1e-3)
    samples: int = 20
    grids: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    include_heavy: bool = False
    threads: int | None = None

    def __post_init__(self):
        self.manifolds = tuple(self.manifolds)
        if not self.manifolds:
            raise ValueError("nothing to run: the manifold list is empty")
        unknown = [m for m in self.manifolds if m not in ZOO]
        if unknown:
            raise KeyError(f"unknown manifold(s) {unknown}; valid names: {', '.join(ZOO)}")
        if self.checks is not None:
            self.checks = tuple(self.checks)
            if not self.checks:
                raise ValueError("nothing to run: the check list is empty")
            bad = [c for c in self.checks if c not in CHECKS]
            if bad:
                raise KeyError(f"unknown check(s) {bad}; valid names: {', '.join(CHECKS)}")
        self.dts = tuple(float(d) for d in self.dts)
        if not self.dts or any(d <= 0 for d in self.dts) or any(a <= b for a, b in zip(self.dts, self.dts[1:])):
            raise ValueError(f"dt schedule must be positive and strictly decreasing, got {self.dts}")
        if self.samples < 1:
            raise ValueError("samples must be positive")
        grids = dict(DEFAULT_GRIDS)
        grids.update(self.grids)
        for name, n in grids.items():
            if not _powers_of_two(int(n)):
                raise ValueError(f"grid size for {name} must be a power of two, got {n}")
        self.grids = grids
        bad_tol = [c for c in self.tolerances if c not in CHECKS]
        if bad_tol:
            raise KeyError(f"tolerance override for unknown check(s) {bad_tol}")


# ------------------------------------------------------------ FD oracles
class FDResult(NamedTuple):
    value: np.ndarray
    error_estimate: float
    raw: tuple


def richardson(raw: Sequence[np.ndarray], dts: Sequence[float]) -> tuple[np.ndarray, float]:
    """Neville extrapolation to ``dt -> 0`` for errors even in ``dt``.

    Returns the extrapolated value and the change made by the last
    extrapolation level, a rough error estimate.
    """
    level = [np.asarray(r) for r in raw]
    prev_best = level[-1]
    for k in range(1, len(level)):
        nxt = []
        for i in range(k, len(raw)):
            ratio = (dts[i - k] / dts[i]) ** 2
            hi, lo = level[i - k + 1], level[i - k]
            nxt.append(hi + (hi - lo) / (ratio - 1.0))
        prev_best = level[-1]
        level = nxt
    best = level[-1]
    return best, float(np.max(np.abs(best - prev_best), initial=0.0))


def fd_derivative(
    fn: Callable[[J.Jet], np.ndarray],
    gjet: J.Jet,
    etajet: J.Jet,
    order: int = 1,
    dts: Sequence[float] = (1e-2, 1e-3),
) -> FDResult:
    """Centered finite-difference derivative of ``fn(g_t)`` at ``t = 0``.

    The first-order oracle moves along ``eta_t = G + t eta``; the second-order
    oracle along :func:`~chernlab.linearization.second_order_path`.  Steps are
    combined by Richardson extrapolation.

    Raises
    ------
    GeometryError
        If ``g_t`` is not positive definite at the largest step.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")

    def path(t):
        if order == 1:
            return gjet + t * etajet
        return L.second_order_path(gjet, etajet, t)

    big = max(dts)
    for t in (big, -big):
        try:
            A.check_metric(path(t).value)
        except A.GeometryError as exc:
            raise A.GeometryError(f"g_t is not positive definite at t = {t:g}; use smaller steps") from exc
    raw = []
    f0 = fn(gjet) if order == 2 else None
    for dt in dts:
        fp, fm = fn(path(dt)), fn(path(-dt))
        raw.append((fp - fm) / (2 * dt) if order == 1 else (fp - 2.0 * f0 + fm) / dt**2)
    if len(raw) == 1:
        return FDResult(raw[0], float("nan"), tuple(raw))
    value, err = richardson(raw, dts)
    return FDResult(value, err, tuple(raw))


def _errors(analytic, oracle) -> tuple[float, float]:
    a, o = np.asarray(analytic), np.asarray(oracle)
    abs_err = float(np.max(np.abs(a - o), initial=0.0))
    scale = float(np.max(np.abs(o), initial=0.0))
    rel = abs_err / scale if scale > 0 else (0.0 if abs_err == 0 else float("inf"))
    return abs_err, rel


# --------------------------------------------------------------- samples
class Sample(NamedTuple):
    points: np.ndarray
    inp: L.VariationInput
    x: np.ndarray
    y: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    form: np.ndarray


def _sample(spec: ManifoldSpec, cfg: SuiteConfig, check: str, n: int | None = None, u: bool = True) -> Sample:
    rng = make_rng(cfg.seed, check, spec.name)
    n = n or cfg.samples
    pts = spec.sample(rng, n)
    hfield = random_perturbation(spec, rng)
    ufield = random_scalar(spec, rng) if u else None
    inp = L.VariationInput.at(spec, pts, hfield, ufield)
    m = spec.m

    def cvec():
        return rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m))

    x, y, alpha, beta = cvec(), cvec(), cvec(), cvec()
    b = rng.normal(size=(n, m, m)) + 1j * rng.normal(size=(n, m, m))
    form = 0.5 * (b + np.conj(np.swapaxes(b, -1, -2)))
    return Sample(pts, inp, x, y, alpha, beta, form)


class Outcome(NamedTuple):
    abs_err: float
    rel_err: float
    samples: int
    params: dict


def _outcome(analytic, oracle, samples, **params) -> Outcome:
    a, r = _errors(analytic, oracle)
    return Outcome(a, r, samples, params)


# --------------------------------------------------------- check registry
@dataclass(frozen=True)
class CheckDef:
    name: str
    fn: Callable[[ManifoldSpec, SuiteConfig], Outcome]
    tol: float
    mode: str = "rel"
    applies: Callable[[ManifoldSpec], bool] = lambda spec: True
    heavy: bool = False


CHECKS: dict[str, CheckDef] = {}


def register(name: str, tol: float, mode: str = "rel", applies=None, heavy: bool = False):
    def deco(fn):
        CHECKS[name] = CheckDef(name, fn, tol, mode, applies or (lambda spec: True), heavy)
        return fn

    return deco


def _only(*names):
    return lambda spec: spec.name in names


def _kahler(spec):
    return spec.is_kahler


def _fd_first(spec, cfg, check, analytic_fn, oracle_fn, u=True):
    s = _sample(spec, cfg, check, u=u)
    analytic = analytic_fn(s)
    fd = fd_derivative(lambda gj: oracle_fn(s, ChernGeometry(gj)), s.inp.geo.gjet, s.inp.etajets[0], 1, cfg.dts)
    return _outcome(analytic, fd.value, len(s.points), dts=list(cfg.dts), fd_error_estimate=fd.error_estimate)


@register("fd_gamma", 1e-6)
def _fd_gamma(spec, cfg):
    return _fd_first(spec, cfg, "fd_gamma", lambda s: L.gamma(s.inp), lambda s, geo: geo.scal, u=False)


@register("fd_connection", 1e-6)
def _fd_connection(spec, cfg):
    def oracle(s, geo):
        return np.einsum("nkij,ni,nj->nk", geo.christoffel, s.x, s.y)

    return _fd_first(spec, cfg, "fd_connection", lambda s: L.var_connection(s.inp, s.x, s.y), oracle, u=False)


@register("fd_trace", 1e-6)
def _fd_trace(spec, cfg):
    return _fd_first(
        spec, cfg, "fd_trace", lambda s: L.var_trace(s.inp, s.form), lambda s, geo: A.trace_form(geo.g, s.form), u=False
    )


@register("fd_curvature", 1e-6)
def _fd_curvature(spec, cfg):
    return _fd_first(
        spec,
        cfg,
        "fd_curvature",
        lambda s: L.var_curvature(s.inp, s.x, s.y),
        lambda s, geo: L.curvature_on(geo, s.x, s.y),
        u=False,
    )


@register("fd_ricci_form", 1e-6)
def _fd_ricci_form(spec, cfg):
    return _fd_first(spec, cfg, "fd_ricci_form", lambda s: L.var_ricci_form(s.inp), lambda s, geo: geo.ricci, u=False)


@register("fd_lee", 1e-6, applies=lambda spec: True)
def _fd_lee(spec, cfg):
    return _fd_first(spec, cfg, "fd_lee", lambda s: L.var_lee(s.inp), lambda s, geo: geo.theta, u=False)


@register("fd_laplacian", 1e-6)
def _fd_laplacian(spec, cfg):
    return _fd_first(
        spec, cfg, "fd_laplacian", lambda s: L.var_laplacian(s.inp), lambda s, geo: geo.laplacian(s.inp.ujet)
    )


@register("fd_ricci_endo", 1e-6)
def _fd_ricci_endo(spec, cfg):
    def oracle(s, geo):
        sx = np.einsum("nij,nj->ni", geo.ricci_endo, s.x)
        return A.metric_apply(s.inp.g, sx, s.y)

    return _fd_first(spec, cfg, "fd_ricci_endo", lambda s: L.var_ricci_endo(s.inp, s.x, s.y), oracle, u=False)


@register("fd_pairing", 1e-6)
def _fd_pairing(spec, cfg):
    return _fd_first(
        spec,
        cfg,
        "fd_pairing",
        lambda s: L.var_pairing(s.inp, s.alpha, s.beta),
        lambda s, geo: A.inner_oneform(geo.g, s.alpha, s.beta),
        u=False,
    )


@register("fd_second_var", 1e-4)
def _fd_second_var(spec, cfg):
    s = _sample(spec, cfg, "fd_second_var", u=False)
    analytic = L.second_var(s.inp)
    fd = fd_derivative(lambda gj: ChernGeometry(gj).scal, s.inp.geo.gjet, s.inp.etajets[0], 2, cfg.dts)
    return _outcome(analytic, fd.value, len(s.points), dts=list(cfg.dts), fd_error_estimate=fd.error_estimate)


@register("fd_error_model", 1.0)
def _fd_error_model(spec, cfg):
    """Un-extrapolated first differences shrink like dt^2 (log10 ratio near 2)."""
    s = _sample(spec, cfg, "fd_error_model", u=False)
    analytic = L.gamma(s.inp)
    dts = (1e-2, 1e-3)
    fd = fd_derivative(lambda gj: ChernGeometry(gj).scal, s.inp.geo.gjet, s.inp.etajets[0], 1, dts)
    e1 = float(np.max(np.abs(fd.raw[0] - analytic)))
    e2 = float(np.max(np.abs(fd.raw[1] - analytic)))
    slope = np.log10(e1 / e2) if e2 > 0 else float("inf")
    return Outcome(abs(slope - 2.0), abs(slope - 2.0), len(s.points), {"err_dt1": e1, "err_dt2": e2, "log10_ratio": slope})


@register("fd_tiny_dt_control", 1e-6, mode="expect_fail", applies=_only("hopf", "cp1xcp1", "conformal_torus2"))
def _fd_tiny_dt(spec, cfg):
    s = _sample(spec, cfg, "fd_tiny_dt_control", u=False)
    fd = fd_derivative(lambda gj: ChernGeometry(gj).scal, s.inp.geo.gjet, s.inp.etajets[0], 1, (1e-12,))
    return _outcome(L.gamma(s.inp), fd.value, len(s.points), dts=[1e-12])


# -------------------------------------------------------------- identities
@register("dertrace", 1e-11)
def _dertrace(spec, cfg):
    s = _sample(spec, cfg, "dertrace", u=False)
    geo = s.inp.geo
    first = geo.first_cov(s.inp.endo_jet(0))
    lhs = np.stack([np.trace(f.value, axis1=-2, axis2=-1) for f in first], axis=1)
    tr = s.inp.trace_jet(0)
    d = _dz_arr(tr)
    rhs = np.concatenate([d, np.conj(d)], axis=1)
    return _outcome(lhs, rhs, len(s.points))


@register("chern_laplacian", 1e-10, mode="abs")
def _chern_laplacian(spec, cfg):
    s = _sample(spec, cfg, "chern_laplacian", n=50)
    geo, u = s.inp.geo, s.inp.ujet
    lhs = A.trace_form(geo.g, ddc_scalar(u))
    rhs = geo.laplacian(u) + A.inner_oneform(geo.g, _dz_arr(u), geo.theta)
    return _outcome(lhs, rhs, len(s.points))


@register("ddc_kahler", 1e-10, mode="abs", applies=_kahler)
def _ddc_kahler(spec, cfg):
    s = _sample(spec, cfg, "ddc_kahler")
    geo, u = s.inp.geo, s.inp.ujet
    hess = geo.g_real_inv @ geo.hessian(u)
    r = geo.g_real
    xr, yr = A.vector_to_real(s.x), A.vector_to_real(s.y)
    jxr, jyr = A.vector_to_real(1j * s.x), A.vector_to_real(1j * s.y)

    def gr(a, b):
        return np.einsum("na,nab,nb->n", a, r, b)

    rhs = gr(np.einsum("nab,nb->na", hess, xr), jyr) - gr(np.einsum("nab,nb->na", hess, jxr), yr)
    lhs = A.form_apply(ddc_scalar(u), s.x, s.y)
    return _outcome(lhs, rhs, len(s.points))


@register("trace_ratio", 1e-11)
def _trace_ratio(spec, cfg):
    s = _sample(spec, cfg, "trace_ratio", u=False)
    real_trace = np.trace(s.inp.h_real(0), axis1=-2, axis2=-1)
    _, trc = A.traces(A.Sym11Value(s.inp.eta(0), s.inp.g))
    return _outcome(real_trace, 2.0 * trc, len(s.points))


@register("locscal", 1e-11)
def _locscal(spec, cfg):
    s = _sample(spec, cfg, "locscal", u=False)
    geo = s.inp.geo
    return _outcome(geo.scal, 2.0 * A.trace_form(geo.g, geo.ricci_logdet), len(s.points))


@register("ricci_logdet", 1e-10)
def _ricci_logdet(spec, cfg):
    s = _sample(spec, cfg, "ricci_logdet", u=False)
    geo = s.inp.geo
    return _outcome(geo.ricci, geo.ricci_logdet, len(s.points))


@register("curvature_symmetry", 1e-12, mode="abs")
def _curvature_symmetry(spec, cfg):
    s = _sample(spec, cfg, "curvature_symmetry", u=False)
    om = s.inp.geo.curvature
    return _outcome(np.conj(om), np.transpose(om, (0, 2, 1, 4, 3)), len(s.points))


@register("ricci_identity", 1e-10, mode="abs")
def _ricci_identity(spec, cfg):
    s = _sample(spec, cfg, "ricci_identity", u=False)
    geo = s.inp.geo
    h = s.inp.endo_jet(0)
    defect = commutator_defect(geo, h.value, geo.second_cov(h))
    return _outcome(defect, np.zeros_like(defect), len(s.points))


@register("lee_frame", 1e-10)
def _lee_frame(spec, cfg):
    from .chern import lee_form_frame

    s = _sample(spec, cfg, "lee_frame", u=False)
    geo = s.inp.geo
    direct = 2.0 * np.einsum("ni,ni->n", geo.theta, s.x).real
    frame = lee_form_frame(geo, s.x)
    a, r = _errors(direct, frame)
    if spec.is_kahler:  # both sides vanish; report the absolute defect
        r = a
    return Outcome(a, r, len(s.points), {})


def _ricci_form_jet(gjet: J.Jet) -> J.Jet:
    """``S~`` as a jet, contracted from the curvature (needs metric order 3)."""
    m = gjet.shape[-1]
    ginv = J.inv(gjet.truncate(gjet.order - 1))
    d = [gjet.dz(i) for i in range(m)]
    db = [gjet.dzb(j) for j in range(m)]
    rows = []
    for j in range(m):
        row = []
        for i in range(m):
            om = -d[i].dzb(j) + db[j] @ ginv.truncate(d[i].dzb(j).order) @ d[i]
            row.append((ginv.truncate(om.order) @ om).trace())
        rows.append(J.stack(row, axis=-1))
    return J.stack(rows, axis=-2)


@register("kahler_specializations", 1e-10, mode="abs", applies=_kahler)
def _kahler_specializations(spec, cfg):
    s = _sample(spec, cfg, "kahler_specializations", u=False)
    geo = s.inp.geo
    delta_g, delta_c = L._divergences(s.inp, 0)
    g3 = jet_eval(spec, spec.metric, s.points, 3)
    ric = _ricci_form_jet(g3)
    dric = _dz_arr(ric)  # [N, k, j, i] = d_k S~_{jbar i}
    closed = dric - np.swapaxes(dric, 1, 3)
    worst = max(
        float(np.max(np.abs(geo.theta))),
        float(np.max(np.abs(delta_g - delta_c))),
        float(np.max(np.abs(closed))),
    )
    return Outcome(worst, worst, len(s.points), {})


@register("slin2_kahler", 1e-10, applies=_kahler)
def _slin2_kahler(spec, cfg):
    s = _sample(spec, cfg, "slin2_kahler", u=False)
    general = L.second_var(s.inp, kahler_check=False)
    return _outcome(general, L.second_var_kahler(s.inp), len(s.points))


@register("gamma_linearity", 1e-12)
def _gamma_linearity(spec, cfg):
    rng = make_rng(cfg.seed, "gamma_linearity", spec.name)
    pts = spec.sample(rng, cfg.samples)
    h1, h2 = random_perturbation(spec, rng), random_perturbation(spec, rng)
    c = 1.7

    def total(p, o):
        return h1(p, o) + h2(p, o)

    def scaled(p, o):
        return c * h1(p, o)

    vals = [L.gamma(L.VariationInput.at(spec, pts, f)) for f in (h1, h2, total, scaled)]
    a1, r1 = _errors(vals[2], vals[0] + vals[1])
    a2, r2 = _errors(vals[3], c * vals[0])
    return Outcome(max(a1, a2), max(r1, r2), len(pts), {"scale": c})


@register("gamma_chain", 1e-10)
def _gamma_chain(spec, cfg):
    s = _sample(spec, cfg, "gamma_chain", u=False)
    geo = s.inp.geo
    chain = 2.0 * L.var_trace(s.inp, geo.ricci) + 2.0 * A.trace_form(geo.g, L.var_ricci_form(s.inp))
    return _outcome(L.gamma(s.inp), chain, len(s.points))


@register("ke_gamma", 1e-10, applies=_only("cp1xcp1"))
def _ke_gamma(spec, cfg):
    s = _sample(spec, cfg, "ke_gamma", u=False)
    geo = s.inp.geo
    lam, m = 4.0, spec.m
    trr = 2.0 * s.inp.trace_jet(0)
    expected = 0.5 * (geo.laplacian(trr) - (lam / m) * trr.value)
    return _outcome(L.gamma(s.inp), expected, len(s.points), **{"lambda": lam})


@register("ke_gamma_star", 1e-9, mode="abs", applies=_only("cp1xcp1"))
def _ke_gamma_star(spec, cfg):
    rng = make_rng(cfg.seed, "ke_gamma_star", spec.name)
    pts = spec.sample(rng, cfg.samples)
    geo = ChernGeometry(jet_eval(spec, spec.metric, pts, 2))
    u = jet_eval(spec, scalar_preset(spec, "height"), pts, 2)
    gs = L.gamma_star(geo, u)
    norm = np.sqrt(np.maximum(A.inner_sym(gs.g, gs.eta, gs.eta), 0.0))
    return _outcome(norm, np.zeros_like(norm), len(pts))


# ------------------------------------------------------------ golden values
def _golden_points(spec, cfg, name, n=100):
    rng = make_rng(cfg.seed, name, spec.name)
    pts = spec.sample(rng, n)
    return pts, ChernGeometry(jet_eval(spec, spec.metric, pts, 2))


@register("golden_scal", 1e-10, mode="abs", applies=_only("hopf", "cp1", "cp1xcp1", "flat_torus1", "flat_torus2"))
def _golden_scal(spec, cfg):
    pts, geo = _golden_points(spec, cfg, "golden_scal")
    expected = np.full(len(pts), spec.known["scal"])
    return _outcome(geo.scal, expected, len(pts), expected=spec.known["scal"])


@register("golden_lee", 1e-11, mode="abs", applies=_only("hopf"))
def _golden_lee(spec, cfg):
    pts, geo = _golden_points(spec, cfg, "golden_lee")
    z = pts[:, 0::2] + 1j * pts[:, 1::2]
    expected = -np.conj(z) / np.sum(np.abs(z) ** 2, axis=1, keepdims=True)
    return _outcome(geo.theta, expected, len(pts))


@register("golden_ricci_form", 1e-10, mode="abs", applies=_only("hopf", "cp1"))
def _golden_ricci_form(spec, cfg):
    pts, geo = _golden_points(spec, cfg, "golden_ricci_form")
    if spec.name == "cp1":
        expected = geo.g
    else:
        z = pts[:, 0::2] + 1j * pts[:, 1::2]
        r2 = np.sum(np.abs(z) ** 2, axis=1)[:, None, None]
        expected = 2.0 * (np.eye(2) / r2 - np.einsum("ni,nj->nji", np.conj(z), z) / r2**2)
    return _outcome(geo.ricci, expected, len(pts))


@register("golden_fce_zero", 1e-11, mode="abs", applies=_only("cp1", "cp1xcp1", "flat_torus1", "flat_torus2"))
def _golden_fce_zero(spec, cfg):
    pts, geo = _golden_points(spec, cfg, "golden_fce_zero")
    res = fce_residual(geo)
    return _outcome(res, np.zeros_like(res), len(pts))


@register("golden_fce_hopf", 0.5, mode="lower_bound", applies=_only("hopf"))
def _golden_fce_hopf(spec, cfg):
    pts, geo = _golden_points(spec, cfg, "golden_fce_hopf")
    low = float(np.min(fce_residual(geo)))
    return Outcome(low, low, len(pts), {})


@register("riemannian_scal", 1e-9, mode="abs", applies=lambda spec: spec.is_kahler)
def _riemannian_scal(spec, cfg):
    rng = make_rng(cfg.seed, "riemannian_scal", spec.name)
    pts = spec.sample(rng, cfg.samples)
    g3 = jet_eval(spec, spec.metric, pts, 3)
    return _outcome(ChernGeometry(g3).scal, riemannian_scalar(g3), len(pts))


@register("gamma_closed_form", 1e-10, mode="abs", applies=_only("flat_torus1", "hopf", "cp1xcp1"))
def _gamma_closed_form(spec, cfg):
    rng = make_rng(cfg.seed, "gamma_closed_form", spec.name)
    pts = spec.sample(rng, cfg.samples)
    if spec.name == "flat_torus1":
        h, expected = perturbation_preset(spec, "cos_id"), np.cos(pts[:, 0])
    elif spec.name == "hopf":
        h, expected = perturbation_preset(spec, "id"), np.full(len(pts), -4.0)
    else:
        h, expected = perturbation_preset(spec, "traceless"), np.zeros(len(pts))
    return _outcome(L.gamma(L.VariationInput.at(spec, pts, h)), expected, len(pts))


@register("second_var_closed_form", 1e-5, mode="abs", applies=_only("flat_torus1", "cp1xcp1"))
def _second_var_closed_form(spec, cfg):
    """Flat torus: ``(scal)''(cos x Id, cos x Id) = -2 cos^2 x``; CP1 x CP1: ``|h|^2`` for traceless ``h``."""
    rng = make_rng(cfg.seed, "second_var_closed_form", spec.name)
    pts = spec.sample(rng, cfg.samples)
    if spec.name == "flat_torus1":
        h = perturbation_preset(spec, "cos_id")
        expected = -2.0 * np.cos(pts[:, 0]) ** 2
    else:
        h = perturbation_preset(spec, "witness", scalar=scalar_preset(spec, "height"))
    inp = L.VariationInput.at(spec, pts, h)
    if spec.name != "flat_torus1":
        expected = A.inner_sym(inp.g, inp.eta(0), inp.eta(0))
    analytic = L.second_var(inp)
    fd = fd_derivative(lambda gj: ChernGeometry(gj).scal, inp.geo.gjet, inp.etajets[0], 2, cfg.dts)
    a1, _ = _errors(analytic, expected)
    a2, _ = _errors(fd.value, expected)
    return Outcome(max(a1, a2), max(a1, a2), len(pts), {"analytic_err": a1, "fd_err": a2})


# ------------------------------------------------------------- global checks
ADJOINT_TOL = {"flat_torus1": 1e-8, "flat_torus2": 1e-7, "cp1xcp1": 1e-6, "conformal_torus2": 1e-7, "hopf": 1e-6}


def adjointness_test(
    spec: ManifoldSpec,
    n: int,
    seed: int = 42,
    n_fields: int = 5,
    threads: int | None = None,
    n_phi: int | None = None,
    tol: float | None = None,
) -> CheckReport:
    """``<gamma h, u> = <h, gamma^* u>`` on random band-limited pairs.

    The defect of each pair is divided by ``||h|| ||u||`` (L2 norms over the
    same quadrature); the report carries the largest one and passes when it
    is at most ``tol`` (default: the manifold's entry in ``ADJOINT_TOL``,
    else ``1e-6``).
    """
    if tol is None:
        tol = ADJOINT_TOL.get(spec.name, 1e-6)
    start = time.perf_counter()
    rng = make_rng(seed, "adjointness", spec.name)
    pairs = [(random_perturbation(spec, rng, smooth=True), random_scalar(spec, rng)) for _ in range(n_fields)]
    if spec.chart.kind == "stereographic":
        n_phi = n_phi or SPHERE_AZIMUTH
    rule = quadrature_rule(spec, n, n_phi)

    def integrand(nodes):
        geo = ChernGeometry(spec.metric(nodes, 2))
        cols = []
        for hf, uf in pairs:
            h, u = hf(nodes, 2), uf(nodes, 2)
            inp = L.VariationInput(geo, (h,), u)
            gs = L.gamma_star(geo, u)
            cols += [
                L.gamma(inp) * u.value,
                A.inner_sym(geo.g, h.value, gs.eta),
                A.inner_sym(geo.g, h.value, h.value),
                u.value**2,
            ]
        return np.stack(cols, axis=1)

    sums = np.asarray(integrate(integrand, rule, threads=threads)).reshape(n_fields, 4)
    defects = np.abs(sums[:, 0] - sums[:, 1])
    norms = np.sqrt(sums[:, 2] * sums[:, 3])
    rel = defects / norms
    worst = int(np.argmax(rel))
    return CheckReport(
        "adjointness",
        spec.name,
        seed,
        n_fields,
        float(defects[worst]),
        float(rel[worst]),
        tol,
        bool(rel[worst] <= tol),
        time.perf_counter() - start,
        "rel",
        {"grid": n, "azimuth": n_phi, "nodes": rule.size, "pairs": n_fields},
    )


@register("adjointness", 1e-6, applies=lambda spec: spec.name in ADJOINT_TOL)
def _adjointness(spec, cfg):
    rep = adjointness_test(
        spec,
        cfg.grids[spec.name],
        cfg.seed,
        ADJOINT_PAIRS.get(spec.name, ADJOINT_PAIRS_DEFAULT),
        cfg.threads,
    )
    return Outcome(rep.max_abs_err, rep.max_rel_err, rep.samples, rep.params)


@register("witness", 1e-6, applies=_only("cp1xcp1"))
def _witness(spec, cfg):
    rep = L.instability_witness(cfg.grids["cp1xcp1"], threads=cfg.threads)
    a, r = _errors(rep.value, L.WITNESS_VALUE)
    return Outcome(a, r, rep.nodes, {"value": rep.value, "expected": L.WITNESS_VALUE, **rep.residuals})


@register("witness_control", 1e-8, mode="abs", applies=_only("cp1xcp1"))
def _witness_control(spec, cfg):
    rep = L.instability_witness(max(2, cfg.grids["cp1xcp1"] // 2), threads=cfg.threads, constant_h=True)
    return Outcome(abs(rep.value), abs(rep.value), rep.nodes, {"value": rep.value})


@register("witness_rejects_non_kernel", 0.0, mode="abs", applies=_only("cp1xcp1"))
def _witness_rejects(spec, cfg):
    try:
        L.instability_witness(4, u_shift=0.1, threads=cfg.threads)
    except L.KernelError as exc:
        return Outcome(0.0, 0.0, 1, {"error": str(exc)})
    return Outcome(1.0, 1.0, 1, {"error": None})


@register("witness_doubling", 1e-9, applies=_only("cp1xcp1"), heavy=True)
def _witness_doubling(spec, cfg):
    n = cfg.grids["cp1xcp1"]
    base = L.instability_witness(n, threads=cfg.threads)
    fine = L.instability_witness(2 * n, threads=cfg.threads)
    a, r = _errors(base.value, fine.value)
    return Outcome(a, r, fine.nodes, {"grid": n, "doubled": 2 * n, "value": base.value, "value_doubled": fine.value})


@register("stability_control", 1e-10, mode="abs", applies=_only("flat_torus1", "flat_torus2"))
def _stability_control(spec, cfg):
    def one(pts, order):
        return 0.0 * J.variables(pts, order)[0] + 1.0

    const = np.diag([1.0, -1.0]) if spec.m == 2 else np.array([[0.7]])

    def h(pts, order):
        return spec.metric(pts, order) @ const

    rule = quadrature_rule(spec, 8)
    rep = L.obstruction(spec, rule, one, h, "1", "constant", threads=cfg.threads)
    return Outcome(abs(rep.value), abs(rep.value), rep.nodes, {"value": rep.value})


# ----------------------------------------------------------------- runner
def _finish(cdef: CheckDef, spec: ManifoldSpec, cfg: SuiteConfig, out: Outcome, seconds: float) -> CheckReport:
    tol = float(cfg.tolerances.get(cdef.name, ADJOINT_TOL.get(spec.name, cdef.tol) if cdef.name == "adjointness" else cdef.tol))
    if cdef.mode == "rel":
        passed = out.rel_err <= tol
    elif cdef.mode == "abs":
        passed = out.abs_err <= tol
    elif cdef.mode == "lower_bound":
        passed = out.abs_err > tol
    else:
        passed = out.rel_err > tol
    return CheckReport(
        cdef.name,
        spec.name,
        cfg.seed,
        out.samples,
        float(out.abs_err),
        float(out.rel_err),
        tol,
        bool(passed),
        seconds,
        cdef.mode,
        dict(out.params),
    )


def selected_checks(cfg: SuiteConfig) -> list[CheckDef]:
    if cfg.checks is not None:
        return [CHECKS[c] for c in cfg.checks]
    return [c for c in CHECKS.values() if cfg.include_heavy or not c.heavy]


def run_suite(cfg: SuiteConfig, on_report: Callable[[CheckReport], None] | None = None) -> list[CheckReport]:
    """Run every selected check on every applicable manifold.

    Reports come back in config order (manifold-major, then registry
    order).  With ``cfg.threads > 1`` the (check, manifold) pairs run
    concurrently; each check is deterministic on its own, so the reports
    do not depend on the thread count apart from wall seconds.
    """
    checks = selected_checks(cfg)
    tasks = [(cdef, zoo(name)) for name in cfg.manifolds for cdef in checks if cdef.applies(zoo(name))]
    if not tasks:
        raise ValueError("nothing to run: no selected check applies to the selected manifolds")

    def run(task):
        cdef, spec = task
        start = time.perf_counter()
        out = cdef.fn(spec, cfg)
        return _finish(cdef, spec, cfg, out, time.perf_counter() - start)

    threads = cfg.threads or 1
    reports = []
    if threads == 1:
        results = map(run, tasks)
        for rep in results:
            reports.append(rep)
            if on_report is not None:
                on_report(rep)
        return reports
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for rep in pool.map(run, tasks):
            reports.append(rep)
            if on_report is not None:
                on_report(rep)
    return reports
