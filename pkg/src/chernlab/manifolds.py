"""Closed-form Hermitian manifolds ("the zoo") and fields on them.

Every field is a callable ``field(points, order) -> Jet`` evaluating the
field and its partials up to ``order`` at a batch of chart points of shape
``(N, 2m)``.  Metrics return ``(N, m, m)`` Hermitian matrices, scalar fields
``(N,)`` real arrays, and perturbations ``(N, m, m)`` Hermitian ``eta``
matrices (the lowered form of a Sym^{1,1} endomorphism).
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from . import jets as J
from .jets import Jet

__all__ = [
    "ChartSpec",
    "ManifoldSpec",
    "Field",
    "ZOO",
    "make_manifold",
    "zoo",
    "jet_eval",
    "make_rng",
    "complex_coords",
    "scalar_preset",
    "perturbation_preset",
    "random_scalar",
    "random_perturbation",
    "CONFORMAL_PRESETS",
    "POTENTIAL_PRESETS",
]

Field = Callable[[np.ndarray, int], Jet]

CHART_KINDS = ("periodic-torus", "stereographic", "log-annulus")


def make_rng(seed: int, *labels: str) -> np.random.Generator:
    """Counter-based generator keyed by a seed and stable string labels."""
    words = [int(seed)] + [zlib.crc32(s.encode()) for s in labels]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))


@dataclass(frozen=True)
class ChartSpec:
    m: int
    kind: str
    params: tuple[float, ...] = ()

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"complex dimension must be >= 1, got {self.m}")
        if self.kind not in CHART_KINDS:
            raise ValueError(f"unknown chart kind {self.kind!r}; expected one of {CHART_KINDS}")
        if any(not p > 0 for p in self.params):
            raise ValueError(f"chart parameters must be strictly positive, got {self.params}")

    @property
    def n(self) -> int:
        return 2 * self.m


@dataclass(frozen=True)
class ManifoldSpec:
    """A Hermitian manifold given in one chart by a closed-form metric."""

    name: str
    chart: ChartSpec
    metric: Field
    sampler: Callable[[np.random.Generator, int], np.ndarray]
    in_domain: Callable[[np.ndarray], np.ndarray]
    known: dict = field(default_factory=dict)
    factors: tuple = ()  # sub-manifolds of a product, in coordinate order

    @property
    def m(self) -> int:
        return self.chart.m

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.sampler(rng, n)

    @cached_property
    def is_kahler(self) -> bool:
        """Numerical test ``max |d omega| <= 1e-10`` on a fixed sample set."""
        pts = self.sample(make_rng(0, self.name, "kahler-test"), 16)
        g = jet_eval(self, self.metric, pts, 1)
        dg = np.stack([g.dz(k).value for k in range(self.m)], axis=1)  # (N, k, j, i)
        defect = np.abs(dg - np.swapaxes(dg, 1, 3))
        return bool(defect.max() <= 1e-10 * max(1.0, np.abs(g.value).max()))


def jet_eval(spec: ManifoldSpec, fld: Field, points: np.ndarray, order: int = 2) -> Jet:
    """Evaluate a field and its partials at chart points."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[-1] != spec.chart.n:
        raise ValueError(f"points have {points.shape[-1]} coordinates, chart needs {spec.chart.n}")
    if order not in (0, 1, 2, 3):
        raise ValueError(f"jet order {order} unsupported")
    ok = spec.in_domain(points)
    if not np.all(ok):
        bad = points[~ok][0]
        raise ValueError(f"point {bad} outside the chart domain of {spec.name}")
    return fld(points, order)


def complex_coords(points: np.ndarray, order: int) -> list[Jet]:
    xs = J.variables(points, order)
    return [xs[2 * k] + 1j * xs[2 * k + 1] for k in range(len(xs) // 2)]


def _abs2(z: Jet) -> Jet:
    return (z * z.conj()).real


def _scalar_times_eye(s: Jet, m: int, dtype=complex) -> Jet:
    eye = np.eye(m, dtype=dtype)
    return s[..., None, None] * eye


def _blockdiag(blocks: list[Jet]) -> Jet:
    """Block-diagonal matrix jet from a list of (N,1,1) jets."""
    m = len(blocks)
    order = min(b.order for b in blocks)
    parts = []
    for k in range(order + 1):
        ref = blocks[0].parts[k]
        out = np.zeros(ref.shape[:-2] + (m, m), dtype=complex)
        for a, b in enumerate(blocks):
            out[..., a, a] = b.parts[k][..., 0, 0]
        parts.append(out)
    return Jet(parts)


# ------------------------------------------------------------------ presets
def _u_cos_x1(xs):
    return 0.1 * J.cos(xs[0])


def _u_wave(xs):
    return 0.1 * J.cos(xs[0]) + 0.08 * J.sin(xs[1] + xs[2]) + 0.05 * J.cos(xs[3] - xs[0])


CONFORMAL_PRESETS: dict[str, Callable[[list[Jet]], Jet]] = {
    "cos_x1": _u_cos_x1,
    "wave": _u_wave,
}


def _phi_cos_product(xs):
    return 0.1 * (J.cos(xs[0]) * J.cos(xs[2]) + 0.5 * J.sin(xs[1]) * J.cos(xs[2] + xs[3]) + 0.3 * J.cos(xs[0] - xs[3]))


POTENTIAL_PRESETS: dict[str, Callable[[list[Jet]], Jet]] = {
    "cos_product": _phi_cos_product,
}


# -------------------------------------------------------------- samplers
def _torus_sampler(n_coords: int, period: float):
    def sample(rng, n):
        return rng.uniform(0.0, period, size=(n, n_coords))

    return sample


def _sphere_points(c: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Stereographic chart point ``tan(theta/2) e^{i phi}`` from ``cos(theta)``."""
    rho = np.sqrt((1.0 - c) / (1.0 + c))
    return np.stack([rho * np.cos(phi), rho * np.sin(phi)], axis=-1)


def _sphere_sampler(factors: int):
    # cos(theta) >= -0.8 keeps |z| <= 3 away from the chart's point at infinity
    def sample(rng, n):
        cols = []
        for _ in range(factors):
            c = rng.uniform(-0.8, 1.0, size=n)
            phi = rng.uniform(0.0, 2 * np.pi, size=n)
            cols.append(_sphere_points(c, phi))
        return np.concatenate(cols, axis=-1)

    return sample


def _hopf_sampler(rng, n):
    r = rng.uniform(1.0, 2.0, size=n)
    v = rng.normal(size=(n, 4))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * r[:, None]


def _all_finite(points):
    return np.all(np.isfinite(points), axis=-1)


def _nonzero(points):
    return _all_finite(points) & (np.linalg.norm(points, axis=-1) > 0.0)


# ------------------------------------------------------------------ metrics
def _flat_metric(m):
    def metric(points, order):
        xs = J.variables(points, order)
        return _scalar_times_eye(0.0 * xs[0] + 0.5, m)

    return metric


def _conformal_metric(m, u):
    def metric(points, order):
        xs = J.variables(points, order)
        return _scalar_times_eye(0.5 * J.exp(2.0 * u(xs)), m)

    return metric


def _potential_metric(m, phi):
    def metric(points, order):
        p = phi(J.variables(points, order + 2))
        rows = []
        for j in range(m):
            rows.append(J.stack([p.dz(i).dzb(j) for i in range(m)], axis=-1))
        ddbar = J.stack(rows, axis=-2)  # [j, i] = d_i d_jbar phi
        return ddbar + 0.5 * np.eye(m)

    return metric


def _hopf_metric(points, order):
    zs = complex_coords(points, order)
    r2 = _abs2(zs[0]) + _abs2(zs[1])
    return _scalar_times_eye(1.0 / r2, 2)


def _fs_factor(radius):
    def coeff(z: Jet) -> Jet:
        return 2.0 * radius**2 / (1.0 + _abs2(z)) ** 2

    return coeff


def _fs_metric(radii):
    coeffs = [_fs_factor(r) for r in radii]

    def metric(points, order):
        zs = complex_coords(points, order)
        blocks = [c(z)[..., None, None] + 0j for c, z in zip(coeffs, zs)]
        if len(blocks) == 1:
            return blocks[0]
        return _blockdiag(blocks)

    return metric


# ------------------------------------------------------------------ factory
def make_manifold(kind: str, **params) -> ManifoldSpec:
    """Build a zoo manifold.

    ``kind`` is one of ``flat_torus``, ``conformal_torus``,
    ``kahler_potential_torus``, ``hopf_surface``, ``fubini_study_cp1``,
    ``fs_product``.
    """
    two_pi = 2.0 * np.pi
    if kind == "flat_torus":
        m = int(params.get("m", 1))
        chart = ChartSpec(m, "periodic-torus", (two_pi,) * (2 * m))
        return ManifoldSpec(
            params.get("name", f"flat_torus{m}"),
            chart,
            _flat_metric(m),
            _torus_sampler(2 * m, two_pi),
            _all_finite,
            {"scal": 0.0, "volume": two_pi ** (2 * m)},
        )
    if kind == "conformal_torus":
        m = int(params.get("m", 1))
        preset = params.get("u", "cos_x1" if m == 1 else "wave")
        if preset not in CONFORMAL_PRESETS:
            raise ValueError(f"unknown conformal preset {preset!r}; choose from {sorted(CONFORMAL_PRESETS)}")
        chart = ChartSpec(m, "periodic-torus", (two_pi,) * (2 * m))
        return ManifoldSpec(
            params.get("name", f"conformal_torus{m}"),
            chart,
            _conformal_metric(m, CONFORMAL_PRESETS[preset]),
            _torus_sampler(2 * m, two_pi),
            _all_finite,
            {"preset": preset},
        )
    if kind == "kahler_potential_torus":
        m = int(params.get("m", 2))
        preset = params.get("phi", "cos_product")
        if preset not in POTENTIAL_PRESETS:
            raise ValueError(f"unknown potential preset {preset!r}; choose from {sorted(POTENTIAL_PRESETS)}")
        if m != 2:
            raise ValueError("the built-in potential presets are defined for m = 2")
        chart = ChartSpec(m, "periodic-torus", (two_pi,) * (2 * m))
        return ManifoldSpec(
            params.get("name", f"kahler_torus{m}"),
            chart,
            _potential_metric(m, POTENTIAL_PRESETS[preset]),
            _torus_sampler(2 * m, two_pi),
            _all_finite,
            {"preset": preset, "volume": two_pi ** (2 * m)},
        )
    if kind == "hopf_surface":
        chart = ChartSpec(2, "log-annulus", (1.0, 2.0))
        return ManifoldSpec(
            params.get("name", "hopf"),
            chart,
            _hopf_metric,
            _hopf_sampler,
            _nonzero,
            {"scal": 4.0, "volume": 8.0 * np.pi**2 * np.log(2.0)},
        )
    if kind == "fubini_study_cp1":
        radius = float(params.get("radius", 1.0))
        chart = ChartSpec(1, "stereographic", (radius,))
        return ManifoldSpec(
            params.get("name", "cp1"),
            chart,
            _fs_metric([radius]),
            _sphere_sampler(1),
            _all_finite,
            {"scal": 2.0 / radius**2, "volume": 4.0 * np.pi * radius**2, "radii": (radius,)},
        )
    if kind == "fs_product":
        radii = tuple(float(r) for r in params.get("radii", (1.0, 1.0)))
        if len(radii) != 2:
            raise ValueError("fs_product takes exactly two radii")
        chart = ChartSpec(2, "stereographic", radii)
        return ManifoldSpec(
            params.get("name", "cp1xcp1"),
            chart,
            _fs_metric(list(radii)),
            _sphere_sampler(2),
            _all_finite,
            {
                "scal": sum(2.0 / r**2 for r in radii),
                "volume": float(np.prod([4.0 * np.pi * r**2 for r in radii])),
                "radii": radii,
            },
        )
    raise ValueError(f"unknown manifold kind {kind!r}")


ZOO: dict[str, tuple[str, dict]] = {
    "flat_torus1": ("flat_torus", {"m": 1}),
    "flat_torus2": ("flat_torus", {"m": 2}),
    "conformal_torus1": ("conformal_torus", {"m": 1}),
    "conformal_torus2": ("conformal_torus", {"m": 2}),
    "kahler_torus2": ("kahler_potential_torus", {"m": 2}),
    "hopf": ("hopf_surface", {}),
    "cp1": ("fubini_study_cp1", {"radius": 1.0}),
    "cp1xcp1": ("fs_product", {"radii": (1.0, 1.0)}),
}

_ZOO_CACHE: dict[str, ManifoldSpec] = {}


def zoo(name: str) -> ManifoldSpec:
    """Named zoo manifold (see :data:`ZOO`)."""
    if name not in ZOO:
        raise KeyError(f"unknown manifold {name!r}; valid names: {', '.join(ZOO)}")
    if name not in _ZOO_CACHE:
        kind, params = ZOO[name]
        _ZOO_CACHE[name] = make_manifold(kind, name=name, **params)
    return _ZOO_CACHE[name]


# ------------------------------------------------------------ scalar fields
def _sphere_embedding(z: Jet) -> tuple[Jet, Jet, Jet]:
    """Unit-sphere coordinates ``(X, Y, Z)`` of the stereographic point ``z``."""
    r2 = _abs2(z)
    d = 1.0 / (1.0 + r2)
    return 2.0 * z.real * d, 2.0 * z.imag * d, (1.0 - r2) * d


def scalar_preset(spec: ManifoldSpec, name: str) -> Field:
    """Named scalar fields: ``const1``, ``cos_x``, ``height`` (first factor)."""
    if name == "const1":
        return lambda pts, order: 0.0 * J.variables(pts, order)[0] + 1.0
    if name == "cos_x":
        return lambda pts, order: J.cos(J.variables(pts, order)[0])
    if name == "height":
        if spec.chart.kind != "stereographic":
            raise ValueError("the height function needs a sphere factor")
        return lambda pts, order: _sphere_embedding(complex_coords(pts, order)[0])[2]
    raise ValueError(f"unknown scalar preset {name!r}")


def perturbation_preset(spec: ManifoldSpec, name: str, scalar: Field | None = None) -> Field:
    """Named Sym^{1,1} directions, returned as ``eta`` fields.

    ``id`` (the identity), ``scalar_id`` (``f Id``), ``cos_id`` (``cos x Id``),
    ``traceless`` (``Id`` on the first factor, ``-Id`` on the second),
    ``witness`` (``(1 + f) * traceless``).
    """
    m = spec.m

    def g_of(pts, order):
        return spec.metric(pts, order)

    if name == "id":
        return g_of
    if name == "cos_id":
        scalar = scalar_preset(spec, "cos_x")
        name = "scalar_id"
    if name == "scalar_id":
        if scalar is None:
            raise ValueError("scalar_id needs a scalar field")
        return lambda pts, order: scalar(pts, order)[..., None, None] * g_of(pts, order)
    if name in ("traceless", "witness"):
        if m != 2:
            raise ValueError("traceless presets are defined for m = 2")
        sign = np.diag([1.0, -1.0])

        def traceless(pts, order):
            return g_of(pts, order) @ sign

        if name == "traceless":
            return traceless
        f = scalar if scalar is not None else scalar_preset(spec, "height")
        return lambda pts, order: (1.0 + f(pts, order))[..., None, None] * traceless(pts, order)
    raise ValueError(f"unknown perturbation preset {name!r}")


# ---------------------------------------------------------- random fields
def _fourier_scalar(rng, n_coords, n_modes=4, kmax=4):
    ks = rng.integers(-kmax, kmax + 1, size=(n_modes, n_coords))
    ks[np.all(ks == 0, axis=1), 0] = 1
    amps = rng.normal(size=(n_modes, 2)) / np.sqrt(n_modes)
    offset = rng.normal()

    def f(pts, order):
        xs = J.variables(pts, order)
        out = 0.0 * xs[0] + offset
        for k, (a, b) in zip(ks, amps):
            phase = 0.0 * xs[0]
            for c, x in zip(k, xs):
                if c:
                    phase = phase + float(c) * x
            out = out + a * J.cos(phase) + b * J.sin(phase)
        return out

    return f


def _sphere_scalar(rng, factors, degree=2):
    # random polynomial of degree <= 2 in the embedding coordinates of each factor
    coef_lin = rng.normal(size=(factors, 3))
    coef_quad = rng.normal(size=(factors, 3, 3)) * 0.5
    cross = rng.normal(size=(3, 3)) * 0.5 if factors == 2 else None
    offset = rng.normal()

    def f(pts, order):
        zs = complex_coords(pts, order)
        embs = [_sphere_embedding(z) for z in zs]
        out = 0.0 * embs[0][0] + offset
        for a, e in enumerate(embs):
            for i in range(3):
                out = out + coef_lin[a, i] * e[i]
                if degree >= 2:
                    for j in range(i, 3):
                        out = out + coef_quad[a, i, j] * e[i] * e[j]
        if cross is not None and degree >= 2:
            for i in range(3):
                for j in range(3):
                    out = out + cross[i, j] * embs[0][i] * embs[1][j]
        return out

    return f


def _hopf_scalar(rng):
    # invariant under z -> 2z: periodic in log|z| and polynomial in z/|z|
    a = rng.normal(size=4)
    w = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    w = 0.5 * (w + w.conj().T)
    k = 2.0 * np.pi / np.log(2.0)

    def f(pts, order):
        zs = complex_coords(pts, order)
        r2 = _abs2(zs[0]) + _abs2(zs[1])
        s = 0.5 * J.log(r2)
        quad = 0.0 * r2
        for i in range(2):
            for j in range(2):
                quad = quad + (w[i, j] * zs[i].conj() * zs[j]).real
        return a[0] + a[1] * J.cos(k * s) + a[2] * J.sin(k * s) + a[3] * quad / r2

    return f


def random_scalar(spec: ManifoldSpec, rng: np.random.Generator) -> Field:
    """Band-limited random scalar field adapted to the chart."""
    kind = spec.chart.kind
    if kind == "periodic-torus":
        return _fourier_scalar(rng, spec.chart.n)
    if kind == "stereographic":
        return _sphere_scalar(rng, spec.m)
    return _hopf_scalar(rng)


def _random_hermitian(rng, m):
    b = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    return 0.5 * (b + b.conj().T)


def random_perturbation(
    spec: ManifoldSpec, rng: np.random.Generator, smooth: bool = False, amplitude: float = 0.3
) -> Field:
    """Random Sym^{1,1} direction as an ``eta`` field.

    ``amplitude`` sets the typical size of ``h = G^-1 eta``.  With
    ``smooth=True`` the field is a global smooth section (needed for
    integration by parts); on sphere products it is then block diagonal,
    ``f_a Id`` on each factor.
    """
    m = spec.m
    kind = spec.chart.kind
    if kind == "stereographic":
        fs = [random_scalar(spec, rng) for _ in range(m)]
        offdiag = None if smooth or m == 1 else (random_scalar(spec, rng), random_scalar(spec, rng))

        def eta(pts, order):
            g = spec.metric(pts, order)
            out = None
            for a in range(m):
                e = np.zeros((m, m))
                e[a, a] = 1.0
                term = fs[a](pts, order)[..., None, None] * (g @ e)
                out = term if out is None else out + term
            if offdiag is not None:
                scale = J.sqrt((g[..., 0, 0] * g[..., 1, 1]).real)
                w = offdiag[0](pts, order) + 1j * offdiag[1](pts, order)
                e01 = np.array([[0.0, 0.0], [1.0, 0.0]])
                off = (0.3 * scale * w)[..., None, None] * e01
                out = out + off + off.H
            return amplitude * out

        return eta

    n_terms = 3
    fs = [random_scalar(spec, rng) for _ in range(n_terms)]
    bs = [_random_hermitian(rng, m) / np.sqrt(n_terms) for _ in range(n_terms)]
    if kind == "log-annulus":

        def eta(pts, order):
            g = spec.metric(pts, order)
            out = None
            for f, b in zip(fs, bs):
                term = f(pts, order)[..., None, None] * (g @ b)
                out = term if out is None else out + term
            return (0.5 * amplitude) * (out + out.H)

        return eta

    def eta(pts, order):
        out = None
        for f, b in zip(fs, bs):
            term = f(pts, order)[..., None, None] * b
            out = term if out is None else out + term
        return (0.5 * amplitude) * out

    return eta
