"""Pointwise complex linear algebra of Hermitian metrics.

Conventions (used throughout the package):

* complex coordinates ``z^i = x^i + i y^i`` with ``J d/dx_i = d/dy_i``;
  real coordinates are ordered ``(x^1, y^1, ..., x^m, y^m)``;
* a Hermitian metric is stored as the matrix ``G[j, i] = g(d/dz^i, d/dzbar^j)``,
  so the Euclidean metric ``dx^2 + dy^2`` is ``G = 1/2``;
* a real (1,1)-form ``alpha = alpha_{jbar i} i dz^i ^ dzbar^j`` is stored as
  ``A[j, i] = alpha_{jbar i}``; with these choices ``omega = rho_g(Id)`` has
  matrix ``G`` and ``rho_g`` is the identity on stored matrices;
* an endomorphism ``h`` in Sym^{1,1} is stored through its lowered form
  ``eta = G @ H`` where ``H`` is its action on (1,0) components;
* a real tangent vector ``a d/dx + b d/dy`` is stored as ``X = a + i b``;
  a real one-form as its ``dz`` components ``alpha_i = alpha(d/dz^i)``.

Every function accepts leading batch axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GeometryError",
    "Sym11Value",
    "OneForm",
    "RealEndo",
    "check_hermitian",
    "check_metric",
    "rho",
    "rho_inv",
    "traces",
    "trace_form",
    "inner",
    "inner_sym",
    "inner_oneform",
    "inner_endo",
    "to_real",
    "to_complex",
    "endo_to_real",
    "oneform_to_real",
    "oneform_from_real",
    "vector_to_real",
    "vector_from_real",
    "j_real",
    "form_apply",
    "metric_apply",
]

HERMITIAN_ATOL = 1e-12


class GeometryError(ValueError):
    """Invalid geometric input (non-Hermitian, singular, mismatched)."""


# ------------------------------------------------------------------ values
@dataclass(frozen=True)
class Sym11Value:
    """A g-symmetric endomorphism commuting with J, stored as ``eta = G H``."""

    eta: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        if np.shape(self.eta) != np.shape(self.g):
            raise GeometryError(f"eta shape {np.shape(self.eta)} does not match metric shape {np.shape(self.g)}")

    @property
    def endo(self) -> np.ndarray:
        return np.linalg.solve(self.g, self.eta)

    @classmethod
    def identity(cls, g: np.ndarray) -> "Sym11Value":
        return cls(np.array(g, dtype=complex), g)

    @classmethod
    def from_endo(cls, g: np.ndarray, endo: np.ndarray) -> "Sym11Value":
        return cls(g @ endo, g)


@dataclass(frozen=True)
class OneForm:
    """Real one-form through its ``dz`` components."""

    comps: np.ndarray


@dataclass(frozen=True)
class RealEndo:
    """Endomorphism in real coordinates, a ``2m x 2m`` real matrix."""

    mat: np.ndarray


# ------------------------------------------------------------------ checks
def check_hermitian(a: np.ndarray, atol: float = HERMITIAN_ATOL) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise GeometryError(f"expected square matrices, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a), initial=0.0)))
    defect = float(np.max(np.abs(a - np.conj(np.swapaxes(a, -1, -2))), initial=0.0))
    if defect > atol * scale:
        raise GeometryError(f"matrix is not Hermitian (defect {defect:.3e})")
    return a


def check_metric(g: np.ndarray) -> np.ndarray:
    """Validate a batch of Hermitian positive definite metric matrices."""
    g = check_hermitian(g)
    lam = np.linalg.eigvalsh(g)
    if not np.all(lam[..., 0] > 0.0):
        raise GeometryError("metric is not positive definite")
    return g


def _same_dim(g: np.ndarray, a: np.ndarray) -> None:
    if np.shape(g)[-1] != np.shape(a)[-1]:
        raise GeometryError(f"dimension mismatch: metric is {np.shape(g)[-1]}, input is {np.shape(a)[-1]}")


# ------------------------------------------------------- rho and its inverse
def rho(g: np.ndarray, h: Sym11Value) -> np.ndarray:
    """Matrix of the (1,1)-form ``g((J o h) ., ..)``; equals ``h.eta``."""
    _same_dim(g, h.eta)
    return np.asarray(h.eta)


def rho_inv(g: np.ndarray, a: np.ndarray) -> Sym11Value:
    """Sym^{1,1} endomorphism whose form is ``a``; ``H = G^-1 a``."""
    g = check_metric(g)
    _same_dim(g, a)
    return Sym11Value(np.asarray(a, dtype=complex), g)


def traces(h: Sym11Value) -> tuple[np.ndarray, np.ndarray]:
    """Real and complex traces ``(tr^R h, tr^C h)`` with ``tr^R = 2 tr^C``."""
    t = np.trace(h.endo, axis1=-2, axis2=-1)
    scale = np.maximum(1.0, np.max(np.abs(h.endo), axis=(-2, -1)))
    if np.any(np.abs(t.imag) > 1e-12 * scale):
        raise GeometryError("complex trace has an imaginary part; eta is not Hermitian")
    trc = t.real
    return 2.0 * trc, trc


def trace_form(g: np.ndarray, a: np.ndarray) -> np.ndarray:
    """``Tr^C_g(alpha) = g^{i jbar} alpha_{jbar i}``."""
    _same_dim(g, a)
    return np.trace(np.linalg.solve(g, a), axis1=-2, axis2=-1).real


# ----------------------------------------------------------------- pairings
def inner_sym(g: np.ndarray, eta_a: np.ndarray, eta_b: np.ndarray) -> np.ndarray:
    """``g(A, B) = tr^R(A B) = 2 Re tr(H_A H_B)`` on Sym^{1,1}."""
    ha = np.linalg.solve(g, eta_a)
    hb = np.linalg.solve(g, eta_b)
    return 2.0 * np.einsum("...ij,...ji->...", ha, hb).real


def inner_oneform(g: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``g(alpha, beta) = 2 Re(g^{i jbar} alpha_i conj(beta_j))``."""
    ginv = np.linalg.inv(g)
    return 2.0 * np.einsum("...i,...ij,...j->...", a, ginv, np.conj(b)).real


def inner_endo(g_real: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``sum_a g(A e_a, B e_a)`` over an orthonormal frame, real coordinates."""
    ginv = np.linalg.inv(g_real)
    return np.einsum("...ca,...cd,...db,...ab->...", a, g_real, b, ginv)


def inner(g: np.ndarray, a, b) -> np.ndarray:
    """Metric pairing of two values of the same kind.

    Sym^{1,1} values may be paired with :class:`RealEndo` values; they are
    converted to real coordinates first.
    """
    if isinstance(a, Sym11Value) and isinstance(b, Sym11Value):
        return inner_sym(g, a.eta, b.eta)
    if isinstance(a, OneForm) and isinstance(b, OneForm):
        _same_dim(g, a.comps)
        return inner_oneform(g, a.comps, b.comps)
    endo_kinds = (Sym11Value, RealEndo)
    if isinstance(a, endo_kinds) and isinstance(b, endo_kinds):
        ma = endo_to_real(a.endo) if isinstance(a, Sym11Value) else a.mat
        mb = endo_to_real(b.endo) if isinstance(b, Sym11Value) else b.mat
        return inner_endo(to_real(g), ma, mb)
    raise TypeError(f"cannot pair {type(a).__name__} with {type(b).__name__}")


# ------------------------------------------------------ real <-> complex
def to_real(g):
    """Real metric matrix in ``(x^1, y^1, ...)`` order from ``G``.

    Linear, so it also maps each part of a :class:`~chernlab.jets.Jet` when
    given one.
    """
    from .jets import Jet

    if isinstance(g, Jet):
        return g._map(lambda k, p: to_real(p))
    g = np.asarray(g)
    c = np.swapaxes(g, -1, -2)
    m = g.shape[-1]
    out = np.empty(g.shape[:-2] + (2 * m, 2 * m))
    out[..., 0::2, 0::2] = 2.0 * c.real
    out[..., 0::2, 1::2] = 2.0 * c.imag
    out[..., 1::2, 0::2] = -2.0 * c.imag
    out[..., 1::2, 1::2] = 2.0 * c.real
    return out


def to_complex(r: np.ndarray) -> np.ndarray:
    """Inverse of :func:`to_real` on J-invariant symmetric matrices."""
    r = np.asarray(r)
    c = 0.5 * (r[..., 0::2, 0::2] + 1j * r[..., 0::2, 1::2])
    return np.swapaxes(c, -1, -2)


def endo_to_real(h: np.ndarray) -> np.ndarray:
    """Real ``2m x 2m`` matrix of a complex-linear endomorphism ``H``."""
    h = np.asarray(h)
    m = h.shape[-1]
    out = np.empty(h.shape[:-2] + (2 * m, 2 * m))
    out[..., 0::2, 0::2] = h.real
    out[..., 0::2, 1::2] = -h.imag
    out[..., 1::2, 0::2] = h.imag
    out[..., 1::2, 1::2] = h.real
    return out


def j_real(m: int) -> np.ndarray:
    return endo_to_real(1j * np.eye(m))


def oneform_to_real(a: np.ndarray) -> np.ndarray:
    """Real components ``(alpha(d/dx^k), alpha(d/dy^k))`` from ``dz`` components."""
    a = np.asarray(a)
    out = np.empty(a.shape[:-1] + (2 * a.shape[-1],))
    out[..., 0::2] = 2.0 * a.real
    out[..., 1::2] = -2.0 * a.imag
    return out


def oneform_from_real(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r)
    return 0.5 * (r[..., 0::2] - 1j * r[..., 1::2])


def vector_to_real(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    out = np.empty(x.shape[:-1] + (2 * x.shape[-1],))
    out[..., 0::2] = x.real
    out[..., 1::2] = x.imag
    return out


def vector_from_real(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r)
    return r[..., 0::2] + 1j * r[..., 1::2]


# ------------------------------------------------------ evaluation on vectors
def form_apply(a: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Evaluate the real (1,1)-form with matrix ``a`` on real vectors ``x, y``."""
    return -2.0 * np.einsum("...j,...ji,...i->...", np.conj(y), a, x).imag


def metric_apply(g: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``g(x, y)`` for real vectors given by their (1,0) components."""
    return 2.0 * np.einsum("...j,...ji,...i->...", np.conj(y), g, x).real
