"""Truncated multivariate Taylor arithmetic ("jets") over batches of points.

A :class:`Jet` of order ``K`` in ``n`` real variables stores a field value
together with all of its partial derivatives up to order ``K``::

    parts[0]  shape S                 value
    parts[1]  shape (n,) + S          d/dx_a
    parts[2]  shape (n, n) + S        d^2/dx_a dx_b
    ...

Derivative axes lead so that numpy broadcasting of the trailing value axes
works unchanged for elementwise products and ``@``.  The value shape ``S``
normally starts with a batch axis (one entry per evaluation point).

Products follow the Leibniz rule exactly and nonlinear functions are applied
through their Taylor series in the nilpotent increment ``u - u(x0)``, so jets
of closed-form fields are exact up to roundoff; no finite differencing in
space happens anywhere.
"""

from __future__ import annotations

from itertools import combinations
from math import factorial
from typing import Callable, Sequence

import numpy as np

__all__ = ["Jet", "variables", "constant", "stack", "einsum", "inv", "logdet"]

ArrayOp = Callable[[np.ndarray, np.ndarray], np.ndarray]


class Jet:
    """Value plus partial derivatives up to a fixed order."""

    __slots__ = ("parts",)
    __array_priority__ = 100  # make ndarray * Jet defer to Jet.__rmul__

    def __init__(self, parts: Sequence[np.ndarray]):
        self.parts = [np.asarray(p) for p in parts]

    # ------------------------------------------------------------------ shape
    @property
    def order(self) -> int:
        return len(self.parts) - 1

    @property
    def nvars(self) -> int | None:
        return self.parts[1].shape[0] if self.order >= 1 else None

    @property
    def value(self) -> np.ndarray:
        return self.parts[0]

    @property
    def shape(self) -> tuple:
        return self.parts[0].shape

    def d(self, k: int) -> np.ndarray:
        """All ``k``-th partials, derivative axes first."""
        return self.parts[k]

    def __repr__(self) -> str:
        return f"Jet(order={self.order}, nvars={self.nvars}, shape={self.shape})"

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise ValueError(f"cannot raise jet order {self.order} to {order}")
        return Jet(self.parts[: order + 1])

    def _map(self, fn) -> "Jet":
        return Jet([fn(k, p) for k, p in enumerate(self.parts)])

    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        return self._map(lambda k, p: p[(slice(None),) * k + idx])

    def reshape_value(self, shape) -> "Jet":
        return self._map(lambda k, p: p.reshape(p.shape[:k] + tuple(shape)))

    def swap(self, a: int = -1, b: int = -2) -> "Jet":
        """Swap two value axes (negative indices refer to trailing axes)."""
        return self._map(lambda k, p: np.swapaxes(p, a, b))

    @property
    def H(self) -> "Jet":
        """Conjugate transpose of the trailing matrix axes."""
        return self.conj().swap()

    def conj(self) -> "Jet":
        return self._map(lambda k, p: np.conj(p))

    @property
    def real(self) -> "Jet":
        return self._map(lambda k, p: np.real(p))

    @property
    def imag(self) -> "Jet":
        return self._map(lambda k, p: np.imag(p))

    def trace(self) -> "Jet":
        return self._map(lambda k, p: np.trace(p, axis1=-2, axis2=-1))

    def sum(self, axis: int) -> "Jet":
        if axis >= 0:
            raise ValueError("sum() takes a negative (trailing) axis")
        return self._map(lambda k, p: p.sum(axis=axis))

    # ----------------------------------------------------------- derivatives
    def partial(self, a: int) -> "Jet":
        """Jet of ``d/dx_a`` of this field; the order drops by one."""
        if self.order < 1:
            raise ValueError("order-0 jet has no derivatives")
        return Jet([p[a] for p in self.parts[1:]])

    def dz(self, k: int) -> "Jet":
        """Holomorphic Wirtinger derivative along ``z^k = x^k + i y^k``."""
        return 0.5 * (self.partial(2 * k) - 1j * self.partial(2 * k + 1))

    def dzb(self, k: int) -> "Jet":
        """Antiholomorphic Wirtinger derivative along ``z^k``."""
        return 0.5 * (self.partial(2 * k) + 1j * self.partial(2 * k + 1))

    def increment(self) -> "Jet":
        """The nilpotent part ``u - u(x0)`` (zero value, same derivatives)."""
        return Jet([np.zeros_like(self.parts[0])] + self.parts[1:])

    # ------------------------------------------------------------ arithmetic
    def __neg__(self) -> "Jet":
        return self._map(lambda k, p: -p)

    def __add__(self, other) -> "Jet":
        if isinstance(other, Jet):
            order = min(self.order, other.order)
            return Jet([self.parts[k] + other.parts[k] for k in range(order + 1)])
        other = np.asarray(other)
        return Jet([self.parts[0] + other] + [p + np.zeros_like(other) for p in self.parts[1:]])

    __radd__ = __add__

    def __sub__(self, other) -> "Jet":
        return self + (-other)

    def __rsub__(self, other) -> "Jet":
        return (-self) + other

    def __mul__(self, other) -> "Jet":
        if isinstance(other, Jet):
            return _bilinear(self, other, np.multiply)
        other = np.asarray(other)
        return self._map(lambda k, p: p * other)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet":
        if isinstance(other, Jet):
            return self * reciprocal(other)
        return self * (1.0 / np.asarray(other))

    def __rtruediv__(self, other) -> "Jet":
        return reciprocal(self) * other

    def __matmul__(self, other) -> "Jet":
        if isinstance(other, Jet):
            return _bilinear(self, other, np.matmul)
        other = np.asarray(other)
        return self._map(lambda k, p: p @ other)

    def __rmatmul__(self, other) -> "Jet":
        other = np.asarray(other)
        return self._map(lambda k, p: other @ p)

    def __pow__(self, k: int) -> "Jet":
        if isinstance(k, (int, np.integer)) and k >= 0:
            out = None
            for _ in range(k):
                out = self if out is None else out * self
            return out if out is not None else constant_like(self, 1.0)
        return power(self, float(k))


def _bilinear(a: Jet, b: Jet, op: ArrayOp) -> Jet:
    """Leibniz rule for a bilinear pointwise operation ``op``."""
    order = min(a.order, b.order)
    out = []
    for k in range(order + 1):
        total = None
        for j in range(k + 1):
            x = a.parts[j]
            y = b.parts[k - j]
            # a-axes in front of b-axes, each padded with singleton axes
            x = x.reshape(x.shape[:j] + (1,) * (k - j) + x.shape[j:])
            y = y.reshape((1,) * j + y.shape)
            prod = op(x, y)
            for pos in combinations(range(k), j):
                rest = [t for t in range(k) if t not in pos]
                perm = [0] * k
                for r, t in enumerate(pos):
                    perm[t] = r
                for s, t in enumerate(rest):
                    perm[t] = j + s
                perm += list(range(k, prod.ndim))
                term = np.transpose(prod, perm) if k > 1 else prod
                total = term if total is None else total + term
        out.append(total)
    return Jet(out)


# ------------------------------------------------------------------ builders
def variables(points: np.ndarray, order: int) -> list[Jet]:
    """Coordinate jets ``x_a`` at a batch of points of shape ``(N, n)``."""
    points = np.asarray(points, dtype=float)
    npts, n = points.shape
    out = []
    for a in range(n):
        parts = [points[:, a].copy()]
        if order >= 1:
            d1 = np.zeros((n, npts))
            d1[a] = 1.0
            parts.append(d1)
        for k in range(2, order + 1):
            parts.append(np.zeros((n,) * k + (npts,)))
        out.append(Jet(parts))
    return out


def constant(value, nvars: int, order: int) -> Jet:
    value = np.asarray(value)
    return Jet([value] + [np.zeros((nvars,) * k + value.shape, dtype=value.dtype) for k in range(1, order + 1)])


def constant_like(j: Jet, value) -> Jet:
    value = np.broadcast_to(np.asarray(value), j.shape).copy()
    return Jet([value] + [np.zeros(p.shape, dtype=value.dtype) for p in j.parts[1:]])


def stack(jets: Sequence[Jet], axis: int = -1) -> Jet:
    """Stack jets along a new trailing value axis (``axis`` negative)."""
    if axis >= 0:
        raise ValueError("stack() takes a negative (trailing) axis")
    order = min(j.order for j in jets)
    return Jet([np.stack([j.parts[k] for j in jets], axis=axis) for k in range(order + 1)])


def einsum(subscripts: str, a: Jet, b: Jet) -> Jet:
    """Two-operand einsum over value axes; leading axes broadcast."""
    lhs, out = subscripts.split("->")
    sa, sb = lhs.split(",")
    spec = f"...{sa},...{sb}->...{out}"
    return _bilinear(a, b, lambda x, y: np.einsum(spec, x, y))


# ------------------------------------------------------------ nonlinearities
def _taylor(u: Jet, derivs: Sequence[np.ndarray]) -> Jet:
    """Compose a scalar function with known derivatives at u(x0) with ``u``."""
    delta = u.increment()
    out = constant_like(u, derivs[0])
    power_k = None
    for k in range(1, u.order + 1):
        power_k = delta if power_k is None else power_k * delta
        out = out + power_k * (derivs[k] / factorial(k))
    return out


def exp(u: Jet) -> Jet:
    e = np.exp(u.value)
    return _taylor(u, [e] * (u.order + 1))


def log(u: Jet) -> Jet:
    v = u.value
    derivs = [np.log(v)] + [(-1.0) ** (k - 1) * factorial(k - 1) / v**k for k in range(1, u.order + 1)]
    return _taylor(u, derivs)


def sin(u: Jet) -> Jet:
    s, c = np.sin(u.value), np.cos(u.value)
    cycle = [s, c, -s, -c]
    return _taylor(u, [cycle[k % 4] for k in range(u.order + 1)])


def cos(u: Jet) -> Jet:
    s, c = np.sin(u.value), np.cos(u.value)
    cycle = [c, -s, -c, s]
    return _taylor(u, [cycle[k % 4] for k in range(u.order + 1)])


def power(u: Jet, p: float) -> Jet:
    v = u.value
    derivs = []
    coeff = 1.0
    for k in range(u.order + 1):
        derivs.append(coeff * v ** (p - k))
        coeff *= p - k
    return _taylor(u, derivs)


def sqrt(u: Jet) -> Jet:
    return power(u, 0.5)


def reciprocal(u: Jet) -> Jet:
    return power(u, -1.0)


# --------------------------------------------------------- matrix functions
def inv(a: Jet) -> Jet:
    """Inverse of a matrix-valued jet, ``(I + E)^-1 A0^-1`` with nilpotent ``E``."""
    v0 = np.linalg.inv(a.value)
    e = v0 @ a.increment()
    eye = np.broadcast_to(np.eye(a.shape[-1]), a.shape)
    series = constant_like(a, eye)
    term = None
    for _ in range(a.order):
        term = -e if term is None else term @ (-e)
        series = series + term
    return series @ v0


def logdet(a: Jet) -> Jet:
    """``log det`` of a matrix jet (principal branch for the value)."""
    sign, ld = np.linalg.slogdet(a.value)
    v0 = np.linalg.inv(a.value)
    e = v0 @ a.increment()
    out = constant_like(a.trace(), ld + np.log(sign))
    term = None
    for k in range(1, a.order + 1):
        term = e if term is None else term @ e
        out = out + term.trace() * ((-1.0) ** (k + 1) / k)
    return out
