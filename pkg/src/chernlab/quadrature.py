"""Quadrature rules on the zoo manifolds and deterministic integration.

A rule is a tensor product of *factors*.  Each factor holds chart
coordinates for a block of the real coordinates together with Lebesgue
weights in those coordinates; the Riemannian density ``sqrt(det g)`` is
multiplied in when nodes are materialized.  Large product rules are
therefore never stored in full.

Integration splits the node list into fixed-size blocks, sums each block
with ``numpy.sum`` (pairwise summation), then reduces the block sums with a
pairwise tree.  The block layout does not depend on the number of worker
threads, so results are bitwise reproducible for any thread count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import algebra as A
from .manifolds import ManifoldSpec, _sphere_points

__all__ = ["QuadratureRule", "quadrature_rule", "integrate", "pairwise_sum", "default_threads", "BLOCK_SIZE"]

BLOCK_SIZE = 8192


def default_threads() -> int:
    return max(1, int(os.environ.get("CHERNLAB_THREADS", "1")))


@dataclass(frozen=True)
class QuadratureRule:
    """Tensor-product quadrature rule with a metric density.

    Parameters
    ----------
    factors : tuple of (nodes, weights)
        ``nodes`` has shape ``(N_f, n_f)`` (a block of chart coordinates),
        ``weights`` shape ``(N_f,)`` (Lebesgue measure in those coordinates).
    spec : ManifoldSpec
        Supplies the metric whose volume density multiplies the weights.
    order : int
        Nodes per direction, for reporting.
    """

    factors: tuple
    spec: ManifoldSpec
    order: int = 0

    @property
    def size(self) -> int:
        return int(np.prod([len(w) for _, w in self.factors]))

    def block(self, start: int, stop: int) -> tuple[np.ndarray, np.ndarray]:
        """Nodes ``(B, 2m)`` and weights ``(B,)`` for flat indices ``[start, stop)``."""
        idx = np.arange(start, stop)
        dims = [len(w) for _, w in self.factors]
        sub = np.unravel_index(idx, dims)
        nodes = np.concatenate([f[0][s] for f, s in zip(self.factors, sub)], axis=1)
        lebesgue = np.prod([f[1][s] for f, s in zip(self.factors, sub)], axis=0)
        g = self.spec.metric(nodes, 0).value
        density = np.sqrt(np.linalg.det(A.to_real(g)))
        return nodes, lebesgue * density

    @property
    def nodes(self) -> np.ndarray:
        return self.block(0, self.size)[0]

    @property
    def weights(self) -> np.ndarray:
        return self.block(0, self.size)[1]

    def blocks(self, size: int = BLOCK_SIZE):
        for start in range(0, self.size, size):
            yield start, min(start + size, self.size)


def _trapezoid(n: int, period: float) -> tuple[np.ndarray, np.ndarray]:
    x = period * np.arange(n) / n
    return x[:, None], np.full(n, period / n)


def _sphere_factor(n_gl: int, n_phi: int) -> tuple[np.ndarray, np.ndarray]:
    c, wc = np.polynomial.legendre.leggauss(n_gl)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    cc, pp = np.meshgrid(c, phi, indexing="ij")
    nodes = _sphere_points(cc.ravel(), pp.ravel())
    # dx dy = |d(x, y)/d(cos theta, phi)| dc dphi = dc dphi / (1 + c)^2
    jac = 1.0 / (1.0 + cc.ravel()) ** 2
    w = np.repeat(wc, n_phi) * (2.0 * np.pi / n_phi) * jac
    return nodes, w


def _hopf_factor(n: int) -> tuple[np.ndarray, np.ndarray]:
    # z1 = r cos(eta) e^{i xi1}, z2 = r sin(eta) e^{i xi2}, s = log r, w = sin^2(eta)
    s, ws = _trapezoid(n, np.log(2.0))
    s, ws = s[:, 0], ws
    wq, wwq = np.polynomial.legendre.leggauss(n)
    wq = 0.5 * (wq + 1.0)
    wwq = 0.5 * wwq
    xi, wxi = _trapezoid(n, 2.0 * np.pi)
    xi = xi[:, 0]
    S, W, X1, X2 = np.meshgrid(s, wq, xi, xi, indexing="ij")
    r = np.exp(S)
    ce, se = np.sqrt(1.0 - W), np.sqrt(W)
    nodes = np.stack(
        [r * ce * np.cos(X1), r * ce * np.sin(X1), r * se * np.cos(X2), r * se * np.sin(X2)], axis=-1
    ).reshape(-1, 4)
    # d^4x = r^4 ds * (1/2) dw * dxi1 dxi2
    w = np.einsum("a,b,c,d->abcd", ws, wwq, wxi, wxi) * 0.5 * r**4
    return nodes, w.ravel()


def quadrature_rule(spec: ManifoldSpec, n: int, n_phi: int | None = None) -> QuadratureRule:
    """Standard rule with ``n`` nodes per direction.

    Tori use the trapezoid rule in each real coordinate; sphere factors use
    Gauss-Legendre in ``cos(theta)`` with ``n_phi`` (default ``n``) uniform
    azimuth nodes; the Hopf surface uses ``log r``, ``sin^2`` of the Hopf
    angle and the two phases.
    """
    if n < 2:
        raise ValueError("quadrature needs at least 2 nodes per direction")
    kind = spec.chart.kind
    if kind == "periodic-torus":
        factors = tuple(_trapezoid(n, p) for p in spec.chart.params)
    elif kind == "stereographic":
        f = _sphere_factor(n, n_phi or n)
        factors = (f,) * spec.m
    else:
        factors = (_hopf_factor(n),)
    return QuadratureRule(factors, spec, n)


def pairwise_sum(values: np.ndarray):
    """Pairwise tree reduction over the first axis with a fixed association order."""
    vals = list(np.asarray(values, dtype=float))
    if not vals:
        return 0.0
    while len(vals) > 1:
        nxt = [vals[i] + vals[i + 1] for i in range(0, len(vals) - 1, 2)]
        if len(vals) % 2:
            nxt.append(vals[-1])
        vals = nxt
    out = vals[0]
    return float(out) if np.ndim(out) == 0 else np.asarray(out)


def integrate(
    integrand: Callable[[np.ndarray], np.ndarray],
    rule: QuadratureRule,
    threads: int | None = None,
    block_size: int = BLOCK_SIZE,
) -> float:
    """``sum_k w_k f(x_k)`` with a reduction order independent of ``threads``.

    ``integrand`` maps nodes ``(B, 2m)`` to real values ``(B,)`` or to
    several integrands at once, ``(B, k)``; the result is then an array.
    """
    threads = threads or default_threads()

    def part(bounds):
        nodes, w = rule.block(*bounds)
        vals = np.asarray(integrand(nodes))
        if vals.shape[:1] != w.shape or vals.ndim > 2:
            raise ValueError(f"integrand returned shape {vals.shape}, expected ({len(w)},) or ({len(w)}, k)")
        if np.iscomplexobj(vals):
            vals = vals.real
        if vals.ndim == 2:
            return np.sum(w[:, None] * vals, axis=0)
        return float(np.sum(w * vals))

    bounds = list(rule.blocks(block_size))
    if threads == 1:
        sums = [part(b) for b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            sums = list(pool.map(part, bounds))
    return pairwise_sum(np.array(sums))
