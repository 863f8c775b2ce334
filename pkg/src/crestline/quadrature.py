"""Composite Gauss-Legendre rules, including a variant for integrands with an
inverse-square-root singularity at the right endpoint."""
from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=32)
def _leggauss(order: int):
    return np.polynomial.legendre.leggauss(order)


def gauss_legendre(a: float, b: float, panels: int = 16, order: int = 16):
    """Nodes and weights of a composite Gauss-Legendre rule on [a, b]."""
    x, w = _leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def integrate(f, a: float, b: float, panels: int = 16, order: int = 16) -> float:
    nodes, weights = gauss_legendre(a, b, panels, order)
    return float(np.dot(weights, f(nodes)))


def integrate_sqrt_endpoint(g_over_v, a: float, b: float, split: float = 0.5,
                            panels: int = 16, order: int = 16) -> float:
    """Integrate 1/sqrt(G(tau)) over [a, b] where G(b) = 0 simply.

    ``g_over_v(v)`` must return G(b - v) / v for v > 0, a function that stays
    smooth and positive as v -> 0. The interval is split at
    ``a + split*(b - a)``; the left part is ordinary Gauss-Legendre and the
    right part uses tau = b - sigma**2, which turns the integrand into
    2 / sqrt(G(b - sigma**2) / sigma**2).
    """
    c = a + split * (b - a)
    left_nodes, left_w = gauss_legendre(a, c, panels, order)
    left = np.dot(left_w, 1.0 / np.sqrt((b - left_nodes) * g_over_v(b - left_nodes)))
    sig_nodes, sig_w = gauss_legendre(0.0, np.sqrt(b - c), panels, order)
    right = np.dot(sig_w, 2.0 / np.sqrt(g_over_v(sig_nodes**2)))
    return float(left + right)
