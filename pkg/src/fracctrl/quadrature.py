"""Composite Gauss-Legendre rules with endpoint smoothing.

The convolution kernels in this package are continuous but have algebraic
(fractional-power) behaviour at interval endpoints, which caps plain
composite Gauss-Legendre at a low algebraic convergence rate.  Pushing the
nodes through the quintic smoothstep

    w(s) = 10 s^3 - 15 s^4 + 6 s^5,   w'(s) = 30 s^2 (1 - s)^2

raises the effective endpoint exponents enough that node doubling gains
well over an order of magnitude until the kernel-accuracy floor is reached.
``w`` is a degree-5 polynomial, so constant integrands are still integrated
exactly by every panel.
"""

from __future__ import annotations

import numpy as np

PANEL_SIZE = 8


def gauss_legendre_panels(n_nodes: int, panel_size: int = PANEL_SIZE):
    """Composite Gauss-Legendre rule with ``n_nodes`` total nodes on [0, 1].

    ``n_nodes`` must be a positive multiple of ``panel_size``; the interval
    is split into equal panels carrying ``panel_size`` nodes each.
    """
    if n_nodes <= 0 or n_nodes % panel_size != 0:
        raise ValueError(
            f"n_nodes must be a positive multiple of {panel_size}, got {n_nodes}"
        )
    n_panels = n_nodes // panel_size
    x, w = np.polynomial.legendre.leggauss(panel_size)
    edges = np.linspace(0.0, 1.0, n_panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def smoothstep(s):
    """Quintic smoothstep mapping [0, 1] onto [0, 1]."""
    s = np.asarray(s, dtype=float)
    return s**3 * (10.0 - 15.0 * s + 6.0 * s * s)


def smoothstep_deriv(s):
    s = np.asarray(s, dtype=float)
    return 30.0 * (s * (1.0 - s)) ** 2


def smoothed_rule(length: float, n_nodes: int, panel_size: int = PANEL_SIZE):
    """Quadrature nodes and weights for a smooth-or-endpoint-singular
    integrand on ``[0, length]``.

    Returns ``(s, w)`` with ``sum(w * f(s)) ~ int_0^length f``.  The rule is
    the composite Gauss-Legendre rule of :func:`gauss_legendre_panels`
    composed with the quintic smoothstep, which clusters nodes at both
    endpoints.
    """
    if length < 0.0:
        raise ValueError(f"length must be nonnegative, got {length}")
    base, base_w = gauss_legendre_panels(n_nodes, panel_size)
    s = length * smoothstep(base)
    w = length * smoothstep_deriv(base) * base_w
    return s, w


def smoothed_rule_unit(n_nodes: int, panel_size: int = PANEL_SIZE):
    """The [0, 1] version of :func:`smoothed_rule`, for callers that rescale."""
    base, base_w = gauss_legendre_panels(n_nodes, panel_size)
    return smoothstep(base), smoothstep_deriv(base) * base_w
