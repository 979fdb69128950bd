"""First variation of the energy and the exact discrete gradient.

Two consistent objects are provided: the discretized first-variation
integrand (three-term formula at arc-length, and the general form with
gamma'/|gamma'|^2 factors at arbitrary regular parametrization), and the
closed-form partial derivatives of the discrete energy with respect to
the node positions.  Because the derivative stencil entering the energy
is the one differentiated, the two routes agree to roundoff, and line
searches on the discrete energy see a true descent direction.
"""

from __future__ import annotations

import numpy as np

from .curves import ClosedCurve, differentiate, differentiate_adjoint
from .energy import EnergyParams, QuadratureSpec, SelfIntersectionError, signed_offsets

__all__ = [
    "first_variation_arclength",
    "first_variation_general",
    "discrete_gradient",
    "chord_uniformity",
]


def chord_uniformity(curve: ClosedCurve) -> float:
    chords = np.linalg.norm(np.roll(curve.samples, -1, axis=0) - curve.samples, axis=1)
    return float(chords.std() / chords.mean())


def _field(h, curve: ClosedCurve) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    if h.shape != curve.samples.shape:
        raise ValueError("variation field must match the curve's sample grid")
    if not np.all(np.isfinite(h)):
        raise ValueError("variation field has non-finite entries")
    return h


def first_variation_general(curve: ClosedCurve, h, params: EnergyParams,
                            quad: QuadratureSpec | None = None) -> float:
    """First variation at an arbitrary regular parametrization."""
    h = _field(h, curve)
    x = curve.samples
    n = curve.n_samples
    p, q = params.p, params.q
    g = differentiate(x, curve.derivative_rule, 1)
    dh = differentiate(h, curve.derivative_rule, 1)
    speed = np.linalg.norm(g, axis=1)
    if speed.min() <= 1e-8:
        raise SelfIntersectionError("curve is not regular: |gamma'| below 1e-8")
    t = g / speed[:, None]
    g_inv2 = g / speed[:, None] ** 2  # gamma' / |gamma'|^2
    w = signed_offsets(n)

    total = 0.0
    for i, m in enumerate(range(1, n)):
        dx = np.roll(x, -m, axis=0) - x
        dxh = np.roll(h, -m, axis=0) - h
        dist = np.linalg.norm(dx, axis=1)
        if dist.min() == 0.0:
            raise SelfIntersectionError(f"coincident samples at offset {m}")
        v = dx - w[i] * g
        perp = v - np.einsum("ij,ij->i", v, t)[:, None] * t
        pn = np.linalg.norm(perp, axis=1)
        measure = speed * np.roll(speed, -m)

        term_q = q * (np.einsum("ij,ij->i", perp, dxh)
                      - np.einsum("ij,ij->i", dx, g_inv2) * np.einsum("ij,ij->i", perp, dh)) \
            / dist**p * pn ** (q - 2)
        term_p = -p * pn**q * np.einsum("ij,ij->i", dx, dxh) / dist ** (p + 2)
        term_l = pn**q / dist**p * (np.einsum("ij,ij->i", g_inv2, dh)
                                    + np.einsum("ij,ij->i", np.roll(g_inv2, -m, axis=0),
                                                np.roll(dh, -m, axis=0)))
        total += np.sum((term_q + term_p + term_l) * measure)
    return float(total) / n**2


def first_variation_arclength(curve: ClosedCurve, h, params: EnergyParams,
                              quad: QuadratureSpec | None = None,
                              uniformity_tol: float = 1e-4) -> float:
    """Three-term first-variation formula; requires (discrete) arc-length
    parametrization, i.e. uniform chords.  Curves of length L != 1 are
    handled by the exact scaling relation
    deltaTP(S gamma, S h) = S^(q+2-p) deltaTP(gamma, h)."""
    h = _field(h, curve)
    dev = chord_uniformity(curve)
    if dev > uniformity_tol:
        raise ValueError(
            f"curve is not arc-length parametrized (chord spread {dev:.2e}); "
            "use first_variation_general or resample_arclength first")
    from .curves import length as curve_length

    L = curve_length(curve)
    if abs(L - 1.0) > 1e-12:
        # exact discrete scaling relation, keeps all length bookkeeping here
        scaled = ClosedCurve(curve.samples / L, curve.derivative_rule)
        inner = first_variation_arclength(scaled, h / L, params, quad, uniformity_tol)
        return L**params.scaling_power * inner

    # Three-term integrand at unit speed.  The |gamma'| factors of the
    # general form are dropped (they are 1 up to quadrature error here),
    # which makes this discretization combine with the leading bilinear
    # part and the four-group remainder into an exact pointwise identity
    # on the shared grid; the price is that agreement with finite
    # differences of the discrete energy is only O(h^2) rather than
    # exact, so use first_variation_general when that matters.
    x = curve.samples
    n = curve.n_samples
    p, q = params.p, params.q
    g = differentiate(x, curve.derivative_rule, 1)
    dh = differentiate(h, curve.derivative_rule, 1)
    speed = np.linalg.norm(g, axis=1)
    if speed.min() <= 1e-8:
        raise SelfIntersectionError("curve is not regular: |gamma'| below 1e-8")
    t = g / speed[:, None]
    w = signed_offsets(n)

    total = 0.0
    for i, m in enumerate(range(1, n)):
        dx = np.roll(x, -m, axis=0) - x
        dxh = np.roll(h, -m, axis=0) - h
        dist = np.linalg.norm(dx, axis=1)
        if dist.min() == 0.0:
            raise SelfIntersectionError(f"coincident samples at offset {m}")
        v = dx - w[i] * g
        perp = v - np.einsum("ij,ij->i", v, t)[:, None] * t
        pn = np.linalg.norm(perp, axis=1)
        test = dxh - np.einsum("ij,ij->i", dx, g)[:, None] * dh

        term_q = q * pn ** (q - 2) * np.einsum("ij,ij->i", perp, test) / dist**p
        term_p = -p * pn**q * np.einsum("ij,ij->i", dx, dxh) / dist ** (p + 2)
        term_l = pn**q / dist**p * (np.einsum("ij,ij->i", g, dh)
                                    + np.einsum("ij,ij->i", np.roll(g, -m, axis=0),
                                                np.roll(dh, -m, axis=0)))
        total += np.sum(term_q + term_p + term_l)
    return float(total) / n**2


def discrete_gradient(curve: ClosedCurve, params: EnergyParams,
                      quad: QuadratureSpec | None = None) -> np.ndarray:
    """L2 gradient density of the discrete energy: n times the partial
    derivatives with respect to the node positions, so that the trapezoid
    pairing (1/n) sum <grad_j, h_j> equals the directional derivative."""
    x = curve.samples
    n = curve.n_samples
    p, q = params.p, params.q
    g = differentiate(x, curve.derivative_rule, 1)
    speed = np.linalg.norm(g, axis=1)
    if speed.min() <= 1e-8:
        raise SelfIntersectionError("curve is not regular: |gamma'| below 1e-8")
    t = g / speed[:, None]
    w = signed_offsets(n)

    grad_x = np.zeros_like(x)   # direct dependence through node positions
    grad_g = np.zeros_like(x)   # dependence through the derivative samples
    for i, m in enumerate(range(1, n)):
        dx = np.roll(x, -m, axis=0) - x
        dist = np.linalg.norm(dx, axis=1)
        if dist.min() == 0.0:
            raise SelfIntersectionError(f"coincident samples at offset {m}")
        v = dx - w[i] * g
        perp = v - np.einsum("ij,ij->i", v, t)[:, None] * t
        pn = np.linalg.norm(perp, axis=1)
        measure = speed * np.roll(speed, -m)
        core = pn**q / dist**p

        # d/d(dx): q-term and -p-term
        d_dx = (q * pn ** (q - 2) / dist**p * measure)[:, None] * perp \
            - (p * pn**q / dist ** (p + 2) * measure)[:, None] * dx
        grad_x += -d_dx
        grad_x += np.roll(d_dx, m, axis=0)

        # d/d(t) through the projection: -(dx . t) * perp, then pulled
        # back through t = g/|g| (the projector to t-perp leaves perp fixed)
        d_t = -(q * pn ** (q - 2) / dist**p * measure
                * np.einsum("ij,ij->i", dx, t))[:, None] * perp
        grad_g += d_t / speed[:, None]

        # d/d|g| of the measure factors
        grad_g += (core * np.roll(speed, -m))[:, None] * t
        grad_g += np.roll((core * speed)[:, None] * np.roll(t, -m, axis=0), m, axis=0)

    total = grad_x + differentiate_adjoint(grad_g, curve.derivative_rule)
    return total / n  # (1/n^2 quadrature weight) * (n density scaling)
