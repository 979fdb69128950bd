"""Generalized tangent-point energies by singular double quadrature.

The energy of a closed curve is the double integral over (u, w) of

    |P_perp(dgamma - w gamma'(u))|^q / |dgamma|^p  * |gamma'(u+w)| |gamma'(u)|

where dgamma = gamma(u+w) - gamma(u) and P_perp projects out the unit
tangent at u.  The diagonal w = 0 is excluded from the trapezoid sum;
the numerator is evaluated in the shifted form, which is identical to
|P_perp(dgamma)|^q but free of cancellation near the diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import ClosedCurve, differentiate

__all__ = [
    "EnergyParams",
    "QuadratureSpec",
    "SelfIntersectionError",
    "Strand",
    "classify",
    "tp_energy",
    "pair_energy",
    "classical_equivalence",
    "signed_offsets",
]


class SelfIntersectionError(ValueError):
    """Coincident or intersecting strands where the integrand blows up."""


@dataclass(frozen=True)
class EnergyParams:
    """Exponent pair of the energy; regime and derived exponents are
    always recomputed from (p, q)."""

    p: float
    q: float

    def __post_init__(self):
        if self.p <= 0:
            raise ValueError("p must be positive")
        if self.q < 1:
            raise ValueError("q must be >= 1")

    @property
    def regime(self) -> str:
        p, q = self.p, self.q
        if p < q + 2:
            return "non_repulsive"
        if p == q + 2:
            return "critical"
        if p < 2 * q + 1:
            return "subcritical"
        return "singular"

    @property
    def scaling_power(self) -> float:
        return self.q + 2 - self.p

    @property
    def beta_decay(self) -> float:
        return (self.p - self.q - 2) / (self.q + 4)


def classify(p: float, q: float) -> EnergyParams:
    return EnergyParams(float(p), float(q))


@dataclass(frozen=True)
class QuadratureSpec:
    rule: str = "trapezoid_diagonal_excluded"
    n_offsets: int | None = None  # defaults to the curve's sample count

    def __post_init__(self):
        if self.rule not in ("trapezoid_diagonal_excluded", "trapezoid_richardson"):
            raise ValueError(f"unknown quadrature rule {self.rule!r}")
        if self.n_offsets is not None and self.n_offsets % 2 != 0:
            raise ValueError("n_offsets must be even")


def signed_offsets(n: int) -> np.ndarray:
    """w_m for m = 1..n-1 folded into (-1/2, 1/2]."""
    m = np.arange(1, n)
    w = m / n
    return np.where(w > 0.5, w - 1.0, w)


def _tangents(g: np.ndarray):
    speed = np.linalg.norm(g, axis=1)
    if speed.min() <= 1e-8:
        raise SelfIntersectionError("curve is not regular: |gamma'| vanishes")
    return g / speed[:, None], speed


def _energy_sum(x: np.ndarray, g: np.ndarray, p: float, q: float) -> float:
    n = len(x)
    t, speed = _tangents(g)
    w = signed_offsets(n)
    partial = np.empty(n - 1)
    for i, m in enumerate(range(1, n)):
        dx = np.roll(x, -m, axis=0) - x
        dist = np.linalg.norm(dx, axis=1)
        if dist.min() == 0.0:
            raise SelfIntersectionError(f"coincident samples at offset {m}")
        v = dx - w[i] * g  # shifted numerator, same normal part as dx
        perp = v - np.einsum("ij,ij->i", v, t)[:, None] * t
        num = np.linalg.norm(perp, axis=1)
        vals = num**q / dist**p * speed * np.roll(speed, -m)
        partial[i] = vals.sum()
    return float(partial.sum()) / n**2


def _subsampled(curve: ClosedCurve) -> ClosedCurve:
    if curve.n_samples % 2 or curve.n_samples < 16:
        raise ValueError("Richardson rule needs an even sample count >= 16")
    return ClosedCurve(curve.samples[::2], curve.derivative_rule)


def tp_energy(curve: ClosedCurve, params: EnergyParams, quad: QuadratureSpec | None = None) -> float:
    """Discrete tangent-point energy.  In the singular regime the value
    is still returned; it diverges under refinement unless the curve is
    a straight line."""
    quad = quad or QuadratureSpec()
    x = curve.samples
    g = differentiate(x, curve.derivative_rule, 1)
    e = _energy_sum(x, g, params.p, params.q)
    if quad.rule == "trapezoid_richardson":
        alpha = 2 * params.q - params.p + 1
        if alpha <= 0:
            return e  # no convergent leading order to extrapolate
        coarse = _subsampled(curve)
        gc = differentiate(coarse.samples, coarse.derivative_rule, 1)
        ec = _energy_sum(coarse.samples, gc, params.p, params.q)
        return e + (e - ec) / (2.0**alpha - 1.0)
    return e


# ---------------------------------------------------------------------------
# open strands and pair energies

@dataclass(frozen=True)
class Strand:
    """Open polyline sampled at uniform parameters on [0, 1], endpoints
    included; used for two-strand interaction experiments."""

    samples: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=float)
        if x.ndim != 2 or len(x) < 2:
            raise ValueError("strand needs at least 2 sample points")
        x = x.copy()
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)

    @property
    def n_samples(self) -> int:
        return len(self.samples)

    def tangents(self):
        x = self.samples
        h = 1.0 / (self.n_samples - 1)
        g = np.gradient(x, h, axis=0)
        return g

    def weights(self) -> np.ndarray:
        w = np.full(self.n_samples, 1.0 / (self.n_samples - 1))
        w[0] *= 0.5
        w[-1] *= 0.5
        return w


def _strand_data(obj):
    if isinstance(obj, ClosedCurve):
        x = obj.samples
        g = differentiate(x, obj.derivative_rule, 1)
        w = np.full(len(x), 1.0 / len(x))
        return x, g, w, True
    if isinstance(obj, Strand):
        return obj.samples, obj.tangents(), obj.weights(), False
    raise TypeError("expected ClosedCurve or Strand")


def _self_energy(obj, params: EnergyParams) -> float:
    if isinstance(obj, ClosedCurve):
        return tp_energy(obj, params)
    x, g, w, _ = _strand_data(obj)
    t, speed = _tangents(g)
    total = 0.0
    n = len(x)
    for j in range(n):
        dx = np.delete(x, j, axis=0) - x[j]
        dist = np.linalg.norm(dx, axis=1)
        if dist.min() == 0.0:
            raise SelfIntersectionError("coincident strand samples")
        perp = dx - np.outer(dx @ t[j], t[j])
        num = np.linalg.norm(perp, axis=1)
        wt = np.delete(w, j) * np.delete(speed, j)
        total += w[j] * speed[j] * np.sum(num**params.q / dist**params.p * wt)
    return total


def _cross_term(a, b, params: EnergyParams) -> float:
    """One-directional cross term: tangent lines on a, points on b."""
    xa, ga, wa, _ = _strand_data(a)
    xb, gb, wb, _ = _strand_data(b)
    ta, sa = _tangents(ga)
    sb = np.linalg.norm(gb, axis=1)
    total = 0.0
    for j in range(len(xa)):
        dx = xb - xa[j]
        dist = np.linalg.norm(dx, axis=1)
        if dist.min() == 0.0:
            raise SelfIntersectionError("strand images intersect")
        perp = dx - np.outer(dx @ ta[j], ta[j])
        num = np.linalg.norm(perp, axis=1)
        total += wa[j] * sa[j] * np.sum(num**params.q / dist**params.p * wb * sb)
    return total


def cross_energy(a, b, params: EnergyParams) -> float:
    """Both cross double integrals of the two-strand energy."""
    return _cross_term(a, b, params) + _cross_term(b, a, params)


def pair_energy(a, b, params: EnergyParams, quad: QuadratureSpec | None = None) -> float:
    """TP(a) + TP(b) + cross interaction; symmetric in (a, b)."""
    return _self_energy(a, params) + _self_energy(b, params) + cross_energy(a, b, params)


# ---------------------------------------------------------------------------
# classical tangent-point family

def classical_equivalence(curve: ClosedCurve, q_cls: float, quad: QuadratureSpec | None = None):
    """Discrete Strzelecki-von der Mosel energy (2r = chord^2 / dist)
    against 2^q times the decoupled energy at (p, q) = (2q, q), on
    identical nodes.  The identity holds summand-wise."""
    if q_cls < 2:
        raise ValueError("classical exponent must be >= 2")
    x = curve.samples
    g = differentiate(x, curve.derivative_rule, 1)
    t, speed = _tangents(g)
    n = len(x)
    total = 0.0
    for m in range(1, n):
        dx = np.roll(x, -m, axis=0) - x
        dist = np.linalg.norm(dx, axis=1)
        if dist.min() == 0.0:
            raise SelfIntersectionError(f"coincident samples at offset {m}")
        perp = dx - np.einsum("ij,ij->i", dx, t)[:, None] * t
        tp_dist = np.linalg.norm(perp, axis=1)
        with np.errstate(divide="ignore"):
            inv_radius = np.where(tp_dist > 0, 2.0 * tp_dist / dist**2, 0.0)
        total += np.sum(inv_radius**q_cls * speed * np.roll(speed, -m))
    lhs = total / n**2
    rhs = 2.0**q_cls * tp_energy(curve, EnergyParams(2 * q_cls, q_cls), quad)
    return lhs, rhs
