"""Closed curves in R^n sampled at uniform parameters on R/Z.

A curve is represented by its samples x_j = gamma(j/n); the parameter
domain is always the unit circle R/Z, with the geometric length carried
by the embedding.  Differentiation is either spectral (Fourier
multiplier 2*pi*i*k, Nyquist mode zeroed) or by periodic central
differences; the latter is the right choice for polygonal data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import gcd

import numpy as np
from scipy.interpolate import CubicSpline

__all__ = [
    "CurveError",
    "ClosedCurve",
    "CurveSpectrum",
    "make_primitive",
    "resample_arclength",
    "derivatives",
    "length",
    "transform",
    "spectrum",
    "min_strand_distance",
    "save_curve",
    "load_curve",
]


class CurveError(ValueError):
    """Invalid curve data or construction parameters."""


def _as_samples(samples) -> np.ndarray:
    x = np.asarray(samples, dtype=float)
    if x.ndim != 2:
        raise CurveError("samples must be a 2-d array of shape (n, dim)")
    n, dim = x.shape
    if dim < 2:
        raise CurveError("dim must be >= 2")
    if n < 8:
        raise CurveError("need at least 8 samples")
    if not np.all(np.isfinite(x)):
        raise CurveError("samples contain non-finite coordinates")
    return x


@dataclass(frozen=True)
class ClosedCurve:
    """Uniformly sampled closed curve; immutable after construction."""

    samples: np.ndarray
    derivative_rule: str = "spectral"
    _coeffs: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        x = _as_samples(self.samples).copy()
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        if self.derivative_rule not in ("spectral", "central_difference"):
            raise CurveError(f"unknown derivative rule {self.derivative_rule!r}")
        coeffs = np.fft.fft(x, axis=0) / len(x)
        coeffs.setflags(write=False)
        object.__setattr__(self, "_coeffs", coeffs)

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    @property
    def params(self) -> np.ndarray:
        n = self.n_samples
        return np.arange(n) / n


@dataclass(frozen=True)
class CurveSpectrum:
    """Discrete Fourier coefficients f_hat_k = int_0^1 f e^{-2 pi i k u} du."""

    coefficients: np.ndarray  # (n, dim) complex, numpy fft frequency order

    @property
    def n(self) -> int:
        return self.coefficients.shape[0]

    @property
    def wavenumbers(self) -> np.ndarray:
        return np.fft.fftfreq(self.n, d=1.0 / self.n).astype(int)

    def coefficient(self, k: int) -> np.ndarray:
        n = self.n
        if abs(k) > n // 2:
            raise CurveError(f"mode {k} beyond Nyquist {n // 2}")
        return self.coefficients[k % n]

    def inverse(self) -> np.ndarray:
        return np.fft.ifft(self.coefficients * self.n, axis=0).real


def spectrum(curve: ClosedCurve) -> CurveSpectrum:
    return CurveSpectrum(curve._coeffs.copy())


# ---------------------------------------------------------------------------
# differentiation

def differentiate(values: np.ndarray, rule: str = "spectral", order: int = 1) -> np.ndarray:
    """Periodic derivative of sampled values on the unit parameter grid."""
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    if rule == "spectral":
        k = np.fft.fftfreq(n, d=1.0 / n)
        mult = (2j * np.pi * k) ** order
        if order % 2 == 1 and n % 2 == 0:
            mult[n // 2] = 0.0  # keep the operator real and skew-symmetric
        coeffs = np.fft.fft(values, axis=0)
        shape = (n,) + (1,) * (values.ndim - 1)
        return np.fft.ifft(coeffs * mult.reshape(shape), axis=0).real
    if rule == "central_difference":
        if order == 1:
            return (np.roll(values, -1, axis=0) - np.roll(values, 1, axis=0)) * (n / 2.0)
        if order == 2:
            return (np.roll(values, -1, axis=0) - 2 * values + np.roll(values, 1, axis=0)) * float(n) ** 2
        out = values
        for _ in range(order):
            out = differentiate(out, rule, 1)
        return out
    raise CurveError(f"unknown derivative rule {rule!r}")


def differentiate_adjoint(values: np.ndarray, rule: str = "spectral") -> np.ndarray:
    """Adjoint of the first-derivative operator (skew-symmetric: D^T = -D)."""
    return -differentiate(values, rule, 1)


def derivatives(curve: ClosedCurve):
    """First and second derivative samples of the coordinate functions."""
    first = differentiate(curve.samples, curve.derivative_rule, 1)
    second = differentiate(curve.samples, curve.derivative_rule, 2)
    return first, second


def length(curve: ClosedCurve) -> float:
    """Trapezoid rule for int |gamma'|; chord sum for polygonal data."""
    if curve.derivative_rule == "central_difference":
        d = np.roll(curve.samples, -1, axis=0) - curve.samples
        return float(np.sum(np.linalg.norm(d, axis=1)))
    g = differentiate(curve.samples, curve.derivative_rule, 1)
    return float(np.mean(np.linalg.norm(g, axis=1)))


def transform(curve: ClosedCurve, scale: float, translation=None) -> ClosedCurve:
    if scale == 0:
        raise CurveError("scale must be nonzero")
    t = np.zeros(curve.dim) if translation is None else np.asarray(translation, dtype=float)
    return ClosedCurve(curve.samples * scale + t, curve.derivative_rule)


def min_strand_distance(curve: ClosedCurve, exclusion: float = 0.05) -> float:
    """Smallest chord between samples whose parameter distance exceeds
    `exclusion`; gauges self-avoidance without flagging neighbors."""
    x = curve.samples
    n = curve.n_samples
    m_min = max(2, int(np.ceil(exclusion * n)))
    best = np.inf
    for m in range(m_min, n - m_min + 1):
        d = np.linalg.norm(np.roll(x, -m, axis=0) - x, axis=1)
        best = min(best, float(d.min()))
    return best


# ---------------------------------------------------------------------------
# primitives

def _embed(xy: np.ndarray, dim: int) -> np.ndarray:
    if dim < xy.shape[1]:
        raise CurveError(f"dim {dim} too small for this primitive")
    out = np.zeros((xy.shape[0], dim))
    out[:, : xy.shape[1]] = xy
    return out


def make_primitive(kind: str, n_samples: int, dim: int = 3, **params) -> ClosedCurve:
    """Seed curves: circle, ellipse, torus_knot(a, b), perturbed_circle
    (amplitude, mode), polygon(vertices)."""
    if n_samples < 8:
        raise CurveError("n_samples must be >= 8")
    u = np.arange(n_samples) / n_samples
    th = 2 * np.pi * u

    if kind == "circle":
        r = params.get("radius", 1.0)
        if r <= 0:
            raise CurveError("circle radius must be positive")
        xy = np.column_stack([r * np.cos(th), r * np.sin(th)])
        return ClosedCurve(_embed(xy, dim))

    if kind == "ellipse":
        a = params.get("a", 2.0)
        b = params.get("b", 1.0)
        if a <= 0 or b <= 0:
            raise CurveError("ellipse axes must be positive")
        xy = np.column_stack([a * np.cos(th), b * np.sin(th)])
        return ClosedCurve(_embed(xy, dim))

    if kind == "torus_knot":
        a = int(params.get("a", 2))
        b = int(params.get("b", 3))
        if dim < 3:
            raise CurveError("torus knot needs dim >= 3")
        if a < 1 or b < 1 or gcd(a, b) != 1:
            raise CurveError(f"torus knot winding numbers must be coprime, got ({a}, {b})")
        r = 2.0 + np.cos(b * th)
        xyz = np.column_stack([r * np.cos(a * th), r * np.sin(a * th), np.sin(b * th)])
        curve = ClosedCurve(_embed(xyz, dim))
        if min_strand_distance(curve) <= 0:
            raise CurveError("torus knot parameters produce a self-intersection")
        return curve

    if kind == "perturbed_circle":
        amp = params.get("amplitude", 0.05)
        mode = int(params.get("mode", 5))
        if not 0 <= amp < 1:
            raise CurveError("perturbation amplitude must lie in [0, 1)")
        r = 1.0 + amp * np.cos(mode * th)
        xy = np.column_stack([r * np.cos(th), r * np.sin(th)])
        curve = ClosedCurve(_embed(xy, dim))
        if amp > 0 and min_strand_distance(curve) < 1e-3:
            raise CurveError("perturbation causes near self-intersection")
        return curve

    if kind == "polygon":
        verts = np.asarray(params["vertices"], dtype=float)
        if verts.ndim != 2 or len(verts) < 3:
            raise CurveError("polygon needs at least 3 vertices")
        edges = np.roll(verts, -1, axis=0) - verts
        el = np.linalg.norm(edges, axis=1)
        if np.any(el == 0):
            raise CurveError("polygon has a degenerate edge")
        cum = np.concatenate([[0.0], np.cumsum(el)])
        total = cum[-1]
        s = u * total
        idx = np.searchsorted(cum, s, side="right") - 1
        idx = np.clip(idx, 0, len(verts) - 1)
        frac = (s - cum[idx]) / el[idx]
        pts = verts[idx] + frac[:, None] * edges[idx]
        return ClosedCurve(_embed(pts, dim), derivative_rule="central_difference")

    raise CurveError(f"unknown primitive kind {kind!r}")


# ---------------------------------------------------------------------------
# resampling

def _trig_eval(coeffs: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Evaluate the trigonometric interpolant at arbitrary parameters."""
    n = coeffs.shape[0]
    k = np.fft.fftfreq(n, d=1.0 / n)
    ph = np.exp(2j * np.pi * np.outer(u, k))
    if n % 2 == 0:
        ph[:, n // 2] = np.cos(2 * np.pi * (n // 2) * u)  # real Nyquist mode
    return (ph @ coeffs).real


def _interpolator(curve: ClosedCurve):
    if curve.derivative_rule == "central_difference":
        u_ext = np.concatenate([curve.params, [1.0]])
        x_ext = np.vstack([curve.samples, curve.samples[:1]])
        spl = CubicSpline(u_ext, x_ext, bc_type="periodic")
        return lambda u: spl(np.mod(u, 1.0))
    coeffs = curve._coeffs
    return lambda u: _trig_eval(coeffs, u)


def resample_arclength(curve: ClosedCurve, n_out: int | None = None) -> ClosedCurve:
    """Redistribute samples so that all chord lengths are equal.

    The first sample is kept as anchor.  The result is a fixed point of
    the redistribution map, so resampling twice is the identity up to
    the iteration tolerance.
    """
    n_out = curve.n_samples if n_out is None else int(n_out)
    if n_out < 8:
        raise CurveError("n_out must be >= 8")
    interp = _interpolator(curve)
    if length(curve) <= 0:
        raise CurveError("degenerate curve of zero length")

    u = np.arange(n_out) / n_out
    if n_out != curve.n_samples:
        # seed from the dense cumulative chord length
        nf = 8 * max(curve.n_samples, n_out)
        uf = np.arange(nf + 1) / nf
        pf = interp(uf)
        cl = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pf, axis=0), axis=1))])
        targets = np.arange(n_out) / n_out * cl[-1]
        u = np.interp(targets, cl, uf)

    pts = interp(u)
    for _ in range(200):
        chords = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
        mean = chords.mean()
        if chords.std() <= 1e-10 * mean:
            break
        cum = np.concatenate([[0.0], np.cumsum(chords)])
        u_ext = np.concatenate([u, [u[0] + 1.0]])
        targets = np.arange(n_out) / n_out * cum[-1]
        u = np.interp(targets, cum, u_ext)
        u = np.mod(u - u[0], 1.0)  # anchor the first node at sample 0
        u[0] = 0.0
        pts = interp(u)
    return ClosedCurve(pts, curve.derivative_rule)


# ---------------------------------------------------------------------------
# on-disk format

def save_curve(curve: ClosedCurve, path) -> None:
    payload = {"dim": curve.dim, "samples": curve.samples.tolist()}
    with open(path, "w") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_curve(path, derivative_rule: str = "spectral") -> ClosedCurve:
    with open(path) as fh:
        payload = json.load(fh)
    samples = _as_samples(payload["samples"])
    if samples.shape[1] != int(payload["dim"]):
        raise CurveError("dim field inconsistent with sample width")
    return ClosedCurve(samples, derivative_rule)
