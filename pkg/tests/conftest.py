import numpy as np
import pytest
from scipy.special import gamma as gamma_fn

from tpknot import (ClosedCurve, length, make_primitive, resample_arclength)


def wallis(m: float) -> float:
    """int_0^{2pi} |sin(theta/2)|^m dtheta in closed form (m > -1)."""
    return 2.0 * np.sqrt(np.pi) * gamma_fn((m + 1) / 2) / gamma_fn(m / 2 + 1)


def circle_energy(radius: float, p: float, q: float) -> float:
    """Closed-form tangent-point energy of a circle."""
    return 2 * np.pi * radius**2 * (2 * radius) ** (q - p) * wallis(2 * q - p)


def unit_length_circle(n: int) -> ClosedCurve:
    return make_primitive("circle", n, dim=2, radius=1.0 / (2 * np.pi))


def smooth_field(rng, n: int, dim: int, k_max: int = 5, scale: float = 0.01):
    """Random band-limited periodic vector field."""
    u = np.arange(n) / n
    h = np.zeros((n, dim))
    for k in range(1, k_max + 1):
        amp = rng.standard_normal((2, dim)) / k**2
        h += (amp[0] * np.cos(2 * np.pi * k * u)[:, None]
              + amp[1] * np.sin(2 * np.pi * k * u)[:, None])
    return scale * h


@pytest.fixture(scope="session")
def unit_trefoil():
    """Arc-length trefoil normalized to length 1, n = 256."""
    curve = resample_arclength(make_primitive("torus_knot", 256, a=2, b=3), 256)
    return ClosedCurve(curve.samples / length(curve), "spectral")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
