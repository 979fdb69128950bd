"""Fixed-length gradient descent for the tangent-point energy at q = 2.

Each step projects the energy gradient against the length gradient
(closed-form Lagrange multiplier), optionally preconditions the descent
direction with the inverse Euler-Lagrange symbol, and Armijo-backtracks
on the constrained energy: every candidate is rescaled to length one and
arc-length resampled before evaluation, so accepted steps are monotone
by construction and the constraint is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .curves import (ClosedCurve, differentiate, differentiate_adjoint,
                     length as curve_length, min_strand_distance,
                     resample_arclength)
from .energy import EnergyParams, SelfIntersectionError, tp_energy
from .multiplier import MultiplierTable, build_multiplier_table, el_multiplier
from .variation import discrete_gradient
from .diagnostics import bilipschitz_constant

__all__ = [
    "FlowConfig",
    "FlowState",
    "FlowTrace",
    "FlowStallError",
    "length_gradient",
    "lagrange_multiplier",
    "flow_step",
    "run_flow",
    "stationarity_certificate",
    "TRACE_COLUMNS",
]

TRACE_COLUMNS = ("iter", "energy", "length", "grad_norm", "lambda",
                 "min_dist", "bilip", "step")

_LAMBDA_FLOOR = 1e-3
_STEP_UNDERFLOW = 1e-14


class FlowStallError(RuntimeError):
    """Line search underflowed; carries the last state for diagnostics."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


@dataclass(frozen=True)
class FlowConfig:
    params: EnergyParams
    max_iters: int = 500
    step0: float = 1e-3
    armijo_c: float = 1e-4
    shrink: float = 0.5
    precondition: bool = False
    k_max: int = 64
    min_distance_guard: float = 1e-3
    resample_every: int = 10
    tol_grad: float = 1e-4

    def __post_init__(self):
        if self.precondition and self.params.q != 2:
            raise ValueError("spectral preconditioning needs q = 2")
        if not 0 < self.armijo_c < 1:
            raise ValueError("armijo_c must be in (0, 1)")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must be in (0, 1)")
        for name in ("max_iters", "step0", "k_max", "min_distance_guard",
                     "resample_every", "tol_grad"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class FlowState:
    iter: int
    curve: ClosedCurve
    energy: float
    grad_norm: float
    lam: float
    min_dist: float
    bilip: float
    last_step: float

    def trace_row(self):
        return (self.iter, self.energy, curve_length(self.curve),
                self.grad_norm, self.lam, self.min_dist, self.bilip,
                self.last_step)


@dataclass
class FlowTrace:
    columns: tuple = TRACE_COLUMNS
    rows: list = field(default_factory=list)
    final_state: FlowState | None = None
    stopped_by: str = ""

    def append(self, state: FlowState):
        self.rows.append(state.trace_row())


def length_gradient(curve: ClosedCurve) -> np.ndarray:
    """L2 gradient density of the length functional: the adjoint
    derivative of the unit tangent (discrete -gamma'' for arc-length)."""
    g = differentiate(curve.samples, curve.derivative_rule, 1)
    t = g / np.linalg.norm(g, axis=1)[:, None]
    return differentiate_adjoint(t, curve.derivative_rule)


def _l2(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.sum(a * b)) / len(a)


def lagrange_multiplier(gradient: np.ndarray, curve: ClosedCurve) -> float:
    """Closed-form multiplier making gradient + lam * ell orthogonal to
    the length gradient ell in the discrete L2 pairing."""
    ell = length_gradient(curve)
    denom = _l2(ell, ell)
    if denom <= 1e-30:
        raise ValueError("degenerate curve: zero length gradient")
    return -_l2(gradient, ell) / denom


def _precondition(direction: np.ndarray, table: MultiplierTable,
                  p: float, lam: float) -> np.ndarray:
    n = len(direction)
    coeff = np.fft.fft(direction, axis=0)
    k = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    sym = np.array([el_multiplier(kk, p, lam, table) if abs(kk) <= table.k_max
                    else el_multiplier(int(np.sign(kk)) * table.k_max, p, lam, table)
                    for kk in k])
    out = np.zeros_like(coeff)
    nz = sym > 0
    out[nz] = coeff[nz] / sym[nz][:, None]
    out[k == 0] = 0.0  # translations are projected out
    return np.fft.ifft(out, axis=0).real


def _normalized(samples: np.ndarray, rule: str, n: int) -> ClosedCurve:
    cand = resample_arclength(ClosedCurve(samples, rule), n)
    L = curve_length(cand)
    if L <= 0:
        raise ValueError("degenerate candidate curve")
    # scaling last: it preserves equal chords and makes the length
    # exactly one (the trapezoid length is homogeneous in the samples)
    return ClosedCurve(cand.samples / L, rule)


def _make_state(it: int, curve: ClosedCurve, cfg: FlowConfig,
                last_step: float, gradient=None):
    gradient = discrete_gradient(curve, cfg.params) if gradient is None else gradient
    lam = lagrange_multiplier(gradient, curve)
    projected = gradient + lam * length_gradient(curve)
    grad_norm = float(np.sqrt(_l2(projected, projected)))
    return FlowState(
        iter=it,
        curve=curve,
        energy=tp_energy(curve, cfg.params),
        grad_norm=grad_norm,
        lam=lam,
        min_dist=min_strand_distance(curve),
        bilip=bilipschitz_constant(curve),
        last_step=last_step,
    ), projected


def flow_step(state: FlowState, config: FlowConfig,
              table: MultiplierTable | None = None) -> FlowState:
    """One accepted descent step (Armijo on the fixed-length energy)."""
    curve = state.curve
    n = curve.n_samples
    gradient = discrete_gradient(curve, config.params)
    lam = lagrange_multiplier(gradient, curve)
    projected = gradient + lam * length_gradient(curve)
    direction = -projected
    if config.precondition:
        if table is None:
            table = build_multiplier_table(config.params.p, config.k_max)
        direction = _precondition(direction, table, config.params.p,
                                  max(lam, _LAMBDA_FLOOR))
    slope = _l2(projected, direction)  # negative for a descent direction
    if slope >= 0:
        raise FlowStallError("search direction is not a descent direction", state)

    # warm-start from the last accepted step and let it grow again, so
    # the preconditioned flow can reach its natural O(1) step size
    step = config.step0 if state.last_step <= 0 else state.last_step / config.shrink
    while step > _STEP_UNDERFLOW:
        try:
            cand = _normalized(curve.samples + step * direction,
                               curve.derivative_rule, n)
            if min_strand_distance(cand) <= config.min_distance_guard:
                raise ValueError("min-distance guard violated")
            energy = tp_energy(cand, config.params)
        except (ValueError, SelfIntersectionError):
            step *= config.shrink
            continue
        if energy <= state.energy + config.armijo_c * step * slope:
            new_state, _ = _make_state(state.iter + 1, cand, config, step)
            return new_state
        step *= config.shrink
    raise FlowStallError(
        f"line search underflow at iter {state.iter} "
        f"(energy {state.energy:.6g}, grad_norm {state.grad_norm:.3g})", state)


def run_flow(curve: ClosedCurve, config: FlowConfig) -> FlowTrace:
    """Descend until tol_grad, max_iters, or stall; returns the full
    per-iteration trace."""
    start = _normalized(np.asarray(curve.samples), curve.derivative_rule,
                        curve.n_samples)
    if min_strand_distance(start) <= config.min_distance_guard:
        raise ValueError("input curve violates the min-distance guard")
    table = (build_multiplier_table(config.params.p, config.k_max)
             if config.precondition else None)
    state, _ = _make_state(0, start, config, 0.0)
    trace = FlowTrace()
    trace.append(state)
    while True:
        if state.grad_norm <= config.tol_grad:
            trace.stopped_by = "stationary"
            break
        if state.iter >= config.max_iters:
            trace.stopped_by = "max_iters"
            break
        try:
            state = flow_step(state, config, table)
        except FlowStallError:
            trace.stopped_by = "stall"
            break
        if config.resample_every and state.iter % config.resample_every == 0:
            resampled = _normalized(np.asarray(state.curve.samples),
                                    state.curve.derivative_rule,
                                    state.curve.n_samples)
            state, _ = _make_state(state.iter, resampled, config,
                                   state.last_step)
        trace.append(state)
    trace.final_state = state
    return trace


def stationarity_certificate(curve: ClosedCurve, params: EnergyParams,
                             n_fields: int = 20, seed: int = 0) -> float:
    """Largest |directional derivative| of the fixed-length energy along
    seeded random length-preserving (projected) smooth unit test fields."""
    rng = np.random.default_rng(seed)
    n, dim = curve.samples.shape
    u = np.arange(n) / n
    gradient = discrete_gradient(curve, params)
    ell = length_gradient(curve)
    worst = 0.0
    for _ in range(n_fields):
        h = np.zeros((n, dim))
        for k in range(1, 7):
            amp = rng.standard_normal((2, dim)) / k**2
            h += (amp[0] * np.cos(2 * np.pi * k * u)[:, None]
                  + amp[1] * np.sin(2 * np.pi * k * u)[:, None])
        h -= ell * _l2(h, ell) / _l2(ell, ell)  # length-preserving to 1st order
        h /= np.sqrt(_l2(h, h))
        worst = max(worst, abs(_l2(gradient, h)))
    return worst
