import numpy as np
import pytest

from tpknot import (ClosedCurve, EnergyParams, FlowConfig, discrete_gradient,
                    flow_step, lagrange_multiplier, length, length_gradient,
                    make_primitive, run_flow, stationarity_certificate)

PARAMS = EnergyParams(4.5, 2.0)


def l2(a, b):
    return float(np.sum(a * b)) / len(a)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            FlowConfig(params=PARAMS, armijo_c=1.5)
        with pytest.raises(ValueError):
            FlowConfig(params=PARAMS, shrink=0.0)
        with pytest.raises(ValueError):
            FlowConfig(params=EnergyParams(5.5, 3.0), precondition=True)


class TestLagrangeMultiplier:
    def test_projection_orthogonal(self, unit_trefoil):
        g = discrete_gradient(unit_trefoil, PARAMS)
        lam = lagrange_multiplier(g, unit_trefoil)
        ell = length_gradient(unit_trefoil)
        resid = abs(l2(g + lam * ell, ell))
        scale = np.sqrt(l2(g, g) * l2(ell, ell))
        assert resid < 1e-10 * scale

    def test_zero_when_already_orthogonal(self, unit_trefoil, rng):
        ell = length_gradient(unit_trefoil)
        g = rng.standard_normal(ell.shape)
        g -= ell * l2(g, ell) / l2(ell, ell)
        assert abs(lagrange_multiplier(g, unit_trefoil)) < 1e-12 * np.sqrt(l2(g, g))

    def test_circle_projected_gradient_small(self):
        c = make_primitive("circle", 512, dim=2, radius=1.0 / (2 * np.pi))
        g = discrete_gradient(c, PARAMS)
        lam = lagrange_multiplier(g, c)
        proj = g + lam * length_gradient(c)
        assert np.sqrt(l2(proj, proj)) < 1e-4 * np.sqrt(l2(g, g))


class TestDescent:
    def test_first_step_decreases_energy(self):
        pc = make_primitive("perturbed_circle", 64, dim=2, amplitude=0.05, mode=5)
        config = FlowConfig(params=PARAMS, max_iters=3, step0=1e-3)
        trace = run_flow(pc, config)
        energies = [row[1] for row in trace.rows]
        assert energies[1] < energies[0]

    def test_monotone_and_length_exact(self):
        pc = make_primitive("perturbed_circle", 64, dim=2, amplitude=0.05, mode=5)
        config = FlowConfig(params=PARAMS, max_iters=10, step0=1e-3)
        trace = run_flow(pc, config)
        energies = [row[1] for row in trace.rows]
        lengths = [row[2] for row in trace.rows]
        assert all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))
        assert max(abs(x - 1.0) for x in lengths) <= 1e-8

    def test_circle_terminates_immediately(self):
        c = make_primitive("circle", 256, dim=2, radius=1.0)
        config = FlowConfig(params=PARAMS, max_iters=5, tol_grad=1e-4)
        trace = run_flow(c, config)
        assert trace.stopped_by == "stationary"
        assert trace.final_state.iter == 0

    def test_guard_rejects_tight_input(self):
        t = 2 * np.pi * np.arange(128) / 128
        s = np.stack([np.cos(t), np.sin(t) * np.cos(t), 0.002 * np.sin(t)], axis=1)
        config = FlowConfig(params=PARAMS, max_iters=2, min_distance_guard=0.01)
        with pytest.raises(ValueError):
            run_flow(ClosedCurve(s), config)

    def test_preconditioned_reaches_stationarity(self):
        pc = make_primitive("perturbed_circle", 64, dim=2, amplitude=0.05, mode=5)
        config = FlowConfig(params=PARAMS, max_iters=100, step0=1e-2,
                            precondition=True, tol_grad=1e-4)
        trace = run_flow(pc, config)
        assert trace.stopped_by == "stationary"
        state = trace.final_state
        assert state.grad_norm <= config.tol_grad
        # certificate: random length-preserving fields see a tiny slope
        cert = stationarity_certificate(state.curve, PARAMS)
        assert cert <= 2 * config.tol_grad
        # preconditioning does not move the stationary set
        g = discrete_gradient(state.curve, PARAMS)
        lam = lagrange_multiplier(g, state.curve)
        plain = g + lam * length_gradient(state.curve)
        assert np.sqrt(l2(plain, plain)) <= config.tol_grad
