import numpy as np
import pytest

from tpknot import (ClosedCurve, EnergyParams, QuadratureSpec,
                    SelfIntersectionError, Strand, classical_equivalence,
                    classify, cross_energy, make_primitive, pair_energy,
                    resample_arclength, tp_energy, transform)
from tpknot.energy import signed_offsets

from conftest import circle_energy, unit_length_circle


class TestParams:
    @pytest.mark.parametrize("p,q,regime", [
        (3.0, 2.0, "non_repulsive"),
        (4.0, 2.0, "critical"),
        (4.5, 2.0, "subcritical"),
        (5.0, 2.0, "singular"),
        (6.0, 2.0, "singular"),
    ])
    def test_regimes(self, p, q, regime):
        assert classify(p, q).regime == regime

    def test_derived_exponents(self):
        params = EnergyParams(4.5, 2.0)
        assert params.scaling_power == -0.5
        assert abs(params.beta_decay - 0.5 / 6.0) < 1e-15

    def test_invalid(self):
        with pytest.raises(ValueError):
            EnergyParams(-1.0, 2.0)
        with pytest.raises(ValueError):
            EnergyParams(4.0, 0.5)

    def test_offsets_fold_into_half_interval(self):
        w = signed_offsets(16)
        assert len(w) == 15
        assert w.max() == 0.5
        assert w.min() == -0.5 + 1 / 16
        assert np.all(np.abs(w) <= 0.5)


class TestCircleOracle:
    def test_unit_length_circle_p4(self):
        e = tp_energy(unit_length_circle(512), EnergyParams(4.0, 2.0))
        assert abs(e - np.pi**2) / np.pi**2 < 5e-3

    def test_error_halves_with_refinement(self):
        params = EnergyParams(4.0, 2.0)
        errs = [abs(tp_energy(unit_length_circle(n), params) - np.pi**2)
                for n in (128, 256, 512)]
        assert errs[1] < errs[0] and errs[2] < errs[1]

    def test_richardson_beats_plain(self):
        params = EnergyParams(4.5, 2.0)
        target = circle_energy(1.0, 4.5, 2.0)
        c = make_primitive("circle", 512, dim=2, radius=1.0)
        plain = abs(tp_energy(c, params) - target)
        rich = abs(tp_energy(c, params, QuadratureSpec("trapezoid_richardson"))
                   - target)
        assert rich < 1e-3 * plain

    def test_scaling_law_exact(self):
        params = EnergyParams(4.5, 2.0)
        c = make_primitive("circle", 128, dim=2, radius=1.0)
        base = tp_energy(c, params)
        for S in (0.5, 2.0, 10.0):
            scaled = tp_energy(transform(c, S), params)
            assert abs(scaled - S**params.scaling_power * base) < 1e-11 * abs(base)


class TestClassicalIdentity:
    def test_summandwise_identity(self):
        for kind, kwargs in (("circle", {"dim": 2, "radius": 1.0}),
                             ("ellipse", {"dim": 2, "a": 2.0, "b": 1.0}),
                             ("torus_knot", {"a": 2, "b": 3})):
            c = make_primitive(kind, 128, **kwargs)
            lhs, rhs = classical_equivalence(c, 2.0)
            assert abs(lhs - rhs) < 1e-12 * abs(rhs)

    def test_rejects_small_exponent(self):
        c = make_primitive("circle", 64, dim=2)
        with pytest.raises(ValueError):
            classical_equivalence(c, 1.5)


class TestFailureModes:
    def test_coincident_samples_detected(self):
        c = make_primitive("circle", 64, dim=2)
        x = np.asarray(c.samples).copy()
        x[40] = x[8]  # force a distant self-contact
        with pytest.raises(SelfIntersectionError):
            tp_energy(ClosedCurve(x, "central_difference"), EnergyParams(4.5, 2.0))


class TestStrands:
    def test_strand_weights_sum_to_one(self):
        s = Strand(np.stack([np.linspace(0, 1, 21), np.zeros(21)], axis=1))
        assert abs(s.weights().sum() - 1.0) < 1e-14

    def test_cross_energy_symmetric(self):
        t = np.linspace(-0.5, 0.5, 80)
        a = Strand(np.stack([t, np.zeros(80), np.zeros(80)], axis=1))
        b = Strand(np.stack([np.zeros(80), t, np.full(80, 0.3)], axis=1))
        params = EnergyParams(4.5, 2.0)
        assert abs(cross_energy(a, b, params) - cross_energy(b, a, params)) < 1e-12

    def test_pair_energy_contains_both_selves(self):
        params = EnergyParams(4.5, 2.0)
        a = make_primitive("circle", 48, dim=3, radius=1.0)
        b = transform(a, 1.0, translation=[0.0, 0.0, 10.0])
        total = pair_energy(a, b, params)
        selves = tp_energy(a, params) + tp_energy(b, params)
        assert total > selves
        assert total - selves < 0.05 * selves  # distant strands interact weakly
