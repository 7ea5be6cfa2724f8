import numpy as np
import pytest

from taylorcbf.barriers import ClassK
from taylorcbf.systems import DerivativeChain
from taylorcbf.taylor import (RemainderState, TaylorConfig, build_attcbf_row,
                              build_ttcbf_row, r_step_condition, taylor_step,
                              worst_case_remainder, worst_case_top)

from oracles import box_min_enumerate


def wall_chain(x=(1.0, 2.0)):
    """Double integrator with h = 5 - p: hdot = -v, hddot = -u."""
    p, v = x
    return DerivativeChain(r=2, h0=5.0 - p, derivs=[-v], top_drift=0.0,
                           top_input=[-1.0])


class TestTaylorStep:
    def test_values(self):
        assert taylor_step(6, 0.01) == pytest.approx(0.06)
        assert taylor_step(2, 0.05) == pytest.approx(0.10)
        assert taylor_step(1, 0.05) == 0.05

    def test_config_consistency_enforced(self):
        cfg = TaylorConfig(dt=0.05, r=2)
        assert cfg.delta_T == taylor_step(2, 0.05)
        with pytest.raises(ValueError):
            TaylorConfig(dt=0.05, r=2, delta_T=0.2)
        with pytest.raises(ValueError):
            TaylorConfig(dt=-0.1, r=2)
        with pytest.raises(ValueError):
            TaylorConfig(dt=0.1, r=0)


class TestWorstCaseTop:
    def test_example(self):
        chain = DerivativeChain(r=1, h0=0.0, derivs=[], top_drift=1.0,
                                top_input=[2.0, -3.0])
        assert worst_case_top(chain, [-1, -1], [1, 1]) == pytest.approx(-4.0)

    def test_zero_row(self):
        chain = DerivativeChain(r=1, h0=0.0, derivs=[], top_drift=7.5,
                                top_input=[0.0, 0.0])
        assert worst_case_top(chain, [-1, -1], [1, 1]) == 7.5

    def test_wall_barrier(self):
        assert worst_case_top(wall_chain(), [-1.0], [1.0]) == -1.0

    def test_vertex_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            m = rng.integers(1, 5)
            drift = rng.normal()
            coeffs = rng.normal(size=m)
            lo = rng.uniform(-3, 0, size=m)
            hi = lo + rng.uniform(0, 3, size=m)
            chain = DerivativeChain(r=1, h0=0.0, derivs=[], top_drift=drift,
                                    top_input=coeffs)
            assert abs(worst_case_top(chain, lo, hi)
                       - box_min_enumerate(drift, coeffs, lo, hi)) <= 1e-12


class TestWorstCaseRemainder:
    def test_example(self):
        cfg = TaylorConfig(dt=0.05, r=2)
        mem = RemainderState(prev_top=0.0)
        val = worst_case_remainder(cfg, wall_chain(), mem, [-1.0], [1.0])
        assert val == pytest.approx(0.1 ** 3 / (6 * 0.05) * (-1.0))

    def test_zero_difference(self):
        cfg = TaylorConfig(dt=0.05, r=2)
        chain = wall_chain()
        mem = RemainderState(prev_top=worst_case_top(chain, [-1.0], [1.0]))
        assert worst_case_remainder(cfg, chain, mem, [-1.0], [1.0]) == 0.0

    def test_first_step_is_zero(self):
        cfg = TaylorConfig(dt=0.05, r=2)
        assert worst_case_remainder(cfg, wall_chain(), RemainderState(),
                                    [-1.0], [1.0]) == 0.0

    def test_memory_update_uses_applied_input(self):
        mem = RemainderState()
        mem.update(wall_chain(), [0.25])
        assert mem.prev_top == -0.25

    def test_r_mismatch_rejected(self):
        with pytest.raises(ValueError):
            worst_case_remainder(TaylorConfig(dt=0.05, r=3), wall_chain(),
                                 RemainderState(), [-1.0], [1.0])


class TestRowBuilders:
    cfg = TaylorConfig(dt=0.05, r=2)

    def test_ttcbf_example(self):
        row = build_ttcbf_row(self.cfg, wall_chain(), ClassK("linear", 0.95), 0.0)
        assert row.coeff_u[0] == pytest.approx(-0.005)
        assert row.rhs == pytest.approx(-3.6)
        assert row.coeff_eta == 0.0

    def test_row_inactive_deep_inside(self):
        chain = DerivativeChain(r=2, h0=100.0, derivs=[0.0], top_drift=0.0,
                                top_input=[-1.0])
        row = build_ttcbf_row(self.cfg, chain, ClassK("linear", 0.95), 0.0)
        assert row.rhs < -90.0  # strongly negative: satisfied by any boxed input

    def test_r1_degenerate_sum(self):
        cfg = TaylorConfig(dt=0.05, r=1)
        chain = DerivativeChain(r=1, h0=2.0, derivs=[], top_drift=3.0,
                                top_input=[4.0])
        row = build_ttcbf_row(cfg, chain, ClassK("linear", 0.5), 0.1)
        assert row.coeff_u[0] == pytest.approx(0.05 * 4.0)
        assert row.rhs == pytest.approx(-(0.05 * 3.0 + 1.0 + 0.1))

    def test_attcbf_example(self):
        row = build_attcbf_row(self.cfg, wall_chain(), ClassK("linear", 1.0), 0.0)
        assert row.coeff_eta == pytest.approx(4.0)
        assert row.rhs == pytest.approx(0.2)
        assert row.coeff_u[0] == pytest.approx(-0.005)

    def test_attcbf_boundary_gain_powerless(self):
        chain = DerivativeChain(r=2, h0=0.0, derivs=[-1.0], top_drift=0.0,
                                top_input=[-1.0])
        row = build_attcbf_row(self.cfg, chain, ClassK("linear", 1.0), 0.0)
        assert row.coeff_eta == 0.0

    def test_attcbf_coefficient_free(self):
        # the fixed coefficient is ignored on the adaptive path
        r1 = build_attcbf_row(self.cfg, wall_chain(), ClassK("linear", 0.2), 0.0)
        r2 = build_attcbf_row(self.cfg, wall_chain(), ClassK("linear", 1.0), 0.0)
        assert r1.coeff_eta == r2.coeff_eta

    @pytest.mark.parametrize("kind", ["linear", "exponential", "rational"])
    def test_eta_one_reproduces_unit_gain_row(self, kind):
        rng = np.random.default_rng(11)
        for _ in range(200):
            chain = DerivativeChain(
                r=2, h0=rng.uniform(0, 10), derivs=[rng.normal()],
                top_drift=rng.normal(), top_input=rng.normal(size=2))
            rem = rng.normal() * 0.1
            u = rng.uniform(-2, 2, size=2)
            fixed = build_ttcbf_row(self.cfg, chain, ClassK(kind, 1.0), rem)
            adaptive = build_attcbf_row(self.cfg, chain, ClassK(kind, 1.0), rem)
            assert adaptive.margin(u, eta=1.0) == pytest.approx(
                fixed.margin(u), rel=1e-12, abs=1e-12)


class TestRStepCondition:
    def test_examples(self):
        assert r_step_condition(1.0, 0.9, ClassK("linear", 0.5)) is True
        assert r_step_condition(1.0, 0.4, ClassK("linear", 0.5)) is False

    def test_boundary(self):
        ck = ClassK("linear", 0.5)
        assert r_step_condition(0.0, 0.0, ck) is True
        assert r_step_condition(0.0, 1e-9, ck) is True
        assert r_step_condition(0.0, -1e-9, ck) is False

    def test_r1_reduction_to_standard_condition(self):
        # at r = 1 the condition is literally the one-step discrete

        # barrier inequality; compare the two expressions term by term
        rng = np.random.default_rng(5)
        for _ in range(500):
            h_k = rng.uniform(0, 10)
            h_next = h_k + rng.normal()
            a = rng.uniform(0, 1)
            ck = ClassK("linear", a)
            lhs = h_next - h_k + ck(h_k)
            standard = h_next - h_k + a * h_k
            assert lhs == pytest.approx(standard, rel=1e-15, abs=1e-15)
            assert r_step_condition(h_k, h_next, ck) == (standard >= 0)
