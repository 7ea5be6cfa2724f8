import math

import numpy as np
import pytest

from taylorcbf.barriers import ClassK
from taylorcbf.scenarios.corridor import (CorridorParams, DegenerateGeometry,
                                          corridor_barriers, corridor_clf_rows,
                                          corridor_nominal,
                                          default_obstacle_layout,
                                          initial_state, lookahead_heading,
                                          unicycle_system, wrap_angle)
from taylorcbf.simulate import rk4_step

CK = ClassK("linear", 0.2)


def test_params_invariant():
    with pytest.raises(ValueError):
        CorridorParams(r_inn=39.0)  # centerline inside the inflated boundary


def test_barrier_count_and_order():
    bars = corridor_barriers(CorridorParams(), CK)
    assert len(bars) == 18
    assert bars[0].name == "inner_boundary"
    assert bars[1].name == "outer_boundary"
    assert bars[2].name == "obstacle_0"


def test_obstacle_chain_example():
    p = CorridorParams(obstacles=tuple([(10.0, 0.0)] + [(100.0, 100.0)] * 15))
    chain = corridor_barriers(p, CK)[2].chain_provider(
        np.array([0.0, 0.0, 0.0, 10.0]), 0.0)
    assert chain.h0 == pytest.approx(64.0)
    assert chain.derivs[0] == pytest.approx(-200.0)
    assert chain.top_drift == pytest.approx(200.0)
    assert chain.top_input == pytest.approx([0.0, -20.0])


def test_zero_on_keepout_circle():
    p = CorridorParams()
    bars = corridor_barriers(p, CK)
    obs = p.obstacle_array()[0]
    x = np.array([obs[0] + 6.0, obs[1], 0.0, 1.0])
    assert bars[2].chain_provider(x, 0.0).h0 == pytest.approx(0.0, abs=1e-9)


def test_outer_boundary_value_at_center():
    bars = corridor_barriers(CorridorParams(), CK)
    chain = bars[1].chain_provider(np.array([0.0, 0.0, 0.0, 0.0]), 0.0)
    assert chain.h0 == pytest.approx(43.0 ** 2)


def test_lookahead_heading_example():
    # frozen from direct trigonometry: target (40 cos5, 40 sin5), robot (40, 0)
    p = CorridorParams()
    theta = lookahead_heading(p, np.array([40.0, 0.0, 0.0, 0.0]))
    assert theta == pytest.approx(1.6144295580947552, abs=1e-12)


def test_degenerate_geometry():
    with pytest.raises(DegenerateGeometry):
        lookahead_heading(CorridorParams(), np.array([0.0, 0.0, 0.0, 0.0]))


def test_clf_rows_speed_inactive_at_target():
    p = CorridorParams()
    x = np.array([40.0, 0.0, lookahead_heading(p, [40.0, 0.0, 0, 0]), 10.0])
    rows = corridor_clf_rows(p, x)
    assert rows[1].grad_u == pytest.approx([0.0, 0.0])
    assert rows[1].decay == 0.0
    assert rows[0].grad_u == pytest.approx([0.0, 0.0], abs=1e-12)


def test_clf_row_encoding():
    p = CorridorParams()
    x = np.array([40.0, 0.0, 0.0, 8.0])
    rows = corridor_clf_rows(p, x)
    e_theta = wrap_angle(0.0 - lookahead_heading(p, x))
    assert rows[0].grad_u == pytest.approx([2 * e_theta, 0.0])
    assert rows[0].decay == pytest.approx(4.0 * e_theta ** 2)
    assert rows[1].grad_u == pytest.approx([0.0, 2 * (8.0 - 10.0)])
    assert rows[1].decay == pytest.approx(4.0 * 4.0)
    assert (rows[0].slack_index, rows[1].slack_index) == (0, 1)


class TestNominal:
    p = CorridorParams()

    def test_speed_error_clamped(self):
        x = np.array([40.0, 0.0, lookahead_heading(self.p, [40, 0, 0, 0]), 8.0])
        assert corridor_nominal(self.p, x) == pytest.approx([0.0, 2.0])

    def test_heading_error_only(self):
        theta_des = lookahead_heading(self.p, [40.0, 0.0, 0, 0])
        x = np.array([40.0, 0.0, theta_des - 0.5, 10.0])
        assert corridor_nominal(self.p, x) == pytest.approx([0.5, 0.0])

    def test_zero_errors(self):
        x = np.array([40.0, 0.0, lookahead_heading(self.p, [40, 0, 0, 0]), 10.0])
        assert corridor_nominal(self.p, x) == pytest.approx([0.0, 0.0])


def test_default_layout_geometry():
    p = CorridorParams()
    obs = default_obstacle_layout(p)
    assert obs.shape == (16, 2)
    radii = np.hypot(obs[:, 0], obs[:, 1])
    assert np.all((np.isclose(radii, 35.0)) | (np.isclose(radii, 45.0)))
    assert (np.isclose(radii, 35.0)).sum() == 8


def test_start_state_clear_of_everything():
    p = CorridorParams()
    x0 = initial_state(p)
    assert x0 == pytest.approx([40.0, 0.0, math.pi / 2, 0.0])
    for spec in corridor_barriers(p, CK):
        assert spec.chain_provider(x0, 0.0).h0 > 0.0


def test_obstacle_override_count_checked():
    with pytest.raises(ValueError):
        CorridorParams(obstacles=((1.0, 2.0),)).obstacle_array()


def test_chain_matches_finite_differences():
    p = CorridorParams()
    system = unicycle_system(p)
    bars = corridor_barriers(p, CK)
    rng = np.random.default_rng(2)
    for _ in range(50):
        rho = rng.uniform(36.0, 44.0)
        ang = rng.uniform(0, 2 * math.pi)
        x = np.array([rho * math.cos(ang), rho * math.sin(ang),
                      rng.uniform(-math.pi, math.pi), rng.uniform(1.0, 10.0)])
        u = rng.uniform(-2, 2, size=2)
        spec = bars[rng.integers(len(bars))]
        chain = spec.chain_provider(x, 0.0)
        d = 1e-5
        chain_p = spec.chain_provider(rk4_step(system, x, u, d), 0.0)
        chain_m = spec.chain_provider(rk4_step(system, x, u, -d), 0.0)
        fd1 = (chain_p.h0 - chain_m.h0) / (2 * d)
        # differencing the first derivative keeps the second-derivative
        # oracle clear of the h-level cancellation noise floor
        fd2 = (chain_p.derivs[0] - chain_m.derivs[0]) / (2 * d)
        assert abs(fd1 - chain.derivs[0]) <= 1e-4 * (1 + abs(chain.derivs[0]))
        exact2 = chain.top_at(u)
        assert abs(fd2 - exact2) <= 1e-4 * (1 + abs(exact2))
