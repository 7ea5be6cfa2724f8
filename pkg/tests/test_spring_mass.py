import numpy as np
import pytest

from taylorcbf.scenarios.spring_mass import (SpringMassParams,
                                             mechanical_energy,
                                             pole_coefficients,
                                             spring_mass_barrier,
                                             spring_mass_matrices,
                                             spring_mass_nominal,
                                             spring_mass_relative_degree,
                                             spring_mass_setup,
                                             spring_mass_system)
from taylorcbf.simulate import integrate_hold, simulate

X0 = np.array([0.0, 1.0, 2.0, 2.0, 1.0, 0.0])


def test_matrix_first_spring_row():
    A, B = spring_mass_matrices(SpringMassParams())
    assert A[3, :3] == pytest.approx([-5.0, 5.0, 0.0])
    assert B[3, 0] == 1.0
    assert np.all(B[[0, 1, 2, 4, 5], 0] == 0.0)


def test_relative_degree_six():
    assert spring_mass_relative_degree(SpringMassParams()) == 6


def test_signed_barrier_top_input():
    p = SpringMassParams()
    chain = spring_mass_barrier(p).chain_provider(X0, 0.0)
    A, B = spring_mass_matrices(p)
    oracle = -np.array([0, 0, 1, 0, 0, 0.0]) @ np.linalg.matrix_power(A, 5) @ B
    assert chain.top_input[0] == pytest.approx(oracle[0])
    assert chain.top_input[0] == pytest.approx(-25.0)


def test_barrier_offset():
    p = SpringMassParams()
    chain = spring_mass_barrier(p).chain_provider(X0, 0.0)
    assert chain.h0 == pytest.approx(p.x3_safe - X0[2])


def test_pole_coefficients():
    assert pole_coefficients(2.0) == pytest.approx([64, 192, 240, 160, 60, 12])


def test_nominal_saturates_at_start():
    p = SpringMassParams()
    assert spring_mass_nominal(p, X0)[0] == -5.0


def test_nominal_raw_value_at_start():
    # unclamped law at the documented start state: (-736 - (-125)) / 25
    p = SpringMassParams()
    A, B = spring_mass_matrices(p)
    c = np.array([0, 0, 1, 0, 0, 0.0])
    e = np.array([c @ np.linalg.matrix_power(A, i) @ X0 - (3.0 if i == 0 else 0.0)
                  for i in range(6)])
    e6 = -pole_coefficients(2.0) @ e
    raw = (e6 - c @ np.linalg.matrix_power(A, 6) @ X0) / 25.0
    assert raw == pytest.approx(-611.0 / 25.0, abs=1e-12)


def test_nominal_zero_at_settled_target():
    p = SpringMassParams()
    assert spring_mass_nominal(p, [3.0, 3.0, 3.0, 0.0, 0.0, 0.0])[0] == \
        pytest.approx(0.0, abs=1e-12)


def test_energy_conserved_without_input():
    p = SpringMassParams()
    system = spring_mass_system(p)
    x = X0.copy()
    e0 = mechanical_energy(p, x)
    for _ in range(1000):  # 10 s at the control rate
        x = integrate_hold(system, x, np.zeros(1), p.dt, substeps=10)
    assert abs(mechanical_energy(p, x) - e0) / e0 <= 1e-6


def test_initial_window_satisfies_barrier():
    p = SpringMassParams(duration=0.1)
    system, barriers, clfs, nominal, cfg, x0 = spring_mass_setup(p)
    tr = simulate(system, barriers, clfs, nominal, "ttcbf", cfg, x0)
    assert np.all(tr.h[:6] >= 0.0)
