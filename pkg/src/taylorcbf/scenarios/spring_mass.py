"""Serial spring-mass benchmark: a relative-degree-six position constraint.

Three unit masses on a line, coupled by identical springs, with a bounded
force on the first mass.  The safety function keeps the third mass below a
position ceiling; the input must travel through two springs and three double
integrators before it shows up in that constraint, so its relative degree
with respect to the dynamics is six.

The tracking controller is exact input-output linearization of the third
mass's position with all six poles placed at -lambda.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from ..barriers import BarrierSpec, ClassK
from ..simulate import SimulationConfig
from ..systems import DerivativeChain, LtiSystem, lie_chain_lti, relative_degree_lti

STATE_NAMES = ("x1", "x2", "x3", "v1", "v2", "v3")
INPUT_NAMES = ("u",)


@dataclass(frozen=True)
class SpringMassParams:
    m1: float = 1.0
    m2: float = 1.0
    m3: float = 1.0
    k: float = 5.0
    u_bound: float = 5.0
    dt: float = 0.01
    x0: tuple[float, ...] = (0.0, 1.0, 2.0, 2.0, 1.0, 0.0)
    x3_des: float = 3.0
    x3_safe: float = 3.5
    pole: float = 2.0
    classk_gain: float = 0.95
    duration: float = 6.0

    def __post_init__(self):
        if min(self.m1, self.m2, self.m3) <= 0 or self.k <= 0:
            raise ValueError("masses and stiffness must be positive")


def spring_mass_matrices(p: SpringMassParams) -> tuple[np.ndarray, np.ndarray]:
    k = p.k
    A_spring = np.array([
        [-k / p.m1, k / p.m1, 0.0],
        [k / p.m2, -2 * k / p.m2, k / p.m2],
        [0.0, k / p.m3, -k / p.m3],
    ])
    A = np.block([
        [np.zeros((3, 3)), np.eye(3)],
        [A_spring, np.zeros((3, 3))],
    ])
    B = np.zeros((6, 1))
    B[3, 0] = 1.0 / p.m1
    return A, B


OUTPUT_ROW = np.array([0.0, 0.0, 1.0, 0.0, 0.0, 0.0])  # y = x3


def spring_mass_system(p: SpringMassParams) -> LtiSystem:
    A, B = spring_mass_matrices(p)
    return LtiSystem(A, B, u_min=[-p.u_bound], u_max=[p.u_bound])


def spring_mass_relative_degree(p: SpringMassParams) -> int:
    A, B = spring_mass_matrices(p)
    return relative_degree_lti(A, B, OUTPUT_ROW)


def spring_mass_barrier(p: SpringMassParams) -> BarrierSpec:
    """Safety function h = x3_safe - x3 as a chain-provider barrier."""
    A, B = spring_mass_matrices(p)
    c = -OUTPUT_ROW
    r = relative_degree_lti(A, B, c)

    def chain(x: np.ndarray, t: float) -> DerivativeChain:
        raw = lie_chain_lti(A, B, c, x, r)
        return DerivativeChain(r=raw.r, h0=p.x3_safe + raw.h0, derivs=raw.derivs,
                               top_drift=raw.top_drift, top_input=raw.top_input)

    return BarrierSpec(chain_provider=chain,
                       classk=ClassK("linear", p.classk_gain),
                       name="x3_ceiling")


def pole_coefficients(pole: float, r: int = 6) -> np.ndarray:
    """a_0..a_{r-1} of (s + pole)^r, the monic part stripped."""
    return np.array([comb(r, i) * pole ** (r - i) for i in range(r)], dtype=float)


def spring_mass_nominal(p: SpringMassParams, x: np.ndarray) -> np.ndarray:
    """Pole-placement tracking law on the linearized output, clipped to the box.

    The output error obeys e^(6) = -sum a_i e^(i) in closed loop; the
    reference is constant so every error derivative equals the matching
    output derivative.
    """
    A, B = spring_mass_matrices(p)
    a = pole_coefficients(p.pole)
    chain = lie_chain_lti(A, B, OUTPUT_ROW, np.asarray(x, dtype=float), 6)
    e = np.concatenate(([chain.h0 - p.x3_des], chain.derivs))
    e6 = -float(a @ e)
    u = (e6 - chain.top_drift) / float(chain.top_input[0])
    return np.clip(np.array([u]), -p.u_bound, p.u_bound)


def spring_mass_setup(p: SpringMassParams):
    """(system, barriers, clfs, nominal, cfg, x0) ready for :func:`simulate`."""
    system = spring_mass_system(p)
    barrier = spring_mass_barrier(p)

    def nominal(x, t):
        return spring_mass_nominal(p, x)

    cfg = SimulationConfig(dt=p.dt, duration=p.duration,
                           state_names=STATE_NAMES, input_names=INPUT_NAMES)
    return system, [barrier], None, nominal, cfg, np.asarray(p.x0, dtype=float)


def mechanical_energy(p: SpringMassParams, x: np.ndarray) -> float:
    """Kinetic plus spring potential energy; conserved under zero input."""
    x = np.asarray(x, dtype=float)
    kin = 0.5 * (p.m1 * x[3] ** 2 + p.m2 * x[4] ** 2 + p.m3 * x[5] ** 2)
    pot = 0.5 * p.k * ((x[1] - x[0]) ** 2 + (x[2] - x[1]) ** 2)
    return kin + pot
