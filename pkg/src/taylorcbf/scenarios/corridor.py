"""Circular-corridor navigation with a unicycle robot.

The robot follows the centerline of an annular corridor counterclockwise at
a desired speed while staying clear of both boundaries and of circular
obstacles placed along them.  Every safety function is a squared-distance
barrier of relative degree two; heading and speed tracking enter the QP as
two soft CLF rows toward a look-ahead point on the centerline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..barriers import BarrierSpec, ClassK
from ..qp import ClfRow
from ..simulate import SimulationConfig
from ..systems import AffineSystem, DerivativeChain

STATE_NAMES = ("x", "y", "theta", "v")
INPUT_NAMES = ("u1", "u2")


class DegenerateGeometry(Exception):
    """Robot at the corridor center: no defined look-ahead direction."""


@dataclass(frozen=True)
class CorridorParams:
    center: tuple[float, float] = (0.0, 0.0)
    r_center: float = 40.0
    r_inn: float = 35.0
    r_out: float = 45.0
    r_rob: float = 2.0
    n_obs: int = 16
    r_obs: float = 4.0
    v_des: float = 10.0
    dt: float = 0.05
    u1_max: float = 2.0
    u2_max: float = 2.0
    lookahead_deg: float = 5.0
    lambda_clf: float = 4.0
    k_theta: float = 1.0
    k_v: float = 1.0
    weight_dev: float = 1.0
    weight_slack: float = 100.0
    weight_eta: float = 500.0
    duration: float = 8.0
    obstacles: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if not self.r_inn + self.r_rob < self.r_center < self.r_out - self.r_rob:
            raise ValueError("centerline must clear both inflated boundaries")

    def obstacle_array(self) -> np.ndarray:
        if self.obstacles is not None:
            obs = np.asarray(self.obstacles, dtype=float).reshape(-1, 2)
            if obs.shape[0] != self.n_obs:
                raise ValueError(f"expected {self.n_obs} obstacles, got {obs.shape[0]}")
            return obs
        return default_obstacle_layout(self)


def default_obstacle_layout(p: CorridorParams) -> np.ndarray:
    """Obstacle centers alternating along the inner and outer boundaries.

    Half the obstacles sit on the inner boundary circle, half on the outer,
    interleaved in angle so the free channel weaves across the centerline.
    The pattern is phase-shifted so the start pose at polar angle zero has
    clearance to both neighbouring keep-outs (the nearest obstacle behind is
    7.5 degrees back, the first one ahead 15 degrees away).
    """
    n_inner = (p.n_obs + 1) // 2
    n_outer = p.n_obs - n_inner
    cx, cy = p.center
    centers = []
    phase = math.pi / 12.0
    for i in range(n_inner):
        ang = phase + 2 * math.pi * i / max(n_inner, 1)
        centers.append((cx + p.r_inn * math.cos(ang), cy + p.r_inn * math.sin(ang)))
    for i in range(n_outer):
        ang = phase + math.pi / max(n_inner, 1) + 2 * math.pi * i / max(n_outer, 1)
        centers.append((cx + p.r_out * math.cos(ang), cy + p.r_out * math.sin(ang)))
    return np.asarray(centers, dtype=float)


def unicycle_system(p: CorridorParams) -> AffineSystem:
    g = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])

    def drift(x):
        return np.array([x[3] * math.cos(x[2]), x[3] * math.sin(x[2]), 0.0, 0.0])

    return AffineSystem(4, 2, drift, lambda x: g,
                        u_min=[-p.u1_max, -p.u2_max], u_max=[p.u1_max, p.u2_max])


def _circle_chain(cx: float, cy: float, radius_sq: float, sign: float,
                  x: np.ndarray) -> DerivativeChain:
    """Chain of h = sign * ((x-cx)^2 + (y-cy)^2 - radius_sq) for the unicycle.

    hdot  = 2 (dx cos + dy sin) v
    hddot = 2 v^2 + 2 v (dy cos - dx sin) u1 + 2 (dx cos + dy sin) u2
    all scaled by sign (outer boundaries flip it to keep the safe side h >= 0).
    """
    px, py, th, v = x
    dx, dy = px - cx, py - cy
    cos_t, sin_t = math.cos(th), math.sin(th)
    along = dx * cos_t + dy * sin_t
    across = -dx * sin_t + dy * cos_t
    return DerivativeChain(
        r=2,
        h0=sign * (dx * dx + dy * dy - radius_sq),
        derivs=np.array([sign * 2.0 * along * v]),
        top_drift=sign * 2.0 * v * v,
        top_input=sign * np.array([2.0 * v * across, 2.0 * along]),
    )


def corridor_barriers(p: CorridorParams, classk: ClassK,
                      adaptive: bool = False) -> list[BarrierSpec]:
    """The 2 + n_obs squared-distance barriers: boundaries first, then obstacles."""
    cx, cy = p.center
    obstacles = p.obstacle_array()
    specs = []

    def boundary_chain(radius_sq, sign, name):
        def chain(x, t):
            return _circle_chain(cx, cy, radius_sq, sign, x)
        return BarrierSpec(chain_provider=chain, classk=classk,
                           adaptive=adaptive, name=name)

    specs.append(boundary_chain((p.r_inn + p.r_rob) ** 2, 1.0, "inner_boundary"))
    specs.append(boundary_chain((p.r_out - p.r_rob) ** 2, -1.0, "outer_boundary"))
    keepout_sq = (p.r_obs + p.r_rob) ** 2
    for i, (ox, oy) in enumerate(obstacles):
        def chain(x, t, ox=float(ox), oy=float(oy)):
            return _circle_chain(ox, oy, keepout_sq, 1.0, x)
        specs.append(BarrierSpec(chain_provider=chain, classk=classk,
                                 adaptive=adaptive, name=f"obstacle_{i}"))
    return specs


def lookahead_heading(p: CorridorParams, x: np.ndarray) -> float:
    """Desired heading: toward the centerline point a few degrees ahead."""
    cx, cy = p.center
    dx, dy = x[0] - cx, x[1] - cy
    if math.hypot(dx, dy) < 1e-9:
        raise DegenerateGeometry("robot at corridor center; look-ahead undefined")
    ang = math.atan2(dy, dx) + math.radians(p.lookahead_deg)
    tx = cx + p.r_center * math.cos(ang)
    ty = cy + p.r_center * math.sin(ang)
    return math.atan2(ty - x[1], tx - x[0])


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    return math.atan2(math.sin(a), math.cos(a))


def corridor_clf_rows(p: CorridorParams, x: np.ndarray) -> list[ClfRow]:
    """Heading and speed CLF rows: Vdot + lambda V <= zeta with V = error^2."""
    e_theta = wrap_angle(x[2] - lookahead_heading(p, x))
    e_v = x[3] - p.v_des
    return [
        ClfRow(grad_u=[2.0 * e_theta, 0.0], drift=0.0,
               decay=p.lambda_clf * e_theta ** 2, slack_index=0),
        ClfRow(grad_u=[0.0, 2.0 * e_v], drift=0.0,
               decay=p.lambda_clf * e_v ** 2, slack_index=1),
    ]


def corridor_nominal(p: CorridorParams, x: np.ndarray) -> np.ndarray:
    """Proportional law driving heading and speed errors to zero, clipped."""
    e_theta = wrap_angle(lookahead_heading(p, x) - x[2])
    e_v = p.v_des - x[3]
    u = np.array([p.k_theta * e_theta, p.k_v * e_v])
    return np.clip(u, [-p.u1_max, -p.u2_max], [p.u1_max, p.u2_max])


def initial_state(p: CorridorParams) -> np.ndarray:
    """On the centerline at polar angle zero, heading tangent (ccw), at rest."""
    cx, cy = p.center
    return np.array([cx + p.r_center, cy, math.pi / 2.0, 0.0])


def corridor_setup(p: CorridorParams, classk: ClassK, adaptive: bool = False):
    """(system, barriers, clfs, nominal, cfg, x0) ready for :func:`simulate`."""
    system = unicycle_system(p)
    barriers = corridor_barriers(p, classk, adaptive)

    def clfs(x, t):
        return corridor_clf_rows(p, x)

    def nominal(x, t):
        return corridor_nominal(p, x)

    cfg = SimulationConfig(
        dt=p.dt, duration=p.duration,
        W_u=p.weight_dev * np.eye(2),
        w_zeta=(p.weight_slack, p.weight_slack),
        w_eta=p.weight_eta,
        state_names=STATE_NAMES, input_names=INPUT_NAMES)
    return system, barriers, clfs, nominal, cfg, initial_state(p)
