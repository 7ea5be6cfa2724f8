"""Run metrics and control-design parameter counting."""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .simulate import Trajectory

COUNTABLE_METHODS = ("attcbf", "pacbf", "racbf")


@dataclass(frozen=True)
class Metrics:
    """Summary quantities of one corridor run."""

    avg_speed: float
    effort: tuple[float, ...]  # mean |u_j| / u_j_max per channel, in [0, 1]
    e_path: float
    min_barrier: float
    infeasible_steps: int
    design_parameters: int

    def as_dict(self) -> dict:
        d = asdict(self)
        d["effort"] = list(self.effort)
        return d


def count_design_parameters(method: str, n_safe: int, r: int) -> int:
    """Tunable weights plus class-K parameters introduced by an adaptive method.

    attcbf: one gain weight per safety constraint, coefficient-free class-K.
    pacbf:  r-1 auxiliary penalty dynamics per constraint, each carrying one
            weight and one class-K parameter.
    racbf:  two weights per constraint plus (2r+1) class-K parameters from
            the doubled chain and the relaxation-regulating term.
    """
    if n_safe < 0:
        raise ValueError("n_safe must be >= 0")
    if r < 1:
        raise ValueError("r must be >= 1")
    if method == "attcbf":
        return n_safe
    if method == "pacbf":
        return 2 * n_safe * (r - 1) + 2 * n_safe * (r - 1)
    if method == "racbf":
        return 2 * n_safe + n_safe * (2 * r + 1)
    raise ValueError(f"unknown method {method!r}; expected one of {COUNTABLE_METHODS}")


def _design_parameters_of_run(method: str, n_safe: int, r: int) -> int:
    """Informational count for whatever method a run used."""
    if method == "attcbf":
        return count_design_parameters("attcbf", n_safe, r)
    if method == "ttcbf":
        return 1  # one shared class-K coefficient
    if method == "hocbf":
        return r  # one chain gain per level, shared across constraints
    return 0


def compute_metrics(tr: Trajectory, p) -> Metrics:
    """Metrics of a corridor trajectory against its parameter set ``p``.

    ``p`` needs ``r_center``, ``u1_max`` and ``u2_max`` attributes (see
    :class:`taylorcbf.scenarios.corridor.CorridorParams`).
    """
    if tr.t.size == 0:
        raise ValueError("empty trajectory")
    speeds = tr.states[:, 3]
    rho = np.hypot(tr.states[:, 0], tr.states[:, 1])
    u_max = np.array([p.u1_max, p.u2_max])
    if tr.inputs.shape[0]:
        effort = tuple(float(v) for v in
                       np.mean(np.abs(tr.inputs), axis=0) / u_max)
    else:
        effort = tuple(0.0 for _ in u_max)
    r = 2  # corridor barriers are relative degree two
    return Metrics(
        avg_speed=float(np.mean(speeds)),
        effort=effort,
        e_path=float(np.mean(np.abs(rho - p.r_center))),
        min_barrier=tr.min_barrier(),
        infeasible_steps=tr.fallback_count(),
        design_parameters=_design_parameters_of_run(tr.method, tr.n_barriers, r),
    )
