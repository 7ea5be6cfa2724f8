"""Closed-loop simulation: nominal or filtered control at a fixed rate.

The plant integrates continuously (RK4 at a fraction of the control period,
zero-order-hold input) while the controller runs at the sampling period:
build constraint rows for the chosen method, assemble the QP, solve, apply.
Infeasible steps fall back to the max-margin input and are logged as events;
a run never aborts mid-way.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .barriers import BarrierSpec, ClassK
from .hocbf import HocbfChainSpec, build_hocbf_row
from .qp import ClfRow, assemble, fallback_max_safety, solve
from .systems import AffineSystem
from .taylor import (RemainderState, TaylorConfig, build_attcbf_row,
                     build_ttcbf_row, worst_case_remainder)

METHODS = ("nominal", "ttcbf", "attcbf", "hocbf")

STATUS_PAD = ""  # status cell on the trailing state-only CSV row


@dataclass
class SimulationConfig:
    """Loop settings shared by every scenario.

    ``w_zeta``/``w_eta`` weight the CLF slacks and adaptive gains;
    ``hocbf_alphas`` are the chain gains used by every barrier when the
    method is "hocbf".  Integration runs ``substeps`` RK4 stages per control
    period under a held input.
    """

    dt: float
    duration: float
    W_u: np.ndarray | None = None
    w_zeta: Sequence[float] = ()
    w_eta: float = 500.0
    hocbf_alphas: Sequence[float] = ()
    substeps: int = 10
    check_initial: bool = True
    state_names: Sequence[str] = ()
    input_names: Sequence[str] = ()


@dataclass
class Trajectory:
    """Time-indexed log of one closed-loop run.

    States and barrier values are sampled on the uniform grid t_0..t_N
    (N = duration/dt), one row per grid point.  Step-indexed quantities
    (applied input, slacks, gains, solver status) have N entries, one per
    control interval starting at the matching grid point.
    """

    t: np.ndarray
    states: np.ndarray
    inputs: np.ndarray
    h: np.ndarray
    zetas: np.ndarray
    etas: np.ndarray
    status: list[str]
    fallback: np.ndarray
    method: str = ""
    state_names: tuple[str, ...] = ()
    input_names: tuple[str, ...] = ()

    @property
    def n_steps(self) -> int:
        return self.inputs.shape[0]

    @property
    def n_barriers(self) -> int:
        return self.h.shape[1]

    def min_barrier(self) -> float:
        return float(self.h.min()) if self.h.size else math.inf

    def fallback_count(self) -> int:
        return int(self.fallback.sum())

    def column_names(self) -> list[str]:
        state_names = list(self.state_names) or [f"x{i}" for i in range(self.states.shape[1])]
        input_names = list(self.input_names) or [f"u{i}" for i in range(self.inputs.shape[1])]
        cols = ["t", *state_names, *input_names]
        cols += [f"h_{i}" for i in range(self.h.shape[1])]
        cols += [f"eta_{i}" for i in range(self.etas.shape[1])]
        cols += [f"zeta_{i}" for i in range(self.zetas.shape[1])]
        cols.append("status")
        return cols

    def to_csv(self, path) -> None:
        """Write the full-precision trajectory table.

        Floats are serialized with shortest round-trip decimals; reading the
        file back reproduces them bit-exactly.  The final row carries only
        grid-sampled quantities; step-indexed cells are padded with nan.
        """
        n = self.t.size
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.column_names())
            for i in range(n):
                row = [repr(float(self.t[i]))]
                row += [repr(float(v)) for v in self.states[i]]
                if i < self.n_steps:
                    row += [repr(float(v)) for v in self.inputs[i]]
                else:
                    row += ["nan"] * self.inputs.shape[1]
                row += [repr(float(v)) for v in self.h[i]]
                if i < self.n_steps:
                    row += [repr(float(v)) for v in self.etas[i]]
                    row += [repr(float(v)) for v in self.zetas[i]]
                    row.append(self.status[i])
                else:
                    row += ["nan"] * (self.etas.shape[1] + self.zetas.shape[1])
                    row.append(STATUS_PAD)
                writer.writerow(row)

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = list(reader)
        n_h = sum(1 for c in header if c.startswith("h_"))
        n_eta = sum(1 for c in header if c.startswith("eta_"))
        n_zeta = sum(1 for c in header if c.startswith("zeta_"))
        # everything between t and the h-block is state + input columns;
        # inputs are the columns that are nan on the trailing row
        n_mid = len(header) - 1 - n_h - n_eta - n_zeta - 1
        data = [[cell for cell in row] for row in rows]
        n = len(data)
        mid = np.array([[float(v) for v in row[1:1 + n_mid]] for row in data])
        n_u = int(np.isnan(mid[-1]).sum()) if n > 1 else 0
        n_x = n_mid - n_u
        t = np.array([float(row[0]) for row in data])
        states = mid[:, :n_x]
        inputs = mid[:-1, n_x:] if n > 1 else np.zeros((0, n_u))
        ofs = 1 + n_mid
        h = np.array([[float(v) for v in row[ofs:ofs + n_h]] for row in data])
        ofs += n_h
        etas = np.array([[float(v) for v in row[ofs:ofs + n_eta]] for row in data[:-1]]) \
            if n > 1 else np.zeros((0, n_eta))
        etas = etas.reshape(max(n - 1, 0), n_eta)
        ofs += n_eta
        zetas = np.array([[float(v) for v in row[ofs:ofs + n_zeta]] for row in data[:-1]]) \
            if n > 1 else np.zeros((0, n_zeta))
        zetas = zetas.reshape(max(n - 1, 0), n_zeta)
        status = [row[-1] for row in data[:-1]] if n > 1 else []
        state_names = tuple(header[1:1 + n_x])
        input_names = tuple(header[1 + n_x:1 + n_mid])
        return cls(t=t, states=states, inputs=inputs, h=h, zetas=zetas,
                   etas=etas, status=status,
                   fallback=np.array([s == "fallback" for s in status]),
                   state_names=state_names, input_names=input_names)


def rk4_step(system: AffineSystem, x: np.ndarray, u: np.ndarray, dt: float) -> np.ndarray:
    k1 = system.xdot(x, u)
    k2 = system.xdot(x + 0.5 * dt * k1, u)
    k3 = system.xdot(x + 0.5 * dt * k2, u)
    k4 = system.xdot(x + dt * k3, u)
    return x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_hold(system: AffineSystem, x: np.ndarray, u: np.ndarray,
                   dt: float, substeps: int) -> np.ndarray:
    """Advance one control period under a held input."""
    h = dt / substeps
    for _ in range(substeps):
        x = rk4_step(system, x, u, h)
    return x


NominalController = Callable[[np.ndarray, float], np.ndarray]
ClfProvider = Callable[[np.ndarray, float], Sequence[ClfRow]]


def simulate(system: AffineSystem,
             barriers: Sequence[BarrierSpec],
             clfs: ClfProvider | None,
             nominal: NominalController,
             method: str,
             cfg: SimulationConfig,
             x0: np.ndarray) -> Trajectory:
    """Run one closed-loop simulation and return its trajectory log.

    method:
        "nominal" applies the clipped nominal input directly; "ttcbf" and
        "attcbf" filter it through truncated-Taylor safety rows (fixed and
        adaptive class-K gain respectively); "hocbf" uses the linear chain
        baseline with ``cfg.hocbf_alphas``.

    Solver failures never abort the run: infeasible steps apply the
    max-margin fallback input and are flagged in the log.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    barriers = list(barriers)
    x = np.asarray(x0, dtype=float).copy()
    n_steps = int(round(cfg.duration / cfg.dt))
    m = system.dim_u
    W_u = np.eye(m) if cfg.W_u is None else np.asarray(cfg.W_u, dtype=float)
    w_zeta = np.asarray(cfg.w_zeta, dtype=float)

    adaptive = method == "attcbf"
    n_eta = len(barriers) if adaptive else 0
    w_eta = np.full(n_eta, cfg.w_eta)
    eta_index = list(range(len(barriers))) if adaptive else [None] * len(barriers)

    taylor_cfgs: list[TaylorConfig] = []
    memories = [RemainderState() for _ in barriers]
    hocbf_specs: list[HocbfChainSpec] = []
    if method == "hocbf":
        if not cfg.hocbf_alphas:
            raise ValueError("method 'hocbf' requires cfg.hocbf_alphas")
        hocbf_specs = [HocbfChainSpec(cfg.hocbf_alphas, b.chain_provider) for b in barriers]

    t_grid = np.arange(n_steps + 1) * cfg.dt
    states = np.zeros((n_steps + 1, system.dim_x))
    inputs = np.zeros((n_steps, m))
    h_log = np.zeros((n_steps + 1, len(barriers)))
    eta_log = np.zeros((n_steps, n_eta))
    zeta_log = np.zeros((n_steps, len(w_zeta)))
    status: list[str] = []
    fallback_flags = np.zeros(n_steps, dtype=bool)

    max_r = 0
    initial_ok = True
    for k in range(n_steps + 1):
        t = t_grid[k]
        chains = [b.chain_provider(x, t) for b in barriers]
        states[k] = x
        for i, ch in enumerate(chains):
            h_log[k, i] = ch.h0
        if not taylor_cfgs and chains:
            taylor_cfgs = [TaylorConfig(dt=cfg.dt, r=ch.r) for ch in chains]
            max_r = max(ch.r for ch in chains)
        if chains and method in ("ttcbf", "attcbf") and cfg.check_initial \
                and k < max(max_r, 1) and initial_ok:
            if any(ch.h0 < 0 for ch in chains):
                initial_ok = False
                warnings.warn(
                    f"initial {max_r}-step safety condition violated at step {k}: "
                    "forward invariance is not guaranteed from this start",
                    stacklevel=2)
        if k == n_steps:
            break

        u_nom = system.clip_input(nominal(x, t))
        if method == "nominal":
            u = u_nom
            step_status = "nominal"
            zetas = np.zeros(len(w_zeta))
            etas = np.zeros(n_eta)
        else:
            rows = []
            for i, (b, ch) in enumerate(zip(barriers, chains)):
                if ch.r != taylor_cfgs[i].r:
                    raise ValueError(
                        f"barrier {i} changed relative degree mid-run "
                        f"({taylor_cfgs[i].r} -> {ch.r})")
                if method == "hocbf":
                    rows.append(build_hocbf_row(hocbf_specs[i], ch))
                else:
                    rem = worst_case_remainder(
                        taylor_cfgs[i], ch, memories[i], system.u_min, system.u_max)
                    if method == "ttcbf":
                        rows.append(build_ttcbf_row(taylor_cfgs[i], ch, b.classk, rem))
                    else:
                        rows.append(build_attcbf_row(taylor_cfgs[i], ch, b.classk, rem))
            clf_rows = list(clfs(x, t)) if clfs is not None else []
            problem = assemble(u_nom, W_u, w_zeta, w_eta, rows, clf_rows,
                               system.u_min, system.u_max, eta_index)
            sol = solve(problem)
            if sol.status == "optimal":
                u = sol.u
                zetas = sol.zetas
                etas = sol.etas
                step_status = "optimal"
            else:
                u = fallback_max_safety(problem)
                zetas = np.full(len(w_zeta), np.nan)
                etas = np.full(n_eta, np.nan)
                step_status = "fallback"
                fallback_flags[k] = True
            for i, ch in enumerate(chains):
                memories[i].update(ch, u)

        inputs[k] = u
        zeta_log[k] = zetas
        eta_log[k] = etas
        status.append(step_status)
        x = integrate_hold(system, x, u, cfg.dt, cfg.substeps)

    return Trajectory(
        t=t_grid, states=states, inputs=inputs, h=h_log,
        zetas=zeta_log, etas=eta_log, status=status, fallback=fallback_flags,
        method=method,
        state_names=tuple(cfg.state_names), input_names=tuple(cfg.input_names))
