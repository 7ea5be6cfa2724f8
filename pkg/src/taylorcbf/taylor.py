"""Truncated-Taylor barrier constraints for high relative degree.

A safety function of relative degree r first feels the input after r
sampling periods.  Instead of cascading r class-K functions, the constraint
here Taylor-expands h that far ahead,

    h(t + dT) ~ h + sum_{i=1}^{r-1} dT^i/i! h^(i) + dT^r/r! h^(r)(u) + R,

with dT = r*dt, and demands the expansion plus a single class-K margin stay
nonnegative.  The truncation remainder R is replaced by its worst case over
the input box, estimated from a backward difference of the top derivative.
Everything stays affine in u, so each barrier contributes one linear row to
the per-step QP.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .barriers import ClassK
from .systems import DerivativeChain


@dataclass(frozen=True)
class TaylorConfig:
    """Sampling period, relative degree, and the derived expansion step.

    ``delta_T`` is r*dt by construction; passing an inconsistent value is an
    error rather than a silent override.
    """

    dt: float
    r: int
    delta_T: float | None = None

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("relative degree must be >= 1")
        if self.dt <= 0:
            raise ValueError("sampling period must be positive")
        expected = taylor_step(self.r, self.dt)
        if self.delta_T is None:
            object.__setattr__(self, "delta_T", expected)
        elif self.delta_T != expected:
            raise ValueError(f"delta_T must equal r*dt = {expected}, got {self.delta_T}")


@dataclass
class RemainderState:
    """Per-barrier memory of the top derivative at the previously applied input.

    ``prev_top`` is absent exactly at a constraint's first control step.  The
    owning loop updates it after each solve with the input actually applied.
    """

    prev_top: float | None = None

    def update(self, chain: DerivativeChain, u_applied) -> None:
        self.prev_top = chain.top_at(u_applied)


@dataclass(frozen=True)
class LinearConstraintRow:
    """coeff_u @ u + coeff_eta * eta >= rhs."""

    coeff_u: np.ndarray
    rhs: float
    coeff_eta: float = 0.0

    def __post_init__(self):
        cu = np.atleast_1d(np.asarray(self.coeff_u, dtype=float)).ravel()
        cu.setflags(write=False)
        object.__setattr__(self, "coeff_u", cu)
        object.__setattr__(self, "rhs", float(self.rhs))
        object.__setattr__(self, "coeff_eta", float(self.coeff_eta))

    def margin(self, u, eta: float = 0.0) -> float:
        """Row value minus rhs at a concrete point (>= 0 when satisfied)."""
        return float(self.coeff_u @ np.asarray(u, dtype=float)) \
            + self.coeff_eta * eta - self.rhs


def taylor_step(r: int, dt: float) -> float:
    """Expansion step r*dt: the delay before the current input reaches h."""
    if r < 1:
        raise ValueError("r must be >= 1")
    if dt <= 0:
        raise ValueError("dt must be positive")
    return r * dt


def worst_case_top(chain: DerivativeChain, u_min, u_max) -> float:
    """Minimum of the affine top derivative over the input box, in closed form.

    Each component independently picks the bound that drags the derivative
    down: u_max where its coefficient is negative, u_min otherwise.
    """
    u_min = np.asarray(u_min, dtype=float)
    u_max = np.asarray(u_max, dtype=float)
    if np.any(u_min > u_max):
        raise ValueError("u_min must be <= u_max componentwise")
    pick = np.where(chain.top_input < 0, u_max, u_min)
    return chain.top_drift + float(chain.top_input @ pick)


def worst_case_remainder(cfg: TaylorConfig, chain: DerivativeChain,
                         mem: RemainderState, u_min, u_max) -> float:
    """Worst-case truncation remainder over the input box.

    The order-(r+1) derivative in the Lagrange remainder is estimated by the
    backward difference (top_min - prev_top)/dt, giving

        dT^(r+1) / ((r+1)! dt) * (top_min - prev_top).

    Returns 0 at the first step, when no previous top derivative exists.  The
    value is signed and used as computed; a positive estimate loosens the row.
    """
    if cfg.r != chain.r:
        raise ValueError(f"config r={cfg.r} inconsistent with chain r={chain.r}")
    if mem.prev_top is None:
        return 0.0
    top_min = worst_case_top(chain, u_min, u_max)
    coeff = cfg.delta_T ** (cfg.r + 1) / (math.factorial(cfg.r + 1) * cfg.dt)
    return coeff * (top_min - mem.prev_top)


def _taylor_parts(cfg: TaylorConfig, chain: DerivativeChain):
    """(known-terms sum excluding h0/classk, u-coefficient vector)."""
    dT = cfg.delta_T
    known = 0.0
    for i in range(1, chain.r):
        known += dT ** i / math.factorial(i) * chain.derivs[i - 1]
    top_scale = dT ** chain.r / math.factorial(chain.r)
    known += top_scale * chain.top_drift
    return known, top_scale * chain.top_input


def build_ttcbf_row(cfg: TaylorConfig, chain: DerivativeChain,
                    classk: ClassK, remainder: float) -> LinearConstraintRow:
    """Linear row enforcing the truncated-Taylor barrier condition.

    sum_{i=1}^{r-1} dT^i/i! h^(i) + dT^r/r! h^(r)(u) + alpha(h) + remainder >= 0
    rearranged so the u-terms sit on the left and everything known on the
    right-hand side.
    """
    known, coeff_u = _taylor_parts(cfg, chain)
    rhs = -(known + classk(chain.h0) + remainder)
    return LinearConstraintRow(coeff_u=coeff_u, rhs=rhs)


def build_attcbf_row(cfg: TaylorConfig, chain: DerivativeChain,
                     classk_hat: ClassK, remainder: float) -> LinearConstraintRow:
    """Adaptive variant: the class-K term couples to a gain variable eta.

    ``classk_hat`` is evaluated coefficient-free, so the row reads

        coeff_u @ u + alpha_hat(h) * eta >= rhs,

    with eta bounded in [0, 1] by the QP.  Fixing eta = 1 recovers the
    non-adaptive row with unit coefficient.
    """
    known, coeff_u = _taylor_parts(cfg, chain)
    rhs = -(known + remainder)
    return LinearConstraintRow(coeff_u=coeff_u, rhs=rhs,
                               coeff_eta=classk_hat.unit(chain.h0))


def r_step_condition(h_k: float, h_k_plus_r: float, classk: ClassK) -> bool:
    """The r-step decrease condition h(t_{k+r}) - h(t_k) + alpha(h(t_k)) >= 0.

    Verification-harness predicate only; the controller never evaluates it
    (the future value is not available online).
    """
    return h_k_plus_r - h_k + classk(h_k) >= 0.0
