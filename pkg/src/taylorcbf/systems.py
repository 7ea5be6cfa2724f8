"""Input-affine control systems and output-derivative chains.

The central object is :class:`DerivativeChain`: the values of a scalar
safety function ``h`` and its time derivatives along the system flow at one
state, up to the first derivative in which the input appears (the relative
degree ``r``).  That top derivative is affine in the input,

    h^(r)(x, u, t) = top_drift + top_input @ u,

which is what lets downstream constraint builders stay linear in ``u``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class NoRelativeDegree(Exception):
    """Raised when no power c A^(i-1) B up to i = dim_x is nonzero."""


class DimensionMismatch(Exception):
    """Raised when matrix/vector shapes are inconsistent."""


def _as_1d(v, n: int | None = None, name: str = "vector") -> np.ndarray:
    arr = np.atleast_1d(np.asarray(v, dtype=float)).ravel()
    if n is not None and arr.shape != (n,):
        raise DimensionMismatch(f"{name} has shape {arr.shape}, expected ({n},)")
    return arr


class AffineSystem:
    """Continuous-time input-affine dynamics xdot = f(x) + g(x) u with box input bounds.

    Parameters
    ----------
    dim_x, dim_u : int
        State and input dimensions.
    drift : callable
        f(x) -> (dim_x,) state rate.
    input_matrix : callable
        g(x) -> (dim_x, dim_u) matrix.
    u_min, u_max : array_like
        Componentwise input bounds; u_min <= u_max must hold.

    Instances are immutable after construction and safe to share between
    concurrently running simulation loops.
    """

    def __init__(self, dim_x: int, dim_u: int,
                 drift: Callable[[np.ndarray], np.ndarray],
                 input_matrix: Callable[[np.ndarray], np.ndarray],
                 u_min, u_max):
        if dim_x <= 0 or dim_u <= 0:
            raise ValueError("dim_x and dim_u must be positive")
        self.dim_x = int(dim_x)
        self.dim_u = int(dim_u)
        self.drift = drift
        self.input_matrix = input_matrix
        self.u_min = _as_1d(u_min, self.dim_u, "u_min")
        self.u_max = _as_1d(u_max, self.dim_u, "u_max")
        self.u_min.setflags(write=False)
        self.u_max.setflags(write=False)
        if np.any(self.u_min > self.u_max):
            raise ValueError("u_min must be <= u_max componentwise")

    def xdot(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        """State rate f(x) + g(x) u, with shape validation."""
        x = _as_1d(x, self.dim_x, "state")
        u = _as_1d(u, self.dim_u, "input")
        f = _as_1d(self.drift(x), self.dim_x, "drift(x)")
        g = np.asarray(self.input_matrix(x), dtype=float)
        if g.shape != (self.dim_x, self.dim_u):
            raise DimensionMismatch(
                f"input_matrix(x) has shape {g.shape}, expected {(self.dim_x, self.dim_u)}")
        return f + g @ u

    def clip_input(self, u) -> np.ndarray:
        return np.clip(_as_1d(u, self.dim_u, "input"), self.u_min, self.u_max)


class LtiSystem(AffineSystem):
    """Linear time-invariant specialization xdot = A x + B u."""

    def __init__(self, A, B, u_min, u_max):
        A = np.asarray(A, dtype=float)
        B = np.asarray(B, dtype=float)
        if B.ndim == 1:
            B = B[:, None]
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"A must be square, got {A.shape}")
        if B.shape[0] != A.shape[0]:
            raise DimensionMismatch(f"B rows {B.shape[0]} != A size {A.shape[0]}")
        self.A = A.copy()
        self.B = B.copy()
        self.A.setflags(write=False)
        self.B.setflags(write=False)
        super().__init__(A.shape[0], B.shape[1],
                         drift=lambda x: self.A @ x,
                         input_matrix=lambda x: self.B,
                         u_min=u_min, u_max=u_max)


@dataclass(frozen=True)
class DerivativeChain:
    """Values of h and its time derivatives at one state, up to order r.

    ``derivs[i-1]`` holds h^(i) for i = 1..r-1.  The top (order-r)
    derivative is affine in u: h^(r) = top_drift + top_input @ u.
    """

    r: int
    h0: float
    derivs: np.ndarray
    top_drift: float
    top_input: np.ndarray

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("relative degree must be >= 1")
        derivs = np.atleast_1d(np.asarray(self.derivs, dtype=float)).ravel()
        if self.r == 1 and derivs.size == 0:
            derivs = np.zeros(0)
        if derivs.shape != (self.r - 1,):
            raise DimensionMismatch(
                f"derivs has shape {derivs.shape}, expected ({self.r - 1},)")
        top = np.atleast_1d(np.asarray(self.top_input, dtype=float)).ravel()
        derivs.setflags(write=False)
        top.setflags(write=False)
        object.__setattr__(self, "derivs", derivs)
        object.__setattr__(self, "top_input", top)
        object.__setattr__(self, "h0", float(self.h0))
        object.__setattr__(self, "top_drift", float(self.top_drift))

    def top_at(self, u) -> float:
        """h^(r) evaluated at a concrete input."""
        return self.top_drift + float(self.top_input @ np.asarray(u, dtype=float))


def relative_degree_lti(A, B, c, tol: float = 1e-12) -> int:
    """Smallest r with c A^(r-1) B nonzero, for the linear output y = c x.

    Nonzero is judged against ``tol`` scaled by the spectral-norm bound
    ||c|| ||A||^(r-1) ||B||, so exact structural zeros survive floating-point
    dust while any genuine coupling registers.

    Raises
    ------
    NoRelativeDegree
        If all powers up to r = dim_x vanish (then they vanish forever, by
        Cayley-Hamilton).
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    c = _as_1d(c, A.shape[0], "c")
    if A.ndim != 2 or A.shape[0] != A.shape[1] or B.shape[0] != A.shape[0]:
        raise DimensionMismatch("inconsistent A/B/c dimensions")
    norm_A = np.linalg.norm(A, 2)
    scale = np.linalg.norm(c) * np.linalg.norm(B, 2)
    row = c.copy()
    for r in range(1, A.shape[0] + 1):
        # row holds c A^(r-1) at this point
        coupling = row @ B
        if np.any(np.abs(coupling) > tol * max(scale * norm_A ** (r - 1), 1e-300)):
            return r
        row = row @ A
    raise NoRelativeDegree(
        f"c A^(i-1) B vanishes for all i <= {A.shape[0]}; output never sees the input")


def lie_chain_lti(A, B, c, x, r: int) -> DerivativeChain:
    """Derivative chain of the linear output y = c x at state x.

    h^(i) = c A^i x for i < r, top_drift = c A^r x, top_input = c A^(r-1) B.
    Any sign/offset of the actual safety function is the caller's business;
    this works on the raw output.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    c = _as_1d(c, A.shape[0], "c")
    x = _as_1d(x, A.shape[0], "x")
    if r < 1:
        raise ValueError("r must be >= 1")
    row = c.copy()
    vals = []
    for _ in range(r):
        vals.append(float(row @ x))
        row = row @ A
    # after the loop, row = c A^r
    return DerivativeChain(
        r=r,
        h0=vals[0],
        derivs=np.array(vals[1:]),
        top_drift=float(row @ x),
        top_input=(c @ np.linalg.matrix_power(A, r - 1)) @ B,
    )
