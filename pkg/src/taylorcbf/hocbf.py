"""High-order CBF chain baseline with linear class-K functions.

The classical construction stacks auxiliary functions

    Psi_0 = h,   Psi_i = d/dt Psi_{i-1} + a_i * Psi_{i-1},

one positive gain per level.  With linear gains each Psi_i is a fixed linear
combination of (h, h^(1), ..., h^(i)) whose coefficients are those of the
polynomial (s + a_1)...(s + a_i), so the whole chain evaluates straight off a
DerivativeChain without re-differentiation.  Nonlinear per-level gains would
need derivatives of the gains along the trajectory and are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .barriers import ChainProvider, ClassK
from .systems import DerivativeChain
from .taylor import LinearConstraintRow


class NonlinearAlphaUnsupported(Exception):
    """The chain baseline only supports linear per-level class-K gains."""


def _linear_gains(alphas: Sequence) -> np.ndarray:
    gains = []
    for a in alphas:
        if isinstance(a, ClassK):
            if a.kind != "linear":
                raise NonlinearAlphaUnsupported(
                    f"chain level has kind {a.kind!r}; only linear is supported")
            a = a.a
        gains.append(float(a))
    out = np.asarray(gains, dtype=float)
    if out.size == 0 or np.any(out <= 0):
        raise ValueError("chain gains must all be > 0 (strictly class-K)")
    return out


@dataclass(frozen=True)
class HocbfChainSpec:
    """Gains a_1..a_r of a linear chain, plus the barrier's chain provider."""

    alphas: Sequence[float]
    chain_provider: ChainProvider | None = None

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(_linear_gains(self.alphas)))

    @property
    def r(self) -> int:
        return len(self.alphas)


def chain_polynomial(alphas: Sequence[float]) -> np.ndarray:
    """Coefficients c_0..c_i of prod_j (s + a_j), ascending in derivative order.

    Psi_i = sum_j c_j h^(j) for linear gains a_1..a_i.
    """
    coeffs = np.array([1.0])
    for a in alphas:
        # multiply polynomial by (s + a): shift for s, scale for a
        coeffs = np.concatenate(([0.0], coeffs)) + a * np.concatenate((coeffs, [0.0]))
    return coeffs


def _h_values(chain: DerivativeChain) -> np.ndarray:
    """h, h^(1), ..., h^(r-1) as one vector."""
    return np.concatenate(([chain.h0], chain.derivs))


def hocbf_psi_values(spec: HocbfChainSpec, chain: DerivativeChain) -> list[float]:
    """Psi_0 .. Psi_{r-1} at the chain's state (the input-free levels)."""
    if spec.r != chain.r:
        raise ValueError(f"spec has {spec.r} gains but chain has r={chain.r}")
    hs = _h_values(chain)
    out = []
    for i in range(chain.r):
        coeffs = chain_polynomial(spec.alphas[:i])
        out.append(float(coeffs @ hs[:i + 1]))
    return out


def build_hocbf_row(spec: HocbfChainSpec, chain: DerivativeChain) -> LinearConstraintRow:
    """Linear row enforcing Psi_r(x, u) >= 0.

    The order-r coefficient of the chain polynomial is 1, so the input enters
    exactly through the chain's affine top derivative.
    """
    if spec.r != chain.r:
        raise ValueError(f"spec has {spec.r} gains but chain has r={chain.r}")
    coeffs = chain_polynomial(spec.alphas)
    known = float(coeffs[:-1] @ _h_values(chain)) + chain.top_drift
    return LinearConstraintRow(coeff_u=chain.top_input.copy(), rhs=-known)
