"""Class-K functions and barrier specifications."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .systems import DerivativeChain

CLASSK_KINDS = ("linear", "exponential", "rational")


def eval_classk(kind: str, gain: float, h: float) -> float:
    """Evaluate a parameterized class-K function.

    linear:      gain * h
    exponential: gain * h**1.1
    rational:    gain * h**2 / (1 + h)

    Negative arguments use the odd extension sign(h) * alpha(|h|) so the
    function stays monotone and vanishes at zero even when integration noise
    pushes a barrier value slightly below zero.
    """
    if kind not in CLASSK_KINDS:
        raise ValueError(f"unknown class-K kind {kind!r}")
    h = float(h)
    sign, mag = (1.0, h) if h >= 0 else (-1.0, -h)
    if kind == "linear":
        val = gain * mag
    elif kind == "exponential":
        val = gain * mag ** 1.1
    else:
        val = gain * mag * mag / (1.0 + mag)
    return sign * val


@dataclass(frozen=True)
class ClassK:
    """A scalar monotone function alpha with alpha(0) = 0.

    ``a`` is the fixed coefficient.  Adaptive constraints evaluate the
    coefficient-free shape via :meth:`unit` and supply the gain as a QP
    decision variable instead.
    """

    kind: str
    a: float

    def __post_init__(self):
        if self.kind not in CLASSK_KINDS:
            raise ValueError(f"unknown class-K kind {self.kind!r}")
        if self.a < 0:
            raise ValueError("class-K coefficient must be nonnegative")

    def __call__(self, h: float) -> float:
        return eval_classk(self.kind, self.a, h)

    def unit(self, h: float) -> float:
        """The shape with coefficient normalized to one."""
        return eval_classk(self.kind, 1.0, h)


ChainProvider = Callable[[np.ndarray, float], DerivativeChain]


@dataclass(frozen=True)
class BarrierSpec:
    """One safety constraint: a derivative-chain provider plus its class-K.

    ``chain_provider(x, t)`` must return the same relative degree at every
    state of a scenario.  ``adaptive`` attaches an online gain in [0, 1] to
    the class-K term instead of the fixed coefficient.
    """

    chain_provider: ChainProvider
    classk: ClassK
    adaptive: bool = False
    name: str = ""
