"""Safety filters for high-relative-degree constraints built on truncated
Taylor expansions of the barrier function, with an adaptive-gain variant, a
high-order chain baseline, a dense active-set QP solver, and two benchmark
scenarios (spring-mass chain, corridor navigation)."""

from .barriers import BarrierSpec, ClassK, eval_classk
from .hocbf import HocbfChainSpec, NonlinearAlphaUnsupported, build_hocbf_row, hocbf_psi_values
from .metrics import Metrics, compute_metrics, count_design_parameters
from .qp import (ClfRow, QpSolution, SafetyFilterProblem, assemble,
                 fallback_max_safety, solve)
from .simulate import SimulationConfig, Trajectory, simulate
from .systems import (AffineSystem, DerivativeChain, DimensionMismatch,
                      LtiSystem, NoRelativeDegree, lie_chain_lti,
                      relative_degree_lti)
from .taylor import (LinearConstraintRow, RemainderState, TaylorConfig,
                     build_attcbf_row, build_ttcbf_row, r_step_condition,
                     taylor_step, worst_case_remainder, worst_case_top)

__version__ = "0.1.0"

__all__ = [
    "AffineSystem", "LtiSystem", "DerivativeChain", "DimensionMismatch",
    "NoRelativeDegree", "relative_degree_lti", "lie_chain_lti",
    "ClassK", "BarrierSpec", "eval_classk",
    "TaylorConfig", "RemainderState", "LinearConstraintRow",
    "taylor_step", "worst_case_top", "worst_case_remainder",
    "build_ttcbf_row", "build_attcbf_row", "r_step_condition",
    "HocbfChainSpec", "NonlinearAlphaUnsupported", "hocbf_psi_values", "build_hocbf_row",
    "ClfRow", "SafetyFilterProblem", "QpSolution", "assemble", "solve",
    "fallback_max_safety",
    "SimulationConfig", "Trajectory", "simulate",
    "Metrics", "compute_metrics", "count_design_parameters",
]
