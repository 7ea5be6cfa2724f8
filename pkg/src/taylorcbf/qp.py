"""Per-step safety-filter quadratic program.

Each control step solves

    min  (u - u_nom)' W_u (u - u_nom) + sum w_zeta zeta^2 + sum w_eta eta^2
    s.t. safety rows   coeff_u @ u + coeff_eta * eta >= rhs     (hard)
         CLF rows      grad_u @ u + drift + decay <= zeta        (soft)
         u_min <= u <= u_max,  zeta >= 0,  0 <= eta <= 1

over the stacked decision vector (u, zetas, etas).  Safety rows never carry
slack; infeasibility is reported and handled by the max-margin fallback, not
by softening.

The solver is a dense dual active-set method: start at the unconstrained
optimum, repeatedly add the most violated row while keeping dual feasibility,
taking primal or dual steps until no row is violated or infeasibility is
certified.  Problems here are tiny (tens of variables and rows), so every
iteration re-solves against the Cholesky factor of the Hessian directly.
Selection rules are lexicographic, making solutions bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import linprog

from .taylor import LinearConstraintRow


class DimensionMismatch(Exception):
    pass


class NonPositiveWeight(Exception):
    pass


class MaxIterationsError(Exception):
    pass


@dataclass(frozen=True)
class ClfRow:
    """One soft stability row: grad_u @ u + drift + decay <= zeta[slack_index]."""

    grad_u: np.ndarray
    drift: float
    decay: float
    slack_index: int = 0

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.grad_u, dtype=float)).ravel()
        g.setflags(write=False)
        object.__setattr__(self, "grad_u", g)
        object.__setattr__(self, "drift", float(self.drift))
        object.__setattr__(self, "decay", float(self.decay))


@dataclass(frozen=True)
class SafetyFilterProblem:
    """Assembled QP data; build with :func:`assemble`."""

    u_nom: np.ndarray
    W_u: np.ndarray
    w_zeta: np.ndarray
    w_eta: np.ndarray
    safety_rows: tuple[LinearConstraintRow, ...]
    eta_index: tuple[int | None, ...]
    clf_rows: tuple[ClfRow, ...]
    u_min: np.ndarray
    u_max: np.ndarray

    @property
    def dim_u(self) -> int:
        return self.u_nom.size

    @property
    def n_zeta(self) -> int:
        return self.w_zeta.size

    @property
    def n_eta(self) -> int:
        return self.w_eta.size

    @property
    def dim(self) -> int:
        return self.dim_u + self.n_zeta + self.n_eta

    def standard_form(self):
        """(G, q, C, b): min 1/2 z'Gz + q'z  s.t.  C z >= b, plus the cost constant."""
        m, p, r = self.dim_u, self.n_zeta, self.n_eta
        n = m + p + r
        G = np.zeros((n, n))
        G[:m, :m] = 2.0 * self.W_u
        G[range(m, m + p), range(m, m + p)] = 2.0 * self.w_zeta
        G[range(m + p, n), range(m + p, n)] = 2.0 * self.w_eta
        q = np.zeros(n)
        q[:m] = -2.0 * (self.W_u @ self.u_nom)
        const = float(self.u_nom @ self.W_u @ self.u_nom)

        rows, rhs = [], []
        for row, ei in zip(self.safety_rows, self.eta_index):
            c = np.zeros(n)
            c[:m] = row.coeff_u
            if ei is not None:
                c[m + p + ei] = row.coeff_eta
            rows.append(c)
            rhs.append(row.rhs)
        for cr in self.clf_rows:
            c = np.zeros(n)
            c[:m] = -cr.grad_u
            c[m + cr.slack_index] = 1.0
            rows.append(c)
            rhs.append(cr.drift + cr.decay)
        eye = np.eye(n)
        for j in range(m):
            rows.append(eye[j])
            rhs.append(self.u_min[j])
            rows.append(-eye[j])
            rhs.append(-self.u_max[j])
        for j in range(m, m + p):
            rows.append(eye[j])
            rhs.append(0.0)
        for j in range(m + p, n):
            rows.append(eye[j])
            rhs.append(0.0)
            rows.append(-eye[j])
            rhs.append(-1.0)
        C = np.vstack(rows) if rows else np.zeros((0, n))
        return G, q, C, np.asarray(rhs, dtype=float), const


@dataclass(frozen=True)
class QpSolution:
    u: np.ndarray
    zetas: np.ndarray
    etas: np.ndarray
    status: str  # "optimal" | "infeasible"
    kkt_residual: float
    objective: float
    iterations: int = 0


def assemble(u_nom, W_u, w_zeta, w_eta,
             safety_rows: Sequence[LinearConstraintRow],
             clf_rows: Sequence[ClfRow],
             u_min, u_max,
             eta_index: Sequence[int | None] | None = None) -> SafetyFilterProblem:
    """Validate and pack one step's QP.

    ``eta_index`` maps each safety row to its gain variable (None for
    non-adaptive rows); the number of gain variables is ``len(w_eta)``.
    """
    u_nom = np.atleast_1d(np.asarray(u_nom, dtype=float)).ravel()
    m = u_nom.size
    W_u = np.asarray(W_u, dtype=float)
    if W_u.shape != (m, m):
        raise DimensionMismatch(f"W_u has shape {W_u.shape}, expected {(m, m)}")
    if not np.allclose(W_u, W_u.T, atol=1e-12):
        raise NonPositiveWeight("W_u must be symmetric")
    try:
        np.linalg.cholesky(W_u)
    except np.linalg.LinAlgError:
        raise NonPositiveWeight("W_u must be positive definite") from None
    w_zeta = np.atleast_1d(np.asarray(w_zeta, dtype=float)).ravel() if len(np.atleast_1d(w_zeta)) else np.zeros(0)
    w_eta = np.atleast_1d(np.asarray(w_eta, dtype=float)).ravel() if len(np.atleast_1d(w_eta)) else np.zeros(0)
    if np.any(w_zeta <= 0) or np.any(w_eta <= 0):
        raise NonPositiveWeight("slack and gain weights must be > 0")
    u_min = np.atleast_1d(np.asarray(u_min, dtype=float)).ravel()
    u_max = np.atleast_1d(np.asarray(u_max, dtype=float)).ravel()
    if u_min.shape != (m,) or u_max.shape != (m,):
        raise DimensionMismatch("input bounds must match dim_u")
    if np.any(u_min > u_max):
        raise DimensionMismatch("u_min must be <= u_max componentwise")

    safety_rows = tuple(safety_rows)
    if eta_index is None:
        eta_index = (None,) * len(safety_rows)
    eta_index = tuple(eta_index)
    if len(eta_index) != len(safety_rows):
        raise DimensionMismatch("eta_index must have one entry per safety row")
    for row, ei in zip(safety_rows, eta_index):
        if row.coeff_u.shape != (m,):
            raise DimensionMismatch(
                f"safety row coeff_u has shape {row.coeff_u.shape}, expected ({m},)")
        if ei is None:
            if row.coeff_eta != 0.0:
                raise DimensionMismatch("row has a gain coefficient but no eta_index")
        elif not 0 <= ei < w_eta.size:
            raise DimensionMismatch(f"eta_index {ei} out of range for {w_eta.size} gains")

    clf_rows = tuple(clf_rows)
    for cr in clf_rows:
        if cr.grad_u.shape != (m,):
            raise DimensionMismatch(
                f"CLF row grad_u has shape {cr.grad_u.shape}, expected ({m},)")
        if not 0 <= cr.slack_index < w_zeta.size:
            raise DimensionMismatch(
                f"slack_index {cr.slack_index} out of range for {w_zeta.size} slacks")

    return SafetyFilterProblem(
        u_nom=u_nom, W_u=W_u, w_zeta=w_zeta, w_eta=w_eta,
        safety_rows=safety_rows, eta_index=eta_index, clf_rows=clf_rows,
        u_min=u_min, u_max=u_max)


# Row-addition threshold and rank tolerances for the active-set loop.  Rows
# are normalized to unit 2-norm before solving, so these are dimensionless.
_FEAS_TOL = 1e-10
_ZERO_STEP_TOL = 1e-11
_MAX_ITER_FACTOR = 60


def _dual_active_set(G, q, C, b, max_iter, x0=None):
    """Goldfarb-Idnani style dual active-set loop on the normalized problem.

    ``x0`` is the unconstrained minimizer; passing it exactly (when known
    analytically) keeps unconstrained solutions bit-exact instead of round
    tripping through the factorization.  Returns (x, duals, n_iter, status)
    with status "optimal" or "infeasible".
    """
    n = G.shape[0]
    n_rows = C.shape[0]
    chol = cho_factor(G, lower=True)
    x = -cho_solve(chol, q) if x0 is None else np.asarray(x0, dtype=float).copy()
    active: list[int] = []
    lam: list[float] = []

    iters = 0
    while True:
        s = C @ x - b if n_rows else np.zeros(0)
        worst = -1
        worst_val = -_FEAS_TOL
        for i in range(n_rows):
            if s[i] < worst_val and i not in active:
                worst, worst_val = i, s[i]
        if worst < 0:
            return x, (active, lam), iters, "optimal"
        p = worst
        n_p = C[p]
        lam_p = 0.0

        while True:
            iters += 1
            if iters > max_iter:
                raise MaxIterationsError(f"active-set loop exceeded {max_iter} iterations")
            y = cho_solve(chol, n_p)
            if active:
                Nmat = C[active].T
                GinvN = cho_solve(chol, Nmat)
                M = Nmat.T @ GinvN
                rhs = Nmat.T @ y
                try:
                    r = np.linalg.solve(M, rhs)
                except np.linalg.LinAlgError:
                    r = np.linalg.lstsq(M, rhs, rcond=None)[0]
                z = y - GinvN @ r
            else:
                r = np.zeros(0)
                z = y
            s_p = float(n_p @ x - b[p])
            if s_p >= -_FEAS_TOL:
                # partial steps already satisfied the row; treat as active with
                # whatever multiplier accumulated
                active.append(p)
                lam.append(lam_p)
                break
            denom = float(n_p @ z)
            z_ok = np.linalg.norm(z) > _ZERO_STEP_TOL * (1.0 + np.linalg.norm(y))
            t1 = (-s_p / denom) if (z_ok and denom > _ZERO_STEP_TOL) else np.inf
            t2 = np.inf
            block = -1
            for j in range(len(active)):
                if r[j] > _ZERO_STEP_TOL:
                    cand = lam[j] / r[j]
                    if cand < t2:
                        t2, block = cand, j
            t = min(t1, t2)
            if not np.isfinite(t):
                return x, (active, lam), iters, "infeasible"
            for j in range(len(active)):
                lam[j] -= t * r[j]
            lam_p += t
            if np.isfinite(t1):
                # primal motion happens on full and partial steps alike;
                # pure dual steps (z = 0) leave x where it is
                x = x + t * z
            if t2 < t1:
                # blocking constraint leaves; stay on the same candidate row
                del active[block]
                del lam[block]
                continue
            active.append(p)
            lam.append(lam_p)
            break


def _kkt_residual(G, q, C, b, x, active, lam):
    lam_full = np.zeros(C.shape[0])
    for idx, l in zip(active, lam):
        lam_full[idx] = l
    stat = G @ x + q - (C.T @ lam_full if C.size else 0.0)
    res = float(np.max(np.abs(stat))) if stat.size else 0.0
    if C.size:
        s = C @ x - b
        res = max(res, float(np.max(np.maximum(-s, 0.0))))
        res = max(res, float(np.max(np.maximum(-lam_full, 0.0))))
        res = max(res, float(np.max(np.abs(lam_full * s))))
    return res


def solve(problem: SafetyFilterProblem) -> QpSolution:
    """Solve the assembled QP to its unique minimizer.

    Returns status "infeasible" when no input in the box satisfies the hard
    safety rows (the caller decides what to apply; see
    :func:`fallback_max_safety`).  Repeated calls with identical inputs are
    bit-identical.

    Raises
    ------
    MaxIterationsError
        If the active-set loop fails to terminate (should not happen for
        well-posed inputs).
    """
    G, q, C, b, const = problem.standard_form()
    # normalize rows to unit norm: pure rescaling, same feasible set,
    # vastly better conditioned pivot decisions for rows with tiny
    # physical coefficients
    if C.size:
        scales = np.linalg.norm(C, axis=1)
        keep = scales > 0.0
        if np.any(~keep):
            # zero rows constrain nothing: either trivially true or infeasible
            if np.any(b[~keep] > _FEAS_TOL):
                return QpSolution(
                    u=np.zeros(problem.dim_u), zetas=np.zeros(problem.n_zeta),
                    etas=np.zeros(problem.n_eta), status="infeasible",
                    kkt_residual=np.inf, objective=np.inf)
            C, b, scales = C[keep], b[keep], scales[keep]
        Cn = C / scales[:, None]
        bn = b / scales
    else:
        Cn, bn = C, b

    max_iter = _MAX_ITER_FACTOR * (problem.dim + Cn.shape[0] + 10)
    # unconstrained optimum is (u_nom, 0, 0) by construction
    x0 = np.concatenate((problem.u_nom,
                         np.zeros(problem.n_zeta + problem.n_eta)))
    x, (active, lam), iters, status = _dual_active_set(G, q, Cn, bn, max_iter, x0=x0)

    m, p = problem.dim_u, problem.n_zeta
    if status == "infeasible":
        return QpSolution(
            u=np.zeros(m), zetas=np.zeros(p), etas=np.zeros(problem.n_eta),
            status="infeasible", kkt_residual=np.inf, objective=np.inf,
            iterations=iters)

    res = _kkt_residual(G, q, Cn, bn, x, active, lam)
    obj = 0.5 * float(x @ G @ x) + float(q @ x) + const
    return QpSolution(
        u=x[:m].copy(), zetas=x[m:m + p].copy(), etas=x[m + p:].copy(),
        status="optimal", kkt_residual=res, objective=obj, iterations=iters)


def fallback_max_safety(problem: SafetyFilterProblem) -> np.ndarray:
    """Input in the box maximizing the minimum safety-row margin.

    Used after :func:`solve` reports infeasibility.  The margin of an
    adaptive row is taken at its most favorable gain (eta = 1 when that
    helps), matching what the QP itself could not achieve.  Solved as a
    linear program with one epigraph variable.
    """
    m = problem.dim_u
    if not problem.safety_rows:
        return 0.5 * (problem.u_min + problem.u_max)
    A_ub, b_ub = [], []
    for row, ei in zip(problem.safety_rows, problem.eta_index):
        relief = max(row.coeff_eta, 0.0) if ei is not None else 0.0
        # margin m <= coeff_u @ u + relief - rhs
        A_ub.append(np.concatenate((-row.coeff_u, [1.0])))
        b_ub.append(relief - row.rhs)
    c = np.zeros(m + 1)
    c[-1] = -1.0
    bounds = [(problem.u_min[j], problem.u_max[j]) for j in range(m)] + [(None, None)]
    res = linprog(c, A_ub=np.vstack(A_ub), b_ub=np.asarray(b_ub),
                  bounds=bounds, method="highs")
    if not res.success:
        # box is nonempty and margins are bounded, so this cannot happen;
        # degrade to the box midpoint rather than crash a running simulation
        return 0.5 * (problem.u_min + problem.u_max)
    return np.asarray(res.x[:m], dtype=float)
