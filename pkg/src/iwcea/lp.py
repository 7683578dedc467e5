"""Dense bounded-variable simplex for LPs over the unit box.

Variables are bounded to ``[0, 1]`` implicitly (nonbasic variables sit at
either bound), so only the constraint rows enter the tableau. This keeps
the tableau at ``rows x (n + rows)`` for instances with thousands of items
and a few dozen constraints.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .instance import MkpInstance

log = logging.getLogger(__name__)

FEAS_TOL = 1e-9
CHECK_TOL = 1e-7

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

LE = "<="
GE = ">="


class LpError(RuntimeError):
    """Numerical failure; raised instead of returning a wrong answer."""


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """``sense c.x`` subject to inequality rows, an optional equality row,
    and ``0 <= x <= 1``."""

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    row_senses: tuple
    sense: str = "max"
    eq: Optional[tuple] = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=np.float64).ravel()
        A = np.asarray(self.A, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64).ravel()
        if A.size == 0:
            A = A.reshape(0, c.size)
        if A.ndim != 2 or A.shape[1] != c.size or A.shape[0] != b.size:
            raise ValueError(f"dimension mismatch: c {c.shape}, A {A.shape}, b {b.shape}")
        senses = tuple(self.row_senses)
        if len(senses) != b.size or any(s not in (LE, GE) for s in senses):
            raise ValueError("row_senses must hold one of '<=' / '>=' per row")
        if self.sense not in ("max", "min"):
            raise ValueError(f"sense must be 'max' or 'min', got {self.sense!r}")
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(A)) and np.all(np.isfinite(c))):
            raise ValueError("LP data must be finite")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "row_senses", senses)
        if self.eq is not None:
            coeffs, rhs = self.eq
            coeffs = np.asarray(coeffs, dtype=np.float64).ravel()
            if coeffs.size != c.size or not np.isfinite(rhs):
                raise ValueError("equality row must have length n and a finite rhs")
            object.__setattr__(self, "eq", (coeffs, float(rhs)))

    @property
    def n(self) -> int:
        return self.c.size

    @property
    def n_rows(self) -> int:
        return self.b.size + (self.eq is not None)


@dataclass
class LpSolution:
    """Result of :func:`solve`.

    ``duals[i]`` is the rate of change of the optimal objective per unit
    increase of row ``i``'s rhs (inequality rows first, then the equality
    row). ``reduced_costs`` are the bound multipliers of the structural
    variables in the same convention, so that at optimum
    ``objective == rhs @ duals + sum(reduced_costs[x at upper bound])``.
    """

    status: str
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    duals: Optional[np.ndarray] = None
    reduced_costs: Optional[np.ndarray] = None
    iterations: int = 0
    basis: Optional[np.ndarray] = None

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    def fractional(self, tol: float = FEAS_TOL) -> np.ndarray:
        x = self.x
        return np.flatnonzero((x > tol) & (x < 1 - tol))


def relax_mkp(inst: MkpInstance) -> LinearProgram:
    """LP relaxation: ``max p.x`` s.t. ``r x <= b``, ``x in [0,1]^n``."""
    return LinearProgram(inst.p, inst.r, inst.b, (LE,) * inst.m, "max")


def with_hyperplane(lp: LinearProgram, k: float) -> LinearProgram:
    """Add the equality row ``sum_j x_j = k``."""
    if lp.eq is not None:
        raise ValueError("LP already has an equality row")
    return replace(lp, eq=(np.ones(lp.n), float(k)))


def bounds_lp(inst: MkpInstance, z: float, sense: str) -> LinearProgram:
    """``max``/``min sum_j x_j`` over the knapsack rows plus ``p.x >= z + 1``."""
    A = np.vstack([inst.r, inst.p])
    b = np.append(inst.b, z + 1)
    return LinearProgram(np.ones(inst.n), A, b, (LE,) * inst.m + (GE,), sense)


def hyperplane_lp(inst: MkpInstance, k: float) -> LinearProgram:
    return with_hyperplane(relax_mkp(inst), k)


class _Tableau:
    """Working state of one solve. Columns: structural, slack, artificial."""

    def __init__(self, lp: LinearProgram):
        n = lp.n
        rows_A = [lp.A]
        rhs = [lp.b]
        # internal rows are all "<=" or "=", oriented so that rhs >= 0
        tau = np.array([-1.0 if s == GE else 1.0 for s in lp.row_senses])
        n_ineq = lp.b.size
        if lp.eq is not None:
            rows_A.append(lp.eq[0][None, :])
            rhs.append([lp.eq[1]])
            tau = np.append(tau, 1.0)
        A = np.vstack(rows_A) * tau[:, None]
        b = np.concatenate(rhs) * tau
        k = b.size

        slack = np.zeros((k, n_ineq))
        slack[np.arange(n_ineq), np.arange(n_ineq)] = 1.0
        flip = b < 0
        A[flip] *= -1
        slack[flip] *= -1
        b = np.where(flip, -b, b)
        tau = np.where(flip, -tau, tau)

        needs_art = np.ones(k, dtype=bool)
        needs_art[:n_ineq] = flip[:n_ineq]
        art_rows = np.flatnonzero(needs_art)
        art = np.zeros((k, art_rows.size))
        art[art_rows, np.arange(art_rows.size)] = 1.0

        self.n = n
        self.n_ineq = n_ineq
        self.k = k
        self.tau = tau
        self.M = np.hstack([A, slack, art])
        self.b = b
        ncols = self.M.shape[1]
        self.n_art = art_rows.size
        self.art_start = n + n_ineq
        self.ub = np.concatenate([np.ones(n), np.full(n_ineq, np.inf), np.full(art_rows.size, np.inf)])
        self.at_upper = np.zeros(ncols, dtype=bool)
        basis = np.empty(k, dtype=np.int64)
        basis[~needs_art] = n + np.flatnonzero(~needs_art)
        basis[art_rows] = self.art_start + np.arange(art_rows.size)
        self.basis = basis
        self.T = self.M.copy()  # B^-1 M; the initial basis is the identity
        self.beta = b.copy()    # current basic values
        self.allowed = np.ones(ncols, dtype=bool)
        self.iterations = 0

    def reduced_costs(self, cost: np.ndarray) -> np.ndarray:
        return cost - cost[self.basis] @ self.T

    def run(self, cost: np.ndarray, max_iter: int) -> str:
        """Maximize ``cost . v`` from the current basic feasible solution."""
        k, ncols = self.T.shape
        d = self.reduced_costs(cost)
        degenerate = 0
        bland_after = 5 * (k + self.n)
        bland = False
        while True:
            if self.iterations >= max_iter:
                raise LpError(f"simplex iteration limit ({max_iter}) reached")
            up = (~self.at_upper) & (d > FEAS_TOL) & self.allowed
            down = self.at_upper & (d < -FEAS_TOL) & self.allowed
            up[self.basis] = False
            down[self.basis] = False
            eligible = up | down
            if not eligible.any():
                return OPTIMAL
            if bland:
                q = int(np.flatnonzero(eligible)[0])
            else:
                q = int(np.argmax(np.where(eligible, np.abs(d), -1.0)))
            delta = 1.0 if up[q] else -1.0
            alpha = self.T[:, q] * delta  # basic values move by -theta * alpha

            theta = self.ub[q]
            leave = -1
            leave_to_upper = False
            with np.errstate(divide="ignore", invalid="ignore"):
                ub_b = self.ub[self.basis]
                dec = alpha > FEAS_TOL
                inc = (alpha < -FEAS_TOL) & np.isfinite(ub_b)
                ratios = np.full(k, np.inf)
                ratios[dec] = np.maximum(self.beta[dec], 0.0) / alpha[dec]
                ratios[inc] = np.maximum(ub_b[inc] - self.beta[inc], 0.0) / -alpha[inc]
            if k:
                rmin = ratios.min()
                if rmin < theta:
                    ties = np.flatnonzero(ratios <= rmin + FEAS_TOL)
                    if bland:
                        leave = int(ties[np.argmin(self.basis[ties])])
                    else:
                        leave = int(ties[np.argmax(np.abs(alpha[ties]))])
                    theta = ratios[leave]
                    leave_to_upper = bool(inc[leave])
            if not np.isfinite(theta):
                return UNBOUNDED

            self.iterations += 1
            if theta <= FEAS_TOL:
                degenerate += 1
                if degenerate > bland_after and not bland:
                    log.debug("switching to Bland's rule after %d degenerate pivots", degenerate)
                    bland = True
            else:
                degenerate = 0

            self.beta -= theta * alpha
            if leave < 0:
                self.at_upper[q] = not self.at_upper[q]
                continue

            entering_value = theta if delta > 0 else self.ub[q] - theta
            out = self.basis[leave]
            self.at_upper[out] = leave_to_upper
            self.at_upper[q] = False
            self.beta[leave] = entering_value
            piv = self.T[leave, q]
            self.T[leave] /= piv
            col = self.T[:, q].copy()
            col[leave] = 0.0
            self.T -= np.outer(col, self.T[leave])
            d = d - d[q] * self.T[leave]
            self.basis[leave] = q

    def drive_out_artificials(self):
        """Pivot zero-valued basic artificials out where a non-artificial column allows."""
        for row in range(self.k):
            if self.basis[row] < self.art_start:
                continue
            cand = np.flatnonzero(np.abs(self.T[row, : self.art_start]) > 1e-7)
            cand = [c for c in cand if c not in set(self.basis)]
            if not cand:
                continue  # redundant row; the artificial stays basic at 0
            q = int(cand[0])
            piv = self.T[row, q]
            self.T[row] /= piv
            col = self.T[:, q].copy()
            col[row] = 0.0
            self.T -= np.outer(col, self.T[row])
            # the artificial was at 0, so the entering variable keeps its bound value
            self.beta[row] = self.ub[q] if self.at_upper[q] else 0.0
            self.at_upper[q] = False
            self.basis[row] = q

    def values(self) -> np.ndarray:
        v = np.where(self.at_upper, self.ub, 0.0)
        v[self.basis] = self.beta
        return v

    def polish(self) -> np.ndarray:
        """Recompute basic values from the original rows with a fresh solve."""
        v = np.where(self.at_upper, self.ub, 0.0)
        v[self.basis] = 0.0
        B = self.M[:, self.basis]
        v[self.basis] = np.linalg.solve(B, self.b - self.M @ v)
        return v


def solve(lp: LinearProgram, max_iter: Optional[int] = None) -> LpSolution:
    """Solve ``lp`` to a proven-optimal basic solution.

    Returns an :class:`LpSolution` with status ``optimal``, ``infeasible`` or
    ``unbounded``. Raises :class:`LpError` if the final solution fails the
    primal/dual checks.
    """
    tab = _Tableau(lp)
    n, k = lp.n, tab.k
    ncols = tab.M.shape[1]
    if max_iter is None:
        max_iter = 50 * (ncols + k) + 1000

    if tab.n_art:
        phase1 = np.zeros(ncols)
        phase1[tab.art_start:] = -1.0
        status = tab.run(phase1, max_iter)
        infeas = tab.values()[tab.art_start:].sum()
        if status != OPTIMAL or infeas > FEAS_TOL * max(1.0, np.abs(tab.b).max()):
            return LpSolution(INFEASIBLE, iterations=tab.iterations)
        tab.drive_out_artificials()
        tab.ub[tab.art_start:] = 0.0
        tab.allowed[tab.art_start:] = False
        tab.beta[tab.basis >= tab.art_start] = 0.0

    sign = 1.0 if lp.sense == "max" else -1.0
    cost = np.zeros(ncols)
    cost[:n] = sign * lp.c
    status = tab.run(cost, max_iter)
    if status != OPTIMAL:
        return LpSolution(status, iterations=tab.iterations)

    v = tab.polish()
    x = np.clip(v[:n], 0.0, 1.0)
    B = tab.M[:, tab.basis]
    y_internal = np.linalg.solve(B.T, cost[tab.basis])
    duals = _snap(sign * tab.tau * y_internal)
    reduced = _snap(sign * (cost[:n] - y_internal @ tab.M[:, :n]))
    objective = float(lp.c @ x)
    sol = LpSolution(OPTIMAL, x, objective, duals, reduced, tab.iterations, tab.basis.copy())
    _verify(lp, sol, v, tab)
    return sol


def _snap(v: np.ndarray) -> np.ndarray:
    # round-off residue only; also turns -0.0 into 0.0
    return np.where(np.abs(v) < 1e-12, 0.0, v)


def _row_data(lp: LinearProgram):
    A, b = lp.A, lp.b
    if lp.eq is not None:
        A = np.vstack([A, lp.eq[0]])
        b = np.append(b, lp.eq[1])
    return A, b


def _verify(lp: LinearProgram, sol: LpSolution, v: np.ndarray, tab: _Tableau):
    """Primal feasibility, dual sign conditions and complementary slackness."""
    A, b = _row_data(lp)
    x, y = sol.x, sol.duals
    scale = max(1.0, np.abs(b).max() if b.size else 1.0, np.abs(lp.c).max())
    act = A @ x
    n_ineq = lp.b.size
    le = np.array([s == LE for s in lp.row_senses])
    viol = np.concatenate([
        np.where(le, act[:n_ineq] - lp.b, lp.b - act[:n_ineq]),
        np.abs(act[n_ineq:] - b[n_ineq:]),
    ])
    if viol.size and viol.max() > CHECK_TOL * scale:
        raise LpError(f"primal infeasibility {viol.max():.3g} after solve")
    if np.any(np.abs(v[:lp.n] - x) > CHECK_TOL):
        raise LpError("basic solution left the unit box")
    # duals in "max" orientation must be >= 0 on <= rows and <= 0 on >= rows
    s = 1.0 if lp.sense == "max" else -1.0
    yi = s * y[:n_ineq]
    bad_sign = np.where(le, -yi, yi)
    if bad_sign.size and bad_sign.max() > CHECK_TOL * scale:
        raise LpError("dual sign condition violated")
    slack = np.abs(act[:n_ineq] - lp.b)
    if n_ineq and np.max(np.abs(y[:n_ineq]) * slack) > CHECK_TOL * scale:
        raise LpError("complementary slackness violated on constraint rows")
    rc = s * sol.reduced_costs
    if np.any((x < 1 - CHECK_TOL) & (rc > CHECK_TOL * scale)) or np.any(
        (x > CHECK_TOL) & (rc < -CHECK_TOL * scale)
    ):
        raise LpError("reduced costs inconsistent with variable bounds")
    dual_obj = b @ y + np.sum(np.maximum(rc, 0.0)) * s
    if abs(dual_obj - sol.objective) > CHECK_TOL * scale * max(1.0, abs(sol.objective)):
        raise LpError(f"duality gap {dual_obj - sol.objective:.3g}")


def solve_relaxation(inst: MkpInstance) -> LpSolution:
    sol = solve(relax_mkp(inst))
    if not sol.optimal:
        raise LpError(f"LP relaxation of {inst.name} returned {sol.status}")
    return sol


def surrogate_multipliers(inst: MkpInstance, sol: Optional[LpSolution] = None) -> np.ndarray:
    """Shadow prices of the knapsack rows of the LP relaxation."""
    sol = sol or solve_relaxation(inst)
    return np.maximum(sol.duals[: inst.m], 0.0)


def format_solution(sol: LpSolution, names: Optional[Sequence[str]] = None) -> str:
    lines = [f"status: {sol.status}"]
    if not sol.optimal:
        return "\n".join(lines) + "\n"
    lines.append(f"objective: {sol.objective:.10g}")
    frac = set(sol.fractional().tolist())
    lines.append("primal:")
    for j, xj in enumerate(sol.x):
        label = names[j] if names else f"x{j + 1}"
        mark = "  fractional" if j in frac else ""
        lines.append(f"  {label} = {xj:.10g}{mark}")
    lines.append("duals:")
    for i, yi in enumerate(sol.duals):
        lines.append(f"  row{i + 1} = {yi:.10g}")
    return "\n".join(lines) + "\n"
