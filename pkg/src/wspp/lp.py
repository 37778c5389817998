"""Linear programs in maximization form and a dense revised-simplex solver.

The in-house solver is a two-phase, bounded-variable revised simplex with an
explicit basis inverse (rank-one updates, periodic refactorization). Pricing
is Dantzig's largest reduced cost; ties and degenerate stalls fall back to
Bland's lowest-index rule, so the pivot sequence is fully deterministic.

Deterministic equivalents with tens of thousands of columns are routed to
HiGHS (``method="highs"``); ``method="auto"`` picks by instance size.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

logger = logging.getLogger(__name__)

LE, EQ, GE = "<=", "=", ">="

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7
OPT_TOL = 1e-9

# instances above this size go to HiGHS under method="auto"
AUTO_MAX_ROWS = 1200
AUTO_MAX_COLS = 3000


class DimensionError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


class Status(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """maximize c.x + offset  s.t.  A x (<=|=|>=) b,  lower <= x <= upper."""

    c: np.ndarray
    A: sp.csr_matrix
    senses: tuple
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    offset: float = 0.0
    names: Optional[Sequence[str]] = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        A = sp.csr_matrix(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float).ravel()
        senses = tuple(self.senses)
        lower = np.asarray(self.lower, dtype=float).ravel()
        upper = np.asarray(self.upper, dtype=float).ravel()
        m, n = A.shape
        if len(senses) != m or b.size != m:
            raise DimensionError(f"rows: matrix {m}, senses {len(senses)}, rhs {b.size}")
        if c.size != n or lower.size != n or upper.size != n:
            raise DimensionError(f"columns: matrix {n}, objective {c.size}, bounds {lower.size}/{upper.size}")
        if any(s not in (LE, EQ, GE) for s in senses):
            raise ValueError("constraint sense must be one of <=, =, >=")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(A.data)) and np.all(np.isfinite(b))):
            raise ValueError("objective, matrix and rhs must be finite")
        if np.any(np.isnan(lower)) or np.any(np.isnan(upper)) or np.any(lower == np.inf) or np.any(upper == -np.inf):
            raise ValueError("invalid variable bounds")
        if self.names is not None and len(self.names) != n:
            raise DimensionError("names length differs from column count")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "senses", senses)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape

    @classmethod
    def from_dense(cls, c, rows, senses, b, bounds, offset=0.0) -> "LinearProgram":
        """Convenience constructor; ``bounds`` is a list of (lower, upper) with None for infinite."""
        c = np.asarray(c, dtype=float)
        A = np.asarray(rows, dtype=float).reshape(len(senses), c.size)
        lo = [-np.inf if lb is None else lb for lb, _ in bounds]
        hi = [np.inf if ub is None else ub for _, ub in bounds]
        return cls(c, sp.csr_matrix(A), tuple(senses), b, lo, hi, offset)


@dataclass(frozen=True, eq=False)
class Solution:
    status: Status
    x: np.ndarray
    objective_value: float
    iterations: int = 0
    method: str = ""

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


@dataclass(frozen=True)
class FeasibilityReport:
    max_row_violation: float
    max_bound_violation: float
    objective_value: float

    def ok(self, tol: float = FEAS_TOL) -> bool:
        return self.max_row_violation <= tol and self.max_bound_violation <= tol


def check_feasible(lp: LinearProgram, x, tol: float = FEAS_TOL) -> FeasibilityReport:
    """Measure how far ``x`` is from satisfying ``lp``; independent of the solver."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size != lp.shape[1]:
        raise DimensionError(f"x has {x.size} entries, LP has {lp.shape[1]} columns")
    ax = lp.A @ x
    senses = np.array(lp.senses)
    viol = np.zeros(lp.shape[0])
    le, ge, eq = senses == LE, senses == GE, senses == EQ
    viol[le] = np.maximum(ax[le] - lp.b[le], 0.0)
    viol[ge] = np.maximum(lp.b[ge] - ax[ge], 0.0)
    viol[eq] = np.abs(ax[eq] - lp.b[eq])
    bound = np.maximum(np.maximum(lp.lower - x, x - lp.upper), 0.0)
    return FeasibilityReport(
        max_row_violation=float(viol.max(initial=0.0)),
        max_bound_violation=float(bound.max(initial=0.0)),
        objective_value=float(lp.c @ x + lp.offset),
    )


def solve(lp: LinearProgram, tol: float = OPT_TOL, feas_tol: float = FEAS_TOL,
          method: str = "auto", max_iter: Optional[int] = None) -> Solution:
    """Maximize ``lp``. ``tol`` is the pivot/reduced-cost tolerance."""
    if tol <= 0 or feas_tol <= 0:
        raise ValueError("tolerances must be positive")
    m, n = lp.shape
    if method == "auto":
        method = "simplex" if (m <= AUTO_MAX_ROWS and n <= AUTO_MAX_COLS) else "highs"
    if method == "simplex":
        return _Simplex(lp, tol, feas_tol, max_iter).run()
    if method == "highs":
        return _solve_highs(lp, feas_tol)
    raise ValueError(f"unknown method {method!r}")


def _solve_highs(lp: LinearProgram, feas_tol: float) -> Solution:
    senses = np.array(lp.senses)
    le, ge, eq = senses == LE, senses == GE, senses == EQ
    A = lp.A
    A_ub = sp.vstack([A[le], -A[ge]]).tocsr() if (le.any() or ge.any()) else None
    b_ub = np.concatenate([lp.b[le], -lp.b[ge]]) if A_ub is not None else None
    A_eq = A[eq] if eq.any() else None
    b_eq = lp.b[eq] if eq.any() else None
    bounds = np.column_stack([lp.lower, lp.upper])
    bounds = [(None if np.isinf(lo) else lo, None if np.isinf(hi) else hi) for lo, hi in bounds]
    res = linprog(-lp.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
                  method="highs-ds",
                  options={"primal_feasibility_tolerance": min(feas_tol, 1e-7) * 1e-2,
                           "presolve": True})
    n = lp.shape[1]
    if res.status == 0:
        x = np.asarray(res.x, dtype=float)
        return Solution(Status.OPTIMAL, x, float(lp.c @ x + lp.offset),
                        int(getattr(res, "nit", 0)), "highs")
    if res.status == 2:
        return Solution(Status.INFEASIBLE, np.full(n, np.nan), np.nan, 0, "highs")
    if res.status == 3:
        return Solution(Status.UNBOUNDED, np.full(n, np.nan), np.inf, 0, "highs")
    raise NumericalFailure(f"HiGHS failed: {res.message}")


AT_LOWER, AT_UPPER, INTERIOR, BASIC = 0, 1, 2, 3


class _Simplex:
    """Bounded-variable two-phase revised simplex over [A | slacks | artificials]."""

    REFACTOR_EVERY = 60
    STALL_LIMIT = 25

    def __init__(self, lp: LinearProgram, tol: float, feas_tol: float, max_iter):
        self.lp = lp
        self.tol = tol
        self.feas_tol = feas_tol
        m, n = lp.shape
        self.m, self.n = m, n
        self.max_iter = max_iter if max_iter is not None else 50 * (m + n)
        self.iterations = 0

    def run(self) -> Solution:
        lp, m, n = self.lp, self.m, self.n
        if np.any(lp.lower > lp.upper):
            return self._result(Status.INFEASIBLE)
        if m == 0:
            return self._no_rows()

        senses = np.array(lp.senses)
        s_lo = np.where(senses == GE, -np.inf, 0.0)
        s_hi = np.where(senses == LE, np.inf, 0.0)

        # nonbasic start at zero clipped into the box, so a variable with no
        # reason to move stays at 0
        lo_x, hi_x = lp.lower, lp.upper
        x0 = np.clip(0.0, lo_x, hi_x)
        resid = lp.b - lp.A @ x0

        slack_val = np.clip(resid, s_lo, s_hi)
        art_val = resid - slack_val
        art_sign = np.where(art_val < 0, -1.0, 1.0)
        needs_art = np.abs(art_val) > 0.0

        eye = sp.identity(m, format="csc")
        self.M = sp.hstack([lp.A.tocsc(), eye, sp.diags(art_sign, format="csc")], format="csc")
        self.Mt = self.M.T.tocsr()
        N = n + 2 * m
        self.lo = np.concatenate([lo_x, s_lo, np.zeros(m)])
        self.hi = np.concatenate([hi_x, s_hi, np.where(needs_art, np.inf, 0.0)])
        self.x = np.concatenate([x0, slack_val, np.abs(art_val)])

        self.status = np.empty(N, dtype=np.int8)
        self.status[:] = np.where(self.x == self.lo, AT_LOWER,
                                  np.where(self.x == self.hi, AT_UPPER, INTERIOR))
        rows = np.arange(m)
        self.basis = np.where(needs_art, n + m + rows, n + rows)
        self.status[self.basis] = BASIC
        self.Binv = np.diag(1.0 / np.where(needs_art, art_sign, 1.0))

        # phase 1: drive artificials to zero
        if needs_art.any():
            c1 = np.zeros(N)
            c1[n + m:][needs_art] = -1.0
            status = self._iterate(c1, phase=1)
            if status is not Status.OPTIMAL:
                raise NumericalFailure("phase 1 ended without optimality")
            infeas = float(self.x[n + m:].sum())
            scale = max(1.0, float(np.abs(lp.b).max(initial=0.0)))
            if infeas > self.feas_tol * scale:
                return self._result(Status.INFEASIBLE)
        self.hi[n + m:] = 0.0
        self.lo[n + m:] = 0.0

        c2 = np.concatenate([lp.c, np.zeros(2 * m)])
        status = self._iterate(c2, phase=2)
        if status is Status.UNBOUNDED:
            return self._result(Status.UNBOUNDED)
        self._refactor()
        x = self.x[:n].copy()
        # roundoff can leave basics a hair outside their bounds
        x = np.clip(x, lp.lower, lp.upper)
        return Solution(Status.OPTIMAL, x, float(lp.c @ x + lp.offset), self.iterations, "simplex")

    def _no_rows(self) -> Solution:
        lp = self.lp
        x = np.zeros(self.n)
        for j in range(self.n):
            if lp.c[j] > 0:
                if not np.isfinite(lp.upper[j]):
                    return self._result(Status.UNBOUNDED)
                x[j] = lp.upper[j]
            elif lp.c[j] < 0:
                if not np.isfinite(lp.lower[j]):
                    return self._result(Status.UNBOUNDED)
                x[j] = lp.lower[j]
            else:
                x[j] = np.clip(0.0, lp.lower[j], lp.upper[j])
        return Solution(Status.OPTIMAL, x, float(lp.c @ x + lp.offset), 0, "simplex")

    def _result(self, status: Status) -> Solution:
        value = np.inf if status is Status.UNBOUNDED else np.nan
        return Solution(status, np.full(self.n, np.nan), value, self.iterations, "simplex")

    def _refactor(self):
        B = self.M[:, self.basis].toarray()
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure("singular basis") from exc
        nonbasic = self.status != BASIC
        rhs = self.lp.b - self.M[:, nonbasic] @ self.x[nonbasic]
        self.x[self.basis] = self.Binv @ rhs

    def _iterate(self, c: np.ndarray, phase: int) -> Status:
        m = self.m
        tol = self.tol * max(1.0, float(np.abs(c).max(initial=0.0)))
        fixed = self.lo == self.hi
        stall = 0
        since_refactor = 0
        while True:
            if self.iterations >= self.max_iter:
                raise NumericalFailure(f"iteration cap {self.max_iter} reached in phase {phase}")
            if since_refactor >= self.REFACTOR_EVERY:
                self._refactor()
                since_refactor = 0

            y = c[self.basis] @ self.Binv
            d = c - self.Mt @ y
            st = self.status
            up = ((st == AT_LOWER) | (st == INTERIOR)) & (d > tol) & ~fixed
            dn = ((st == AT_UPPER) | (st == INTERIOR)) & (d < -tol) & ~fixed
            score = np.where(up, d, np.where(dn, -d, 0.0))
            candidates = np.flatnonzero(score > 0)
            if candidates.size == 0:
                return Status.OPTIMAL
            if stall > self.STALL_LIMIT:
                j = int(candidates[0])
            else:
                j = int(candidates[np.argmax(score[candidates])])
            direction = 1.0 if up[j] else -1.0

            col = self.M[:, [j]]
            alpha = self.Binv[:, col.indices] @ col.data
            g = direction * alpha
            xb = self.x[self.basis]
            lb, ub = self.lo[self.basis], self.hi[self.basis]

            ratio = np.full(m, np.inf)
            dec = (g > self.tol) & np.isfinite(lb)
            inc = (g < -self.tol) & np.isfinite(ub)
            ratio[dec] = (xb[dec] - lb[dec]) / g[dec]
            ratio[inc] = (ub[inc] - xb[inc]) / (-g[inc])
            np.maximum(ratio, 0.0, out=ratio)
            theta_row = ratio.min()
            theta_flip = self.hi[j] - self.x[j] if direction > 0 else self.x[j] - self.lo[j]

            if not np.isfinite(theta_row) and not np.isfinite(theta_flip):
                return Status.UNBOUNDED

            self.iterations += 1
            if theta_flip <= theta_row:
                theta = theta_flip
                self.x[self.basis] = xb - theta * g
                self.x[j] += direction * theta
                st[j] = AT_UPPER if direction > 0 else AT_LOWER
                stall = 0 if theta > 1e-12 else stall + 1
                continue

            theta = theta_row
            ties = np.flatnonzero(ratio <= theta + 1e-12 * max(1.0, theta))
            r = int(ties[np.argmin(self.basis[ties])])
            leaving = int(self.basis[r])

            self.x[self.basis] = xb - theta * g
            self.x[j] += direction * theta
            if g[r] > 0:
                self.x[leaving], st[leaving] = lb[r], AT_LOWER
            else:
                self.x[leaving], st[leaving] = ub[r], AT_UPPER
            st[j] = BASIC
            self.basis[r] = j

            piv = alpha[r]
            row_r = self.Binv[r] / piv
            self.Binv -= np.outer(alpha, row_r)
            self.Binv[r] = row_r
            since_refactor += 1
            stall = 0 if theta > 1e-12 else stall + 1


def dump_lp(lp: LinearProgram) -> str:
    """Plain-text rendering, one constraint per line, for debugging."""
    names = list(lp.names) if lp.names is not None else [f"x{j}" for j in range(lp.shape[1])]

    def expr(coeffs, cols):
        terms = [f"{v:+.9g} {names[j]}" for j, v in zip(cols, coeffs) if v != 0]
        return " ".join(terms) if terms else "0"

    nz = np.flatnonzero(lp.c)
    lines = [f"maximize: {expr(lp.c[nz], nz)} {lp.offset:+.9g}"]
    A = lp.A
    for i in range(lp.shape[0]):
        lo, hi = A.indptr[i], A.indptr[i + 1]
        lines.append(f"r{i}: {expr(A.data[lo:hi], A.indices[lo:hi])} {lp.senses[i]} {lp.b[i]:.9g}")
    for j, name in enumerate(names):
        lines.append(f"bound {name}: {lp.lower[j]:.9g} <= {name} <= {lp.upper[j]:.9g}")
    return "\n".join(lines) + "\n"
