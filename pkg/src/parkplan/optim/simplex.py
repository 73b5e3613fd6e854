"""Bounded-variable primal simplex with a two-phase start.

Nonbasic variables rest at one of their bounds, so box constraints never become rows.
The tableau is dense; the constraint matrix is only densified inside a solve.
Pricing is Dantzig (largest reduced-cost violation, lowest index on ties) until
``BLAND_AFTER`` consecutive degenerate pivots, after which Bland's rule is used for the
rest of the solve.
"""

from __future__ import annotations

import numpy as np

from .model import LinearProgram, Solution, Status

BLAND_AFTER = 1000
REFACTOR_EVERY = 200
PIVOT_TOL = 1e-9


class _Tableau:
    def __init__(self, M, b, lb, ub, basis, x):
        self.M = M
        self.b = b
        self.lb = lb
        self.ub = ub
        self.basis = basis
        self.x = x
        m, n = M.shape
        self.is_basic = np.zeros(n, dtype=bool)
        self.is_basic[basis] = True
        self.at_upper = np.zeros(n, dtype=bool)
        self.iterations = 0
        self.refactor()

    def refactor(self):
        m, n = self.M.shape
        if m == 0:
            self.T = np.zeros((0, n))
            return
        B = self.M[:, self.basis]
        self.T = np.linalg.solve(B, self.M)
        xn = self.x.copy()
        xn[self.basis] = 0.0
        self.x[self.basis] = np.linalg.solve(B, self.b - self.M @ xn)

    def run(self, cost, max_iter, opt_tol):
        """Minimize ``cost`` from the current basis. Returns a :class:`Status`."""
        T, x, lb, ub = self.T, self.x, self.lb, self.ub
        basis, is_basic, at_upper = self.basis, self.is_basic, self.at_upper
        ctol = opt_tol * max(1.0, float(np.max(np.abs(cost))) if cost.size else 1.0)
        d = cost - cost[basis] @ T
        movable = ub > lb
        degenerate = 0
        bland = False
        since_refactor = 0
        while True:
            if self.iterations >= max_iter:
                return Status.ITERATION_LIMIT
            nonbasic = ~is_basic & movable
            up = nonbasic & ~at_upper & (d < -ctol)
            down = nonbasic & at_upper & (d > ctol)
            eligible = up | down
            if not eligible.any():
                return Status.OPTIMAL
            if bland:
                q = int(np.flatnonzero(eligible)[0])
            else:
                q = int(np.argmax(np.where(eligible, np.abs(d), -1.0)))
            direction = 1.0 if up[q] else -1.0

            alpha = T[:, q] * direction
            xb = x[basis]
            ratios = np.full(alpha.size, np.inf)
            dec = alpha > PIVOT_TOL
            inc = alpha < -PIVOT_TOL
            ratios[dec] = (xb[dec] - lb[basis][dec]) / alpha[dec]
            ratios[inc] = (ub[basis][inc] - xb[inc]) / -alpha[inc]
            np.maximum(ratios, 0.0, out=ratios)
            t_row = float(ratios.min()) if ratios.size else np.inf
            t_flip = ub[q] - lb[q]
            if not np.isfinite(t_row) and not np.isfinite(t_flip):
                return Status.UNBOUNDED

            self.iterations += 1
            if t_flip <= t_row:
                t = t_flip
                x[basis] -= alpha * t
                at_upper[q] = not at_upper[q]
                x[q] = ub[q] if at_upper[q] else lb[q]
                degenerate = 0
                continue

            tied = np.flatnonzero(ratios <= t_row + 1e-12)
            if bland:
                r = int(tied[np.argmin(basis[tied])])
            else:
                r = int(tied[np.argmax(np.abs(alpha[tied]))])
            t = t_row
            x[basis] -= alpha * t
            x[q] += direction * t
            leaving = basis[r]
            hit_upper = alpha[r] < 0
            x[leaving] = ub[leaving] if hit_upper else lb[leaving]
            at_upper[leaving] = hit_upper
            is_basic[leaving] = False
            basis[r] = q
            is_basic[q] = True
            at_upper[q] = False

            row = T[r] / T[r, q]
            T[r] = row
            col = T[:, q].copy()
            col[r] = 0.0
            nz = np.flatnonzero(col)
            if nz.size:
                T[nz] -= np.outer(col[nz], row)
            d -= d[q] * row

            if t <= 1e-12:
                degenerate += 1
                if degenerate > BLAND_AFTER:
                    bland = True
            else:
                degenerate = 0
            since_refactor += 1
            if since_refactor >= REFACTOR_EVERY:
                since_refactor = 0
                self.refactor()
                T = self.T
                d = cost - cost[basis] @ T

    def pivot_out(self, r, candidates):
        """Degenerate pivot replacing the basic variable of row ``r`` by one of ``candidates``."""
        T = self.T
        vals = np.abs(T[r, candidates])
        if vals.size == 0 or vals.max() <= 1e-7:
            return False
        q = int(candidates[int(np.argmax(vals))])
        leaving = self.basis[r]
        self.is_basic[leaving] = False
        self.at_upper[leaving] = False
        self.x[leaving] = self.lb[leaving]
        self.basis[r] = q
        self.is_basic[q] = True
        self.at_upper[q] = False
        row = T[r] / T[r, q]
        T[r] = row
        col = T[:, q].copy()
        col[r] = 0.0
        T -= np.outer(col, row)
        return True


def _standard_form(lp: LinearProgram):
    """Map ``lp`` onto columns with finite lower bounds plus one slack per inequality.

    Returns the column matrix, costs, bounds, the back-map to original variables and the
    slack column index of every row (or -1) with its sign.
    """
    A = lp.A.toarray()
    m, n = A.shape
    cols, cost, lo, hi, back = [], [], [], [], []
    sign = 1.0 if lp.sense == "min" else -1.0
    for j in range(n):
        l, u, cj = lp.lb[j], lp.ub[j], sign * lp.c[j]
        if np.isfinite(l):
            cols.append(A[:, j]); cost.append(cj); lo.append(l); hi.append(u); back.append((j, 1.0))
        elif np.isfinite(u):
            cols.append(-A[:, j]); cost.append(-cj); lo.append(-u); hi.append(np.inf); back.append((j, -1.0))
        else:
            cols.append(A[:, j]); cost.append(cj); lo.append(0.0); hi.append(np.inf); back.append((j, 1.0))
            cols.append(-A[:, j]); cost.append(-cj); lo.append(0.0); hi.append(np.inf); back.append((j, -1.0))
    n_struct = len(cols)
    slack_col = np.full(m, -1)
    slack_sign = np.zeros(m)
    for i, rel in enumerate(lp.relations):
        if rel == "=":
            continue
        e = np.zeros(m)
        s = 1.0 if rel == "<=" else -1.0
        e[i] = s
        slack_col[i] = len(cols)
        slack_sign[i] = s
        cols.append(e); cost.append(0.0); lo.append(0.0); hi.append(np.inf)
    M = np.column_stack(cols) if cols else np.zeros((m, 0))
    return M, np.array(cost, dtype=float), np.array(lo, dtype=float), np.array(hi, dtype=float), back, n_struct, slack_col, slack_sign


def solve_lp(lp: LinearProgram, max_iter: int = 100_000, tol: float = 1e-9) -> Solution:
    """Solve ``lp``; infeasibility and unboundedness are reported through ``Solution.status``."""
    M, cost, lo, hi, back, n_struct, slack_col, slack_sign = _standard_form(lp)
    m, n = M.shape
    b = lp.b.astype(float).copy()

    x = lo.copy()
    resid = b - M @ x
    basis = np.empty(m, dtype=int)
    art_cols = []
    for i in range(m):
        s = slack_sign[i]
        if slack_col[i] >= 0 and resid[i] * s >= 0:
            basis[i] = slack_col[i]
            x[slack_col[i]] = resid[i] * s
        else:
            e = np.zeros(m)
            e[i] = 1.0 if resid[i] >= 0 else -1.0
            art_cols.append((i, e))
    n_art = len(art_cols)
    if n_art:
        M = np.hstack([M, np.column_stack([e for _, e in art_cols])])
        for k, (i, _) in enumerate(art_cols):
            basis[i] = n + k
        x = np.concatenate([x, np.abs(resid[[i for i, _ in art_cols]])])
        lo = np.concatenate([lo, np.zeros(n_art)])
        hi = np.concatenate([hi, np.full(n_art, np.inf)])
        cost = np.concatenate([cost, np.zeros(n_art)])

    tab = _Tableau(M, b, lo, hi, basis, x)
    feas_tol = 1e-9 * max(1.0, float(np.max(np.abs(b))) if m else 1.0)

    if n_art:
        phase1 = np.zeros(n + n_art)
        phase1[n:] = 1.0
        status = tab.run(phase1, max_iter, tol)
        if status is Status.ITERATION_LIMIT:
            return Solution(Status.ITERATION_LIMIT, iterations=tab.iterations)
        tab.refactor()
        if tab.x[n:].sum() > 1e-7 * max(1.0, float(np.max(np.abs(b)))):
            return Solution(Status.INFEASIBLE, iterations=tab.iterations)
        real = np.arange(n)
        for r in range(m):
            if tab.basis[r] >= n:
                tab.pivot_out(r, real[~tab.is_basic[:n]])
        hi[n:] = 0.0
        tab.x[n:] = np.where(tab.is_basic[n:], tab.x[n:], 0.0)
        tab.refactor()

    status = tab.run(cost, max_iter, tol)
    if status is not Status.OPTIMAL:
        return Solution(status, iterations=tab.iterations)
    tab.refactor()

    xs = tab.x[:n].copy()
    bad = (xs < lo[:n] - feas_tol) | (xs > hi[:n] + feas_tol)
    if bad.any():
        # drift beyond tolerance after the final refactorization
        return Solution(Status.INFEASIBLE, iterations=tab.iterations)
    xs = np.clip(xs, lo[:n], hi[:n])

    out = np.zeros(lp.n_vars)
    for k in range(n_struct):
        j, s = back[k]
        out[j] += s * xs[k]
    # restore exact bound values for original variables sitting on a bound
    for j in range(lp.n_vars):
        if abs(out[j] - lp.lb[j]) <= 1e-12:
            out[j] = lp.lb[j]
        elif abs(out[j] - lp.ub[j]) <= 1e-12:
            out[j] = lp.ub[j]
    return Solution(Status.OPTIMAL, x=out, objective=lp.objective(out), iterations=tab.iterations)
