"""Best-bound branch and bound over binary variables."""

from __future__ import annotations

import heapq
import itertools

import numpy as np

from .model import MilpProblem, Solution, Status
from .simplex import solve_lp

INT_TOL = 1e-6


def _most_fractional(x, integer_vars):
    best, best_frac = None, INT_TOL
    for j in integer_vars:
        frac = abs(x[j] - round(x[j]))
        # strict > keeps the lowest index on ties
        if frac > best_frac + 1e-12:
            best, best_frac = j, frac
    return best


def solve_milp(p: MilpProblem, gap: float = 1e-6, node_limit: int = 100_000,
               max_iter: int = 100_000) -> Solution:
    """Solve ``p`` to a relative optimality ``gap``.

    Node LPs are solved from scratch. The returned ``bound`` is the best remaining
    relaxation bound (in the problem's own sense) when the search stops.
    """
    lp = p.lp
    sign = 1.0 if lp.sense == "min" else -1.0
    counter = itertools.count()
    heap = [(-np.inf, next(counter), lp.lb.copy(), lp.ub.copy())]
    incumbent, inc_val = None, np.inf
    nodes = iterations = 0

    while heap:
        key, _, lb, ub = heapq.heappop(heap)
        if incumbent is not None and key >= inc_val - gap * max(1.0, abs(inc_val)):
            heapq.heappush(heap, (key, next(counter), lb, ub))
            break
        if nodes >= node_limit:
            heapq.heappush(heap, (key, next(counter), lb, ub))
            best = sign * min(k for k, *_ in heap)
            return Solution(Status.ITERATION_LIMIT, x=incumbent,
                            objective=None if incumbent is None else sign * inc_val,
                            iterations=iterations, nodes=nodes, bound=best)
        nodes += 1
        sol = solve_lp(lp.with_bounds(lb, ub), max_iter=max_iter)
        iterations += sol.iterations
        if sol.status is Status.UNBOUNDED:
            return Solution(Status.UNBOUNDED, iterations=iterations, nodes=nodes)
        if sol.status is Status.ITERATION_LIMIT:
            return Solution(Status.ITERATION_LIMIT, iterations=iterations, nodes=nodes)
        if sol.status is not Status.OPTIMAL:
            continue
        val = sign * sol.objective
        if incumbent is not None and val >= inc_val - gap * max(1.0, abs(inc_val)):
            continue
        j = _most_fractional(sol.x, p.integer_vars)
        if j is None:
            x = sol.x.copy()
            for k in p.integer_vars:
                x[k] = float(round(x[k]))
            incumbent, inc_val = x, sign * lp.objective(x)
            continue
        for lo_j, hi_j in ((0.0, 0.0), (1.0, 1.0)):
            clb, cub = lb.copy(), ub.copy()
            clb[j], cub[j] = lo_j, hi_j
            heapq.heappush(heap, (val, next(counter), clb, cub))

    if incumbent is None:
        return Solution(Status.INFEASIBLE, iterations=iterations, nodes=nodes)
    bound = min([k for k, *_ in heap], default=inc_val)
    return Solution(Status.OPTIMAL, x=incumbent, objective=sign * inc_val,
                    iterations=iterations, nodes=nodes, bound=sign * min(bound, inc_val))
