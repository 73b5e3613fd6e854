"""Siting and sizing of parking lots: a MILP over candidate buses.

Cost convention (present worth over ``years``): investment is paid once, recurring O&M
and expected interruption costs are discounted year by year. Equivalently the investment
is spread into ``years`` equal annual payments ``crf(d, years) * I`` whose present worth is
``I`` again.

The sizing is bounded by linear voltage and current rows built from a
:class:`~parkplan.grid.LinearModel`, with every lot either charging or discharging at its
full size at the planning operating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import grid
from .errors import Infeasible, InfeasibleDemand, NoCandidates
from .optim import LPBuilder, MilpProblem, Status, solve_milp

DAYS_PER_YEAR = 365


def crf(d: float, t: float) -> float:
    """Capital recovery factor d(1+d)^t / ((1+d)^t - 1)."""
    if not d > 0:
        raise ValueError("discount rate must be positive")
    if t < 1:
        raise ValueError("need t >= 1")
    g = (1.0 + d) ** t
    return d * g / (g - 1.0)


def year_weights(d: float, years: int) -> np.ndarray:
    """Present-worth weight of each year 1..years."""
    return (1.0 + d) ** -np.arange(1, int(years) + 1, dtype=float)


def present_worth_factor(d: float, years: int) -> float:
    return float(year_weights(d, years).sum())


@dataclass(frozen=True)
class EconomicParams:
    d: float = 0.1
    years: int = 4
    c_inv: float = 300.0
    c_om: float = 20.0
    c_il: float = 1.0
    c_site: float = 0.0

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError("discount rate must be positive")
        if self.years < 1:
            raise ValueError("planning horizon must be at least one year")
        if min(self.c_inv, self.c_om, self.c_il, self.c_site) < 0:
            raise ValueError("costs must be non-negative")


@dataclass(frozen=True)
class CandidateSite:
    """A bus that may host a lot. Per-site costs fall back to :class:`EconomicParams`."""

    bus: int
    s_max: float
    p_min: float = 0.0
    p_max: float | None = None
    c_inv: float | None = None
    c_om: float | None = None
    c_site: float | None = None

    def __post_init__(self):
        p_max = self.s_max if self.p_max is None else self.p_max
        object.__setattr__(self, "p_max", float(p_max))
        if not 0 <= self.p_min <= self.p_max <= self.s_max:
            raise ValueError(f"candidate at bus {self.bus}: need 0 <= p_min <= p_max <= s_max")

    @property
    def size_cap(self) -> float:
        return min(self.s_max, self.p_max)

    def costs(self, econ: EconomicParams):
        pick = lambda own, default: default if own is None else own  # noqa: E731
        return pick(self.c_inv, econ.c_inv), pick(self.c_om, econ.c_om), pick(self.c_site, econ.c_site)


@dataclass
class SitingProblem:
    milp: MilpProblem
    net: grid.Network
    candidates: tuple
    econ: EconomicParams
    hourly_loads: np.ndarray
    x_idx: list
    s_idx: list
    constant: float
    row_names: list = field(default_factory=list)


@dataclass
class SitingPlan:
    candidates: tuple
    chosen: tuple
    sizes: tuple
    cost_breakdown: dict
    objective: float
    nodes: int = 0
    iterations: int = 0

    @property
    def selected(self) -> dict:
        return {c.bus: (ch, sz) for c, ch, sz in zip(self.candidates, self.chosen, self.sizes)}

    @property
    def lots(self) -> list:
        """``(bus, size_kw)`` of every chosen lot."""
        return [(c.bus, sz) for c, ch, sz in zip(self.candidates, self.chosen, self.sizes) if ch]

    @classmethod
    def empty(cls, candidates=()):
        n = len(candidates)
        return cls(tuple(candidates), (False,) * n, (0.0,) * n,
                   {"investment": 0.0, "om": 0.0, "ens": 0.0}, 0.0)


def _line_capacity_kw(net, lm, li, scale=1.0):
    v_to = lm.v0[net.child[li]]
    s_lim = net.i_max_pu[li] * v_to * net.s_base_kw * scale
    q = lm.q_flow0[li]
    if abs(q) >= s_lim:
        return 0.0
    return math.sqrt(s_lim ** 2 - q ** 2)


def build_siting_problem(net: grid.Network, candidates, econ: EconomicParams, demand,
                         linear_model: grid.LinearModel, hourly_loads=None,
                         voltage_margin=None, line_scale=None) -> SitingProblem:
    """Assemble the siting MILP.

    ``hourly_loads`` (``(24, n_bus)`` kW) drives the expected-interruption term and defaults
    to the nominal loads every hour. ``voltage_margin`` (pu per bus) and ``line_scale``
    (factor per line) tighten the network rows. ``demand`` needs a ``required_kw``
    attribute (see :func:`parkplan.fleet.energy_demand`).
    """
    candidates = tuple(candidates)
    if not candidates:
        raise NoCandidates("no candidate sites given")
    required = float(getattr(demand, "required_kw", demand or 0.0))
    if sum(c.size_cap for c in candidates) < required - 1e-9:
        raise InfeasibleDemand(f"candidates can host at most {sum(c.size_cap for c in candidates):g} kW, "
                               f"fleet needs {required:g} kW", stage="stage1")
    n_bus = net.n_bus
    loads = np.tile(net.load_p, (24, 1)) if hourly_loads is None else np.atleast_2d(np.asarray(hourly_loads, float))
    margin = np.zeros(n_bus) if voltage_margin is None else np.broadcast_to(np.asarray(voltage_margin, float), (n_bus,))
    lscale = np.ones(len(net.lines)) if line_scale is None else np.asarray(line_scale, float)
    pwf = present_worth_factor(econ.d, econ.years)
    ens_weight = pwf * DAYS_PER_YEAR * econ.c_il

    lp = LPBuilder("min")
    x_idx, s_idx, tags = [], [], []
    seen = {}
    for c in candidates:
        if c.bus not in net.index:
            raise ValueError(f"candidate bus {c.bus} is not in the network")
        # a second candidate on the same bus gets a suffix so names stay unique
        seen[c.bus] = seen.get(c.bus, 0) + 1
        tag = str(c.bus) if seen[c.bus] == 1 else f"{c.bus}.{seen[c.bus]}"
        tags.append(tag)
        c_inv, c_om, c_site = c.costs(econ)
        x_idx.append(lp.add_var(f"x_{tag}", 0.0, 1.0, c_site, integer=True))
        s_idx.append(lp.add_var(f"S_{tag}", 0.0, c.size_cap, c_inv + pwf * c_om))
    for c, tag, xj, sj in zip(candidates, tags, x_idx, s_idx):
        lp.add_row({sj: 1.0, xj: -c.size_cap}, "<=", 0.0, f"cap_{tag}")
        if c.p_min > 0:
            lp.add_row({sj: 1.0, xj: -c.p_min}, ">=", 0.0, f"pmin_{tag}")
    if required > 0:
        lp.add_row({sj: 1.0 for sj in s_idx}, ">=", required, "fleet_demand")

    cand_bus = [net.index[c.bus] for c in candidates]
    lm = linear_model
    for k in range(n_bus):
        coef = {sj: lm.dv_dp[k, b] for sj, b in zip(s_idx, cand_bus) if lm.dv_dp[k, b] != 0.0}
        if not coef:
            continue
        bid = net.buses[k].id
        lp.add_row(coef, ">=", net.v_min[k] + margin[k] - lm.v0[k], f"vmin_{bid}")
        lp.add_row({j: -v for j, v in coef.items()}, "<=", net.v_max[k] - margin[k] - lm.v0[k], f"vmax_{bid}")

    below = [set(rows.tolist()) for rows in net.below]
    for li in range(len(net.lines)):
        idx = [sj for sj, b in zip(s_idx, cand_bus) if b in below[li]]
        if not idx:
            continue
        cap = _line_capacity_kw(net, lm, li, lscale[li])
        p0 = lm.p_flow0[li]
        tag = f"{net.lines[li].from_bus}_{net.lines[li].to_bus}"
        lp.add_row({sj: 1.0 for sj in idx}, "<=", cap - p0, f"imax_chg_{tag}")
        lp.add_row({sj: 1.0 for sj in idx}, ">=", -cap - p0, f"imax_dis_{tag}")

    # Expected interruption of line l is w * sum_h max(0, D_lh - B_l), B_l = sizes below l.
    # That is convex piecewise linear in B_l; each piece becomes a bounded segment variable
    # with a negative cost, filled in order by the minimization up to B_l.
    constant = 0.0
    for li in range(len(net.lines)):
        fo = net.fo_rate[li]
        if fo == 0.0 or ens_weight == 0.0:
            continue
        d = loads[:, net.below[li]].sum(axis=1)
        d = d[d > 0.0]
        if d.size == 0:
            continue
        w = fo * ens_weight
        constant += w * d.sum()
        idx = [sj for sj, b in zip(s_idx, cand_bus) if b in below[li]]
        if not idx:
            continue
        b_max = sum(c.size_cap for c, b in zip(candidates, cand_bus) if b in below[li])
        seg, prev = {}, 0.0
        for level in np.unique(d):
            if prev >= b_max:
                break
            active = int(np.count_nonzero(d >= level))
            length = min(level, b_max) - prev
            seg[lp.add_var(f"ens_{li}_{len(seg)}", 0.0, length, -w * active)] = 1.0
            prev = min(level, b_max)
        lp.add_row({**seg, **{sj: -1.0 for sj in idx}}, "<=", 0.0, f"ens_{li}")

    return SitingProblem(lp.build_milp(), net, candidates, econ, loads, x_idx, s_idx, constant,
                         list(lp.row_names))


def plan_costs(net, candidates, econ, hourly_loads, sizes, chosen):
    """Recompute the cost breakdown of a plan from its sizes, without the solver."""
    pwf = present_worth_factor(econ.d, econ.years)
    inv = om = 0.0
    backup = np.zeros(net.n_bus)
    for c, sz, ch in zip(candidates, sizes, chosen):
        c_inv, c_om, c_site = c.costs(econ)
        inv += c_inv * sz + (c_site if ch else 0.0)
        om += pwf * c_om * sz
        backup[net.index[c.bus]] += sz
    _, daily_cost = grid.expected_ens(net, hourly_loads, backup, econ.c_il)
    return {"investment": inv, "om": om, "ens": pwf * DAYS_PER_YEAR * daily_cost}


def solve_siting(problem: SitingProblem, gap: float = 1e-6) -> SitingPlan:
    sol = solve_milp(problem.milp, gap=gap)
    if sol.status is Status.INFEASIBLE:
        raise Infeasible("siting problem has no feasible plan", stage="stage1")
    if sol.status is not Status.OPTIMAL:
        raise Infeasible(f"siting solve ended with status {sol.status.value}", stage="stage1")
    x = sol.x
    chosen = tuple(bool(x[j] > 0.5) for j in problem.x_idx)
    sizes = tuple(float(x[j]) if ch else 0.0 for j, ch in zip(problem.s_idx, chosen))
    breakdown = plan_costs(problem.net, problem.candidates, problem.econ,
                           problem.hourly_loads, sizes, chosen)
    objective = sol.objective + problem.constant
    total = sum(breakdown.values())
    if abs(total - objective) > 1e-6 * max(1.0, abs(objective)):
        raise AssertionError(f"cost breakdown {total} does not match solver objective {objective}")
    return SitingPlan(problem.candidates, chosen, sizes, breakdown, objective,
                      nodes=sol.nodes, iterations=sol.iterations)


@dataclass(frozen=True)
class Violation:
    kind: str
    where: int
    mode: str
    value: float
    limit: float

    @property
    def margin(self) -> float:
        """Signed distance to the limit; negative means violated."""
        if self.kind in ("v_min",):
            return self.value - self.limit
        return self.limit - self.value


def verify_plan(plan: SitingPlan, net: grid.Network, peak_p, peak_q=None, modes=("charge", "discharge")):
    """AC re-check of a plan at the peak operating point.

    Every chosen lot is run at its full size, charging and (separately) discharging.
    Returns the list of violated voltage, current and capacity limits; empty when the
    plan is acceptable.
    """
    peak_p = np.asarray(peak_p, dtype=float)
    peak_q = net.load_q if peak_q is None else np.asarray(peak_q, dtype=float)
    out = []
    for c, ch, sz in zip(plan.candidates, plan.chosen, plan.sizes):
        if ch and sz > c.s_max + 1e-9:
            out.append(Violation("s_max", c.bus, "size", sz, c.s_max))
        if ch and sz > c.p_max + 1e-9:
            out.append(Violation("p_max", c.bus, "size", sz, c.p_max))
        if ch and sz < c.p_min - 1e-9:
            out.append(Violation("p_min", c.bus, "size", c.p_min, sz))
    for mode in modes:
        sign = 1.0 if mode == "charge" else -1.0
        p = peak_p.copy()
        for bus, sz in plan.lots:
            p[net.index[bus]] += sign * sz
        sol = grid.run_power_flow(net, p, peak_q)
        for k in range(net.n_bus):
            bid = net.buses[k].id
            if sol.v[k] < net.v_min[k] - 1e-9:
                out.append(Violation("v_min", bid, mode, float(sol.v[k]), float(net.v_min[k])))
            if sol.v[k] > net.v_max[k] + 1e-9:
                out.append(Violation("v_max", bid, mode, float(sol.v[k]), float(net.v_max[k])))
        for li in range(len(net.lines)):
            if sol.i[li] > net.i_max_pu[li] * (1 + 1e-9):
                out.append(Violation("i_max", li, mode, float(sol.i[li]), float(net.i_max_pu[li])))
    return out


def plan_sites(net, candidates, econ, demand, peak_p, peak_q=None, hourly_loads=None, gap=1e-6):
    """Solve, AC-verify and, if needed, re-solve once with margins tightened by the observed error.

    Returns ``(plan, problem, violations)``; raises :class:`Infeasible` when the second plan
    still fails the AC check.
    """
    peak_q = net.load_q if peak_q is None else np.asarray(peak_q, dtype=float)
    op = grid.run_power_flow(net, peak_p, peak_q)
    lm = grid.linearize(net, op)
    problem = build_siting_problem(net, candidates, econ, demand, lm, hourly_loads)
    plan = solve_siting(problem, gap)
    bad = verify_plan(plan, net, peak_p, peak_q)
    if not bad:
        return plan, problem, bad

    margin = np.zeros(net.n_bus)
    scale = np.ones(len(net.lines))
    for mode, sign in (("charge", 1.0), ("discharge", -1.0)):
        dp = np.zeros(net.n_bus)
        for bus, sz in plan.lots:
            dp[net.index[bus]] += sign * sz
        sol = grid.run_power_flow(net, peak_p + dp, peak_q)
        margin = np.maximum(margin, np.abs(lm.voltage(dp) - sol.v) + 1e-4)
        ratio = sol.i / net.i_max_pu
        scale = np.minimum(scale, np.where(ratio > 1, (1 - 1e-3) / np.maximum(ratio, 1.0), 1.0))
    problem = build_siting_problem(net, candidates, econ, demand, lm, hourly_loads,
                                   voltage_margin=margin, line_scale=scale)
    plan = solve_siting(problem, gap)
    bad = verify_plan(plan, net, peak_p, peak_q)
    if bad:
        raise Infeasible(f"plan still violates {len(bad)} AC limit(s) after tightening", stage="stage1")
    return plan, problem, bad
