"""Hourly scheduling of the built lots for one representative day, and profit reporting.

Each lot is driven through its fleet cohorts (see :func:`parkplan.fleet.aggregate_envelope`):
every cohort has its own charge, discharge and stored-energy variables over its plug window,
and the lot trades the net of its cohorts with the market. Network losses enter through
linear loss factors; the profit charges the buy price on the losses each kW of lot throughput
causes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BadWeights, EmptyPlan, Infeasible, InfeasibleTargets, LengthMismatch, Unbounded
from .optim import LPBuilder, Status, solve_lp
from .stage1 import DAYS_PER_YEAR, EconomicParams, present_worth_factor

HOURS = 24
SOC_CONVENTIONS = ("physical", "literal")


@dataclass(frozen=True)
class PriceSeries:
    sell: np.ndarray
    buy: np.ndarray
    label: str = ""

    def __post_init__(self):
        sell = np.array(self.sell, dtype=float)
        buy = np.array(self.buy, dtype=float)
        if sell.shape != (HOURS,) or buy.shape != (HOURS,):
            raise LengthMismatch(f"price series {self.label!r} needs {HOURS} sell and buy entries")
        if (sell < 0).any() or (buy < 0).any():
            raise ValueError("prices must be non-negative")
        sell.flags.writeable = False
        buy.flags.writeable = False
        object.__setattr__(self, "sell", sell)
        object.__setattr__(self, "buy", buy)


@dataclass(frozen=True)
class CohortTrace:
    """Optimal trajectory of one cohort over its plug window (hours in window order)."""

    lot: int
    cohort: object
    charge: np.ndarray
    discharge: np.ndarray
    energy: np.ndarray


@dataclass
class DispatchSchedule:
    """Per-lot hourly decisions. Arrays are ``(n_lots, 24)`` in kW, ``soc`` in kWh."""

    lots: tuple
    sizes: np.ndarray
    p_ch: np.ndarray
    p_dch: np.ndarray
    p_sell: np.ndarray
    p_buy: np.ndarray
    soc: np.ndarray
    cohorts: tuple
    loss_factors: np.ndarray
    dg_output: np.ndarray
    grid_import: np.ndarray
    losses: np.ndarray
    objective: float
    soc_convention: str = "physical"
    label: str = ""
    iterations: int = 0

    def simultaneous(self, tol: float = 1e-6) -> list:
        """``(lot bus, hour)`` pairs where the lot charges and discharges at once."""
        hit = (self.p_ch > tol) & (self.p_dch > tol)
        return [(self.lots[i], int(h)) for i, h in zip(*np.nonzero(hit))]


@dataclass(frozen=True)
class ProfitReport:
    revenue_sell: float
    cost_buy: float
    loss_cost_proxy: float
    profit: float
    label: str = ""
    days: tuple = field(default=())


@dataclass
class SchedulingProblem:
    lp: object
    lots: tuple
    sizes: np.ndarray
    envelopes: tuple
    prices: PriceSeries
    loads: np.ndarray
    dg_limits: tuple
    loss_factors: np.ndarray
    base_losses: np.ndarray
    soc_convention: str
    row_names: list
    # variable indices
    v_ch: list
    v_dch: list
    v_e: list
    v_sell: np.ndarray
    v_buy: np.ndarray
    v_dg: np.ndarray
    v_grid: np.ndarray


def _lots_of(plan):
    lots = plan.lots if hasattr(plan, "lots") else list(plan)
    return [(int(b), float(s)) for b, s in lots]


def build_scheduling_problem(plan, prices: PriceSeries, envelopes, loads, dg_limits, linear_model,
                             grid_limit: float = np.inf, base_losses=None,
                             soc_convention: str = "physical") -> SchedulingProblem:
    """Assemble the day-ahead profit LP.

    ``plan`` is a :class:`~parkplan.stage1.SitingPlan` or a list of ``(bus, size_kw)``;
    ``envelopes`` holds one :class:`~parkplan.fleet.Envelope` per lot in the same order;
    ``loads`` is the day's system demand, either ``(24,)`` totals or ``(24, n_bus)``;
    ``base_losses`` gives the network losses per hour before any lot activity (kW).
    """
    lots = _lots_of(plan)
    if not lots:
        raise EmptyPlan("no lots to schedule")
    envelopes = tuple(envelopes)
    if len(envelopes) != len(lots):
        raise LengthMismatch(f"{len(lots)} lots but {len(envelopes)} envelopes")
    if soc_convention not in SOC_CONVENTIONS:
        raise ValueError(f"soc_convention must be one of {SOC_CONVENTIONS}")
    loads = np.asarray(loads, dtype=float)
    demand = loads.sum(axis=1) if loads.ndim == 2 else loads
    if demand.shape != (HOURS,):
        raise LengthMismatch("loads must cover 24 hours")
    lm = linear_model
    lf = np.array([lm.bus_loss_factor[_bus_row(lm, b)] for b, _ in lots]) if lm is not None else np.zeros(len(lots))
    base = np.full(HOURS, lm.losses0 if lm is not None else 0.0) if base_losses is None \
        else np.asarray(base_losses, dtype=float)
    if base.shape != (HOURS,):
        raise LengthMismatch("base_losses must cover 24 hours")

    for i, env in enumerate(envelopes):
        for co in env.cohorts:
            reach = co.arrival_kwh + co.eta_c * co.rate_kw * len(co.hours)
            reach = min(reach, co.e_max)
            if reach < co.floor_kwh - 1e-9:
                raise InfeasibleTargets(
                    f"lot at bus {lots[i][0]}: cohort {co.name} can reach {reach:.3f} kWh "
                    f"but must leave with {co.floor_kwh:.3f} kWh", stage="stage2")

    lp = LPBuilder("max")
    n = len(lots)
    sizes = np.array([s for _, s in lots])
    v_sell = np.zeros((n, HOURS), dtype=int)
    v_buy = np.zeros((n, HOURS), dtype=int)
    for i, (bus, size) in enumerate(lots):
        for h in range(HOURS):
            v_sell[i, h] = lp.add_var(f"sell_{bus}_{h}", 0.0, size, prices.sell[h])
            v_buy[i, h] = lp.add_var(f"buy_{bus}_{h}", 0.0, size, -prices.buy[h])

    v_ch, v_dch, v_e = [], [], []
    at_hour_ch = [[[] for _ in range(HOURS)] for _ in range(n)]
    at_hour_dch = [[[] for _ in range(HOURS)] for _ in range(n)]
    for i, env in enumerate(envelopes):
        bus = lots[i][0]
        penalty = abs(lf[i])
        ch_i, dch_i, e_i = [], [], []
        for c, co in enumerate(env.cohorts):
            chs, dchs, es = [], [], []
            for k, h in enumerate(co.hours):
                tag = f"{bus}_{co.name}_{h}"
                # the loss proxy is priced at the buy price on every kW of throughput
                ch = lp.add_var(f"ch_{tag}", 0.0, co.rate_kw, -prices.buy[h] * penalty)
                dch = lp.add_var(f"dch_{tag}", 0.0, co.rate_kw, -prices.buy[h] * penalty)
                lo = co.floor_kwh if k == len(co.hours) - 1 else co.e_min
                e = lp.add_var(f"e_{tag}", lo, co.e_max, 0.0)
                d_out = -1.0 / co.eta_d if soc_convention == "physical" else -co.eta_d
                coefs = {e: 1.0, ch: -co.eta_c, dch: -d_out}
                rhs = 0.0
                if k == 0:
                    rhs = co.arrival_kwh
                else:
                    coefs[es[-1]] = -1.0
                lp.add_row(coefs, "=", rhs, f"soc_{tag}")
                chs.append(ch)
                dchs.append(dch)
                es.append(e)
                at_hour_ch[i][h].append(ch)
                at_hour_dch[i][h].append(dch)
            ch_i.append(chs)
            dch_i.append(dchs)
            e_i.append(es)
        v_ch.append(ch_i)
        v_dch.append(dch_i)
        v_e.append(e_i)

    for i, (bus, size) in enumerate(lots):
        for h in range(HOURS):
            chs, dchs = at_hour_ch[i][h], at_hour_dch[i][h]
            row = {v_sell[i, h]: 1.0, v_buy[i, h]: -1.0}
            for j in chs:
                row[j] = 1.0
            for j in dchs:
                row[j] = -1.0
            lp.add_row(row, "=", 0.0, f"lot_{bus}_{h}")
            if len(chs) > 1:
                lp.add_row({j: 1.0 for j in chs}, "<=", size, f"chmax_{bus}_{h}")
                lp.add_row({j: 1.0 for j in dchs}, "<=", size, f"dchmax_{bus}_{h}")
            elif chs:
                # a single cohort is bounded directly
                lp.set_ub(chs[0], min(lp.ub_of(chs[0]), size))
                lp.set_ub(dchs[0], min(lp.ub_of(dchs[0]), size))

    dg_limits = tuple(dg_limits)
    v_dg = np.zeros((len(dg_limits), HOURS), dtype=int)
    v_grid = np.zeros(HOURS, dtype=int)
    for h in range(HOURS):
        for u, lim in enumerate(dg_limits):
            v_dg[u, h] = lp.add_var(f"dg_{lim.name}_{u}_{h}", lim.p_min, lim.p_max, 0.0)
        v_grid[h] = lp.add_var(f"grid_{h}", 0.0, grid_limit, 0.0)
        # supply + lot discharge + purchases = demand + lot charge + sales + losses
        row = {v_grid[h]: 1.0}
        for u in range(len(dg_limits)):
            row[v_dg[u, h]] = 1.0
        for i in range(n):
            row[v_buy[i, h]] = 1.0
            row[v_sell[i, h]] = -1.0
            for j in at_hour_dch[i][h]:
                row[j] = row.get(j, 0.0) + 1.0 + lf[i]
            for j in at_hour_ch[i][h]:
                row[j] = row.get(j, 0.0) - 1.0 - lf[i]
        lp.add_row(row, "=", demand[h] + base[h], f"balance_{h}")

    return SchedulingProblem(lp.build(), tuple(b for b, _ in lots), sizes, envelopes, prices,
                             loads, dg_limits, lf, base, soc_convention, list(lp.row_names),
                             v_ch, v_dch, v_e, v_sell, v_buy, v_dg, v_grid)


def _bus_row(lm, bus):
    index = getattr(lm, "bus_index", None)
    return index[bus] if index is not None else bus


def solve_schedule(problem: SchedulingProblem, check: bool = True) -> DispatchSchedule:
    sol = solve_lp(problem.lp)
    if sol.status is Status.INFEASIBLE:
        raise Infeasible(f"day {problem.prices.label!r}: no schedule meets the limits", stage="stage2")
    if sol.status is Status.UNBOUNDED:
        raise Unbounded(f"day {problem.prices.label!r}: profit unbounded (missing price or bound data)")
    if sol.status is not Status.OPTIMAL:
        raise Infeasible(f"day {problem.prices.label!r}: solve ended with {sol.status.value}", stage="stage2")
    x = sol.x
    n = len(problem.lots)
    p_ch = np.zeros((n, HOURS))
    p_dch = np.zeros((n, HOURS))
    soc = np.zeros((n, HOURS))
    traces = []
    for i, env in enumerate(problem.envelopes):
        for c, co in enumerate(env.cohorts):
            ch = x[problem.v_ch[i][c]]
            dch = x[problem.v_dch[i][c]]
            e = x[problem.v_e[i][c]]
            hrs = list(co.hours)
            p_ch[i, hrs] += ch
            p_dch[i, hrs] += dch
            soc[i, hrs] += e
            traces.append(CohortTrace(i, co, ch.copy(), dch.copy(), e.copy()))
    lf = problem.loss_factors
    losses = problem.base_losses + lf @ (p_ch - p_dch)
    sched = DispatchSchedule(
        lots=problem.lots, sizes=problem.sizes.copy(), p_ch=p_ch, p_dch=p_dch,
        p_sell=x[problem.v_sell], p_buy=x[problem.v_buy], soc=soc, cohorts=tuple(traces),
        loss_factors=lf.copy(), dg_output=x[problem.v_dg], grid_import=x[problem.v_grid],
        losses=losses, objective=float(sol.objective), soc_convention=problem.soc_convention,
        label=problem.prices.label, iterations=sol.iterations,
    )
    if check:
        issues = check_schedule(sched, problem.loads, problem.dg_limits)
        if issues:
            raise AssertionError("extracted schedule breaks its invariants: " + "; ".join(issues[:5]))
        report = profit(sched, problem.prices)
        if abs(report.profit - sched.objective) > 1e-6 * max(1.0, abs(sched.objective)):
            raise AssertionError(f"recomputed profit {report.profit} != objective {sched.objective}")
    return sched


def check_schedule(s: DispatchSchedule, loads, dg_limits, tol: float = 1e-8) -> list:
    """Re-derive every schedule invariant from the arrays; returns the list of breaches."""
    out = []
    loads = np.asarray(loads, dtype=float)
    demand = loads.sum(axis=1) if loads.ndim == 2 else loads
    for name in ("p_ch", "p_dch", "p_sell", "p_buy"):
        if (getattr(s, name) < -tol).any():
            out.append(f"{name} negative")
    if (s.p_sell > s.sizes[:, None] + tol).any() or (s.p_buy > s.sizes[:, None] + tol).any():
        out.append("trade above lot size")
    if (s.p_ch > s.sizes[:, None] + tol).any() or (s.p_dch > s.sizes[:, None] + tol).any():
        out.append("charge or discharge above lot size")
    lot = s.p_ch + s.p_sell - s.p_dch - s.p_buy
    if np.abs(lot).max(initial=0.0) > tol:
        out.append(f"lot balance off by {np.abs(lot).max():.3g}")
    supply = s.grid_import + s.dg_output.sum(axis=0) + s.p_dch.sum(axis=0) + s.p_buy.sum(axis=0)
    use = demand + s.p_ch.sum(axis=0) + s.p_sell.sum(axis=0) + s.losses
    res = np.abs(supply - use).max()
    if res > tol * max(1.0, np.abs(use).max()):
        out.append(f"system balance residual {res:.3g}")
    for u, lim in enumerate(dg_limits):
        row = s.dg_output[u]
        if (row < lim.p_min - tol).any() or (row > lim.p_max + tol).any():
            out.append(f"unit {lim.name} outside its limits")
    for tr in s.cohorts:
        co = tr.cohort
        prev = co.arrival_kwh
        for k in range(len(co.hours)):
            if s.soc_convention == "physical":
                expect = prev + co.eta_c * tr.charge[k] - tr.discharge[k] / co.eta_d
            else:
                expect = prev + co.eta_c * tr.charge[k] - co.eta_d * tr.discharge[k]
            if abs(tr.energy[k] - expect) > 1e-9 * max(1.0, co.capacity_kwh):
                out.append(f"cohort {co.name}: energy recursion broken at hour {co.hours[k]}")
            prev = tr.energy[k]
        if (tr.energy < co.e_min - tol).any() or (tr.energy > co.e_max + tol).any():
            out.append(f"cohort {co.name}: energy outside [{co.e_min}, {co.e_max}]")
        if tr.energy[-1] < co.floor_kwh - tol:
            out.append(f"cohort {co.name}: leaves with {tr.energy[-1]:.6f} < {co.floor_kwh:.6f} kWh")
        if (tr.charge > co.rate_kw + tol).any() or (tr.discharge > co.rate_kw + tol).any():
            out.append(f"cohort {co.name}: rate above station limit")
    return out


def profit(schedule: DispatchSchedule, prices: PriceSeries, losses=None) -> ProfitReport:
    """Profit of a schedule from its trades: sales revenue, purchase cost, priced loss proxy.

    ``losses`` overrides the per-lot loss factors recorded in the schedule.
    """
    lf = schedule.loss_factors if losses is None else np.asarray(losses, dtype=float)
    if schedule.p_sell.shape[1] != prices.sell.size:
        raise LengthMismatch(f"schedule has {schedule.p_sell.shape[1]} hours, prices {prices.sell.size}")
    if lf.shape != (schedule.p_ch.shape[0],):
        raise LengthMismatch("one loss factor per lot is required")
    revenue = float((schedule.p_sell * prices.sell).sum())
    cost = float((schedule.p_buy * prices.buy).sum())
    throughput = schedule.p_ch + schedule.p_dch
    loss = float((np.abs(lf)[:, None] * throughput * prices.buy).sum())
    return ProfitReport(revenue, cost, loss, revenue - cost - loss, label=prices.label)


def horizon_aggregate(daily, econ: EconomicParams, day_weights) -> ProfitReport:
    """Present worth over the planning years of the weighted representative-day profits.

    Each year counts ``sum_d weight_d * day value``, discounted by ``(1 + d)^-t`` for year t.
    """
    daily = tuple(daily)
    w = np.asarray(day_weights, dtype=float)
    if w.shape != (len(daily),):
        raise BadWeights(f"{len(daily)} days but {w.size} weights")
    if (w < 0).any() or abs(w.sum() - DAYS_PER_YEAR) > 1e-9:
        raise BadWeights(f"day weights must be non-negative and sum to {DAYS_PER_YEAR}, got {w.sum():g}")
    f = present_worth_factor(econ.d, econ.years)
    agg = lambda attr: f * float(sum(wi * getattr(r, attr) for wi, r in zip(w, daily)))  # noqa: E731
    return ProfitReport(agg("revenue_sell"), agg("cost_buy"), agg("loss_cost_proxy"), agg("profit"),
                        label="horizon", days=daily)
