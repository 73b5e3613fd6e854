"""Scenario pipeline: siting, per-day scheduling, AC evaluation with and without lots."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .. import fleet as fl
from .. import grid, stage1, stage2
from ..optim import dump_lp
from ..resources import ChpUnit, dispatch_limits
from . import io
from .config import RepresentativeDay, ScenarioConfig

COMPARISON_KEYS = ("voltage_deviation_pct", "losses_kw", "ens_kwh")


@dataclass
class EvaluationReport:
    config: ScenarioConfig
    plan: stage1.SitingPlan
    schedules: dict
    daily_profit: dict
    horizon_profit: stage2.ProfitReport
    comparison: dict
    peak_day: str
    peak_hour: int
    series: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)


def select_days(days, choice) -> tuple:
    """Representative days for ``--days``: ``None`` keeps them all, ``K`` keeps the first K
    (weights rescaled to a full year), ``"full"`` expands to 365 single days."""
    days = tuple(days)
    if choice is None:
        return days
    if choice == "full":
        out = []
        for d in days:
            n = int(round(d.weight))
            if abs(n - d.weight) > 1e-9:
                raise ValueError("full-year mode needs integer day weights")
            out += [RepresentativeDay(d.label, 1.0, d.load_scale)] * n
        return tuple(out)
    k = int(choice)
    if not 1 <= k <= len(days):
        raise ValueError(f"--days must be between 1 and {len(days)} or 'full'")
    keep = days[:k]
    total = sum(d.weight for d in keep)
    scaled = [replace(d, weight=d.weight * 365.0 / total) for d in keep]
    # rounding leftovers go to the last day so the weights sum to 365 exactly
    scaled[-1] = replace(scaled[-1], weight=365.0 - sum(d.weight for d in scaled[:-1]))
    return tuple(scaled)


def _dg_injection(net, units, limits):
    """Per-bus generation (kW) of the fixed evaluation dispatch: CHP at minimum, wind at expectation."""
    gen = np.zeros(net.n_bus)
    for u, lim in zip(units, limits):
        if u.bus is not None:
            gen[net.index[u.bus]] += lim.p_min if isinstance(u, ChpUnit) else lim.p_max
    return gen


class Scenario:
    """Loaded inputs shared by every stage of a run."""

    def __init__(self, cfg: ScenarioConfig, days=None):
        self.cfg = cfg
        self.net = io.read_network(cfg.buses, cfg.lines, cfg.base_mva, cfg.base_kv)
        self.classes = io.read_fleet(cfg.fleet)
        self.price_table = io.read_prices(cfg.prices)
        self.days = select_days(cfg.days, days)
        self.units = list(cfg.chp) + list(cfg.wind)
        self.limits = dispatch_limits(self.units)
        self.gen = _dg_injection(self.net, self.units, self.limits)
        self.profile = cfg.load_profile
        self.peak_hour = int(np.argmax(self.profile))
        peak = max(self.days, key=lambda d: d.load_scale)
        self.peak_day = peak.label
        self.peak_scale = peak.load_scale

    def day_loads(self, scale):
        """``(24, n_bus)`` demand of a day with the given load scale (kW)."""
        return scale * self.profile[:, None] * self.net.load_p[None, :]

    def planning_loads(self):
        w = np.array([d.weight for d in self.days])
        s = np.array([d.load_scale for d in self.days])
        return self.day_loads(float(w @ s / w.sum()))

    def peak_injection(self):
        p = self.peak_scale * self.profile[self.peak_hour] * self.net.load_p - self.gen
        q = self.peak_scale * self.profile[self.peak_hour] * self.net.load_q
        return p, q

    def prices(self, label):
        sell, buy = self.price_table[label]
        return stage2.PriceSeries(sell, buy, label)


def run_plan(sc: Scenario, gap=None, dump_dir=None):
    cfg = sc.cfg
    if not cfg.candidates:
        return stage1.SitingPlan.empty(), None
    p, q = sc.peak_injection()
    demand = fl.energy_demand(sc.classes)
    plan, problem, _ = stage1.plan_sites(sc.net, cfg.candidates, cfg.econ, demand, p, q,
                                         hourly_loads=sc.planning_loads(),
                                         gap=cfg.gap if gap is None else gap)
    if dump_dir is not None:
        path = Path(dump_dir) / "lp" / "stage1.lp"
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            dump_lp(problem.milp.lp, fh, problem.milp.integer_vars, problem.row_names)
    return plan, problem


def lot_envelopes(sc: Scenario, lots):
    sizes = [s for _, s in lots]
    assign = fl.assign_fleet(sc.classes, sizes)
    prof = fl.availability(sc.classes, assign)
    return [fl.aggregate_envelope(prof, sc.classes, sc.cfg.station_rate, s, lot=i)
            for i, s in enumerate(sizes)]


def _reactive(sc, scale, h):
    return scale * sc.profile[h] * sc.net.load_q


def run_schedules(sc: Scenario, lots, soc_convention="physical", dump_dir=None):
    """Solve every distinct representative day once; returns ``{label: schedule}``."""
    if not lots:
        return {}
    envs = lot_envelopes(sc, lots)
    schedules = {}
    for day in sc.days:
        if day.label in schedules:
            continue
        loads = sc.day_loads(day.load_scale)
        base = np.array([grid.run_power_flow(sc.net, loads[h] - sc.gen,
                                             _reactive(sc, day.load_scale, h)).total_losses
                         for h in range(24)])
        p_peak = loads[sc.peak_hour] - sc.gen
        op = grid.run_power_flow(sc.net, p_peak, _reactive(sc, day.load_scale, sc.peak_hour))
        lm = grid.linearize(sc.net, op)
        prob = stage2.build_scheduling_problem(lots, sc.prices(day.label), envs, loads, sc.limits, lm,
                                               grid_limit=sc.cfg.grid_limit, base_losses=base,
                                               soc_convention=soc_convention)
        if dump_dir is not None:
            path = Path(dump_dir) / "lp" / f"stage2_{day.label}.lp"
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w") as fh:
                dump_lp(prob.lp, fh, row_names=prob.row_names)
        schedules[day.label] = stage2.solve_schedule(prob)
    return schedules


def evaluate(sc: Scenario, lots, schedules):
    """Peak-hour losses and voltage deviation, and peak-day ENS, with and without the lots."""
    net = sc.net
    h, scale = sc.peak_hour, sc.peak_scale
    loads = sc.day_loads(scale)
    q = _reactive(sc, scale, h)
    base_p = loads[h] - sc.gen
    rows = [net.index[b] for b, _ in lots]
    without = grid.run_power_flow(net, base_p, q)
    with_p = base_p.copy()
    backup = np.zeros((24, net.n_bus))
    if lots:
        s = schedules[sc.peak_day]
        for i, k in enumerate(rows):
            with_p[k] += s.p_ch[i, h] - s.p_dch[i, h]
        for i, env in enumerate(lot_envelopes(sc, lots)):
            backup[:, rows[i]] += env.max_discharge
    with_ = grid.run_power_flow(net, with_p, q)
    ens_without, _ = grid.expected_ens(net, loads)
    ens_with, _ = grid.expected_ens(net, loads, backup)
    comparison = {
        "voltage_deviation_pct": {"with_pl": grid.voltage_deviation(with_),
                                  "without_pl": grid.voltage_deviation(without)},
        "losses_kw": {"with_pl": with_.total_losses, "without_pl": without.total_losses},
        "ens_kwh": {"with_pl": ens_with, "without_pl": ens_without},
    }
    return comparison, without, with_


def run_pipeline(cfg: ScenarioConfig, days=None, gap=None, soc_convention="physical",
                 dump_dir=None, plan_lots=None) -> EvaluationReport:
    """Stage 1, stage 2 per representative day, then the with/without-lot comparison.

    ``plan_lots`` (``[(bus, size_kw)]``) skips stage 1 and schedules a given plan.
    """
    sc = Scenario(cfg, days)
    if plan_lots is None:
        plan, _ = run_plan(sc, gap, dump_dir)
    else:
        plan = _plan_from_lots(cfg, plan_lots)
    lots = plan.lots
    schedules = run_schedules(sc, lots, soc_convention, dump_dir)
    daily = {}
    for d in sc.days:
        if d.label not in daily:
            daily[d.label] = (stage2.profit(schedules[d.label], sc.prices(d.label)) if lots
                              else stage2.ProfitReport(0.0, 0.0, 0.0, 0.0, label=d.label))
    horizon = stage2.horizon_aggregate([daily[d.label] for d in sc.days], cfg.econ,
                                       [d.weight for d in sc.days])
    comparison, without, with_ = evaluate(sc, lots, schedules)
    series = _series(sc, lots, schedules, without, with_)
    notes = {
        "peak_day": sc.peak_day, "peak_hour": sc.peak_hour,
        "peak_day_energy_losses_kwh": daily_energy_losses(sc, lots, schedules),
        "soc_convention": soc_convention, "seed": cfg.seed,
        "cost_convention": "investment at present worth; O&M and ENS discounted yearly over the horizon",
        "profit_convention": "sum over years of (1+d)^-t times weighted representative-day profit",
        "days": [[d.label, d.weight] for d in sc.days] if len(sc.days) <= 12 else len(sc.days),
    }
    return EvaluationReport(cfg, plan, schedules, daily, horizon, comparison, sc.peak_day,
                            sc.peak_hour, series, notes)


def _plan_from_lots(cfg, lots):
    by_bus = {c.bus: c for c in cfg.candidates}
    cands, chosen, sizes = [], [], []
    for bus, size in lots:
        cands.append(by_bus.get(bus, stage1.CandidateSite(bus, size)))
        chosen.append(size > 0)
        sizes.append(float(size))
    return stage1.SitingPlan(tuple(cands), tuple(chosen), tuple(sizes),
                             {"investment": float("nan"), "om": float("nan"), "ens": float("nan")},
                             float("nan"))


def daily_energy_losses(sc: Scenario, lots, schedules):
    """AC network losses summed over the peak day (kWh), without and with the scheduled lots."""
    scale = sc.peak_scale
    loads = sc.day_loads(scale)
    rows = [sc.net.index[b] for b, _ in lots]
    s = schedules.get(sc.peak_day) if lots else None
    without = with_ = 0.0
    for h in range(24):
        p = loads[h] - sc.gen
        q = _reactive(sc, scale, h)
        without += grid.run_power_flow(sc.net, p, q).total_losses
        if s is not None:
            p = p.copy()
            for i, k in enumerate(rows):
                p[k] += s.p_ch[i, h] - s.p_dch[i, h]
            with_ += grid.run_power_flow(sc.net, p, q).total_losses
    return {"with_pl": with_ if s is not None else without, "without_pl": without}


def _series(sc, lots, schedules, without, with_):
    out = {}
    rows = []
    for k, b in enumerate(sc.net.bus_ids):
        rows.append((b, without.v[k], with_.v[k]))
    out["peak_voltage"] = (("bus", "v_without_pl", "v_with_pl"), rows)
    for label in dict.fromkeys(d.label for d in sc.days):
        day = next(d for d in sc.days if d.label == label)
        loads = sc.day_loads(day.load_scale).sum(axis=1)
        prices = sc.prices(label)
        s = schedules.get(label)
        z = np.zeros(24)
        ch = s.p_ch.sum(0) if s else z
        dch = s.p_dch.sum(0) if s else z
        soc = s.soc.sum(0) if s else z
        sell = s.p_sell.sum(0) if s else z
        buy = s.p_buy.sum(0) if s else z
        loss = s.losses if s else z
        out[f"hourly_{label}"] = (
            ("hour", "load_kw", "charge_kw", "discharge_kw", "sell_kw", "buy_kw", "soc_kwh",
             "price_sell", "price_buy", "losses_kw"),
            [(h, loads[h], ch[h], dch[h], sell[h], buy[h], soc[h], prices.sell[h], prices.buy[h], loss[h])
             for h in range(24)])
    return out


def emit_reports(report: EvaluationReport, out_dir) -> list:
    """Write every artifact of a run; returns the written paths (relative to ``out_dir``)."""
    out = Path(out_dir)
    written = []
    rows = [(bus, size) for bus, size in report.plan.lots]
    written.append(io.write_csv(out / "plan.csv", ("bus", "size_kw"), rows))
    sched_rows = []
    for label in dict.fromkeys(report.schedules):
        s = report.schedules[label]
        for h in range(24):
            for i, bus in enumerate(s.lots):
                sched_rows.append((label, h, bus, s.p_ch[i, h], s.p_dch[i, h], s.p_sell[i, h],
                                   s.p_buy[i, h], s.soc[i, h]))
    written.append(io.write_csv(out / "schedule.csv",
                                ("day", "hour", "lot", "p_ch", "p_dch", "p_sell", "p_buy", "soc"),
                                sched_rows))
    hp = report.horizon_profit
    profit = {
        "horizon": {"revenue_sell": hp.revenue_sell, "cost_buy": hp.cost_buy,
                    "loss_cost_proxy": hp.loss_cost_proxy, "profit": hp.profit},
        "daily": {k: {"revenue_sell": r.revenue_sell, "cost_buy": r.cost_buy,
                      "loss_cost_proxy": r.loss_cost_proxy, "profit": r.profit}
                  for k, r in report.daily_profit.items()},
        "plan_cost": {**report.plan.cost_breakdown, "objective": report.plan.objective},
        "simultaneous_charge_discharge": {k: s.simultaneous() for k, s in report.schedules.items()},
        "notes": report.notes,
    }
    written.append(io.write_json(out / "profit.json", _finite(profit)))
    written.append(io.write_json(out / "comparison.json", report.comparison))
    for name, (header, rows) in report.series.items():
        written.append(io.write_csv(out / "series" / f"{name}.csv", header, rows))
    return [str(p.relative_to(out)) for p in written]


def _finite(obj):
    """JSON has no NaN; unknown values become null."""
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    if isinstance(obj, np.floating):
        return _finite(float(obj))
    return obj
