"""Scenario configuration: YAML schema, validation with source locations, and loading."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from ..errors import ConfigError, ParkPlanError
from ..resources import ChpUnit, WindResource
from ..stage1 import CandidateSite, EconomicParams
from . import io

SCHEMA = "parkplan-scenario/1"


@dataclass(frozen=True)
class Diagnostic:
    path: str
    line: int
    field: str
    message: str

    def __str__(self):
        return f"{self.path}:{self.line}: {self.field}: {self.message}"


@dataclass(frozen=True)
class RepresentativeDay:
    label: str
    weight: float
    load_scale: float = 1.0


@dataclass
class ScenarioConfig:
    path: Path
    buses: Path
    lines: Path
    fleet: Path
    prices: Path
    base_mva: float
    base_kv: float
    load_profile: np.ndarray
    days: tuple
    candidates: tuple
    econ: EconomicParams
    chp: tuple
    wind: tuple
    station_rate: float = 11.0
    grid_limit: float = np.inf
    seed: int = 0
    gap: float = 1e-6
    extra: dict = field(default_factory=dict)


def _lines_of(text):
    """Map dotted key paths to their 1-based source line."""
    where = {}

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                key = f"{prefix}.{k.value}" if prefix else str(k.value)
                where[key] = k.start_mark.line + 1
                walk(v, key)
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                key = f"{prefix}[{i}]"
                where[key] = v.start_mark.line + 1
                walk(v, key)

    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return where
    if root is not None:
        walk(root, "")
    return where


class _Checker:
    def __init__(self, path, lines):
        self.path = str(path)
        self.lines = lines
        self.diags: list[Diagnostic] = []

    def line(self, key):
        while key:
            if key in self.lines:
                return self.lines[key]
            key = key.rsplit(".", 1)[0] if "." in key else ""
        return 1

    def err(self, key, msg):
        self.diags.append(Diagnostic(self.path, self.line(key), key, msg))

    def num(self, obj, key, prefix, lo=None, hi=None, required=True, default=None, integer=False):
        full = f"{prefix}.{key}" if prefix else key
        if not isinstance(obj, dict) or key not in obj or obj[key] is None:
            if required:
                self.err(full if isinstance(obj, dict) else prefix, "missing required field" if isinstance(obj, dict)
                         else "expected a mapping")
            return default
        v = obj[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.err(full, f"expected a number, got {v!r}")
            return default
        if integer and int(v) != v:
            self.err(full, f"expected an integer, got {v!r}")
            return default
        if lo is not None and v < lo:
            self.err(full, f"must be >= {lo}, got {v!r}")
            return default
        if hi is not None and v > hi:
            self.err(full, f"must be <= {hi}, got {v!r}")
            return default
        return int(v) if integer else float(v)

    def file(self, base, obj, key, prefix=""):
        full = f"{prefix}.{key}" if prefix else key
        if not isinstance(obj, dict) or not isinstance(obj.get(key), str):
            self.err(full, "missing file path")
            return None
        p = (base / obj[key]).resolve()
        if not p.is_file():
            self.err(full, f"file not found: {p}")
            return None
        return p


def _parse(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        return None, None, [Diagnostic(str(path), 0, "", f"cannot read config: {exc.strerror}")]
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        return None, None, [Diagnostic(str(path), mark.line + 1 if mark else 1, "", f"invalid YAML: {exc}")]
    return raw, _lines_of(text), []


def _check(path, raw, lines):
    """Validate ``raw`` and build the config; returns ``(config or None, diagnostics)``."""
    path = Path(path)
    ck = _Checker(path, lines)
    if not isinstance(raw, dict):
        ck.err("", "config must be a mapping")
        return None, ck.diags
    if raw.get("schema") != SCHEMA:
        ck.err("schema", f"expected schema tag {SCHEMA!r}, got {raw.get('schema')!r}")
    base = path.resolve().parent

    net = raw.get("network")
    if not isinstance(net, dict):
        ck.err("network", "missing network section")
        net = {}
    buses = ck.file(base, net, "buses", "network")
    lines_csv = ck.file(base, net, "lines", "network")
    base_mva = ck.num(net, "base_mva", "network", lo=1e-9, required=False, default=1.0)
    base_kv = ck.num(net, "base_kv", "network", lo=1e-9, required=False, default=4.8)
    fleet = ck.file(base, raw, "fleet")
    prices = ck.file(base, raw, "prices")

    prof = raw.get("load_profile")
    if not isinstance(prof, list) or len(prof) != 24 or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) and v >= 0 for v in prof):
        ck.err("load_profile", "expected 24 non-negative multipliers")
        prof = None

    days = []
    rd = raw.get("representative_days")
    if not isinstance(rd, list) or not rd:
        ck.err("representative_days", "expected a non-empty list")
        rd = []
    for i, d in enumerate(rd):
        key = f"representative_days[{i}]"
        if not isinstance(d, dict) or not isinstance(d.get("label"), str):
            ck.err(key, "each day needs a label")
            continue
        w = ck.num(d, "weight", key, lo=0)
        s = ck.num(d, "load_scale", key, lo=0, required=False, default=1.0)
        if w is not None:
            days.append(RepresentativeDay(d["label"], w, s))
    if len({d.label for d in days}) != len(days):
        ck.err("representative_days", "day labels must be unique")
    if rd and len(days) == len(rd):
        total = sum(d.weight for d in days)
        if abs(total - 365) > 1e-9:
            ck.err("representative_days", f"weights must sum to 365, got {total:g}")

    cands = []
    cl = raw.get("candidates", [])
    if not isinstance(cl, list):
        ck.err("candidates", "expected a list")
        cl = []
    for i, c in enumerate(cl):
        key = f"candidates[{i}]"
        bus = ck.num(c, "bus", key, integer=True)
        s_max = ck.num(c, "s_max", key, lo=0)
        opt = {k: ck.num(c, k, key, lo=0, required=False) for k in ("p_min", "p_max", "c_inv", "c_om", "c_site")}
        if bus is None or s_max is None:
            continue
        try:
            cands.append(CandidateSite(bus, s_max, p_min=opt["p_min"] or 0.0,
                                       **{k: opt[k] for k in ("p_max", "c_inv", "c_om", "c_site")}))
        except ValueError as exc:
            ck.err(key, str(exc))

    eco = raw.get("economics")
    if not isinstance(eco, dict):
        ck.err("economics", "missing economics section")
        eco = {}
    econ_kw = dict(
        d=ck.num(eco, "d", "economics", lo=0),
        years=ck.num(eco, "years", "economics", lo=1, integer=True),
        c_inv=ck.num(eco, "c_inv", "economics", lo=0),
        c_om=ck.num(eco, "c_om", "economics", lo=0),
        c_il=ck.num(eco, "c_il", "economics", lo=0),
        c_site=ck.num(eco, "c_site", "economics", lo=0, required=False, default=0.0),
    )
    econ = None
    if None not in econ_kw.values():
        try:
            econ = EconomicParams(**econ_kw)
        except ValueError as exc:
            ck.err("economics", str(exc))

    res = raw.get("resources", {}) or {}
    chp, wind = [], []
    for i, u in enumerate(res.get("chp", []) or []):
        key = f"resources.chp[{i}]"
        vals = [ck.num(u, k, key, lo=0) for k in ("p_min", "p_max")]
        mc = ck.num(u, "marginal_cost", key, lo=0, required=False, default=0.0)
        bus = ck.num(u, "bus", key, integer=True, required=False)
        if None in vals:
            continue
        try:
            chp.append(ChpUnit(*vals, marginal_cost=mc, bus=bus, name=str(u.get("name", f"CHP{i + 1}"))))
        except ValueError as exc:
            ck.err(key, str(exc))
    for i, u in enumerate(res.get("wind", []) or []):
        key = f"resources.wind[{i}]"
        vals = {k: ck.num(u, k, key, lo=0) for k in ("k", "lam")}
        opt = {k: ck.num(u, k, key, lo=0, required=False)
               for k in ("cut_in", "rated_speed", "cut_out", "p_min", "p_max")}
        bus = ck.num(u, "bus", key, integer=True, required=False)
        if None in vals.values():
            continue
        try:
            wind.append(WindResource(**vals, **{k: v for k, v in opt.items() if v is not None},
                                     bus=bus, name=str(u.get("name", f"WT{i + 1}"))))
        except ValueError as exc:
            ck.err(key, str(exc))

    rate = ck.num(raw, "station_rate", "", lo=1e-9, required=False, default=11.0)
    glim = raw.get("grid_limit")
    if glim is None:
        glim = np.inf
    else:
        glim = ck.num(raw, "grid_limit", "", lo=0, default=np.inf)
    seed = ck.num(raw, "seed", "", lo=0, required=False, default=0, integer=True)
    solver = raw.get("solver", {}) or {}
    gap = ck.num(solver, "gap", "solver", lo=0, required=False, default=1e-6)

    # cross-file checks, only once the files themselves were found
    if buses and lines_csv:
        try:
            network = io.read_network(buses, lines_csv, base_mva or 1.0, base_kv or 4.8)
            for i, c in enumerate(cands):
                if c.bus not in network.index:
                    ck.err(f"candidates[{i}].bus", f"bus {c.bus} is not in the network")
            for kind, units in (("chp", chp), ("wind", wind)):
                for i, u in enumerate(units):
                    if u.bus is not None and u.bus not in network.index:
                        ck.err(f"resources.{kind}[{i}].bus", f"bus {u.bus} is not in the network")
        except ConfigError as exc:
            ck.diags.append(Diagnostic(exc.path or "", exc.line or 0, "network", exc.message))
        except ParkPlanError as exc:
            ck.err("network", str(exc))
    if fleet:
        try:
            io.read_fleet(fleet)
        except ConfigError as exc:
            ck.diags.append(Diagnostic(exc.path or "", exc.line or 0, "fleet", exc.message))
    if prices:
        try:
            table = io.read_prices(prices)
            for d in days:
                if d.label not in table:
                    ck.err("representative_days", f"no prices for day {d.label!r} in {prices}")
        except ConfigError as exc:
            ck.diags.append(Diagnostic(exc.path or "", exc.line or 0, "prices", exc.message))

    if ck.diags:
        return None, ck.diags
    cfg = ScenarioConfig(
        path=path.resolve(), buses=buses, lines=lines_csv, fleet=fleet, prices=prices,
        base_mva=base_mva, base_kv=base_kv, load_profile=np.array(prof, dtype=float),
        days=tuple(days), candidates=tuple(cands), econ=econ, chp=tuple(chp), wind=tuple(wind),
        station_rate=rate, grid_limit=glim, seed=seed, gap=gap,
    )
    return cfg, []


def validate_config(path) -> list:
    """Every schema violation in the config at ``path``; empty for a valid config."""
    raw, lines, diags = _parse(path)
    if diags:
        return diags
    return _check(path, raw, lines)[1]


def load_config(path) -> ScenarioConfig:
    raw, lines, diags = _parse(path)
    if not diags:
        cfg, diags = _check(path, raw, lines)
    if diags:
        d = diags[0]
        more = f" (+{len(diags) - 1} more)" if len(diags) > 1 else ""
        raise ConfigError(f"{d.field}: {d.message}{more}", path=d.path, line=d.line)
    return cfg
