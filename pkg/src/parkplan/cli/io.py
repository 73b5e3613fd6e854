"""CSV readers and writers for networks, fleets, prices, plans and schedules."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from ..fleet import FleetClass
from ..grid import Bus, Line, Network

FLEET_FIELDS = ("name", "kind", "count", "psi", "phi", "aer", "beta", "xi", "eta_c", "eta_d",
                "soc_min", "soc_max", "departure_soc_target", "window_start", "window_end",
                "consumption_param")


def _rows(path, required):
    """Yield ``(line_no, row)`` from a headed CSV after checking its columns."""
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ConfigError(f"cannot open: {exc.strerror}", path=str(path), line=0) from exc
    with fh:
        reader = csv.DictReader(fh)
        missing = [c for c in required if c not in (reader.fieldnames or ())]
        if missing:
            raise ConfigError(f"missing column(s) {', '.join(missing)}", path=str(path), line=1)
        for row in reader:
            if not any((v or "").strip() for v in row.values()):
                continue
            yield reader.line_num, row


def _num(row, key, path, line, cast=float):
    raw = (row.get(key) or "").strip()
    try:
        return cast(raw)
    except ValueError:
        raise ConfigError(f"column {key!r}: cannot parse {raw!r}", path=str(path), line=line) from None


def _build(path, line, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except ValueError as exc:
        raise ConfigError(str(exc), path=str(path), line=line) from None


def _flag(raw):
    return raw.strip().lower() in ("1", "true", "yes")


def read_network(buses_path, lines_path, base_mva=1.0, base_kv=4.8) -> Network:
    buses = []
    for ln, row in _rows(buses_path, ("id", "load_p", "load_q", "v_min", "v_max", "is_slack")):
        g = lambda k, cast=float: _num(row, k, buses_path, ln, cast)  # noqa: E731
        buses.append(_build(buses_path, ln, Bus, g("id", int), g("load_p"), g("load_q"),
                            g("v_min"), g("v_max"), _flag(row["is_slack"])))
    lines = []
    for ln, row in _rows(lines_path, ("from", "to", "r_ohm", "x_ohm", "i_max_a", "fo_rate")):
        g = lambda k, cast=float: _num(row, k, lines_path, ln, cast)  # noqa: E731
        lines.append(_build(lines_path, ln, Line, g("from", int), g("to", int), g("r_ohm"),
                            g("x_ohm"), g("i_max_a"), g("fo_rate")))
    return Network(buses, lines, base_mva=base_mva, base_kv=base_kv)


def read_fleet(path) -> list:
    out = []
    for ln, row in _rows(path, FLEET_FIELDS):
        g = lambda k, cast=float: _num(row, k, path, ln, cast)  # noqa: E731
        out.append(_build(
            path, ln, FleetClass,
            name=row["name"].strip(), kind=row["kind"].strip().upper(), count=g("count", int),
            psi=g("psi"), phi=g("phi"), aer=g("aer"), beta=g("beta"), xi=g("xi"),
            eta_c=g("eta_c"), eta_d=g("eta_d"), soc_min=g("soc_min"), soc_max=g("soc_max"),
            departure_soc_target=g("departure_soc_target"),
            plug_window=(g("window_start", int), g("window_end", int)),
            consumption_param=g("consumption_param"),
        ))
    return out


def read_prices(path) -> dict:
    """``{day label: (sell[24], buy[24])}`` in file order."""
    table = {}
    for ln, row in _rows(path, ("hour", "sell", "buy", "day")):
        h = _num(row, "hour", path, ln, int)
        if not 0 <= h < 24:
            raise ConfigError(f"hour {h} outside 0..23", path=str(path), line=ln)
        sell, buy = _num(row, "sell", path, ln), _num(row, "buy", path, ln)
        if sell < 0 or buy < 0:
            raise ConfigError("prices must be non-negative", path=str(path), line=ln)
        day = row["day"].strip()
        s, b = table.setdefault(day, (np.full(24, np.nan), np.full(24, np.nan)))
        if not np.isnan(s[h]):
            raise ConfigError(f"duplicate hour {h} for day {day!r}", path=str(path), line=ln)
        s[h], b[h] = sell, buy
    for day, (s, b) in table.items():
        if np.isnan(s).any():
            raise ConfigError(f"day {day!r} does not list all 24 hours", path=str(path), line=0)
    return table


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.9g}"
    return str(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_plan(path) -> list:
    """``[(bus, size_kw)]`` of the chosen lots listed in a plan file."""
    return [(_num(r, "bus", path, ln, int), _num(r, "size_kw", path, ln))
            for ln, r in _rows(path, ("bus", "size_kw"))]
