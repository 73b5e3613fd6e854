"""PHEV fleet model: arrival SOC, charge energy, plug-in windows and per-lot envelopes.

SOC values are fractions in [0, 1] throughout. Each fleet class plugs in over one
cyclic window ``(arrival_hour, departure_hour)``; a window such as ``(16, 7)`` wraps past
midnight and the energy of the vehicles is carried across the day boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyWindow

KINDS = ("PEV", "OEV")
CONSUMPTION_RANGE = {"PEV": (0.0, 0.25), "OEV": (0.0, 0.4)}
MIN_DEPARTURE_SOC = {"PEV": 0.45, "OEV": 0.98}


def soc_after_trip(psi: float, phi: float, aer: float) -> float:
    """SOC left after driving ``phi`` miles, a fraction ``psi`` of them on the battery."""
    if not aer > 0:
        raise ValueError("all-electric range must be positive")
    if not 0 <= psi <= 1 or phi < 0:
        raise ValueError("need psi in [0, 1] and phi >= 0")
    electric = psi * phi
    if electric >= aer:
        return 0.0
    return 1.0 - electric / aer


def battery_capacity(beta: float, aer: float) -> float:
    if beta < 0 or aer < 0:
        raise ValueError("beta and aer must be non-negative")
    return beta * aer


def charge_energy(soc: float, capacity: float) -> float:
    """Energy (kWh) needed to bring a battery from ``soc`` to full."""
    if not 0 <= soc <= 1 or capacity < 0:
        raise ValueError("need soc in [0, 1] and capacity >= 0")
    return (1.0 - soc) * capacity


def grid_energy(e_c: float, xi: float) -> float:
    """Energy drawn from the grid to store ``e_c`` through a charger of efficiency ``xi``."""
    if not 0 < xi <= 1:
        raise ValueError("charger efficiency must be in (0, 1]")
    return e_c / xi


def window_hours(start: int, end: int) -> tuple:
    """Hours of day in a cyclic plug window, in chronological order from arrival."""
    start, end = int(start) % 24, int(end) % 24
    n = (end - start) % 24
    return tuple((start + k) % 24 for k in range(n))


@dataclass(frozen=True)
class FleetClass:
    name: str
    kind: str
    count: int
    psi: float
    phi: float
    aer: float
    beta: float
    xi: float
    eta_c: float
    eta_d: float
    soc_min: float
    soc_max: float
    departure_soc_target: float
    plug_window: tuple
    consumption_param: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"{self.name}: kind must be one of {KINDS}")
        if self.count < 0:
            raise ValueError(f"{self.name}: negative vehicle count")
        if not 0 <= self.psi <= 1 or self.phi < 0 or not self.aer > 0 or self.beta < 0:
            raise ValueError(f"{self.name}: invalid driving parameters")
        for attr in ("xi", "eta_c", "eta_d"):
            if not 0 < getattr(self, attr) <= 1:
                raise ValueError(f"{self.name}: {attr} must be in (0, 1]")
        if not 0 <= self.soc_min <= self.departure_soc_target <= self.soc_max <= 1:
            raise ValueError(f"{self.name}: need soc_min <= departure target <= soc_max <= 1")
        if self.departure_soc_target < MIN_DEPARTURE_SOC[self.kind]:
            raise ValueError(f"{self.name}: {self.kind} departure SOC must be >= {MIN_DEPARTURE_SOC[self.kind]}")
        lo, hi = CONSUMPTION_RANGE[self.kind]
        if not lo <= self.consumption_param <= hi:
            raise ValueError(f"{self.name}: consumption parameter outside [{lo}, {hi}]")
        start, end = self.plug_window
        object.__setattr__(self, "plug_window", (int(start) % 24, int(end) % 24))

    @property
    def hours(self) -> tuple:
        return window_hours(*self.plug_window)

    @property
    def capacity(self) -> float:
        return battery_capacity(self.beta, self.aer)

    @property
    def arrival_soc(self) -> float:
        return soc_after_trip(self.psi, self.phi, self.aer)

    @property
    def grid_kwh(self) -> float:
        """Grid energy per vehicle to refill after the daily trip."""
        return grid_energy(charge_energy(self.arrival_soc, self.capacity), self.xi)


@dataclass(frozen=True)
class AvailabilityProfile:
    """``counts[lot, class, hour]``: plugged-in vehicles over the horizon."""

    counts: np.ndarray
    classes: tuple

    @property
    def horizon(self):
        return self.counts.shape[2]

    @property
    def n_lots(self):
        return self.counts.shape[0]


def assign_fleet(classes, lot_sizes) -> np.ndarray:
    """Split every class across lots in proportion to lot size (largest remainder)."""
    sizes = np.asarray(lot_sizes, dtype=float)
    out = np.zeros((sizes.size, len(classes)), dtype=int)
    if sizes.size == 0 or sizes.sum() <= 0:
        return out
    share = sizes / sizes.sum()
    for c, fc in enumerate(classes):
        raw = share * fc.count
        base = np.floor(raw).astype(int)
        rest = fc.count - base.sum()
        # ties broken by lot order
        order = sorted(range(sizes.size), key=lambda i: (-(raw[i] - base[i]), i))
        for i in order[:rest]:
            base[i] += 1
        out[:, c] = base
    return out


def availability(classes, lot_assignment=None, horizon: int = 24) -> AvailabilityProfile:
    """Plugged-in counts per lot, class and hour, repeated every day of the horizon.

    ``lot_assignment`` is a ``(lots, classes)`` count matrix; ``None`` puts the whole fleet
    on a single lot.
    """
    classes = tuple(classes)
    if horizon <= 0 or horizon % 24:
        raise ValueError("horizon must be a positive multiple of 24")
    if lot_assignment is None:
        lot_assignment = np.array([[fc.count for fc in classes]], dtype=int)
    assign = np.asarray(lot_assignment, dtype=int).reshape(-1, len(classes))
    for c, fc in enumerate(classes):
        if assign[:, c].sum() > fc.count:
            raise ValueError(f"{fc.name}: more vehicles assigned than the class holds")
    counts = np.zeros((assign.shape[0], len(classes), horizon), dtype=int)
    for c, fc in enumerate(classes):
        hrs = fc.hours
        if not hrs:
            raise EmptyWindow(f"{fc.name}: plug window {fc.plug_window} is empty")
        mask = np.zeros(24, dtype=bool)
        mask[list(hrs)] = True
        day = np.tile(mask, horizon // 24)
        counts[:, c, :] = assign[:, c][:, None] * day[None, :]
    counts.flags.writeable = False
    return AvailabilityProfile(counts, classes)


@dataclass(frozen=True)
class Cohort:
    """All vehicles of one class parked at one lot, scheduled as a single battery.

    ``hours`` lists the plugged hours in chronological order from arrival; energy limits
    are kWh, ``rate_kw`` is the station-limited charge/discharge rate of the cohort.
    """

    name: str
    hours: tuple
    capacity_kwh: float
    arrival_kwh: float
    floor_kwh: float
    e_min: float
    e_max: float
    rate_kw: float
    eta_c: float = 1.0
    eta_d: float = 1.0
    kind: str = ""

    def __post_init__(self):
        if not self.hours:
            raise EmptyWindow(f"cohort {self.name} has no plugged hours")
        if not 0 <= self.e_min <= self.e_max:
            raise ValueError(f"cohort {self.name}: need 0 <= e_min <= e_max")
        if not 0 < self.eta_c <= 1 or not 0 < self.eta_d <= 1:
            raise ValueError(f"cohort {self.name}: efficiencies must be in (0, 1]")


@dataclass(frozen=True)
class Envelope:
    """Hourly flexibility limits of one lot plus the cohorts that make it up."""

    lot_size: float
    max_charge: np.ndarray
    max_discharge: np.ndarray
    capacity: np.ndarray
    soc_min_kwh: np.ndarray
    soc_max_kwh: np.ndarray
    departure_floor: np.ndarray
    cohorts: tuple


def aggregate_envelope(profile: AvailabilityProfile, classes=None, station_rate: float = 11.0,
                       lot_size: float = 0.0, lot: int = 0) -> Envelope:
    """Aggregate the plugged vehicles of ``lot`` into hourly limits and cohorts."""
    if not station_rate > 0 or not lot_size > 0:
        raise ValueError("station_rate and lot_size must be positive")
    classes = tuple(classes) if classes is not None else profile.classes
    counts = profile.counts[lot]
    horizon = profile.horizon
    plugged = counts.sum(axis=0)
    cap = np.array([fc.capacity for fc in classes])
    lim = np.minimum(lot_size, plugged * station_rate).astype(float)
    capacity = (counts * cap[:, None]).sum(axis=0).astype(float)
    soc_min = (counts * (cap * [fc.soc_min for fc in classes])[:, None]).sum(axis=0)
    soc_max = (counts * (cap * [fc.soc_max for fc in classes])[:, None]).sum(axis=0)
    floor = np.zeros(horizon)
    cohorts = []
    for c, fc in enumerate(classes):
        n = int(counts[c].max()) if horizon else 0
        if n == 0:
            continue
        hrs = fc.hours
        total = n * fc.capacity
        for day in range(horizon // 24):
            floor[day * 24 + hrs[-1]] += fc.departure_soc_target * total
        arrival = fc.arrival_soc * total
        cohorts.append(Cohort(
            name=fc.name, hours=hrs, capacity_kwh=total, arrival_kwh=arrival,
            floor_kwh=fc.departure_soc_target * total,
            e_min=min(fc.soc_min * total, arrival), e_max=fc.soc_max * total,
            rate_kw=n * station_rate, eta_c=fc.eta_c, eta_d=fc.eta_d, kind=fc.kind,
        ))
    return Envelope(float(lot_size), lim, lim.copy(), capacity, soc_min.astype(float),
                    soc_max.astype(float), floor, tuple(cohorts))


@dataclass(frozen=True)
class EnergyDemand:
    """Daily charging requirement of the fleet.

    ``required_kw`` is the largest hourly sum, over plugged classes, of each class's daily
    grid energy spread evenly across its plug window.
    """

    capacity_kwh: dict
    charge_kwh: dict
    grid_kwh: dict
    daily_kwh: float
    required_kw: float


def energy_demand(classes) -> EnergyDemand:
    classes = tuple(classes)
    per_hour = np.zeros(24)
    for fc in classes:
        hrs = fc.hours
        if hrs:
            per_hour[list(hrs)] += fc.count * fc.grid_kwh / len(hrs)
    return EnergyDemand(
        capacity_kwh={fc.name: fc.capacity for fc in classes},
        charge_kwh={fc.name: charge_energy(fc.arrival_soc, fc.capacity) for fc in classes},
        grid_kwh={fc.name: fc.grid_kwh for fc in classes},
        daily_kwh=float(sum(fc.count * fc.grid_kwh for fc in classes)),
        required_kw=float(per_hour.max()) if classes else 0.0,
    )
