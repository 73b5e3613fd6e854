"""Wind turbine expected output under a Weibull wind-speed law, and CHP limits."""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate


@dataclass(frozen=True)
class WindResource:
    k: float
    lam: float
    cut_in: float = 3.0
    rated_speed: float = 12.0
    cut_out: float = 25.0
    p_min: float = 0.0
    p_max: float = 300.0
    bus: int | None = None
    name: str = "WT"

    def __post_init__(self):
        if not self.k > 0 or not self.lam > 0:
            raise ValueError("Weibull shape and scale must be positive")
        if not 0 <= self.cut_in < self.rated_speed < self.cut_out:
            raise ValueError("need cut_in < rated_speed < cut_out")
        if not 0 <= self.p_min <= self.p_max:
            raise ValueError("need 0 <= p_min <= p_max")

    def power(self, v: float) -> float:
        """Piecewise-linear power curve (kW)."""
        if v < self.cut_in or v > self.cut_out:
            return 0.0
        if v >= self.rated_speed:
            return self.p_max
        return self.p_max * (v - self.cut_in) / (self.rated_speed - self.cut_in)


@dataclass(frozen=True)
class ChpUnit:
    p_min: float
    p_max: float
    marginal_cost: float = 0.0
    bus: int | None = None
    name: str = "CHP"

    def __post_init__(self):
        if not 0 <= self.p_min <= self.p_max:
            raise ValueError("need 0 <= p_min <= p_max")


def weibull_mean(k: float, lam: float) -> float:
    """Mean wind speed ``lam * Gamma(1 + 1/k)``; ``math.gamma`` is accurate to a few ulp."""
    if not k > 0 or not lam > 0:
        raise ValueError("Weibull shape and scale must be positive")
    return lam * math.gamma(1.0 + 1.0 / k)


def weibull_cdf(v, k, lam):
    return 1.0 - math.exp(-((v / lam) ** k)) if v > 0 else 0.0


def weibull_pdf(v, k, lam):
    if v < 0:
        return 0.0
    if v == 0:
        return (1.0 / lam) if k == 1 else (0.0 if k > 1 else math.inf)
    z = v / lam
    return (k / lam) * z ** (k - 1) * math.exp(-(z ** k))


def expected_wt_power(res: WindResource) -> float:
    """Expected turbine output (kW): power curve integrated against the Weibull density."""
    if not res.k > 0 or not res.lam > 0:
        raise ValueError("Weibull shape and scale must be positive")
    k, lam = res.k, res.lam
    slope = res.p_max / (res.rated_speed - res.cut_in)
    ramp, _ = integrate.quad(
        lambda v: slope * (v - res.cut_in) * weibull_pdf(v, k, lam),
        res.cut_in, res.rated_speed, epsabs=1e-12, epsrel=1e-10, limit=200,
    )
    plateau = res.p_max * (weibull_cdf(res.cut_out, k, lam) - weibull_cdf(res.rated_speed, k, lam))
    return min(max(ramp + plateau, 0.0), res.p_max)


@dataclass(frozen=True)
class DispatchLimit:
    """Hourly output range of one unit inside the scheduling problem."""

    name: str
    bus: int | None
    p_min: float
    p_max: float


def dispatch_limits(units) -> list:
    """CHP units are committed every hour in ``[p_min, p_max]``; wind may be curtailed
    anywhere in ``[0, expected output]``."""
    out = []
    for u in units:
        if isinstance(u, WindResource):
            out.append(DispatchLimit(u.name, u.bus, 0.0, expected_wt_power(u)))
        elif isinstance(u, ChpUnit):
            out.append(DispatchLimit(u.name, u.bus, u.p_min, u.p_max))
        else:
            raise TypeError(f"unknown resource type {type(u).__name__}")
    return out
