"""Radial network model, backward/forward sweep power flow and network metrics.

Loads are given in kW/kvar as *net demand* per bus (negative values are injections).
Internally everything runs in per-unit on ``base_mva``/``base_kv``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import DisconnectedNetwork, NonConvergence, NonRadialNetwork, NotConverged


@dataclass(frozen=True)
class Bus:
    id: int
    load_p: float = 0.0
    load_q: float = 0.0
    v_min: float = 0.95
    v_max: float = 1.05
    is_slack: bool = False

    def __post_init__(self):
        if not 0 < self.v_min < self.v_max:
            raise ValueError(f"bus {self.id}: need 0 < v_min < v_max")
        if self.load_p < 0 or self.load_q < 0:
            raise ValueError(f"bus {self.id}: loads must be non-negative")


@dataclass(frozen=True)
class Line:
    from_bus: int
    to_bus: int
    r: float
    x: float
    i_max: float
    fo_rate: float = 0.0

    def __post_init__(self):
        if self.r < 0 or self.x < 0:
            raise ValueError(f"line {self.from_bus}-{self.to_bus}: negative impedance")
        if not self.i_max > 0:
            raise ValueError(f"line {self.from_bus}-{self.to_bus}: i_max must be positive")
        if not 0 <= self.fo_rate <= 1:
            raise ValueError(f"line {self.from_bus}-{self.to_bus}: fo_rate outside [0, 1]")


def _ro(a):
    a = np.asarray(a)
    a.flags.writeable = False
    return a


class Network:
    """Radial network with topology precomputed from the slack bus.

    Attributes of note: ``order`` (bus indices, breadth first from the slack),
    ``parent`` (parent bus index or -1), ``feeder`` (index of the line feeding each bus or -1),
    ``child`` (the bus index on the far side of each line from the slack).
    """

    def __init__(self, buses, lines, base_mva=1.0, base_kv=4.8):
        self.buses = tuple(buses)
        self.lines = tuple(lines)
        self.base_mva = float(base_mva)
        self.base_kv = float(base_kv)
        if self.base_mva <= 0 or self.base_kv <= 0:
            raise ValueError("per-unit bases must be positive")
        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate bus ids")
        self.index = {bid: k for k, bid in enumerate(ids)}
        slack = [k for k, b in enumerate(self.buses) if b.is_slack]
        if len(slack) != 1:
            raise ValueError(f"exactly one slack bus required, found {len(slack)}")
        self.slack = slack[0]
        n = len(self.buses)

        seen = set()
        adj = [[] for _ in range(n)]
        for li, ln in enumerate(self.lines):
            if ln.from_bus not in self.index or ln.to_bus not in self.index:
                raise ValueError(f"line {ln.from_bus}-{ln.to_bus} references an unknown bus")
            key = frozenset((ln.from_bus, ln.to_bus))
            if key in seen or ln.from_bus == ln.to_bus:
                raise NonRadialNetwork(f"duplicate or self line {ln.from_bus}-{ln.to_bus}")
            seen.add(key)
            a, b = self.index[ln.from_bus], self.index[ln.to_bus]
            adj[a].append((b, li))
            adj[b].append((a, li))
        if len(self.lines) > n - 1:
            raise NonRadialNetwork(f"{len(self.lines)} lines for {n} buses")

        parent = np.full(n, -1)
        feeder = np.full(n, -1)
        order = [self.slack]
        visited = np.zeros(n, dtype=bool)
        visited[self.slack] = True
        queue = deque([self.slack])
        while queue:
            u = queue.popleft()
            for v, li in adj[u]:
                if not visited[v]:
                    visited[v] = True
                    parent[v], feeder[v] = u, li
                    order.append(v)
                    queue.append(v)
        if not visited.all():
            missing = [ids[k] for k in np.flatnonzero(~visited)]
            raise DisconnectedNetwork(f"buses unreachable from slack: {missing}")

        child = np.empty(len(self.lines), dtype=int)
        for k in range(n):
            if feeder[k] >= 0:
                child[feeder[k]] = k
        self.order = _ro(np.array(order))
        self.parent = _ro(parent)
        self.feeder = _ro(feeder)
        self.child = _ro(child)
        self._adj = adj

        # lines on the path slack -> bus, and buses below each line
        path = [[] for _ in range(n)]
        for k in order[1:]:
            path[k] = path[parent[k]] + [int(feeder[k])]
        self.path = tuple(tuple(p) for p in path)
        below = [[] for _ in self.lines]
        for k in range(n):
            for li in path[k]:
                below[li].append(k)
        self.below = tuple(_ro(np.array(sorted(b), dtype=int)) for b in below)

        zb = self.z_base
        self.r_pu = _ro(np.array([ln.r / zb for ln in self.lines]))
        self.x_pu = _ro(np.array([ln.x / zb for ln in self.lines]))
        self.i_max_pu = _ro(np.array([ln.i_max / self.i_base for ln in self.lines]))
        self.fo_rate = _ro(np.array([ln.fo_rate for ln in self.lines]))
        self.v_min = _ro(np.array([b.v_min for b in self.buses]))
        self.v_max = _ro(np.array([b.v_max for b in self.buses]))
        self.load_p = _ro(np.array([b.load_p for b in self.buses]))
        self.load_q = _ro(np.array([b.load_q for b in self.buses]))

    @property
    def z_base(self):
        return self.base_kv ** 2 / self.base_mva

    @property
    def i_base(self):
        """Base current in amperes (three-phase)."""
        return self.base_mva * 1e6 / (math.sqrt(3) * self.base_kv * 1e3)

    @property
    def s_base_kw(self):
        return self.base_mva * 1000.0

    @property
    def n_bus(self):
        return len(self.buses)

    @property
    def bus_ids(self):
        return [b.id for b in self.buses]

    def line_index(self, line) -> int:
        if isinstance(line, (int, np.integer)):
            return int(line)
        key = frozenset((line.from_bus, line.to_bus))
        for li, ln in enumerate(self.lines):
            if frozenset((ln.from_bus, ln.to_bus)) == key:
                return li
        raise KeyError(f"line {line.from_bus}-{line.to_bus} not in network")

    def common_path_matrix(self, values):
        """``M[n, k]`` = sum of ``values[l]`` over lines shared by the paths to ``n`` and ``k``."""
        n = self.n_bus
        inc = np.zeros((n, len(self.lines)))
        for k in range(n):
            inc[k, list(self.path[k])] = 1.0
        return (inc * np.asarray(values)) @ inc.T

    def with_loads(self, load_p, load_q) -> "Network":
        buses = [Bus(b.id, float(p), float(q), b.v_min, b.v_max, b.is_slack)
                 for b, p, q in zip(self.buses, load_p, load_q)]
        return Network(buses, self.lines, self.base_mva, self.base_kv)


@dataclass(frozen=True)
class PowerFlowSolution:
    v: np.ndarray
    v_complex: np.ndarray
    i: np.ndarray
    losses_per_line: np.ndarray
    total_losses: float
    converged: bool
    iterations: int
    p_flow: np.ndarray
    q_flow: np.ndarray
    slack_p: float
    slack_q: float
    demand_p: np.ndarray
    demand_q: np.ndarray


def run_power_flow(net: Network, p_kw=None, q_kvar=None, tol=1e-8, max_iter=100,
                   raise_on_failure=True) -> PowerFlowSolution:
    """Backward/forward sweep with constant-power loads and the slack held at 1.0 pu.

    ``p_kw``/``q_kvar`` are per-bus net demand aligned with ``net.buses``; ``None`` uses the
    buses' nominal loads. Flows ``p_flow``/``q_flow`` are sending-end values in kW/kvar per
    line, oriented away from the slack.
    """
    n = net.n_bus
    p = net.load_p if p_kw is None else np.asarray(p_kw, dtype=float)
    q = net.load_q if q_kvar is None else np.asarray(q_kvar, dtype=float)
    if p.shape != (n,) or q.shape != (n,):
        raise ValueError(f"expected {n} per-bus demand values")
    s = (p + 1j * q) / net.s_base_kw
    z = net.r_pu + 1j * net.x_pu
    order = net.order
    parent, feeder = net.parent, net.feeder

    v = np.ones(n, dtype=complex)
    J = np.zeros(len(net.lines), dtype=complex)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        J = _backward(net, s, v)
        v_new = v.copy()
        for k in order[1:]:
            v_new[k] = v_new[parent[k]] - z[feeder[k]] * J[feeder[k]]
        diff = float(np.max(np.abs(v_new - v))) if n else 0.0
        v = v_new
        if diff < tol:
            converged = True
            break
    if not converged and raise_on_failure:
        raise NonConvergence(f"sweep did not converge in {max_iter} iterations", it)

    J = _backward(net, s, v)
    loss_pu = net.r_pu * np.abs(J) ** 2
    qloss_pu = net.x_pu * np.abs(J) ** 2
    # sending-end flow = power delivered below the line plus the line's own losses
    s_flow = v[net.child] * np.conj(J) + z * np.abs(J) ** 2
    i_load_slack = np.conj(s[net.slack] / v[net.slack])
    out = sum(J[feeder[k]] for k in range(n) if parent[k] == net.slack)
    s_slack = v[net.slack] * np.conj(out + i_load_slack)

    kw = net.s_base_kw
    losses = loss_pu * kw
    return PowerFlowSolution(
        v=_ro(np.abs(v)), v_complex=_ro(v), i=_ro(np.abs(J)),
        losses_per_line=_ro(losses), total_losses=float(losses.sum()),
        converged=converged, iterations=it,
        p_flow=_ro(s_flow.real * kw), q_flow=_ro(s_flow.imag * kw),
        slack_p=float(s_slack.real * kw), slack_q=float(s_slack.imag * kw),
        demand_p=_ro(p.copy()), demand_q=_ro(q.copy()),
    )


def _backward(net, s, v):
    i_load = np.conj(s / v)
    acc = i_load.copy()
    J = np.zeros(len(net.lines), dtype=complex)
    for k in net.order[::-1]:
        if net.parent[k] >= 0:
            J[net.feeder[k]] = acc[k]
            acc[net.parent[k]] += acc[k]
    return J


@dataclass(frozen=True)
class LinearModel:
    """Linear network model around an operating point.

    ``dv_dp[n, k]``/``dv_dq[n, k]``: change of the voltage magnitude at bus ``n`` (pu) per kW /
    kvar of extra demand at bus ``k``. ``line_loss_factor[l]``: marginal losses of line ``l``
    per kW of extra flow through it. ``bus_loss_factor[k]``: marginal total losses per kW of
    extra demand at bus ``k``.
    """

    v0: np.ndarray
    p_flow0: np.ndarray
    q_flow0: np.ndarray
    demand_p0: np.ndarray
    demand_q0: np.ndarray
    dv_dp: np.ndarray
    dv_dq: np.ndarray
    line_loss_factor: np.ndarray
    bus_loss_factor: np.ndarray
    r_path: np.ndarray
    x_path: np.ndarray
    losses0: float
    s_base_kw: float
    bus_index: dict | None = None

    def voltage(self, dp_kw=None, dq_kvar=None):
        """Voltage magnitudes for a demand change relative to the operating point."""
        v = self.v0.copy()
        if dp_kw is not None:
            v = v + self.dv_dp @ np.asarray(dp_kw, dtype=float)
        if dq_kvar is not None:
            v = v + self.dv_dq @ np.asarray(dq_kvar, dtype=float)
        return v

    def lindistflow(self, p_kw, q_kvar):
        """Flat-start LinDistFlow magnitudes: 1 minus path sums of r*P + x*Q (no losses)."""
        p = np.asarray(p_kw, dtype=float) / self.s_base_kw
        q = np.asarray(q_kvar, dtype=float) / self.s_base_kw
        return 1.0 - self.r_path @ p - self.x_path @ q


def linearize(net: Network, operating_point: PowerFlowSolution) -> LinearModel:
    if not operating_point.converged:
        raise NotConverged("linearization needs a converged operating point")
    kw = net.s_base_kw
    r_path = net.common_path_matrix(net.r_pu)
    x_path = net.common_path_matrix(net.x_pu)
    v = operating_point.v
    # dV_n/dP_k scaled by the local voltage, per kW
    dv_dp = -r_path / v[:, None] / kw
    dv_dq = -x_path / v[:, None] / kw
    v_to = v[net.child] if len(net.lines) else np.zeros(0)
    p_pu = operating_point.p_flow / kw
    line_lf = 2.0 * net.r_pu * p_pu / v_to ** 2 if len(net.lines) else np.zeros(0)
    bus_lf = np.array([line_lf[list(net.path[k])].sum() for k in range(net.n_bus)])
    return LinearModel(
        v0=_ro(v.copy()), p_flow0=operating_point.p_flow, q_flow0=operating_point.q_flow,
        demand_p0=operating_point.demand_p, demand_q0=operating_point.demand_q,
        dv_dp=_ro(dv_dp), dv_dq=_ro(dv_dq),
        line_loss_factor=_ro(line_lf), bus_loss_factor=_ro(bus_lf),
        r_path=_ro(r_path), x_path=_ro(x_path),
        losses0=operating_point.total_losses, s_base_kw=kw, bus_index=dict(net.index),
    )


def voltage_deviation(sol: PowerFlowSolution) -> float:
    """Largest ``|1 - V|`` over buses, in percent."""
    return float(np.max(np.abs(1.0 - np.asarray(sol.v))) * 100.0)


def downstream_buses(net: Network, line) -> set:
    """Bus ids in the component containing ``line.to_bus`` once the line is removed."""
    li = net.line_index(line)
    ln = net.lines[li]
    start = net.index[ln.to_bus]
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v, lk in net._adj[u]:
            if lk != li and v not in seen:
                seen.add(v)
                stack.append(v)
    if len(seen) == net.n_bus:
        raise NonRadialNetwork(f"removing line {ln.from_bus}-{ln.to_bus} does not split the network")
    return {net.buses[k].id for k in seen}


def expected_ens(net: Network, hourly_loads, local_backup=None, c_il=0.0):
    """Expected energy not supplied over the given hours, and its cost.

    For each line the unserved power during its outage is the load below the line minus
    the backup capability below it (floored at zero), weighted by the line's forced-outage
    rate. ``hourly_loads`` and ``local_backup`` are kW arrays shaped ``(hours, n_bus)`` or
    ``(n_bus,)`` for a single hour. ``c_il`` is $/kWh, scalar or per hour.
    """
    loads = np.atleast_2d(np.asarray(hourly_loads, dtype=float))
    backup = np.zeros_like(loads) if local_backup is None else np.broadcast_to(
        np.atleast_2d(np.asarray(local_backup, dtype=float)), loads.shape)
    per_hour = np.zeros(loads.shape[0])
    for li, rows in enumerate(net.below):
        if net.fo_rate[li] == 0.0:
            continue
        gap = loads[:, rows].sum(axis=1) - backup[:, rows].sum(axis=1)
        per_hour += net.fo_rate[li] * np.maximum(gap, 0.0)
    cost = per_hour * np.broadcast_to(np.asarray(c_il, dtype=float), per_hour.shape)
    return float(per_hour.sum()), float(cost.sum())
