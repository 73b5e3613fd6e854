"""Independent reference computations used by the tests.

Nothing here imports the solver or network code under test; each oracle is written from the
defining formulas with plain numpy, itertools or scipy.
"""

from __future__ import annotations

import itertools
import math
from collections import deque

import numpy as np
from scipy.optimize import linprog


def hand_sweep_two_bus(r, x, p, q, tol=1e-14, max_iter=1000):
    """Fixed point V2 = 1 - Z * conj(S / V2) of a slack bus feeding one load (per unit)."""
    z = complex(r, x)
    s = complex(p, q)
    v = 1.0 + 0j
    for _ in range(max_iter):
        i = (s / v).conjugate()
        v_new = 1.0 - z * i
        if abs(v_new - v) < tol:
            v = v_new
            break
        v = v_new
    i = (s / v).conjugate()
    return abs(v), abs(i) ** 2 * r


def bfs_component(n_bus, edges, start, skip):
    """Buses reachable from ``start`` over ``edges`` (pairs of indices) without edge ``skip``."""
    adj = [[] for _ in range(n_bus)]
    for k, (a, b) in enumerate(edges):
        if k != skip:
            adj[a].append(b)
            adj[b].append(a)
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def vertex_enumeration(c, A, rel, b, lb, ub, sense="min"):
    """Best objective over all basic solutions of a bounded LP (None if infeasible).

    Every inequality, including finite variable bounds, is written as ``g x <= h``; each
    choice of ``n`` of them made tight (plus every equality) gives a candidate vertex.
    """
    c = np.asarray(c, float)
    A = np.asarray(A, float)
    n = c.size
    G, h, E, e = [], [], [], []
    for row, r, rhs in zip(A, rel, b):
        if r == "<=":
            G.append(row), h.append(rhs)
        elif r == ">=":
            G.append(-row), h.append(-rhs)
        else:
            E.append(row), e.append(rhs)
    for j in range(n):
        unit = np.eye(n)[j]
        if np.isfinite(lb[j]):
            G.append(-unit), h.append(-lb[j])
        if np.isfinite(ub[j]):
            G.append(unit), h.append(ub[j])
    G, h = np.array(G).reshape(-1, n), np.array(h)
    E, e = np.array(E).reshape(-1, n), np.array(e)
    need = n - len(E)
    best = None
    sign = 1.0 if sense == "min" else -1.0
    for pick in itertools.combinations(range(len(G)), max(need, 0)):
        M = np.vstack([E, G[list(pick)]])
        rhs = np.concatenate([e, h[list(pick)]])
        if M.shape[0] != n or abs(np.linalg.det(M)) < 1e-10:
            continue
        xv = np.linalg.solve(M, rhs)
        if (G @ xv <= h + 1e-9).all() and (np.abs(E @ xv - e) <= 1e-9).all():
            val = sign * float(c @ xv)
            if best is None or val < best:
                best = val
    return None if best is None else sign * best


def _linprog(c, A, rel, b, lb, ub, sense):
    A = np.asarray(A, float)
    ub_rows = [i for i, r in enumerate(rel) if r != "="]
    eq_rows = [i for i, r in enumerate(rel) if r == "="]
    flip = np.array([1.0 if rel[i] == "<=" else -1.0 for i in ub_rows])
    sign = 1.0 if sense == "min" else -1.0
    res = linprog(
        sign * np.asarray(c, float),
        A_ub=(A[ub_rows] * flip[:, None]) if ub_rows else None,
        b_ub=(np.asarray(b)[ub_rows] * flip) if ub_rows else None,
        A_eq=A[eq_rows] if eq_rows else None,
        b_eq=np.asarray(b)[eq_rows] if eq_rows else None,
        bounds=list(zip([None if not np.isfinite(v) else v for v in lb],
                        [None if not np.isfinite(v) else v for v in ub])),
        method="highs",
    )
    return (sign * res.fun, res.x) if res.status == 0 else (None, None)


def brute_force_milp(c, A, rel, b, lb, ub, integer_vars, sense="min"):
    """Best objective over every 0/1 assignment of ``integer_vars``, each sized by HiGHS LP."""
    best, best_x = None, None
    for bits in itertools.product((0.0, 1.0), repeat=len(integer_vars)):
        lo, hi = np.array(lb, float), np.array(ub, float)
        for j, v in zip(integer_vars, bits):
            if v < lo[j] or v > hi[j]:
                break
            lo[j] = hi[j] = v
        else:
            val, xv = _linprog(c, A, rel, b, lo, hi, sense)
            if val is None:
                continue
            if best is None or (val < best if sense == "min" else val > best):
                best, best_x = val, xv
    return best, best_x


def monte_carlo_wind(k, lam, cut_in, rated, cut_out, p_max, n=1_000_000, seed=12345):
    rng = np.random.default_rng(seed)
    v = lam * rng.weibull(k, n)
    ramp = p_max * (v - cut_in) / (rated - cut_in)
    p = np.where((v < cut_in) | (v > cut_out), 0.0, np.where(v >= rated, p_max, ramp))
    return float(p.mean())


def gamma_by_quadrature(z):
    """Gamma(z) = integral of t^(z-1) e^-t over (0, inf), by scipy quad."""
    from scipy.integrate import quad

    val, _ = quad(lambda t: t ** (z - 1) * math.exp(-t), 0, np.inf, epsabs=1e-13, epsrel=1e-13)
    return val


def crf_by_annuity(d, t):
    """Annual payment that repays a unit loan over ``t`` years: 1 / sum of discount factors."""
    return 1.0 / sum((1.0 + d) ** -k for k in range(1, t + 1))


KIND_FLOOR = {"OEV": 0.98, "PEV": 0.45}


def validate_schedule(s, loads, dg_limits, base_losses, tol_balance=1e-8, tol_soc=1e-9):
    """Independent check of a solved schedule; returns a list of failure strings.

    Balance: grid + DG + discharge + purchases = demand + charge + sales + losses every hour,
    with losses = base + factor * (charge - discharge) per lot. Energy follows the declared
    efficiency convention; floors are the departure targets of every cohort.
    """
    bad = []
    loads = np.asarray(loads, float)
    demand = loads.sum(axis=1) if loads.ndim == 2 else loads
    n_lots = len(s.lots)
    ch = np.zeros((n_lots, 24))
    dch = np.zeros((n_lots, 24))
    for tr in s.cohorts:
        co = tr.cohort
        e = co.arrival_kwh
        for k, hour in enumerate(co.hours):
            ch[tr.lot, hour] += tr.charge[k]
            dch[tr.lot, hour] += tr.discharge[k]
            if s.soc_convention == "physical":
                e = e + co.eta_c * tr.charge[k] - tr.discharge[k] / co.eta_d
            else:
                e = e + co.eta_c * tr.charge[k] - co.eta_d * tr.discharge[k]
            if abs(e - tr.energy[k]) > tol_soc * max(1.0, co.capacity_kwh):
                bad.append(f"recursion {co.name} hour {hour}: {e} vs {tr.energy[k]}")
            e = tr.energy[k]
            if not co.e_min - 1e-9 <= e <= co.e_max + 1e-9:
                bad.append(f"energy bound {co.name} hour {hour}")
        target = max(co.floor_kwh, KIND_FLOOR.get(co.kind, 0.0) * co.capacity_kwh)
        if tr.energy[-1] < target - 1e-9:
            bad.append(f"departure floor {co.name}: {tr.energy[-1]} < {target}")
    if np.abs(ch - s.p_ch).max() > 1e-9 or np.abs(dch - s.p_dch).max() > 1e-9:
        bad.append("lot totals disagree with cohort traces")
    losses = np.asarray(base_losses, float) + s.loss_factors @ (ch - dch)
    if np.abs(losses - s.losses).max() > 1e-9:
        bad.append("losses inconsistent with loss factors")
    lhs = s.grid_import + s.dg_output.sum(axis=0) + dch.sum(axis=0) + s.p_buy.sum(axis=0)
    rhs = demand + ch.sum(axis=0) + s.p_sell.sum(axis=0) + losses
    res = np.abs(lhs - rhs).max()
    if res > tol_balance:
        bad.append(f"balance residual {res}")
    for u, lim in enumerate(dg_limits):
        if (s.dg_output[u] < lim.p_min - 1e-9).any() or (s.dg_output[u] > lim.p_max + 1e-9).any():
            bad.append(f"dg limits {lim.name}")
    for i in range(n_lots):
        if (s.p_sell[i] > s.sizes[i] + 1e-9).any() or (s.p_buy[i] > s.sizes[i] + 1e-9).any():
            bad.append(f"trade above size at lot {s.lots[i]}")
        if np.abs(ch[i] + s.p_sell[i] - dch[i] - s.p_buy[i]).max() > 1e-8:
            bad.append(f"lot balance at lot {s.lots[i]}")
    for name in ("p_ch", "p_dch", "p_sell", "p_buy", "grid_import"):
        if (np.asarray(getattr(s, name)) < -1e-9).any():
            bad.append(f"{name} negative")
    return bad
