import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from builders import bundled_network, feeder, random_tree, two_bus
from oracles import bfs_component, hand_sweep_two_bus
from parkplan import grid
from parkplan.errors import DisconnectedNetwork, NonConvergence, NonRadialNetwork, NotConverged
from parkplan.grid import Bus, Line, Network

# frozen from oracles.hand_sweep_two_bus(0.01, 0.01, 0.1, 0.05)
TWO_BUS_V2 = 0.998497617659214
TWO_BUS_LOSS_KW = 0.1253764437162014


def test_no_load_is_flat():
    net = bundled_network()
    sol = grid.run_power_flow(net, np.zeros(net.n_bus), np.zeros(net.n_bus))
    assert np.all(sol.v == 1.0)
    assert sol.total_losses == 0.0


def test_two_bus_matches_hand_iteration():
    sol = grid.run_power_flow(two_bus())
    v, loss = hand_sweep_two_bus(0.01, 0.01, 0.1, 0.05)
    assert v == pytest.approx(TWO_BUS_V2, abs=1e-12)
    assert sol.v[1] == pytest.approx(TWO_BUS_V2, abs=1e-6)
    assert sol.total_losses == pytest.approx(TWO_BUS_LOSS_KW, abs=1e-6)
    assert sol.total_losses == pytest.approx(loss * 1000, rel=1e-9)
    assert sol.converged


def test_doubling_loads_raises_losses():
    net = bundled_network()
    base = grid.run_power_flow(net)
    double = grid.run_power_flow(net, 2 * net.load_p, 2 * net.load_q)
    assert double.total_losses > base.total_losses


def test_iteration_cap_raises():
    net = two_bus(r=0.5, x=0.5, p=900.0, q=900.0)
    with pytest.raises(NonConvergence):
        grid.run_power_flow(net)
    sol = grid.run_power_flow(net, raise_on_failure=False)
    assert not sol.converged


def test_network_shape_errors():
    with pytest.raises(NonRadialNetwork):
        Network([Bus(1, is_slack=True), Bus(2), Bus(3)],
                [Line(1, 2, 0.1, 0.1, 100), Line(2, 3, 0.1, 0.1, 100), Line(1, 3, 0.1, 0.1, 100)])
    with pytest.raises(NonRadialNetwork):
        Network([Bus(1, is_slack=True), Bus(2)], [Line(1, 2, 0.1, 0.1, 100), Line(2, 1, 0.1, 0.1, 100)])
    with pytest.raises(DisconnectedNetwork):
        Network([Bus(1, is_slack=True), Bus(2), Bus(3)], [Line(1, 2, 0.1, 0.1, 100)])
    with pytest.raises(ValueError):
        Network([Bus(1), Bus(2)], [Line(1, 2, 0.1, 0.1, 100)])
    with pytest.raises(ValueError):
        Line(1, 2, -0.1, 0.1, 100)
    with pytest.raises(ValueError):
        Bus(3, v_min=1.05, v_max=0.95)


def test_linearize_zero_impedance():
    net = Network([Bus(1, is_slack=True), Bus(2, 50, 10), Bus(3, 40, 5)],
                  [Line(1, 2, 0.0, 0.0, 100), Line(2, 3, 0.0, 0.0, 100)])
    lm = grid.linearize(net, grid.run_power_flow(net))
    assert not lm.dv_dp.any() and not lm.dv_dq.any()
    assert not lm.line_loss_factor.any() and not lm.bus_loss_factor.any()


def test_linearize_two_bus_close_to_ac():
    net = two_bus()
    sol = grid.run_power_flow(net)
    flat = grid.run_power_flow(net, np.zeros(2), np.zeros(2))
    lm = grid.linearize(net, flat)
    v_lin = lm.lindistflow(net.load_p, net.load_q)
    assert abs(v_lin[1] - sol.v[1]) < 0.005


def test_linearize_bundled_close_to_ac():
    net = bundled_network()
    sol = grid.run_power_flow(net)
    lm = grid.linearize(net, sol)
    v_lin = lm.lindistflow(net.load_p, net.load_q)
    assert np.abs(v_lin - sol.v).max() < 0.02


def test_linearize_needs_converged_point():
    net = two_bus(r=0.5, x=0.5, p=900.0, q=900.0)
    sol = grid.run_power_flow(net, raise_on_failure=False)
    with pytest.raises(NotConverged):
        grid.linearize(net, sol)


def test_sensitivities_predict_small_changes():
    net = bundled_network()
    sol = grid.run_power_flow(net)
    lm = grid.linearize(net, sol)
    dp = np.zeros(net.n_bus)
    dp[net.index[34]] = 20.0
    moved = grid.run_power_flow(net, net.load_p + dp, net.load_q)
    assert np.abs(lm.voltage(dp) - moved.v).max() < 1e-3
    # the loss factor is a first-order proxy (active flow only): within 12% of the AC increment
    for bus in (34, 11, 7, 2):
        step = np.zeros(net.n_bus)
        step[net.index[bus]] = 1.0
        inc = grid.run_power_flow(net, net.load_p + step, net.load_q).total_losses - sol.total_losses
        assert inc == pytest.approx(lm.bus_loss_factor[net.index[bus]], rel=0.12)


def test_voltage_deviation_definition():
    net = two_bus()
    sol = grid.run_power_flow(net)
    assert grid.voltage_deviation(sol) == pytest.approx((1 - sol.v[1]) * 100)
    flat = grid.run_power_flow(net, np.zeros(2), np.zeros(2))
    assert grid.voltage_deviation(flat) == 0.0

    class Fake:
        v = np.array([1.0, 0.95])

    assert grid.voltage_deviation(Fake()) == pytest.approx(5.0)


def test_expected_ens_examples():
    net = two_bus()
    assert grid.expected_ens(net, net.load_p) == pytest.approx((2.0, 0.0))
    assert grid.expected_ens(net, net.load_p, c_il=3.0) == pytest.approx((2.0, 6.0))
    zero_for = Network([Bus(1, is_slack=True), Bus(2, 100)], [Line(1, 2, 0.01, 0.01, 100, 0.0)])
    assert grid.expected_ens(zero_for, zero_for.load_p) == (0.0, 0.0)
    assert grid.expected_ens(net, net.load_p, local_backup=[0.0, 150.0])[0] == 0.0


def test_downstream_examples():
    net = bundled_network()
    slack = net.buses[net.slack].id
    root = next(ln for ln in net.lines if slack in (ln.from_bus, ln.to_bus))
    assert grid.downstream_buses(net, root) == set(net.bus_ids) - {slack}
    deg = {b: 0 for b in net.bus_ids}
    for ln in net.lines:
        deg[ln.from_bus] += 1
        deg[ln.to_bus] += 1
    leaf_line = next(ln for ln in net.lines if deg[ln.to_bus] == 1)
    assert grid.downstream_buses(net, leaf_line) == {leaf_line.to_bus}


def test_downstream_matches_bfs_on_every_bundled_line():
    net = bundled_network()
    edges = [(net.index[ln.from_bus], net.index[ln.to_bus]) for ln in net.lines]
    for k, ln in enumerate(net.lines):
        got = grid.downstream_buses(net, ln)
        ref = bfs_component(net.n_bus, edges, net.index[ln.to_bus], k)
        assert got == {net.buses[i].id for i in ref}


# ---- properties -------------------------------------------------------------------------

trees = st.builds(lambda seed, n: random_tree(np.random.default_rng(seed), n),
                  st.integers(0, 10_000), st.integers(2, 25))


@settings(max_examples=60, deadline=None)
@given(trees, st.integers(0, 10_000))
def test_conservation_and_nonnegative_losses(net, seed):
    rng = np.random.default_rng(seed)
    p = net.load_p * rng.uniform(-0.5, 1.5, net.n_bus)
    q = net.load_q * rng.uniform(-0.5, 1.5, net.n_bus)
    sol = grid.run_power_flow(net, p, q, raise_on_failure=False)
    if not sol.converged:
        return
    assert sol.total_losses >= 0.0
    assert (sol.losses_per_line >= 0.0).all()
    assert sol.total_losses == pytest.approx(sol.losses_per_line.sum(), abs=1e-12)
    kw = net.s_base_kw
    assert abs(sol.slack_p - (sol.demand_p.sum() + sol.total_losses)) / kw < 1e-6


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 30), st.floats(0.001, 0.1), st.floats(1.0, 120.0))
def test_voltage_non_increasing_along_feeder(n, r, load):
    net = feeder(n, r=r, x=0.6 * r, load=load)
    sol = grid.run_power_flow(net, raise_on_failure=False)
    if sol.converged:
        assert (np.diff(sol.v) <= 1e-12).all()


@settings(max_examples=40, deadline=None)
@given(trees)
def test_downstream_partitions(net):
    everything = set(net.bus_ids)
    for ln in net.lines:
        below = grid.downstream_buses(net, ln)
        rest = everything - below
        assert below and rest and below | rest == everything and not below & rest
        assert ln.to_bus in below and ln.from_bus in rest


@settings(max_examples=40, deadline=None)
@given(trees, st.integers(0, 10_000))
def test_ens_monotone_in_backup(net, seed):
    rng = np.random.default_rng(seed)
    hours = np.outer(rng.uniform(0.4, 1.0, 6), net.load_p)
    b1 = rng.uniform(0, 80, net.n_bus)
    b2 = b1 + rng.uniform(0, 50, net.n_bus)
    e1 = grid.expected_ens(net, hours, b1)[0]
    e2 = grid.expected_ens(net, hours, b2)[0]
    e0 = grid.expected_ens(net, hours)[0]
    assert e2 <= e1 + 1e-9 <= e0 + 2e-9
