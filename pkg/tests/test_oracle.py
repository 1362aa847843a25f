import numpy as np
import pytest

from treedesign.designer import DesignConfig, design_network
from treedesign.errors import BudgetExceeded
from treedesign.fusion import network_error_probability
from treedesign.model import make_model
from treedesign.oracle import (
    OracleBudget,
    exhaustive_optimal,
    joint_bruteforce_pe,
    joint_map_pe,
    random_model,
    random_network,
    random_strategies,
    strategy_space_size,
)
from treedesign.quantizer import DecisionFunction, constant, identity, local_map_error
from treedesign.topology import parallel, tree22


def depth(net, m):
    return len(net.successor_chain(m))


@pytest.mark.parametrize("seed", range(100))
def test_bruteforce_matches_recursion(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng)
    m = random_model(rng, net, int(rng.integers(2, 4)))
    s = random_strategies(rng, net)
    assert joint_bruteforce_pe(net, m, s) == pytest.approx(network_error_probability(net, m, s), abs=1e-12)


@pytest.mark.parametrize("seed", range(30))
def test_generator_limits(seed):
    net = random_network(np.random.default_rng(seed))
    assert 1 <= len(net.leaves) <= 4
    assert all(net.obs_size(l) <= 4 for l in net.leaves)
    assert all(depth(net, l) <= 3 for l in net.leaves)
    assert all(net.rate_bits(m) <= 2 for m in net.non_fc_nodes)


def test_informative_leaves():
    net = tree22(1, 1, obs_size=2)
    m = make_model([0.5, 0.5], {l: np.eye(2) for l in net.leaves}, net)
    s = {l: identity(2) for l in net.leaves} | {r: DecisionFunction.from_table((2, 2), 2, [0, 0, 1, 1]) for r in net.relays}
    assert joint_bruteforce_pe(net, m, s) == 0.0


def test_constant_strategies():
    net = tree22(1, 1, obs_size=3)
    rows = [[0.7, 0.2, 0.1], [0.1, 0.2, 0.7]]
    m = make_model([0.5, 0.5], {l: rows for l in net.leaves}, net)
    s = {l: constant((3,), 2) for l in net.leaves} | {r: constant((2, 2), 2) for r in net.relays}
    assert joint_bruteforce_pe(net, m, s) == pytest.approx(0.5)


def test_single_leaf_exhaustive():
    net = parallel(1, obs_size=2)
    rows = np.array([[0.8, 0.2], [0.3, 0.7]])
    m = make_model([0.5, 0.5], {0: rows}, net)
    pe, best = exhaustive_optimal(net, m)
    assert pe == pytest.approx(local_map_error(rows, m.priors, np.array([0, 1]), 2))
    assert pe == pytest.approx(0.25)


@pytest.mark.parametrize("seed", range(10))
def test_global_below_local(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng, max_leaves=2, max_obs=3, max_depth=2, max_rate=1, max_relays=1)
    m = random_model(rng, net, 2)
    pe, _ = exhaustive_optimal(net, m)
    res = design_network(net, m, DesignConfig(restarts=2, seed=seed))
    assert pe <= res.final_pe + 1e-12
    # the centralised MAP error bounds every quantised design from below
    assert joint_map_pe(net, m) <= pe + 1e-12


def test_budget():
    net = parallel(3, obs_size=4)
    assert strategy_space_size(net) == 2 ** 12
    m = random_model(np.random.default_rng(0), net, 2)
    with pytest.raises(BudgetExceeded):
        exhaustive_optimal(net, m, OracleBudget(max_total_tables=100))
    with pytest.raises(BudgetExceeded):
        joint_bruteforce_pe(net, m, random_strategies(np.random.default_rng(1), net), OracleBudget(max_joint_outcomes=10))
    with pytest.raises(ValueError):
        OracleBudget(max_total_tables=0)
