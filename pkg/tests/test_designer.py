import itertools
import math

import numpy as np
import pytest

from treedesign.designer import (
    DesignConfig,
    cyclic_design,
    design_network,
    local_improvements,
    optimize_node_in_restricted_model,
    and_relay_baseline,
    and_relay_baseline_detail,
)
from treedesign.errors import DimensionMismatch, UnsupportedHypothesisCount, WrongTopology
from treedesign.fusion import network_error_probability, restricted_error_probability
from treedesign.model import gaussian_model, make_model
from treedesign.oracle import exhaustive_optimal, random_model, random_network
from treedesign.propagation import Propagator, RestrictedModel, TransitionMatrix
from treedesign.quantizer import DecisionFunction, constant, init_random, InputSpace, threshold_function
from treedesign.topology import parallel, tree22


def single_node_rm(y_pmf, card, priors=(0.5, 0.5)):
    m = y_pmf.shape[0]
    return RestrictedModel(
        0, y_pmf, np.ones((m, 1)), TransitionMatrix.identity(m, card), np.asarray(priors, float), card, (y_pmf.shape[1],)
    )


def random_pmf(rng, m, n):
    return rng.dirichlet(np.ones(n), size=m)


class TestNodeOptimizer:
    def test_single_output(self, rng):
        rm = single_node_rm(random_pmf(rng, 2, 5), 1)
        start = constant((5,), 1)
        assert optimize_node_in_restricted_model(rm, start) == start

    def test_shape_mismatch(self, rng):
        rm = single_node_rm(random_pmf(rng, 2, 5), 2)
        with pytest.raises(DimensionMismatch):
            optimize_node_in_restricted_model(rm, constant((4,), 2))

    @pytest.mark.parametrize("seed", range(12))
    def test_full_resolution_optimum(self, seed):
        # as many outputs as inputs: the optimum is the unquantised Bayes error
        rng = np.random.default_rng(seed)
        n_y = int(rng.integers(2, 9))
        m = int(rng.integers(2, 4))
        rm = single_node_rm(random_pmf(rng, m, n_y), n_y, priors=rng.dirichlet(np.ones(m)))
        best = restricted_error_probability(rm, DecisionFunction.from_table((n_y,), n_y, np.arange(n_y)))
        if n_y <= 5:
            brute = min(
                restricted_error_probability(rm, DecisionFunction.from_table((n_y,), n_y, t))
                for t in itertools.product(range(n_y), repeat=n_y)
            )
            assert brute == pytest.approx(best, abs=1e-15)
        got = optimize_node_in_restricted_model(rm, init_random(InputSpace((n_y,)), n_y, seed))
        assert restricted_error_probability(rm, got) == pytest.approx(best, abs=1e-12)

    def test_likelihood_ratio_intervals(self, rng):
        # increasing likelihood ratio along the axis: optimal cells are LR intervals
        h0 = np.sort(rng.dirichlet(np.ones(8)))[::-1]
        h1 = np.sort(rng.dirichlet(np.ones(8)))
        rm = single_node_rm(np.vstack([h0, h1]), 2)
        got = optimize_node_in_restricted_model(rm, init_random(InputSpace((8,)), 2, 1))
        order = np.argsort(h1 / h0)
        labels = got.table[order]
        assert np.count_nonzero(np.diff(labels)) <= 1

    def test_never_worse_and_locally_optimal(self, rng):
        for _ in range(10):
            n_y = int(rng.integers(2, 20))
            card = int(rng.integers(2, 5))
            m = int(rng.integers(2, 4))
            rm = RestrictedModel(
                0,
                random_pmf(rng, m, n_y),
                random_pmf(rng, m, 3),
                TransitionMatrix(np.stack([random_pmf(rng, card, 2).T for _ in range(m)])),
                rng.dirichlet(np.ones(m)),
                card,
                (n_y,),
            )
            start = init_random(InputSpace((n_y,)), card, 0)
            got = optimize_node_in_restricted_model(rm, start)
            assert restricted_error_probability(rm, got) <= restricted_error_probability(rm, start) + 1e-15
            assert local_improvements(rm, got) == []


class TestCyclicDesign:
    def test_fixed_point(self):
        net = parallel(1, obs_size=2)
        m = make_model([0.5, 0.5], {0: [[0.8, 0.2], [0.3, 0.7]]}, net)
        res = cyclic_design(net, m, {0: threshold_function(2, 1)})
        assert res.cycles_run == 1
        assert res.pe_trace == [pytest.approx(0.25)]
        assert res.initial_pe == pytest.approx(0.25)

    def test_toy_matches_exhaustive(self):
        net = parallel(2, obs_size=3)
        m = make_model([0.5, 0.5], {0: [[0.6, 0.3, 0.1], [0.1, 0.3, 0.6]], 1: [[0.5, 0.4, 0.1], [0.2, 0.2, 0.6]]}, net)
        best, _ = exhaustive_optimal(net, m)
        res = design_network(net, m, DesignConfig(restarts=5))
        assert res.final_pe == pytest.approx(best, abs=1e-12)

    @pytest.mark.parametrize("seed", range(8))
    def test_monotone_and_pbp_optimal(self, seed):
        rng = np.random.default_rng(seed)
        net = random_network(rng)
        m = random_model(rng, net, int(rng.integers(2, 4)))
        res = design_network(net, m, DesignConfig(restarts=3, seed=seed))
        trace = [res.initial_pe] + res.pe_trace
        assert all(b <= a + 1e-12 for a, b in zip(trace, trace[1:]))
        assert res.final_pe == pytest.approx(network_error_probability(net, m, res.strategies), abs=1e-15)
        prop = Propagator(net, m, res.strategies)
        for node in net.non_fc_nodes:
            assert local_improvements(prop.restricted_model(node), res.strategies[node], tol=1e-12) == []
        assert res.final_pe == min(res.restart_pes)

    def test_bad_schedule(self):
        net = parallel(2, obs_size=2)
        m = gaussian_model(net, 0.0, bins=2)
        with pytest.raises(ValueError):
            design_network(net, m, DesignConfig(node_schedule=[0]))

    def test_deterministic(self):
        net = tree22(1, 1, obs_size=40)
        m = gaussian_model(net, 0.0, bins=40, half_range=4.0)
        a = design_network(net, m, DesignConfig(restarts=3, seed=9))
        b = design_network(net, m, DesignConfig(restarts=3, seed=9))
        assert a.pe_trace == b.pe_trace and a.strategies == b.strategies

    def test_two_by_two_zero_db(self):
        net = tree22(1, 1, obs_size=400)
        m = gaussian_model(net, 0.0)
        res = design_network(net, m, DesignConfig(restarts=5))
        assert math.log10(res.final_pe) == pytest.approx(-1.185, abs=0.02)


class TestAndBaseline:
    @pytest.mark.parametrize("snr,expected", [(0.0, -1.1852), (5.0, -2.4057)])
    def test_values(self, snr, expected):
        net = tree22(1, 1, obs_size=400)
        assert math.log10(and_relay_baseline(net, gaussian_model(net, snr))) == pytest.approx(expected, abs=0.02)

    def test_mid_axis_is_no_better(self):
        net = tree22(1, 1, obs_size=400)
        m = gaussian_model(net, 0.0)
        pe, cut = and_relay_baseline_detail(net, m)
        assert and_relay_baseline(net, m, threshold_grid=1) >= pe
        assert 0 < cut < 400

    def test_wrong_topology(self):
        with pytest.raises(WrongTopology):
            and_relay_baseline(parallel(4, obs_size=2), gaussian_model(parallel(4, obs_size=2), 0.0, bins=2))
        with pytest.raises(WrongTopology):
            net = tree22(2, 1, obs_size=2)
            and_relay_baseline(net, gaussian_model(net, 0.0, bins=2))

    def test_binary_only(self):
        net = tree22(1, 1, obs_size=2)
        m = make_model([0.2, 0.3, 0.5], {l: [[0.5, 0.5], [0.1, 0.9], [1, 0]] for l in net.leaves}, net)
        with pytest.raises(UnsupportedHypothesisCount):
            and_relay_baseline(net, m)
