import json

import numpy as np
import pytest
from scipy.stats import chisquare

from treedesign.errors import BadCoordinate, DimensionMismatch, IndexOutOfRange, UnsupportedHypothesisCount
from treedesign.model import gaussian_model, make_model
from treedesign.quantizer import (
    DecisionFunction,
    InputSpace,
    and_relay,
    best_single_threshold,
    constant,
    identity,
    init_leaf_threshold,
    init_random,
    initial_strategies,
    save_strategies,
    strategies_from_dict,
    strategies_to_dict,
    threshold_function,
)
from treedesign.topology import parallel, tree22


class TestApply:
    def test_identity(self):
        f = identity(2)
        assert f.apply(0) == 0 and f.apply(1) == 1

    def test_constant(self):
        f = constant((3, 2), 4, 0)
        assert {f.apply(i) for i in range(6)} == {0}

    def test_and(self):
        f = and_relay()
        assert f.apply((1, 1)) == 1
        assert [f.apply(c) for c in [(0, 0), (0, 1), (1, 0)]] == [0, 0, 0]

    def test_first_coordinate_most_significant(self):
        space = InputSpace((2, 3))
        assert space.flat_index((1, 0)) == 3
        assert space.coords(5) == (1, 2)

    def test_out_of_range(self):
        with pytest.raises(IndexOutOfRange):
            identity(2).apply(2)
        with pytest.raises(BadCoordinate):
            and_relay().apply((2, 0))

    def test_table_validation(self):
        with pytest.raises(DimensionMismatch):
            DecisionFunction.from_table((2,), 2, [0, 2])
        with pytest.raises(DimensionMismatch):
            DecisionFunction.from_table((3,), 2, [0, 1])

    def test_table_is_read_only(self):
        with pytest.raises(ValueError):
            identity(3).table[0] = 2


class TestPreimage:
    def test_and_fixed(self):
        f = and_relay()
        hits = f.preimage(1, {0: 1})
        assert [f.input_space.coords(i) for i in hits] == [(1, 1)]

    def test_and_free(self):
        f = and_relay()
        assert [f.input_space.coords(i) for i in f.preimage(0)] == [(0, 0), (0, 1), (1, 0)]

    def test_constant_empty(self):
        assert constant((4,), 2, 0).preimage(1).size == 0

    def test_partition(self, rng):
        f = init_random(InputSpace((3, 2, 2)), 3, 7)
        parts = [set(f.preimage(z)) for z in range(3)]
        assert set().union(*parts) == set(range(12))
        assert sum(len(p) for p in parts) == 12


def test_relabel_and_describe():
    f = threshold_function(3, 1).relabel([1, 0])
    assert f.table.tolist() == [1, 0, 0]
    assert f.describe().splitlines()[0] == "(1) -> 2"


class TestLeafInit:
    def test_midpoint_threshold(self):
        m = gaussian_model(parallel(1, obs_size=400), 0.0)
        f = init_leaf_threshold(m, 0, 1)
        assert f.table[199] == 0 and f.table[200] == 1
        assert best_single_threshold(m.leaf_pmf(0), m.priors) == 200

    def test_four_cells_rate_two(self):
        m = gaussian_model(parallel(1, obs_size=4), 0.0, bins=4, half_range=2.0)
        f = init_leaf_threshold(m, 0, 2)
        assert f.table.tolist() == [0, 1, 2, 3]

    def test_eight_cells_rate_two(self):
        m = gaussian_model(parallel(1, obs_size=8), 0.0, bins=8, half_range=2.0)
        f = init_leaf_threshold(m, 0, 2)
        assert f.table.tolist() == [0, 0, 1, 1, 2, 2, 3, 3]

    def test_mass_split_is_monotone(self):
        m = gaussian_model(parallel(1, obs_size=400), 0.0)
        f = init_leaf_threshold(m, 0, 3, split="mass")
        assert np.all(np.diff(f.table) >= 0)
        assert set(f.table.tolist()) == set(range(8))

    @pytest.mark.parametrize("rate", [1, 2])
    def test_follows_likelihood_ratio(self, rng, rate):
        # shuffling the cells shuffles the initial table the same way
        m = gaussian_model(parallel(1, obs_size=12), 0.0, bins=12, half_range=3.0)
        perm = rng.permutation(12)
        shuffled = make_model(m.priors, {0: m.leaf_pmf(0)[:, perm]})
        base = init_leaf_threshold(m, 0, rate)
        assert init_leaf_threshold(shuffled, 0, rate).table.tolist() == base.table[perm].tolist()

    def test_needs_binary(self):
        m = make_model([0.2, 0.3, 0.5], {0: [[0.5, 0.5], [0.1, 0.9], [1, 0]]})
        with pytest.raises(UnsupportedHypothesisCount):
            init_leaf_threshold(m, 0, 1)


class TestRandomInit:
    def test_single_output(self):
        for seed in range(5):
            assert init_random(InputSpace((3, 3)), 1, seed).table.tolist() == [0] * 9

    def test_reproducible(self):
        a = init_random(InputSpace((2, 2)), 2, 42)
        b = init_random(InputSpace((2, 2)), 2, 42)
        assert a == b

    def test_roughly_uniform(self):
        f = init_random(InputSpace((4000,)), 4, 3)
        counts = np.bincount(f.table, minlength=4)
        assert chisquare(counts).pvalue > 1e-4

    def test_initial_strategies_cover_nodes(self):
        net = tree22(2, 1, obs_size=8)
        m = gaussian_model(net, 0.0, bins=8, half_range=2.0)
        init = initial_strategies(net, m, seed=1)
        assert sorted(init) == list(net.non_fc_nodes)
        assert init[0].table.tolist() == [0, 0, 1, 1, 2, 2, 3, 3]
        assert init[4].input_space.dims == (4, 4)
        assert initial_strategies(net, m, seed=1) == init


def test_strategies_roundtrip(tmp_path):
    net = tree22(1, 2, obs_size=3)
    m = gaussian_model(net, 0.0, bins=3, half_range=1.0)
    init = initial_strategies(net, m, seed=5)
    path = tmp_path / "s.json"
    save_strategies(path, init, {"note": "x"})
    doc = json.loads(path.read_text())
    assert doc["metadata"] == {"note": "x"}
    assert strategies_from_dict(doc, net) == init
    assert strategies_to_dict(init)["strategies"]["4"] == init[4].table.tolist()
