"""Brute-force ground truth for small networks.

Nothing here uses the factorised recursions of :mod:`treedesign.propagation`
except :func:`exhaustive_optimal`, which needs a fast objective and is
itself checked against :func:`joint_bruteforce_pe`.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import BudgetExceeded
from .fusion import network_error_probability
from .model import HypothesisModel, make_model
from .quantizer import DecisionFunction, InputSpace, init_random
from .topology import NodeKind, TreeNetwork, build_tree


@dataclass(frozen=True)
class OracleBudget:
    max_total_tables: int = 2**24
    max_joint_outcomes: int = 2**20

    def __post_init__(self):
        if self.max_total_tables < 1 or self.max_joint_outcomes < 1:
            raise ValueError("oracle budgets must be positive")


def _propagate(net: TreeNetwork, strategies: Mapping[int, DecisionFunction], obs: Mapping[int, int]) -> dict[int, int]:
    """Messages of every node for one joint observation."""
    msg: dict[int, int] = {}
    for m in net.evaluation_order():
        if m == net.fc:
            continue
        if net.is_leaf(m):
            msg[m] = strategies[m].apply(obs[m])
        else:
            coords = tuple(msg[p] for p in net.immediate_predecessors(m))
            msg[m] = strategies[m].apply(coords)
    return msg


def joint_bruteforce_pe(
    net: TreeNetwork,
    model: HypothesisModel,
    strategies: Mapping[int, DecisionFunction],
    budget: OracleBudget = OracleBudget(),
) -> float:
    """``1 - sum_u max_j pi_j P(u | H_j)`` by enumerating every leaf observation tuple."""
    leaves = net.leaves
    sizes = [net.obs_size(l) for l in leaves]
    if math.prod(sizes) > budget.max_joint_outcomes:
        raise BudgetExceeded(f"{math.prod(sizes)} joint observations exceed the budget")
    fc_inputs = net.immediate_predecessors(net.fc)
    acc: dict[tuple[int, ...], list[float]] = defaultdict(lambda: [0.0] * model.num_hypotheses)
    for xs in itertools.product(*(range(s) for s in sizes)):
        obs = dict(zip(leaves, xs))
        msg = _propagate(net, strategies, obs)
        key = tuple(msg[p] for p in fc_inputs)
        for j in range(model.num_hypotheses):
            p = model.priors[j]
            for l, x in obs.items():
                p *= model.leaf_pmf(l)[j, x]
            acc[key][j] += p
    return 1.0 - sum(max(w) for w in acc.values())


def joint_map_pe(net: TreeNetwork, model: HypothesisModel, budget: OracleBudget = OracleBudget()) -> float:
    """Centralised MAP error with every raw leaf observation available at the FC."""
    sizes = [net.obs_size(l) for l in net.leaves]
    if math.prod(sizes) > budget.max_joint_outcomes:
        raise BudgetExceeded(f"{math.prod(sizes)} joint observations exceed the budget")
    joint = np.ones((model.num_hypotheses, 1))
    for l in net.leaves:
        joint = (joint[:, :, None] * model.leaf_pmf(l)[:, None, :]).reshape(model.num_hypotheses, -1)
    return float(1.0 - (model.priors[:, None] * joint).max(axis=0).sum())


def bruteforce_chain_matrix(
    net: TreeNetwork,
    model: HypothesisModel,
    strategies: Mapping[int, DecisionFunction],
    m0: int,
    budget: OracleBudget = OracleBudget(),
) -> np.ndarray:
    """``P_j(u_K | u_0)`` by enumerating every side input along the chain.

    Side inputs of chain relays are drawn from the output PMFs of the
    off-chain predecessors, themselves obtained by observation enumeration.
    Returns an ``(M, |M_K|, |M_0|)`` array.
    """
    chain = net.successor_chain(m0)
    side: list[tuple[int, int]] = []  # (relay, side predecessor)
    for prev, node in zip(chain, chain[1:]):
        side += [(node, p) for p in net.immediate_predecessors(node) if p != prev]
    side_pmfs = [_enumerated_output_pmf(net, model, strategies, p, budget) for _, p in side]
    n_side = math.prod(p.shape[1] for p in side_pmfs)
    if n_side > budget.max_joint_outcomes:
        raise BudgetExceeded("too many side-input combinations")
    n0 = net.alphabet_size(m0)
    nk = net.alphabet_size(chain[-1])
    out = np.zeros((model.num_hypotheses, nk, n0))
    for combo in itertools.product(*(range(p.shape[1]) for p in side_pmfs)):
        given = {key: u for key, u in zip(side, combo)}
        probs = np.ones(model.num_hypotheses)
        for pmf, u in zip(side_pmfs, combo):
            probs = probs * pmf[:, u]
        for u0 in range(n0):
            u = u0
            for prev, node in zip(chain, chain[1:]):
                coords = tuple(u if p == prev else given[(node, p)] for p in net.immediate_predecessors(node))
                u = strategies[node].apply(coords)
            out[:, u, u0] += probs
    return out


def _enumerated_output_pmf(net, model, strategies, m, budget) -> np.ndarray:
    leaves = [l for l in net.leaves if l in net.subtree_nodes(m)]
    sizes = [net.obs_size(l) for l in leaves]
    if math.prod(sizes) > budget.max_joint_outcomes:
        raise BudgetExceeded("sub-tree observation space exceeds the budget")
    out = np.zeros((model.num_hypotheses, net.alphabet_size(m)))
    sub_strategies = {k: v for k, v in strategies.items() if k in net.subtree_nodes(m)}
    for xs in itertools.product(*(range(s) for s in sizes)):
        obs = dict(zip(leaves, xs))
        msg = _propagate_subtree(net, sub_strategies, obs, m)
        for j in range(model.num_hypotheses):
            out[j, msg] += math.prod(model.leaf_pmf(l)[j, x] for l, x in obs.items())
    return out


def _propagate_subtree(net, strategies, obs, root) -> int:
    if net.is_leaf(root):
        return strategies[root].apply(obs[root])
    coords = tuple(_propagate_subtree(net, strategies, obs, p) for p in net.immediate_predecessors(root))
    return strategies[root].apply(coords)


def strategy_space_size(net: TreeNetwork) -> int:
    total = 1
    for m in net.non_fc_nodes:
        total *= net.alphabet_size(m) ** math.prod(net.input_dims(m))
    return total


def exhaustive_optimal(
    net: TreeNetwork,
    model: HypothesisModel,
    budget: OracleBudget = OracleBudget(),
) -> tuple[float, dict[int, DecisionFunction]]:
    """Global minimum of the network error over all deterministic strategies.

    Strategies are visited in lexicographic order of their concatenated
    tables (nodes by ascending id) and only a strict improvement replaces
    the incumbent, so the first minimiser found is returned.
    """
    total = strategy_space_size(net)
    if total > budget.max_total_tables:
        raise BudgetExceeded(f"{total} strategy sets exceed the budget of {budget.max_total_tables}")
    nodes = net.non_fc_nodes
    per_node = []
    for m in nodes:
        space = InputSpace(net.input_dims(m))
        card = net.alphabet_size(m)
        per_node.append(
            [DecisionFunction(space, card, t) for t in itertools.product(range(card), repeat=space.size)]
        )
    best_pe = math.inf
    best: dict[int, DecisionFunction] = {}
    for combo in itertools.product(*per_node):
        strategies = dict(zip(nodes, combo))
        pe = network_error_probability(net, model, strategies)
        if pe < best_pe - 1e-13:
            best_pe, best = pe, strategies
    return best_pe, best


# -- random small instances ---------------------------------------------------

def random_network(
    rng: np.random.Generator,
    max_leaves: int = 4,
    max_obs: int = 4,
    max_depth: int = 3,
    max_rate: int = 2,
    max_relays: int = 3,
) -> TreeNetwork:
    """Random tree with at most ``max_depth`` edges from any leaf to the FC."""
    n_leaves = int(rng.integers(1, max_leaves + 1))
    n_relays = int(rng.integers(0, max_relays + 1))
    # slot 0 is the FC; relays get parents among the FC and earlier relays
    parents: list[int | None] = [None]
    depth = [0]
    kinds = [NodeKind.FC]
    for _ in range(n_relays):
        allowed = [i for i in range(len(parents)) if depth[i] < max_depth - 1]
        p = int(rng.choice(allowed))
        parents.append(p)
        depth.append(depth[p] + 1)
        kinds.append(NodeKind.RELAY)
    for _ in range(n_leaves):
        p = int(rng.integers(0, n_relays + 1))
        parents.append(p)
        depth.append(depth[p] + 1)
        kinds.append(NodeKind.LEAF)
    # prune relays that ended up without inputs
    while True:
        used = {p for p in parents if p is not None}
        dead = [i for i, k in enumerate(kinds) if k is NodeKind.RELAY and i not in used]
        if not dead:
            break
        keep = [i for i in range(len(kinds)) if i not in dead]
        remap = {old: new for new, old in enumerate(keep)}
        parents = [None if parents[i] is None else remap[parents[i]] for i in keep]
        kinds = [kinds[i] for i in keep]
    specs = []
    for k, p in zip(kinds, parents):
        if k is NodeKind.FC:
            specs.append((k, None))
        elif k is NodeKind.RELAY:
            specs.append((k, p, int(rng.integers(1, max_rate + 1))))
        else:
            specs.append((k, p, int(rng.integers(1, max_rate + 1)), int(rng.integers(1, max_obs + 1))))
    return build_tree(specs)


def random_model(rng: np.random.Generator, net: TreeNetwork, num_hypotheses: int = 2) -> HypothesisModel:
    priors = rng.dirichlet(np.ones(num_hypotheses))
    priors /= priors.sum()
    tables = {}
    for l in net.leaves:
        t = rng.dirichlet(np.ones(net.obs_size(l)), size=num_hypotheses)
        tables[l] = t / t.sum(axis=1, keepdims=True)
    return make_model(priors, tables, net)


def random_strategies(rng: np.random.Generator, net: TreeNetwork) -> dict[int, DecisionFunction]:
    return {
        m: init_random(InputSpace(net.input_dims(m)), net.alphabet_size(m), rng.integers(2**31))
        for m in net.non_fc_nodes
    }
