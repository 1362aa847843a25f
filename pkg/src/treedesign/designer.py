"""Cyclic person-by-person design of all node decision functions.

Each node update rebuilds the node's restricted model from the current
network, reassigns its outputs one input at a time (with the MAP fusion
center implicitly re-optimised at every trial), and installs the result.
Because the restricted-model error equals the network error, the network
error never increases.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from numba import njit

from .errors import DimensionMismatch, UnsupportedHypothesisCount, WrongTopology
from .fusion import network_error_probability, restricted_error_probability
from .model import HypothesisModel
from .propagation import Propagator, RestrictedModel
from .quantizer import (
    DecisionFunction,
    InputSpace,
    and_relay,
    LEAF_SPLITS,
    init_leaf_threshold,
    init_random,
    initial_strategies,
    threshold_function,
)
from .topology import NodeKind, TreeNetwork

log = logging.getLogger(__name__)

# smallest restricted-model gain that counts as an improvement; differences
# below this are floating-point noise in a sum of probabilities
IMPROVE_TOL = 1e-14


@njit(cache=True)
def _map_error(a_v, p_w):
    # sum over (v, w) of sum_j - max_j of a_v[j, v] * p_w[j, w]
    m_hyp, n_v = a_v.shape
    n_w = p_w.shape[1]
    total = 0.0
    for v in range(n_v):
        for w in range(n_w):
            s = 0.0
            mx = 0.0
            for j in range(m_hyp):
                x = a_v[j, v] * p_w[j, w]
                s += x
                if x > mx:
                    mx = x
            total += s - mx
    return total


@njit(cache=True)
def _coordinate_sweep(p_y, a_v, chan, gamma, max_passes, tol):
    """In-place single-input coordinate descent on ``gamma``; returns passes used."""
    m_hyp, n_y = p_y.shape
    n_w = chan.shape[1]
    n_z = chan.shape[2]
    p_w = np.empty((m_hyp, n_w))
    cand = np.empty((m_hyp, n_w))
    pe = np.empty(n_z)
    passes = 0
    for _ in range(max_passes):
        passes += 1
        p_w[:, :] = 0.0
        for y in range(n_y):
            z = gamma[y]
            for j in range(m_hyp):
                for w in range(n_w):
                    p_w[j, w] += chan[j, w, z] * p_y[j, y]
        changed = False
        for y in range(n_y):
            z0 = gamma[y]
            for z in range(n_z):
                for j in range(m_hyp):
                    for w in range(n_w):
                        cand[j, w] = p_w[j, w] + p_y[j, y] * (chan[j, w, z] - chan[j, w, z0])
                pe[z] = _map_error(a_v, cand)
            zbest = 0
            for z in range(1, n_z):
                if pe[z] < pe[zbest]:
                    zbest = z
            if zbest != z0 and pe[zbest] < pe[z0] - tol:
                for j in range(m_hyp):
                    for w in range(n_w):
                        p_w[j, w] += p_y[j, y] * (chan[j, w, zbest] - chan[j, w, z0])
                gamma[y] = zbest
                changed = True
        if not changed:
            break
    return passes


def optimize_node_in_restricted_model(
    rm: RestrictedModel,
    gamma_init: DecisionFunction,
    inner_max_passes: int = 50,
    tol: float = IMPROVE_TOL,
) -> DecisionFunction:
    """Coordinate descent over the inputs of the restricted-model node.

    Inputs are visited in ascending order; each is moved to the output that
    minimises the restricted error, staying put unless some output improves
    on the incumbent by more than ``tol`` (the lowest such output wins).
    Sweeps repeat until nothing changes or ``inner_max_passes`` is reached.
    """
    if gamma_init.input_space.size != rm.y_pmf.shape[1] or gamma_init.output_card != rm.target_output_card:
        raise DimensionMismatch("initial decision function does not fit the restricted model")
    gamma = gamma_init.table.copy()
    a_v = np.ascontiguousarray(rm.priors[:, None] * rm.v_pmf)
    _coordinate_sweep(
        np.ascontiguousarray(rm.y_pmf),
        a_v,
        np.ascontiguousarray(rm.channel.matrices),
        gamma,
        int(inner_max_passes),
        float(tol),
    )
    return gamma_init.with_table(gamma)


def local_improvements(
    rm: RestrictedModel, gamma: DecisionFunction, tol: float = IMPROVE_TOL
) -> list[tuple[int, int, float]]:
    """Audit: every single-input reassignment that lowers the restricted error.

    Evaluated directly with :func:`restricted_error_probability`, independent
    of the sweep kernel.  An empty list certifies person-by-person optimality.
    """
    base = restricted_error_probability(rm, gamma)
    found = []
    table = gamma.table
    for y in range(len(table)):
        for z in range(gamma.output_card):
            if z == table[y]:
                continue
            trial = table.copy()
            trial[y] = z
            pe = restricted_error_probability(rm, gamma.with_table(trial))
            if pe < base - tol:
                found.append((y, z, base - pe))
    return found


@dataclass
class DesignConfig:
    node_schedule: Sequence[int] | None = None
    max_cycles: int = 100
    pe_tolerance: float = 1e-12
    restarts: int = 1
    seed: int = 0
    inner_max_passes: int = 50
    # leaf refinement rule per restart, cycled: restart r uses leaf_splits[r % len]
    leaf_splits: Sequence[str] = LEAF_SPLITS


@dataclass
class DesignResult:
    strategies: dict[int, DecisionFunction]
    pe_trace: list[float]
    final_pe: float
    cycles_run: int
    restart_index: int
    initial_pe: float
    restart_pes: list[float] = field(default_factory=list)


def default_schedule(net: TreeNetwork) -> tuple[int, ...]:
    """Leaves in ascending id, then relays in ascending id."""
    return tuple(net.leaves) + tuple(net.relays)


def _check_schedule(net: TreeNetwork, schedule: Sequence[int]) -> None:
    if sorted(schedule) != sorted(net.non_fc_nodes):
        raise ValueError(f"schedule {list(schedule)} must list every non-FC node exactly once")


def _design_once(net, model, init, cfg, schedule, restart_index) -> DesignResult:
    prop = Propagator(net, model, init)
    for m in net.non_fc_nodes:
        prop.strategy(m)  # fail early on missing strategies
    pe = network_error_probability(net, model, prop)
    initial = pe
    trace: list[float] = []
    cycles = 0
    for _ in range(cfg.max_cycles):
        cycles += 1
        start = pe
        for m in schedule:
            rm = prop.restricted_model(m)
            new = optimize_node_in_restricted_model(rm, prop.strategy(m), cfg.inner_max_passes)
            prop.set_strategy(m, new)
            pe = network_error_probability(net, model, prop)
            trace.append(pe)
        log.debug("restart %d cycle %d: Pe %.6g", restart_index, cycles, pe)
        if start - pe < cfg.pe_tolerance:
            break
    return DesignResult(prop.strategies, trace, pe, cycles, restart_index, initial)


def _restart_init(net, model, init, cfg, r) -> dict[int, DecisionFunction]:
    start = dict(init)
    if r == 0:
        return start
    for m in net.relays:
        start[m] = init_random(InputSpace(net.input_dims(m)), net.alphabet_size(m), [cfg.seed + r, m])
    split = cfg.leaf_splits[r % len(cfg.leaf_splits)]
    if r % len(cfg.leaf_splits) != 0 and model.num_hypotheses == 2:
        for l in net.leaves:
            if net.rate_bits(l) > 1:
                start[l] = init_leaf_threshold(model, l, net.rate_bits(l), split)
    return start


def _distinct_runs(net, model, cfg) -> int:
    if net.relays:
        return cfg.restarts
    varies = model.num_hypotheses == 2 and any(net.rate_bits(l) > 1 for l in net.leaves)
    return min(cfg.restarts, len(cfg.leaf_splits)) if varies else 1


def cyclic_design(
    net: TreeNetwork,
    model: HypothesisModel,
    init: Mapping[int, DecisionFunction],
    cfg: DesignConfig | None = None,
) -> DesignResult:
    """Person-by-person design from ``init``; best of ``cfg.restarts`` runs.

    Restart 0 starts from ``init``.  Restart ``r > 0`` draws every relay
    table afresh from stream ``(cfg.seed + r, relay)``; its multi-bit leaves
    are re-initialised with split rule ``cfg.leaf_splits[r % len]`` unless
    that index is 0, in which case the leaves of ``init`` are kept.  Runs
    that would repeat an earlier one exactly (no relays) are skipped.
    """
    cfg = cfg or DesignConfig()
    schedule = tuple(cfg.node_schedule) if cfg.node_schedule is not None else default_schedule(net)
    _check_schedule(net, schedule)
    if cfg.restarts < 1 or not cfg.leaf_splits:
        raise ValueError("need at least one restart and one leaf split rule")
    best: DesignResult | None = None
    finals = []
    for r in range(_distinct_runs(net, model, cfg)):
        res = _design_once(net, model, _restart_init(net, model, init, cfg, r), cfg, schedule, r)
        finals.append(res.final_pe)
        if best is None or res.final_pe < best.final_pe:
            best = res
    best.restart_pes = finals
    return best


def design_network(net: TreeNetwork, model: HypothesisModel, cfg: DesignConfig | None = None) -> DesignResult:
    """Initialise per :func:`initial_strategies` with ``cfg.seed`` and run :func:`cyclic_design`."""
    cfg = cfg or DesignConfig()
    init = initial_strategies(net, model, cfg.seed, cfg.leaf_splits[0])
    return cyclic_design(net, model, init, cfg)


# -- AND-relay baseline ---------------------------------------------------------

def _check_tree22(net: TreeNetwork, model: HypothesisModel) -> None:
    relays = net.immediate_predecessors(net.fc)
    ok = len(relays) == 2 and all(net.kind(r) is NodeKind.RELAY for r in relays)
    if ok:
        for r in relays:
            leaves = net.immediate_predecessors(r)
            ok &= len(leaves) == 2 and all(net.is_leaf(l) for l in leaves)
    ok = ok and all(net.rate_bits(m) == 1 for m in net.non_fc_nodes)
    if not ok:
        raise WrongTopology("expected two one-bit relays, each fed by two one-bit leaves")
    if len({net.obs_size(l) for l in net.leaves}) != 1:
        raise WrongTopology("leaves must share one observation grid")
    if model.num_hypotheses != 2:
        raise UnsupportedHypothesisCount("the AND baseline is binary")


def and_relay_baseline_detail(
    net: TreeNetwork, model: HypothesisModel, threshold_grid: int | None = None
) -> tuple[float, int]:
    """Best ``(Pe, cut)`` with AND relays and one common leaf threshold.

    Leaves send 1 for cells at or above ``cut``.  All cuts ``1..n-1`` are
    tried unless ``threshold_grid`` asks for that many evenly spaced ones
    (a grid of one is the mid-axis cut).
    """
    _check_tree22(net, model)
    n = net.obs_size(net.leaves[0])
    if threshold_grid is None:
        cuts = np.arange(1, n)
    elif threshold_grid == 1:
        cuts = np.array([n // 2])
    else:
        cuts = np.unique(np.round(np.linspace(1, n - 1, threshold_grid)).astype(int))
    relay = and_relay(2)
    best = (np.inf, -1)
    for c in cuts:
        leaf = threshold_function(n, int(c))
        strategies = {m: leaf for m in net.leaves} | {m: relay for m in net.relays}
        pe = network_error_probability(net, model, strategies)
        if pe < best[0]:
            best = (pe, int(c))
    return best


def and_relay_baseline(net: TreeNetwork, model: HypothesisModel, threshold_grid: int | None = None) -> float:
    return and_relay_baseline_detail(net, model, threshold_grid)[0]
