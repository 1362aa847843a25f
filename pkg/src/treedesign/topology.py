"""Directed tree networks: leaves and relays feeding a single fusion center.

Nodes are identified by dense integer ids ``0..N-1``.  Every non-FC node has
exactly one outgoing edge (to its parent) and a rate ``R_i`` in bits, which
fixes its output alphabet to ``2**R_i`` messages.  Leaves additionally carry
the cardinality of their discrete observation space.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import (
    CycleDetected,
    DanglingParent,
    IsFusionCenter,
    LeafWithPredecessors,
    MultipleRoots,
    TopologyError,
    UnknownNode,
    ZeroRate,
)


class NodeKind(str, enum.Enum):
    LEAF = "leaf"
    RELAY = "relay"
    FC = "fc"


@dataclass(frozen=True)
class NodeSpec:
    """Construction record for one node; its id is its position in the list."""

    kind: NodeKind
    parent: int | None
    rate_bits: int | None = None
    obs_size: int | None = None


class TreeNetwork:
    """Validated, immutable tree network.

    Build instances with :func:`build_tree` (or :func:`load_topology`); the
    constructor assumes its arguments were already validated.
    """

    def __init__(
        self,
        kinds: Sequence[NodeKind],
        parents: Sequence[int | None],
        rate_bits: Mapping[int, int],
        obs_size: Mapping[int, int],
    ):
        self._kinds = tuple(kinds)
        self._parents = tuple(parents)
        self._rate_bits = dict(rate_bits)
        self._obs_size = dict(obs_size)
        self._fc = self._parents.index(None)
        children: list[list[int]] = [[] for _ in self._kinds]
        for node, parent in enumerate(self._parents):
            if parent is not None:
                children[parent].append(node)
        # ascending ids: this is the input coordinate order everywhere
        self._children = tuple(tuple(sorted(c)) for c in children)

    # -- basic accessors ----------------------------------------------------

    @property
    def num_nodes(self) -> int:
        return len(self._kinds)

    @property
    def fc(self) -> int:
        return self._fc

    @property
    def nodes(self) -> range:
        return range(self.num_nodes)

    def kind(self, m: int) -> NodeKind:
        self._check(m)
        return self._kinds[m]

    def parent(self, m: int) -> int | None:
        self._check(m)
        return self._parents[m]

    def rate_bits(self, m: int) -> int:
        self._check_not_fc(m)
        return self._rate_bits[m]

    def alphabet_size(self, m: int) -> int:
        """Output alphabet cardinality ``2**R_m`` of a non-FC node."""
        return 2 ** self.rate_bits(m)

    def obs_size(self, leaf: int) -> int:
        self._check(leaf)
        if self._kinds[leaf] is not NodeKind.LEAF:
            raise TopologyError(f"node {leaf} is not a leaf")
        return self._obs_size[leaf]

    @cached_property
    def leaves(self) -> tuple[int, ...]:
        return tuple(i for i, k in enumerate(self._kinds) if k is NodeKind.LEAF)

    @cached_property
    def relays(self) -> tuple[int, ...]:
        return tuple(i for i, k in enumerate(self._kinds) if k is NodeKind.RELAY)

    @cached_property
    def non_fc_nodes(self) -> tuple[int, ...]:
        return tuple(i for i in self.nodes if i != self._fc)

    def is_leaf(self, m: int) -> bool:
        return self.kind(m) is NodeKind.LEAF

    def input_dims(self, m: int) -> tuple[int, ...]:
        """Cardinalities of the input coordinates of node ``m``.

        A leaf has its observation cardinality as the single dimension;
        relays and the FC have one dimension per immediate predecessor.
        """
        if self.kind(m) is NodeKind.LEAF:
            return (self._obs_size[m],)
        return tuple(self.alphabet_size(p) for p in self._children[m])

    # -- structural queries -------------------------------------------------

    def immediate_predecessors(self, m: int) -> tuple[int, ...]:
        self._check(m)
        return self._children[m]

    def successor_chain(self, m: int) -> tuple[int, ...]:
        """Nodes ``m = m_0, m_1, ..., m_K`` on the path to the FC (FC excluded)."""
        self._check_not_fc(m)
        chain = [m]
        while self._parents[chain[-1]] != self._fc:
            chain.append(self._parents[chain[-1]])
        return tuple(chain)

    def last_successor(self, m: int) -> int:
        return self.successor_chain(m)[-1]

    def subtree_nodes(self, m: int) -> frozenset[int]:
        self._check(m)
        out = {m}
        stack = [m]
        while stack:
            for c in self._children[stack.pop()]:
                out.add(c)
                stack.append(c)
        return frozenset(out)

    @cached_property
    def _order(self) -> tuple[int, ...]:
        order: list[int] = []

        def visit(m: int) -> None:
            for c in self._children[m]:
                visit(c)
            order.append(m)

        visit(self._fc)
        return tuple(order)

    def evaluation_order(self) -> tuple[int, ...]:
        """Post-order traversal: every node follows its predecessors, FC last."""
        return self._order

    # -- helpers ------------------------------------------------------------

    def _check(self, m: int) -> None:
        if not isinstance(m, (int,)) or isinstance(m, bool) or not 0 <= m < self.num_nodes:
            raise UnknownNode(m)

    def _check_not_fc(self, m: int) -> None:
        self._check(m)
        if m == self._fc:
            raise IsFusionCenter(f"node {m} is the fusion center")

    def specs(self) -> list[NodeSpec]:
        return [
            NodeSpec(
                self._kinds[i],
                self._parents[i],
                self._rate_bits.get(i),
                self._obs_size.get(i),
            )
            for i in self.nodes
        ]

    def with_rates(self, rates: Mapping[int, int]) -> "TreeNetwork":
        """Copy of the network with some link rates replaced."""
        specs = self.specs()
        for node, r in rates.items():
            s = specs[node]
            specs[node] = NodeSpec(s.kind, s.parent, r, s.obs_size)
        return build_tree(specs)

    def with_obs_size(self, size: int) -> "TreeNetwork":
        """Copy of the network with every leaf observing ``size`` cells."""
        specs = [
            NodeSpec(s.kind, s.parent, s.rate_bits, size if s.kind is NodeKind.LEAF else None)
            for s in self.specs()
        ]
        return build_tree(specs)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TreeNetwork):
            return NotImplemented
        return self.specs() == other.specs()

    def __hash__(self) -> int:
        return hash(tuple(self.specs()))

    def __repr__(self) -> str:
        return (
            f"TreeNetwork(N={self.num_nodes}, fc={self._fc}, "
            f"leaves={list(self.leaves)}, relays={list(self.relays)})"
        )


def _as_spec(item) -> NodeSpec:
    if isinstance(item, NodeSpec):
        return NodeSpec(NodeKind(item.kind), item.parent, item.rate_bits, item.obs_size)
    kind, parent, *rest = item
    rate = rest[0] if len(rest) > 0 else None
    obs = rest[1] if len(rest) > 1 else None
    return NodeSpec(NodeKind(kind), parent, rate, obs)


def build_tree(node_specs: Iterable) -> TreeNetwork:
    """Validate node specifications and build a :class:`TreeNetwork`.

    Each spec is a :class:`NodeSpec` or a tuple ``(kind, parent, rate_bits,
    obs_size)`` (trailing fields optional); the node id is the list position.
    """
    specs = [_as_spec(s) for s in node_specs]
    n = len(specs)
    if n == 0:
        raise TopologyError("empty network")

    for i, s in enumerate(specs):
        if s.parent is not None and not (
            isinstance(s.parent, int) and 0 <= s.parent < n
        ):
            raise DanglingParent(f"node {i} references unknown parent {s.parent!r}")
        if s.parent == i:
            raise CycleDetected(f"node {i} is its own parent")

    roots = [i for i, s in enumerate(specs) if s.parent is None]
    if not roots:
        # a finite graph where every node has a parent must contain a cycle
        raise CycleDetected("no root: every node has a parent")
    if len(roots) > 1:
        raise MultipleRoots(f"nodes {roots} have no parent")
    fc = roots[0]
    if specs[fc].kind is not NodeKind.FC:
        raise TopologyError(f"root node {fc} must be the fusion center")
    extra_fc = [i for i, s in enumerate(specs) if s.kind is NodeKind.FC and i != fc]
    if extra_fc:
        raise MultipleRoots(f"fusion center nodes {extra_fc} have a parent")

    for i in range(n):
        seen = {i}
        j = specs[i].parent
        while j is not None:
            if j in seen:
                raise CycleDetected(f"cycle through node {j}")
            seen.add(j)
            j = specs[j].parent

    has_children = {s.parent for s in specs if s.parent is not None}
    rates: dict[int, int] = {}
    obs: dict[int, int] = {}
    for i, s in enumerate(specs):
        if s.kind is NodeKind.LEAF and i in has_children:
            raise LeafWithPredecessors(f"leaf {i} has immediate predecessors")
        if s.kind is NodeKind.RELAY and i not in has_children:
            raise TopologyError(f"relay {i} has no immediate predecessors")
        if s.kind is NodeKind.FC:
            continue
        if s.rate_bits is None or int(s.rate_bits) < 1:
            raise ZeroRate(f"node {i} needs a positive rate, got {s.rate_bits!r}")
        rates[i] = int(s.rate_bits)
        if s.kind is NodeKind.LEAF:
            if s.obs_size is None or int(s.obs_size) < 1:
                raise TopologyError(f"leaf {i} needs obs_size >= 1, got {s.obs_size!r}")
            obs[i] = int(s.obs_size)
    if fc not in has_children:
        raise TopologyError("fusion center has no inputs")

    return TreeNetwork([s.kind for s in specs], [s.parent for s in specs], rates, obs)


# -- JSON topology files ------------------------------------------------------

_ALLOWED_FIELDS = {
    "leaf": {"id", "kind", "parent", "rate_bits", "obs_size"},
    "relay": {"id", "kind", "parent", "rate_bits"},
    "fc": {"id", "kind", "parent"},
}


def topology_from_dict(doc: Mapping) -> TreeNetwork:
    """Parse the ``{"nodes": [...]}`` document format."""
    if set(doc) != {"nodes"}:
        raise TopologyError(f"topology document must have exactly the key 'nodes', got {sorted(doc)}")
    entries = doc["nodes"]
    by_id: dict[int, NodeSpec] = {}
    for entry in entries:
        kind = entry.get("kind")
        if kind not in _ALLOWED_FIELDS:
            raise TopologyError(f"unknown node kind {kind!r}")
        unknown = set(entry) - _ALLOWED_FIELDS[kind]
        if unknown:
            raise TopologyError(f"unknown fields {sorted(unknown)} for {kind} node")
        if "id" not in entry or "parent" not in entry:
            raise TopologyError("every node needs 'id' and 'parent'")
        node_id = entry["id"]
        if node_id in by_id:
            raise TopologyError(f"duplicate node id {node_id}")
        by_id[node_id] = NodeSpec(
            NodeKind(kind), entry["parent"], entry.get("rate_bits"), entry.get("obs_size")
        )
    if sorted(by_id) != list(range(len(by_id))):
        raise TopologyError("node ids must be dense 0..N-1")
    return build_tree(by_id[i] for i in range(len(by_id)))


def topology_to_dict(net: TreeNetwork) -> dict:
    nodes = []
    for i, s in enumerate(net.specs()):
        entry = {"id": i, "kind": s.kind.value, "parent": s.parent}
        if s.kind is not NodeKind.FC:
            entry["rate_bits"] = s.rate_bits
        if s.kind is NodeKind.LEAF:
            entry["obs_size"] = s.obs_size
        nodes.append(entry)
    return {"nodes": nodes}


def load_topology(path: str | Path) -> TreeNetwork:
    with open(path) as fh:
        return topology_from_dict(json.load(fh))


# -- builtin topologies ---------------------------------------------------------

def tree22(leaf_rate: int = 1, relay_rate: int = 1, obs_size: int = 2) -> TreeNetwork:
    """Two relays, each fed by two leaves, both feeding the FC.

    Ids: leaves ``l1..l4 = 0..3``, relays ``r1 = 4`` (fed by 0, 1) and
    ``r2 = 5`` (fed by 2, 3), FC ``= 6``.
    """
    return build_tree(
        [
            (NodeKind.LEAF, 4, leaf_rate, obs_size),
            (NodeKind.LEAF, 4, leaf_rate, obs_size),
            (NodeKind.LEAF, 5, leaf_rate, obs_size),
            (NodeKind.LEAF, 5, leaf_rate, obs_size),
            (NodeKind.RELAY, 6, relay_rate),
            (NodeKind.RELAY, 6, relay_rate),
            (NodeKind.FC, None),
        ]
    )


def parallel(n_leaves: int, rate: int = 1, obs_size: int = 2) -> TreeNetwork:
    """``n_leaves`` leaves wired directly to the FC (id ``n_leaves``)."""
    specs = [(NodeKind.LEAF, n_leaves, rate, obs_size) for _ in range(n_leaves)]
    specs.append((NodeKind.FC, None))
    return build_tree(specs)
