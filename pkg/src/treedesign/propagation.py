"""Hypothesis-conditioned message statistics on a tree.

Output PMFs are pushed forward from the leaves, relays on the path of a node
to the FC are summarised by column-stochastic transition matrices, and the
two-node restricted model used to redesign a single node is assembled from
those pieces.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import MissingStrategy, NotAPredecessor
from .model import HypothesisModel
from .quantizer import DecisionFunction
from .topology import TreeNetwork

STOCH_TOL = 1e-12


def product_pmf(pmfs: Sequence[np.ndarray], num_hypotheses: int) -> np.ndarray:
    """Joint PMF of independent inputs, flattened in mixed-radix (C) order.

    An empty list gives the single-cell distribution ``ones((M, 1))``.
    """
    out = np.ones((num_hypotheses, 1))
    for p in pmfs:
        out = (out[:, :, None] * p[:, None, :]).reshape(num_hypotheses, -1)
    return out


def push_forward(pmf: np.ndarray, table: np.ndarray, card: int) -> np.ndarray:
    """``P_j(u) = sum over gamma^{-1}(u) of P_j(y)`` for every hypothesis."""
    out = np.empty((pmf.shape[0], card))
    for j in range(pmf.shape[0]):
        out[j] = np.bincount(table, weights=pmf[j], minlength=card)
    return out


@dataclass(frozen=True)
class ConditionalPMF:
    node: int
    table: np.ndarray  # (M, |M_i|)


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Per-hypothesis matrices, ``matrices[j, m, n] = P_j(u_out = m | u_in = n)``."""

    matrices: np.ndarray

    def __post_init__(self):
        mats = np.asarray(self.matrices, dtype=float)
        if mats.ndim != 3:
            raise ValueError(f"expected (M, to, from) array, got shape {mats.shape}")
        object.__setattr__(self, "matrices", mats)

    @property
    def from_card(self) -> int:
        return self.matrices.shape[2]

    @property
    def to_card(self) -> int:
        return self.matrices.shape[1]

    @classmethod
    def identity(cls, num_hypotheses: int, n: int) -> "TransitionMatrix":
        return cls(np.broadcast_to(np.eye(n), (num_hypotheses, n, n)).copy())

    def __matmul__(self, other: "TransitionMatrix") -> "TransitionMatrix":
        return TransitionMatrix(self.matrices @ other.matrices)

    def is_column_stochastic(self, tol: float = STOCH_TOL) -> bool:
        return bool(
            np.all(self.matrices >= 0)
            and np.all(np.abs(self.matrices.sum(axis=1) - 1.0) <= tol)
        )


@dataclass(frozen=True, eq=False)
class RestrictedModel:
    """Two-node surrogate for redesigning ``node``.

    ``y_pmf`` is the distribution of the node's complete input, ``v_pmf`` that
    of the FC's other inputs, ``channel`` maps the node's output ``z`` to the
    FC input ``w`` it eventually produces.
    """

    node: int
    y_pmf: np.ndarray  # (M, |M_y|)
    v_pmf: np.ndarray  # (M, |M_v|)
    channel: TransitionMatrix  # (M, |M_w|, |M_z|)
    priors: np.ndarray
    target_output_card: int
    y_dims: tuple[int, ...]


class Propagator:
    """Memoised evaluation of PMFs and matrices for one strategy set.

    Replacing a node's decision function through :meth:`set_strategy`
    invalidates only the cached PMFs of that node and its successors.
    Instances are not thread safe; give each design session its own.
    """

    def __init__(
        self,
        net: TreeNetwork,
        model: HypothesisModel,
        strategies: Mapping[int, DecisionFunction],
    ):
        self.net = net
        self.model = model
        self._strategies = dict(strategies)
        self._pmf_cache: dict[int, np.ndarray] = {}

    @property
    def strategies(self) -> dict[int, DecisionFunction]:
        return dict(self._strategies)

    @property
    def num_hypotheses(self) -> int:
        return self.model.num_hypotheses

    def strategy(self, m: int) -> DecisionFunction:
        try:
            return self._strategies[m]
        except KeyError:
            raise MissingStrategy(f"no decision function for node {m}") from None

    def set_strategy(self, m: int, df: DecisionFunction) -> None:
        self._strategies[m] = df
        for node in self.net.successor_chain(m):
            self._pmf_cache.pop(node, None)

    # -- PMFs -----------------------------------------------------------------

    def input_pmf(self, m: int) -> np.ndarray:
        """PMF of the complete input of ``m`` (observation PMF for a leaf)."""
        if self.net.is_leaf(m):
            return self.model.leaf_pmf(m)
        preds = self.net.immediate_predecessors(m)
        return product_pmf([self.output_pmf(p) for p in preds], self.num_hypotheses)

    def output_pmf(self, m: int) -> np.ndarray:
        cached = self._pmf_cache.get(m)
        if cached is not None:
            return cached
        df = self.strategy(m)
        out = push_forward(self.input_pmf(m), df.table, df.output_card)
        self._pmf_cache[m] = out
        return out

    def fc_input_pmfs(self) -> list[np.ndarray]:
        return [self.output_pmf(p) for p in self.net.immediate_predecessors(self.net.fc)]

    # -- transition matrices ---------------------------------------------------

    def transition_matrix(self, relay: int, in_edge_from: int) -> TransitionMatrix:
        """Markov kernel of ``relay`` from the input on edge ``in_edge_from``.

        The other predecessors act as hypothesis-dependent noise whose PMFs
        are marginalised over the preimage at each fixed input value.
        """
        preds = self.net.immediate_predecessors(relay)
        if in_edge_from not in preds:
            raise NotAPredecessor(f"{in_edge_from} does not feed {relay}")
        df = self.strategy(relay)
        pos = preds.index(in_edge_from)
        others = [self.output_pmf(p) for i, p in enumerate(preds) if i != pos]
        noise = product_pmf(others, self.num_hypotheses)  # (M, R)
        dims = df.input_space.dims
        table = np.moveaxis(df.table.reshape(dims), pos, 0).reshape(dims[pos], -1)
        onehot = np.eye(df.output_card)[table]  # (|M_in|, R, |M_out|)
        return TransitionMatrix(np.einsum("jr,nrm->jmn", noise, onehot))

    def chain_matrix(self, m0: int) -> TransitionMatrix:
        """Product of edge kernels from ``m0`` to its last successor."""
        chain = self.net.successor_chain(m0)
        out = TransitionMatrix.identity(self.num_hypotheses, self.net.alphabet_size(m0))
        for prev, node in zip(chain, chain[1:]):
            out = self.transition_matrix(node, prev) @ out
        if not out.is_column_stochastic():
            raise ArithmeticError(f"chain matrix of node {m0} lost column stochasticity")
        return out

    # -- restricted model ------------------------------------------------------

    def restricted_model(self, m0: int) -> RestrictedModel:
        net = self.net
        last = net.last_successor(m0)
        v_nodes = [p for p in net.immediate_predecessors(net.fc) if p != last]
        v_pmf = product_pmf([self.output_pmf(p) for p in v_nodes], self.num_hypotheses)
        return RestrictedModel(
            node=m0,
            y_pmf=self.input_pmf(m0),
            v_pmf=v_pmf,
            channel=self.chain_matrix(m0),
            priors=self.model.priors,
            target_output_card=net.alphabet_size(m0),
            y_dims=net.input_dims(m0),
        )


# -- functional API -------------------------------------------------------------

def node_output_pmf(net, model, strategies, m: int) -> ConditionalPMF:
    return ConditionalPMF(m, Propagator(net, model, strategies).output_pmf(m))


def relay_transition_matrix(net, model, strategies, relay: int, in_edge_from: int) -> TransitionMatrix:
    return Propagator(net, model, strategies).transition_matrix(relay, in_edge_from)


def chain_matrix(net, model, strategies, m0: int) -> TransitionMatrix:
    return Propagator(net, model, strategies).chain_matrix(m0)


def build_restricted_model(net, model, strategies, m0: int) -> RestrictedModel:
    return Propagator(net, model, strategies).restricted_model(m0)
