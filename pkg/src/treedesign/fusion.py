"""MAP fusion and exact Bayes error, on the full network and the restricted model."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch
from .model import HypothesisModel
from .propagation import Propagator, RestrictedModel, product_pmf, push_forward
from .quantizer import DecisionFunction
from .topology import TreeNetwork


@dataclass(frozen=True, eq=False)
class FusionTable:
    dims: tuple[int, ...]
    decision: np.ndarray  # chosen hypothesis per flat FC input


def bayes_error(weighted: np.ndarray) -> float:
    """Error of MAP on a table of joint weights ``pi_j P(u | H_j)`` (hypotheses on axis 0).

    Evaluated as ``sum_u (sum_j w - max_j w)``, which equals
    ``1 - sum_u max_j w`` for normalised inputs but keeps full relative
    precision when the error is small.
    """
    return float((weighted.sum(axis=0) - weighted.max(axis=0)).sum())


def map_fusion_table(priors, fc_input_pmfs: Sequence[np.ndarray]) -> FusionTable:
    """``argmax_j pi_j prod_i P_j(u_i)`` per joint FC input; ties go to the lowest ``j``."""
    priors = np.asarray(priors, dtype=float)
    for p in fc_input_pmfs:
        if p.ndim != 2 or p.shape[0] != len(priors):
            raise DimensionMismatch(f"PMF shape {p.shape} does not match {len(priors)} hypotheses")
    joint = product_pmf(list(fc_input_pmfs), len(priors))
    decision = np.argmax(priors[:, None] * joint, axis=0)
    return FusionTable(tuple(p.shape[1] for p in fc_input_pmfs), decision)


def fc_error_probability(priors, fc_input_pmfs: Sequence[np.ndarray]) -> float:
    priors = np.asarray(priors, dtype=float)
    joint = product_pmf(list(fc_input_pmfs), len(priors))
    return bayes_error(priors[:, None] * joint)


def network_error_probability(
    net: TreeNetwork,
    model: HypothesisModel,
    strategies: Mapping[int, DecisionFunction] | Propagator,
) -> float:
    """Exact error probability of the MAP fusion center."""
    prop = strategies if isinstance(strategies, Propagator) else Propagator(net, model, strategies)
    return fc_error_probability(model.priors, prop.fc_input_pmfs())


def restricted_output_pmf(rm: RestrictedModel, gamma_k: DecisionFunction) -> np.ndarray:
    """``P_j(w)``: the node's output pushed through the channel."""
    if gamma_k.input_space.size != rm.y_pmf.shape[1]:
        raise DimensionMismatch(
            f"decision function covers {gamma_k.input_space.size} inputs, restricted model has {rm.y_pmf.shape[1]}"
        )
    if gamma_k.output_card != rm.target_output_card:
        raise DimensionMismatch(
            f"decision function emits {gamma_k.output_card} messages, expected {rm.target_output_card}"
        )
    p_z = push_forward(rm.y_pmf, gamma_k.table, gamma_k.output_card)
    return np.einsum("jwz,jz->jw", rm.channel.matrices, p_z)


def restricted_error_probability(rm: RestrictedModel, gamma_k: DecisionFunction) -> float:
    """MAP error of the two-node restricted network driven by ``gamma_k``."""
    p_w = restricted_output_pmf(rm, gamma_k)
    weighted = rm.priors[:, None, None] * rm.v_pmf[:, :, None] * p_w[:, None, :]
    return bayes_error(weighted)
