"""Person-by-person quantizer design for tree-structured detection networks."""

from .designer import (
    DesignConfig,
    DesignResult,
    and_relay_baseline,
    cyclic_design,
    design_network,
    optimize_node_in_restricted_model,
)
from .errors import TreeDesignError
from .fusion import map_fusion_table, network_error_probability, restricted_error_probability
from .model import HypothesisModel, centralized_linear_pe, gaussian_model, make_model
from .propagation import Propagator, RestrictedModel, TransitionMatrix, build_restricted_model
from .quantizer import DecisionFunction, InputSpace, initial_strategies
from .topology import NodeKind, TreeNetwork, build_tree, parallel, tree22

__all__ = [
    "DecisionFunction",
    "DesignConfig",
    "DesignResult",
    "HypothesisModel",
    "InputSpace",
    "NodeKind",
    "Propagator",
    "RestrictedModel",
    "TransitionMatrix",
    "TreeDesignError",
    "TreeNetwork",
    "and_relay_baseline",
    "build_restricted_model",
    "build_tree",
    "centralized_linear_pe",
    "cyclic_design",
    "design_network",
    "gaussian_model",
    "initial_strategies",
    "make_model",
    "map_fusion_table",
    "network_error_probability",
    "optimize_node_in_restricted_model",
    "parallel",
    "restricted_error_probability",
    "tree22",
]
