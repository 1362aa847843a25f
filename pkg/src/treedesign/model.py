"""Hypothesis structure: priors and per-leaf conditional observation PMFs."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np
from scipy.stats import norm

from .errors import BadBinCount, BadProbabilityVector, DimensionMismatch
from .topology import TreeNetwork

PROB_TOL = 1e-12


def _check_prob_rows(arr: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise BadProbabilityVector(f"{what}: negative or non-finite entry")
    sums = arr.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > PROB_TOL):
        raise BadProbabilityVector(f"{what}: rows sum to {sums}, expected 1")


@dataclass(frozen=True, eq=False)
class HypothesisModel:
    """Priors ``pi_j`` and tables ``P_j(x_l)`` (shape ``M x |X_l|``) per leaf.

    Leaves are conditionally independent given the hypothesis, so only the
    per-leaf marginals are stored.
    """

    priors: np.ndarray
    leaf_pmfs: Mapping[int, np.ndarray]

    @property
    def num_hypotheses(self) -> int:
        return len(self.priors)

    def leaf_pmf(self, leaf: int) -> np.ndarray:
        return self.leaf_pmfs[leaf]


def make_model(
    priors,
    leaf_pmfs: Mapping[int, object],
    net: TreeNetwork | None = None,
) -> HypothesisModel:
    """Validate and freeze a hypothesis model.

    When ``net`` is given, the leaf set and every ``|X_l|`` must match it.
    """
    pri = np.array(priors, dtype=float)
    if pri.ndim != 1 or len(pri) < 2:
        raise DimensionMismatch("priors must be a vector with at least two hypotheses")
    _check_prob_rows(pri, "priors")
    tables: dict[int, np.ndarray] = {}
    for leaf, table in leaf_pmfs.items():
        arr = np.array(table, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != len(pri):
            raise DimensionMismatch(
                f"leaf {leaf}: expected {len(pri)} rows, got shape {arr.shape}"
            )
        _check_prob_rows(arr, f"leaf {leaf}")
        arr.setflags(write=False)
        tables[int(leaf)] = arr
    if net is not None:
        if set(tables) != set(net.leaves):
            raise DimensionMismatch(
                f"model leaves {sorted(tables)} != network leaves {list(net.leaves)}"
            )
        for leaf in net.leaves:
            if tables[leaf].shape[1] != net.obs_size(leaf):
                raise DimensionMismatch(
                    f"leaf {leaf}: |X|={tables[leaf].shape[1]} but network says {net.obs_size(leaf)}"
                )
    pri.setflags(write=False)
    return HypothesisModel(pri, tables)


def snr_to_amplitude(snr_db: float) -> float:
    """Amplitude ``a`` with ``a**2 = 10**(snr_db/10)``."""
    return 10.0 ** (snr_db / 20.0)


def cut_points(bins: int, half_range: float) -> np.ndarray:
    """Interior cell boundaries of the observation grid.

    ``bins - 2`` equal-width cells on ``(-half_range, half_range]`` plus two
    unbounded tails.  With ``bins == 2`` the only cut sits at the origin.
    """
    if bins < 2:
        raise BadBinCount(f"need at least 2 bins, got {bins}")
    if bins == 2:
        return np.zeros(1)
    if not half_range > 0:
        raise BadBinCount(f"half_range must be positive, got {half_range}")
    return np.linspace(-half_range, half_range, bins - 1)


def _cell_probs(edges: np.ndarray, mean: float) -> np.ndarray:
    # lower CDF left of the mean, survival function right of it, so that
    # far-tail cells keep their relative precision
    lo = np.concatenate([[-np.inf], edges]) - mean
    hi = np.concatenate([edges, [np.inf]]) - mean
    left = norm.cdf(hi) - norm.cdf(lo)
    right = norm.sf(lo) - norm.sf(hi)
    return np.where(lo >= 0, right, left)


def discretize_gaussian_antipodal(
    snr_db: float, bins: int = 400, half_range: float = 10.0
) -> np.ndarray:
    """``2 x bins`` table of cell probabilities for ``x = -/+a + N(0, 1)``.

    Row 0 is ``H_0`` (mean ``-a``), row 1 is ``H_1`` (mean ``+a``).
    """
    edges = cut_points(bins, half_range)
    a = snr_to_amplitude(snr_db)
    return np.vstack([_cell_probs(edges, -a), _cell_probs(edges, a)])


def gaussian_model(
    net: TreeNetwork,
    snr_db: float,
    bins: int = 400,
    half_range: float = 10.0,
    priors=(0.5, 0.5),
) -> HypothesisModel:
    """Identical antipodal Gaussian observation model at every leaf."""
    table = discretize_gaussian_antipodal(snr_db, bins, half_range)
    return make_model(priors, {leaf: table for leaf in net.leaves}, net)


def centralized_linear_pe(snr_db: float, n_leaves: int) -> float:
    """Error of the unquantized sum statistic, ``Q(sqrt(n * E))``."""
    energy = 10.0 ** (snr_db / 10.0)
    return float(norm.sf(math.sqrt(n_leaves * energy)))


# -- JSON model files -----------------------------------------------------------

def model_from_dict(doc: Mapping, net: TreeNetwork | None = None) -> HypothesisModel:
    if set(doc) != {"priors", "leaves"}:
        raise DimensionMismatch(f"model document needs keys 'priors' and 'leaves', got {sorted(doc)}")
    leaves = {int(k): v for k, v in doc["leaves"].items()}
    return make_model(doc["priors"], leaves, net)


def model_to_dict(model: HypothesisModel) -> dict:
    return {
        "priors": model.priors.tolist(),
        "leaves": {str(k): v.tolist() for k, v in sorted(model.leaf_pmfs.items())},
    }


def load_model(path: str | Path, net: TreeNetwork | None = None) -> HypothesisModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh), net)
