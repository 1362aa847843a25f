"""Node decision functions stored as lookup tables.

A decision function maps a flat index of its (product) input space to an
output message.  Flattening is mixed-radix with the first coordinate (the
lowest-id predecessor) most significant, i.e. C order.  Messages are
0-based internally; :meth:`DecisionFunction.describe` renders them 1-based.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    BadCoordinate,
    DimensionMismatch,
    IndexOutOfRange,
    UnsupportedHypothesisCount,
)
from .model import HypothesisModel
from .topology import TreeNetwork


@dataclass(frozen=True)
class InputSpace:
    dims: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if any(d < 1 for d in self.dims):
            raise DimensionMismatch(f"input dims must be positive: {self.dims}")

    @property
    def size(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.dims else 1

    def flat_index(self, coords: Sequence[int]) -> int:
        if len(coords) != len(self.dims):
            raise BadCoordinate(f"expected {len(self.dims)} coordinates, got {len(coords)}")
        for c, d in zip(coords, self.dims):
            if not 0 <= c < d:
                raise BadCoordinate(f"coordinate {c} outside [0, {d})")
        return int(np.ravel_multi_index(tuple(coords), self.dims))

    def coords(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.size:
            raise IndexOutOfRange(index)
        return tuple(int(c) for c in np.unravel_index(index, self.dims))


@dataclass(frozen=True, eq=False)
class DecisionFunction:
    input_space: InputSpace
    output_card: int
    table: np.ndarray = field(repr=False)

    def __post_init__(self):
        table = np.array(self.table, dtype=np.int64).reshape(-1)
        if table.size != self.input_space.size:
            raise DimensionMismatch(
                f"table has {table.size} entries, input space has {self.input_space.size}"
            )
        if self.output_card < 1:
            raise DimensionMismatch("output cardinality must be >= 1")
        if table.size and (table.min() < 0 or table.max() >= self.output_card):
            raise DimensionMismatch(f"table entries must lie in [0, {self.output_card})")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    @classmethod
    def from_table(cls, dims: Sequence[int], output_card: int, table) -> "DecisionFunction":
        return cls(InputSpace(tuple(dims)), int(output_card), table)

    def apply(self, index) -> int:
        """Output for a flat input index (or a coordinate tuple)."""
        if isinstance(index, (tuple, list)):
            index = self.input_space.flat_index(index)
        if not 0 <= index < self.input_space.size:
            raise IndexOutOfRange(index)
        return int(self.table[index])

    def preimage(self, output: int, fixed: Mapping[int, int] | None = None) -> np.ndarray:
        """Flat indices mapping to ``output`` among completions of ``fixed``.

        ``fixed`` maps coordinate positions to values.
        """
        dims = self.input_space.dims
        mask = self.table == output
        if fixed:
            grid = mask.reshape(dims) if dims else mask
            sel: list[object] = [slice(None)] * len(dims)
            for pos, val in fixed.items():
                if not 0 <= pos < len(dims) or not 0 <= val < dims[pos]:
                    raise BadCoordinate(f"bad fixed coordinate {pos}={val}")
                sel[pos] = val
            keep = np.zeros(dims, dtype=bool)
            keep[tuple(sel)] = True
            mask = (grid & keep).reshape(-1)
        return np.flatnonzero(mask)

    def with_table(self, table) -> "DecisionFunction":
        return DecisionFunction(self.input_space, self.output_card, table)

    def relabel(self, perm: Sequence[int]) -> "DecisionFunction":
        """Apply the output permutation ``z -> perm[z]``."""
        return self.with_table(np.asarray(perm)[self.table])

    def describe(self) -> str:
        """Human readable table with messages rendered 1-based."""
        lines = []
        for idx, z in enumerate(self.table):
            coords = self.input_space.coords(idx)
            lhs = ",".join(str(c + 1) for c in coords)
            lines.append(f"({lhs}) -> {z + 1}")
        return "\n".join(lines)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DecisionFunction):
            return NotImplemented
        return (
            self.input_space == other.input_space
            and self.output_card == other.output_card
            and np.array_equal(self.table, other.table)
        )

    def __hash__(self) -> int:
        return hash((self.input_space, self.output_card, self.table.tobytes()))


def identity(n: int) -> DecisionFunction:
    return DecisionFunction.from_table((n,), n, np.arange(n))


def constant(dims: Sequence[int], output_card: int, value: int = 0) -> DecisionFunction:
    space = InputSpace(tuple(dims))
    return DecisionFunction(space, output_card, np.full(space.size, value))


def and_relay(n_inputs: int = 2) -> DecisionFunction:
    """Binary AND of ``n_inputs`` binary messages."""
    space = InputSpace((2,) * n_inputs)
    return DecisionFunction(space, 2, (np.arange(space.size) == space.size - 1).astype(int))


def threshold_function(n: int, cut: int) -> DecisionFunction:
    """One-bit quantizer: cells ``< cut`` send 0, the rest send 1."""
    return DecisionFunction.from_table((n,), 2, (np.arange(n) >= cut).astype(int))


def local_map_error(pmf: np.ndarray, priors: np.ndarray, table: np.ndarray, card: int) -> float:
    """Bayes error of deciding ``H`` from ``gamma(x)`` alone."""
    weighted = priors[:, None] * pmf
    out = np.zeros((len(priors), card))
    for j in range(len(priors)):
        out[j] = np.bincount(table, weights=weighted[j], minlength=card)
    return float(1.0 - out.max(axis=0).sum())


def best_single_threshold(pmf: np.ndarray, priors: np.ndarray) -> int:
    """Cut point ``c`` in ``1..n-1`` minimising the local MAP error (smallest on ties)."""
    weighted = priors[:, None] * pmf
    below = np.cumsum(weighted, axis=1)[:, :-1]  # mass of cells < c for c = 1..n-1
    above = weighted.sum(axis=1, keepdims=True) - below
    errors = 1.0 - below.max(axis=0) - above.max(axis=0)
    return int(np.argmin(errors)) + 1


def _split_region(cells: np.ndarray, groups: int, mass: np.ndarray | None) -> np.ndarray:
    """Group label (0 = outermost) for ``cells`` ordered from the axis edge inward."""
    if mass is None or mass[cells].sum() <= 0:
        # np.array_split hands the leftover cells to the first (outer) groups
        labels = np.empty(len(cells), dtype=np.int64)
        for g, chunk in enumerate(np.array_split(np.arange(len(cells)), groups)):
            labels[chunk] = g
        return labels
    w = mass[cells] / mass[cells].sum()
    centre = np.cumsum(w) - 0.5 * w
    return np.minimum((centre * groups).astype(np.int64), groups - 1)


LEAF_SPLITS = ("count", "mass")


def likelihood_ratio_order(pmf: np.ndarray) -> np.ndarray:
    """Cells sorted by ``P_1(x) / P_0(x)``, ascending; ties keep index order."""
    with np.errstate(divide="ignore", invalid="ignore"):
        llr = np.log(pmf[1]) - np.log(pmf[0])
    # a cell impossible under both hypotheses carries no evidence either way
    return np.argsort(np.nan_to_num(llr, nan=0.0, posinf=np.inf, neginf=-np.inf), kind="stable")


def init_leaf_threshold(
    model: HypothesisModel, leaf: int, rate_bits: int, split: str = "count"
) -> DecisionFunction:
    """Locally optimal one-bit threshold, refined to ``2**rate_bits`` cells.

    Cells are ranked by likelihood ratio (for a monotone ratio, such as the
    antipodal Gaussian grid, this is the index order) and the best single
    cut of that ranking is taken.  For ``rate_bits > 1`` each side of the
    cut is split into ``2**(rate_bits-1)`` contiguous groups of the ranking.
    ``split="count"`` gives the groups (nearly) equal numbers of cells,
    leftovers going to the groups at the two ends so that symmetric grids
    stay mirror-symmetric.  ``split="mass"`` balances the prior-weighted
    observation mass instead.
    """
    if model.num_hypotheses != 2:
        raise UnsupportedHypothesisCount(
            f"threshold initialisation needs M=2, got M={model.num_hypotheses}"
        )
    if split not in LEAF_SPLITS:
        raise ValueError(f"unknown split rule {split!r}")
    pmf = model.leaf_pmf(leaf)
    n = pmf.shape[1]
    card = 2**rate_bits
    if n == 1:
        return constant((1,), card)
    order = likelihood_ratio_order(pmf)
    ranked = pmf[:, order]
    cut = best_single_threshold(ranked, model.priors)
    mass = model.priors @ ranked if split == "mass" else None
    labels = np.empty(n, dtype=np.int64)
    if rate_bits == 1:
        labels[:] = np.arange(n) >= cut
    else:
        half = card // 2
        lower = np.arange(cut)
        labels[lower] = _split_region(lower, half, mass)
        upper = np.arange(n - 1, cut - 1, -1)
        labels[upper] = card - 1 - _split_region(upper, half, mass)
    table = np.empty(n, dtype=np.int64)
    table[order] = labels
    return DecisionFunction.from_table((n,), card, table)


def init_random(input_space: InputSpace, output_card: int, seed) -> DecisionFunction:
    """Table with i.i.d. uniform entries from a seeded generator."""
    rng = np.random.default_rng(seed)
    return DecisionFunction(input_space, output_card, rng.integers(0, output_card, input_space.size))


def initial_strategies(
    net: TreeNetwork, model: HypothesisModel, seed: int, split: str = "count"
) -> dict[int, DecisionFunction]:
    """Threshold leaves (random when M > 2) and random relays.

    Node ``i`` draws from the stream ``(seed, i)``, so changing one relay's
    shape never perturbs another's table.
    """
    out: dict[int, DecisionFunction] = {}
    for m in net.non_fc_nodes:
        space = InputSpace(net.input_dims(m))
        card = net.alphabet_size(m)
        if net.is_leaf(m) and model.num_hypotheses == 2:
            out[m] = init_leaf_threshold(model, m, net.rate_bits(m), split)
        else:
            out[m] = init_random(space, card, [seed, m])
    return out


# -- serialisation --------------------------------------------------------------

def strategies_to_dict(strategies: Mapping[int, DecisionFunction], metadata: Mapping | None = None) -> dict:
    """``{"metadata": {...}, "strategies": {node_id: [table...]}}`` (0-based messages)."""
    return {
        "metadata": dict(metadata or {}),
        "strategies": {str(m): df.table.tolist() for m, df in sorted(strategies.items())},
    }


def strategies_from_dict(doc: Mapping, net: TreeNetwork) -> dict[int, DecisionFunction]:
    out = {}
    for key, table in doc["strategies"].items():
        m = int(key)
        out[m] = DecisionFunction.from_table(net.input_dims(m), net.alphabet_size(m), table)
    return out


def save_strategies(path: str | Path, strategies, metadata=None) -> None:
    with open(path, "w") as fh:
        json.dump(strategies_to_dict(strategies, metadata), fh, indent=1)
