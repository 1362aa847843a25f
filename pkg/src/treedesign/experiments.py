"""SNR sweeps over builtin or file topologies, and the self-validation run."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .designer import DesignConfig, default_schedule, design_network, and_relay_baseline
from .errors import BudgetExceeded, TreeDesignError
from .fusion import network_error_probability, restricted_error_probability
from .model import centralized_linear_pe, gaussian_model, load_model
from .oracle import (
    OracleBudget,
    bruteforce_chain_matrix,
    joint_bruteforce_pe,
    random_model,
    random_network,
    random_strategies,
)
from .propagation import Propagator, RestrictedModel, TransitionMatrix
from .quantizer import strategies_to_dict
from .topology import TreeNetwork, load_topology, parallel, tree22

CSV_COLUMNS = [
    "topology",
    "R_l",
    "R_r",
    "snr_db",
    "restart_best",
    "cycles",
    "pe",
    "log10_pe",
    "baseline_linear_log10_pe",
    "baseline_and_relay_log10_pe",
]


class ConfigError(TreeDesignError, ValueError):
    pass


@dataclass
class ExperimentConfig:
    topology: str = "tree22"
    leaf_rate: int | None = None
    relay_rate: int | None = None
    rate: int | None = None
    snr_db_list: Sequence[float] = (0.0,)
    priors: Sequence[float] = (0.5, 0.5)
    bins: int = 400
    half_range: float = 10.0
    restarts: int = 10
    seed: int = 0
    output_path: str | None = None
    model_path: str | None = None
    schedule: str = "leaves-first"
    workers: int | None = None
    dump_strategies: str | None = None

    def __post_init__(self):
        if not len(self.snr_db_list) and self.model_path is None:
            raise ConfigError("SNR list is empty")
        for r in (self.leaf_rate, self.relay_rate, self.rate):
            if r is not None and r < 1:
                raise ConfigError(f"rates must be >= 1, got {r}")
        if self.restarts < 1:
            raise ConfigError("restarts must be >= 1")
        if self.schedule not in ("leaves-first", "relays-first"):
            raise ConfigError(f"unknown schedule {self.schedule!r}")


@dataclass
class ResolvedTopology:
    name: str
    net: TreeNetwork
    leaf_rate: int | None
    relay_rate: int | None
    builtin: bool


def _uniform(values) -> int | None:
    values = set(values)
    return values.pop() if len(values) == 1 else None


def resolve_topology(cfg: ExperimentConfig) -> ResolvedTopology:
    name = cfg.topology
    if name == "tree22":
        rl = cfg.leaf_rate or cfg.rate or 1
        rr = cfg.relay_rate or cfg.rate or 1
        return ResolvedTopology(name, tree22(rl, rr, cfg.bins), rl, rr, True)
    match = re.fullmatch(r"parallel(\d+)", name)
    if match:
        r = cfg.rate or cfg.leaf_rate or 1
        return ResolvedTopology(name, parallel(int(match.group(1)), r, cfg.bins), r, None, True)
    if not os.path.exists(name):
        raise ConfigError(f"unknown topology {name!r}: not a builtin name or an existing file")
    net = load_topology(name)
    if cfg.model_path is None and any(net.obs_size(l) != cfg.bins for l in net.leaves):
        raise ConfigError("leaf obs_size in the topology file must equal --bins for the Gaussian model")
    return ResolvedTopology(
        os.path.basename(name),
        net,
        _uniform(net.rate_bits(l) for l in net.leaves),
        _uniform(net.rate_bits(r) for r in net.relays) if net.relays else None,
        False,
    )


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _run_point(args) -> tuple[dict, dict]:
    cfg, topo, snr = args
    net = topo.net
    if cfg.model_path is not None:
        model = load_model(cfg.model_path, net)
    else:
        model = gaussian_model(net, snr, cfg.bins, cfg.half_range, cfg.priors)
    schedule = default_schedule(net)
    if cfg.schedule == "relays-first":
        schedule = tuple(net.relays) + tuple(net.leaves)
    res = design_network(
        net, model, DesignConfig(node_schedule=schedule, restarts=cfg.restarts, seed=cfg.seed)
    )
    equal_binary = len(cfg.priors) == 2 and cfg.priors[0] == cfg.priors[1]
    linear = and_relay = None
    if topo.builtin and equal_binary and snr is not None:
        linear = math.log10(centralized_linear_pe(snr, len(net.leaves)))
    if topo.name == "tree22" and topo.leaf_rate == 1 and topo.relay_rate == 1:
        and_relay = math.log10(and_relay_baseline(net, model))
    row = {
        "topology": topo.name,
        "R_l": topo.leaf_rate,
        "R_r": topo.relay_rate,
        "snr_db": snr,
        "restart_best": res.restart_index,
        "cycles": res.cycles_run,
        "pe": res.final_pe,
        "log10_pe": math.log10(res.final_pe) if res.final_pe > 0 else -math.inf,
        "baseline_linear_log10_pe": linear,
        "baseline_and_relay_log10_pe": and_relay,
    }
    meta = {
        "topology": topo.name,
        "snr_db": snr,
        "seed": cfg.seed,
        "restarts": cfg.restarts,
        "rates": {str(m): net.rate_bits(m) for m in net.non_fc_nodes},
        "pe": res.final_pe,
    }
    return row, strategies_to_dict(res.strategies, meta)


def run_sweep(cfg: ExperimentConfig) -> list[dict]:
    """Design the network at every SNR point; rows come back in input order."""
    topo = resolve_topology(cfg)
    snrs = [None] if cfg.model_path is not None else [float(s) for s in cfg.snr_db_list]
    jobs = [(cfg, topo, s) for s in snrs]
    workers = cfg.workers or os.cpu_count() or 1
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_run_point, jobs))
    else:
        results = [_run_point(j) for j in jobs]
    rows = [r for r, _ in results]
    if cfg.output_path:
        with open(cfg.output_path, "w", newline="") as fh:
            fh.write(rows_to_csv(rows))
    if cfg.dump_strategies:
        with open(cfg.dump_strategies, "w") as fh:
            json.dump([d for _, d in results], fh, indent=1)
    return rows


def rows_to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


# -- self validation ------------------------------------------------------------

@dataclass
class SuiteResult:
    name: str
    checked: int = 0
    failures: list[str] = field(default_factory=list)
    skipped: int = 0

    @property
    def passed(self) -> bool:
        return not self.failures and self.checked > 0


def corrupt_channel(rm: RestrictedModel) -> RestrictedModel:
    """Negative-control fault: reverse the channel columns under ``H_0``."""
    mats = rm.channel.matrices.copy()
    mats[0] = mats[0][:, ::-1]
    return RestrictedModel(
        rm.node, rm.y_pmf, rm.v_pmf, TransitionMatrix(mats), rm.priors, rm.target_output_card, rm.y_dims
    )


def _corpus(n: int, seed: int):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        net = random_network(rng)
        model = random_model(rng, net, int(rng.integers(2, 4)))
        yield net, model, random_strategies(rng, net)


def run_validation(
    budget: OracleBudget = OracleBudget(),
    instances: int = 100,
    descent_seeds: int = 10,
    fault: Callable[[RestrictedModel], RestrictedModel] | None = None,
    tol: float = 1e-12,
    seed: int = 2024,
) -> list[SuiteResult]:
    """Oracle-equivalence, restricted-model consistency and monotone-descent suites."""
    oracle = SuiteResult("oracle-equivalence")
    consistency = SuiteResult("consistency")
    descent = SuiteResult("monotone-descent")
    for i, (net, model, strategies) in enumerate(_corpus(instances, seed)):
        prop = Propagator(net, model, strategies)
        pe = network_error_probability(net, model, prop)
        try:
            brute = joint_bruteforce_pe(net, model, strategies, budget)
        except BudgetExceeded:
            oracle.skipped += 1
        else:
            oracle.checked += 1
            if abs(brute - pe) > tol:
                oracle.failures.append(f"instance {i}: brute {brute!r} vs recursion {pe!r}")
        for m in net.non_fc_nodes:
            rm = prop.restricted_model(m)
            try:
                chain = bruteforce_chain_matrix(net, model, strategies, m, budget)
            except BudgetExceeded:
                oracle.skipped += 1
            else:
                oracle.checked += 1
                if np.max(np.abs(chain - rm.channel.matrices)) > tol:
                    oracle.failures.append(f"instance {i} node {m}: chain matrix differs")
            if fault is not None:
                rm = fault(rm)
            consistency.checked += 1
            rpe = restricted_error_probability(rm, strategies[m])
            if abs(rpe - pe) > tol:
                consistency.failures.append(f"instance {i} node {m}: restricted {rpe!r} vs network {pe!r}")
    for s in range(descent_seeds):
        for k, (net, model, _) in enumerate(_corpus(5, seed + 1 + s)):
            res = design_network(net, model, DesignConfig(restarts=2, seed=s))
            trace = [res.initial_pe] + res.pe_trace
            descent.checked += 1
            steps = np.diff(trace)
            if np.any(steps > tol):
                descent.failures.append(f"seed {s} net {k}: Pe rose by {steps.max()!r}")
    return [oracle, consistency, descent]


def format_report(results: Sequence[SuiteResult]) -> str:
    lines = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{status} {r.name}: {r.checked} checks, {len(r.failures)} failures, {r.skipped} skipped")
        lines += [f"    {f}" for f in r.failures[:10]]
    return "\n".join(lines)
