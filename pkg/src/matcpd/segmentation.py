"""Change-point location, binary segmentation and partition scoring."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bootstrap import BootstrapConfig, derive_seed
from .core import ADAPTIVE_NORMS, NormSpec, as_series, check_nu
from .errors import NotRejectedError
from .inference import (
    AdaptiveTestResult,
    SingleTestResult,
    adaptive_test,
    mode_specific_test,
)

__all__ = [
    "ChangePointEstimate",
    "NodeRecord",
    "Segmentation",
    "cluster_epochs",
    "estimate_changepoint",
    "binary_segmentation",
    "partition_from_changepoints",
    "adjusted_rand_index",
    "MAX_DEPTH",
]

MAX_DEPTH = 64


@dataclass(frozen=True)
class ChangePointEstimate:
    epoch: int
    source_norms: tuple[NormSpec, ...]
    aggregated: bool


def _round_half_down(value: float) -> int:
    return math.ceil(value - 0.5)


def cluster_epochs(epochs, threshold: int = 1) -> int:
    """Aggregate candidate epochs into one estimate.

    Sorted epochs no further than ``threshold`` apart are chained into a
    cluster. The largest cluster wins (ties go to the cluster with the
    smaller mean) and its mean is rounded half down.
    """
    pts = sorted(int(e) for e in epochs)
    if not pts:
        raise ValueError("no epochs to aggregate")
    clusters = [[pts[0]]]
    for e in pts[1:]:
        if e - clusters[-1][-1] <= threshold:
            clusters[-1].append(e)
        else:
            clusters.append([e])
    best = min(clusters, key=lambda c: (-len(c), sum(c) / len(c)))
    return _round_half_down(sum(best) / len(best))


def estimate_changepoint(result, threshold: int = 1) -> ChangePointEstimate:
    """Location estimate from a rejecting test.

    A single-norm result gives the argmax of its CUSUM norm curve. For the
    adaptive test, the argmax epochs of every norm attaining the smallest
    p-value are aggregated with :func:`cluster_epochs`.
    """
    if not result.reject:
        raise NotRejectedError("the test did not reject; no change point to locate")
    if isinstance(result, SingleTestResult):
        return ChangePointEstimate(result.argmax_epoch, (result.spec,), False)
    if not isinstance(result, AdaptiveTestResult):
        raise TypeError(f"unsupported result type {type(result).__name__}")
    epochs = [result.result_for(s).argmax_epoch for s in result.minimizers]
    if len(set(epochs)) == 1:
        return ChangePointEstimate(epochs[0], result.minimizers, False)
    return ChangePointEstimate(cluster_epochs(epochs, threshold), result.minimizers, True)


@dataclass(frozen=True, eq=False)
class NodeRecord:
    start: int
    end: int
    path: tuple[int, ...]
    seed: int
    result: AdaptiveTestResult | SingleTestResult | None
    changepoint: int | None

    def summary(self) -> dict:
        return {
            "start": self.start,
            "end": self.end,
            "path": list(self.path),
            "seed": self.seed,
            "tested": self.result is not None,
            "changepoint": self.changepoint,
            "result": None if self.result is None else self.result.summary(),
        }


@dataclass(frozen=True, eq=False)
class Segmentation:
    change_points: tuple[int, ...]
    segment_means: np.ndarray = field(repr=False)
    per_node: tuple[NodeRecord, ...] = field(repr=False)

    @property
    def n_changepoints(self) -> int:
        return len(self.change_points)


def binary_segmentation(
    x,
    nu: int,
    alpha: float = 0.05,
    cfg: BootstrapConfig = BootstrapConfig(),
    *,
    norms=ADAPTIVE_NORMS,
    gamma: float = 0.5,
    threshold: int = 1,
    threads: int = 1,
) -> Segmentation:
    """Recursive binary segmentation driven by the adaptive test.

    An interval holding the observations ``start+1 .. end`` is tested only
    when it has at least ``2 nu + 2`` of them. Each node draws its bootstrap
    seed from the master seed and its path in the recursion tree (0 = left,
    1 = right), so the output does not depend on traversal order.
    """
    x = as_series(x)
    check_nu(x.N, nu)
    norms = tuple(norms)
    nodes: list[NodeRecord] = []
    cps: list[int] = []
    # depth-first with an explicit stack; node seeds make order irrelevant
    stack = [(0, x.N, ())]
    while stack:
        s, e, path = stack.pop()
        seed = derive_seed(cfg.master_seed, *path) if path else cfg.master_seed
        if e - s < 2 * nu + 2 or len(path) >= MAX_DEPTH:
            nodes.append(NodeRecord(s, e, path, seed, None, None))
            continue
        sub = x[s:e]
        node_cfg = cfg.with_seed(seed)
        if len(norms) == 1:
            res = mode_specific_test(sub, norms[0], nu, alpha, node_cfg, gamma=gamma, threads=threads)
        else:
            res = adaptive_test(sub, nu, alpha, node_cfg, norms=norms, gamma=gamma, threads=threads)
        if not res.reject:
            nodes.append(NodeRecord(s, e, path, seed, res, None))
            continue
        u = s + estimate_changepoint(res, threshold).epoch
        nodes.append(NodeRecord(s, e, path, seed, res, u))
        cps.append(u)
        stack.append((u, e, path + (1,)))
        stack.append((s, u, path + (0,)))
    cps.sort()
    bounds = [0, *cps, x.N]
    means = np.stack([x.data[a:b].mean(axis=0) for a, b in zip(bounds[:-1], bounds[1:])])
    nodes.sort(key=lambda r: (r.start, r.end))
    return Segmentation(tuple(cps), means, tuple(nodes))


def partition_from_changepoints(n_obs: int, change_points) -> np.ndarray:
    """Segment labels for t = 1..N with segments (0, u1], (u1, u2], ..., (uk, N]."""
    cps = np.asarray(change_points, dtype=np.int64).ravel()
    if cps.size:
        if np.any(np.diff(cps) <= 0):
            raise ValueError("change points must be strictly increasing")
        if cps[0] <= 0 or cps[-1] >= n_obs:
            raise ValueError(f"change points must lie strictly inside (0, {n_obs})")
    return np.searchsorted(cps, np.arange(1, n_obs + 1), side="left")


def _pairs(counts) -> int:
    return sum(int(c) * (int(c) - 1) // 2 for c in np.asarray(counts).ravel())


def adjusted_rand_index(a, b) -> float:
    """Adjusted Rand index between two labelings of the same items.

    Pair counts are exact integers, so the only rounding is the final
    division.
    """
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    if a.shape != b.shape:
        raise ValueError(f"label vectors differ in length: {a.size} vs {b.size}")
    if a.size == 0:
        raise ValueError("empty label vectors")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    index = _pairs(table)
    sum_a = _pairs(table.sum(axis=1))
    sum_b = _pairs(table.sum(axis=0))
    total = _pairs([a.size])
    # (index - sum_a sum_b / total) / ((sum_a + sum_b) / 2 - sum_a sum_b / total), times 2 total
    num = 2 * (index * total - sum_a * sum_b)
    den = (sum_a + sum_b) * total - 2 * sum_a * sum_b
    if den == 0:
        return 1.0
    return num / den
