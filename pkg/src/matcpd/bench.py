"""Monte Carlo harness for empirical size, power and multiple change-point estimation.

Each replication draws its data seed and its bootstrap seed from the master
seed and the replication index only. Different cells of a grid (covariance,
scenario, magnitude) therefore see common random numbers, which makes
comparisons across cells much less noisy than independent draws would be.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .bootstrap import BootstrapConfig, derive_seed
from .core import ADAPTIVE_NORMS, mad_scale
from .errors import ConfigError
from .inference import adaptive_test_variants
from .segmentation import adjusted_rand_index, binary_segmentation, partition_from_changepoints
from .simulate import (
    CovarianceSpec,
    ScenarioSpec,
    evenly_spaced,
    generate_series,
    noise_factor,
    scenario_shift,
)

__all__ = [
    "METHODS",
    "DESK_SCALE",
    "FULL_SCALE",
    "default_nu",
    "SizeCell",
    "bench_size",
    "bench_power",
    "bench_estimate",
    "rate_and_se",
]

# columns of the per-replication p-value arrays
METHODS = ("M-adapt", "M-adapt-lowcost", "M-mode1", "M-mode2", "M-dot", "M-max")
DESK_SCALE = {"reps": 500, "B": 200}
FULL_SCALE = {"reps": 1000, "B": 400}
_NU_TABLE = {250: 60, 500: 80}

# seed-path tags
_DATA, _BOOT, _SHIFT = range(3)


def default_nu(n_obs: int) -> int:
    """60 for N = 250, 80 for N = 500, otherwise floor(0.2 N)."""
    return _NU_TABLE.get(n_obs, max(1, int(0.2 * n_obs)))


def rate_and_se(reject: np.ndarray) -> tuple[float, float]:
    """Rejection rate and its binomial Monte Carlo standard error."""
    reject = np.asarray(reject, dtype=bool)
    r = reject.size
    rate = float(reject.mean()) if r else math.nan
    se = math.sqrt(rate * (1.0 - rate) / r) if r else math.nan
    return rate, se


def _map(fn, items, threads: int) -> list:
    if threads <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _pvalues(x, nu, alpha, cfg, gamma) -> np.ndarray:
    par, low = adaptive_test_variants(x, nu, alpha, cfg, gamma=gamma)
    return np.array([par.p_ad, low.p_ad, *(par.result_for(s).pvalue for s in ADAPTIVE_NORMS)])


def _table_rows(pvals: np.ndarray, alpha: float, extra: dict) -> list[dict]:
    rows = []
    for m, name in enumerate(METHODS):
        rate, se = rate_and_se(pvals[:, m] <= alpha)
        rows.append({**extra, "method": name, "rate": rate, "se": se, "reps": int(pvals.shape[0])})
    return rows


@dataclass(frozen=True)
class SizeCell:
    N: int = 250
    p1: int = 5
    p2: int = 10
    covariance: CovarianceSpec = CovarianceSpec()
    noise: str = "iid"
    ar_rho: float = 0.0
    nu: int | None = None

    @property
    def resolved_nu(self) -> int:
        return default_nu(self.N) if self.nu is None else int(self.nu)

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "p1": self.p1,
            "p2": self.p2,
            "covariance": self.covariance.to_dict(),
            "noise": self.noise,
            "ar_rho": self.ar_rho,
            "nu": self.resolved_nu,
        }


def bench_size(
    cells,
    reps: int = DESK_SCALE["reps"],
    B: int = DESK_SCALE["B"],
    alpha: float = 0.05,
    seed: int = 0,
    *,
    scheme=None,
    gamma: float = 0.5,
    mad: bool = True,
    threads: int = 1,
) -> dict:
    """Empirical size under H0 for every cell.

    Returns
    -------
    dict with ``pvalues`` (one (reps, len(METHODS)) array per cell, in cell
    order) and ``table`` (rows of rejection rate and MC standard error).
    """
    if reps < 1:
        raise ConfigError("reps must be >= 1")
    base = BootstrapConfig(B=B) if scheme is None else BootstrapConfig(B=B, scheme=scheme)
    pvalues, table = [], []
    for cell in cells:
        spec = ScenarioSpec(
            cell.N,
            cell.p1,
            cell.p2,
            covariance=cell.covariance,
            noise=cell.noise,
            ar_rho=cell.ar_rho,
        )
        chol = noise_factor(spec)
        nu = cell.resolved_nu

        def one(r, spec=spec, chol=chol, nu=nu):
            x = generate_series(replace(spec, seed=derive_seed(seed, _DATA, r)), chol)
            if mad:
                x, _ = mad_scale(x)
            return _pvalues(x, nu, alpha, base.with_seed(derive_seed(seed, _BOOT, r)), gamma)

        pv = np.array(_map(one, range(reps), threads))
        pvalues.append(pv)
        table.extend(_table_rows(pv, alpha, {"cell": cell.to_dict()}))
    return {"pvalues": pvalues, "table": table}


def bench_power(
    scenarios,
    magnitudes: dict,
    reps: int = 300,
    B: int = DESK_SCALE["B"],
    alpha: float = 0.05,
    seed: int = 0,
    *,
    N: int = 250,
    p1: int = 20,
    p2: int = 20,
    u: int | None = None,
    covariance: CovarianceSpec = CovarianceSpec("compound"),
    nu: int | None = None,
    gamma: float = 0.5,
    mad: bool = True,
    threads: int = 1,
) -> dict:
    """Rejection rates over a magnitude grid for each shift scenario.

    ``magnitudes`` maps scenario name to its grid. The a = 0 cell is the
    same null experiment for every scenario, so it is run once and shared.

    Returns
    -------
    dict with ``pvalues[(scenario, a)]`` arrays of shape (reps, len(METHODS))
    and ``table`` rows.
    """
    u = N // 2 if u is None else int(u)
    nu = default_nu(N) if nu is None else int(nu)
    base = BootstrapConfig(B=B)
    null = ScenarioSpec(N, p1, p2, covariance=covariance)
    chol = noise_factor(null)
    cache: dict = {}

    def run(spec):
        def one(r):
            x = generate_series(replace(spec, seed=derive_seed(seed, _DATA, r)), chol)
            if mad:
                x, _ = mad_scale(x)
            return _pvalues(x, nu, alpha, base.with_seed(derive_seed(seed, _BOOT, r)), gamma)

        return np.array(_map(one, range(reps), threads))

    pvalues, table = {}, []
    for name in scenarios:
        for a in magnitudes[name]:
            a = float(a)
            if a == 0.0:
                if "null" not in cache:
                    cache["null"] = run(null)
                pv = cache["null"]
            else:
                shift = scenario_shift(name, a, derive_seed(seed, _SHIFT))
                pv = run(replace(null, change_points=((u, shift),)))
            pvalues[(name, a)] = pv
            table.extend(_table_rows(pv, alpha, {"scenario": name, "magnitude": a}))
    return {"pvalues": pvalues, "table": table}


def bench_estimate(
    scenario: str | None,
    magnitude: float,
    reps: int = 200,
    B: int = DESK_SCALE["B"],
    alpha: float = 0.05,
    seed: int = 0,
    *,
    N: int = 250,
    p1: int = 20,
    p2: int = 20,
    n_changes: int = 3,
    nu: int = 40,
    covariance: CovarianceSpec = CovarianceSpec(),
    gamma: float = 0.5,
    mad: bool = True,
    threads: int = 1,
) -> dict:
    """Binary segmentation with evenly spaced change points.

    ``scenario=None`` (or a zero magnitude) gives the no-change experiment.
    Every change point raises the mean by ``magnitude`` on the scenario's
    cells. Random scenarios draw a fresh cell set at each change point;
    reusing one set would stack all steps on the same few series, whose
    MAD then grows with the magnitude and caps the rescaled step size.

    Returns
    -------
    dict with per-replication ``counts``, ``ari`` and ``change_points``,
    and a one-row ``table`` with correct-count frequency and mean ARI.
    """
    null = scenario is None or magnitude == 0.0
    truth = () if null else evenly_spaced(N, n_changes)
    cps = ()
    if not null:
        cps = tuple(
            (t, scenario_shift(scenario, float(magnitude), derive_seed(seed, _SHIFT, k)))
            for k, t in enumerate(truth)
        )
    spec = ScenarioSpec(N, p1, p2, cps, covariance=covariance)
    chol = noise_factor(spec)
    labels_true = partition_from_changepoints(N, truth)
    base = BootstrapConfig(B=B)

    def one(r):
        x = generate_series(replace(spec, seed=derive_seed(seed, _DATA, r)), chol)
        if mad:
            x, _ = mad_scale(x)
        seg = binary_segmentation(x, nu, alpha, base.with_seed(derive_seed(seed, _BOOT, r)), gamma=gamma)
        ari = adjusted_rand_index(labels_true, partition_from_changepoints(N, seg.change_points))
        return seg.change_points, ari

    out = _map(one, range(reps), threads)
    found = [c for c, _ in out]
    counts = np.array([len(c) for c in found])
    ari = np.array([a for _, a in out])
    correct, correct_se = rate_and_se(counts == len(truth))
    values, freq = np.unique(counts, return_counts=True)
    row = {
        "scenario": scenario if not null else "none",
        "magnitude": 0.0 if null else float(magnitude),
        "true_changepoints": list(truth),
        "correct_count_freq": correct,
        "correct_count_se": correct_se,
        "mean_ari": float(ari.mean()),
        "ari_se": float(ari.std(ddof=1) / math.sqrt(reps)) if reps > 1 else None,
        "modal_count": int(values[np.argmax(freq)]),
        "reps": reps,
    }
    return {"counts": counts, "ari": ari, "change_points": found, "table": [row]}
