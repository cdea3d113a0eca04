"""Bootstrap-calibrated mode-specific tests and the adaptive min-p test."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bootstrap import BootstrapConfig, run_bootstrap
from .core import (
    ADAPTIVE_NORMS,
    CusumProcess,
    NormSpec,
    as_series,
    cusum_process,
    norm_curve,
)
from .errors import ConfigError

__all__ = [
    "SingleTestResult",
    "AdaptiveTestResult",
    "empirical_quantile",
    "bootstrap_pvalue",
    "mode_specific_test",
    "adaptive_test",
    "low_cost_adaptive_test",
    "adaptive_test_variants",
]


@dataclass(frozen=True, eq=False)
class SingleTestResult:
    spec: NormSpec
    statistic: float
    pvalue: float
    quantile: float
    argmax_epoch: int
    alpha: float
    bootstrap: np.ndarray = field(repr=False)
    curve: np.ndarray = field(repr=False)
    curve_start: int
    degenerate: bool = False

    @property
    def reject(self) -> bool:
        """p-value rule; authoritative for verdicts."""
        return not self.degenerate and self.pvalue <= self.alpha

    @property
    def reject_by_quantile(self) -> bool:
        return not self.degenerate and self.statistic >= self.quantile

    @property
    def B(self) -> int:
        return self.bootstrap.shape[0]

    def summary(self) -> dict:
        return {
            "norm": self.spec.label,
            "statistic": self.statistic,
            "pvalue": self.pvalue,
            "quantile": self.quantile,
            "argmax_epoch": self.argmax_epoch,
            "reject": self.reject,
            "reject_by_quantile": self.reject_by_quantile,
        }


@dataclass(frozen=True, eq=False)
class AdaptiveTestResult:
    per_norm: tuple[SingleTestResult, ...]
    t_ad: float
    p_ad: float
    selected: NormSpec
    minimizers: tuple[NormSpec, ...]
    alpha: float
    calibration: str
    bootstrap_ad: np.ndarray = field(repr=False)
    degenerate: bool = False

    @property
    def reject(self) -> bool:
        return not self.degenerate and self.p_ad <= self.alpha

    @property
    def estimated_epoch(self) -> int:
        return self.result_for(self.selected).argmax_epoch

    def result_for(self, spec: NormSpec) -> SingleTestResult:
        for r in self.per_norm:
            if r.spec == spec:
                return r
        raise KeyError(spec)

    def summary(self) -> dict:
        return {
            "calibration": self.calibration,
            "t_ad": self.t_ad,
            "p_ad": self.p_ad,
            "selected": self.selected.label,
            "minimizers": [s.label for s in self.minimizers],
            "estimated_epoch": self.estimated_epoch,
            "reject": self.reject,
            "degenerate": self.degenerate,
            "per_norm": [r.summary() for r in self.per_norm],
        }


def empirical_quantile(sample, level: float) -> float:
    """``inf{t : #{values <= t} / B >= level}``, i.e. the ceil(level B)-th order statistic."""
    values = np.sort(np.asarray(sample, dtype=np.float64).ravel())
    B = values.shape[0]
    if B == 0:
        raise ValueError("empirical_quantile of an empty sample")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    # guard against level * B landing a hair above an integer
    k = max(1, math.ceil(level * B - 1e-9))
    return float(values[min(k, B) - 1])


def bootstrap_pvalue(sample, statistic: float) -> float:
    sample = np.asarray(sample)
    return int(np.count_nonzero(sample > statistic)) / sample.shape[0]


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def _is_degenerate(x) -> bool:
    return bool(np.ptp(x.data, axis=0).max() == 0.0)


def _single(spec, c: CusumProcess, boot, alpha, degenerate) -> SingleTestResult:
    curve = norm_curve(c, spec)
    i = int(np.argmax(curve))
    stat = float(curve[i])
    return SingleTestResult(
        spec=spec,
        statistic=stat,
        pvalue=1.0 if degenerate else bootstrap_pvalue(boot, stat),
        quantile=empirical_quantile(boot, 1.0 - alpha),
        argmax_epoch=c.start + i,
        alpha=alpha,
        bootstrap=boot,
        curve=curve,
        curve_start=c.start,
        degenerate=degenerate,
    )


def mode_specific_test(
    x,
    spec: NormSpec,
    nu: int,
    alpha: float = 0.05,
    cfg: BootstrapConfig = BootstrapConfig(),
    *,
    gamma: float = 0.5,
    threads: int = 1,
) -> SingleTestResult:
    """Test for a mean change with one [mode, q] norm.

    The p-value is ``#{b : T^b > T} / B``. Series without any variation
    short-circuit to a p-value of 1 and are flagged ``degenerate``.
    """
    x = as_series(x)
    alpha = _check_alpha(alpha)
    c = cusum_process(x, nu, gamma)
    boot = run_bootstrap(x, nu, (spec,), cfg, stream=0, gamma=gamma, threads=threads)
    return _single(spec, c, boot[spec], alpha, _is_degenerate(x))


def _first_world(x, nu, alpha, cfg, norms, gamma, threads):
    norms = tuple(norms)
    if not norms:
        raise ConfigError("at least one norm is required")
    if len(set(norms)) != len(norms):
        raise ConfigError("duplicate norms")
    # fixed evaluation order keeps the tie-break deterministic
    norms = tuple(n for n in ADAPTIVE_NORMS if n in norms)
    c = cusum_process(x, nu, gamma)
    boot = run_bootstrap(x, nu, norms, cfg, stream=0, gamma=gamma, threads=threads)
    degenerate = _is_degenerate(x)
    return tuple(_single(s, c, boot[s], alpha, degenerate) for s in norms), degenerate


def _combine(singles, ref_pvalues, alpha, calibration, degenerate) -> AdaptiveTestResult:
    pvals = np.array([r.pvalue for r in singles])
    t_ad = float(pvals.min())
    minimizers = tuple(r.spec for r in singles if r.pvalue == t_ad)
    t_ad_b = np.min(np.vstack(ref_pvalues), axis=0)
    t_ad_b.setflags(write=False)
    p_ad = 1.0 if degenerate else int(np.count_nonzero(t_ad_b < t_ad)) / t_ad_b.shape[0]
    return AdaptiveTestResult(
        per_norm=singles,
        t_ad=t_ad,
        p_ad=p_ad,
        selected=minimizers[0],
        minimizers=minimizers,
        alpha=alpha,
        calibration=calibration,
        bootstrap_ad=t_ad_b,
        degenerate=degenerate,
    )


def _count_greater(reference_sorted: np.ndarray, values: np.ndarray) -> np.ndarray:
    return reference_sorted.shape[0] - np.searchsorted(reference_sorted, values, side="right")


def _parallel(x, nu, alpha, cfg, singles, gamma, threads, degenerate):
    norms = tuple(r.spec for r in singles)
    second = run_bootstrap(x, nu, norms, cfg, stream=1, gamma=gamma, threads=threads)
    ref = [
        _count_greater(np.sort(second[r.spec]), r.bootstrap) / cfg.B for r in singles
    ]
    return _combine(singles, ref, alpha, "parallel", degenerate)


def _low_cost(cfg, singles, alpha, degenerate):
    if cfg.B < 2:
        raise ConfigError("the low-cost bootstrap needs B >= 2")
    # a replicate is never strictly greater than itself, so counting against
    # the full first world equals leaving it out
    ref = [
        _count_greater(np.sort(r.bootstrap), r.bootstrap) / (cfg.B - 1) for r in singles
    ]
    return _combine(singles, ref, alpha, "low-cost", degenerate)


def adaptive_test(
    x,
    nu: int,
    alpha: float = 0.05,
    cfg: BootstrapConfig = BootstrapConfig(),
    *,
    norms=ADAPTIVE_NORMS,
    gamma: float = 0.5,
    threads: int = 1,
) -> AdaptiveTestResult:
    """Adaptive min-p test calibrated by the parallel bootstrap.

    A second, independent set of B replicates provides the reference
    distribution for each first-world replicate's p-values, from which the
    bootstrap distribution of the minimum p-value is formed.
    """
    x = as_series(x)
    alpha = _check_alpha(alpha)
    singles, degenerate = _first_world(x, nu, alpha, cfg, norms, gamma, threads)
    return _parallel(x, nu, alpha, cfg, singles, gamma, threads, degenerate)


def low_cost_adaptive_test(
    x,
    nu: int,
    alpha: float = 0.05,
    cfg: BootstrapConfig = BootstrapConfig(),
    *,
    norms=ADAPTIVE_NORMS,
    gamma: float = 0.5,
    threads: int = 1,
) -> AdaptiveTestResult:
    """Adaptive test where each replicate is referred to the other B - 1."""
    x = as_series(x)
    alpha = _check_alpha(alpha)
    if cfg.B < 2:
        raise ConfigError("the low-cost bootstrap needs B >= 2")
    singles, degenerate = _first_world(x, nu, alpha, cfg, norms, gamma, threads)
    return _low_cost(cfg, singles, alpha, degenerate)


def adaptive_test_variants(
    x,
    nu: int,
    alpha: float = 0.05,
    cfg: BootstrapConfig = BootstrapConfig(),
    *,
    norms=ADAPTIVE_NORMS,
    gamma: float = 0.5,
    threads: int = 1,
) -> tuple[AdaptiveTestResult, AdaptiveTestResult]:
    """Parallel and low-cost results sharing a single first bootstrap world."""
    x = as_series(x)
    alpha = _check_alpha(alpha)
    singles, degenerate = _first_world(x, nu, alpha, cfg, norms, gamma, threads)
    return (
        _parallel(x, nu, alpha, cfg, singles, gamma, threads, degenerate),
        _low_cost(cfg, singles, alpha, degenerate),
    )
