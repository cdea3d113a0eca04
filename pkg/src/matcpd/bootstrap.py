"""Gaussian multiplier bootstrap for CUSUM statistics.

Multipliers for replicate ``b`` come from a Philox generator keyed by
``(master_seed, stream, b)``, so every replicate is reproducible on its own
and results do not depend on how replicates are scheduled across threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import toeplitz

from . import _kernels
from .core import ADAPTIVE_NORMS, DOT, NormSpec, as_series, check_nu
from .errors import ConfigError, NumericalError

__all__ = [
    "MultiplierScheme",
    "BootstrapConfig",
    "qs_kernel",
    "andrews_bandwidth",
    "toeplitz_theta",
    "cholesky_jitter",
    "replicate_key",
    "derive_seed",
    "draw_multipliers",
    "multiplier_matrix",
    "bootstrap_cusum_at",
    "run_bootstrap",
    "BANDWIDTH_FLOOR",
    "AR_CLAMP",
]

BANDWIDTH_FLOOR = 1.0
AR_CLAMP = 0.97
JITTERS = (0.0, 1e-10, 1e-8, 1e-6)
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class MultiplierScheme:
    """How the multipliers e_1..e_N are drawn.

    ``kind="independent"`` draws i.i.d. standard normals. ``kind="dependent"``
    draws N(0, Theta) with Theta the quadratic-spectral Toeplitz matrix at
    ``bandwidth`` (``"auto"`` selects it from the data by the Andrews AR(1)
    plug-in rule). ``theta`` overrides the kernel construction entirely.
    """

    kind: str = "independent"
    kernel: str = "qs"
    bandwidth: float | str = "auto"
    theta: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("independent", "dependent"):
            raise ConfigError(f"unknown multiplier scheme {self.kind!r}")
        if self.kernel != "qs":
            raise ConfigError("only the quadratic spectral kernel is supported")
        if self.bandwidth != "auto":
            bw = float(self.bandwidth)
            if not bw > 0 or not math.isfinite(bw):
                raise ConfigError(f"bandwidth must be positive, got {self.bandwidth!r}")
            object.__setattr__(self, "bandwidth", bw)

    @property
    def dependent(self) -> bool:
        return self.kind == "dependent"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "kernel": self.kernel, "bandwidth": self.bandwidth}


@dataclass(frozen=True)
class BootstrapConfig:
    B: int = 400
    scheme: MultiplierScheme = MultiplierScheme()
    master_seed: int = 0

    def __post_init__(self):
        if int(self.B) != self.B or self.B < 1:
            raise ConfigError(f"B must be a positive integer, got {self.B!r}")
        object.__setattr__(self, "B", int(self.B))
        object.__setattr__(self, "master_seed", int(self.master_seed) & _MASK64)

    def with_seed(self, seed: int) -> "BootstrapConfig":
        return replace(self, master_seed=seed)

    def to_dict(self) -> dict:
        return {"B": self.B, "scheme": self.scheme.to_dict(), "master_seed": self.master_seed}


def qs_kernel(x):
    """Quadratic spectral kernel, ``3 (sin z - z cos z) / z^3`` with z = 6 pi x / 5.

    Accepts scalars or arrays; K(0) = 1 and small arguments use the Taylor
    expansion ``1 - z^2/10 + z^4/280`` to avoid cancellation.
    """
    x = np.asarray(x, dtype=np.float64)
    z = 6.0 * np.pi * np.abs(x) / 5.0
    small = z < 1e-3
    zs = np.where(small, 1.0, z)
    closed = 3.0 * (np.sin(zs) - zs * np.cos(zs)) / zs**3
    z2 = z * z
    series = 1.0 - z2 / 10.0 + z2 * z2 / 280.0
    out = np.where(small, series, closed)
    return float(out) if out.ndim == 0 else out


def _andrews_from_ar1(rho, sigma2, n_obs: int) -> float:
    rho = np.atleast_1d(np.asarray(rho, dtype=np.float64))
    sigma4 = np.atleast_1d(np.asarray(sigma2, dtype=np.float64)) ** 2
    num = np.sum(4.0 * rho**2 * sigma4 / (1.0 - rho) ** 8)
    den = np.sum(sigma4 / (1.0 - rho) ** 4)
    if den <= 0:
        return BANDWIDTH_FLOOR
    a_hat = num / den
    return max(BANDWIDTH_FLOOR, 1.3221 * (a_hat * n_obs) ** 0.2)


def andrews_bandwidth(x) -> float:
    """Data-driven bandwidth for the quadratic spectral kernel.

    Each component series is centred and fitted by a slope-only AR(1) least
    squares regression; the coefficients are clamped to +-0.97 and constant
    components are dropped. Returns ``1.3221 (a N)^(1/5)`` floored at 1.
    """
    x = as_series(x)
    if x.N < 3:
        raise ValueError("andrews_bandwidth needs N >= 3")
    y = x.data.reshape(x.N, -1)
    y = y - y.mean(axis=0)
    lag, lead = y[:-1], y[1:]
    denom = np.sum(lag * lag, axis=0)
    keep = denom > 0
    if not np.any(keep):
        return BANDWIDTH_FLOOR
    lag, lead, denom = lag[:, keep], lead[:, keep], denom[keep]
    rho = np.clip(np.sum(lag * lead, axis=0) / denom, -AR_CLAMP, AR_CLAMP)
    resid = lead - rho * lag
    sigma2 = np.mean(resid * resid, axis=0)
    return _andrews_from_ar1(rho, sigma2, x.N)


def toeplitz_theta(n: int, bandwidth: float, kernel=qs_kernel) -> np.ndarray:
    """Multiplier covariance with entries ``kernel((i - j) / bandwidth)``."""
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    return toeplitz(kernel(np.arange(n) / bandwidth))


def cholesky_jitter(a: np.ndarray, jitters=JITTERS) -> np.ndarray:
    """Lower Cholesky factor of ``a + jitter I`` for the first jitter that works."""
    eye = np.eye(a.shape[0])
    for jitter in jitters:
        try:
            return np.linalg.cholesky(a + jitter * eye if jitter else a)
        except np.linalg.LinAlgError:
            continue
    eig_min = float(np.linalg.eigvalsh(a).min())
    raise NumericalError(
        f"Cholesky failed up to jitter {jitters[-1]:g} "
        f"(n={a.shape[0]}, min eigenvalue {eig_min:.3e})"
    )


def replicate_key(master_seed: int, stream: int, b: int) -> int:
    """128-bit Philox key for replicate ``b`` of bootstrap ``stream``."""
    return ((int(master_seed) & _MASK64) << 64) | ((stream & 0xFFFFFFFF) << 32) | (b & 0xFFFFFFFF)


def derive_seed(master_seed: int, *path: int) -> int:
    """64-bit child seed for a node identified by an integer path."""
    ss = np.random.SeedSequence(int(master_seed) & _MASK64, spawn_key=tuple(int(v) for v in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _normals(n: int, key: int) -> np.ndarray:
    return np.random.Generator(np.random.Philox(key=key)).standard_normal(n)


def _chol_factor(n: int, scheme: MultiplierScheme, x=None) -> np.ndarray | None:
    if not scheme.dependent:
        return None
    if scheme.theta is not None:
        theta = np.asarray(scheme.theta, dtype=np.float64)
        if theta.shape != (n, n):
            raise ConfigError(f"theta has shape {theta.shape}, expected {(n, n)}")
    else:
        bw = scheme.bandwidth
        if bw == "auto":
            if x is None:
                raise ConfigError("automatic bandwidth needs the data")
            bw = andrews_bandwidth(x)
        theta = toeplitz_theta(n, bw)
    return cholesky_jitter(theta)


def draw_multipliers(n: int, scheme: MultiplierScheme, seed: int, x=None) -> np.ndarray:
    """Draw one multiplier sequence of length ``n``.

    ``seed`` is the generator key (see :func:`replicate_key`). For the
    dependent scheme the i.i.d. normals are premultiplied by the Cholesky
    factor of Theta; ``x`` is only needed when the bandwidth is ``"auto"``.
    """
    z = _normals(n, seed)
    chol = _chol_factor(n, scheme, x)
    return z if chol is None else chol @ z


def multiplier_matrix(n: int, cfg: BootstrapConfig, stream: int = 0, x=None) -> np.ndarray:
    """(B, n) multipliers for all replicates of one bootstrap stream."""
    z = np.empty((cfg.B, n))
    for b in range(cfg.B):
        z[b] = _normals(n, replicate_key(cfg.master_seed, stream, b))
    chol = _chol_factor(n, cfg.scheme, x)
    if chol is None:
        return z
    return z @ chol.T


def bootstrap_cusum_at(x, n: int, e) -> np.ndarray:
    """Multiplier-bootstrap CUSUM matrix at epoch ``n`` for multipliers ``e``."""
    x = as_series(x)
    N = x.N
    if not 1 <= n <= N - 1:
        raise ValueError(f"epoch n={n} outside 1..{N - 1}")
    e = np.asarray(e, dtype=np.float64)
    pre, post = x.data[:n], x.data[n:]
    pre_c = pre - pre.mean(axis=0)
    post_c = post - post.mean(axis=0)
    left = np.tensordot(e[:n], pre_c, axes=1) / n
    right = np.tensordot(e[n:], post_c, axes=1) / (N - n)
    return math.sqrt(n * (N - n) / N) * (right - left)


def _stat_columns(specs) -> list[int]:
    cols = []
    for spec in specs:
        if spec not in ADAPTIVE_NORMS:
            raise ConfigError(f"unsupported norm {spec}")
        cols.append(ADAPTIVE_NORMS.index(spec))
    return cols


def run_bootstrap(
    x,
    nu: int,
    specs=ADAPTIVE_NORMS,
    cfg: BootstrapConfig = BootstrapConfig(),
    *,
    stream: int = 0,
    gamma: float = 0.5,
    threads: int = 1,
    multipliers: np.ndarray | None = None,
) -> dict[NormSpec, np.ndarray]:
    """Bootstrap statistics ``max_n ||C_n^b||`` for every requested norm.

    All norms in one replicate share that replicate's multipliers.

    Parameters
    ----------
    x : MatrixSeries or array_like
    nu : int
        Boundary removal parameter.
    specs : iterable of NormSpec
    cfg : BootstrapConfig
    stream : int
        Independent bootstrap world index (0 for the first, 1 for the
        parallel reference world).
    gamma : float
        CUSUM scaling exponent; 0.5 reproduces the standard weights.
    threads : int
        Worker threads; affects wall-clock only.
    multipliers : ndarray, optional
        (B, N) multipliers to use instead of drawing them.

    Returns
    -------
    dict mapping each NormSpec to a length-B array of statistics.
    """
    x = as_series(x)
    nu = check_nu(x.N, nu)
    specs = tuple(specs)
    cols = _stat_columns(specs)
    if multipliers is None:
        E = multiplier_matrix(x.N, cfg, stream, x)
    else:
        E = np.ascontiguousarray(multipliers, dtype=np.float64)
        if E.ndim != 2 or E.shape[1] != x.N:
            raise ConfigError(f"multipliers must have shape (B, {x.N})")
    X = np.ascontiguousarray(x.data.reshape(x.N, -1))
    k = math.isqrt(x.p)
    want_dot = DOT in specs
    out = np.empty((E.shape[0], 4))

    def work(lo: int, hi: int) -> None:
        _kernels.bootstrap_statistics(
            X, x.p1, x.p2, E[lo:hi], nu, float(gamma), k, want_dot, out[lo:hi]
        )

    threads = max(1, int(threads))
    if threads == 1 or E.shape[0] < 2:
        work(0, E.shape[0])
    else:
        bounds = np.linspace(0, E.shape[0], min(threads, E.shape[0]) + 1).astype(int)
        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(work, bounds[:-1], bounds[1:]))
    result = {}
    for spec, col in zip(specs, cols):
        vals = out[:, col].copy()
        vals.setflags(write=False)
        result[spec] = vals
    return result
