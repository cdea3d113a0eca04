"""Data-generating processes for the simulation studies.

Vectorisation convention: a p1 x p2 matrix is stacked column by column
(Fortran order), so entry (r, c) sits at position ``r + c * p1`` of vec(.)
and ``Cov(vec(eps))`` is the p x p matrix built here.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from .bootstrap import cholesky_jitter
from .core import MatrixSeries
from .errors import ConfigError

__all__ = [
    "CovarianceSpec",
    "ShiftPattern",
    "ScenarioSpec",
    "vec",
    "unvec",
    "covariance_factors",
    "build_covariance",
    "build_shift",
    "generate_series",
    "noise_factor",
    "evenly_spaced",
    "SHIFT_SCENARIOS",
    "scenario_shift",
]

COV_KINDS = ("identity", "kronecker", "banded", "compound")
_COV_ALIASES = {"cov1": "identity", "cov2": "kronecker", "cov3": "banded", "cov4": "compound"}


def vec(a: np.ndarray) -> np.ndarray:
    return np.asarray(a).reshape(-1, order="F")


def unvec(v: np.ndarray, p1: int, p2: int) -> np.ndarray:
    return np.asarray(v).reshape(p1, p2, order="F")


@dataclass(frozen=True)
class CovarianceSpec:
    """Error covariance family.

    identity (Cov1), kronecker (Cov2: random Sigma_c (x) Sigma_r, drawn with
    ``seed``), banded (Cov3: rho_row^|dr| * rho_col^|dc|) and compound
    (Cov4: unit diagonal, constant off-diagonal).
    """

    kind: str = "identity"
    seed: int = 0
    rho_row: float = 0.5
    rho_col: float = 0.3
    offdiag: float = 0.2

    def __post_init__(self):
        kind = _COV_ALIASES.get(str(self.kind).lower(), str(self.kind).lower())
        if kind not in COV_KINDS:
            raise ConfigError(f"unknown covariance kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)

    @property
    def label(self) -> str:
        return {"identity": "Cov1", "kronecker": "Cov2", "banded": "Cov3", "compound": "Cov4"}[self.kind]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "rho_row": self.rho_row,
            "rho_col": self.rho_col,
            "offdiag": self.offdiag,
        }

    @classmethod
    def from_dict(cls, d) -> "CovarianceSpec":
        if isinstance(d, str):
            return cls(d)
        return cls(**d)


def _random_spd(n: int, rng: np.random.Generator) -> np.ndarray:
    lam = np.abs(rng.standard_normal(n))
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.sign(np.diag(r))
    return (q * lam) @ q.T


def _band(n: int, rho: float) -> np.ndarray:
    idx = np.arange(n)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def covariance_factors(spec: CovarianceSpec, p1: int, p2: int):
    """(Sigma_c, Sigma_r) for separable kinds, None otherwise."""
    if spec.kind == "kronecker":
        rng = np.random.default_rng(spec.seed)
        sigma_c = _random_spd(p2, rng)
        sigma_r = _random_spd(p1, rng)
        return sigma_c, sigma_r
    if spec.kind == "banded":
        return _band(p2, spec.rho_col), _band(p1, spec.rho_row)
    if spec.kind == "identity":
        return np.eye(p2), np.eye(p1)
    return None


def build_covariance(spec: CovarianceSpec, p1: int, p2: int) -> np.ndarray:
    """p x p covariance of vec(eps) for the given family."""
    p = p1 * p2
    if p < 1:
        raise ConfigError("p must be positive")
    if spec.kind == "identity":
        return np.eye(p)
    if spec.kind == "compound":
        sigma = np.full((p, p), float(spec.offdiag))
        np.fill_diagonal(sigma, 1.0)
        return sigma
    sigma_c, sigma_r = covariance_factors(spec, p1, p2)
    sigma = np.kron(sigma_c, sigma_r)
    return 0.5 * (sigma + sigma.T)


SHIFT_KINDS = ("one_mode", "two_modes", "block", "random")


@dataclass(frozen=True)
class ShiftPattern:
    """Mean-shift layout: ``k`` cells equal to ``magnitude``, the rest zero.

    one_mode fills row 1 left to right and continues into later rows;
    two_modes alternates between a row arm and a column arm
    (row 1, column 1, row 2 from column 2, column 2 from row 3, ...);
    block is a ``side x side`` square anchored at ``offset``;
    random draws k cells without replacement using ``seed``.
    """

    kind: str
    k: int
    magnitude: float = 1.0
    seed: int = 0
    offset: tuple[int, int] = (0, 0)

    def __post_init__(self):
        if self.kind not in SHIFT_KINDS:
            raise ConfigError(f"unknown shift kind {self.kind!r}")
        if self.kind == "block":
            side = int(round(np.sqrt(self.k)))
            if side * side != self.k:
                raise ConfigError(f"block shift needs a square k, got {self.k}")
        object.__setattr__(self, "offset", tuple(int(v) for v in self.offset))

    @property
    def label(self) -> str:
        name = {"one_mode": "1mode", "two_modes": "2modes", "block": "block", "random": "random"}
        return f"{self.k}-{name[self.kind]}"

    def with_magnitude(self, a: float) -> "ShiftPattern":
        return ShiftPattern(self.kind, self.k, float(a), self.seed, self.offset)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "k": self.k,
            "magnitude": self.magnitude,
            "seed": self.seed,
            "offset": list(self.offset),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ShiftPattern":
        d = dict(d)
        if "offset" in d:
            d["offset"] = tuple(d["offset"])
        return cls(**d)


def _two_modes_cells(p1: int, p2: int, k: int):
    cells = []
    for i in range(min(p1, p2)):
        cells.extend((i, c) for c in range(i, p2))
        cells.extend((r, i) for r in range(i + 1, p1))
        if len(cells) >= k:
            break
    return cells[:k]


def build_shift(pattern: ShiftPattern, p1: int, p2: int) -> np.ndarray:
    """Realise a :class:`ShiftPattern` as a p1 x p2 matrix."""
    p = p1 * p2
    k = pattern.k
    if k < 0 or k > p:
        raise ConfigError(f"shift needs 0 <= k <= p={p}, got k={k}")
    delta = np.zeros((p1, p2))
    if pattern.magnitude == 0 or k == 0:
        return delta
    if pattern.kind == "one_mode":
        delta.reshape(-1)[:k] = pattern.magnitude
    elif pattern.kind == "two_modes":
        for r, c in _two_modes_cells(p1, p2, k):
            delta[r, c] = pattern.magnitude
    elif pattern.kind == "block":
        side = int(round(np.sqrt(k)))
        r0, c0 = pattern.offset
        if r0 + side > p1 or c0 + side > p2:
            raise ConfigError(f"{side}x{side} block at {pattern.offset} exceeds {p1}x{p2}")
        delta[r0:r0 + side, c0:c0 + side] = pattern.magnitude
    else:
        rng = np.random.default_rng(pattern.seed)
        cells = rng.choice(p, size=k, replace=False)
        delta.reshape(-1)[cells] = pattern.magnitude
    return delta


# the six alignment scenarios of the power study
SHIFT_SCENARIOS = {
    "10-1mode": ("one_mode", 10),
    "40-1mode": ("one_mode", 40),
    "40-2modes": ("two_modes", 40),
    "36-block": ("block", 36),
    "10-random": ("random", 10),
    "40-random": ("random", 40),
}


def scenario_shift(name: str, magnitude: float, seed: int = 0) -> ShiftPattern:
    try:
        kind, k = SHIFT_SCENARIOS[name]
    except KeyError:
        raise ConfigError(f"unknown scenario {name!r}; choose from {sorted(SHIFT_SCENARIOS)}") from None
    return ShiftPattern(kind, k, magnitude, seed)


@dataclass(frozen=True)
class ScenarioSpec:
    """Recipe for X_i = mu + sum over shifts (u, delta) with i > u of delta + eps_i."""

    N: int
    p1: int
    p2: int
    change_points: tuple[tuple[int, ShiftPattern], ...] = ()
    covariance: CovarianceSpec = CovarianceSpec()
    noise: str = "iid"
    ar_rho: float = 0.0
    seed: int = 0
    mu: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.N < 2 or self.p1 < 1 or self.p2 < 1:
            raise ConfigError("need N >= 2 and p1, p2 >= 1")
        cps = tuple((int(u), s) for u, s in self.change_points)
        us = [u for u, _ in cps]
        if any(b <= a for a, b in zip(us, us[1:])):
            raise ConfigError("change points must be strictly increasing")
        if us and (us[0] <= 0 or us[-1] >= self.N):
            raise ConfigError(f"change points must lie in (0, {self.N})")
        object.__setattr__(self, "change_points", cps)
        if self.noise not in ("iid", "ar1"):
            raise ConfigError(f"noise must be 'iid' or 'ar1', got {self.noise!r}")
        if not -1.0 < self.ar_rho < 1.0:
            raise ConfigError("AR(1) coefficient must lie in (-1, 1)")
        if self.mu is not None and np.shape(self.mu) != (self.p1, self.p2):
            raise ConfigError("mu must be p1 x p2")

    @property
    def true_changepoints(self) -> tuple[int, ...]:
        return tuple(u for u, _ in self.change_points)

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "p1": self.p1,
            "p2": self.p2,
            "change_points": [{"u": u, "shift": s.to_dict()} for u, s in self.change_points],
            "covariance": self.covariance.to_dict(),
            "noise": self.noise,
            "ar_rho": self.ar_rho,
            "seed": self.seed,
            "mu": None if self.mu is None else np.asarray(self.mu).tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        d = dict(d)
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
        d["change_points"] = tuple(
            (int(c["u"]), ShiftPattern.from_dict(c["shift"])) for c in d.get("change_points", ())
        )
        if "covariance" in d:
            d["covariance"] = CovarianceSpec.from_dict(d["covariance"])
        if d.get("mu") is not None:
            d["mu"] = np.asarray(d["mu"], dtype=np.float64)
        return cls(**d)


def noise_factor(spec: ScenarioSpec) -> np.ndarray | None:
    """Lower Cholesky factor of the error covariance (None for the identity)."""
    if spec.covariance.kind == "identity":
        return None
    return cholesky_jitter(build_covariance(spec.covariance, spec.p1, spec.p2))


def _noise(spec: ScenarioSpec, chol: np.ndarray | None) -> np.ndarray:
    rng = np.random.default_rng(spec.seed)
    z = rng.standard_normal((spec.N, spec.p1 * spec.p2))
    eta = z if chol is None else z @ chol.T
    if spec.noise == "ar1" and spec.ar_rho != 0.0:
        rho = spec.ar_rho
        scale = np.sqrt(1.0 - rho * rho)
        eps = np.empty_like(eta)
        eps[0] = eta[0]
        for i in range(1, spec.N):
            eps[i] = rho * eps[i - 1] + scale * eta[i]
        return eps
    return eta


_UNSET = object()


def generate_series(spec: ScenarioSpec, chol=_UNSET) -> MatrixSeries:
    """Draw a matrix series from ``spec``.

    ``chol`` may be passed to reuse the factor from :func:`noise_factor`.
    The noise depends only on ``spec.seed`` and the covariance, not on the
    shifts, so scenarios that differ only in their shifts share noise.
    """
    if chol is _UNSET:
        chol = noise_factor(spec)
    eps = _noise(spec, chol)
    # column-major vec -> (p1, p2) per observation
    data = eps.reshape(spec.N, spec.p2, spec.p1).transpose(0, 2, 1).copy()
    if spec.mu is not None:
        data += np.asarray(spec.mu, dtype=np.float64)
    for u, pattern in spec.change_points:
        data[u:] += build_shift(pattern, spec.p1, spec.p2)
    return MatrixSeries(data)


def evenly_spaced(n_obs: int, k: int) -> tuple[int, ...]:
    """k change points splitting 1..N into k + 1 near-equal segments."""
    return tuple((j * n_obs) // (k + 1) for j in range(1, k + 1))
