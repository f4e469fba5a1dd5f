"""Seeded synthetic multiple-index models with known central subspaces.

Every model has the form ``y = f(V^T x, eps)`` with ``x ~ N(0, I_p)`` and
``eps ~ N(0, noise_sd^2)``.  The available links are

``linear_mu``
    ``y = sqrt(mu / (1 - mu)) * v^T x + eps``; the only nonzero eigenvalue of
    ``var(E[x | y])`` is ``mu``.
``two_index_conjecture``
    ``y = sqrt(mu) * (1 + g(z1)) * (g(z1) + g(z2)) + eps`` with ``g`` the
    identity clipped to zero beyond ``|x| > 100``.
``dtsir_1`` .. ``dtsir_4``
    ``z + sin(z)``, ``2 arctan(z)``, ``z^3`` and ``sinh(z)`` of ``z = beta^T x``
    with a sparse unit vector ``beta``.
``custom``
    any callable ``link(Z, eps) -> y`` where ``Z = X @ V``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, InputError
from .linalg import ORTHO_TOL, check_orthonormal, orthonormalize

CLIP_LEVEL = 100.0

DTSIR_LINKS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "dtsir_1": lambda z: z + np.sin(z),
    "dtsir_2": lambda z: 2.0 * np.arctan(z),
    "dtsir_3": lambda z: z**3,
    "dtsir_4": np.sinh,
}

LINKS = ("linear_mu", "two_index_conjecture", *DTSIR_LINKS, "custom")


def clipped_g(x):
    """Identity on ``|x| <= 100`` and zero outside (sharp version of the smooth cutoff)."""
    x = np.asarray(x, dtype=float)
    out = np.where(np.abs(x) <= CLIP_LEVEL, x, 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Dataset:
    """``n`` paired observations: responses ``y`` (n,) and predictors ``X`` (n, p)."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).ravel()
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise InputError(f"X must be (n, p) with n = len(y); got {X.shape} and {y.shape}")
        if X.shape[0] < 2:
            raise InputError("a dataset needs at least 2 observations")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise InputError("dataset has non-finite entries")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def subset(self, rows) -> "Dataset":
        return Dataset(self.X[rows], self.y[rows])


@dataclass(frozen=True)
class ModelSpec:
    """A data-generating model together with its true central subspace.

    Prefer the constructors :func:`linear_mu`, :func:`two_index_conjecture`,
    :func:`dtsir_model` and :func:`custom_model`.
    """

    link: str
    true_V: np.ndarray
    mu: Optional[float] = None
    noise_sd: float = 1.0
    func: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = field(
        default=None, compare=False, repr=False
    )
    name: Optional[str] = None

    def __post_init__(self):
        if self.link not in LINKS:
            raise ConfigError(f"unknown link {self.link!r}; expected one of {LINKS}")
        try:
            V = check_orthonormal(self.true_V, tol=ORTHO_TOL)
        except ValueError as exc:
            raise ConfigError(f"true_V: {exc}") from exc
        object.__setattr__(self, "true_V", V)
        if not self.noise_sd >= 0:
            raise ConfigError("noise_sd must be nonnegative")
        d = V.shape[1]
        if self.link == "linear_mu":
            if self.mu is None or not 0.0 < self.mu < 1.0:
                raise ConfigError(f"linear_mu requires 0 < mu < 1, got mu={self.mu}")
            if d != 1:
                raise ConfigError("linear_mu requires d = 1")
        elif self.link == "two_index_conjecture":
            if self.mu is None or not self.mu > 0.0:
                raise ConfigError(f"two_index_conjecture requires mu > 0, got mu={self.mu}")
            if d != 2:
                raise ConfigError("two_index_conjecture requires d = 2")
        elif self.link in DTSIR_LINKS:
            if d != 1:
                raise ConfigError(f"{self.link} requires d = 1")
            if not abs(np.linalg.norm(V[:, 0]) - 1.0) <= 1e-10:
                raise ConfigError(f"{self.link} requires a unit-norm beta")
        elif self.func is None:
            raise ConfigError("custom link requires a callable func(Z, eps)")

    @property
    def p(self) -> int:
        return self.true_V.shape[0]

    @property
    def d(self) -> int:
        return self.true_V.shape[1]

    @property
    def support(self) -> np.ndarray:
        """Indices of the nonzero rows of ``true_V``."""
        return np.flatnonzero(np.any(self.true_V != 0.0, axis=1))

    @property
    def s(self) -> int:
        return int(self.support.size)

    @property
    def label(self) -> str:
        return self.name or self.link

    def response(self, Z: np.ndarray, eps: np.ndarray) -> np.ndarray:
        """Evaluate the link on projected predictors ``Z = X @ true_V`` (n, d)."""
        eps = self.noise_sd * eps
        if self.link == "linear_mu":
            return math.sqrt(self.mu / (1.0 - self.mu)) * Z[:, 0] + eps
        if self.link == "two_index_conjecture":
            g1, g2 = clipped_g(Z[:, 0]), clipped_g(Z[:, 1])
            return math.sqrt(self.mu) * (1.0 + g1) * (g1 + g2) + eps
        if self.link in DTSIR_LINKS:
            return DTSIR_LINKS[self.link](Z[:, 0]) + eps
        return np.asarray(self.func(Z, eps), dtype=float)


def _unit(p: int, idx: int = 0) -> np.ndarray:
    v = np.zeros((p, 1))
    v[idx, 0] = 1.0
    return v


def linear_mu(mu: float, p: int = 10, v=None, noise_sd: float = 1.0) -> ModelSpec:
    """Linear single-index model along ``v`` (default ``e1``) with signal level ``mu``."""
    V = _unit(p) if v is None else orthonormalize(np.asarray(v, dtype=float))
    return ModelSpec("linear_mu", V, mu=mu, noise_sd=noise_sd)


def two_index_conjecture(mu: float, p: int = 10, V=None) -> ModelSpec:
    if p < 2:
        raise ConfigError("two_index_conjecture needs p >= 2")
    if V is None:
        V = np.eye(p)[:, :2]
    return ModelSpec("two_index_conjecture", V, mu=mu)


def dtsir_model(which: int | str, beta) -> ModelSpec:
    """One of the four sparse single-index models, ``which`` in 1..4."""
    link = which if isinstance(which, str) else f"dtsir_{which}"
    if link not in DTSIR_LINKS:
        raise ConfigError(f"unknown DT-SIR model {which!r}")
    return ModelSpec(link, np.asarray(beta, dtype=float).reshape(-1, 1))


def custom_model(func, V, name: str | None = None, noise_sd: float = 1.0) -> ModelSpec:
    return ModelSpec("custom", np.asarray(V, dtype=float), func=func, name=name, noise_sd=noise_sd)


def sparsity_from_delta(p: int, delta: float) -> int:
    """``floor(p ** (1 - delta))``, robust to round-off just below an integer."""
    x = p ** (1.0 - delta)
    return int(math.floor(x + 1e-9 * max(1.0, x)))


def make_dtsir_beta(p: int, delta_sparsity: float = 0.5, seed=0) -> tuple[np.ndarray, int]:
    """Unit vector with ``s = floor(p^(1-delta))`` leading entries ``+-1/sqrt(s)``.

    The signs are drawn from ``seed``; all other entries are zero.
    """
    if p < 4:
        raise ConfigError("make_dtsir_beta requires p >= 4")
    s = sparsity_from_delta(p, delta_sparsity)
    if not 1 <= s <= p:
        raise ConfigError(f"delta_sparsity={delta_sparsity} gives s={s} outside [1, p]")
    signs = np.random.default_rng(seed).choice([-1.0, 1.0], size=s)
    beta = np.zeros(p)
    beta[:s] = signs / math.sqrt(s)
    return beta, s


def true_lambda(spec: ModelSpec) -> Optional[list[float]]:
    """Closed-form nonzero eigenvalues of ``var(E[x|y])`` when known, else ``None``."""
    if spec.link == "linear_mu" and spec.noise_sd == 1.0:
        return [float(spec.mu)]
    return None


def kappa_to_n(kappa: float, s: int, p: int) -> int:
    """Sample size ``floor(kappa * s * log(p - s))`` for a sample-complexity ratio."""
    if p <= s or s < 1:
        raise ConfigError(f"need p > s >= 1, got p={p}, s={s}")
    if not kappa > 0:
        raise ConfigError("kappa must be positive")
    return int(math.floor(kappa * s * math.log(p - s)))


def _streams(seed) -> tuple[np.random.Generator, np.random.Generator]:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    # derive children explicitly: SeedSequence.spawn would mutate the caller's object
    x_seq, eps_seq = (
        np.random.SeedSequence(ss.entropy, spawn_key=(*ss.spawn_key, i), pool_size=ss.pool_size)
        for i in (0, 1)
    )
    return np.random.default_rng(x_seq), np.random.default_rng(eps_seq)


def generate(spec: ModelSpec, n: int, seed) -> Dataset:
    """Draw ``n`` observations from ``spec``.

    Predictors and noise come from two independent child streams of ``seed``
    and are filled row by row, so the sample of size ``n`` is exactly the
    first ``n`` rows of any larger sample drawn with the same seed.
    """
    if n < 2:
        raise ConfigError(f"n must be >= 2, got {n}")
    x_rng, eps_rng = _streams(seed)
    X = x_rng.standard_normal((n, spec.p))
    eps = eps_rng.standard_normal(n)
    y = spec.response(X @ spec.true_V, eps)
    return Dataset(X, y)


def model_from_config(cfg: dict) -> ModelSpec:
    """Build a :class:`ModelSpec` from flat ``key=value`` settings.

    Recognized keys: ``model`` (link name), ``mu``, ``p``, ``delta``,
    ``beta_seed``.
    """
    link = str(cfg.get("model", "linear_mu"))
    p = int(cfg.get("p", 10))
    if link == "linear_mu":
        return linear_mu(float(cfg["mu"]) if "mu" in cfg else 0.5, p=p)
    if link == "two_index_conjecture":
        return two_index_conjecture(float(cfg["mu"]) if "mu" in cfg else 1.0, p=p)
    if link in DTSIR_LINKS:
        beta, _ = make_dtsir_beta(p, float(cfg.get("delta", 0.5)), int(cfg.get("beta_seed", 0)))
        return dtsir_model(link, beta)
    raise ConfigError(f"model: unsupported link {link!r} in config")
