"""Sparse SIR estimators for high-dimensional single- and multiple-index models.

* :func:`dt_sir` -- diagonal thresholding followed by a restricted eigenproblem.
* :func:`oracle_estimator` -- SIR restricted to a known support.
* :func:`aggregation_estimator` -- two-split selection over candidate supports.
* :func:`effective_support_size` and :func:`weak_lq_radius` -- sparsity measures.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.stats import chi2

from .errors import ConfigError, EstimationError
from .linalg import sym_eig_topd
from .models import Dataset
from .sir import CondCovEstimate, SubspaceEstimate, estimate_lambda, slice_data

STRATEGIES = ("exhaustive", "top_diagonal_screen")


@dataclass(frozen=True)
class ThresholdConfig:
    """Diagonal threshold ``t = c1 * log(p) / n`` unless ``t`` is given explicitly."""

    c1: float = 2.0
    t: Optional[float] = None

    def __post_init__(self):
        if not self.c1 > 0:
            raise ConfigError("c1 must be positive")
        if self.t is not None and not self.t >= 0:
            raise ConfigError("t must be nonnegative")

    def threshold(self, p: int, n: int) -> float:
        return self.t if self.t is not None else default_threshold(p, n, self.c1)


@dataclass(frozen=True)
class AggregationConfig:
    k: int
    d: int = 1
    H: int = 10
    enumeration_cap: int = 2_000_000
    candidate_strategy: str = "exhaustive"
    screen_m: Optional[int] = None

    def __post_init__(self):
        if not 1 <= self.d <= self.k:
            raise ConfigError(f"need 1 <= d <= k, got d={self.d}, k={self.k}")
        if self.candidate_strategy not in STRATEGIES:
            raise ConfigError(f"candidate_strategy must be one of {STRATEGIES}")
        if self.enumeration_cap < 1:
            raise ConfigError("enumeration_cap must be positive")
        if self.screen_m is not None and self.screen_m < self.k:
            raise ConfigError("screen_m must be at least k")


def default_threshold(p: int, n: int, c1: float = 2.0) -> float:
    """``c1 * log(p) / n`` (natural log)."""
    if p < 2 or n < 1:
        raise ConfigError(f"need p >= 2 and n >= 1, got p={p}, n={n}")
    return c1 * math.log(p) / n


def calibrated_c1(p: int, H: int, alpha: float = 0.05) -> float:
    """Threshold constant that keeps every null coordinate out with probability ``1 - alpha``.

    For a coordinate outside the support, ``n * Lambda_H(i, i)`` is
    approximately chi-square with ``H`` degrees of freedom, so a Bonferroni
    bound over ``p`` coordinates gives ``t = chi2.isf(alpha / p, H) / n``.
    Returned in units of ``log(p) / n`` to plug into :class:`ThresholdConfig`.
    """
    if p < 2 or H < 1 or not 0 < alpha < 1:
        raise ConfigError("need p >= 2, H >= 1 and 0 < alpha < 1")
    return float(chi2.isf(alpha / p, H)) / math.log(p)


def _restricted_top(lam: np.ndarray, S: np.ndarray, d: int) -> tuple[np.ndarray, np.ndarray]:
    eigs, W = sym_eig_topd(lam[np.ix_(S, S)], d)
    V = np.zeros((lam.shape[0], d))
    V[S] = W
    return eigs, V


def dt_sir_from_estimate(est: CondCovEstimate, cfg: ThresholdConfig = ThresholdConfig()) -> SubspaceEstimate:
    """Diagonal-thresholding step on an existing SIR matrix (d = 1)."""
    lam = est.lambda_hat
    t = cfg.threshold(est.p, est.n)
    S = np.flatnonzero(np.diag(lam) > t)
    if S.size == 0:
        raise EstimationError(f"threshold eliminated all coordinates (t={t:.4g})")
    eigs, V = _restricted_top(lam, S, 1)
    return SubspaceEstimate(V, eigs, support=S, info={"threshold": t, "H": est.H, "n": est.n})


def dt_sir(data: Dataset, H: int, cfg: ThresholdConfig = ThresholdConfig()) -> SubspaceEstimate:
    """DT-SIR estimate of a single index.

    Keeps the coordinates whose SIR diagonal exceeds the threshold, takes the
    principal eigenvector of the surviving submatrix and pads it with zeros.
    Raises :class:`EstimationError` when no coordinate survives.
    """
    if not 2 <= H <= data.n:
        raise ConfigError(f"H={H} must satisfy 2 <= H <= n={data.n}")
    return dt_sir_from_estimate(estimate_lambda(slice_data(data, H)), cfg)


def oracle_estimator(est: CondCovEstimate, S: Iterable[int], d: int) -> SubspaceEstimate:
    """Top-``d`` eigenvectors of the SIR matrix restricted to the support ``S``.

    This solves ``max Tr(V^T Lambda V)`` over orthonormal ``V`` whose rows
    outside ``S`` vanish.
    """
    S = np.unique(np.asarray(list(S), dtype=int))
    if S.size and (S[0] < 0 or S[-1] >= est.p):
        raise ConfigError(f"support indices must lie in [0, {est.p})")
    if S.size < d:
        raise ConfigError(f"|S|={S.size} is smaller than d={d}")
    eigs, V = _restricted_top(est.lambda_hat, S, d)
    return SubspaceEstimate(V, eigs, support=S)


def split_halves(n: int, seed) -> tuple[np.ndarray, np.ndarray]:
    """Seeded random split into two equal halves; odd ``n`` drops the last shuffled index."""
    perm = np.random.default_rng(seed).permutation(n)
    half = n // 2
    return perm[:half], perm[half : 2 * half]


def candidate_pool(lam1: np.ndarray, cfg: AggregationConfig) -> np.ndarray:
    p = lam1.shape[0]
    if cfg.candidate_strategy == "exhaustive":
        return np.arange(p)
    m = min(p, cfg.screen_m if cfg.screen_m is not None else max(2 * cfg.k, cfg.k + 5))
    top = np.argsort(-np.diag(lam1), kind="stable")[:m]
    return np.sort(top)


def aggregate_supports(
    lam1: np.ndarray,
    lam2: np.ndarray,
    cfg: AggregationConfig,
    candidates: Optional[Sequence[Sequence[int]]] = None,
) -> tuple[np.ndarray, tuple[int, ...], dict[tuple[int, ...], float]]:
    """Pick the support whose split-1 eigenspace best aligns with split 2.

    Returns ``(V_best, B_best, scores)`` where ``scores[B] = Tr(V_B^T lam2 V_B)``.
    Candidates default to all ``k``-subsets of the pool in lexicographic
    order; ties are resolved in favour of the lexicographically smallest set
    whatever order the candidates come in.
    """
    p = lam1.shape[0]
    if cfg.k > p:
        raise ConfigError(f"k={cfg.k} exceeds p={p}")
    if candidates is None:
        pool = candidate_pool(lam1, cfg)
        count = math.comb(pool.size, cfg.k)
        if count > cfg.enumeration_cap:
            raise ConfigError(
                f"{count} candidate supports exceed enumeration_cap={cfg.enumeration_cap}; "
                "use candidate_strategy='top_diagonal_screen' or a smaller screen_m"
            )
        candidates = itertools.combinations(pool.tolist(), cfg.k)

    best_B: Optional[tuple[int, ...]] = None
    best_score = -np.inf
    best_V = None
    scores: dict[tuple[int, ...], float] = {}
    for B in candidates:
        B = tuple(sorted(int(i) for i in B))
        _, V = _restricted_top(lam1, np.asarray(B), cfg.d)
        score = float(np.sum(V * (lam2 @ V)))
        scores[B] = score
        if score > best_score or (score == best_score and B < best_B):
            best_B, best_score, best_V = B, score, V
    if best_B is None:
        raise ConfigError("no candidate supports to evaluate")
    return best_V, best_B, scores


def aggregation_estimator(data: Dataset, cfg: AggregationConfig, seed) -> SubspaceEstimate:
    """Two-split aggregation estimator over supports of size ``cfg.k``.

    The sample is split at random into halves; each half gets its own SIR
    matrix with ``cfg.H`` slices.  For every candidate support ``B`` the
    support-restricted top-``d`` eigenspace of the first half is scored by its
    trace against the second half, and the best-scoring one is returned.
    """
    if data.n < 2 * cfg.H:
        raise ConfigError(f"n={data.n} must be at least 2H={2 * cfg.H}")
    first, second = split_halves(data.n, seed)
    lam1 = estimate_lambda(slice_data(data.subset(first), cfg.H)).lambda_hat
    lam2 = estimate_lambda(slice_data(data.subset(second), cfg.H)).lambda_hat
    V, B, scores = aggregate_supports(lam1, lam2, cfg)
    eigs = np.linalg.eigvalsh(lam1[np.ix_(B, B)])[::-1][: cfg.d]
    return SubspaceEstimate(
        V, eigs, support=np.asarray(B), info={"score": scores[B], "candidates": len(scores)}
    )


def effective_support_size(s: float, q: float, p: int, d: int, n: float, lam: float) -> int:
    """Effective support size ``ceil(x*)``, capped at ``p``.

    ``x*`` is the largest ``x`` in ``(0, p]`` with
    ``x <= s * (n*lam / (d + log(e*p/x))) ** (q/2)``.  The right-hand side
    grows with ``x``, so ``x*`` is located by bisection and then snapped to
    the smallest integer ``j`` with ``j >= rhs(j)``.
    """
    if not 0 <= q < 2:
        raise ConfigError("q must lie in [0, 2)")
    if s < 1 or p < 1 or d < 1 or not n > 0 or not lam > 0:
        raise ConfigError("need s >= 1, p >= 1, d >= 1, n > 0 and lam > 0")
    a = n * lam

    def gap(x: float) -> float:
        return x - s * (a / (d + 1.0 + math.log(p / x))) ** (q / 2.0)

    if gap(float(p)) <= 0:
        return p
    lo, hi = 1e-300, float(p)
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if gap(mid) <= 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * hi:
            break
    k = max(1, math.floor(lo))
    while k < p and gap(float(k)) < 0:
        k += 1
    while k > 1 and gap(float(k - 1)) >= 0:
        k -= 1
    return min(k, p)


def weak_lq_radius(V, q: float) -> float:
    """``max_j j * ||V_(j)||^q`` over row norms sorted in decreasing order.

    For ``q = 0`` zero rows contribute nothing, so the radius is the number
    of nonzero rows.
    """
    V = np.asarray(V, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    norms = np.sort(np.linalg.norm(V, axis=1))[::-1]
    j = np.arange(1, norms.size + 1)
    if q == 0:
        vals = np.where(norms > 0, j, 0)
    else:
        vals = j * norms**q
    return float(vals.max()) if vals.size else 0.0
