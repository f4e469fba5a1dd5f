"""Sliced inverse regression.

Samples are sorted by ``y`` and cut into ``H`` contiguous slices; the
conditional covariance ``var(E[x|y])`` is estimated by

    Lambda_H = (1/H) * sum_h xbar_h xbar_h^T

and the central subspace by its top ``d`` eigenvectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError
from .linalg import sym_eig_topd, symmetrize
from .models import Dataset, ModelSpec


@dataclass(frozen=True)
class SlicedView:
    """A dataset cut into ``H`` slices along the order statistics of ``y``.

    Attributes
    ----------
    order : ndarray (n,)
        Sample indices sorted by ``(y, original index)``.
    slice_assignment : ndarray (n,)
        Slice index of every sample, in the original sample order.
    slice_means : ndarray (H, p)
    overall_mean : ndarray (p,)
    slice_sizes : ndarray (H,)
        The first ``n mod H`` slices hold ``ceil(n/H)`` samples, the rest ``floor(n/H)``.
    """

    H: int
    order: np.ndarray
    slice_assignment: np.ndarray
    slice_means: np.ndarray
    overall_mean: np.ndarray
    slice_sizes: np.ndarray

    @property
    def n(self) -> int:
        return int(self.slice_sizes.sum())

    @property
    def p(self) -> int:
        return self.slice_means.shape[1]


@dataclass(frozen=True)
class CondCovEstimate:
    """The SIR estimate of ``var(E[x|y])`` and how it was computed."""

    lambda_hat: np.ndarray
    H: int
    n: int
    centered: bool = False

    @property
    def p(self) -> int:
        return self.lambda_hat.shape[0]


@dataclass(frozen=True)
class SubspaceEstimate:
    """A column-orthonormal ``p x d`` basis ``V`` of an estimated central subspace."""

    V: np.ndarray
    eigenvalues: np.ndarray
    support: Optional[np.ndarray] = None
    info: dict = field(default_factory=dict, compare=False)

    @property
    def d(self) -> int:
        return self.V.shape[1]


def slice_sizes(n: int, H: int) -> np.ndarray:
    sizes = np.full(H, n // H, dtype=int)
    sizes[: n % H] += 1
    return sizes


def slice_data(data: Dataset, H: int, order: Optional[np.ndarray] = None, X_sorted=None) -> SlicedView:
    """Sort samples by ``y`` (stable) and cut them into ``H`` near-equal slices.

    ``order`` and ``X_sorted`` (``data.X[order]``) may be passed in to reuse
    one sort across several slice counts.
    """
    n = data.n
    if not 2 <= H <= n:
        raise ConfigError(f"H={H} must satisfy 2 <= H <= n={n}")
    if order is None:
        order = np.argsort(data.y, kind="stable")
    if X_sorted is None:
        X_sorted = data.X[order]
    sizes = slice_sizes(n, H)
    starts = np.concatenate(([0], np.cumsum(sizes)[:-1]))
    sums = np.add.reduceat(X_sorted, starts, axis=0)
    assignment = np.empty(n, dtype=int)
    assignment[order] = np.repeat(np.arange(H), sizes)
    return SlicedView(
        H=H,
        order=order,
        slice_assignment=assignment,
        slice_means=sums / sizes[:, None],
        overall_mean=data.X.mean(axis=0),
        slice_sizes=sizes,
    )


def estimate_lambda(view: SlicedView, centered: bool = False) -> CondCovEstimate:
    """``(1/H) sum_h m_h m_h^T`` over slice means ``m_h``.

    With ``centered=True`` the overall mean is subtracted from every slice
    mean first, which is what one wants for data whose mean is not zero.
    """
    M = view.slice_means - view.overall_mean if centered else view.slice_means
    lam = symmetrize(M.T @ M / view.H)
    return CondCovEstimate(lam, H=view.H, n=view.n, centered=centered)


def max_rank(est: CondCovEstimate) -> int:
    return min(est.p, est.H - 1 if est.centered else est.H)


def sir_subspace(est: CondCovEstimate, d: int) -> SubspaceEstimate:
    """Top-``d`` eigenvectors of the SIR matrix."""
    if not 1 <= d <= max_rank(est):
        raise ConfigError(
            f"d={d} exceeds the attainable rank {max_rank(est)} "
            f"(p={est.p}, H={est.H}, centered={est.centered})"
        )
    eigs, V = sym_eig_topd(est.lambda_hat, d)
    return SubspaceEstimate(V, eigs, info={"H": est.H, "n": est.n})


def top_eigenvalues(est: CondCovEstimate, d: int) -> np.ndarray:
    """The ``d`` largest eigenvalues of the SIR matrix, descending."""
    if not 1 <= d <= est.p:
        raise ConfigError(f"d={d} must satisfy 1 <= d <= p={est.p}")
    return np.linalg.eigvalsh(est.lambda_hat)[::-1][:d].copy()


def sir(data: Dataset, H: int, d: int, centered: bool = False) -> SubspaceEstimate:
    """Slice, estimate and extract in one call."""
    return sir_subspace(estimate_lambda(slice_data(data, H), centered=centered), d)


def _residual_variance(z_sorted: np.ndarray) -> float:
    # first-difference (Rice) estimator of E[var(z | y)] along the y-ordering
    diffs = np.diff(z_sorted)
    return float(diffs @ diffs) / (2.0 * diffs.size)


def sliced_stability_diagnostic(
    data: Dataset, spec: ModelSpec, H_list: Sequence[int]
) -> dict[int, Optional[float]]:
    """Empirical within-slice variance ratio of the central curve, per ``H``.

    For each true direction ``b`` (column of ``spec.true_V``) with
    ``z = X b`` sorted by ``y``::

        ratio(H) = max(0, mean_h var(z | slice h) - r) / (var(z) - r)

    where ``r`` is the first-difference estimate of ``E[var(z | y)]``.  The
    numerator approximates ``(1/H) sum_h var(b^T m(Y) | slice h)`` and the
    denominator ``var(b^T m(Y))``.  The reported value is the max over
    directions.  A direction whose denominator is indistinguishable from zero
    is skipped; ``None`` means every direction was skipped.

    This is a qualitative diagnostic with a normalization of our choosing,
    not an estimator with guarantees.
    """
    if spec.true_V is None:
        raise ConfigError("sliced stability diagnostic needs the true loading matrix")
    if spec.p != data.p:
        raise ConfigError(f"model has p={spec.p} but data has p={data.p}")
    n = data.n
    order = np.argsort(data.y, kind="stable")
    Z = (data.X @ spec.true_V)[order]
    floor = 6.0 / math.sqrt(n)

    usable = []
    for j in range(Z.shape[1]):
        z = Z[:, j]
        total = float(np.var(z, ddof=1))
        resid = _residual_variance(z)
        signal = total - resid
        if signal > floor * total:
            usable.append((z, resid, signal))

    out: dict[int, Optional[float]] = {}
    for H in H_list:
        if not 2 <= H <= n // 2:
            raise ConfigError(f"H={H} must satisfy 2 <= H <= n/2 for within-slice variances")
        if not usable:
            out[H] = None
            continue
        starts = np.concatenate(([0], np.cumsum(slice_sizes(n, H))))
        ratios = []
        for z, resid, signal in usable:
            within = np.mean([np.var(z[a:b], ddof=1) for a, b in zip(starts[:-1], starts[1:])])
            ratios.append(max(0.0, float(within) - resid) / signal)
        out[H] = max(ratios)
    return out
