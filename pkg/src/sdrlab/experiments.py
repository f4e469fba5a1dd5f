"""Seeded Monte Carlo harness and the preset experiment grids.

Replication ``r`` of a model draws its sample from the stream
``SeedSequence([seed, model_key, r])``.  The key depends on the model only,
not on ``n``, ``H`` or ``kappa``: a cell with sample size ``n`` sees the
first ``n`` rows of that replication's sample (see :func:`models.generate`).
Cells sharing a model are therefore evaluated on common random numbers, and
one draw at the largest ``n`` serves them all.  Results do not depend on the
thread count or on the order in which cells are listed.
"""

from __future__ import annotations

import hashlib
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, SDRError
from .linalg import projection_loss
from .models import (
    Dataset,
    ModelSpec,
    dtsir_model,
    generate,
    kappa_to_n,
    linear_mu,
    make_dtsir_beta,
    two_index_conjecture,
)
from .sir import estimate_lambda, sir_subspace, slice_data, top_eigenvalues
from .sparse import (
    AggregationConfig,
    ThresholdConfig,
    aggregation_estimator,
    dt_sir_from_estimate,
    oracle_estimator,
)

log = logging.getLogger(__name__)

ESTIMATORS = ("sir", "dtsir", "oracle", "aggregation")
FAILURE_TOLERANCE = 0.10

TABLE1_MUS = (0.5, 0.3, 0.1)
TABLE1_NS = (5_000, 10_000, 50_000, 100_000)
TABLE1_HS = (2, 5, 10, 50, 100, 200, 500)
TABLE2_MUS = (1.0, 0.5, 0.1, 0.05, 0.01, 0.005, 0.001)
TABLE2_NS = (1_000, 10_000, 100_000)
TABLE2_LARGE_N = 1_000_000
DTSIR_PS = (100, 200, 300, 600, 1200)
DTSIR_KAPPAS = tuple(range(3, 62, 2))


@dataclass(frozen=True)
class Cell:
    """One point of an experiment grid."""

    model: ModelSpec
    n: int
    H: int
    estimator: str = "sir"
    d: int = 1
    n_eigs: int = 0
    reps: int = 100
    kappa: Optional[float] = None
    threshold: ThresholdConfig = field(default_factory=ThresholdConfig)
    k: Optional[int] = None
    centered: bool = False

    def __post_init__(self):
        if self.estimator not in ESTIMATORS:
            raise ConfigError(f"estimator must be one of {ESTIMATORS}, got {self.estimator!r}")
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if not 2 <= self.H <= self.n:
            raise ConfigError(f"H={self.H} must satisfy 2 <= H <= n={self.n}")
        if self.estimator == "aggregation" and self.k is None:
            raise ConfigError("aggregation estimator needs k")


@dataclass(frozen=True)
class RiskSummary:
    """Monte Carlo aggregates for one cell.

    Means and standard deviations are over successful replications; sample
    standard deviations use ``reps - 1`` and are 0 for a single replication.
    """

    model: str
    p: int
    s: int
    mu: Optional[float]
    n: int
    H: int
    kappa: Optional[float]
    estimator: str
    reps: int
    failures: int
    seed: int
    mean_loss: float
    sd_loss: float
    mean_eigs: tuple[float, ...]
    sd_eigs: tuple[float, ...]
    mean_kappa_loss: Optional[float]

    @property
    def ok(self) -> bool:
        return self.failures <= FAILURE_TOLERANCE * self.reps


class CellError(SDRError):
    """A cell had more failed replications than the tolerance allows."""


def model_key(spec: ModelSpec) -> int:
    """Stable 64-bit identifier of a model, used to key replication streams."""
    h = hashlib.sha256()
    h.update(repr((spec.link, spec.label, spec.mu, spec.noise_sd, spec.true_V.shape)).encode())
    h.update(np.ascontiguousarray(spec.true_V).tobytes())
    return int.from_bytes(h.digest()[:8], "little")


def replication_seed(seed: int, spec: ModelSpec, rep: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), model_key(spec), int(rep)])


def _mean_sd(values: Sequence[float]) -> tuple[float, float]:
    if not values:
        return math.nan, math.nan
    mean = math.fsum(values) / len(values)
    if len(values) == 1:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (len(values) - 1)
    return mean, math.sqrt(var)


class _RepContext:
    """Caches per-replication work shared by the cells of one model."""

    def __init__(self, data: Dataset):
        self.data = data
        self._sorted: dict[int, tuple] = {}
        self._lams: dict[tuple, object] = {}

    def prefix(self, n: int) -> Dataset:
        return self.data if n == self.data.n else self.data.subset(slice(0, n))

    def lam(self, n: int, H: int, centered: bool):
        key = (n, H, centered)
        if key not in self._lams:
            if n not in self._sorted:
                data = self.prefix(n)
                order = np.argsort(data.y, kind="stable")
                self._sorted[n] = (data, order, data.X[order])
            data, order, Xs = self._sorted[n]
            self._lams[key] = estimate_lambda(slice_data(data, H, order, Xs), centered=centered)
        return self._lams[key]


def _evaluate(cell: Cell, ctx: _RepContext, rep_seed) -> tuple[float, np.ndarray]:
    V_true = cell.model.true_V
    if cell.estimator == "aggregation":
        cfg = AggregationConfig(k=cell.k, d=cell.d, H=cell.H)
        split_seed = np.random.SeedSequence(rep_seed.entropy, spawn_key=(2,))
        est = aggregation_estimator(ctx.prefix(cell.n), cfg, split_seed)
        lam = None
    else:
        lam = ctx.lam(cell.n, cell.H, cell.centered)
        if cell.estimator == "sir":
            est = sir_subspace(lam, cell.d)
        elif cell.estimator == "dtsir":
            est = dt_sir_from_estimate(lam, cell.threshold)
        else:
            est = oracle_estimator(lam, cell.model.support, cell.d)
    loss = projection_loss(est.V, V_true)
    eigs = top_eigenvalues(lam, cell.n_eigs) if (cell.n_eigs and lam is not None) else np.empty(0)
    return loss, eigs


def _run_group(cells: list[Cell], seed: int, rep: int):
    spec = cells[0].model
    rep_seed = replication_seed(seed, spec, rep)
    n_max = max(c.n for c in cells if c.reps > rep)
    ctx = _RepContext(generate(spec, n_max, rep_seed))
    out = []
    for cell in cells:
        if cell.reps <= rep:
            out.append(None)
            continue
        try:
            out.append(_evaluate(cell, ctx, rep_seed))
        except (SDRError, np.linalg.LinAlgError) as exc:
            log.debug("replication %d failed: %s", rep, exc)
            out.append(exc)
    return out


def resolve_threads(threads: Optional[int]) -> int:
    if threads is None:
        return 1
    if threads < 0:
        raise ConfigError("threads must be >= 0")
    return threads or (os.cpu_count() or 1)


def run_cells(
    cells: Sequence[Cell], seed: int, threads: Optional[int] = 1, strict: bool = False
) -> list[RiskSummary]:
    """Run every cell and return one summary per cell, in input order.

    Replications of cells sharing a model are evaluated together on one
    draw.  Failed replications (estimation errors) are counted; with
    ``strict=True`` a cell whose failure rate exceeds 10% raises
    :class:`CellError`, otherwise its summary has ``ok == False``.
    """
    cells = list(cells)
    groups: dict[int, list[int]] = {}
    for i, c in enumerate(cells):
        groups.setdefault(model_key(c.model), []).append(i)

    tasks = []
    for idx in groups.values():
        group = [cells[i] for i in idx]
        for rep in range(max(c.reps for c in group)):
            tasks.append((idx, group, rep))

    def work(task):
        idx, group, rep = task
        return idx, rep, _run_group(group, seed, rep)

    n_threads = resolve_threads(threads)
    if n_threads == 1:
        results = [work(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(work, tasks))

    per_cell: list[dict[int, object]] = [{} for _ in cells]
    for idx, rep, outs in results:
        for i, res in zip(idx, outs):
            if res is not None:
                per_cell[i][rep] = res

    summaries = []
    for cell, outcomes in zip(cells, per_cell):
        summary = _summarize(cell, [outcomes[r] for r in sorted(outcomes)], seed)
        if strict and not summary.ok:
            raise CellError(
                f"{summary.failures}/{summary.reps} replications failed for "
                f"{summary.model} n={summary.n} H={summary.H}"
            )
        summaries.append(summary)
    return summaries


def _summarize(cell: Cell, outcomes: list, seed: int) -> RiskSummary:
    good = [o for o in outcomes if not isinstance(o, Exception)]
    losses = [o[0] for o in good]
    mean_loss, sd_loss = _mean_sd(losses)
    mean_eigs, sd_eigs = [], []
    for j in range(cell.n_eigs):
        m, sd = _mean_sd([float(o[1][j]) for o in good])
        mean_eigs.append(m)
        sd_eigs.append(sd)
    return RiskSummary(
        model=cell.model.label,
        p=cell.model.p,
        s=cell.model.s,
        mu=cell.model.mu,
        n=cell.n,
        H=cell.H,
        kappa=cell.kappa,
        estimator=cell.estimator,
        reps=cell.reps,
        failures=len(outcomes) - len(good),
        seed=int(seed),
        mean_loss=mean_loss,
        sd_loss=sd_loss,
        mean_eigs=tuple(mean_eigs),
        sd_eigs=tuple(sd_eigs),
        mean_kappa_loss=None if cell.kappa is None else cell.kappa * mean_loss,
    )


def run_cell(cell: Cell, seed: int, threads: Optional[int] = 1, strict: bool = True) -> RiskSummary:
    """Run a single cell; raises :class:`CellError` on too many failures unless ``strict=False``."""
    return run_cells([cell], seed, threads=threads, strict=strict)[0]


# presets


def table1_cells(
    p: int = 10,
    mus: Sequence[float] = TABLE1_MUS,
    ns: Sequence[int] = TABLE1_NS,
    Hs: Sequence[int] = TABLE1_HS,
    reps: int = 100,
) -> list[Cell]:
    """Eigenvalue-vs-slice-count grid for the linear model; cells with H > n are skipped."""
    return [
        Cell(linear_mu(mu, p=p), n=n, H=H, estimator="sir", d=1, n_eigs=1, reps=reps)
        for mu in mus
        for n in ns
        for H in Hs
        if H <= n
    ]


def preset_table1(seed: int, threads: Optional[int] = 1, **grid) -> list[RiskSummary]:
    return run_cells(table1_cells(**grid), seed, threads=threads)


def table2_cells(
    p: int = 10,
    mus: Sequence[float] = TABLE2_MUS,
    ns: Sequence[int] = TABLE2_NS,
    H: int = 20,
    reps: int = 100,
    large_reps: int = 20,
    allow_large: bool = False,
) -> list[Cell]:
    """Two-index model grid; ``n >= 10^5`` cells use ``large_reps`` replications."""
    ns = list(ns)
    if allow_large and TABLE2_LARGE_N not in ns:
        ns.append(TABLE2_LARGE_N)
    if not allow_large and any(n >= TABLE2_LARGE_N for n in ns):
        raise ConfigError("n >= 10^6 cells need allow_large (--allow-large)")
    return [
        Cell(
            two_index_conjecture(mu, p=p),
            n=n,
            H=H,
            estimator="sir",
            d=2,
            n_eigs=2,
            reps=large_reps if n >= 100_000 else reps,
        )
        for n in ns
        for mu in mus
    ]


def preset_table2(seed: int, threads: Optional[int] = 1, **grid) -> list[RiskSummary]:
    return run_cells(table2_cells(**grid), seed, threads=threads)


def eigen_ratios(summary: RiskSummary) -> tuple[tuple[float, float], ...]:
    """``(mean, sd)`` of each recorded eigenvalue divided by ``mu``."""
    return tuple((m / summary.mu, sd / summary.mu) for m, sd in zip(summary.mean_eigs, summary.sd_eigs))


def dtsir_cells(
    seed: int,
    ps: Sequence[int] = DTSIR_PS,
    kappas: Sequence[float] = DTSIR_KAPPAS,
    models: Sequence[int] = (1, 2, 3, 4),
    delta: float = 0.5,
    H: int = 10,
    c1: float = 2.0,
    reps: int = 100,
) -> list[Cell]:
    """DT-SIR grid: ``s = floor(p^(1-delta))`` and ``n = floor(kappa s log(p-s))``.

    The sign pattern of ``beta`` is drawn once per ``p`` from ``seed``.
    """
    cells = []
    for which in models:
        for p in ps:
            beta, s = make_dtsir_beta(p, delta, seed=np.random.SeedSequence([int(seed), p]))
            spec = dtsir_model(which, beta)
            for kappa in kappas:
                cells.append(
                    Cell(
                        spec,
                        n=kappa_to_n(kappa, s, p),
                        H=H,
                        estimator="dtsir",
                        reps=reps,
                        kappa=kappa,
                        threshold=ThresholdConfig(c1=c1),
                    )
                )
    return cells


def preset_dtsir_curves(seed: int, threads: Optional[int] = 1, **grid) -> list[RiskSummary]:
    return run_cells(dtsir_cells(seed, **grid), seed, threads=threads)


def with_reps(cells: Sequence[Cell], reps: int) -> list[Cell]:
    return [replace(c, reps=reps) for c in cells]
