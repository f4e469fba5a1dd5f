"""CSV readers and writers for datasets, estimates and experiment summaries.

Floats are written with ``repr`` (shortest round-trip form) and lines end in
``\\n`` so output files are byte-stable across platforms.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import InputError
from .experiments import RiskSummary, eigen_ratios
from .models import Dataset
from .sir import SubspaceEstimate


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    value = float(value)
    if value.is_integer() and abs(value) < 2**53:
        return str(int(value))
    return repr(value)


def load_dataset_csv(path) -> Dataset:
    """Read a ``y,x1,...,xp`` CSV file.

    Raises :class:`InputError` naming the 1-based line of the first bad row.
    """
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise InputError(f"{path}: empty file")
        header = [h.strip() for h in header]
        if len(header) < 2 or header[0] != "y":
            raise InputError(f"{path}: line 1: header must be y,x1,...,xp")
        width = len(header)
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != width:
                raise InputError(f"{path}: line {line_no}: expected {width} fields, got {len(row)}")
            try:
                vals = [float(c) for c in row]
            except ValueError:
                raise InputError(f"{path}: line {line_no}: non-numeric value") from None
            if not all(math.isfinite(v) for v in vals):
                raise InputError(f"{path}: line {line_no}: NaN or infinite value")
            rows.append(vals)
    if len(rows) < 2:
        raise InputError(f"{path}: need at least 2 data rows")
    arr = np.asarray(rows)
    return Dataset(arr[:, 1:], arr[:, 0])


def write_dataset_csv(data: Dataset, path) -> None:
    header = ["y"] + [f"x{j + 1}" for j in range(data.p)]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for yi, xi in zip(data.y, data.X):
            w.writerow([repr(float(yi))] + [repr(float(v)) for v in xi])


def write_estimate_csv(est: SubspaceEstimate, path) -> None:
    """One row per estimated direction: ``component,eigenvalue,x1,...,xp``."""
    p = est.V.shape[0]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["component", "eigenvalue"] + [f"x{j + 1}" for j in range(p)])
        for j in range(est.d):
            w.writerow([j + 1, repr(float(est.eigenvalues[j]))] + [repr(float(v)) for v in est.V[:, j]])


def _eig(j: int, which: str) -> Callable[[RiskSummary], object]:
    def get(s: RiskSummary):
        vals = s.mean_eigs if which == "mean" else s.sd_eigs
        return vals[j] if j < len(vals) else None

    return get


def _ratio(j: int, which: int) -> Callable[[RiskSummary], object]:
    def get(s: RiskSummary):
        r = eigen_ratios(s)
        return r[j][which] if j < len(r) else None

    return get


SCHEMAS: dict[str, list[tuple[str, Callable[[RiskSummary], object]]]] = {
    "table1": [
        ("mu", lambda s: s.mu),
        ("n", lambda s: s.n),
        ("H", lambda s: s.H),
        ("p", lambda s: s.p),
        ("reps", lambda s: s.reps),
        ("mean_eig1", _eig(0, "mean")),
        ("sd_eig1", _eig(0, "sd")),
    ],
    "table2": [
        ("mu", lambda s: s.mu),
        ("n", lambda s: s.n),
        ("H", lambda s: s.H),
        ("p", lambda s: s.p),
        ("reps", lambda s: s.reps),
        ("ratio1_mean", _ratio(0, 0)),
        ("ratio1_sd", _ratio(0, 1)),
        ("ratio2_mean", _ratio(1, 0)),
        ("ratio2_sd", _ratio(1, 1)),
    ],
    "dtsir": [
        ("model", lambda s: s.model),
        ("p", lambda s: s.p),
        ("s", lambda s: s.s),
        ("kappa", lambda s: s.kappa),
        ("n", lambda s: s.n),
        ("reps", lambda s: s.reps),
        ("failures", lambda s: s.failures),
        ("mean_loss", lambda s: s.mean_loss),
        ("sd_loss", lambda s: s.sd_loss),
        ("mean_kappa_loss", lambda s: s.mean_kappa_loss),
    ],
    "generic": [
        ("model", lambda s: s.model),
        ("mu", lambda s: s.mu),
        ("p", lambda s: s.p),
        ("s", lambda s: s.s),
        ("n", lambda s: s.n),
        ("H", lambda s: s.H),
        ("kappa", lambda s: s.kappa),
        ("estimator", lambda s: s.estimator),
        ("reps", lambda s: s.reps),
        ("failures", lambda s: s.failures),
        ("mean_loss", lambda s: s.mean_loss),
        ("sd_loss", lambda s: s.sd_loss),
        ("mean_kappa_loss", lambda s: s.mean_kappa_loss),
        ("mean_eig1", _eig(0, "mean")),
        ("sd_eig1", _eig(0, "sd")),
        ("mean_eig2", _eig(1, "mean")),
        ("sd_eig2", _eig(1, "sd")),
    ],
}


def write_results_csv(summaries: Sequence[RiskSummary], path, schema: str = "generic") -> None:
    """Write summaries under one of the fixed column layouts in :data:`SCHEMAS`."""
    if not summaries:
        raise InputError("no summaries to write")
    if schema not in SCHEMAS:
        raise InputError(f"unknown schema {schema!r}")
    cols = SCHEMAS[schema]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([name for name, _ in cols])
        for s in summaries:
            w.writerow([fmt(get(s)) for _, get in cols])
