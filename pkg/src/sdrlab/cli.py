"""Command-line front end.

    sdrlab fit {sir,dtsir,oracle,aggregate} --input data.csv --out est.csv [...]
    sdrlab experiment {table1,table2,dtsir-curves,custom} --out DIR [...]

Settings may also come from ``--config FILE`` holding flat ``key=value``
lines; command-line flags override the file.  The seed falls back to the
``SDRLAB_SEED`` environment variable, then 0.

Exit status: 0 on success, 1 when some experiment cell exceeded its failure
tolerance, 2 on usage, configuration or input errors.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import experiments as ex
from .errors import ConfigError, EstimationError, SDRError
from .io import load_dataset_csv, write_estimate_csv, write_results_csv
from .models import kappa_to_n, model_from_config
from .plotting import plot_dtsir_curves, plot_table1
from .sir import estimate_lambda, sir_subspace, slice_data
from .sparse import (
    AggregationConfig,
    ThresholdConfig,
    aggregation_estimator,
    dt_sir,
    oracle_estimator,
)

log = logging.getLogger("sdrlab")

SEED_ENV = "SDRLAB_SEED"
CONFIG_KEYS = {
    "seed", "threads", "reps", "p", "H", "d", "c1", "t", "k", "centered", "allow_large",
    "mu", "n", "kappa", "model", "estimator", "delta", "beta_seed", "strategy", "screen_m",
    "support", "models", "plots",
}


def read_config(path) -> dict[str, str]:
    """Parse a flat ``key=value`` file; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {line_no}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown config key '{key}' (line {line_no})")
        out[key] = value
    return out


def _convert(key: str, value, kind):
    try:
        if kind is bool:
            if isinstance(value, bool):
                return value
            v = str(value).strip().lower()
            if v in ("1", "true", "yes", "on"):
                return True
            if v in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if kind == "ints":
            return [int(v) for v in str(value).split(",") if v.strip()]
        if kind == "floats":
            return [float(v) for v in str(value).split(",") if v.strip()]
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value for '{key}': {value!r}") from None


class Settings:
    """Flag values layered over config-file values."""

    def __init__(self, args: argparse.Namespace):
        self._file = read_config(args.config) if getattr(args, "config", None) else {}
        self._args = vars(args)

    def get(self, key: str, kind=str, default=None):
        val = self._args.get(key)
        if val is None:
            val = self._file.get(key)
        if val is None:
            return default
        return _convert(key, val, kind)

    def seed(self) -> int:
        val = self.get("seed", int)
        if val is None:
            env = os.environ.get(SEED_ENV)
            val = _convert(SEED_ENV, env, int) if env else 0
        if not 0 <= val < 2**64:
            raise ConfigError(f"invalid value for 'seed': must be a 64-bit unsigned integer, got {val}")
        return val


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sdrlab", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value settings file")
    common.add_argument("--seed", help="64-bit unsigned seed (default $SDRLAB_SEED or 0)")
    common.add_argument("--out", required=True, help="output file (fit) or directory (experiment)")
    common.add_argument("--H", help="slice count (comma list for table1)")
    common.add_argument("--d", help="central subspace dimension")
    common.add_argument("--c1", help="DT-SIR threshold constant")
    common.add_argument("--k", help="support size for the aggregation estimator")
    common.add_argument("--centered", action="store_const", const=True, default=None)

    fit = sub.add_parser("fit", parents=[common], help="estimate a central subspace from a CSV file")
    fit.add_argument("method", choices=["sir", "dtsir", "oracle", "aggregate"])
    fit.add_argument("--input", required=True, help="CSV file with header y,x1,...,xp")
    fit.add_argument("--t", help="explicit DT-SIR threshold (overrides --c1)")
    fit.add_argument("--support", help="1-based comma list of active coordinates (oracle)")
    fit.add_argument("--strategy", choices=["exhaustive", "top_diagonal_screen"])
    fit.add_argument("--screen-m", dest="screen_m")

    exp = sub.add_parser("experiment", parents=[common], help="run a Monte Carlo preset")
    exp.add_argument("preset", choices=["table1", "table2", "dtsir-curves", "custom"])
    exp.add_argument("--threads", help="worker threads, 0 = one per CPU")
    exp.add_argument("--p", help="ambient dimension (comma list for dtsir-curves)")
    exp.add_argument("--reps", help="replications per cell")
    exp.add_argument("--mu", help="comma list of signal levels")
    exp.add_argument("--n", help="comma list of sample sizes (custom)")
    exp.add_argument("--kappa", help="comma list of kappa values")
    exp.add_argument("--allow-large", dest="allow_large", action="store_const", const=True, default=None,
                     help="include the n = 10^6 cells of table2")
    exp.add_argument("--no-plots", dest="plots", action="store_const", const=False, default=None)
    return parser


def _fit(cfg: Settings, args) -> int:
    data = load_dataset_csv(args.input)
    method = args.method
    H = cfg.get("H", int, 10)
    d = cfg.get("d", int, 1)
    if H > data.n:
        raise ConfigError(f"H exceeds sample count (H={H}, n={data.n})")
    centered = cfg.get("centered", bool, False)
    if method == "sir":
        est = sir_subspace(estimate_lambda(slice_data(data, H), centered=centered), d)
    elif method == "dtsir":
        if d != 1:
            raise ConfigError("invalid value for 'd': dtsir estimates a single direction")
        est = dt_sir(data, H, ThresholdConfig(c1=cfg.get("c1", float, 2.0), t=cfg.get("t", float)))
    elif method == "oracle":
        support = cfg.get("support", "ints")
        if not support:
            raise ConfigError("missing value for 'support' (oracle needs --support)")
        if min(support) < 1 or max(support) > data.p:
            raise ConfigError(f"invalid value for 'support': indices must lie in 1..{data.p}")
        lam = estimate_lambda(slice_data(data, H), centered=centered)
        est = oracle_estimator(lam, [i - 1 for i in support], d)
    else:
        k = cfg.get("k", int)
        if k is None:
            raise ConfigError("missing value for 'k' (aggregate needs --k)")
        if 2 * H > data.n:
            raise ConfigError(f"H exceeds half the sample count (H={H}, n={data.n})")
        agg = AggregationConfig(
            k=k, d=d, H=H,
            candidate_strategy=cfg.get("strategy", str, "exhaustive"),
            screen_m=cfg.get("screen_m", int),
        )
        est = aggregation_estimator(data, agg, cfg.seed())
    write_estimate_csv(est, args.out)
    log.info("wrote %s", args.out)
    return 0


def _custom_cells(cfg: Settings, seed: int) -> list[ex.Cell]:
    base = {k: cfg.get(k) for k in ("model", "p", "delta", "beta_seed") if cfg.get(k) is not None}
    mus = cfg.get("mu", "floats") or [None]
    estimator = cfg.get("estimator", str, "sir")
    Hs = cfg.get("H", "ints") or [10]
    d = cfg.get("d", int, 1)
    reps = cfg.get("reps", int, 100)
    threshold = ThresholdConfig(c1=cfg.get("c1", float, 2.0))
    cells = []
    for mu in mus:
        spec_cfg = dict(base, beta_seed=base.get("beta_seed", seed))
        if mu is not None:
            spec_cfg["mu"] = mu
        spec = model_from_config(spec_cfg)
        kappas = cfg.get("kappa", "floats")
        if kappas:
            sizes = [(kappa_to_n(kap, spec.s, spec.p), kap) for kap in kappas]
        else:
            ns = cfg.get("n", "ints")
            if not ns:
                raise ConfigError("missing value for 'n' (or 'kappa') in custom experiment")
            sizes = [(n, None) for n in ns]
        for n, kap in sizes:
            for H in Hs:
                cells.append(ex.Cell(
                    spec, n=n, H=H, estimator=estimator, d=d,
                    n_eigs=min(d, 2) if estimator == "sir" else 0,
                    reps=reps, kappa=kap, threshold=threshold, k=cfg.get("k", int),
                    centered=cfg.get("centered", bool, False),
                ))
    return cells


def _experiment(cfg: Settings, args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = cfg.seed()
    threads = cfg.get("threads", int, 1)
    ex.resolve_threads(threads)
    reps = cfg.get("reps", int)
    plots = cfg.get("plots", bool, True)
    preset = args.preset

    if preset == "table1":
        grid = {}
        for key, name, kind in (("p", "p", int), ("mu", "mus", "floats"), ("H", "Hs", "ints")):
            if cfg.get(key) is not None:
                grid[name] = cfg.get(key, kind)
        if reps is not None:
            grid["reps"] = reps
        summaries = ex.preset_table1(seed, threads=threads, **grid)
        write_results_csv(summaries, out_dir / "table1.csv", "table1")
        if plots:
            plot_table1(summaries, out_dir)
    elif preset == "table2":
        grid = {"allow_large": cfg.get("allow_large", bool, False)}
        for key, name, kind in (("p", "p", int), ("mu", "mus", "floats"), ("H", "H", int)):
            if cfg.get(key) is not None:
                grid[name] = cfg.get(key, kind)
        if reps is not None:
            grid["reps"] = reps
        summaries = ex.preset_table2(seed, threads=threads, **grid)
        write_results_csv(summaries, out_dir / "table2.csv", "table2")
    elif preset == "dtsir-curves":
        grid = {}
        for key, name, kind in (("p", "ps", "ints"), ("kappa", "kappas", "floats"),
                                ("models", "models", "ints"), ("H", "H", int),
                                ("c1", "c1", float), ("delta", "delta", float)):
            if cfg.get(key) is not None:
                grid[name] = cfg.get(key, kind)
        if reps is not None:
            grid["reps"] = reps
        summaries = ex.preset_dtsir_curves(seed, threads=threads, **grid)
        write_results_csv(summaries, out_dir / "dtsir.csv", "dtsir")
        if plots:
            plot_dtsir_curves(summaries, out_dir)
    else:
        summaries = ex.run_cells(_custom_cells(cfg, seed), seed, threads=threads)
        write_results_csv(summaries, out_dir / "custom.csv", "generic")

    bad = [s for s in summaries if not s.ok]
    for s in bad:
        print(f"sdrlab: cell {s.model} p={s.p} n={s.n} H={s.H}: "
              f"{s.failures}/{s.reps} replications failed", file=sys.stderr)
    return 1 if bad else 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        cfg = Settings(args)
        if args.command == "fit":
            return _fit(cfg, args)
        return _experiment(cfg, args)
    except EstimationError as exc:
        print(f"sdrlab: estimation failed: {exc}", file=sys.stderr)
        return 1
    except SDRError as exc:
        print(f"sdrlab: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"sdrlab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
