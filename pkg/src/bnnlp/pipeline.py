"""End-to-end orchestration: data -> shock -> per-target NLPs -> files."""

from __future__ import annotations

import csv
import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .config import RunConfig
from .data import git_blob_hash, load_and_transform
from .exceptions import BnnlpError, DataError
from .nlp import NlpResult, estimate_sequential, rescale_for_comparison, unconditional_nlp
from .structural_id import ShockSeries, VarSpec, extract_shock, fit_var_ols

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["variable", "horizon", "tau", "q16", "q50", "q84", "rescaled_q16", "rescaled_q50", "rescaled_q84"]


class StageError(BnnlpError):
    """Wraps a module error with the pipeline stage it came from."""

    def __init__(self, stage: str, error: Exception):
        super().__init__(f"[{stage}] {error}")
        self.stage = stage
        self.error = error


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except BnnlpError as exc:
        raise StageError(name, exc) from exc


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def result_rows(result: NlpResult) -> list[list[str]]:
    q = result.quantiles()
    rows = []
    for k, tau in enumerate(result.taus):
        if tau == 0:
            rq = np.zeros((len(result.horizons), 3))
        else:
            rq = rescale_for_comparison(result, tau).quantiles()[:, 0]
        for i, h in enumerate(result.horizons):
            rows.append([result.variable, str(int(h)), format(float(tau), "g"),
                         *(_fmt(v) for v in q[i, k]), *(_fmt(v) for v in rq[i])])
    rows.sort(key=lambda r: (int(r[1]), list(result.taus).index(float(r[2]))))
    return rows


def serialize_results(result: NlpResult, path) -> Path:
    """Write the long-form quantile CSV for one target variable."""
    path = Path(path)
    if result.draws.size == 0:
        raise DataError("cannot serialize an empty result")
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        writer.writerows(result_rows(result))
    return path


def write_manifest(path, cfg: RunConfig, input_hash: str, diagnostics: dict, outputs: list[str]) -> Path:
    manifest = {
        "package_version": __version__,
        "config": cfg.to_dict(),
        "seed": cfg.chain.seed,
        "input_hash": input_hash,
        "diagnostics": diagnostics,
        "outputs": outputs,
    }
    path = Path(path)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def result_filename(variable: str) -> str:
    return "nlp_" + re.sub(r"[^A-Za-z0-9_.-]+", "_", variable) + ".csv"


def compute_shock(panel: pd.DataFrame, cfg: RunConfig) -> ShockSeries:
    order = cfg.variable_order
    spec = VarSpec(p=cfg.var.p, variable_order=tuple(order), include_intercept=cfg.var.include_intercept)
    fit = _stage("var", fit_var_ols, panel[order], spec)
    return _stage("shock", extract_shock, fit.residuals, fit.sigma, panel.index[spec.p:])


def lp_inputs(panel: pd.DataFrame, shock: ShockSeries, target: str, cfg: RunConfig):
    """Aligned ``(y, zeta, X, index)`` with ``X = [lags 1..n_lags of all VAR variables, 1]``."""
    order = cfg.variable_order
    p, n_lags = cfg.var.p, cfg.n_lags
    start = max(p, n_lags)
    values = panel[order].to_numpy(dtype=float)
    T = len(panel)
    lags = [values[start - k:T - k] for k in range(1, n_lags + 1)]
    X = np.column_stack(lags + [np.ones(T - start)])
    y = panel[target].to_numpy(dtype=float)[start:]
    zeta = shock.zeta[start - p:]
    return y, zeta, X, panel.index[start:]


def _fit_target(i: int, target: str, panel, shock, cfg: RunConfig):
    y, zeta, X, index = lp_inputs(panel, shock, target, cfg)
    seed = int(np.random.SeedSequence([cfg.chain.seed, i]).generate_state(1)[0])
    chain_cfg = replace(cfg.chain, seed=seed)
    fit = _stage(f"estimate:{target}", estimate_sequential, y, zeta, X, cfg.horizons, chain_cfg,
                 use_network=cfg.use_network, hidden_layers=cfg.hidden_layers,
                 neurons=None if cfg.neurons == "K" else cfg.neurons, standardize=cfg.standardize)
    result = _stage(f"nlp:{target}", unconditional_nlp, fit, cfg.shock_sizes, cfg.n_paths,
                    np.random.default_rng([cfg.chain.seed, i, 1]))
    result.variable = target
    diag = [{k: v for k, v in c.diagnostics.items() if k != "timing"} for c in fit.chains]
    return result, diag


def run_pipeline(cfg: RunConfig, threads: int = 1, out_dir=None) -> dict[str, Path]:
    """Run every stage and write one CSV per target plus ``manifest.json``."""
    cfg.validate()
    out = Path(out_dir or cfg.output_dir)
    columns = list(dict.fromkeys(cfg.variable_order + list(cfg.targets)))
    panel = _stage("load", load_and_transform, cfg.dataset, columns)
    input_hash = git_blob_hash(Path(cfg.dataset.csv_path).read_bytes())
    shock = compute_shock(panel, cfg)
    logger.info("extracted %d structural shocks", len(shock.zeta))

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        futures = [pool.submit(_fit_target, i, t, panel, shock, cfg) for i, t in enumerate(cfg.targets)]
        fitted = [f.result() for f in futures]

    paths = {}
    diagnostics = {}
    for target, (result, diag) in zip(cfg.targets, fitted):
        paths[target] = _stage("serialize", serialize_results, result, out / result_filename(target))
        diagnostics[target] = diag
    paths["manifest"] = write_manifest(out / "manifest.json", cfg, input_hash, diagnostics,
                                       [p.name for p in paths.values()])
    return paths
