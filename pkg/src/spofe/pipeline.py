"""End-to-end orchestration: dataset in, selection report out.

The report is built as a plain dict with a fixed key order and serialized
with json.dumps, so identical (config, seed, input) produce byte-identical
files. Wall-clock timings are collected on the report object for logging
but deliberately excluded from the serialized form.
"""

import json
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from ._version import __version__
from .dataio import Dataset, PipelineConfig, parse_selection, standardize, subsample
from .errors import SpofeError
from .inference import (
    fit_component,
    pvalues_lognormal,
    pvalues_percentile,
    select_bh,
    select_fixed,
    select_threshold,
    select_varying,
)
from .kernels import KernelSpec, center, kernel_matrix
from .knockoff import weko
from .kpca import s4gen
from .polybasis import build_basis, expand, term_name

SCHEMA_VERSION = 1


@dataclass
class SelectionReport:
    """Self-describing result of one pipeline run.

    body holds everything that is serialized; timings (seconds per stage)
    live next to it for logging and never enter the JSON bytes, which must
    be identical across reruns.
    """

    body: dict
    timings: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return self.body

    def to_json(self) -> str:
        return json.dumps(self.body, indent=2) + "\n"


@contextmanager
def _stage(name: str, timings: dict):
    t0 = time.perf_counter()
    try:
        yield
    except SpofeError as e:
        if not hasattr(e, "stage"):
            e.stage = name
        raise
    finally:
        timings[name] = time.perf_counter() - t0


def _floats(a) -> list:
    return [float(v) for v in np.asarray(a).ravel()]


def run_pipeline(config: PipelineConfig, data: Dataset,
                 component_fits: bool = False,
                 input_name: str = "") -> SelectionReport:
    """Run the full pipeline on an in-memory dataset.

    Stages: row cap, standardization, kernel + centering, signal
    extraction, polynomial expansion, weighted knockoff scoring,
    p-values, selection, optional per-signal fits on the selected
    support. Any SpofeError raised inside is tagged with its stage name.
    """
    timings: dict = {}
    n_raw, p_raw = data.n, data.p

    with _stage("subsample", timings):
        data = subsample(data, config.max_rows, config.seed)

    with _stage("standardize", timings):
        data, std_params = standardize(data)

    spec = KernelSpec(
        kind=config.kernel,
        gamma=config.gamma,
        coef0=config.coef0,
        rff_dim=config.rff_dim,
        rff_seed=config.seed,
    ).resolve(data.p)

    with _stage("kernel", timings):
        k = kernel_matrix(spec, data)

    with _stage("center", timings):
        kc = center(k)

    with _stage("kpca", timings):
        m = min(config.num_components, kc.n)
        bundle = s4gen(kc, m)

    with _stage("expand", timings):
        basis = build_basis(data.p)
        fm = expand(basis, data)

    with _stage("knockoffs", timings):
        scores = weko(
            fm,
            bundle,
            lambda_rule=config.lasso_lambda,
            seed=config.seed,
            delta=config.knockoff_delta,
            tol=config.lasso_tol,
            max_iter=config.lasso_max_iter,
        )

    with _stage("pvalues", timings):
        if config.pvalue_method == "percentile":
            pv = pvalues_percentile(scores)
        else:
            pv = pvalues_lognormal(scores)

    with _stage("selection", timings):
        sel_spec = parse_selection(config.selection)
        if sel_spec["kind"] == "threshold":
            result = select_threshold(pv, scores, sel_spec["alpha"])
        elif sel_spec["kind"] == "bh":
            result = select_bh(pv, scores, sel_spec["alpha"])
        elif sel_spec["kind"] == "fixed":
            result = select_fixed(pv, scores, sel_spec["r"])
        else:
            result = select_varying(
                pv, scores, fm, bundle,
                candidates=sel_spec["candidates"],
                folds=config.cv_folds,
                ridge_alpha=config.ridge_alpha,
                seed=config.seed,
            )

    fits = None
    if component_fits:
        with _stage("component_fits", timings):
            support = result.selected if result.selected else (0,)
            fits = []
            for j in range(bundle.m_eff):
                cf = fit_component(fm, bundle.signals[:, j], support,
                                   component=j)
                fits.append({
                    "component": j,
                    "rmse": float(cf.rmse),
                    "support_size": len(cf.support),
                })

    names = data.column_names
    selected_set = set(result.selected)
    per_feature = []
    for idx in result.ranking:
        i = int(idx)
        per_feature.append({
            "index": i,
            "name": term_name(basis, i, names),
            "score": float(scores.s[i]),
            "p_value": float(pv.p[i]),
            "selected": i in selected_set,
        })

    selection_block = {
        "strategy": config.selection,
        "resolved": result.strategy,
        "threshold_used": (
            float(result.threshold_used)
            if result.threshold_used is not None else None
        ),
        "r_used": int(result.r_used) if result.r_used is not None else None,
        "num_selected": len(result.selected),
        "selected_indices": [int(i) for i in result.selected],
        "selected_names": [term_name(basis, int(i), names)
                           for i in result.selected],
    }
    if "cv_objective" in result.details:
        selection_block["cv_objective"] = {
            k: float(v) for k, v in result.details["cv_objective"].items()
        }

    body = {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "spofe", "version": __version__},
        "input": {
            "file": input_name,
            "n_rows": int(n_raw),
            "n_columns": int(p_raw),
            "n_rows_used": int(data.n),
            "columns_dropped": list(std_params.dropped_names),
        },
        "config": config.to_dict(),
        "kernel_resolved": {
            "kind": spec.kind,
            "gamma": float(spec.gamma),
            "coef0": float(spec.coef0),
            "rff_dim": int(spec.rff_dim),
        },
        "basis": {
            "p": int(data.p),
            "d_max": int(fm.d_max),
            "n_inert": int(fm.inert.sum()),
        },
        "signals": {
            "m_requested": int(bundle.m_requested),
            "m_eff": int(bundle.m_eff),
            "lambdas": _floats(bundle.lambdas),
            "eigenvalues": _floats(bundle.eigenvalues),
        },
        "knockoffs": {
            "delta": float(config.knockoff_delta),
            "lambda_used": _floats(scores.lambda_used),
        },
        "per_feature": per_feature,
        "selection": selection_block,
    }
    if fits is not None:
        body["component_fits"] = fits

    return SelectionReport(body=body, timings=timings)
