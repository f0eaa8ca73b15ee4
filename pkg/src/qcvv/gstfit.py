"""Iterative maximum-likelihood model fitting over nested circuit lists.

Each estimator seeds from linear inversion (gauge-matched to the target
and projected into the estimator's parameterization), then for every
maximum length L runs a damped least-squares pass on the weighted
chi-square residuals followed by a log-likelihood polish on the same
circuit subset, warm-starting from the previous length.  The "Target"
estimator fits nothing and only records fit statistics; "Custom" fits
the provided model in its own parameterization without reseeding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .evaltree import build_eval_tree
from .gaugeopt import gauge_optimize
from .gstdesign import GstDesign
from .lgst import run_lgst
from .models import GateSetModel, set_parameterization
from .objectives import (DegreesOfFreedomError, chi2_residuals, freqs_and_totals,
                         logl_residuals, two_delta_logl, wilks_dof)
from .ops import OpTransformError
from .optimize import levenberg_marquardt
from .sim import bulk_dprobs_array, bulk_probs_array

STANDARD_ESTIMATORS = ("TP", "CPTP", "Target")


@dataclass
class FitRecord:
    estimator: str
    stage: str
    max_length: int
    n_circuits: int
    two_delta_logl: float
    k: int
    nsigma: float | None
    converged: bool = True
    grad_inf: float = 0.0

    def as_line(self) -> str:
        ns = "nan" if self.nsigma is None else f"{self.nsigma:.6g}"
        return (f"{self.estimator}\t{self.stage}\t{self.max_length}\t{self.n_circuits}\t"
                f"{self.two_delta_logl:.10g}\t{self.k}\t{ns}\t{int(self.converged)}\t"
                f"{self.grad_inf:.3g}")


@dataclass
class Estimate:
    name: str
    models: dict[str, GateSetModel]
    fit_records: list[FitRecord] = field(default_factory=list)
    notes: str = ""


@dataclass
class ModelEstimateResults:
    design: GstDesign
    dataset: object
    estimates: dict[str, Estimate] = field(default_factory=dict)


class FitOptions:
    def __init__(self, max_iter: int = 120, gtol: float = 1e-8):
        self.max_iter = max_iter
        self.gtol = gtol


def fit_model_to_data(model: GateSetModel, ds, circuits, objective: str = "logl",
                      options: FitOptions | None = None):
    """In-place damped least-squares fit; returns the optimizer result."""
    options = options or FitOptions()
    circuits = list(circuits)
    counts = ds.counts_for(circuits)
    f, totals = freqs_and_totals(counts)
    tree = build_eval_tree(circuits, mode="state")
    resfn = chi2_residuals if objective == "chi2" else logl_residuals

    def residuals(x):
        model.from_vector(x)
        p = bulk_probs_array(model, tree)
        r, _ = resfn(p, f, totals)
        return r

    def jacobian(x):
        model.from_vector(x)
        p = bulk_probs_array(model, tree)
        _, w = resfn(p, f, totals)
        dp = bulk_dprobs_array(model, tree)
        return (w[:, :, None] * dp).reshape(-1, model.num_params)

    result = levenberg_marquardt(residuals, jacobian, model.to_vector(),
                                 max_iter=options.max_iter, gtol=options.gtol)
    model.from_vector(result.x)
    return result


def _record(name, stage, model, ds, circuits, max_length, converged=True, grad=0.0):
    stat = two_delta_logl(model, ds, circuits)
    k = wilks_dof(model, ds, circuits)
    try:
        ns = float((stat - k) / np.sqrt(2.0 * k)) if k > 0 else None
    except DegreesOfFreedomError:
        ns = None
    return FitRecord(name, stage, max_length, len(circuits), stat, k, ns,
                     converged, grad)


def _seed_for(kind: str, design: GstDesign, ds, target: GateSetModel) -> GateSetModel:
    lgst_model = run_lgst(design, ds, target)
    matched = gauge_optimize(lgst_model, target)
    return set_parameterization(matched, kind)


def run_long_sequence_gst(design: GstDesign, ds, initial_model: GateSetModel,
                          estimators=STANDARD_ESTIMATORS, gauge_opt: bool = True,
                          options: FitOptions | None = None,
                          verbose: bool = False) -> ModelEstimateResults:
    """Run the named estimators over the design's nested circuit lists."""
    results = ModelEstimateResults(design, ds)
    for name in estimators:
        if name == "Target":
            est = _run_target(design, ds, initial_model)
        elif name in ("TP", "CPTP"):
            est = _run_fitting(name, design, ds, initial_model, name, gauge_opt,
                               options, reseed=True, verbose=verbose)
        elif name == "Custom":
            est = _run_fitting(name, design, ds, initial_model, None, False,
                               options, reseed=False, verbose=verbose)
        else:
            raise ValueError(f"unknown estimator {name!r}; choose from "
                             f"{STANDARD_ESTIMATORS + ('Custom',)}")
        results.estimates[name] = est
    return results


def _run_target(design, ds, initial_model) -> Estimate:
    model = set_parameterization(initial_model, "static")
    records = []
    for L in design.max_lengths:
        records.append(_record("Target", f"L={L}", model, ds, design.circuits_up_to(L), L))
    records.append(_record("Target", "final", model, ds, design.circuits, design.max_lengths[-1]))
    models = {"target": initial_model.copy(), "final iteration": model,
              "stdgaugeopt": model.copy()}
    return Estimate("Target", models, records)


def _run_fitting(name, design, ds, initial_model, kind, gauge_opt, options,
                 reseed, verbose=False) -> Estimate:
    if reseed:
        work = _seed_for(kind, design, ds, initial_model)
    else:
        work = initial_model.copy()
    models = {"target": initial_model.copy(), "seed": work.copy()}
    records = []
    notes = []
    result = None
    for L in design.max_lengths:
        circuits = design.circuits_up_to(L)
        fit_opts = options or FitOptions()
        res_chi2 = fit_model_to_data(work, ds, circuits, "chi2", fit_opts)
        res_logl = fit_model_to_data(work, ds, circuits, "logl", fit_opts)
        result = res_logl
        if verbose:
            print(f"[{name}] L={L}: chi2 cost {res_chi2.cost:.4g} -> "
                  f"2DlogL/2 {res_logl.cost:.4g} ({res_logl.message})")
        if not res_logl.converged:
            notes.append(f"L={L}: optimizer stopped before convergence "
                         f"({res_logl.message}); best-so-far model kept")
        records.append(_record(name, f"L={L}", work, ds, circuits, L,
                               res_logl.converged, res_logl.grad_inf))
        models[f"iteration L={L}"] = work.copy()
    records.append(_record(name, "final", work, ds, design.circuits,
                           design.max_lengths[-1],
                           result.converged if result else True,
                           result.grad_inf if result else 0.0))
    models["final iteration"] = work.copy()
    if gauge_opt:
        try:
            models["stdgaugeopt"] = gauge_optimize(work.copy(), initial_model)
        except OpTransformError as exc:
            notes.append(f"gauge optimization skipped: {exc}")
    return Estimate(name, models, records, "; ".join(notes))


def run_model_test(model_to_test: GateSetModel, design: GstDesign, ds) -> ModelEstimateResults:
    """Fit statistics for a fixed model over the design (no fitting)."""
    results = ModelEstimateResults(design, ds)
    records = []
    for L in design.max_lengths:
        records.append(_record("ModelTest", f"L={L}", model_to_test, ds,
                               design.circuits_up_to(L), L))
    records.append(_record("ModelTest", "final", model_to_test, ds,
                           design.circuits, design.max_lengths[-1]))
    models = {"target": model_to_test.copy(), "final iteration": model_to_test.copy()}
    results.estimates["ModelTest"] = Estimate("ModelTest", models, records)
    return results
