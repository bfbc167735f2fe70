"""
Monte Carlo benchmark harness
=============================

Runs full trials (synthesize -> ADMM -> on-grid picks -> off-grid
refinement), matches estimates to truth, and aggregates RMSE, the 3 degree
inclusion gate and two-source resolution over parameter sweeps.
"""

from __future__ import annotations

import csv
import io
import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

from .admm import AdmmConfig, AdmmResult, DivergenceError, solve
from .array_model import (
    AngleGrid,
    ArrayGeometry,
    ArrayScenario,
    steering_matrix,
    synthesize,
    trial_seed,
)
from .offgrid import OnGridPicks, RefinementError, pick_on_grid, refine

GATE_DEG = 3.0
SWEEP_AXES = ("snr", "snapshots", "outlier_prob", "separation", "coherent_snr")
METHODS = ("proposed", "music")
CSV_COLUMNS = (
    "axis_name",
    "axis_value",
    "method",
    "rmse_deg",
    "inclusion_fraction",
    "resolution_prob",
    "mean_iterations",
    "mean_runtime_ms",
    "trials",
    "seed",
)


@dataclass
class TrialEstimate:
    estimated_doas_deg: np.ndarray
    true_doas_deg: np.ndarray
    matched_errors_deg: np.ndarray
    included_in_rmse: bool
    resolved: bool | None
    solver_iterations: int
    ongrid_doas_deg: np.ndarray | None = None
    failed: bool = False
    refined: bool = False
    runtime_ms: float = 0.0


@dataclass
class SweepResult:
    axis_value: float
    rmse_deg: float | None
    inclusion_fraction: float
    resolution_prob: float | None
    mean_runtime_ms: float
    method: str = "proposed"
    mean_iterations: float = 0.0
    trials: int = 0
    failures: int = 0


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep: a base scenario, the swept axis and its values.

    ``scenario_template`` supplies every scenario field not overwritten by the
    sweep; its ``true_doas_deg`` is only used for the source count unless
    ``random_doas`` is off.
    """

    sweep_axis: str
    sweep_values: tuple
    scenario_template: ArrayScenario = field(
        default_factory=lambda: ArrayScenario(
            geometry=ArrayGeometry(10),
            true_doas_deg=(-5.0, 25.0),
            num_snapshots=30,
            snr_db=10.0,
            sor_db=-20.0,
            outlier_prob=0.1,
        )
    )
    num_trials: int = 100
    grid_spacing_deg: float = 2.0
    master_seed: int = 0
    random_doas: bool = True
    doa_intervals: tuple = ((-10.0, 0.0), (20.0, 30.0))
    separation_anchor_deg: float = -10.8
    methods: tuple = ("proposed",)
    solver_overrides: tuple = ()

    def __post_init__(self):
        if self.sweep_axis not in SWEEP_AXES:
            raise ValueError(f"unknown sweep axis {self.sweep_axis!r}; choose from {SWEEP_AXES}")
        values = tuple(float(v) for v in self.sweep_values)
        if not values or list(values) != sorted(values):
            raise ValueError("sweep_values must be nonempty and sorted")
        object.__setattr__(self, "sweep_values", values)
        if self.num_trials < 1:
            raise ValueError("num_trials must be >= 1")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}")

    def solver_config(self, snr_db: float) -> AdmmConfig:
        return AdmmConfig.for_snr(snr_db, **dict(self.solver_overrides))


@lru_cache(maxsize=16)
def _dictionary(num_elements: int, spacing: float, grid_step: float) -> np.ndarray:
    geometry = ArrayGeometry(num_elements, spacing)
    A = steering_matrix(geometry, AngleGrid.uniform(grid_step).angles_deg)
    A = A / np.sqrt(num_elements)
    A.flags.writeable = False
    return A


def grid_dictionary(geometry: ArrayGeometry, grid: AngleGrid) -> np.ndarray:
    """Steering dictionary over ``grid`` with unit-norm columns.

    Unit columns keep the fixed linearization step of the ADMM X update
    stable (``beta * ||A||^2 < 2``); row supports are unaffected.
    """
    return _dictionary(geometry.num_elements, geometry.element_spacing_over_wavelength, grid.spacing_deg)


def match_errors(estimated, truth) -> np.ndarray:
    """Signed errors ``estimate - truth`` (in truth order) under the assignment
    with minimum total absolute error. Brute force over permutations.

    Ties in total absolute error (common when all errors share a sign) are
    broken by squared error, then lexicographically, so the result does not
    depend on the order of ``estimated``.
    """
    est = np.asarray(estimated, dtype=float)
    tru = np.asarray(truth, dtype=float)
    if est.shape != tru.shape:
        raise ValueError("estimate and truth must have the same length")
    best, best_key = None, None
    for perm in itertools.permutations(range(tru.size)):
        err = est[list(perm)] - tru
        key = (np.abs(err).sum(), (err**2).sum(), tuple(err))
        if best_key is None or key < best_key:
            best, best_key = err, key
    return best


def resolution_flag(estimate: TrialEstimate) -> bool:
    """Two sources are resolved when both errors are below half their separation."""
    truth = np.asarray(estimate.true_doas_deg, dtype=float)
    if truth.size != 2:
        raise ValueError("resolution is defined for exactly two sources")
    errors = np.abs(np.asarray(estimate.matched_errors_deg, dtype=float))
    return bool(np.all(np.isfinite(errors)) and errors.max() < abs(truth[0] - truth[1]) / 2)


def _finish_estimate(estimates, truth, iterations, **extra) -> TrialEstimate:
    truth = np.asarray(truth, dtype=float)
    est = np.asarray(estimates, dtype=float)
    errors = match_errors(est, truth)
    trial = TrialEstimate(
        estimated_doas_deg=est,
        true_doas_deg=truth,
        matched_errors_deg=errors,
        included_in_rmse=bool(np.max(np.abs(errors)) < GATE_DEG),
        resolved=None,
        solver_iterations=iterations,
        **extra,
    )
    if truth.size == 2:
        trial.resolved = resolution_flag(trial)
    return trial


def _failed_estimate(truth, iterations=0, runtime_ms=0.0) -> TrialEstimate:
    truth = np.asarray(truth, dtype=float)
    nan = np.full(truth.shape, np.nan)
    return TrialEstimate(
        estimated_doas_deg=nan,
        true_doas_deg=truth,
        matched_errors_deg=nan.copy(),
        included_in_rmse=False,
        resolved=False if truth.size == 2 else None,
        solver_iterations=iterations,
        failed=True,
        runtime_ms=runtime_ms,
    )


@dataclass
class PipelineOutput:
    doas_deg: np.ndarray
    picks: OnGridPicks
    admm: AdmmResult
    refined: bool


def estimate_doas(Y, geometry: ArrayGeometry, grid: AngleGrid, K: int, cfg: AdmmConfig, *,
                  refine_tol: float = 1e-4, refine_max_iters: int = 50) -> PipelineOutput:
    """ADMM on the grid dictionary, peak picks, then off-grid refinement.

    A refinement failure keeps the on-grid angles. ``DivergenceError`` from
    the solver propagates.
    """
    grid.check_sources(K)
    result = solve(grid_dictionary(geometry, grid), Y, cfg)
    picks = pick_on_grid(result.X, grid, K, peaks=True)
    try:
        ref = refine(
            Y,
            result.O,
            picks,
            geometry,
            tol=refine_tol,
            max_iters=refine_max_iters,
            max_step_deg=grid.spacing_deg / 2,
        )
        return PipelineOutput(ref.doas_deg, picks, result, True)
    except RefinementError:
        return PipelineOutput(np.asarray(picks.angles_deg, dtype=float), picks, result, False)


def run_trial(
    scenario: ArrayScenario,
    grid: AngleGrid,
    cfg: AdmmConfig | None = None,
    *,
    refine_tol: float = 1e-4,
    refine_max_iters: int = 50,
) -> TrialEstimate:
    """Full proposed pipeline on one synthesized trial.

    Solver divergence marks the trial failed (and excluded); a refinement
    failure falls back to the on-grid angles.
    """
    cfg = cfg or AdmmConfig.for_snr(scenario.snr_db)
    data = synthesize(scenario)
    start = time.perf_counter()
    try:
        out = estimate_doas(
            data.observations,
            scenario.geometry,
            grid,
            scenario.num_sources,
            cfg,
            refine_tol=refine_tol,
            refine_max_iters=refine_max_iters,
        )
    except DivergenceError as exc:
        return _failed_estimate(scenario.true_doas_deg, exc.iteration, 1e3 * (time.perf_counter() - start))
    elapsed = 1e3 * (time.perf_counter() - start)
    return _finish_estimate(
        out.doas_deg,
        scenario.true_doas_deg,
        out.admm.iterations,
        ongrid_doas_deg=np.asarray(out.picks.angles_deg, dtype=float),
        refined=out.refined,
        runtime_ms=elapsed,
    )


def music_spectrum(Y, grid: AngleGrid, K: int, geometry: ArrayGeometry) -> np.ndarray:
    Y = np.asarray(Y, dtype=complex)
    M, T = Y.shape
    if not 1 <= K < M:
        raise ValueError(f"MUSIC needs 1 <= K < M, got K={K}, M={M}")
    R = Y @ Y.conj().T / T
    _, vecs = np.linalg.eigh(R)
    En = vecs[:, : M - K]
    A = steering_matrix(geometry, grid.angles_deg)
    denom = np.sum(np.abs(En.conj().T @ A) ** 2, axis=0)
    return 1.0 / np.maximum(denom, np.finfo(float).tiny)


def music_baseline(Y, grid: AngleGrid, K: int, geometry: ArrayGeometry) -> np.ndarray:
    """Spectral MUSIC on the grid: the K highest local maxima of the pseudo-spectrum.

    If fewer than K peaks exist the remaining picks are the highest
    non-peak grid points.
    """
    P = music_spectrum(Y, grid, K, geometry)
    left = np.r_[-np.inf, P[:-1]]
    right = np.r_[P[1:], -np.inf]
    peaks = np.flatnonzero((P > left) & (P >= right))
    order = peaks[np.argsort(-P[peaks], kind="stable")]
    if order.size < K:
        rest = np.setdiff1d(np.argsort(-P, kind="stable"), order, assume_unique=True)
        rest = rest[np.argsort(-P[rest], kind="stable")]
        order = np.r_[order, rest]
    return grid.angles_deg[order[:K]]


def run_music_trial(scenario: ArrayScenario, grid: AngleGrid) -> TrialEstimate:
    data = synthesize(scenario)
    start = time.perf_counter()
    doas = music_baseline(data.observations, grid, scenario.num_sources, scenario.geometry)
    elapsed = 1e3 * (time.perf_counter() - start)
    return _finish_estimate(doas, scenario.true_doas_deg, 0, runtime_ms=elapsed)


def rmse(estimates: Sequence[TrialEstimate]):
    """Squared-error RMSE over trials that pass the 3 degree gate.

    Returns ``(rmse_deg, inclusion_fraction)``; ``rmse_deg`` is ``None`` when
    no trial passes.
    """
    if not estimates:
        raise ValueError("need at least one trial")
    kept = [e for e in estimates if e.included_in_rmse]
    fraction = len(kept) / len(estimates)
    if not kept:
        return None, 0.0
    sq = np.concatenate([np.asarray(e.matched_errors_deg, dtype=float) ** 2 for e in kept])
    return float(np.sqrt(sq.mean())), fraction


def trial_scenario(spec: ExperimentSpec, axis_index: int, trial_index: int) -> ArrayScenario:
    """Scenario of trial ``trial_index`` at sweep point ``axis_index``.

    Random draws depend on (master seed, sweep axis, trial index) only, so
    every sweep point sees the same DOAs, phases and unit noise draws
    (common random numbers): differences along the sweep come from the swept
    parameter, not from resampling.
    """
    value = spec.sweep_values[axis_index]
    base = spec.scenario_template
    axis_id = SWEEP_AXES.index(spec.sweep_axis)
    doa_rng = np.random.default_rng(trial_seed(spec.master_seed, axis_id, trial_index, 0))
    changes = {"rng_seed": trial_seed(spec.master_seed, axis_id, trial_index, 1)}

    axis = spec.sweep_axis
    if axis == "snr":
        changes["snr_db"] = value
    elif axis == "snapshots":
        changes["num_snapshots"] = int(value)
    elif axis == "outlier_prob":
        changes["outlier_prob"] = value
    elif axis == "coherent_snr":
        changes["snr_db"] = value
        changes["coherent"] = True

    if axis == "separation":
        changes["true_doas_deg"] = (spec.separation_anchor_deg, spec.separation_anchor_deg + value)
    elif spec.random_doas:
        changes["true_doas_deg"] = tuple(doa_rng.uniform(lo, hi) for lo, hi in spec.doa_intervals)
    return replace(base, **changes)


def _run_one(args):
    spec, axis_index, trial_index = args
    scenario = trial_scenario(spec, axis_index, trial_index)
    grid = AngleGrid.uniform(spec.grid_spacing_deg)
    out = {}
    for method in spec.methods:
        if method == "proposed":
            out[method] = run_trial(scenario, grid, spec.solver_config(scenario.snr_db))
        else:
            out[method] = run_music_trial(scenario, grid)
    return out


def _aggregate(value, method, trials, with_resolution) -> SweepResult:
    rm, frac = rmse(trials)
    res = None
    if with_resolution:
        res = float(np.mean([bool(t.resolved) for t in trials]))
    return SweepResult(
        axis_value=value,
        rmse_deg=rm,
        inclusion_fraction=frac,
        resolution_prob=res,
        mean_runtime_ms=float(np.mean([t.runtime_ms for t in trials])),
        method=method,
        mean_iterations=float(np.mean([t.solver_iterations for t in trials])),
        trials=len(trials),
        failures=sum(t.failed for t in trials),
    )


def run_sweep(spec: ExperimentSpec, workers: int = 1) -> list[SweepResult]:
    """Run every trial of every axis value and aggregate per (value, method).

    Trials may run in a process pool; results are collected in
    (axis, trial) order so the output does not depend on ``workers``.
    """
    results = []
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        for ai, value in enumerate(spec.sweep_values):
            jobs = [(spec, ai, ti) for ti in range(spec.num_trials)]
            outs = list(pool.map(_run_one, jobs, chunksize=4) if pool else map(_run_one, jobs))
            for method in spec.methods:
                trials = [o[method] for o in outs]
                results.append(_aggregate(value, method, trials, spec.sweep_axis == "separation"))
    finally:
        if pool is not None:
            pool.shutdown()
    return results


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def results_to_csv(results: Sequence[SweepResult], axis_name: str, seed: int, timing: bool = False) -> str:
    """Render sweep results with the fixed column order.

    ``mean_runtime_ms`` is left empty unless ``timing`` is set, so that
    repeated runs with one seed give byte-identical files.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in results:
        writer.writerow(
            [
                axis_name,
                _fmt(r.axis_value),
                r.method,
                _fmt(r.rmse_deg),
                _fmt(r.inclusion_fraction),
                _fmt(r.resolution_prob),
                _fmt(r.mean_iterations),
                _fmt(r.mean_runtime_ms) if timing else "",
                _fmt(r.trials),
                _fmt(int(seed)),
            ]
        )
    return buf.getvalue()
