import itertools
import math

import numpy as np
import pytest

from robustdoa import AngleGrid, ArrayGeometry, ArrayScenario, steering_matrix
from robustdoa.bench import (
    CSV_COLUMNS,
    ExperimentSpec,
    SweepResult,
    TrialEstimate,
    match_errors,
    music_baseline,
    resolution_flag,
    results_to_csv,
    rmse,
    run_sweep,
    run_trial,
    trial_scenario,
)


def _est(errors, truth=None):
    errors = np.asarray(errors, float)
    truth = np.zeros(errors.size) if truth is None else np.asarray(truth, float)
    return TrialEstimate(
        estimated_doas_deg=truth + errors,
        true_doas_deg=truth,
        matched_errors_deg=errors,
        included_in_rmse=bool(np.abs(errors).max() < 3.0),
        resolved=None,
        solver_iterations=1,
    )


def _naive_rmse(trials):
    total, count, kept = 0.0, 0, 0
    for t in trials:
        if max(abs(e) for e in t.matched_errors_deg) >= 3.0:
            continue
        kept += 1
        for e in t.matched_errors_deg:
            total += e * e
            count += 1
    return (math.sqrt(total / count) if count else None), kept / len(trials)


class TestRmse:
    def test_examples(self):
        assert rmse([_est([0.0, 0.0])]) == (0.0, 1.0)
        assert rmse([_est([1.0])]) == (1.0, 1.0)
        assert rmse([_est([1.0]), _est([2.0])])[0] == pytest.approx(math.sqrt(2.5), abs=1e-12)

    def test_gate(self):
        assert rmse([_est([3.0])]) == (None, 0.0)
        val, frac = rmse([_est([0.5, 3.5]), _est([1.0, -1.0])])
        assert (val, frac) == (1.0, 0.5)

    def test_empty(self):
        with pytest.raises(ValueError):
            rmse([])

    def test_matches_naive_reference(self, rng):
        for _ in range(50):
            K = int(rng.integers(1, 4))
            trials = [_est(rng.uniform(-4, 4, K)) for _ in range(int(rng.integers(1, 30)))]
            got, ref = rmse(trials), _naive_rmse(trials)
            assert got[1] == ref[1]
            if ref[0] is None:
                assert got[0] is None
            else:
                assert abs(got[0] - ref[0]) < 1e-12


class TestResolution:
    def test_examples(self):
        t = _est([0.0, 0.0], [-10.8, -10.3])
        assert resolution_flag(t)
        assert not resolution_flag(_est([0.3, 0.1], [-10.8, -10.3]))
        assert resolution_flag(_est([0.2, 0.2], [-10.8, -9.8]))

    def test_domain(self):
        with pytest.raises(ValueError):
            resolution_flag(_est([0.0, 0.0, 0.0], [1, 2, 3]))


class TestMatching:
    def test_permutation_invariant(self, rng):
        for _ in range(100):
            K = int(rng.integers(1, 4))
            truth = rng.uniform(-60, 60, K)
            est = truth + rng.normal(0, 5, K)
            ref = match_errors(est, truth)
            for perm in itertools.permutations(range(K)):
                np.testing.assert_array_equal(match_errors(est[list(perm)], truth), ref)

    def test_minimum_total_error(self):
        np.testing.assert_allclose(match_errors([25.0, -5.0], [-4.0, 24.0]), [-1.0, 1.0])
        with pytest.raises(ValueError):
            match_errors([1.0], [1.0, 2.0])


class TestRunTrial:
    def test_noiseless_on_grid(self, ula, grid):
        from robustdoa import AdmmConfig

        sc = ArrayScenario(ula, (-6.0, 24.0), 30, math.inf, outlier_prob=0.0)
        t = run_trial(sc, grid, AdmmConfig(lambda1=1.0, lambda2=1.0))
        np.testing.assert_allclose(t.matched_errors_deg, 0.0, atol=1e-6)
        assert t.included_in_rmse and t.resolved and not t.failed

    def test_adversarial_outliers_complete(self, ula, grid):
        sc = ArrayScenario(ula, (-5.3, 23.1), 30, 10.0, outlier_prob=0.9, rng_seed=3)
        t = run_trial(sc, grid)
        assert len(t.estimated_doas_deg) == 2
        assert t.solver_iterations >= 1

    def test_reports_on_grid_picks(self, ula, grid):
        sc = ArrayScenario(ula, (-5.3, 23.1), 30, 20.0, outlier_prob=0.1, rng_seed=1)
        t = run_trial(sc, grid)
        assert np.all(np.isin(t.ongrid_doas_deg, grid.angles_deg))
        assert np.abs(t.matched_errors_deg).max() < 1.0


class TestMusic:
    def test_single_source_nearest_grid(self, ula, grid, rng):
        theta = 13.3
        S = np.exp(1j * rng.uniform(0, 2 * np.pi, (1, 500)))
        Y = steering_matrix(ula, [theta]) @ S
        assert music_baseline(Y, grid, 1, ula)[0] == 14.0

    def test_two_sources(self, ula, grid):
        sc = ArrayScenario(ula, (-5.3, 23.1), 200, 20.0, outlier_prob=0.0, rng_seed=7)
        from robustdoa import synthesize

        est = music_baseline(synthesize(sc).observations, grid, 2, ula)
        err = match_errors(est, sc.true_doas_deg)
        assert np.abs(err).max() <= grid.spacing_deg

    def test_too_many_sources(self, grid):
        geo = ArrayGeometry(3)
        with pytest.raises(ValueError):
            music_baseline(np.ones((3, 10), complex), grid, 3, geo)


def _spec(axis="snr", values=(10.0,), trials=2, methods=("proposed",), seed=5):
    template = ArrayScenario(ArrayGeometry(10), (-5.0, 25.0), 30, 10.0, outlier_prob=0.1)
    return ExperimentSpec(
        sweep_axis=axis,
        sweep_values=values,
        scenario_template=template,
        num_trials=trials,
        master_seed=seed,
        methods=methods,
    )


class TestSweep:
    def test_spec_validation(self):
        with pytest.raises(ValueError):
            _spec(axis="bandwidth")
        with pytest.raises(ValueError):
            _spec(trials=0)

    def test_trial_seeds(self):
        spec = _spec(values=(0.0, 20.0), trials=3)
        a, b = trial_scenario(spec, 0, 1), trial_scenario(spec, 1, 1)
        assert a.true_doas_deg == b.true_doas_deg and a.rng_seed == b.rng_seed
        assert (a.snr_db, b.snr_db) == (0.0, 20.0)
        assert trial_scenario(spec, 0, 2).rng_seed != a.rng_seed
        assert -10 <= a.true_doas_deg[0] <= 0 and 20 <= a.true_doas_deg[1] <= 30

    def test_separation_scenario(self):
        sc = trial_scenario(_spec(axis="separation", values=(4.0,)), 0, 0)
        assert sc.true_doas_deg == pytest.approx((-10.8, -6.8))

    def test_coherent_scenario(self):
        sc = trial_scenario(_spec(axis="coherent_snr", values=(15.0,)), 0, 0)
        assert sc.coherent and sc.snr_db == 15.0

    def test_deterministic_csv(self):
        spec = _spec(values=(20.0,), trials=1, methods=("proposed", "music"))
        first = results_to_csv(run_sweep(spec), "snr", 5)
        assert first == results_to_csv(run_sweep(spec), "snr", 5)

    def test_workers_do_not_change_results(self):
        spec = _spec(values=(10.0,), trials=3)
        assert results_to_csv(run_sweep(spec), "snr", 5) == results_to_csv(run_sweep(spec, workers=2), "snr", 5)

    def test_result_fields(self):
        res = run_sweep(_spec(axis="separation", values=(8.0,), trials=2))
        assert len(res) == 1
        r = res[0]
        assert 0 <= r.inclusion_fraction <= 1 and 0 <= r.resolution_prob <= 1
        assert r.trials == 2 and r.failures == 0
        assert run_sweep(_spec(trials=1))[0].resolution_prob is None


def test_csv_format():
    rows = [
        SweepResult(10.0, 0.25, 1.0, None, 12.5, "proposed", 40.0, 100, 0),
        SweepResult(10.0, None, 0.0, 0.5, 1.5, "music", 0.0, 100, 0),
    ]
    text = results_to_csv(rows, "snr", 7)
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert CSV_COLUMNS == (
        "axis_name", "axis_value", "method", "rmse_deg", "inclusion_fraction",
        "resolution_prob", "mean_iterations", "mean_runtime_ms", "trials", "seed",
    )
    assert lines[1] == "snr,10.0,proposed,0.25,1.0,,40.0,,100,7"
    assert lines[2] == "snr,10.0,music,,0.0,0.5,0.0,,100,7"
    assert results_to_csv(rows, "snr", 7, timing=True).splitlines()[1].split(",")[7] == "12.5"
