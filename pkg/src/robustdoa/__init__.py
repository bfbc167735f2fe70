"""Robust DOA estimation from joint row-sparse and entry-sparse recovery."""

from .admm import AdmmConfig, AdmmResult, AdmmState, DivergenceError, solve
from .array_model import (
    AngleGrid,
    ArrayGeometry,
    ArrayScenario,
    SnapshotData,
    steering_derivative,
    steering_matrix,
    steering_vector,
    synthesize,
    trial_seed,
)
from .bench import (
    ExperimentSpec,
    SweepResult,
    TrialEstimate,
    grid_dictionary,
    music_baseline,
    resolution_flag,
    rmse,
    run_sweep,
    run_trial,
)
from .offgrid import OnGridPicks, RefinementError, RefineResult, pick_on_grid, refine, solve_gap
from .prox import MlcParams, log_prox, mlc_prox, mlc_value, row_soft_threshold, variational_weight

__version__ = "0.1.0"
