"""A desk-scale SNR sweep with the MUSIC comparator, written as CSV.

The same CSV comes out of ``robustdoa sweep-snr --baseline music``; use
``--full-scale`` there for 1000 trials per point.
"""

import sys

from robustdoa import ExperimentSpec, run_sweep
from robustdoa.bench import results_to_csv

spec = ExperimentSpec("snr", (0.0, 10.0, 20.0), num_trials=20, master_seed=0, methods=("proposed", "music"))
sys.stdout.write(results_to_csv(run_sweep(spec), "snr", spec.master_seed))
