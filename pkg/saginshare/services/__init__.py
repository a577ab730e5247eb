from .baseline_service import (
    run_baseline_ca_era,
    run_baseline_ca_era_nosharing,
    run_baseline_ca_opw,
    run_baseline_ca_otw,
)
from .centralized_service import find_initial_point, run_nosharing, run_wsrm_centralized
from .distributed_service import run_admm_block, run_wsrm_distributed
from .experiment_service import ExperimentRecord, ExperimentSpec, run_experiment

__all__ = [
    'run_baseline_ca_era',
    'run_baseline_ca_era_nosharing',
    'run_baseline_ca_opw',
    'run_baseline_ca_otw',
    'find_initial_point',
    'run_nosharing',
    'run_wsrm_centralized',
    'run_admm_block',
    'run_wsrm_distributed',
    'ExperimentRecord',
    'ExperimentSpec',
    'run_experiment',
]
