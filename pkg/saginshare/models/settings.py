"""Algorithm settings with JSON round-trip."""

from dataclasses import asdict, dataclass, fields
from typing import Any, Dict


@dataclass
class AlgorithmSettings:
    """Constants steering every iterative algorithm."""

    # Penalty schedule of the centralized outer loop
    penalty_init: float = 1e-4
    penalty_growth: float = 50.0
    outer_cap: int = 8
    binary_tol: float = 1e-3

    # Inner loops
    inner_tol: float = 1e-4
    inner_patience: int = 2
    inner_cap: int = 50

    # Gradient projection and feasibility search
    step_size: float = 0.1
    slack_penalty: float = 20.0
    slack_penalty_growth: float = 10.0
    slack_penalty_cap: float = 1e6
    slack_tol: float = 1e-6
    init_cap: int = 30
    nosharing_cap: int = 30

    # Consensus ADMM
    admm_penalty: float = 1.5
    admm_iterations: int = 5
    admm_growth: int = 2
    admm_max_iterations: int = 80
    admm_consensus_tol: float = 1e-4
    admm_margin: float = 1e-3
    distributed_cap: int = 20

    # Dual user association
    ua_step: float = 0.1
    ua_tol: float = 1e-4
    ua_patience: int = 3
    ua_cap: int = 200

    # Acceptance
    feasibility_tol: float = 1e-6
    monotone_tol: float = 1e-8

    # Conic solver
    solver: str = "CLARABEL"
    solver_tol: float = 1e-8
    solver_max_iters: int = 100000

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for saving."""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'AlgorithmSettings':
        """Create from a (possibly partial) dictionary; unknown keys are ignored."""
        defaults = cls()
        values = {}
        for spec in fields(cls):
            default = getattr(defaults, spec.name)
            values[spec.name] = type(default)(data.get(spec.name, default))
        return cls(**values)
