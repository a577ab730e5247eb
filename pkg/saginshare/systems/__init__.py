from .association_system import DualUAResult, run_dual_ua, ua_dual_update, ua_user_decision
from .consensus_system import (
    Coordinator,
    Envelope,
    InProcessTransport,
    OperatorAgent,
    SocketTransport,
    admm_dual_update,
    admm_global_average,
)
from .metrics_system import NetworkMetrics, alpha_table
from .projection_system import project_association, project_capped_simplex
from .subproblem_system import IteratePoint, Scope, SubproblemBuilder

__all__ = [
    'DualUAResult',
    'run_dual_ua',
    'ua_dual_update',
    'ua_user_decision',
    'Coordinator',
    'Envelope',
    'InProcessTransport',
    'OperatorAgent',
    'SocketTransport',
    'admm_dual_update',
    'admm_global_average',
    'NetworkMetrics',
    'alpha_table',
    'project_association',
    'project_capped_simplex',
    'IteratePoint',
    'Scope',
    'SubproblemBuilder',
]
