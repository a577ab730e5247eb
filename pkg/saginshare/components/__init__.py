from .channel import ChannelRealization
from .solution import RevenueReport, SolutionState
from .trace import SolverTrace, TraceEntry

__all__ = [
    'ChannelRealization',
    'RevenueReport',
    'SolutionState',
    'SolverTrace',
    'TraceEntry',
]
