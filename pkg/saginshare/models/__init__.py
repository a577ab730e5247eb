from .enums import (
    OPERATORS,
    COORDINATOR_SENDER,
    Algorithm,
    ConeKind,
    ConeStatus,
    EnvelopeKind,
    NodeKind,
    OperatorId,
    StepKind,
    SweepVariable,
)
from .errors import (
    DomainError,
    InfeasibleModel,
    MissingPayload,
    NoFeasiblePoint,
    ParseError,
    SaginError,
    ValidationError,
)
from .link import NoiseModel, SatellitePayload, SRParams
from .scenario import (
    BeamDescriptor,
    NodeDescriptor,
    SatelliteGeometry,
    ScenarioInstance,
    UserDescriptor,
)
from .settings import AlgorithmSettings

__all__ = [
    'OPERATORS', 'COORDINATOR_SENDER',
    'Algorithm', 'ConeKind', 'ConeStatus', 'EnvelopeKind', 'NodeKind',
    'OperatorId', 'StepKind', 'SweepVariable',
    'DomainError', 'InfeasibleModel', 'MissingPayload', 'NoFeasiblePoint',
    'ParseError', 'SaginError', 'ValidationError',
    'NoiseModel', 'SatellitePayload', 'SRParams',
    'BeamDescriptor', 'NodeDescriptor', 'SatelliteGeometry',
    'ScenarioInstance', 'UserDescriptor',
    'AlgorithmSettings',
]
