"""Network enumerations and constants."""

from enum import Enum, auto


class OperatorId(Enum):
    """The two network operators sharing spectrum and service."""
    GNO = 0     # Ground network operator (BSs, fiber backhaul)
    SNO = 1     # Satellite network operator (STs, LEO backhaul)

    @property
    def band(self) -> int:
        """Index of the operator's own access band."""
        return self.value

    @property
    def other(self) -> 'OperatorId':
        """The other operator."""
        return OperatorId.SNO if self is OperatorId.GNO else OperatorId.GNO

    @property
    def label(self) -> str:
        """Short label used in result columns."""
        labels = {
            OperatorId.GNO: "g",
            OperatorId.SNO: "s",
        }
        return labels[self]


OPERATORS = (OperatorId.GNO, OperatorId.SNO)


class NodeKind(Enum):
    """Types of ground access nodes."""
    BASE_STATION = auto()
    SATELLITE_TERMINAL = auto()

    @property
    def operator(self) -> OperatorId:
        """Operator that owns nodes of this kind."""
        owners = {
            NodeKind.BASE_STATION: OperatorId.GNO,
            NodeKind.SATELLITE_TERMINAL: OperatorId.SNO,
        }
        return owners[self]


class ConeKind(Enum):
    """Cone families understood by the conic core."""
    NONNEGATIVE = auto()
    SECOND_ORDER = auto()
    ROTATED_SECOND_ORDER = auto()
    EXPONENTIAL = auto()


class ConeStatus(Enum):
    """Outcome of a conic solve."""
    OPTIMAL = auto()
    INFEASIBLE = auto()
    UNBOUNDED = auto()
    MAX_ITERATIONS = auto()


class StepKind(Enum):
    """Block of variables optimized by one SCA step."""
    P_STEP = "p"
    T_STEP = "t"
    X_STEP = "x"
    POLISH = "polish"


class EnvelopeKind(Enum):
    """Message kinds exchanged between distributed agents."""
    LOCAL_SHARE = 1
    GLOBAL_BROADCAST = 2
    LAMBDA_BROADCAST = 3
    BARRIER = 4


# Sender code used by the orchestrator on the wire (operators use their value)
COORDINATOR_SENDER = 255


class Algorithm(Enum):
    """Algorithms runnable by the experiment service."""
    CENTRALIZED = "centralized"
    DISTRIBUTED = "distributed"
    CA_ERA = "ca_era"
    CA_OPW = "ca_opw"
    CA_OTW = "ca_otw"
    NOSHARING = "nosharing"
    CA_ERA_NOSHARING = "ca_era_nosharing"

    @property
    def needs_thresholds(self) -> bool:
        """Whether the algorithm enforces the mutual benefit constraint."""
        return self in (Algorithm.CENTRALIZED, Algorithm.DISTRIBUTED)


class SweepVariable(Enum):
    """Scenario quantities an experiment may sweep."""
    P_SAT = "P_Sat"
    P_ST = "P_ST"
    DELTA_G = "delta_G"
    DELTA_S = "delta_S"

    @property
    def bounds(self) -> tuple:
        """Physical range accepted for sweep values."""
        ranges = {
            SweepVariable.P_SAT: (0.0, 1e4),      # W
            SweepVariable.P_ST: (-30.0, 80.0),    # dBm
            SweepVariable.DELTA_G: (0.0, 1.0),
            SweepVariable.DELTA_S: (0.0, 1.0),
        }
        return ranges[self]
