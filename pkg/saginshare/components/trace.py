"""Iteration trace of an iterative solver."""

import time
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

from ..models.enums import StepKind


@dataclass
class TraceEntry:
    """One accepted (or rejected) step."""
    iteration: int
    phase: int
    step: StepKind
    objective: float            # Penalized objective of the phase
    wsr: float
    max_residual: float
    penalty: float = 0.0        # Binariness penalty weight in force
    wall_time: float = 0.0      # Seconds since the trace started
    accepted: bool = True


@dataclass
class SolverTrace:
    """Ordered record of an algorithm run."""
    entries: List[TraceEntry] = field(default_factory=list)
    started: float = field(default_factory=time.perf_counter, repr=False)

    def record(self, phase: int, step: StepKind, objective: float, wsr: float,
               max_residual: float, penalty: float = 0.0, accepted: bool = True) -> TraceEntry:
        """Append an entry stamped with the elapsed time."""
        entry = TraceEntry(
            iteration=len(self.entries),
            phase=phase,
            step=step,
            objective=float(objective),
            wsr=float(wsr),
            max_residual=float(max_residual),
            penalty=float(penalty),
            wall_time=time.perf_counter() - self.started,
            accepted=accepted,
        )
        self.entries.append(entry)
        return entry

    def objectives(self, phase: Optional[int] = None, accepted_only: bool = True) -> List[float]:
        """Objective values, optionally restricted to one phase."""
        return [
            e.objective for e in self.entries
            if (phase is None or e.phase == phase) and (e.accepted or not accepted_only)
        ]

    @property
    def phases(self) -> List[int]:
        seen = []
        for e in self.entries:
            if e.phase not in seen:
                seen.append(e.phase)
        return seen

    def is_monotone(self, tol: float = 1e-8) -> bool:
        """Whether accepted objectives never decrease within a phase."""
        for phase in self.phases:
            values = self.objectives(phase)
            for prev, cur in zip(values, values[1:]):
                if cur < prev - tol * max(1.0, abs(prev)):
                    return False
        return True

    @property
    def iterations(self) -> int:
        return len(self.entries)

    @property
    def last_wsr(self) -> float:
        accepted = [e for e in self.entries if e.accepted]
        return accepted[-1].wsr if accepted else float("nan")

    def to_dict(self) -> List[Dict]:
        """Convert entries to plain dictionaries."""
        rows = []
        for e in self.entries:
            row = asdict(e)
            row["step"] = e.step.value
            rows.append(row)
        return rows
