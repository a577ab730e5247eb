"""Experiment runner: seeded sweeps over every algorithm with paired channel draws."""

import hashlib
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..factories.channel_factory import draw_channels
from ..factories.scenario_factory import generate_scenario, with_overrides
from ..models.enums import Algorithm, SweepVariable
from ..models.errors import NoFeasiblePoint, ParseError, SaginError, ValidationError
from ..models.scenario import ScenarioInstance
from ..models.settings import AlgorithmSettings
from .baseline_service import (run_baseline_ca_era, run_baseline_ca_era_nosharing,
                               run_baseline_ca_opw, run_baseline_ca_otw)
from .centralized_service import NoSharingResult, run_nosharing, run_wsrm_centralized
from .distributed_service import run_wsrm_distributed

logger = logging.getLogger(__name__)

EXPERIMENTS_PATH = Path(__file__).parent.parent / "data" / "experiments"
DEFAULT_SEEDS = 10
NO_MBC_SUFFIX = "_no_mbc"

RESULT_COLUMNS = (
    "spec_hash", "seed", "sweep_var", "sweep_value", "algorithm", "wsr", "u_g", "u_s",
    "u_g0", "u_s0", "mbc_slack_g", "mbc_slack_s", "iterations", "max_residual", "wall_ms",
)


@dataclass
class ExperimentSpec:
    """One sweep: algorithms x sweep values x seeds."""
    name: str
    algorithms: Tuple[Algorithm, ...]
    sweep: Optional[SweepVariable] = None
    values: Tuple[float, ...] = ()
    seeds: Tuple[int, ...] = tuple(range(DEFAULT_SEEDS))
    mbc_modes: Tuple[bool, ...] = (True,)
    fixed: Dict[str, float] = field(default_factory=dict)
    config: Optional[str] = None
    description: str = ""
    keep_traces: bool = False

    def validate(self) -> 'ExperimentSpec':
        """Raise ValidationError on an unusable spec."""
        if not self.algorithms:
            raise ValidationError("algorithms", "at least one algorithm is required")
        if not self.seeds:
            raise ValidationError("seeds", "at least one seed is required")
        if any(s < 0 for s in self.seeds):
            raise ValidationError("seeds", "seeds must be nonnegative")
        if not self.mbc_modes:
            raise ValidationError("mbc", "at least one mode is required")
        if self.sweep is not None:
            if not self.values:
                raise ValidationError("sweep.values", "a sweep needs values")
            low, high = self.sweep.bounds
            for value in self.values:
                if not low <= value <= high:
                    raise ValidationError("sweep.values", f"{value} outside [{low}, {high}] "
                                          f"for {self.sweep.value}")
        for name, value in self.fixed.items():
            variable = _sweep_variable(name, "fixed")
            low, high = variable.bounds
            if not low <= value <= high:
                raise ValidationError(f"fixed.{name}", f"{value} outside [{low}, {high}]")
        return self

    @property
    def points(self) -> List[Optional[float]]:
        return list(self.values) if self.sweep is not None else [None]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "algorithms": [a.value for a in self.algorithms],
            "sweep": None if self.sweep is None else {"variable": self.sweep.value,
                                                      "values": list(self.values)},
            "seeds": list(self.seeds),
            "mbc": list(self.mbc_modes),
            "fixed": dict(sorted(self.fixed.items())),
            "config": self.config,
            "keep_traces": self.keep_traces,
        }

    @property
    def spec_hash(self) -> str:
        """Short SHA-256 of the canonical JSON form."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:12]

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ExperimentSpec':
        """Build from a JSON tree; seeds may be a count or a list."""
        try:
            algorithms = tuple(Algorithm(a) for a in data["algorithms"])
        except KeyError as exc:
            raise ParseError(f"experiment is missing {exc}") from exc
        except ValueError as exc:
            raise ValidationError("algorithms", str(exc)) from exc

        sweep, values = None, ()
        if data.get("sweep"):
            sweep = _sweep_variable(data["sweep"].get("variable", ""), "sweep.variable")
            values = tuple(float(v) for v in data["sweep"].get("values", []))

        seeds = data.get("seeds", DEFAULT_SEEDS)
        seeds = tuple(range(seeds)) if isinstance(seeds, int) else tuple(int(s) for s in seeds)
        mbc = data.get("mbc", True)
        modes = tuple(bool(m) for m in mbc) if isinstance(mbc, list) else (bool(mbc),)
        return cls(
            name=str(data.get("name", "experiment")),
            algorithms=algorithms,
            sweep=sweep,
            values=values,
            seeds=seeds,
            mbc_modes=modes,
            fixed={str(k): float(v) for k, v in data.get("fixed", {}).items()},
            config=data.get("config"),
            description=str(data.get("description", "")),
            keep_traces=bool(data.get("keep_traces", False)),
        ).validate()

    @classmethod
    def load(cls, name_or_path: Union[str, Path]) -> 'ExperimentSpec':
        """Load a built-in experiment by name or a spec file by path."""
        path = Path(name_or_path)
        if not path.exists():
            path = EXPERIMENTS_PATH / f"{name_or_path}.json"
        if not path.exists():
            raise ParseError(f"unknown experiment '{name_or_path}'")
        try:
            with open(path) as f:
                data = json.load(f)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from exc
        return cls.from_dict(data)


def _sweep_variable(name: str, field_name: str) -> SweepVariable:
    try:
        return SweepVariable(name)
    except ValueError:
        raise ValidationError(field_name, f"unknown variable '{name}'")


def available_experiments() -> List[str]:
    return sorted(p.stem for p in EXPERIMENTS_PATH.glob("*.json"))


@dataclass
class ExperimentRecord:
    """One (sweep value, seed, algorithm) outcome."""
    spec_hash: str
    seed: int
    sweep_var: str
    sweep_value: float
    algorithm: str
    wsr: float = math.nan
    u_g: float = math.nan
    u_s: float = math.nan
    u_g0: float = math.nan
    u_s0: float = math.nan
    mbc_slack_g: float = math.nan
    mbc_slack_s: float = math.nan
    iterations: int = 0
    max_residual: float = math.nan
    wall_ms: float = 0.0
    error: str = ""
    trace: Optional[List[Dict]] = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return not self.error

    def row(self) -> Dict[str, Any]:
        """Values of the result columns, in column order."""
        data = asdict(self)
        return {name: data[name] for name in RESULT_COLUMNS}


# ========================================================================
# Scenario preparation
# ========================================================================

def apply_sweep(scenario: ScenarioInstance, variable: SweepVariable, value: float) -> ScenarioInstance:
    """Scenario with one swept quantity replaced."""
    if variable is SweepVariable.P_SAT:
        return with_overrides(scenario, sat_max_power=value)
    if variable is SweepVariable.P_ST:
        return with_overrides(scenario, st_power_dbm=value)
    if variable is SweepVariable.DELTA_G:
        return with_overrides(scenario, delta=(value, scenario.delta[1]))
    return with_overrides(scenario, delta=(scenario.delta[0], value))


def prepare_point(template: ScenarioInstance, spec: ExperimentSpec, value: Optional[float],
                  seed: int) -> ScenarioInstance:
    """Placed scenario of one sweep point and seed."""
    scenario = generate_scenario(template, seed)
    for name, fixed in sorted(spec.fixed.items()):
        scenario = apply_sweep(scenario, SweepVariable(name), fixed)
    if spec.sweep is not None:
        scenario = apply_sweep(scenario, spec.sweep, value)
    return scenario


# ========================================================================
# Running
# ========================================================================

def _run_algorithm(algorithm: Algorithm, mbc: bool, scenario: ScenarioInstance, channels,
                   settings: AlgorithmSettings, nosharing: NoSharingResult, transport: str):
    """Dispatch one algorithm; returns (wsr, revenue, max_residual, iterations, trace)."""
    baseline = nosharing.baseline
    if algorithm is Algorithm.CENTRALIZED:
        result = run_wsrm_centralized(scenario, channels, settings=settings, nosharing=nosharing, mbc=mbc)
        return result.wsr, result.revenue.revenue, result.max_residual, result.trace.iterations, result.trace
    if algorithm is Algorithm.DISTRIBUTED:
        result = run_wsrm_distributed(scenario, channels, settings=settings, nosharing=nosharing,
                                      mbc=mbc, transport=transport)
        return result.wsr, result.revenue.revenue, result.max_residual, result.trace.iterations, result.trace
    if algorithm is Algorithm.NOSHARING:
        iterations = sum(t.iterations for t in nosharing.traces.values())
        return nosharing.wsr, baseline, 0.0, iterations, None

    mbc_target = baseline if (mbc and algorithm.needs_thresholds) else None
    if algorithm is Algorithm.CA_ERA:
        result = run_baseline_ca_era(scenario, channels)
    elif algorithm is Algorithm.CA_ERA_NOSHARING:
        result = run_baseline_ca_era_nosharing(scenario, channels)
    elif algorithm is Algorithm.CA_OPW:
        result = run_baseline_ca_opw(scenario, channels, settings=settings, baseline=mbc_target)
    else:
        result = run_baseline_ca_otw(scenario, channels, settings=settings, baseline=mbc_target)
    return result.wsr, result.revenue.revenue, result.max_residual, result.iterations, result.trace


def run_point(spec: ExperimentSpec, template: ScenarioInstance, settings: AlgorithmSettings,
              value: Optional[float], seed: int, transport: str = "inprocess") -> List[ExperimentRecord]:
    """
    Every algorithm on one sweep point and seed, sharing one channel draw.

    Failures are recorded on the affected records and never propagate.
    """
    spec_hash = spec.spec_hash
    sweep_var = spec.sweep.value if spec.sweep is not None else ""
    sweep_value = math.nan if value is None else float(value)
    labels = [(a, m) for m in spec.mbc_modes for a in spec.algorithms]

    def blank(algorithm: Algorithm, mbc: bool) -> ExperimentRecord:
        label = algorithm.value + ("" if mbc else NO_MBC_SUFFIX)
        return ExperimentRecord(spec_hash, seed, sweep_var, sweep_value, label)

    try:
        scenario = prepare_point(template, spec, value, seed)
        channels = draw_channels(scenario, seed)
        nosharing = run_nosharing(scenario, channels, settings)
    except (SaginError, ValueError, RuntimeError) as exc:
        logger.warning("Point %s=%s seed %d failed: %s", sweep_var, value, seed, exc)
        return [replace(blank(a, m), error=f"{type(exc).__name__}: {exc}") for a, m in labels]

    records = []
    for algorithm, mbc in labels:
        record = blank(algorithm, mbc)
        record.u_g0, record.u_s0 = nosharing.baseline
        started = time.perf_counter()
        try:
            wsr, revenue, residual, iterations, trace = _run_algorithm(
                algorithm, mbc, scenario, channels, settings, nosharing, transport)
            record.wsr = float(wsr)
            record.u_g, record.u_s = float(revenue[0]), float(revenue[1])
            record.mbc_slack_g = record.u_g - record.u_g0
            record.mbc_slack_s = record.u_s - record.u_s0
            record.max_residual = float(residual)
            record.iterations = int(iterations)
            if spec.keep_traces and trace is not None:
                record.trace = trace.to_dict()
        except NoFeasiblePoint as exc:
            record.error = f"infeasible: {exc}"
        except (SaginError, ValueError, RuntimeError) as exc:
            logger.warning("%s failed on seed %d: %s", record.algorithm, seed, exc)
            record.error = f"{type(exc).__name__}: {exc}"
        record.wall_ms = 1e3 * (time.perf_counter() - started)
        records.append(record)
    return records


def run_experiment(spec: ExperimentSpec, template: ScenarioInstance,
                   settings: Optional[AlgorithmSettings] = None, workers: int = 1,
                   transport: str = "inprocess") -> List[ExperimentRecord]:
    """
    Execute the Cartesian product of sweep values, seeds and algorithms.

    Args:
        spec: Validated experiment
        template: Scenario whose counts and physics every point reuses
        settings: Algorithm constants
        workers: Worker processes; 1 runs inline
        transport: Message transport of the distributed algorithm

    Returns:
        Records ordered by sweep value, seed, MBC mode and algorithm
    """
    spec.validate()
    settings = settings or AlgorithmSettings()
    tasks = [(value, seed) for value in spec.points for seed in spec.seeds]
    logger.info("Experiment %s (%s): %d points x %d algorithms",
                spec.name, spec.spec_hash, len(tasks), len(spec.algorithms) * len(spec.mbc_modes))

    if workers <= 1:
        batches = [run_point(spec, template, settings, value, seed, transport) for value, seed in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_point, spec, template, settings, value, seed, transport)
                       for value, seed in tasks]
            batches = [future.result() for future in futures]
    return [record for batch in batches for record in batch]


def with_cli_overrides(spec: ExperimentSpec, seeds: Optional[int] = None,
                       algorithm: Optional[str] = None, no_mbc: bool = False) -> ExperimentSpec:
    """Spec with the command-line overrides applied."""
    changes: Dict[str, Any] = {}
    if seeds is not None:
        changes["seeds"] = tuple(range(seeds))
    if algorithm is not None:
        try:
            changes["algorithms"] = (Algorithm(algorithm),)
        except ValueError:
            raise ValidationError("algorithm", f"unknown algorithm '{algorithm}'")
    if no_mbc:
        changes["mbc_modes"] = (False,)
    return replace(spec, **changes).validate()


def mean_by_point(records: Sequence[ExperimentRecord],
                  column: str = "wsr") -> Dict[Tuple[Optional[float], str], float]:
    """Monte Carlo mean of one column per (sweep value, algorithm), skipping failures."""
    groups: Dict[Tuple[Optional[float], str], List[float]] = {}
    for record in records:
        if record.ok:
            value = None if math.isnan(record.sweep_value) else record.sweep_value
            groups.setdefault((value, record.algorithm), []).append(getattr(record, column))
    return {key: float(np.mean(values)) for key, values in groups.items()}
