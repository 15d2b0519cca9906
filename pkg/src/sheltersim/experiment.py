"""Replication runner with warm-up truncation, cross-replication summaries,
and one-parameter capacity sweeps under common random numbers.

A scenario is one shelter configuration. Each replication builds a fresh
kernel, seeds its streams from (master seed, replication index, stream name),
runs warm-up plus one statistics window, and reports window statistics.
Sweeps rerun the same scenario with one capacity changed and the master seed
fixed, so arrival epochs and youth attributes are identical across swept
values and only contention differs.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import repeat

from scipy import stats as scipy_stats

from .kernel import Simulator
from .model import ServiceSpec, ShelterModel, default_services
from .streams import RngStream

# Streams a replication may consume, in no particular order.
STREAM_NAMES = ("arrivals", "attributes", "needs", "redraw")

FLOW_FIELDS = (
    "arrivals", "arrivals_bed_seeking", "arrivals_service_only",
    "served_then_left", "left_unserved", "bed_renege_exit",
    "bed_renege_stayed", "still_in_system",
)


class ConfigError(ValueError):
    """Invalid scenario configuration; ``errors`` lists field-path messages."""

    def __init__(self, errors: list[str]):
        self.errors = errors
        super().__init__("; ".join(errors))


@dataclass(frozen=True)
class ScenarioConfig:
    """Full parameterization of one shelter configuration.

    ``age_16_20_fraction`` is a calibrated modeling input, not an observed
    quantity: it is chosen so the baseline bed-abandonment rate lands near
    one quarter of bed seekers (see README for the calibration procedure).
    """

    bed_capacity: int = 66
    services: tuple[ServiceSpec, ...] = field(
        default_factory=lambda: tuple(default_services()))
    annual_arrivals: float = 1399.0
    bsy_fraction: float = 1.0 / 3.0
    age_16_20_fraction: float = 0.92
    renege_exit_prob: float = 0.25
    redraw_los_on_bed_renege: bool = False
    warmup_days: float = 365.25
    stats_window_days: float = 365.25
    replications: int = 100
    master_seed: int = 20240501

    def validation_errors(self) -> list[str]:
        errors = []
        if self.bed_capacity < 0 or int(self.bed_capacity) != self.bed_capacity:
            errors.append("bed_capacity: must be a non-negative integer")
        if self.bsy_fraction > 0 and self.bed_capacity < 1:
            errors.append("bed_capacity: must be >= 1 when bsy_fraction > 0 "
                          "(bed requests could never be satisfied)")
        if not self.services:
            errors.append("services: must list at least one service")
        names = [s.name for s in self.services]
        if len(set(names)) != len(names):
            errors.append("services: names must be unique")
        for i, spec in enumerate(self.services):
            errors.extend(spec.validation_errors(path=f"services[{i}]."))
        if self.annual_arrivals < 0:
            errors.append("annual_arrivals: must be >= 0")
        for name in ("bsy_fraction", "age_16_20_fraction", "renege_exit_prob"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                errors.append(f"{name}: must be within [0, 1], got {value}")
        if self.warmup_days < 0:
            errors.append("warmup_days: must be >= 0")
        if not self.stats_window_days > 0:
            errors.append("stats_window_days: must be > 0")
        if self.replications < 1:
            errors.append("replications: must be >= 1")
        if not 0 <= self.master_seed < 2 ** 64:
            errors.append("master_seed: must fit in an unsigned 64-bit integer")
        return errors

    def validate(self) -> None:
        errors = self.validation_errors()
        if errors:
            raise ConfigError(errors)

    def to_dict(self) -> dict:
        return {
            "bed_capacity": self.bed_capacity,
            "services": [
                {
                    "name": s.name,
                    "capacity_units": s.capacity_units,
                    "request_prob": s.request_prob,
                    "appt_min": s.appt_min,
                    "appt_max": s.appt_max,
                }
                for s in self.services
            ],
            "annual_arrivals": self.annual_arrivals,
            "bsy_fraction": self.bsy_fraction,
            "age_16_20_fraction": self.age_16_20_fraction,
            "renege_exit_prob": self.renege_exit_prob,
            "redraw_los_on_bed_renege": self.redraw_los_on_bed_renege,
            "warmup_days": self.warmup_days,
            "stats_window_days": self.stats_window_days,
            "replications": self.replications,
            "master_seed": self.master_seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ConfigError(["config: must be an object"])
        defaults = cls()
        known = set(defaults.to_dict())
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError([f"{key}: unknown field" for key in unknown])
        kwargs = {}
        errors = []
        for key, value in data.items():
            if key == "services":
                if not isinstance(value, list):
                    errors.append("services: must be an array")
                    continue
                specs = []
                for i, item in enumerate(value):
                    if not isinstance(item, dict):
                        errors.append(f"services[{i}]: must be an object")
                        continue
                    extra = sorted(set(item) - {"name", "capacity_units",
                                                "request_prob", "appt_min", "appt_max"})
                    if extra:
                        errors.extend(f"services[{i}].{k}: unknown field" for k in extra)
                        continue
                    try:
                        specs.append(ServiceSpec(
                            name=str(item.get("name", "")),
                            capacity_units=_as_int(item.get("capacity_units", 0),
                                                   f"services[{i}].capacity_units", errors),
                            request_prob=float(item.get("request_prob", 0.0)),
                            appt_min=_as_int(item.get("appt_min", 1),
                                             f"services[{i}].appt_min", errors),
                            appt_max=_as_int(item.get("appt_max", 1),
                                             f"services[{i}].appt_max", errors),
                        ))
                    except (TypeError, ValueError):
                        errors.append(f"services[{i}]: malformed service entry")
                kwargs["services"] = tuple(specs)
            elif key in ("bed_capacity", "replications", "master_seed"):
                kwargs[key] = _as_int(value, key, errors)
            elif key == "redraw_los_on_bed_renege":
                if not isinstance(value, bool):
                    errors.append(f"{key}: must be a boolean")
                else:
                    kwargs[key] = value
            else:
                try:
                    kwargs[key] = float(value)
                except (TypeError, ValueError):
                    errors.append(f"{key}: must be a number")
        if errors:
            raise ConfigError(errors)
        return cls(**kwargs)

    def digest(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _as_int(value, path: str, errors: list[str]) -> int:
    if isinstance(value, bool):
        errors.append(f"{path}: must be an integer")
        return 0
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    errors.append(f"{path}: must be an integer, got {value!r}")
    return 0


@dataclass(frozen=True)
class ResourceWindowStats:
    """One resource's statistics over one replication's window."""

    requests: int
    served: int
    reneges: int
    still_queued: int
    avg_wait: float | None
    max_wait: float | None
    utilization: float | None

    @property
    def renege_pct(self) -> float | None:
        if self.requests == 0:
            return None
        return 100.0 * self.reneges / self.requests


@dataclass(frozen=True)
class ReplicationStats:
    """Everything measured in one replication's statistics window."""

    replication: int
    resources: dict[str, ResourceWindowStats]
    arrivals: int
    arrivals_bed_seeking: int
    arrivals_service_only: int
    served_then_left: int
    left_unserved: int
    bed_renege_exit: int
    bed_renege_stayed: int
    still_in_system: int


@dataclass(frozen=True)
class ResourceSummary:
    """Cross-replication aggregate for one resource."""

    avg_wait: float | None
    avg_wait_ci: float | None
    max_wait: float | None
    utilization: float | None
    utilization_ci: float | None
    renege_pct: float | None
    renege_pct_ci: float | None
    requests_mean: float


@dataclass(frozen=True)
class ScenarioSummary:
    """Scenario results: per-resource aggregates, youth-flow means, and the
    per-replication records they were built from."""

    config: ScenarioConfig
    resources: dict[str, ResourceSummary]
    flows: dict[str, tuple[float, float | None]]
    replications: list[ReplicationStats]


def t_halfwidth(values: list[float], confidence: float = 0.95) -> float | None:
    """Half-width of the Student-t confidence interval for the mean.

    Undefined (None) with fewer than two values.
    """
    n = len(values)
    if n < 2:
        return None
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    if var == 0.0:
        return 0.0
    crit = float(scipy_stats.t.ppf(0.5 + confidence / 2.0, n - 1))
    return crit * math.sqrt(var / n)


def build_streams(master_seed: int, replication: int) -> dict[str, RngStream]:
    return {name: RngStream(master_seed, replication, name) for name in STREAM_NAMES}


def _build_model(config: ScenarioConfig, replication: int,
                 trace: list | None = None,
                 collect_outcomes: bool = False) -> tuple[Simulator, ShelterModel]:
    sim = Simulator()
    model = ShelterModel(
        sim,
        bed_capacity=config.bed_capacity,
        services=list(config.services),
        annual_arrivals=config.annual_arrivals,
        bsy_fraction=config.bsy_fraction,
        age_16_20_fraction=config.age_16_20_fraction,
        renege_exit_prob=config.renege_exit_prob,
        redraw_los_on_bed_renege=config.redraw_los_on_bed_renege,
        streams=build_streams(config.master_seed, replication),
        trace=trace,
        collect_outcomes=collect_outcomes,
    )
    return sim, model


def _collect(config: ScenarioConfig, replication: int, model: ShelterModel,
             horizon: float) -> ReplicationStats:
    window = (config.warmup_days, horizon)
    resources = {}
    for name, res in model.all_resources().items():
        s = res.stats
        waits = s.served_waits
        if res.capacity > 0 and horizon > config.warmup_days:
            utilization = res.utilization(*window)
        else:
            utilization = None
        resources[name] = ResourceWindowStats(
            requests=s.request_count,
            served=len(waits),
            reneges=s.renege_count,
            still_queued=res.still_queued_counted(),
            avg_wait=sum(waits) / len(waits) if waits else None,
            max_wait=max(waits) if waits else None,
            utilization=utilization,
        )
    c = model.counters
    return ReplicationStats(
        replication=replication,
        resources=resources,
        arrivals=c.arrivals,
        arrivals_bed_seeking=c.arrivals_bed_seeking,
        arrivals_service_only=c.arrivals_service_only,
        served_then_left=c.served_then_left,
        left_unserved=c.left_unserved,
        bed_renege_exit=c.bed_renege_exit,
        bed_renege_stayed=c.bed_renege_stayed,
        still_in_system=c.arrivals - c.served_then_left - c.left_unserved,
    )


def run_replication(config: ScenarioConfig, replication: int) -> ReplicationStats:
    """Run one seeded replication: warm-up, statistics reset, one window."""
    sim, model = _build_model(config, replication)
    model.start()
    sim.run_until(config.warmup_days)
    model.reset_statistics()
    horizon = config.warmup_days + config.stats_window_days
    sim.run_until(horizon)
    return _collect(config, replication, model, horizon)


def run_replication_traced(config: ScenarioConfig, replication: int,
                           collect_outcomes: bool = False):
    """Like ``run_replication`` but also returns the full event trace (and,
    optionally, terminal youth outcomes). Slower; intended for verification."""
    trace: list = []
    sim, model = _build_model(config, replication, trace=trace,
                              collect_outcomes=collect_outcomes)
    model.start()
    sim.run_until(config.warmup_days)
    model.reset_statistics()
    horizon = config.warmup_days + config.stats_window_days
    sim.run_until(horizon)
    stats = _collect(config, replication, model, horizon)
    if collect_outcomes:
        return stats, trace, model.outcomes
    return stats, trace


def arrival_log(trace: list) -> list:
    """Arrival entries of a trace: epoch plus every drawn youth attribute."""
    return [entry for entry in trace if entry[0] == "arrival"]


def summarize(config: ScenarioConfig, reps: list[ReplicationStats]) -> ScenarioSummary:
    """Aggregate replication records into a scenario summary."""
    resource_names = list(reps[0].resources) if reps else []
    resources = {}
    for name in resource_names:
        per_rep = [r.resources[name] for r in reps]
        avg_waits = [s.avg_wait for s in per_rep if s.avg_wait is not None]
        max_waits = [s.max_wait for s in per_rep if s.max_wait is not None]
        utils = [s.utilization for s in per_rep if s.utilization is not None]
        renege_pcts = [s.renege_pct for s in per_rep if s.renege_pct is not None]
        resources[name] = ResourceSummary(
            avg_wait=_mean(avg_waits),
            avg_wait_ci=t_halfwidth(avg_waits),
            max_wait=max(max_waits) if max_waits else None,
            utilization=_mean(utils),
            utilization_ci=t_halfwidth(utils),
            renege_pct=_mean(renege_pcts),
            renege_pct_ci=t_halfwidth(renege_pcts),
            requests_mean=_mean([s.requests for s in per_rep]) or 0.0,
        )
    flows = {}
    for fieldname in FLOW_FIELDS:
        values = [float(getattr(r, fieldname)) for r in reps]
        flows[fieldname] = (_mean(values) or 0.0, t_halfwidth(values))
    return ScenarioSummary(config=config, resources=resources, flows=flows,
                           replications=reps)


def _mean(values: list) -> float | None:
    if not values:
        return None
    return sum(values) / len(values)


def run_scenario(config: ScenarioConfig, jobs: int = 1) -> ScenarioSummary:
    """Run every replication of a scenario and aggregate the results.

    Replications are independent; with ``jobs > 1`` they run in worker
    processes and are merged in index order, so results do not depend on
    scheduling.
    """
    config.validate()
    n = config.replications
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reps = list(pool.map(run_replication, repeat(config), range(n),
                                 chunksize=max(1, n // (4 * jobs))))
    else:
        reps = [run_replication(config, i) for i in range(n)]
    return summarize(config, reps)


def apply_parameter(config: ScenarioConfig, parameter: str, value: int) -> ScenarioConfig:
    """Return a copy of the config with one swept capacity replaced.

    ``parameter`` is either ``bed_capacity`` or ``service:<name>``.
    """
    if parameter == "bed_capacity":
        return replace(config, bed_capacity=int(value))
    if parameter.startswith("service:"):
        target = parameter.split(":", 1)[1]
        names = [s.name for s in config.services]
        if target not in names:
            raise ValueError(
                f"unknown service {target!r}; expected one of {', '.join(names)}")
        services = tuple(
            replace(s, capacity_units=int(value)) if s.name == target else s
            for s in config.services
        )
        return replace(config, services=services)
    raise ValueError(
        f"unknown sweep parameter {parameter!r}; expected bed_capacity or service:<name>")


def sweep(config: ScenarioConfig, parameter: str, values: list[int],
          jobs: int = 1) -> list[tuple[int, ScenarioSummary]]:
    """Run one scenario per value, all else fixed, same master seed.

    Sharing the seed couples the scenarios through common random numbers:
    identical arrivals and youth attributes, different contention only.
    """
    if not values:
        raise ValueError("values must be non-empty")
    results = []
    for value in values:
        swept = apply_parameter(config, parameter, value)
        results.append((value, run_scenario(swept, jobs=jobs)))
    return results
