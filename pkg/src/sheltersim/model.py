"""Shelter flow model: arrivals, stay attributes, bed seeking with
abandonment, five-way parallel service sign-up with batching, and departure.

Youth enter the shelter either seeking a crisis bed first (bed-seeking) or
services only. Bed seekers queue for one bed unit and either seize it or give
up after their bed patience; a configurable fraction of those who give up
leave outright, the rest stay on as service-only users. Every youth who stays
signs up for the services in their needs profile simultaneously, tolerating at
most their service patience per queue, and then remains in the system until
their departure time, when all held units are released at once.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import partial

from .distributions import (
    ExponentialParams,
    TriangularParams,
    sample_bernoulli,
    sample_exponential,
    sample_triangular,
    sample_uniform_int,
)
from .kernel import Resource, Simulator
from .streams import RngStream

DAYS_PER_YEAR = 365.25

BED_RESOURCE = "crisis_beds"

# Stay-attribute distributions (days).
LOS_BED_SEEKING_16_20 = TriangularParams(30, 75, 90)
LOS_BED_SEEKING_21_24 = TriangularParams(60, 120, 180)
LOS_SERVICE_ONLY = TriangularParams(7, 14, 30)
BED_PATIENCE = TriangularParams(3, 5, 7)
SERVICE_PATIENCE = TriangularParams(1, 7, 14)


class YouthKind(Enum):
    BED_SEEKING = "bed_seeking"
    SERVICE_ONLY = "service_only"


class AgeGroup(Enum):
    AGE_16_20 = "16-20"
    AGE_21_24 = "21-24"


class BedOutcome(Enum):
    GRANTED = "granted"
    RENEGED_EXIT = "reneged_exit"
    RENEGED_STAYED = "reneged_stayed"
    NOT_APPLICABLE = "not_applicable"


class ServiceOutcome(Enum):
    GRANTED = "granted"
    RENEGED = "reneged"
    BYPASSED = "bypassed"


class Departure(Enum):
    SERVED_THEN_LEFT = "served_then_left"
    LEFT_UNSERVED = "left_unserved"


@dataclass(frozen=True)
class ServiceSpec:
    """One appointment pool: monthly capacity, demand probability, and the
    per-youth monthly appointment range conditional on requesting."""

    name: str
    capacity_units: int
    request_prob: float
    appt_min: int
    appt_max: int

    def validation_errors(self, path: str = "") -> list[str]:
        errors = []
        if not self.name:
            errors.append(f"{path}name: must be non-empty")
        if self.capacity_units < 0 or int(self.capacity_units) != self.capacity_units:
            errors.append(f"{path}capacity_units: must be a non-negative integer")
        if not 0.0 <= self.request_prob <= 1.0:
            errors.append(f"{path}request_prob: must be within [0, 1], got {self.request_prob}")
        if self.appt_min < 1:
            errors.append(f"{path}appt_min: must be >= 1")
        if self.appt_max < self.appt_min:
            errors.append(f"{path}appt_max: must be >= appt_min")
        if self.appt_max > self.capacity_units:
            errors.append(
                f"{path}appt_max: {self.appt_max} exceeds capacity_units "
                f"{self.capacity_units} (requests could never be satisfied)"
            )
        return errors


def default_services() -> list[ServiceSpec]:
    """The five support services at their estimated monthly capacities."""
    return [
        ServiceSpec("case_management", 400, 1.0, 2, 4),
        ServiceSpec("drug_counseling", 60, 0.40, 1, 4),
        ServiceSpec("insurance_enrollment", 34, 0.50, 1, 1),
        ServiceSpec("psychiatric", 56, 0.50, 1, 4),
        ServiceSpec("medical", 192, 0.90, 1, 5),
    ]


class Youth:
    """One shelter entity with its stay attributes and in-flight state."""

    __slots__ = (
        "id", "kind", "age_group", "length_of_stay", "bed_patience",
        "service_patience", "needs", "arrival_time", "exits_on_bed_renege",
        "counted", "bed_held", "held_units", "pending_services",
        "bed_outcome", "bed_wait", "service_outcomes", "service_waits",
        "departure",
    )

    def __init__(self, id: int, kind: YouthKind, age_group: AgeGroup | None,
                 length_of_stay: float, bed_patience: float | None,
                 service_patience: float, needs: dict[str, int],
                 exits_on_bed_renege: bool = False):
        self.id = id
        self.kind = kind
        self.age_group = age_group
        self.length_of_stay = length_of_stay
        self.bed_patience = bed_patience
        self.service_patience = service_patience
        self.needs = needs
        self.exits_on_bed_renege = exits_on_bed_renege
        self.arrival_time = 0.0
        self.counted = False
        self.bed_held = False
        self.held_units: dict[str, int] = {}
        self.pending_services = 0
        self.bed_outcome = BedOutcome.NOT_APPLICABLE
        self.bed_wait: float | None = None
        self.service_outcomes: dict[str, ServiceOutcome] = {}
        self.service_waits: dict[str, float] = {}
        self.departure: Departure | None = None


@dataclass
class YouthOutcome:
    """Terminal record of one youth's path through the shelter."""

    youth_id: int
    kind: YouthKind
    bed_outcome: BedOutcome
    bed_wait: float | None
    service_outcomes: dict[str, ServiceOutcome]
    service_waits: dict[str, float]
    departure: Departure
    departure_time: float


@dataclass
class FlowCounters:
    """Youth-flow tallies for the statistics window (arrival cohort)."""

    arrivals: int = 0
    arrivals_bed_seeking: int = 0
    arrivals_service_only: int = 0
    served_then_left: int = 0
    left_unserved: int = 0
    bed_renege_exit: int = 0
    bed_renege_stayed: int = 0


def build_needs_profile(specs: list[ServiceSpec], stream: RngStream) -> dict[str, int]:
    """Draw monthly appointment counts per service: a demand coin, then a
    uniform count over the service's conditional range."""
    needs = {}
    for spec in specs:
        if sample_bernoulli(spec.request_prob, stream.uniform()):
            needs[spec.name] = sample_uniform_int(spec.appt_min, spec.appt_max, stream.uniform())
        else:
            needs[spec.name] = 0
    return needs


def assign_attributes(youth_id: int, kind: YouthKind, age_16_20_fraction: float,
                      renege_exit_prob: float, specs: list[ServiceSpec],
                      attr_stream: RngStream, needs_stream: RngStream) -> Youth:
    """Draw a youth's stay attributes and needs profile.

    All draws happen here, up front, so a youth's attributes depend only on
    the draw sequence and never on resource contention.
    """
    if kind is YouthKind.BED_SEEKING:
        if sample_bernoulli(age_16_20_fraction, attr_stream.uniform()):
            age = AgeGroup.AGE_16_20
            los = sample_triangular(LOS_BED_SEEKING_16_20, attr_stream.uniform())
        else:
            age = AgeGroup.AGE_21_24
            los = sample_triangular(LOS_BED_SEEKING_21_24, attr_stream.uniform())
        bed_patience = sample_triangular(BED_PATIENCE, attr_stream.uniform())
        exits = sample_bernoulli(renege_exit_prob, attr_stream.uniform())
    else:
        age = None
        los = sample_triangular(LOS_SERVICE_ONLY, attr_stream.uniform())
        bed_patience = None
        exits = False
    service_patience = sample_triangular(SERVICE_PATIENCE, attr_stream.uniform())
    needs = build_needs_profile(specs, needs_stream)
    return Youth(youth_id, kind, age, los, bed_patience, service_patience, needs,
                 exits_on_bed_renege=exits)


class ShelterModel:
    """Event-driven shelter with one bed pool and one pool per service.

    The model owns the resources and the youth state machine. Arrival
    generation is optional (``start``); tests can instead inject fully
    specified youths through ``admit``.

    When a ``trace`` list is supplied, every state change appends one tuple:

    - ("arrival", t, id, kind, age, los, bed_patience, service_patience,
      needs_in_service_order, exits_on_bed_renege)
    - ("bed_request", t, id) / ("bed_grant", t, id, wait)
    - ("bed_renege", t, id, "exit" | "stay")
    - ("service_request", t, id, service, units)
    - ("service_grant", t, id, service, wait) / ("service_renege", t, id, service)
    - ("service_bypass", t, id, service)
    - ("depart", t, id, "served_then_left" | "left_unserved")
    """

    def __init__(self, sim: Simulator, bed_capacity: int, services: list[ServiceSpec],
                 annual_arrivals: float = 0.0, bsy_fraction: float = 0.0,
                 age_16_20_fraction: float = 0.0, renege_exit_prob: float = 0.0,
                 redraw_los_on_bed_renege: bool = False,
                 streams: dict[str, RngStream] | None = None,
                 trace: list | None = None, collect_outcomes: bool = False,
                 arrival_cutoff: float | None = None):
        self.sim = sim
        self.specs = list(services)
        self.beds = Resource(sim, BED_RESOURCE, bed_capacity)
        self.services = {s.name: Resource(sim, s.name, s.capacity_units) for s in self.specs}
        self.annual_arrivals = annual_arrivals
        self.bsy_fraction = bsy_fraction
        self.age_16_20_fraction = age_16_20_fraction
        self.renege_exit_prob = renege_exit_prob
        self.redraw_los_on_bed_renege = redraw_los_on_bed_renege
        self.streams = streams
        self.trace = trace
        self.collect_outcomes = collect_outcomes
        self.outcomes: list[YouthOutcome] = []
        self.arrival_cutoff = arrival_cutoff
        self.counters = FlowCounters()
        self._stats_on = False
        self._next_id = 0
        self._gap_params: ExponentialParams | None = None

    # -- statistics window ---------------------------------------------------

    def reset_statistics(self) -> None:
        """Start the measurement window: zero every accumulator but keep all
        in-flight youth and holdings."""
        self.beds.reset_statistics()
        for resource in self.services.values():
            resource.reset_statistics()
        self.counters = FlowCounters()
        self._stats_on = True

    def all_resources(self) -> dict[str, Resource]:
        resources = {BED_RESOURCE: self.beds}
        resources.update(self.services)
        return resources

    # -- arrivals --------------------------------------------------------------

    def start(self) -> None:
        """Begin Poisson arrivals with mean rate ``annual_arrivals`` per year."""
        if self.annual_arrivals <= 0:
            return
        self._gap_params = ExponentialParams(DAYS_PER_YEAR / self.annual_arrivals)
        self._schedule_next_arrival()

    def _schedule_next_arrival(self) -> None:
        u = 1.0 - self.streams["arrivals"].uniform()
        t = self.sim.now + sample_exponential(self._gap_params, u)
        if self.arrival_cutoff is None or t <= self.arrival_cutoff:
            self.sim.schedule(t, self._arrive)

    def _arrive(self) -> None:
        attr = self.streams["attributes"]
        if sample_bernoulli(self.bsy_fraction, attr.uniform()):
            kind = YouthKind.BED_SEEKING
        else:
            kind = YouthKind.SERVICE_ONLY
        youth = assign_attributes(
            self._next_id, kind, self.age_16_20_fraction, self.renege_exit_prob,
            self.specs, attr, self.streams["needs"],
        )
        self._next_id += 1
        self.admit(youth)
        self._schedule_next_arrival()

    # -- youth process -----------------------------------------------------------

    def admit(self, youth: Youth) -> None:
        """Run one youth through the shelter starting now."""
        now = self.sim.now
        youth.arrival_time = now
        youth.counted = self._stats_on
        if youth.counted:
            self.counters.arrivals += 1
            if youth.kind is YouthKind.BED_SEEKING:
                self.counters.arrivals_bed_seeking += 1
            else:
                self.counters.arrivals_service_only += 1
        if self.trace is not None:
            self.trace.append((
                "arrival", now, youth.id, youth.kind.value,
                youth.age_group.value if youth.age_group else None,
                youth.length_of_stay, youth.bed_patience, youth.service_patience,
                tuple(youth.needs[s.name] for s in self.specs),
                youth.exits_on_bed_renege,
            ))
        if youth.kind is YouthKind.BED_SEEKING:
            if self.trace is not None:
                self.trace.append(("bed_request", now, youth.id))
            self.beds.request(
                youth.id, 1, youth.bed_patience,
                partial(self._on_bed_grant, youth),
                partial(self._on_bed_renege, youth),
            )
        else:
            self._start_services(youth)

    def _on_bed_grant(self, youth: Youth, wait: float) -> None:
        youth.bed_held = True
        youth.bed_outcome = BedOutcome.GRANTED
        youth.bed_wait = wait
        if self.trace is not None:
            self.trace.append(("bed_grant", self.sim.now, youth.id, wait))
        self._start_services(youth)

    def _on_bed_renege(self, youth: Youth) -> None:
        exits = youth.exits_on_bed_renege
        if self.trace is not None:
            self.trace.append(("bed_renege", self.sim.now, youth.id,
                               "exit" if exits else "stay"))
        if youth.counted:
            if exits:
                self.counters.bed_renege_exit += 1
            else:
                self.counters.bed_renege_stayed += 1
        if exits:
            youth.bed_outcome = BedOutcome.RENEGED_EXIT
            self._depart(youth, Departure.LEFT_UNSERVED)
            return
        youth.bed_outcome = BedOutcome.RENEGED_STAYED
        if self.redraw_los_on_bed_renege:
            u = self.streams["redraw"].uniform()
            youth.length_of_stay = sample_triangular(LOS_SERVICE_ONLY, u)
        self._start_services(youth)

    def _start_services(self, youth: Youth) -> None:
        now = self.sim.now
        requested = []
        for spec in self.specs:
            units = youth.needs[spec.name]
            if units == 0:
                youth.service_outcomes[spec.name] = ServiceOutcome.BYPASSED
                if self.trace is not None:
                    self.trace.append(("service_bypass", now, youth.id, spec.name))
            else:
                requested.append((spec.name, units))
        youth.pending_services = len(requested)
        if not requested:
            self._batch_resolved(youth)
            return
        for name, units in requested:
            if self.trace is not None:
                self.trace.append(("service_request", now, youth.id, name, units))
            self.services[name].request(
                youth.id, units, youth.service_patience,
                partial(self._on_service_grant, youth, name, units),
                partial(self._on_service_renege, youth, name),
            )

    def _on_service_grant(self, youth: Youth, name: str, units: int, wait: float) -> None:
        youth.held_units[name] = units
        youth.service_outcomes[name] = ServiceOutcome.GRANTED
        youth.service_waits[name] = wait
        if self.trace is not None:
            self.trace.append(("service_grant", self.sim.now, youth.id, name, wait))
        self._service_resolved(youth)

    def _on_service_renege(self, youth: Youth, name: str) -> None:
        youth.service_outcomes[name] = ServiceOutcome.RENEGED
        if self.trace is not None:
            self.trace.append(("service_renege", self.sim.now, youth.id, name))
        self._service_resolved(youth)

    def _service_resolved(self, youth: Youth) -> None:
        youth.pending_services -= 1
        if youth.pending_services == 0:
            self._batch_resolved(youth)

    def _batch_resolved(self, youth: Youth) -> None:
        # A youth holding nothing at the end of sign-up leaves right away;
        # everyone else stays for their assigned length of stay (or until
        # sign-up resolved, whichever is later).
        if youth.bed_held or youth.held_units:
            depart_at = max(youth.arrival_time + youth.length_of_stay, self.sim.now)
            self.sim.schedule(depart_at, self._depart, youth, Departure.SERVED_THEN_LEFT)
        else:
            self._depart(youth, Departure.LEFT_UNSERVED)

    def _depart(self, youth: Youth, kind: Departure) -> None:
        youth.departure = kind
        if youth.counted:
            if kind is Departure.SERVED_THEN_LEFT:
                self.counters.served_then_left += 1
            else:
                self.counters.left_unserved += 1
        if self.trace is not None:
            self.trace.append(("depart", self.sim.now, youth.id, kind.value))
        if youth.bed_held:
            self.beds.release(youth.id, 1)
            youth.bed_held = False
        for name, units in youth.held_units.items():
            self.services[name].release(youth.id, units)
        youth.held_units.clear()
        if self.collect_outcomes:
            self.outcomes.append(YouthOutcome(
                youth.id, youth.kind, youth.bed_outcome, youth.bed_wait,
                dict(youth.service_outcomes), dict(youth.service_waits),
                kind, self.sim.now,
            ))
