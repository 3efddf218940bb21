"""Scenario model: what to simulate, loaded from JSON and validated.

A scenario fixes the node universe, who is active at step 0, where state
values come from, how membership churns, how the step topologies are
produced, the step ``k_prime`` after which membership and topology
distribution stay fixed, the family size ``T``, and the horizon.

Parsing problems (missing keys, wrong types, malformed graphs) raise
ScenarioFormatError. Semantic problems (inconsistent churn, disconnected
stable union, departures that would strand mass) are collected by
validate_scenario() as findings with severities, so callers can decide
how hard to fail.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Union

from .graphs import DigraphInstance, is_strongly_connected, union_digraph

NodeId = int


class ScenarioFormatError(Exception):
    """The scenario file or dict cannot be parsed into a Scenario."""


class ScenarioValidationError(Exception):
    """A scenario parsed but is semantically unusable for a run."""

    def __init__(self, report: "ValidationReport") -> None:
        lines = "; ".join(f.message for f in report.errors())
        super().__init__(f"scenario validation failed: {lines}")
        self.report = report


@dataclass(frozen=True, slots=True)
class ExplicitStates:
    """Fixed node -> state value map."""

    values: dict[NodeId, int]


@dataclass(frozen=True, slots=True)
class UniformIntStates:
    """Independent uniform integer draw on [low, high], both inclusive."""

    low: int
    high: int


StateSource = Union[ExplicitStates, UniformIntStates]


@dataclass(frozen=True, slots=True)
class ChurnEvent:
    """Scheduled membership change taking effect after step ``step``."""

    step: int
    arrivals: frozenset[NodeId]
    departures: frozenset[NodeId]


@dataclass(frozen=True, slots=True)
class ExplicitChurn:
    events: tuple[ChurnEvent, ...]


@dataclass(frozen=True, slots=True)
class ChurnInterval:
    """During steps start..end (inclusive) each step independently fires
    one single-node membership event with probability ``event_prob``; the
    event is an arrival or a departure according to the weights.
    """

    start: int
    end: int
    event_prob: float
    arrival_weight: float = 0.5
    departure_weight: float = 0.5


@dataclass(frozen=True, slots=True)
class StochasticChurn:
    intervals: tuple[ChurnInterval, ...]


ChurnSchedule = Union[ExplicitChurn, StochasticChurn]


@dataclass(frozen=True, slots=True)
class RandomFamilyTopology:
    """Topologies come from seeded families of random instances.

    For each distinct active set the engine derives a family of
    ``scenario.family_size`` instances with the given minimum out-degree
    and a strongly connected union, then picks one member uniformly at
    every step. Once membership stops changing the family is fixed, so
    the post-stabilization draw is i.i.d. over a fixed instance family.
    """

    min_out_degree: int


@dataclass(frozen=True, slots=True)
class ExplicitTopology:
    """Hand-written step graphs.

    ``transient[k]`` is used for step k < k_prime, restricted to the
    nodes active at k. From k_prime on, one ``stable`` instance is drawn
    per step with the given probabilities; stable instances must be
    defined exactly over the post-stabilization active set.
    """

    transient: tuple[DigraphInstance, ...]
    stable: tuple[tuple[DigraphInstance, float], ...]


TopologySchedule = Union[RandomFamilyTopology, ExplicitTopology]


@dataclass(frozen=True, slots=True)
class Scenario:
    n_total: int
    initially_active: frozenset[NodeId]
    initial_states: StateSource
    arrival_states: StateSource | None
    churn: ChurnSchedule
    topology: TopologySchedule
    k_prime: int
    family_size: int
    horizon: int
    seed: int = 0


@dataclass(frozen=True, slots=True)
class Finding:
    code: str
    severity: str  # "error" | "warning" | "info"
    message: str


@dataclass(frozen=True, slots=True)
class ValidationReport:
    findings: tuple[Finding, ...]

    def errors(self) -> tuple[Finding, ...]:
        return tuple(f for f in self.findings if f.severity == "error")

    def warnings(self) -> tuple[Finding, ...]:
        return tuple(f for f in self.findings if f.severity == "warning")

    def ok(self, strict: bool = False) -> bool:
        if self.errors():
            return False
        return not (strict and self.warnings())


# -- parsing ----------------------------------------------------------------


def _need(obj: dict[str, Any], key: str, where: str) -> Any:
    if key not in obj:
        raise ScenarioFormatError(f"{where}: missing key '{key}'")
    return obj[key]


def _as_int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioFormatError(f"{where}: expected integer, got {value!r}")
    return value


def _as_number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioFormatError(f"{where}: expected number, got {value!r}")
    return float(value)


def _node_list(value: Any, where: str) -> list[NodeId]:
    if not isinstance(value, list):
        raise ScenarioFormatError(f"{where}: expected a list of node ids")
    return [_as_int(v, where) for v in value]


def _parse_instance(obj: Any, n_total: int, where: str) -> DigraphInstance:
    if not isinstance(obj, dict):
        raise ScenarioFormatError(f"{where}: expected an object with 'edges'")
    if "nodes" in obj:
        nodes = frozenset(_node_list(obj["nodes"], f"{where}.nodes"))
    else:
        nodes = frozenset(range(n_total))
    raw_edges = _need(obj, "edges", where)
    if not isinstance(raw_edges, list):
        raise ScenarioFormatError(f"{where}.edges: expected a list of [tail, head]")
    edges = set()
    for i, pair in enumerate(raw_edges):
        if not isinstance(pair, list) or len(pair) != 2:
            raise ScenarioFormatError(f"{where}.edges[{i}]: expected [tail, head]")
        edges.add((_as_int(pair[0], where), _as_int(pair[1], where)))
    try:
        return DigraphInstance(nodes=nodes, edges=frozenset(edges))
    except ValueError as exc:
        raise ScenarioFormatError(f"{where}: {exc}") from exc


def _parse_state_source(obj: Any, where: str) -> StateSource:
    if not isinstance(obj, dict):
        raise ScenarioFormatError(f"{where}: expected an object")
    kind = _need(obj, "type", where)
    if kind == "explicit":
        raw = _need(obj, "values", where)
        if not isinstance(raw, dict):
            raise ScenarioFormatError(f"{where}.values: expected an object")
        values: dict[int, int] = {}
        for key, val in raw.items():
            try:
                node = int(key)
            except ValueError:
                raise ScenarioFormatError(f"{where}.values: bad node id {key!r}")
            values[node] = _as_int(val, f"{where}.values[{key}]")
        return ExplicitStates(values=values)
    if kind == "uniform_int":
        return UniformIntStates(
            low=_as_int(_need(obj, "low", where), f"{where}.low"),
            high=_as_int(_need(obj, "high", where), f"{where}.high"),
        )
    raise ScenarioFormatError(f"{where}: unknown state source type {kind!r}")


def _parse_churn(obj: Any, where: str) -> ChurnSchedule:
    if not isinstance(obj, dict):
        raise ScenarioFormatError(f"{where}: expected an object")
    kind = _need(obj, "type", where)
    if kind == "none":
        return ExplicitChurn(events=())
    if kind == "explicit":
        raw = _need(obj, "events", where)
        if not isinstance(raw, list):
            raise ScenarioFormatError(f"{where}.events: expected a list")
        events = []
        for i, entry in enumerate(raw):
            if not isinstance(entry, dict):
                raise ScenarioFormatError(f"{where}.events[{i}]: expected an object")
            events.append(
                ChurnEvent(
                    step=_as_int(_need(entry, "step", where), f"{where}.events[{i}].step"),
                    arrivals=frozenset(
                        _node_list(entry.get("arrivals", []), f"{where}.events[{i}].arrivals")
                    ),
                    departures=frozenset(
                        _node_list(entry.get("departures", []), f"{where}.events[{i}].departures")
                    ),
                )
            )
        return ExplicitChurn(events=tuple(sorted(events, key=lambda e: e.step)))
    if kind == "stochastic":
        raw = _need(obj, "intervals", where)
        if not isinstance(raw, list):
            raise ScenarioFormatError(f"{where}.intervals: expected a list")
        intervals = []
        for i, entry in enumerate(raw):
            if not isinstance(entry, dict):
                raise ScenarioFormatError(f"{where}.intervals[{i}]: expected an object")
            w = f"{where}.intervals[{i}]"
            intervals.append(
                ChurnInterval(
                    start=_as_int(_need(entry, "start", w), f"{w}.start"),
                    end=_as_int(_need(entry, "end", w), f"{w}.end"),
                    event_prob=_as_number(_need(entry, "event_prob", w), f"{w}.event_prob"),
                    arrival_weight=_as_number(entry.get("arrival_weight", 0.5), f"{w}.arrival_weight"),
                    departure_weight=_as_number(entry.get("departure_weight", 0.5), f"{w}.departure_weight"),
                )
            )
        return StochasticChurn(intervals=tuple(sorted(intervals, key=lambda i: i.start)))
    raise ScenarioFormatError(f"{where}: unknown churn type {kind!r}")


def _parse_topology(obj: Any, n_total: int, where: str) -> TopologySchedule:
    if not isinstance(obj, dict):
        raise ScenarioFormatError(f"{where}: expected an object")
    kind = _need(obj, "type", where)
    if kind == "random_family":
        return RandomFamilyTopology(
            min_out_degree=_as_int(
                _need(obj, "min_out_degree", where), f"{where}.min_out_degree"
            )
        )
    if kind == "explicit":
        raw_transient = obj.get("transient", [])
        if not isinstance(raw_transient, list):
            raise ScenarioFormatError(f"{where}.transient: expected a list")
        transient = tuple(
            _parse_instance(entry, n_total, f"{where}.transient[{i}]")
            for i, entry in enumerate(raw_transient)
        )
        raw_stable = _need(obj, "stable", where)
        if not isinstance(raw_stable, list) or not raw_stable:
            raise ScenarioFormatError(f"{where}.stable: expected a non-empty list")
        stable = []
        for i, entry in enumerate(raw_stable):
            w = f"{where}.stable[{i}]"
            if not isinstance(entry, dict) or "nodes" not in entry:
                raise ScenarioFormatError(f"{w}: stable instances need explicit 'nodes'")
            prob = _as_number(_need(entry, "p", w), f"{w}.p")
            stable.append((_parse_instance(entry, n_total, w), prob))
        return ExplicitTopology(transient=transient, stable=tuple(stable))
    raise ScenarioFormatError(f"{where}: unknown topology type {kind!r}")


def parse_scenario(data: Any) -> Scenario:
    """Build a Scenario from already-decoded JSON data."""
    if not isinstance(data, dict):
        raise ScenarioFormatError("scenario: expected a JSON object at top level")
    n_total = _as_int(_need(data, "n_total", "scenario"), "scenario.n_total")
    initially_active = frozenset(
        _node_list(_need(data, "initially_active", "scenario"), "scenario.initially_active")
    )
    initial_states = _parse_state_source(
        _need(data, "initial_states", "scenario"), "scenario.initial_states"
    )
    arrival_states = (
        _parse_state_source(data["arrival_states"], "scenario.arrival_states")
        if "arrival_states" in data
        else None
    )
    churn = _parse_churn(_need(data, "churn", "scenario"), "scenario.churn")
    topology = _parse_topology(
        _need(data, "topology", "scenario"), n_total, "scenario.topology"
    )
    return Scenario(
        n_total=n_total,
        initially_active=initially_active,
        initial_states=initial_states,
        arrival_states=arrival_states,
        churn=churn,
        topology=topology,
        k_prime=_as_int(_need(data, "k_prime", "scenario"), "scenario.k_prime"),
        family_size=_as_int(_need(data, "T", "scenario"), "scenario.T"),
        horizon=_as_int(_need(data, "horizon", "scenario"), "scenario.horizon"),
        seed=_as_int(data.get("seed", 0), "scenario.seed"),
    )


def load_scenario(path: str | Path) -> Scenario:
    """Read and parse a scenario JSON file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioFormatError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(f"{path}: invalid JSON: {exc}") from exc
    return parse_scenario(data)


# -- validation ---------------------------------------------------------------


def _walk_explicit_membership(
    s: Scenario, out: list[Finding]
) -> list[frozenset[NodeId]] | None:
    """Active set per step for explicit churn; None when inconsistent."""
    assert isinstance(s.churn, ExplicitChurn)
    by_step: dict[int, ChurnEvent] = {}
    for event in s.churn.events:
        if event.step in by_step:
            out.append(
                Finding(
                    "churn-duplicate-step",
                    "error",
                    f"two churn events scheduled at step {event.step}",
                )
            )
            return None
        by_step[event.step] = event

    active = frozenset(s.initially_active)
    history = [active]
    consistent = True
    for k in range(s.horizon + 1):
        event = by_step.get(k)
        if event is None:
            history.append(active)
            continue
        if event.arrivals & event.departures:
            out.append(
                Finding(
                    "churn-overlap",
                    "error",
                    f"step {k}: nodes listed as both arriving and departing",
                )
            )
            consistent = False
        bad_arrivals = event.arrivals & active
        if bad_arrivals:
            out.append(
                Finding(
                    "churn-arrive-active",
                    "error",
                    f"step {k}: arrivals {sorted(bad_arrivals)} are already active",
                )
            )
            consistent = False
        bad_departures = event.departures - active
        if bad_departures:
            out.append(
                Finding(
                    "churn-depart-inactive",
                    "error",
                    f"step {k}: departures {sorted(bad_departures)} are not active",
                )
            )
            consistent = False
        next_active = (active - event.departures) | event.arrivals
        if not next_active:
            out.append(
                Finding(
                    "churn-empty-network",
                    "error",
                    f"step {k}: the network would become empty",
                )
            )
            consistent = False
        active = next_active
        history.append(active)
    return history if consistent else None


def validate_scenario(s: Scenario) -> ValidationReport:
    """Semantic checks. Errors make a scenario unrunnable; warnings mark
    configurations where the convergence guarantees do not apply.
    """
    out: list[Finding] = []
    all_ids = frozenset(range(s.n_total))

    if s.n_total < 1:
        out.append(Finding("size", "error", "n_total must be at least 1"))
    if not s.initially_active:
        out.append(Finding("membership", "error", "initially_active is empty"))
    if not s.initially_active <= all_ids:
        out.append(
            Finding(
                "membership",
                "error",
                "initially_active contains ids outside range(n_total)",
            )
        )
    if s.horizon < 0:
        out.append(Finding("horizon", "error", "horizon must be non-negative"))
    if not 0 <= s.k_prime <= s.horizon:
        out.append(
            Finding(
                "stabilization",
                "error",
                f"k_prime must lie in [0, horizon], got {s.k_prime}",
            )
        )
    if s.family_size < 1:
        out.append(Finding("family-size", "error", "T must be at least 1"))

    # State sources.
    if isinstance(s.initial_states, ExplicitStates):
        missing = s.initially_active - s.initial_states.values.keys()
        if missing:
            out.append(
                Finding(
                    "initial-states",
                    "error",
                    f"no initial state for active nodes {sorted(missing)}",
                )
            )
        extras = s.initial_states.values.keys() - all_ids
        if extras:
            out.append(
                Finding(
                    "initial-states",
                    "error",
                    f"initial states for unknown ids {sorted(extras)}",
                )
            )
    else:
        if s.initial_states.low > s.initial_states.high:
            out.append(Finding("initial-states", "error", "uniform range is empty"))

    scheduled_arrivals: set[int] = set()
    if isinstance(s.churn, ExplicitChurn):
        for event in s.churn.events:
            scheduled_arrivals |= event.arrivals
    needs_arrivals = isinstance(s.churn, StochasticChurn) and any(
        iv.event_prob > 0 and iv.arrival_weight > 0 for iv in s.churn.intervals
    )
    if scheduled_arrivals or needs_arrivals:
        if s.arrival_states is None:
            out.append(
                Finding(
                    "arrival-states",
                    "error",
                    "churn can admit nodes but arrival_states is missing",
                )
            )
        elif isinstance(s.arrival_states, ExplicitStates):
            covered = s.arrival_states.values.keys()
            if scheduled_arrivals - covered:
                out.append(
                    Finding(
                        "arrival-states",
                        "error",
                        f"no arrival state for {sorted(scheduled_arrivals - covered)}",
                    )
                )
            if needs_arrivals and not all_ids <= covered:
                out.append(
                    Finding(
                        "arrival-states",
                        "error",
                        "stochastic churn can admit any node; explicit arrival "
                        "states must cover every id",
                    )
                )
        elif s.arrival_states.low > s.arrival_states.high:
            out.append(Finding("arrival-states", "error", "uniform range is empty"))

    # Churn schedule shape.
    history: list[frozenset[NodeId]] | None = None
    if isinstance(s.churn, ExplicitChurn):
        touched = scheduled_arrivals | {
            v for e in s.churn.events for v in e.departures
        }
        if not touched <= all_ids:
            out.append(
                Finding(
                    "churn-ids",
                    "error",
                    "churn events reference ids outside range(n_total)",
                )
            )
        for event in s.churn.events:
            if not 0 <= event.step <= s.horizon:
                out.append(
                    Finding(
                        "churn-step",
                        "error",
                        f"churn event at step {event.step} is outside [0, horizon]",
                    )
                )
            elif event.step >= s.k_prime and (event.arrivals or event.departures):
                out.append(
                    Finding(
                        "late-churn",
                        "warning",
                        f"membership changes at step {event.step} on or after "
                        f"k_prime={s.k_prime}; post-stabilization guarantees "
                        "do not apply",
                    )
                )
        if not any(f.severity == "error" for f in out):
            history = _walk_explicit_membership(s, out)
    else:
        previous_end = None
        for iv in s.churn.intervals:
            if not (0.0 <= iv.event_prob <= 1.0):
                out.append(
                    Finding("churn-prob", "error", "event_prob must be in [0, 1]")
                )
            if iv.arrival_weight < 0 or iv.departure_weight < 0:
                out.append(
                    Finding("churn-weights", "error", "churn weights must be >= 0")
                )
            elif iv.arrival_weight + iv.departure_weight <= 0:
                out.append(
                    Finding("churn-weights", "error", "churn weights sum to zero")
                )
            if iv.start > iv.end or iv.start < 0:
                out.append(
                    Finding(
                        "churn-interval",
                        "error",
                        f"bad interval [{iv.start}, {iv.end}]",
                    )
                )
            if previous_end is not None and iv.start <= previous_end:
                out.append(
                    Finding("churn-interval", "error", "churn intervals overlap")
                )
            previous_end = max(iv.end, previous_end or iv.end)
            if iv.end >= s.k_prime and iv.event_prob > 0:
                out.append(
                    Finding(
                        "late-churn",
                        "warning",
                        f"interval [{iv.start}, {iv.end}] extends past "
                        f"k_prime={s.k_prime}; the engine will not fire events "
                        "there, trim the interval",
                    )
                )

    # Topology schedule.
    if isinstance(s.topology, RandomFamilyTopology):
        if s.topology.min_out_degree < 1:
            out.append(
                Finding(
                    "topology-degree",
                    "error",
                    "min_out_degree must be at least 1 or departures can strand",
                )
            )
        out.append(
            Finding(
                "stable-union-connectivity",
                "info",
                "random families are regenerated until their union is strongly "
                "connected, so the post-stabilization connectivity requirement "
                "holds by construction",
            )
        )
    else:
        topo = s.topology
        if len(topo.transient) < s.k_prime:
            out.append(
                Finding(
                    "topology-transient",
                    "error",
                    f"need {s.k_prime} transient instances (one per step before "
                    f"k_prime), got {len(topo.transient)}",
                )
            )
        elif len(topo.transient) > s.k_prime:
            out.append(
                Finding(
                    "topology-transient",
                    "warning",
                    "extra transient instances beyond k_prime are never used",
                )
            )
        stable_nodes = topo.stable[0][0].nodes
        if any(g.nodes != stable_nodes for g, _ in topo.stable):
            out.append(
                Finding(
                    "topology-stable-nodes",
                    "error",
                    "stable instances span different node sets",
                )
            )
        else:
            total = sum(p for _, p in topo.stable)
            if any(p < 0 for _, p in topo.stable) or abs(total - 1.0) > 1e-9:
                out.append(
                    Finding(
                        "topology-probabilities",
                        "error",
                        f"stable probabilities must be >= 0 and sum to 1, sum is {total}",
                    )
                )
            union = union_digraph([g for g, _ in topo.stable])
            if not is_strongly_connected(union):
                out.append(
                    Finding(
                        "stable-union-connectivity",
                        "warning",
                        "the union of stable instances is not strongly connected; "
                        "convergence is not guaranteed",
                    )
                )
        if len(topo.stable) != s.family_size:
            out.append(
                Finding(
                    "family-size",
                    "warning",
                    f"T={s.family_size} but {len(topo.stable)} stable instances "
                    "are listed",
                )
            )
        if isinstance(s.churn, StochasticChurn):
            out.append(
                Finding(
                    "topology-stable-nodes",
                    "warning",
                    "explicit stable instances with stochastic churn: the "
                    "post-stabilization active set is random and may not match",
                )
            )

    # Cross checks that need the deterministic membership walk.
    if history is not None and isinstance(s.topology, ExplicitTopology):
        final_active = history[min(s.k_prime, len(history) - 1)]
        stable_nodes = s.topology.stable[0][0].nodes
        if stable_nodes != final_active:
            out.append(
                Finding(
                    "topology-stable-nodes",
                    "error",
                    f"stable instances cover {sorted(stable_nodes)} but the "
                    f"active set from k_prime on is {sorted(final_active)}",
                )
            )
        assert isinstance(s.churn, ExplicitChurn)
        for event in s.churn.events:
            if not event.departures or not 0 <= event.step <= s.horizon:
                continue
            k = event.step
            active_k = history[k]
            if k < s.k_prime:
                g = s.topology.transient[k].restricted_to(active_k)
            elif len(s.topology.stable) == 1:
                g = s.topology.stable[0][0].restricted_to(active_k)
            else:
                continue  # instance drawn at runtime, cannot check statically
            remaining = active_k - event.departures
            for v in sorted(event.departures):
                if v not in g.nodes:
                    continue
                reachable = {b for a, b in g.edges if a == v} & remaining
                if not reachable:
                    out.append(
                        Finding(
                            "stranded-departure",
                            "warning",
                            f"step {k}: node {v} departs with no remaining "
                            "out-neighbor; its surplus mass will be lost",
                        )
                    )
    elif isinstance(s.churn, StochasticChurn):
        out.append(
            Finding(
                "stranded-departure",
                "info",
                "stochastic churn: the departure condition is checked at runtime",
            )
        )

    return ValidationReport(findings=tuple(out))
