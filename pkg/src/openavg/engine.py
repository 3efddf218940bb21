"""Synchronous round engine.

One step k works on the active set V[k]:

1. resolve membership: who remains, arrives, departs at this boundary
2. draw the directed topology instance for the step
3. record the start-of-step snapshot (mass, snapshots, estimates)
4. departing nodes hand their surplus to one remaining out-neighbor
5. remaining nodes split and route their mass
6. barrier: every remaining node sums what it kept with what arrived
7. arrivals activate with fresh state, effective from the next step

Every random draw is keyed by (seed, subsystem, step, node), so the
iteration order above is a presentation choice, not a semantic one. Two
runs with the same scenario and seed produce identical traces.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from . import rng
from .agent import (
    AgentState,
    MassMessage,
    arrive,
    depart_step,
    init_active,
    receive,
    remaining_step,
)
from .analysis import consensus_error, true_average
from .graphs import (
    DigraphInstance,
    MembershipSets,
    generate_instance_family,
    membership_sets,
    out_neighbors,
)
from .scenario import (
    ChurnEvent,
    ExplicitChurn,
    ExplicitStates,
    ExplicitTopology,
    RandomFamilyTopology,
    Scenario,
    ScenarioValidationError,
    StochasticChurn,
    UniformIntStates,
    validate_scenario,
)


class EngineInvariantError(Exception):
    """Internal consistency breach; indicates a bug, not a bad scenario."""


class NodeVars(NamedTuple):
    """Start-of-step protocol variables of one node."""

    y: int
    z: int
    y_s: int
    z_s: int
    q_s: int


class Violation(NamedTuple):
    node: int
    kind: str


@dataclass(frozen=True)
class RoundRecord:
    """Everything observable about one step, captured before processing."""

    step: int
    active: frozenset[int]
    membership: MembershipSets
    per_node: dict[int, NodeVars]
    q_true: Fraction
    epsilon: int
    excluded: int
    violations: tuple[Violation, ...]


class _FamilyCache:
    """Random-instance families keyed by active set.

    The family for a given node set is derived from the seed and a
    fingerprint of the set, never from when it is first needed, so the
    same membership always sees the same family.
    """

    def __init__(self, scenario: Scenario, seed: int) -> None:
        if not isinstance(scenario.topology, RandomFamilyTopology):
            raise TypeError("family cache needs a random-family topology")
        self._degree = scenario.topology.min_out_degree
        self._count = scenario.family_size
        self._seed = seed
        self._families: dict[frozenset[int], list[DigraphInstance]] = {}

    def family(self, active: frozenset[int]) -> list[DigraphInstance]:
        if active not in self._families:
            fingerprint = rng.node_set_fingerprint(active)
            stream = rng.stream(self._seed, rng.TAG_TOPOLOGY_FAMILY, fingerprint)
            self._families[active] = generate_instance_family(
                active, self._count, self._degree, stream
            )
        return self._families[active]


def _restrict_to(instance: DigraphInstance, active: frozenset[int]) -> DigraphInstance:
    """Induced instance covering exactly the active set (absent nodes are
    dropped, active nodes missing from the instance become isolated)."""
    return DigraphInstance(
        nodes=active,
        edges=frozenset(
            (a, b) for a, b in instance.edges if a in active and b in active
        ),
    )


def draw_topology(
    scenario: Scenario,
    step: int,
    active: frozenset[int],
    seed: int,
    cache: _FamilyCache | None = None,
) -> DigraphInstance:
    """Directed instance in force at ``step`` over the given active set.

    Random-family mode picks one family member uniformly; the family is
    regenerated (from the same seeds) whenever the active set differs.
    Explicit mode uses transient[step] before the stabilization step and
    a probability-weighted stable instance afterwards. The draw for a
    given (seed, step) does not depend on any other step's draw.
    """
    topology = scenario.topology
    if isinstance(topology, RandomFamilyTopology):
        if cache is None:
            cache = _FamilyCache(scenario, seed)
        family = cache.family(active)
        idx = int(rng.stream(seed, rng.TAG_TOPOLOGY_DRAW, step).integers(0, len(family)))
        return family[idx]

    assert isinstance(topology, ExplicitTopology)
    if step < scenario.k_prime:
        return _restrict_to(topology.transient[step], active)
    u = float(rng.stream(seed, rng.TAG_TOPOLOGY_DRAW, step).random())
    cumulative = 0.0
    chosen = topology.stable[-1][0]
    for instance, p in topology.stable:
        cumulative += p
        if u < cumulative:
            chosen = instance
            break
    if chosen.nodes != active:
        raise EngineInvariantError(
            f"step {step}: stable instance covers {sorted(chosen.nodes)} "
            f"but the active set is {sorted(active)}"
        )
    return chosen


def _membership_change(
    scenario: Scenario,
    seed: int,
    step: int,
    active: frozenset[int],
    events_by_step: dict[int, ChurnEvent],
) -> tuple[frozenset[int], frozenset[int]]:
    """(arrivals, departures) taking effect at this step boundary."""
    if isinstance(scenario.churn, ExplicitChurn):
        event = events_by_step.get(step)
        if event is None:
            return frozenset(), frozenset()
        return event.arrivals, event.departures

    if step >= scenario.k_prime:
        return frozenset(), frozenset()
    interval = next(
        (
            iv
            for iv in scenario.churn.intervals
            if iv.start <= step <= iv.end and iv.event_prob > 0
        ),
        None,
    )
    if interval is None:
        return frozenset(), frozenset()
    stream = rng.stream(seed, rng.TAG_CHURN, step)
    if float(stream.random()) >= interval.event_prob:
        return frozenset(), frozenset()
    weight_sum = interval.arrival_weight + interval.departure_weight
    wants_arrival = float(stream.random()) < interval.arrival_weight / weight_sum
    inactive_pool = sorted(frozenset(range(scenario.n_total)) - active)
    # A departure must leave at least one node behind.
    can_arrive = bool(inactive_pool)
    can_depart = len(active) > 1
    if wants_arrival and not can_arrive:
        wants_arrival = False
    elif not wants_arrival and not can_depart:
        wants_arrival = True
    if wants_arrival:
        if not can_arrive:
            return frozenset(), frozenset()
        pick = inactive_pool[int(stream.integers(0, len(inactive_pool)))]
        return frozenset({pick}), frozenset()
    if not can_depart:
        return frozenset(), frozenset()
    active_pool = sorted(active)
    pick = active_pool[int(stream.integers(0, len(active_pool)))]
    return frozenset(), frozenset({pick})


def _initial_value(scenario: Scenario, seed: int, node: int) -> int:
    source = scenario.initial_states
    if isinstance(source, ExplicitStates):
        return source.values[node]
    assert isinstance(source, UniformIntStates)
    return int(
        rng.stream(seed, rng.TAG_INIT_STATE, node).integers(source.low, source.high + 1)
    )


def _arrival_value(scenario: Scenario, seed: int, step: int, node: int) -> int:
    source = scenario.arrival_states
    if source is None:
        raise EngineInvariantError(
            f"step {step}: node {node} arrives but no arrival state source exists"
        )
    if isinstance(source, ExplicitStates):
        return source.values[node]
    assert isinstance(source, UniformIntStates)
    return int(
        rng.stream(seed, rng.TAG_ARRIVAL_STATE, step, node).integers(
            source.low, source.high + 1
        )
    )


def run(scenario: Scenario, seed: int | None = None) -> list[RoundRecord]:
    """Simulate steps 0..horizon and return one record per step.

    Refuses to run scenarios with validation errors; warnings (for
    example a scheduled stranded departure) are allowed because those
    runs are exactly how the failure modes are studied.
    """
    report = validate_scenario(scenario)
    if report.errors():
        raise ScenarioValidationError(report)
    if seed is None:
        seed = scenario.seed

    events_by_step: dict[int, ChurnEvent] = {}
    if isinstance(scenario.churn, ExplicitChurn):
        events_by_step = {e.step: e for e in scenario.churn.events}

    cache = (
        _FamilyCache(scenario, seed)
        if isinstance(scenario.topology, RandomFamilyTopology)
        else None
    )

    states: dict[int, AgentState] = {
        v: init_active(_initial_value(scenario, seed, v))
        for v in sorted(scenario.initially_active)
    }
    active = frozenset(scenario.initially_active)

    records: list[RoundRecord] = []
    for k in range(scenario.horizon + 1):
        arrivals, departures = _membership_change(
            scenario, seed, k, active, events_by_step
        )
        membership = membership_sets(active, (active - departures) | arrivals)
        instance = draw_topology(scenario, k, active, seed, cache)

        snapshot = {
            v: NodeVars(st.y, st.z, st.y_s, st.z_s, st.q_s)
            for v, st in sorted(states.items())
        }
        average = true_average({v: states[v].x for v in active})
        error = consensus_error({v: (states[v].y, states[v].z) for v in active}, average)

        violations: list[Violation] = []
        inbox: dict[int, list[MassMessage]] = {}
        staged: dict[int, AgentState] = {}
        kept: dict[int, tuple[int, int]] = {}

        for v in sorted(membership.departing):
            targets = out_neighbors(instance, v) & membership.remaining
            outcome = depart_step(
                states[v], v, targets, k, rng.stream(seed, rng.TAG_AGENT, k, v)
            )
            if outcome.stranded:
                violations.append(Violation(node=v, kind="stranded_departure"))
            for message in outcome.messages:
                if message.receiver not in membership.remaining:
                    raise EngineInvariantError(
                        f"step {k}: message to non-remaining node {message.receiver}"
                    )
                inbox.setdefault(message.receiver, []).append(message)
            del states[v]

        for v in sorted(membership.remaining):
            targets = out_neighbors(instance, v) & membership.remaining
            outcome = remaining_step(
                states[v], v, targets, k, rng.stream(seed, rng.TAG_AGENT, k, v)
            )
            staged[v] = outcome.state
            kept[v] = (outcome.kept_y, outcome.kept_z)
            for message in outcome.messages:
                if message.receiver not in membership.remaining:
                    raise EngineInvariantError(
                        f"step {k}: message to non-remaining node {message.receiver}"
                    )
                inbox.setdefault(message.receiver, []).append(message)

        for v in sorted(membership.remaining):
            delivered = sorted(inbox.get(v, []), key=lambda m: m.sender)
            states[v] = receive(staged[v], kept[v][0], kept[v][1], delivered)

        for v in sorted(membership.arriving):
            if v in states:
                raise EngineInvariantError(f"step {k}: node {v} arrives while active")
            states[v] = arrive(_arrival_value(scenario, seed, k, v))

        records.append(
            RoundRecord(
                step=k,
                active=active,
                membership=membership,
                per_node=snapshot,
                q_true=average,
                epsilon=error.value,
                excluded=error.excluded,
                violations=tuple(violations),
            )
        )
        active = membership.remaining | membership.arriving
    return records
