"""Directed-graph primitives for open multi-agent networks.

The network is "open": the node set changes over time as agents arrive
and depart, and the directed link set changes every step. A graph here
is always a snapshot covering one time step. Membership changes between
consecutive steps are summarized by three disjoint sets (remaining,
arriving, departing), which is what the per-node protocol logic keys on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

NodeId = int


@dataclass(frozen=True, slots=True)
class DigraphInstance:
    """One directed-graph snapshot: a node set plus (tail, head) edges.

    Self-loops are implicit everywhere in the protocol (an agent can
    always keep mass), so they are never stored; constructing an
    instance with an explicit self-loop is a bug upstream.
    """

    nodes: frozenset[NodeId]
    edges: frozenset[tuple[NodeId, NodeId]]

    def __post_init__(self) -> None:
        for tail, head in self.edges:
            if tail == head:
                raise ValueError(f"self-loop ({tail},{head}) must not be stored")
            if tail not in self.nodes or head not in self.nodes:
                raise ValueError(f"edge ({tail},{head}) leaves the node set")

    def restricted_to(self, active: frozenset[NodeId]) -> "DigraphInstance":
        """Induced subgraph on ``active`` (drops edges touching other nodes)."""
        keep = self.nodes & active
        return DigraphInstance(
            nodes=keep,
            edges=frozenset((a, b) for a, b in self.edges if a in keep and b in keep),
        )


@dataclass(frozen=True, slots=True)
class MembershipSets:
    """Partition of nodes relevant at one step boundary.

    remaining: active now and still active next step
    arriving:  inactive now, active next step
    departing: active now, inactive next step
    """

    remaining: frozenset[NodeId]
    arriving: frozenset[NodeId]
    departing: frozenset[NodeId]


def membership_sets(
    active_now: frozenset[NodeId], active_next: frozenset[NodeId]
) -> MembershipSets:
    """Classify nodes by their activity across one step boundary."""
    return MembershipSets(
        remaining=active_now & active_next,
        arriving=active_next - active_now,
        departing=active_now - active_next,
    )


def out_neighbors(g: DigraphInstance, v: NodeId) -> frozenset[NodeId]:
    """Heads of edges leaving ``v``. ``v`` itself is never included."""
    if v not in g.nodes:
        raise KeyError(f"node {v} not in instance")
    return frozenset(b for a, b in g.edges if a == v)


def remaining_out_neighbors(
    g: DigraphInstance, v: NodeId, membership: MembershipSets
) -> frozenset[NodeId]:
    """Out-neighbors of ``v`` that remain active through the step.

    These are the only legal message targets: mass sent to a departing
    or absent node would leave the system.
    """
    return out_neighbors(g, v) & membership.remaining


def union_digraph(instances: Iterable[DigraphInstance]) -> DigraphInstance:
    """Union of edge sets over a family of instances on one node set."""
    instances = list(instances)
    if not instances:
        raise ValueError("empty instance family")
    nodes = instances[0].nodes
    for g in instances[1:]:
        if g.nodes != nodes:
            raise ValueError("instances span different node sets")
    edges: set[tuple[NodeId, NodeId]] = set()
    for g in instances:
        edges |= g.edges
    return DigraphInstance(nodes=nodes, edges=frozenset(edges))


def strongly_connected_components(g: DigraphInstance) -> list[frozenset[NodeId]]:
    """Tarjan's algorithm, iterative so deep graphs cannot blow the stack.

    Components come back in reverse topological order of the condensation;
    callers that only care about counts can ignore that.
    """
    adjacency: dict[NodeId, list[NodeId]] = {v: [] for v in g.nodes}
    for a, b in sorted(g.edges):
        adjacency[a].append(b)

    index_of: dict[NodeId, int] = {}
    lowlink: dict[NodeId, int] = {}
    on_stack: set[NodeId] = set()
    stack: list[NodeId] = []
    components: list[frozenset[NodeId]] = []
    counter = 0

    for root in sorted(g.nodes):
        if root in index_of:
            continue
        # Each frame is (node, iterator over its successors).
        work: list[tuple[NodeId, Iterator[NodeId]]] = [(root, iter(adjacency[root]))]
        index_of[root] = lowlink[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, successors = work[-1]
            advanced = False
            for w in successors:
                if w not in index_of:
                    index_of[w] = lowlink[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(adjacency[w])))
                    advanced = True
                    break
                if w in on_stack:
                    lowlink[v] = min(lowlink[v], index_of[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[v])
            if lowlink[v] == index_of[v]:
                component: set[NodeId] = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    component.add(w)
                    if w == v:
                        break
                components.append(frozenset(component))
    return components


def is_strongly_connected(g: DigraphInstance) -> bool:
    """True when every node reaches every other along directed paths."""
    if not g.nodes:
        raise ValueError("connectivity of the empty graph is undefined")
    if len(g.nodes) == 1:
        return True
    return len(strongly_connected_components(g)) == 1


def random_out_degree_instance(
    nodes: Iterable[NodeId], min_out_degree: int, rng: np.random.Generator
) -> DigraphInstance:
    """Draw an instance where every node gets ``min_out_degree`` distinct
    out-neighbors chosen uniformly without replacement (capped at n-1).
    """
    ordered = sorted(set(nodes))
    if not ordered:
        raise ValueError("need at least one node")
    edges: set[tuple[NodeId, NodeId]] = set()
    for v in ordered:
        others = [u for u in ordered if u != v]
        take = min(min_out_degree, len(others))
        if take <= 0:
            continue
        picks = rng.choice(len(others), size=take, replace=False)
        for i in picks:
            edges.add((v, others[int(i)]))
    return DigraphInstance(nodes=frozenset(ordered), edges=frozenset(edges))


def directed_cycle(nodes: Iterable[NodeId]) -> DigraphInstance:
    """Single directed ring over the sorted node sequence."""
    ordered = sorted(set(nodes))
    if len(ordered) < 2:
        return DigraphInstance(nodes=frozenset(ordered), edges=frozenset())
    edges = {
        (ordered[i], ordered[(i + 1) % len(ordered)]) for i in range(len(ordered))
    }
    return DigraphInstance(nodes=frozenset(ordered), edges=frozenset(edges))


def generate_instance_family(
    nodes: Iterable[NodeId],
    count: int,
    min_out_degree: int,
    rng: np.random.Generator,
    max_attempts: int = 64,
) -> list[DigraphInstance]:
    """Draw ``count`` random instances whose union is strongly connected.

    Redraws the whole family up to ``max_attempts`` times; if every
    attempt fails (tiny degree on a large node set can do that) the last
    family is patched by overlaying a directed ring on its final member,
    which makes the union strongly connected by construction.
    """
    ordered = sorted(set(nodes))
    if count < 1:
        raise ValueError("family needs at least one instance")
    if max_attempts < 1:
        raise ValueError("need at least one attempt")
    family: list[DigraphInstance] = []
    for _ in range(max_attempts):
        family = [
            random_out_degree_instance(ordered, min_out_degree, rng)
            for _ in range(count)
        ]
        if is_strongly_connected(union_digraph(family)):
            return family
    ring = directed_cycle(ordered)
    family[-1] = DigraphInstance(
        nodes=family[-1].nodes, edges=family[-1].edges | ring.edges
    )
    return family
