"""Event-based graph over a dial-a-ride instance.

Instead of locations, nodes describe vehicle states: the most recent
pickup or dropoff event together with the set of other requests on
board.  A node is a capacity-length tuple whose first component is the
event (request id plus pickup/dropoff marker) and whose remaining
components list the other onboard requests in decreasing id order,
padded with zeros.  States whose seat total (the event's own request
counts for both event kinds, since a request being dropped off was
still on board on arrival) exceeds the capacity are not generated, so
capacity never needs explicit constraints downstream.

Arcs connect states that can follow each other directly and fall into
six classes: pickup followed by a dropoff, pickup followed by a pickup,
dropoff followed by a pickup, dropoff followed by a dropoff, return of
the empty vehicle to the depot, and departure of the empty vehicle to a
first pickup.  Every arc carries the travel cost and travel time of the
corresponding location pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DataError
from .instance import Instance

DEPOT = "depot"
PICKUP = "pickup"
DROPOFF = "dropoff"

PICKUP_DROPOFF = 1
PICKUP_PICKUP = 2
DROPOFF_PICKUP = 3
DROPOFF_DROPOFF = 4
RETURN_DEPOT = 5
LEAVE_DEPOT = 6

CLASS_NAMES = {
    PICKUP_DROPOFF: "pickup_dropoff",
    PICKUP_PICKUP: "pickup_pickup",
    DROPOFF_PICKUP: "dropoff_pickup",
    DROPOFF_DROPOFF: "dropoff_dropoff",
    RETURN_DEPOT: "return_depot",
    LEAVE_DEPOT: "leave_depot",
}


@dataclass(frozen=True)
class EventNode:
    """Vehicle state: last service event plus other requests on board.

    ``others`` lists the remaining onboard request ids in decreasing
    order without zero padding; :meth:`as_tuple` gives the padded form.
    """

    kind: str
    request: int
    others: tuple[int, ...]

    def as_tuple(self, capacity: int) -> tuple:
        if self.kind == DEPOT:
            first = "0"
        else:
            first = f"{self.request}{'+' if self.kind == PICKUP else '-'}"
        padding = (0,) * (capacity - 1 - len(self.others))
        return (first, *self.others, *padding)

    def label(self, capacity: int) -> str:
        return "(" + ",".join(str(c) for c in self.as_tuple(capacity)) + ")"


@dataclass(frozen=True)
class EventArc:
    tail: int
    head: int
    cls: int
    cost: float
    time: float


class EventGraph:
    """The full event graph with adjacency and per-class bookkeeping."""

    def __init__(self, inst: Instance, nodes, locations, arcs):
        self.inst = inst
        self.nodes: tuple[EventNode, ...] = tuple(nodes)
        self.locations: tuple[int, ...] = tuple(locations)
        self.arcs: tuple[EventArc, ...] = tuple(arcs)
        self.depot_node = 0
        self.node_index = {node: v for v, node in enumerate(self.nodes)}
        n = inst.n
        self.pickup_nodes = {i: [] for i in range(1, n + 1)}
        self.dropoff_nodes = {i: [] for i in range(1, n + 1)}
        for v, node in enumerate(self.nodes):
            if node.kind == PICKUP:
                self.pickup_nodes[node.request].append(v)
            elif node.kind == DROPOFF:
                self.dropoff_nodes[node.request].append(v)
        self.in_arcs = [[] for _ in self.nodes]
        self.out_arcs = [[] for _ in self.nodes]
        for a, arc in enumerate(self.arcs):
            self.out_arcs[arc.tail].append(a)
            self.in_arcs[arc.head].append(a)
        self.class_counts = {c: 0 for c in CLASS_NAMES}
        for arc in self.arcs:
            self.class_counts[arc.cls] += 1

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def arc_count(self) -> int:
        return len(self.arcs)


def _co_rider_sets(others: list[int], loads: dict[int, int], budget: int,
                   max_size: int) -> list[tuple[int, ...]]:
    """All subsets of ``others`` with load sum <= budget, as decreasing tuples."""
    found = [()]
    chosen: list[int] = []

    def grow(start: int, slack: int):
        for pos in range(start, len(others)):
            j = others[pos]
            if loads[j] <= slack and len(chosen) < max_size:
                chosen.append(j)
                found.append(tuple(sorted(chosen, reverse=True)))
                grow(pos + 1, slack - loads[j])
                chosen.pop()

    grow(0, budget)
    return found


def build_event_graph(inst: Instance) -> EventGraph:
    """Build the event graph for a tightened instance.

    Node order is deterministic: the depot first, then nodes sorted by
    (event location, onboard tuple); arcs are sorted by (tail, head).
    Rebuilding from an equal instance reproduces identical ids, which
    keeps exported model files and solution imports stable.
    """
    for req in inst.requests:
        if req.direction is None:
            raise DataError("instance must be tightened before building the graph")
    n = inst.n
    cap = inst.capacity
    loads = {r.id: r.q for r in inst.requests}
    ids = sorted(loads)

    co_riders = {
        i: _co_rider_sets([j for j in ids if j != i], loads, cap - loads[i], cap - 1)
        for i in ids
    }

    nodes = [EventNode(DEPOT, 0, ())]
    locations = [inst.depot_loc]
    for loc in range(1, 2 * n + 1):
        if loc <= n:
            kind, i = PICKUP, loc
        else:
            kind, i = DROPOFF, loc - n
        for others in sorted(co_riders[i]):
            nodes.append(EventNode(kind, i, others))
            locations.append(loc)
    index = {node: v for v, node in enumerate(nodes)}

    raw: list[tuple[int, int, int]] = []
    for i in ids:
        raw.append((0, index[EventNode(PICKUP, i, ())], LEAVE_DEPOT))
        raw.append((index[EventNode(DROPOFF, i, ())], 0, RETURN_DEPOT))
    for v, node in enumerate(nodes):
        if node.kind == PICKUP:
            onboard = set(node.others) | {node.request}
            # pickup -> dropoff of anyone on board
            for j in sorted(onboard):
                rest = tuple(sorted(onboard - {j}, reverse=True))
                raw.append((v, index[EventNode(DROPOFF, j, rest)], PICKUP_DROPOFF))
            # pickup -> pickup of a further request, capacity permitting
            grown = tuple(sorted(onboard, reverse=True))
            for j in ids:
                if j in onboard:
                    continue
                w = index.get(EventNode(PICKUP, j, grown))
                if w is not None:
                    raw.append((v, w, PICKUP_PICKUP))
        elif node.kind == DROPOFF:
            # dropoff -> pickup with the same residual load
            for j in ids:
                if j == node.request or j in node.others:
                    continue
                w = index.get(EventNode(PICKUP, j, node.others))
                if w is not None:
                    raw.append((v, w, DROPOFF_PICKUP))
            # dropoff -> dropoff of anyone still on board
            remaining = set(node.others)
            for j in sorted(remaining):
                rest = tuple(sorted(remaining - {j}, reverse=True))
                raw.append((v, index[EventNode(DROPOFF, j, rest)], DROPOFF_DROPOFF))

    raw.sort(key=lambda a: (a[0], a[1]))
    arcs = []
    for tail, head, cls in raw:
        cost = inst.metric.cost(locations[tail], locations[head])
        time = inst.metric.time(locations[tail], locations[head])
        arcs.append(EventArc(tail, head, cls, cost, time))
    return EventGraph(inst, nodes, locations, arcs)


def node_count_closed_form(n: int, capacity: int) -> int:
    """Number of event nodes when every request demands one seat."""
    if n < 1 or capacity < 1:
        raise DataError("need n >= 1 and capacity >= 1")
    return 1 + 2 * n * sum(math.comb(n - 1, j) for j in range(capacity))


def arc_count_closed_form(n: int, capacity: int) -> int:
    """Number of event arcs when every request demands one seat."""
    if n < 1 or capacity < 1:
        raise DataError("need n >= 1 and capacity >= 1")
    q = capacity
    total = 2 * n
    total += n * sum(math.comb(n - 1, j) * (j + 1) for j in range(q))
    if n >= 2:
        total += 3 * n * (n - 1) * sum(math.comb(n - 2, j) for j in range(q - 1))
    prod = 1
    for k in range(q + 1):
        prod *= n - k
    total += max(prod, 0) // math.factorial(q - 1)
    return total


def graph_stats(g: EventGraph) -> dict:
    """Summary statistics; includes closed-form counts for unit loads."""
    stats = {
        "instance": g.inst.name,
        "requests": g.inst.n,
        "capacity": g.inst.capacity,
        "nodes": g.node_count,
        "arcs": g.arc_count,
        "arc_classes": {CLASS_NAMES[c]: g.class_counts[c] for c in sorted(CLASS_NAMES)},
    }
    if all(r.q == 1 for r in g.inst.requests):
        stats["closed_form"] = {
            "nodes": node_count_closed_form(g.inst.n, g.inst.capacity),
            "arcs": arc_count_closed_form(g.inst.n, g.inst.capacity),
        }
    return stats


def to_dot(g: EventGraph) -> str:
    """Graphviz rendering with padded state labels and arc class names."""
    cap = g.inst.capacity
    lines = ["digraph events {", "  rankdir=LR;"]
    for v, node in enumerate(g.nodes):
        shape = "doublecircle" if node.kind == DEPOT else "ellipse"
        lines.append(f'  n{v} [label="{node.label(cap)}" shape={shape}];')
    for arc in g.arcs:
        lines.append(
            f'  n{arc.tail} -> n{arc.head} [label="{CLASS_NAMES[arc.cls]}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
