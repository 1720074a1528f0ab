"""Exact reference solving, schedules, validation and solution decoding.

The oracle enumerates accepted request sets, set partitions into at most
fleet-size tours and feasible stop orders per tour, pruning partial
orders whose difference-constraint system is already infeasible.  Each
complete tour gets its componentwise-minimal schedule; since lowering
any service-start never hurts window, ride-time or duration slack, that
schedule simultaneously minimizes every per-request dropoff excess, so
scoring it is exact for every supported objective.  The oracle shares no
code with the MILP path beyond the instance data.

Solver assignments (variable name -> value) are decoded back into tours
by walking the selected arcs from the depot; anything that is not a
set of depot-anchored simple cycles is rejected.  The validator checks
decoded or constructed solutions directly against the instance and
reports typed violations instead of raising.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Mapping, Sequence

from .errors import DataError, InfeasibleError, ParseError, SolutionError
from .event_graph import DROPOFF, PICKUP
from .instance import Instance
from .model import (
    MilpModel, ObjectiveSpec, ObjectiveValue, combine_components,
    evaluate_objective,
)

Stop = tuple[int, str]

_TIME_EPS = 1e-9


@dataclass(frozen=True)
class Schedule:
    """Service-start times per tour stop, per-request excess, makespans."""

    times: tuple[tuple[float, ...], ...]
    excess: Mapping[int, float]
    makespans: tuple[float, ...]


@dataclass(frozen=True)
class Solution:
    tours: tuple[tuple[Stop, ...], ...]
    schedule: Schedule
    accepted: frozenset
    objective: ObjectiveValue | None

    @property
    def times(self) -> tuple[tuple[float, ...], ...]:
        return self.schedule.times


@dataclass(frozen=True)
class Violation:
    kind: str              # capacity|pairing|precedence|window|ride_time|duration|fleet
    tour: int | None
    stop: int | None
    magnitude: float
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[Violation, ...]

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}


# ---------------------------------------------------------------------------
# schedules
# ---------------------------------------------------------------------------

def _stop_location(inst: Instance, stop: Stop) -> int:
    req = inst.request(stop[0])
    return req.pickup_loc if stop[1] == PICKUP else req.dropoff_loc


def _stop_window(inst: Instance, stop: Stop) -> tuple[float, float]:
    req = inst.request(stop[0])
    return req.pickup_window if stop[1] == PICKUP else req.dropoff_window


def _tour_times(stops: Sequence[Stop], inst: Instance,
                complete: bool = True) -> list[float] | None:
    """Componentwise-minimal feasible service starts, or None.

    Lower bounds (window starts, depot departure, travel chaining and the
    ride-time limit read backwards as a pickup lower bound) are propagated
    to a fixpoint; one extra sweep still raising means the bound system
    has a positive cycle, i.e. is infeasible.  The feasible region is
    closed under componentwise minima, so the fixpoint is the unique
    minimal schedule whenever it respects all upper bounds.
    """
    m = len(stops)
    if m == 0:
        return []
    e0, l0 = inst.depot_window
    locs = [_stop_location(inst, st) for st in stops]
    wins = [_stop_window(inst, st) for st in stops]
    svc = [inst.request(st[0]).s for st in stops]

    lower = [w[0] for w in wins]
    lower[0] = max(lower[0], e0 + inst.metric.time(inst.depot_loc, locs[0]))
    upper = [w[1] for w in wins]
    if complete:
        upper[-1] = min(
            upper[-1],
            l0 - svc[-1] - inst.metric.time(locs[-1], inst.depot_loc))

    edges: list[tuple[int, int, float]] = []
    for k in range(m - 1):
        edges.append((k, k + 1, svc[k] + inst.metric.time(locs[k], locs[k + 1])))
    pick_at = {}
    for k, (rid, kind) in enumerate(stops):
        if kind == PICKUP:
            pick_at[rid] = k
        elif rid in pick_at:
            req = inst.request(rid)
            edges.append((k, pick_at[rid], -(req.max_ride + req.s)))

    times = list(lower)
    for _ in range(m):
        changed = False
        for src, dst, w in edges:
            cand = times[src] + w
            if cand > times[dst]:
                times[dst] = cand
                changed = True
        if not changed:
            break
    else:
        for src, dst, w in edges:
            if times[src] + w > times[dst]:
                return None    # positive cycle keeps raising bounds
    for k in range(m):
        if times[k] > upper[k] + _TIME_EPS:
            return None
    return times


def _check_structure(stops: Sequence[Stop], inst: Instance):
    """Raise unless the tour pairs, orders and loads its requests validly."""
    state: dict[int, str] = {}
    load = 0
    for rid, kind in stops:
        if kind not in (PICKUP, DROPOFF):
            raise DataError(f"unknown stop kind {kind!r}")
        seen = state.get(rid)
        if kind == PICKUP:
            if seen is not None:
                raise DataError(f"request {rid} picked up twice")
            state[rid] = "on"
            load += inst.request(rid).q
            if load > inst.capacity:
                raise DataError(f"load {load} exceeds capacity after picking up {rid}")
        else:
            if seen != "on":
                raise DataError(f"dropoff of request {rid} without a preceding pickup")
            state[rid] = "off"
            load -= inst.request(rid).q
    riding = [rid for rid, st in state.items() if st == "on"]
    if riding:
        raise DataError(f"requests {riding} are never dropped off")


def _tour_cost(stops: Sequence[Stop], inst: Instance) -> float:
    cost = 0.0
    prev = inst.depot_loc
    for stop in stops:
        loc = _stop_location(inst, stop)
        cost += inst.metric.cost(prev, loc)
        prev = loc
    return cost + inst.metric.cost(prev, inst.depot_loc)


def _tour_makespan(stops: Sequence[Stop], times: Sequence[float],
                   inst: Instance) -> float:
    if not stops:
        return 0.0
    depart = times[0] - inst.metric.time(inst.depot_loc, _stop_location(inst, stops[0]))
    last = inst.request(stops[-1][0])
    ret = times[-1] + last.s + inst.metric.time(_stop_location(inst, stops[-1]),
                                                inst.depot_loc)
    return ret - depart


def minimal_schedule(tour: Sequence[Stop], inst: Instance) -> Schedule | None:
    """Componentwise-minimal schedule of one structurally valid tour."""
    stops = [tuple(st) for st in tour]
    _check_structure(stops, inst)
    times = _tour_times(stops, inst)
    if times is None:
        return None
    excess = {rid: max(0.0, t - inst.request(rid).dropoff_window[0])
              for (rid, kind), t in zip(stops, times) if kind == DROPOFF}
    return Schedule(times=(tuple(times),), excess=excess,
                    makespans=(_tour_makespan(stops, times, inst),))


# ---------------------------------------------------------------------------
# exact oracle
# ---------------------------------------------------------------------------

def _partitions(items: Sequence[int], max_blocks: int):
    """Set partitions into at most max_blocks blocks, canonically ordered."""
    blocks: list[list[int]] = []

    def rec(i):
        if i == len(items):
            yield [tuple(b) for b in blocks]
            return
        for b in blocks:
            b.append(items[i])
            yield from rec(i + 1)
            b.pop()
        if len(blocks) < max_blocks:
            blocks.append([items[i]])
            yield from rec(i + 1)
            blocks.pop()

    yield from rec(0)


def _feasible_orderings(block: Iterable[int], inst: Instance):
    """All time-feasible stop orders of one vehicle serving ``block``."""
    reqs = sorted(block)
    loads = {i: inst.request(i).q for i in reqs}
    results = []
    seq: list[Stop] = []
    onboard: set[int] = set()
    done: set[int] = set()

    def rec(load: int):
        if len(seq) == 2 * len(reqs):
            times = _tour_times(seq, inst)
            if times is not None:
                results.append((tuple(seq), tuple(times)))
            return
        for i in reqs:
            if i in onboard or i in done or load + loads[i] > inst.capacity:
                continue
            seq.append((i, PICKUP))
            onboard.add(i)
            if _tour_times(seq, inst, complete=False) is not None:
                rec(load + loads[i])
            onboard.discard(i)
            seq.pop()
        for i in sorted(onboard):
            seq.append((i, DROPOFF))
            onboard.discard(i)
            done.add(i)
            if _tour_times(seq, inst, complete=False) is not None:
                rec(load - loads[i])
            done.discard(i)
            onboard.add(i)
            seq.pop()

    rec(0)
    return results


def _encoding(tours: Iterable[Sequence[Stop]]):
    return tuple(sorted(
        tuple((rid, 0 if kind == PICKUP else 1) for rid, kind in tour)
        for tour in tours))


def _subsets(ids: Sequence[int]):
    for mask in range(1 << len(ids)):
        yield tuple(i for b, i in enumerate(ids) if mask >> b & 1)


ORACLE_LIMIT = 6


def oracle_solve(inst: Instance, objective: ObjectiveSpec | None = None,
                 allow_denial: bool = False,
                 limit: int = ORACLE_LIMIT) -> Solution:
    """Provably optimal solution by exhaustive enumeration (small n only)."""
    if inst.n > limit:
        raise DataError(
            f"oracle is limited to {limit} requests, instance has {inst.n}")
    obj = (objective or ObjectiveSpec()).resolve(inst.n)
    if obj.needs_denial and not allow_denial:
        raise DataError(
            f"objective {obj.variant!r} prices denied requests; enable allow_denial")
    ids = [r.id for r in inst.requests]
    cache: dict[frozenset, list] = {}

    def orderings(block):
        key = frozenset(block)
        if key not in cache:
            cache[key] = _feasible_orderings(block, inst)
        return cache[key]

    best_key = None
    best = None
    subsets = _subsets(ids) if allow_denial else [tuple(ids)]
    for accepted in subsets:
        denied = inst.n - len(accepted)
        for partition in _partitions(accepted, inst.fleet_size):
            options = [orderings(block) for block in partition]
            if any(not opt for opt in options):
                continue
            for combo in product(*options):
                tours = tuple(seq for seq, _ in combo)
                times = tuple(t for _, t in combo)
                cost = sum(_tour_cost(seq, inst) for seq in tours)
                excess = {}
                for seq, ts in combo:
                    for (rid, kind), t in zip(seq, ts):
                        if kind == DROPOFF:
                            excess[rid] = max(
                                0.0, t - inst.request(rid).dropoff_window[0])
                f_e = sum(excess.values())
                f_emax = max(excess.values(), default=0.0)
                total = combine_components(obj, cost, f_e, f_emax, denied)
                key = (total, _encoding(tours))
                if best_key is None or key < best_key:
                    best_key = key
                    best = (tours, times, cost, f_e, f_emax, denied, excess,
                            frozenset(accepted))
    if best is None:
        raise InfeasibleError("no feasible solution serves every request")
    tours, times, cost, f_e, f_emax, denied, excess, accepted = best
    makespans = tuple(_tour_makespan(seq, ts, inst)
                      for seq, ts in zip(tours, times))
    schedule = Schedule(times=times, excess=excess, makespans=makespans)
    value = ObjectiveValue(total=best_key[0], cost=cost, excess=f_e,
                           max_excess=f_emax, denied=denied)
    return Solution(tours=tours, schedule=schedule, accepted=accepted,
                    objective=value)


def max_acceptance(inst: Instance, limit: int = ORACLE_LIMIT) -> int:
    """Largest number of requests any feasible solution can serve."""
    if inst.n > limit:
        raise DataError(
            f"oracle is limited to {limit} requests, instance has {inst.n}")
    ids = [r.id for r in inst.requests]
    cache: dict[frozenset, bool] = {}

    def block_ok(block):
        key = frozenset(block)
        if key not in cache:
            cache[key] = bool(_feasible_orderings(block, inst))
        return cache[key]

    by_size: dict[int, list] = {}
    for sub in _subsets(ids):
        by_size.setdefault(len(sub), []).append(sub)
    for size in sorted(by_size, reverse=True):
        for sub in by_size[size]:
            for partition in _partitions(sub, inst.fleet_size):
                if all(block_ok(block) for block in partition):
                    return size
    return 0


# ---------------------------------------------------------------------------
# decoding solver assignments
# ---------------------------------------------------------------------------

def import_solution(model: MilpModel, assignment: Mapping[str, float]) -> Solution:
    """Decode a name -> value assignment into tours and validate roundness.

    Selected arcs must form depot-anchored simple cycles; isolated
    cycles, revisited states, fractional binaries and double service are
    rejected.  Times of active states are carried into the schedule
    verbatim, and the objective is recomputed from the decoded tours; a
    mismatch beyond 1e-4 against the assignment's own objective value
    triggers a warning.
    """
    graph = model.graph
    inst = graph.inst

    def value(name: str) -> float:
        if name not in assignment:
            raise SolutionError(f"assignment misses variable {name}")
        return float(assignment[name])

    selected: set[int] = set()
    p_on: set[int] = set()
    for var in model.vars:
        if not var.integer:
            continue
        raw = value(var.name)
        level = round(raw)
        if abs(raw - level) > 1e-6:
            raise SolutionError(f"binary {var.name} has fractional value {raw}")
        if level not in (0, 1):
            raise SolutionError(f"binary {var.name} is out of range: {raw}")
        if level == 1:
            if var.kind == "x":
                selected.add(var.ref)
            else:
                p_on.add(var.ref)

    out_sel: dict[int, list[int]] = {}
    for a in sorted(selected):
        out_sel.setdefault(graph.arcs[a].tail, []).append(a)

    used: set[int] = set()
    tours: list[tuple[Stop, ...]] = []
    times: list[tuple[float, ...]] = []
    for a0 in out_sel.get(graph.depot_node, []):
        stops: list[Stop] = []
        stop_times: list[float] = []
        arc = graph.arcs[a0]
        used.add(a0)
        guard = 0
        while arc.head != graph.depot_node:
            node = graph.nodes[arc.head]
            stops.append((node.request, node.kind))
            stop_times.append(value(f"B_{arc.head}"))
            nexts = [a for a in out_sel.get(arc.head, []) if a not in used]
            if len(nexts) != 1:
                raise SolutionError(
                    f"state {node.label(inst.capacity)} has "
                    f"{len(nexts)} unused outgoing selected arcs, expected 1")
            used.add(nexts[0])
            arc = graph.arcs[nexts[0]]
            guard += 1
            if guard > len(selected) + 1:
                raise SolutionError("selected arcs do not close at the depot")
        tours.append(tuple(stops))
        times.append(tuple(stop_times))
    if used != selected:
        raise SolutionError(
            f"{len(selected) - len(used)} selected arcs form cycles not "
            "anchored at the depot")

    served: dict[int, int] = {}
    for tour in tours:
        for rid, kind in tour:
            if kind == PICKUP:
                served[rid] = served.get(rid, 0) + 1
    for rid, count in served.items():
        if count > 1:
            raise SolutionError(f"request {rid} is served {count} times")
    accepted = frozenset(served)
    if model.allow_denial and accepted != p_on:
        raise SolutionError(
            f"acceptance variables {sorted(p_on)} disagree with served "
            f"requests {sorted(accepted)}")

    excess = {}
    for tour, ts in zip(tours, times):
        for (rid, kind), t in zip(tour, ts):
            if kind == DROPOFF:
                excess[rid] = max(0.0, t - inst.request(rid).dropoff_window[0])
    makespans = tuple(_tour_makespan(tour, ts, inst)
                      for tour, ts in zip(tours, times))
    schedule = Schedule(times=tuple(times), excess=excess, makespans=makespans)
    sol = Solution(tours=tuple(tours), schedule=schedule, accepted=accepted,
                   objective=None)
    value_rec = evaluate_objective(inst, sol, model.objective)
    sol = Solution(tours=sol.tours, schedule=schedule, accepted=accepted,
                   objective=value_rec)
    try:
        claimed = model.objective_value(assignment)
    except KeyError:
        claimed = None
    if claimed is not None and abs(claimed - value_rec.total) > 1e-4:
        warnings.warn(
            f"assignment objective {claimed} deviates from recomputed "
            f"{value_rec.total}", stacklevel=2)
    return sol


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def validate_solution(inst: Instance, sol: Solution,
                      tol: float = 1e-6) -> ValidationReport:
    """Check a solution directly against the instance semantics."""
    found: list[Violation] = []

    def flag(kind, tour, stop, magnitude, detail):
        found.append(Violation(kind, tour, stop, magnitude, detail))

    if len(sol.tours) > inst.fleet_size:
        flag("fleet", None, None, float(len(sol.tours) - inst.fleet_size),
             f"{len(sol.tours)} tours exceed the fleet of {inst.fleet_size}")

    seen_tour: dict[int, int] = {}
    for t, tour in enumerate(sol.tours):
        for rid, kind in tour:
            if kind == PICKUP:
                if rid in seen_tour and seen_tour[rid] != t:
                    flag("pairing", t, None, 1.0,
                         f"request {rid} appears in tours {seen_tour[rid]} and {t}")
                seen_tour.setdefault(rid, t)

    e0, l0 = inst.depot_window
    for t, (tour, ts) in enumerate(zip(sol.tours, sol.times)):
        if len(ts) != len(tour):
            flag("pairing", t, None, float(abs(len(ts) - len(tour))),
                 "schedule length disagrees with the stop list")
            continue
        state: dict[int, str] = {}
        load = 0
        pick_time: dict[int, float] = {}
        for k, ((rid, kind), when) in enumerate(zip(tour, ts)):
            req = inst.request(rid)
            if kind == PICKUP:
                if state.get(rid) is not None:
                    flag("pairing", t, k, 1.0, f"request {rid} picked up twice")
                state[rid] = "on"
                load += req.q
                if load > inst.capacity:
                    flag("capacity", t, k, float(load - inst.capacity),
                         f"load {load} exceeds capacity {inst.capacity}")
                pick_time[rid] = when
            else:
                prior = state.get(rid)
                if prior == "off":
                    flag("pairing", t, k, 1.0, f"request {rid} dropped off twice")
                elif prior is None:
                    flag("precedence", t, k, 1.0,
                         f"dropoff of {rid} precedes its pickup")
                else:
                    load -= req.q
                    ride = when - pick_time[rid] - req.s
                    if ride > req.max_ride + tol:
                        flag("ride_time", t, k, ride - req.max_ride,
                             f"request {rid} rides {ride:.3f}, limit {req.max_ride:.3f}")
                state[rid] = "off"
            e, l = _stop_window(inst, (rid, kind))
            if when < e - tol:
                flag("window", t, k, e - when,
                     f"stop starts {e - when:.3f} before its window")
            elif when > l + tol:
                flag("window", t, k, when - l,
                     f"stop starts {when - l:.3f} after its window")
        dangling = [rid for rid, st in state.items() if st == "on"]
        for rid in dangling:
            flag("pairing", t, None, 1.0, f"request {rid} is never dropped off")
        # consecutive stops must respect service plus travel separation
        for k in range(len(tour) - 1):
            a, b = tour[k], tour[k + 1]
            gap = inst.request(a[0]).s + inst.metric.time(
                _stop_location(inst, a), _stop_location(inst, b))
            short = ts[k] + gap - ts[k + 1]
            if short > tol:
                flag("precedence", t, k + 1, short,
                     f"stop starts {short:.3f} too early for travel and service")
        if tour:
            depart = ts[0] - inst.metric.time(inst.depot_loc,
                                              _stop_location(inst, tour[0]))
            if depart < e0 - tol:
                flag("duration", t, 0, e0 - depart,
                     f"tour departs {e0 - depart:.3f} before the depot opens")
            last = inst.request(tour[-1][0])
            ret = ts[-1] + last.s + inst.metric.time(
                _stop_location(inst, tour[-1]), inst.depot_loc)
            if ret > l0 + tol:
                flag("duration", t, len(tour) - 1, ret - l0,
                     f"tour returns {ret - l0:.3f} after the depot closes")
    return ValidationReport(ok=not found, violations=tuple(found))


# ---------------------------------------------------------------------------
# solution JSON
# ---------------------------------------------------------------------------

def solution_to_json(sol: Solution) -> str:
    doc = {
        "tours": [
            [{"request": rid, "kind": kind, "time": when}
             for (rid, kind), when in zip(tour, ts)]
            for tour, ts in zip(sol.tours, sol.times)
        ],
        "accepted": sorted(sol.accepted),
        "objective": sol.objective.as_json_dict(),
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def solution_from_json(text: str, inst: Instance) -> Solution:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    try:
        tours = []
        times = []
        for tour in doc["tours"]:
            tours.append(tuple((int(st["request"]), str(st["kind"])) for st in tour))
            times.append(tuple(float(st["time"]) for st in tour))
        accepted = frozenset(int(i) for i in doc["accepted"])
        objective = ObjectiveValue(
            total=float(doc["objective"]["total"]),
            cost=float(doc["objective"]["f_c"]),
            excess=float(doc["objective"]["f_e"]),
            max_excess=float(doc["objective"]["f_emax"]),
            denied=int(doc["objective"]["f_n"]))
    except (KeyError, TypeError) as exc:
        raise ParseError(f"solution JSON is missing or mistypes a field: {exc}") from None
    excess = {}
    for tour, ts in zip(tours, times):
        for (rid, kind), t in zip(tour, ts):
            if kind == DROPOFF:
                excess[rid] = max(0.0, t - inst.request(rid).dropoff_window[0])
    makespans = tuple(_tour_makespan(tour, ts, inst)
                      for tour, ts in zip(tours, times))
    schedule = Schedule(times=tuple(times), excess=excess, makespans=makespans)
    return Solution(tours=tuple(tours), schedule=schedule, accepted=accepted,
                    objective=objective)
