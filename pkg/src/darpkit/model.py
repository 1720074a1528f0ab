"""Solver-neutral mixed-integer models over the event graph.

Arc activation variables select a set of depot-anchored closed walks
(one per used vehicle); flow conservation at every state node plus one
service row per request make them tours that serve each request exactly
once.  Service-start times live on the state nodes.  Two formulation
variants differ in how times and activation interact:

* ``model2``: every node's time is boxed by its location window, and
  for each request every pickup-node/dropoff-node pair is coupled by a
  big-M ride-time row that relaxes unless both nodes are active.
* ``model3``: times are boxed by activation-dependent window rows (an
  inactive pickup node is pushed to its window end, an inactive dropoff
  node may stay at its window start), which makes the plain ride-time
  row valid for every pair without big-M terms.

Both variants link consecutive times along each travel arc with big-M
rows, and tie tour starts and ends to the depot window through per-arc
rows on the depot connections (the single depot time variable carries
only its own window).

Objectives: routing cost, total dropoff excess, maximal dropoff excess,
and weighted combinations, optionally with per-request acceptance
variables so requests may be denied against a penalty.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING

from .errors import DataError
from .event_graph import (
    DEPOT, DROPOFF, PICKUP,
    DROPOFF_DROPOFF, DROPOFF_PICKUP, LEAVE_DEPOT, PICKUP_DROPOFF,
    PICKUP_PICKUP, RETURN_DEPOT,
    EventGraph,
)
from .instance import INBOUND, Instance

if TYPE_CHECKING:  # pragma: no cover
    from .solve import Solution

MODEL2 = "model2"
MODEL3 = "model3"
VARIANTS = (MODEL2, MODEL3)

OBJECTIVES = (
    "cost",
    "excess",
    "max_excess",
    "cost_excess",
    "cost_max_excess",
    "request_cost_excess",
)

_TRAVEL_CLASSES = (PICKUP_DROPOFF, PICKUP_PICKUP, DROPOFF_PICKUP, DROPOFF_DROPOFF)


@dataclass(frozen=True)
class ObjectiveSpec:
    """Objective selection plus weights; unset weights get defaults.

    ``alpha`` weighs total excess against routing cost, ``beta`` the
    maximal excess (default grows with the instance, 3n/5) and ``gamma``
    the number of denied requests.
    """

    variant: str = "cost"
    alpha: float | None = None
    beta: float | None = None
    gamma: float | None = None

    def __post_init__(self):
        if self.variant not in OBJECTIVES:
            raise DataError(f"unknown objective {self.variant!r}")

    def resolve(self, n: int) -> "ObjectiveSpec":
        """Fill in default weights for an instance with n requests."""
        alpha = 3.0 if self.alpha is None else self.alpha
        beta = 3.0 * n / 5.0 if self.beta is None else self.beta
        gamma = 60.0 if self.gamma is None else self.gamma
        out = replace(self, alpha=alpha, beta=beta, gamma=gamma)
        needed = []
        if out.variant in ("cost_excess", "request_cost_excess"):
            needed.append(("alpha", out.alpha))
        if out.variant == "cost_max_excess":
            needed.append(("beta", out.beta))
        if out.variant == "request_cost_excess":
            needed.append(("gamma", out.gamma))
        for name, value in needed:
            if value <= 0:
                raise DataError(f"objective weight {name} must be positive")
        return out

    @property
    def needs_excess(self) -> bool:
        return self.variant in (
            "excess", "max_excess", "cost_excess", "cost_max_excess",
            "request_cost_excess")

    @property
    def needs_max_excess(self) -> bool:
        return self.variant in ("max_excess", "cost_max_excess")

    @property
    def needs_denial(self) -> bool:
        return self.variant == "request_cost_excess"


@dataclass(frozen=True)
class ObjectiveValue:
    """Objective total plus its components."""

    total: float
    cost: float
    excess: float
    max_excess: float
    denied: int

    def as_json_dict(self) -> dict:
        return {
            "total": self.total,
            "f_c": self.cost,
            "f_e": self.excess,
            "f_emax": self.max_excess,
            "f_n": self.denied,
        }


@dataclass(frozen=True)
class BigM:
    """Big-M coefficients, each at its exact lower bound (floored at 0).

    ``ride[i]`` relaxes the ride-time row of request i when one of the
    coupled nodes is inactive; ``link[a]`` relaxes the travel-time row
    of arc a when the arc is not used.
    """

    ride: dict[int, float]
    link: dict[int, float]


def _node_window(graph: EventGraph, v: int) -> tuple[float, float]:
    node = graph.nodes[v]
    if node.kind == DEPOT:
        return graph.inst.depot_window
    req = graph.inst.request(node.request)
    return req.pickup_window if node.kind == PICKUP else req.dropoff_window


def _node_service(graph: EventGraph, v: int) -> float:
    node = graph.nodes[v]
    if node.kind == DEPOT:
        return 0.0
    return graph.inst.request(node.request).s


def compute_big_m(graph: EventGraph) -> BigM:
    """Exact big-M values from windows, services and arc travel times."""
    ride = {}
    for req in graph.inst.requests:
        ride[req.id] = max(
            0.0,
            req.dropoff_window[1] - req.pickup_window[0] - req.max_ride - req.s)
    link = {}
    for a, arc in enumerate(graph.arcs):
        l_tail = _node_window(graph, arc.tail)[1]
        e_head = _node_window(graph, arc.head)[0]
        link[a] = max(0.0, l_tail - e_head + _node_service(graph, arc.tail) + arc.time)
    return BigM(ride=ride, link=link)


@dataclass
class Var:
    name: str
    kind: str          # x | p | B | d | dmax
    ref: int           # arc, request or node id; -1 for dmax
    lb: float
    ub: float
    integer: bool


@dataclass
class Row:
    name: str
    sense: str         # E | L | G
    rhs: float
    terms: list        # [(var index, coefficient)]


class MilpModel:
    """A fully assembled model: variables, rows, objective, bookkeeping."""

    def __init__(self, graph: EventGraph, variant: str, objective: ObjectiveSpec,
                 allow_denial: bool):
        self.graph = graph
        self.variant = variant
        self.objective = objective
        self.allow_denial = allow_denial
        self.name = f"{graph.inst.name}.{variant}.{objective.variant}"
        self.vars: list[Var] = []
        self.var_index: dict[str, int] = {}
        self.rows: list[Row] = []
        self.obj_terms: list = []
        self.obj_constant = 0.0
        self.big_m: BigM | None = None
        self.census: dict = {}

    def add_var(self, name, kind, ref, lb, ub, integer) -> int:
        idx = len(self.vars)
        self.vars.append(Var(name, kind, ref, lb, ub, integer))
        self.var_index[name] = idx
        return idx

    def add_row(self, name, sense, rhs, terms):
        self.rows.append(Row(name, sense, rhs, terms))

    def objective_value(self, values: dict[str, float]) -> float:
        """Evaluate the objective expression on a name -> value map."""
        total = self.obj_constant
        for idx, coef in self.obj_terms:
            total += coef * values[self.vars[idx].name]
        return total


def build_model(graph: EventGraph, variant: str,
                objective: ObjectiveSpec | None = None,
                allow_denial: bool = False) -> MilpModel:
    """Assemble the chosen formulation over a built event graph."""
    if variant not in VARIANTS:
        raise DataError(f"unknown model variant {variant!r}")
    inst = graph.inst
    n = inst.n
    obj = (objective or ObjectiveSpec()).resolve(n)
    if obj.needs_denial and not allow_denial:
        raise DataError(
            f"objective {obj.variant!r} prices denied requests; enable allow_denial")
    if allow_denial and not obj.needs_denial:
        warnings.warn(
            f"objective {obj.variant!r} does not penalize denied requests; "
            "denying everything is optimal", stacklevel=2)

    model = MilpModel(graph, variant, obj, allow_denial)
    m = compute_big_m(graph)
    model.big_m = m

    # variables; integer block first so the MPS writer emits one marker pair
    x = [model.add_var(f"x_{a}", "x", a, 0.0, 1.0, True)
         for a in range(graph.arc_count)]
    p = {}
    if allow_denial:
        p = {r.id: model.add_var(f"p_{r.id}", "p", r.id, 0.0, 1.0, True)
             for r in inst.requests}
    B = []
    for v in range(graph.node_count):
        e, l = _node_window(graph, v)
        if variant == MODEL2 or graph.nodes[v].kind == DEPOT:
            lb, ub = e, l
        elif graph.nodes[v].kind == PICKUP:
            lb, ub = 0.0, l
        else:
            lb, ub = e, math.inf
        B.append(model.add_var(f"B_{v}", "B", v, lb, ub, False))
    d = {}
    dmax = None
    if obj.needs_excess:
        d = {r.id: model.add_var(f"d_{r.id}", "d", r.id, 0.0, math.inf, False)
             for r in inst.requests}
    if obj.needs_max_excess:
        dmax = model.add_var("dmax", "dmax", -1, 0.0, math.inf, False)

    # flow conservation at every state node, depot included
    for v in range(graph.node_count):
        terms = [(x[a], 1.0) for a in graph.in_arcs[v]]
        terms += [(x[a], -1.0) for a in graph.out_arcs[v]]
        model.add_row(f"flow_{v}", "E", 0.0, terms)

    # each request is served exactly once (or acceptance decides)
    for req in inst.requests:
        terms = [(x[a], 1.0)
                 for v in graph.pickup_nodes[req.id]
                 for a in graph.in_arcs[v]]
        if allow_denial:
            model.add_row(f"serve_{req.id}", "E", 0.0, terms + [(p[req.id], -1.0)])
        else:
            model.add_row(f"serve_{req.id}", "E", 1.0, terms)

    # at most |K| vehicles leave the depot
    model.add_row("fleet", "L", float(inst.fleet_size),
                  [(x[a], 1.0) for a in graph.out_arcs[graph.depot_node]])

    # consecutive times along a used travel arc:  B_head >= B_tail + s + t
    n_travel = 0
    for a, arc in enumerate(graph.arcs):
        if arc.cls not in _TRAVEL_CLASSES:
            continue
        n_travel += 1
        mm = m.link[a]
        s_tail = _node_service(graph, arc.tail)
        model.add_row(
            f"tt_{a}", "L", mm - s_tail - arc.time,
            [(B[arc.tail], 1.0), (B[arc.head], -1.0), (x[a], mm)])

    # tours start no earlier than the depot opens and end before it closes
    for a, arc in enumerate(graph.arcs):
        e0, l0 = inst.depot_window
        if arc.cls == LEAVE_DEPOT:
            model.add_row(
                f"dep_{a}", "G", e0 + arc.time - m.link[a],
                [(B[arc.head], 1.0), (x[a], -m.link[a])])
        elif arc.cls == RETURN_DEPOT:
            s_tail = _node_service(graph, arc.tail)
            model.add_row(
                f"ret_{a}", "L", l0 - s_tail - arc.time + m.link[a],
                [(B[arc.tail], 1.0), (x[a], m.link[a])])

    # ride-time coupling of every pickup/dropoff state pair per request
    n_ride = 0
    for req in inst.requests:
        mi = m.ride[req.id]
        limit = req.max_ride + req.s
        for v in graph.pickup_nodes[req.id]:
            in_v = [(x[a], mi) for a in graph.in_arcs[v]]
            for w in graph.dropoff_nodes[req.id]:
                n_ride += 1
                if variant == MODEL2:
                    terms = [(B[w], 1.0), (B[v], -1.0)]
                    terms += in_v
                    terms += [(x[a], mi) for a in graph.in_arcs[w]]
                    model.add_row(f"ride_{req.id}_{v}_{w}", "L",
                                  limit + 2.0 * mi, terms)
                else:
                    model.add_row(f"ride_{req.id}_{v}_{w}", "L", limit,
                                  [(B[w], 1.0), (B[v], -1.0)])

    # activation-dependent windows; the width of the user-specified
    # window relaxes the bound for inactive nodes
    n_window = 0
    if variant == MODEL3:
        for req in inst.requests:
            if req.direction == INBOUND:
                width = req.pickup_window[1] - req.pickup_window[0]
            else:
                width = req.dropoff_window[1] - req.dropoff_window[0]
            ep = req.pickup_window[0]
            for v in graph.pickup_nodes[req.id]:
                n_window += 1
                terms = [(B[v], 1.0)] + [(x[a], width) for a in graph.in_arcs[v]]
                model.add_row(f"wlo_{v}", "G", ep + width, terms)
            cap = ep + req.max_ride + req.s
            for w in graph.dropoff_nodes[req.id]:
                n_window += 1
                terms = [(B[w], 1.0)] + [(x[a], -width) for a in graph.in_arcs[w]]
                model.add_row(f"wup_{w}", "L", cap, terms)

    # dropoff excess per request, over every dropoff state of the request
    n_excess = 0
    if obj.needs_excess:
        for req in inst.requests:
            ed = req.dropoff_window[0]
            for w in graph.dropoff_nodes[req.id]:
                n_excess += 1
                model.add_row(f"ex_{req.id}_{w}", "G", -ed,
                              [(d[req.id], 1.0), (B[w], -1.0)])
    if obj.needs_max_excess:
        for req in inst.requests:
            model.add_row(f"dmx_{req.id}", "G", 0.0,
                          [(dmax, 1.0), (d[req.id], -1.0)])

    # objective
    terms = []
    if obj.variant in ("cost", "cost_excess", "cost_max_excess", "request_cost_excess"):
        terms += [(x[a], arc.cost) for a, arc in enumerate(graph.arcs)]
    if obj.variant == "excess":
        terms += [(d[req.id], 1.0) for req in inst.requests]
    elif obj.variant == "cost_excess":
        terms += [(d[req.id], obj.alpha) for req in inst.requests]
    elif obj.variant == "max_excess":
        terms += [(dmax, 1.0)]
    elif obj.variant == "cost_max_excess":
        terms += [(dmax, obj.beta)]
    elif obj.variant == "request_cost_excess":
        terms += [(d[req.id], obj.alpha) for req in inst.requests]
        terms += [(p[req.id], -obj.gamma) for req in inst.requests]
        model.obj_constant = obj.gamma * n
    model.obj_terms = terms

    model.census = {
        "variables": {
            "x": graph.arc_count,
            "p": len(p),
            "B": graph.node_count,
            "d": len(d),
            "dmax": 0 if dmax is None else 1,
        },
        "rows": {
            "flow": graph.node_count,
            "serve": n,
            "fleet": 1,
            "travel_link": n_travel,
            "depot_depart": graph.class_counts[LEAVE_DEPOT],
            "depot_return": graph.class_counts[RETURN_DEPOT],
            "ride_time": n_ride,
            "window_activation": n_window,
            "excess": n_excess,
            "excess_max": n if obj.needs_max_excess else 0,
        },
    }
    return model


# ---------------------------------------------------------------------------
# objective evaluation on decoded solutions
# ---------------------------------------------------------------------------

def combine_components(obj: ObjectiveSpec, cost: float, excess: float,
                       max_excess: float, denied: int) -> float:
    """Total objective value from its components (weights must be resolved)."""
    if obj.variant == "cost":
        return cost
    if obj.variant == "excess":
        return excess
    if obj.variant == "max_excess":
        return max_excess
    if obj.variant == "cost_excess":
        return cost + obj.alpha * excess
    if obj.variant == "cost_max_excess":
        return cost + obj.beta * max_excess
    return cost + obj.alpha * excess + obj.gamma * denied


def evaluate_objective(inst: Instance, sol: "Solution",
                       objective: ObjectiveSpec) -> ObjectiveValue:
    """Recompute objective components from tours and schedule times."""
    obj = objective.resolve(inst.n)
    cost = 0.0
    drop_time: dict[int, float] = {}
    for stops, times in zip(sol.tours, sol.times):
        prev = inst.depot_loc
        for (req_id, kind), when in zip(stops, times):
            req = inst.request(req_id)
            loc = req.pickup_loc if kind == PICKUP else req.dropoff_loc
            cost += inst.metric.cost(prev, loc)
            if kind == DROPOFF:
                drop_time[req_id] = when
            prev = loc
        cost += inst.metric.cost(prev, inst.depot_loc)
    excess = {i: max(0.0, t - inst.request(i).dropoff_window[0])
              for i, t in drop_time.items()}
    f_e = sum(excess.values())
    f_emax = max(excess.values(), default=0.0)
    denied = inst.n - len(sol.accepted)
    total = combine_components(obj, cost, f_e, f_emax, denied)
    return ObjectiveValue(total=total, cost=cost, excess=f_e,
                          max_excess=f_emax, denied=denied)


# ---------------------------------------------------------------------------
# file writers
# ---------------------------------------------------------------------------

def _fmt(value: float) -> str:
    return f"{value:.12g}"


def _column_entries(model: MilpModel) -> list[list[tuple[str, float]]]:
    entries: list[list[tuple[str, float]]] = [[] for _ in model.vars]
    for idx, coef in model.obj_terms:
        entries[idx].append(("COST", coef))
    for row in model.rows:
        for idx, coef in row.terms:
            entries[idx].append((row.name, coef))
    for idx, entry in enumerate(entries):
        if not entry:
            # declare otherwise-unused columns via a zero objective entry
            entry.append(("COST", 0.0))
    return entries


def write_mps(model: MilpModel) -> str:
    """Serialize to MPS text, 12 significant digits, minimization sense."""
    out = [f"NAME          {model.name}", "ROWS", " N  COST"]
    for row in model.rows:
        out.append(f" {row.sense}  {row.name}")
    out.append("COLUMNS")
    entries = _column_entries(model)
    in_int = False
    marker = 0
    for var, entry in zip(model.vars, entries):
        if var.integer != in_int:
            tag = "INTORG" if var.integer else "INTEND"
            out.append(f"    M{marker}  'MARKER'  '{tag}'")
            marker += 1
            in_int = var.integer
        for pos in range(0, len(entry), 2):
            chunk = entry[pos:pos + 2]
            part = "    " + var.name
            for row_name, coef in chunk:
                part += f"  {row_name}  {_fmt(coef)}"
            out.append(part)
    if in_int:
        out.append(f"    M{marker}  'MARKER'  'INTEND'")
    out.append("RHS")
    if model.obj_constant:
        out.append(f"    RHS  COST  {_fmt(-model.obj_constant)}")
    for row in model.rows:
        if row.rhs:
            out.append(f"    RHS  {row.name}  {_fmt(row.rhs)}")
    out.append("BOUNDS")
    for var in model.vars:
        if var.integer:
            out.append(f" BV BND  {var.name}")
            continue
        if var.lb != 0.0:
            out.append(f" LO BND  {var.name}  {_fmt(var.lb)}")
        if var.ub != math.inf:
            out.append(f" UP BND  {var.name}  {_fmt(var.ub)}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def _lp_expr(terms: list[tuple[str, float]], constant: float = 0.0) -> str:
    parts = []
    for name, coef in terms:
        sign = "-" if coef < 0 else "+"
        parts.append(f"{sign} {_fmt(abs(coef))} {name}")
    if constant:
        sign = "-" if constant < 0 else "+"
        parts.append(f"{sign} {_fmt(abs(constant))}")
    if not parts:
        return "0"
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def write_lp(model: MilpModel) -> str:
    """Serialize to CPLEX-style LP text with the same content as the MPS."""
    out = [f"\\ {model.name}", "Minimize"]
    named = [(model.vars[idx].name, coef) for idx, coef in model.obj_terms]
    out.append(" obj: " + _lp_expr(named, model.obj_constant))
    out.append("Subject To")
    rel = {"E": "=", "L": "<=", "G": ">="}
    for row in model.rows:
        named = [(model.vars[idx].name, coef) for idx, coef in row.terms]
        out.append(f" {row.name}: {_lp_expr(named)} {rel[row.sense]} {_fmt(row.rhs)}")
    out.append("Bounds")
    used = {model.vars[idx].name for idx, _ in model.obj_terms}
    for row in model.rows:
        used.update(model.vars[idx].name for idx, _ in row.terms)
    for var in model.vars:
        if var.integer:
            continue
        if var.ub == math.inf:
            if var.lb != 0.0 or var.name not in used:
                out.append(f" {var.name} >= {_fmt(var.lb)}")
        else:
            out.append(f" {_fmt(var.lb)} <= {var.name} <= {_fmt(var.ub)}")
    out.append("Binaries")
    names = [var.name for var in model.vars if var.integer]
    for pos in range(0, len(names), 8):
        out.append(" " + " ".join(names[pos:pos + 8]))
    out.append("End")
    return "\n".join(out) + "\n"


def variable_mapping(model: MilpModel) -> dict:
    """Sidecar map from variable names to their graph/request meaning."""
    ref_key = {"x": "arc", "B": "node", "p": "request", "d": "request"}
    variables = {}
    for var in model.vars:
        entry: dict = {"kind": var.kind}
        if var.kind in ref_key:
            entry[ref_key[var.kind]] = var.ref
        variables[var.name] = entry
    return {
        "model": model.name,
        "instance": model.graph.inst.name,
        "variant": model.variant,
        "objective": {
            "variant": model.objective.variant,
            "alpha": model.objective.alpha,
            "beta": model.objective.beta,
            "gamma": model.objective.gamma,
        },
        "allow_denial": model.allow_denial,
        "objective_constant": model.obj_constant,
        "variables": variables,
    }


def write_mapping(model: MilpModel) -> str:
    return json.dumps(variable_mapping(model), indent=2, sort_keys=True)
