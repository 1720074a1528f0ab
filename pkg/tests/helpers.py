"""Shared pure helpers for the test suite.

The brute-force state/transition enumeration here is predicate-based
(filter all candidate tuples and tuple pairs) rather than constructive,
so it shares no logic with the package's graph builder.
"""

from itertools import combinations

from darpkit import INBOUND, Instance, Request, TravelMetric

PICK = "pickup"
DROP = "dropoff"


def brute_state_space(loads: dict[int, int], capacity: int):
    """All vehicle states and transitions by exhaustive filtering.

    States are (kind, request, frozenset_of_others); the depot state is
    ("depot", 0, frozenset()).  A transition exists when the onboard set
    after the tail state admits the head event.
    """
    ids = sorted(loads)
    depot = ("depot", 0, frozenset())
    states = [depot]
    for i in ids:
        others = [j for j in ids if j != i]
        for k in range(min(len(others), capacity - 1) + 1):
            for combo in combinations(others, k):
                if loads[i] + sum(loads[j] for j in combo) <= capacity:
                    states.append((PICK, i, frozenset(combo)))
                    states.append((DROP, i, frozenset(combo)))
    state_set = set(states)

    def onboard_after(state):
        kind, i, others = state
        if kind == "depot":
            return frozenset()
        return others | {i} if kind == PICK else others

    arcs = []
    for u in states:
        for v in states:
            ku, i, _ = u
            kv, j, sv = v
            if ku == "depot" and kv == PICK and not sv:
                arcs.append((u, v))
            elif kv == "depot" and ku == DROP and not u[2]:
                arcs.append((u, v))
            elif ku != "depot" and kv != "depot":
                after = onboard_after(u)
                if kv == PICK and j not in after and sv == after:
                    # a request leaves the system at its dropoff, so its
                    # pickup event cannot follow its own dropoff directly
                    if not (ku == DROP and j == i):
                        arcs.append((u, v))
                elif kv == DROP and j in after and sv == after - {j}:
                    arcs.append((u, v))
    return state_set, arcs


def lp_schedule(tour, inst):
    """Componentwise-minimal schedule via linear programming, or None.

    Minimizing the sum of service starts over the difference-constraint
    system returns the componentwise minimum because the feasible set is
    closed under componentwise minima.  Shares nothing with the
    package's fixpoint propagation.
    """
    from scipy.optimize import linprog

    m = len(tour)
    if m == 0:
        return []
    locs = []
    wins = []
    svcs = []
    rides = {}
    for k, (rid, kind) in enumerate(tour):
        req = inst.request(rid)
        if kind == PICK:
            locs.append(req.pickup_loc)
            wins.append(req.pickup_window)
            rides[rid] = [k, None]
        else:
            locs.append(req.dropoff_loc)
            wins.append(req.dropoff_window)
            rides[rid][1] = k
        svcs.append(req.s)
    e0, l0 = inst.depot_window
    lo = [w[0] for w in wins]
    hi = [w[1] for w in wins]
    lo[0] = max(lo[0], e0 + inst.metric.time(inst.depot_loc, locs[0]))
    hi[-1] = min(hi[-1], l0 - svcs[-1] - inst.metric.time(locs[-1], inst.depot_loc))
    A = []
    b = []
    for k in range(m - 1):
        row = [0.0] * m
        row[k] = 1.0
        row[k + 1] = -1.0
        A.append(row)
        b.append(-(svcs[k] + inst.metric.time(locs[k], locs[k + 1])))
    for rid, (a_idx, b_idx) in rides.items():
        req = inst.request(rid)
        row = [0.0] * m
        row[b_idx] = 1.0
        row[a_idx] = -1.0
        A.append(row)
        b.append(req.max_ride + req.s)
    res = linprog(c=[1.0] * m, A_ub=A, b_ub=b, bounds=list(zip(lo, hi)),
                  method="highs")
    if not res.success:
        return None
    return list(res.x)


def line_metric(positions):
    """Symmetric metric on the line; costs and times are distances."""
    m = len(positions)
    mat = tuple(tuple(float(abs(positions[a] - positions[b])) for b in range(m))
                for a in range(m))
    return TravelMetric(cost_matrix=mat, time_matrix=mat)


def line_instance(name, positions, specs, fleet_size, capacity,
                  depot_window=(0.0, 1000.0)):
    """Instance over line positions [depot, p_1..p_n, d_1..d_n].

    Each spec dict gives pickup/dropoff windows and max_ride, optionally
    q, s and direction.  Directions default to inbound so the instance
    is ready for graph building without tightening.
    """
    metric = line_metric(positions)
    n = len(specs)
    reqs = []
    for i, sp in enumerate(specs, start=1):
        reqs.append(Request(
            id=i, pickup_loc=i, dropoff_loc=n + i,
            q=sp.get("q", 1), s=float(sp.get("s", 0.0)),
            pickup_window=tuple(float(v) for v in sp["pickup"]),
            dropoff_window=tuple(float(v) for v in sp["dropoff"]),
            max_ride=float(sp["max_ride"]),
            direction=sp.get("direction", INBOUND),
            direct_time=float(abs(positions[i] - positions[n + i]))))
    return Instance(name=name, requests=tuple(reqs), fleet_size=fleet_size,
                    capacity=capacity, depot_loc=0, depot_window=depot_window,
                    metric=metric)


def ring_instance(n, capacity, loads=None, name=None):
    """Unit-circle instance with permissive windows, for counting tests."""
    import math

    coords = {0: (0.0, 0.0)}
    for i in range(1, n + 1):
        ang = 2.0 * math.pi * i / (2 * n + 1)
        coords[i] = (math.cos(ang), math.sin(ang))
        ang = 2.0 * math.pi * (n + i) / (2 * n + 1)
        coords[n + i] = (math.cos(ang), math.sin(ang))
    metric = TravelMetric(coords=coords)
    reqs = []
    for i in range(1, n + 1):
        q = 1 if loads is None else loads[i]
        reqs.append(Request(
            id=i, pickup_loc=i, dropoff_loc=n + i, q=q, s=1.0,
            pickup_window=(0.0, 400.0), dropoff_window=(0.0, 400.0),
            max_ride=50.0, direction=INBOUND,
            direct_time=metric.time(i, n + i)))
    return Instance(
        name=name or f"ring-n{n}-q{capacity}", requests=tuple(reqs),
        fleet_size=max(1, n // 2), capacity=capacity, depot_loc=0,
        depot_window=(0.0, 1000.0), metric=metric)
