"""Problem data for the static dial-a-ride problem.

A problem instance consists of n transportation requests, a homogeneous
fleet and a single depot.  Request i has a pickup location i and a dropoff
location n+i (the depot is location 0), a seat demand q_i, a service
duration s_i applied at both of its locations, service time windows at
both locations and a maximal ride time L_i.  Travel costs and travel
times between locations come from a :class:`TravelMetric`, either
Euclidean coordinates with a cost-to-minutes factor or explicit matrices.

The module covers reading the classic text format for benchmark files,
time-window tightening (deriving the unspecified window of each request
from the specified one), a reproducible synthetic generator and a JSON
round-trip format.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, replace
from typing import Mapping

from .errors import DataError, ParseError

INBOUND = "inbound"
OUTBOUND = "outbound"

#: fleet sizes used by the synthetic generator, keyed by (capacity, n)
FLEET_SIZES = {
    (3, 10): 6, (3, 15): 7, (3, 20): 9, (3, 25): 9, (3, 30): 11, (3, 35): 12, (3, 40): 15,
    (6, 10): 6, (6, 15): 9, (6, 20): 11, (6, 25): 15, (6, 30): 16, (6, 35): 18, (6, 40): 20,
}


@dataclass(frozen=True)
class TravelMetric:
    """Pairwise travel costs and travel times between location ids.

    Exactly one of ``coords`` / (``cost_matrix``, ``time_matrix``) must be
    given.  With coordinates the cost between two locations is their
    Euclidean distance and the travel time is ``time_factor`` times the
    cost.  Matrices are indexed directly by location id and carry times
    verbatim.
    """

    coords: Mapping[int, tuple[float, float]] | None = None
    cost_matrix: tuple[tuple[float, ...], ...] | None = None
    time_matrix: tuple[tuple[float, ...], ...] | None = None
    time_factor: float = 1.0

    def __post_init__(self):
        has_coords = self.coords is not None
        has_matrix = self.cost_matrix is not None or self.time_matrix is not None
        if has_coords == has_matrix:
            raise DataError("metric needs either coordinates or matrices, not both")
        if self.time_factor <= 0:
            raise DataError("time_factor must be positive")
        if has_matrix:
            if self.cost_matrix is None or self.time_matrix is None:
                raise DataError("matrix metric needs both a cost and a time matrix")
            self._check_matrix(self.cost_matrix, "cost")
            self._check_matrix(self.time_matrix, "time")

    @staticmethod
    def _check_matrix(mat, label):
        m = len(mat)
        if any(len(row) != m for row in mat):
            raise DataError(f"{label} matrix is not square")
        for i in range(m):
            for j in range(m):
                if mat[i][j] < 0:
                    raise DataError(f"negative {label} entry at ({i}, {j})")
        # triangle inequality, direct connections never lose
        for i in range(m):
            for j in range(m):
                for k in range(m):
                    if mat[i][k] > mat[i][j] + mat[j][k] + 1e-9:
                        raise DataError(
                            f"{label} matrix violates the triangle inequality "
                            f"on ({i}, {j}, {k})")

    def cost(self, a: int, b: int) -> float:
        if self.coords is not None:
            try:
                xa, ya = self.coords[a]
                xb, yb = self.coords[b]
            except KeyError as exc:
                raise DataError(f"unknown location id {exc.args[0]}") from None
            return math.hypot(xa - xb, ya - yb)
        try:
            return self.cost_matrix[a][b]
        except IndexError:
            raise DataError(f"unknown location id {a if a >= len(self.cost_matrix) else b}") from None

    def time(self, a: int, b: int) -> float:
        if self.coords is not None:
            return self.time_factor * self.cost(a, b)
        try:
            return self.time_matrix[a][b]
        except IndexError:
            raise DataError(f"unknown location id {a if a >= len(self.time_matrix) else b}") from None


@dataclass(frozen=True)
class Request:
    """One transportation request (pickup location, dropoff location, seats)."""

    id: int
    pickup_loc: int
    dropoff_loc: int
    q: int
    s: float
    pickup_window: tuple[float, float]
    dropoff_window: tuple[float, float]
    max_ride: float
    direction: str | None = None     # set by tighten_time_windows
    direct_time: float | None = None  # cached pickup->dropoff travel time

    def __post_init__(self):
        if self.q < 1:
            raise DataError(f"request {self.id}: seat demand must be at least 1")
        if self.s < 0:
            raise DataError(f"request {self.id}: negative service duration")
        if self.max_ride <= 0:
            raise DataError(f"request {self.id}: maximal ride time must be positive")
        for which, (e, l) in (("pickup", self.pickup_window), ("dropoff", self.dropoff_window)):
            if e > l:
                raise DataError(f"request {self.id}: empty {which} window [{e}, {l}]")
        if self.direction not in (None, INBOUND, OUTBOUND):
            raise DataError(f"request {self.id}: unknown direction {self.direction!r}")


@dataclass(frozen=True)
class Instance:
    """A complete dial-a-ride instance.

    Locations are numbered 0 (depot), 1..n (pickups), n+1..2n (dropoffs).
    """

    name: str
    requests: tuple[Request, ...]
    fleet_size: int
    capacity: int
    depot_loc: int
    depot_window: tuple[float, float]
    metric: TravelMetric

    def __post_init__(self):
        if self.fleet_size < 1:
            raise DataError("fleet size must be at least 1")
        if self.capacity < 1:
            raise DataError("vehicle capacity must be at least 1")
        e0, l0 = self.depot_window
        if e0 > l0:
            raise DataError("empty depot window")
        n = len(self.requests)
        for pos, req in enumerate(self.requests, start=1):
            if req.id != pos:
                raise DataError("request ids must be 1..n in order")
            if req.q > self.capacity:
                raise DataError(
                    f"request {req.id} demands {req.q} seats, capacity is {self.capacity}")
            if req.pickup_loc != pos or req.dropoff_loc != n + pos:
                raise DataError(
                    f"request {req.id}: locations must follow the 0/1..n/n+1..2n scheme")

    @property
    def n(self) -> int:
        return len(self.requests)

    @property
    def horizon(self) -> float:
        """Planning horizon T, the width of the depot window."""
        e0, l0 = self.depot_window
        return l0 - e0

    def request(self, i: int) -> Request:
        return self.requests[i - 1]


def travel(inst: Instance, a: int, b: int) -> tuple[float, float]:
    """Return (cost, time) of the direct connection from location a to b."""
    return inst.metric.cost(a, b), inst.metric.time(a, b)


# ---------------------------------------------------------------------------
# benchmark text format
# ---------------------------------------------------------------------------

def _num(tok: str, what: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"non-numeric {what}: {tok!r}") from None


def _int(tok: str, what: str) -> int:
    val = _num(tok, what)
    if val != int(val):
        raise ParseError(f"{what} must be an integer, got {tok!r}")
    return int(val)


def parse_cordeau(text: str, name: str = "instance") -> Instance:
    """Parse the classic whitespace text format for benchmark instances.

    Layout: a header line ``fleet_size node_count horizon capacity max_ride``
    followed by one row ``id x y s q e l`` per node.  Row 0 is the depot,
    rows 1..n the pickups, rows n+1..2n the dropoffs, optionally followed
    by a terminal copy of the depot row.  Header node counts that include
    the depot rows (2n+1 or 2n+2) as well as counts of only the 2n request
    rows are accepted; the actual number of rows decides.

    Dropoff rows must carry the negated seat demand of their pickup row.
    Windows are taken verbatim; run :func:`tighten_time_windows` afterwards.
    The returned metric is Euclidean over the row coordinates with a
    time factor of 1, and the header max ride time applies to every request.
    """
    rows = [line.split() for line in text.splitlines() if line.strip()]
    if not rows:
        raise ParseError("empty instance file")
    header = rows[0]
    if len(header) != 5:
        raise ParseError(f"header must have 5 fields, got {len(header)}")
    fleet = _int(header[0], "fleet size")
    declared = _int(header[1], "node count")
    horizon = _num(header[2], "horizon")
    capacity = _int(header[3], "capacity")
    max_ride = _num(header[4], "max ride time")
    if fleet < 1 or capacity < 1:
        raise ParseError("fleet size and capacity must be positive")

    body = rows[1:]
    got = len(body)
    # 2n+1 rows (no terminal depot) or 2n+2 rows (terminal depot present);
    # published files declare only the 2n request rows, so allow that too.
    if got == declared and declared % 2 == 1:
        n = (declared - 1) // 2
    elif got == declared and declared % 2 == 0:
        n = (declared - 2) // 2
    elif got in (declared + 1, declared + 2) and declared % 2 == 0:
        n = declared // 2
    else:
        raise ParseError(
            f"{got} node rows do not match declared node count {declared}")
    if n < 1:
        raise ParseError("instance needs at least one request")

    parsed = []
    for idx, row in enumerate(body):
        if len(row) != 7:
            raise ParseError(f"node row {idx} must have 7 fields, got {len(row)}")
        rid = _int(row[0], "node id")
        if rid != idx:
            raise ParseError(f"node row {idx} carries id {rid}")
        x = _num(row[1], "x coordinate")
        y = _num(row[2], "y coordinate")
        s = _num(row[3], "service duration")
        q = _int(row[4], "seat demand")
        e = _num(row[5], "window start")
        l = _num(row[6], "window end")
        parsed.append((x, y, s, q, e, l))

    x0, y0, s0, q0, e0, l0 = parsed[0]
    if e0 == l0 == 0.0:
        e0, l0 = 0.0, horizon
    coords = {i: (parsed[i][0], parsed[i][1]) for i in range(2 * n + 1)}
    metric = TravelMetric(coords=coords, time_factor=1.0)

    requests = []
    for i in range(1, n + 1):
        px, py, ps, pq, pe, pl = parsed[i]
        dx, dy, ds, dq, de, dl = parsed[n + i]
        if pq <= 0:
            raise ParseError(f"pickup row {i} must demand a positive number of seats")
        if dq != -pq:
            raise ParseError(
                f"load mismatch for request {i}: pickup {pq}, dropoff {dq}")
        if pq > capacity:
            raise ParseError(f"request {i} demands {pq} seats, capacity is {capacity}")
        if ds != ps:
            raise ParseError(
                f"service duration mismatch for request {i}: pickup {ps}, dropoff {ds}")
        requests.append(Request(
            id=i, pickup_loc=i, dropoff_loc=n + i, q=pq, s=ps,
            pickup_window=(pe, pl), dropoff_window=(de, dl), max_ride=max_ride))

    return Instance(
        name=name, requests=tuple(requests), fleet_size=fleet, capacity=capacity,
        depot_loc=0, depot_window=(e0, l0), metric=metric)


# ---------------------------------------------------------------------------
# time-window tightening
# ---------------------------------------------------------------------------

def tighten_time_windows(inst: Instance) -> Instance:
    """Derive the unspecified window of each request from the specified one.

    A request is classified inbound when its pickup window is narrower
    than its dropoff window (ties count as inbound); already-classified
    requests keep their direction.  Inbound requests get their dropoff
    window from the pickup window,

        e_drop = e_pick + s + t_direct,   l_drop = l_pick + s + L,

    outbound requests the mirrored pickup window

        e_pick = e_drop - L - s,          l_pick = l_drop - t_direct - s.

    Both windows are then clipped to the depot window.  The direct travel
    time of each request is cached on the request.  The operation is
    idempotent.
    """
    e0, l0 = inst.depot_window
    width0 = l0 - e0
    out = []
    for req in inst.requests:
        t_direct = inst.metric.time(req.pickup_loc, req.dropoff_loc)
        direction = req.direction
        if direction is None:
            wp = req.pickup_window[1] - req.pickup_window[0]
            wd = req.dropoff_window[1] - req.dropoff_window[0]
            if wp >= width0 and wd >= width0:
                raise DataError(
                    f"request {req.id}: both windows are trivial, cannot classify")
            direction = INBOUND if wp <= wd else OUTBOUND
        if direction == INBOUND:
            ep, lp = req.pickup_window
            ed = ep + req.s + t_direct
            ld = lp + req.s + req.max_ride
        else:
            ed, ld = req.dropoff_window
            ep = ed - req.max_ride - req.s
            lp = ld - t_direct - req.s
        pickup = (max(ep, e0), min(lp, l0))
        dropoff = (max(ed, e0), min(ld, l0))
        if pickup[0] > pickup[1] or dropoff[0] > dropoff[1]:
            raise DataError(
                f"request {req.id}: window empty after tightening and clipping")
        out.append(replace(
            req, pickup_window=pickup, dropoff_window=dropoff,
            direction=direction, direct_time=t_direct))
    return replace(inst, requests=tuple(out))


# ---------------------------------------------------------------------------
# synthetic instances
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GeneratorConfig:
    """Settings for the reproducible synthetic instance generator.

    Locations are sampled uniformly in a square of side ``area_side`` with
    the depot at the centre.  Pickup windows start on a 5-minute grid in
    [15, 60] and are 15 minutes long; every request is inbound.  Seat
    demands are 1 for capacity 3 and uniform on 1..6 for capacity 6, with
    service durations equal to the demand.  The maximal ride time is
    ``ride_factor`` times the direct travel time, and travel times are
    ``time_factor`` times the Euclidean cost.
    """

    n: int
    capacity: int
    seed: int
    fleet_size: int | None = None
    area_side: float = 5.0
    horizon: float = 150.0
    window_length: float = 15.0
    first_pickup: float = 15.0
    last_pickup: float = 60.0
    pickup_step: float = 5.0
    ride_factor: float = 1.5
    time_factor: float = 4.0

    def __post_init__(self):
        if self.n < 1:
            raise DataError("generator needs n >= 1")
        if self.capacity not in (3, 6):
            raise DataError("generator capacity must be 3 or 6")
        for name in ("area_side", "horizon", "window_length", "pickup_step",
                     "ride_factor", "time_factor"):
            if getattr(self, name) <= 0:
                raise DataError(f"{name} must be positive")
        if not 0 <= self.first_pickup <= self.last_pickup:
            raise DataError("pickup start range is empty")
        if self.fleet_size is not None and self.fleet_size < 1:
            raise DataError("fleet size must be at least 1")


def generate_synthetic(cfg: GeneratorConfig) -> Instance:
    """Generate a reproducible synthetic instance (already tightened)."""
    rng = random.Random(cfg.seed)
    side = cfg.area_side
    coords = {0: (side / 2.0, side / 2.0)}
    ticks = int(round((cfg.last_pickup - cfg.first_pickup) / cfg.pickup_step)) + 1
    requests = []
    for i in range(1, cfg.n + 1):
        while True:
            px, py = rng.uniform(0, side), rng.uniform(0, side)
            dx, dy = rng.uniform(0, side), rng.uniform(0, side)
            dist = math.hypot(px - dx, py - dy)
            if dist > 1e-9:
                break
        coords[i] = (px, py)
        coords[cfg.n + i] = (dx, dy)
        q = 1 if cfg.capacity == 3 else rng.randint(1, 6)
        start = cfg.first_pickup + cfg.pickup_step * rng.randrange(ticks)
        t_direct = cfg.time_factor * dist
        requests.append(Request(
            id=i, pickup_loc=i, dropoff_loc=cfg.n + i, q=q, s=float(q),
            pickup_window=(start, start + cfg.window_length),
            dropoff_window=(0.0, cfg.horizon),
            max_ride=cfg.ride_factor * t_direct,
            direction=INBOUND))
    fleet = cfg.fleet_size
    if fleet is None:
        fleet = FLEET_SIZES.get((cfg.capacity, cfg.n), math.ceil(cfg.n / 2))
    inst = Instance(
        name=f"synth-q{cfg.capacity}-n{cfg.n}-s{cfg.seed}",
        requests=tuple(requests), fleet_size=fleet, capacity=cfg.capacity,
        depot_loc=0, depot_window=(0.0, cfg.horizon),
        metric=TravelMetric(coords=coords, time_factor=cfg.time_factor))
    return tighten_time_windows(inst)


# ---------------------------------------------------------------------------
# JSON round trip
# ---------------------------------------------------------------------------

def instance_to_json(inst: Instance) -> str:
    """Serialize an instance to JSON (full float precision)."""
    metric: dict
    if inst.metric.coords is not None:
        metric = {
            "coords": {str(loc): list(xy) for loc, xy in sorted(inst.metric.coords.items())},
            "time_factor": inst.metric.time_factor,
        }
    else:
        metric = {
            "cost": [list(row) for row in inst.metric.cost_matrix],
            "time": [list(row) for row in inst.metric.time_matrix],
            "time_factor": inst.metric.time_factor,
        }
    doc = {
        "name": inst.name,
        "fleet_size": inst.fleet_size,
        "capacity": inst.capacity,
        "depot": {"location": inst.depot_loc,
                  "e": inst.depot_window[0], "l": inst.depot_window[1]},
        "requests": [
            {
                "id": r.id,
                "pickup": {"location": r.pickup_loc,
                           "e": r.pickup_window[0], "l": r.pickup_window[1]},
                "dropoff": {"location": r.dropoff_loc,
                            "e": r.dropoff_window[0], "l": r.dropoff_window[1]},
                "q": r.q,
                "s": r.s,
                "max_ride": r.max_ride,
                "direction": r.direction,
            }
            for r in inst.requests
        ],
        "metric": metric,
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def instance_from_json(text: str) -> Instance:
    """Parse an instance from its JSON form."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    try:
        m = doc["metric"]
        if "coords" in m:
            metric = TravelMetric(
                coords={int(k): (float(x), float(y)) for k, (x, y) in m["coords"].items()},
                time_factor=float(m.get("time_factor", 1.0)))
        else:
            metric = TravelMetric(
                cost_matrix=tuple(tuple(float(v) for v in row) for row in m["cost"]),
                time_matrix=tuple(tuple(float(v) for v in row) for row in m["time"]),
                time_factor=float(m.get("time_factor", 1.0)))
        requests = []
        for r in doc["requests"]:
            requests.append(Request(
                id=int(r["id"]),
                pickup_loc=int(r["pickup"]["location"]),
                dropoff_loc=int(r["dropoff"]["location"]),
                q=int(r["q"]), s=float(r["s"]),
                pickup_window=(float(r["pickup"]["e"]), float(r["pickup"]["l"])),
                dropoff_window=(float(r["dropoff"]["e"]), float(r["dropoff"]["l"])),
                max_ride=float(r["max_ride"]),
                direction=r.get("direction")))
        inst = Instance(
            name=str(doc.get("name", "instance")),
            requests=tuple(requests),
            fleet_size=int(doc["fleet_size"]),
            capacity=int(doc["capacity"]),
            depot_loc=int(doc["depot"]["location"]),
            depot_window=(float(doc["depot"]["e"]), float(doc["depot"]["l"])),
            metric=metric)
    except (KeyError, TypeError) as exc:
        raise ParseError(f"instance JSON is missing or mistypes a field: {exc}") from None
    # re-cache direct travel times for classified requests
    fixed = tuple(
        replace(r, direct_time=metric.time(r.pickup_loc, r.dropoff_loc))
        if r.direction is not None else r
        for r in inst.requests)
    return replace(inst, requests=fixed)
