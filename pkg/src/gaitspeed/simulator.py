"""Deterministic single-resident household simulator with labelled ground truth.

The resident random-walks over a room adjacency graph. Each day holds a
Poisson number of trips placed uniformly in the active hours; a trip is a
chain of moves, and after each move the chain continues with probability
``p_dwell`` following a short in-room remainder drawn below the refractory
period. Because that remainder is shorter than the refractory period, the
origin sensor cannot fire on departure and the measured transition absorbs
it. A trip may also start with a missed exit (no departure firing after a
long stay). Sensors obey a per-sensor refractory period; entering the line
room triggers an ordered sensor-line traversal.
"""

import csv
import dataclasses
import datetime as dt
import math
import os
import statistics
from dataclasses import dataclass, field

import numpy as np

from .groundtruth import CLINIC_HEADER, ClinicTarget
from .ingest import (
    MS_PER_DAY,
    AreaMotion,
    ClinicWalk,
    ExclusionCalendar,
    ExclusionReason,
    LineElement,
    LineGeometry,
    SensorEvent,
    local_date,
    serialize_events,
    serialize_exclusions,
    serialize_line_geometry,
)

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

_EPOCH_ORDINAL = dt.date(1970, 1, 1).toordinal()
_NORMAL = statistics.NormalDist()
CLINIC_SENSOR = "clinic"


class ConfigError(ValueError):
    def __init__(self, field_name, message):
        super().__init__(f"config field {field_name!r}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class DwellParams:
    mu: float  # log-seconds
    sigma: float


@dataclass(frozen=True)
class LineConfig:
    room: str
    positions: tuple
    speed_spread: float = 0.10  # per-walk relative speed, uniform within +/- this
    jitter: float = 0.05  # seconds, uniform within +/- this
    p_noise: float = 0.15  # walks interrupted by a pause
    pause: tuple = (10.0, 60.0)


@dataclass(frozen=True)
class VelocityProfile:
    """Piecewise-linear true velocity; ``knots`` None means ``start -> end`` over the run."""

    start: float = 100.0
    end: float = 60.0
    knots: tuple | None = None  # ((day, cm/s), ...)

    def at(self, day, n_days):
        if self.knots is None:
            span = max(n_days, 1)
            f = min(max(day / span, 0.0), 1.0)
            return self.start + (self.end - self.start) * f
        days = [k[0] for k in self.knots]
        vals = [k[1] for k in self.knots]
        return float(np.interp(day, days, vals))

    def scaled(self, factor):
        if self.knots is None:
            return VelocityProfile(self.start * factor, self.end * factor)
        return VelocityProfile(self.start, self.end, tuple((d, v * factor) for d, v in self.knots))


@dataclass(frozen=True)
class HouseholdConfig:
    participant: str = "H01"
    start_date: dt.date = dt.date(2010, 1, 1)
    tz_offset: int = 0  # minutes
    rooms: tuple = ()
    start_room: str = ""
    adjacency: dict = field(default_factory=dict)  # (a, b) -> metres, both orders present
    dwell: dict = field(default_factory=dict)  # room -> DwellParams for short remainders
    p_dwell: float = 0.3
    p_missed_exit: float = 0.05
    refractory: float = 6.0
    line: LineConfig | None = None
    velocity: VelocityProfile = VelocityProfile()
    travel_sigma: float = 0.1
    active_hours: tuple = (7.0, 22.0)
    transitions_per_day: float = 100.0
    clinic_interval_days: int = 365
    clinic_noise_sd: float = 0.0
    p_guest: float = 0.02
    guest_transitions: int = 30
    cohort_velocity_scale: tuple = (0.6, 1.3)
    cohort_distance_scale: tuple = (0.8, 1.2)
    seed: int | None = None

    def __post_init__(self):
        validate(self)

    def neighbours(self, room):
        return sorted(b for (a, b) in self.adjacency if a == room)

    def line_geometry(self):
        return LineGeometry(self.line.positions)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def _require(cond, name, message):
    if not cond:
        raise ConfigError(name, message)


def validate(cfg):
    _require(len(cfg.rooms) >= 2, "rooms.labels", "need at least two rooms")
    _require(len(set(cfg.rooms)) == len(cfg.rooms), "rooms.labels", "room labels must be unique")
    _require(all(cfg.rooms), "rooms.labels", "room labels must be non-empty")
    _require(cfg.start_room in cfg.rooms, "rooms.start", f"unknown start room {cfg.start_room!r}")
    for (a, b), d in cfg.adjacency.items():
        _require(a in cfg.rooms and b in cfg.rooms, "adjacency", f"unknown room in {a}:{b}")
        _require(a != b, "adjacency", f"self-loop {a}:{b}")
        _require(d > 0 and math.isfinite(d), "adjacency", f"distance for {a}:{b} must be positive, got {d}")
    for room in cfg.rooms:
        _require(any(a == room for a, _ in cfg.adjacency), "adjacency", f"room {room!r} has no neighbour")
        _require(room in cfg.dwell, "dwell", f"no dwell parameters for room {room!r}")
    for room, p in cfg.dwell.items():
        _require(p.sigma > 0, f"dwell.{room}.sigma", "must be positive")
    for name in ("p_dwell", "p_missed_exit", "p_guest"):
        v = getattr(cfg, name)
        _require(0.0 <= v <= 1.0, name, f"probability must lie in [0, 1], got {v}")
    _require(cfg.p_dwell < 1.0, "p_dwell", "must be below 1 so trips end")
    _require(cfg.refractory >= 0, "refractory", "must be non-negative")
    _require(cfg.travel_sigma >= 0, "travel_sigma", "must be non-negative")
    h0, h1 = cfg.active_hours
    _require(0.0 <= h0 < h1 <= 24.0, "schedule.active_hours", f"need 0 <= start < end <= 24, got {cfg.active_hours}")
    _require(cfg.transitions_per_day >= 0, "schedule.transitions_per_day", "must be non-negative")
    _require(cfg.clinic_interval_days >= 1, "velocity.clinic_interval_days", "must be at least 1")
    _require(cfg.clinic_noise_sd >= 0, "velocity.clinic_noise_sd", "must be non-negative")
    _require(cfg.guest_transitions >= 0, "schedule.guest_transitions", "must be non-negative")
    _require(-24 * 60 < cfg.tz_offset < 24 * 60, "household.tz_offset_minutes", "offset out of range")
    _require(cfg.line is not None, "line", "a sensor line is required")
    _require(cfg.line.room in cfg.rooms, "line.room", f"unknown room {cfg.line.room!r}")
    try:
        LineGeometry(cfg.line.positions)
    except ValueError as exc:
        raise ConfigError("line.positions", str(exc)) from None
    _require(0 <= cfg.line.speed_spread < 1, "line.speed_spread", "must lie in [0, 1)")
    _require(cfg.line.jitter >= 0, "line.jitter", "must be non-negative")
    _require(0 <= cfg.line.p_noise <= 1, "line.p_noise", "probability must lie in [0, 1]")
    _require(0 < cfg.line.pause[0] <= cfg.line.pause[1], "line.pause", "need 0 < low <= high")
    vp = cfg.velocity
    if vp.knots is None:
        _require(vp.start > 0 and vp.end > 0, "velocity", "start and end must be positive")
    else:
        _require(len(vp.knots) >= 1, "velocity.knots", "need at least one knot")
        days = [k[0] for k in vp.knots]
        _require(all(b > a for a, b in zip(days, days[1:])), "velocity.knots", "days must increase")
        _require(all(k[1] > 0 for k in vp.knots), "velocity.knots", "velocities must be positive")
    for name in ("cohort_velocity_scale", "cohort_distance_scale"):
        lo, hi = getattr(cfg, name)
        _require(0 < lo <= hi, name, "need 0 < low <= high")


# ---------------------------------------------------------------------------
# config files


DEFAULT_CONFIG_TOML = """\
[household]
participant = "H01"
start_date = "2010-01-01"
tz_offset_minutes = 0

[rooms]
labels = ["bedroom", "bathroom", "hall", "kitchen", "living", "closet"]
start = "bedroom"

[adjacency]
"bedroom:hall" = 4.0
"bathroom:hall" = 3.0
"kitchen:hall" = 5.0
"living:hall" = 4.5
"kitchen:living" = 6.0
"bedroom:closet" = 2.5
"bedroom:bathroom" = 3.5

[dwell]
p_dwell = 0.3
p_missed_exit = 0.05
default = { mu = -2.0, sigma = 2.0 }

[line]
room = "hall"
positions = [0.0, 0.6, 1.2, 1.8]
speed_spread = 0.10
jitter = 0.05
p_noise = 0.15
pause = [10.0, 60.0]

[velocity]
start = 100.0
end = 60.0
travel_sigma = 0.1
clinic_interval_days = 365
clinic_noise_sd = 0.0

[schedule]
active_hours = [7.0, 22.0]
transitions_per_day = 100.0
refractory = 6.0
p_guest = 0.02
guest_transitions = 30

[cohort]
velocity_scale = [0.6, 1.3]
distance_scale = [0.8, 1.2]
"""


def _get(table, key, default, name, kind=float):
    if key not in table:
        return default
    try:
        return kind(table[key])
    except (TypeError, ValueError):
        raise ConfigError(name, f"cannot read {table[key]!r} as {kind.__name__}") from None


def config_from_dict(doc):
    """Build a :class:`HouseholdConfig` from a parsed TOML document."""
    known = {"household", "rooms", "adjacency", "dwell", "line", "velocity", "schedule", "cohort"}
    for section in doc:
        _require(section in known, section, "unknown section")
    hh = doc.get("household", {})
    rooms_t = doc.get("rooms", {})
    rooms = tuple(str(r) for r in rooms_t.get("labels", ()))
    start_room = str(rooms_t.get("start", rooms[0] if rooms else ""))

    adjacency = {}
    for key, dist in doc.get("adjacency", {}).items():
        a, sep, b = key.partition(":")
        _require(sep == ":", f"adjacency.{key}", "keys must look like 'room_a:room_b'")
        d = _get({"d": dist}, "d", None, f"adjacency.{key}")
        for pair in ((a, b), (b, a)):
            _require(pair not in adjacency, f"adjacency.{key}", "pair listed twice")
            adjacency[pair] = d

    dw = doc.get("dwell", {})
    default = dw.get("default")
    dwell = {}
    for room in rooms:
        spec = dw.get(room, default)
        _require(isinstance(spec, dict), f"dwell.{room}", "needs a {mu, sigma} table (or a default)")
        dwell[room] = DwellParams(_get(spec, "mu", None, f"dwell.{room}.mu"), _get(spec, "sigma", None, f"dwell.{room}.sigma"))

    ln = doc.get("line", {})
    _require("room" in ln and "positions" in ln, "line", "needs room and positions")
    line = LineConfig(
        room=str(ln["room"]),
        positions=tuple(float(p) for p in ln["positions"]),
        speed_spread=_get(ln, "speed_spread", 0.10, "line.speed_spread"),
        jitter=_get(ln, "jitter", 0.05, "line.jitter"),
        p_noise=_get(ln, "p_noise", 0.15, "line.p_noise"),
        pause=tuple(float(p) for p in ln.get("pause", (10.0, 60.0))),
    )

    vt = doc.get("velocity", {})
    if "knots" in vt:
        knots = tuple((float(d), float(v)) for d, v in vt["knots"])
        velocity = VelocityProfile(knots=knots)
    else:
        velocity = VelocityProfile(_get(vt, "start", 100.0, "velocity.start"), _get(vt, "end", 60.0, "velocity.end"))

    sc = doc.get("schedule", {})
    co = doc.get("cohort", {})
    seed = hh.get("seed")
    try:
        start_date = dt.date.fromisoformat(str(hh.get("start_date", "2010-01-01")))
    except ValueError as exc:
        raise ConfigError("household.start_date", str(exc)) from None
    return HouseholdConfig(
        participant=str(hh.get("participant", "H01")),
        start_date=start_date,
        tz_offset=_get(hh, "tz_offset_minutes", 0, "household.tz_offset_minutes", int),
        rooms=rooms,
        start_room=start_room,
        adjacency=adjacency,
        dwell=dwell,
        p_dwell=_get(dw, "p_dwell", 0.3, "dwell.p_dwell"),
        p_missed_exit=_get(dw, "p_missed_exit", 0.05, "dwell.p_missed_exit"),
        refractory=_get(sc, "refractory", 6.0, "schedule.refractory"),
        line=line,
        velocity=velocity,
        travel_sigma=_get(vt, "travel_sigma", 0.1, "velocity.travel_sigma"),
        active_hours=tuple(float(h) for h in sc.get("active_hours", (7.0, 22.0))),
        transitions_per_day=_get(sc, "transitions_per_day", 100.0, "schedule.transitions_per_day"),
        clinic_interval_days=_get(vt, "clinic_interval_days", 365, "velocity.clinic_interval_days", int),
        clinic_noise_sd=_get(vt, "clinic_noise_sd", 0.0, "velocity.clinic_noise_sd"),
        p_guest=_get(sc, "p_guest", 0.02, "schedule.p_guest"),
        guest_transitions=_get(sc, "guest_transitions", 30, "schedule.guest_transitions", int),
        cohort_velocity_scale=tuple(float(v) for v in co.get("velocity_scale", (0.6, 1.3))),
        cohort_distance_scale=tuple(float(v) for v in co.get("distance_scale", (0.8, 1.2))),
        seed=None if seed is None else int(seed),
    )


def parse_config(text):
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<file>", f"not valid TOML: {exc}") from None
    return config_from_dict(doc)


def load_config(path):
    with open(path, "rb") as fh:
        data = fh.read()
    return parse_config(data.decode("utf-8"))


def default_config(**changes):
    cfg = parse_config(DEFAULT_CONFIG_TOML)
    return cfg.replace(**changes) if changes else cfg


def config_to_dict(cfg):
    """Resolved configuration as plain JSON-ready values, in the config-file layout."""
    vel = {"travel_sigma": cfg.travel_sigma, "clinic_interval_days": cfg.clinic_interval_days,
           "clinic_noise_sd": cfg.clinic_noise_sd}
    if cfg.velocity.knots is None:
        vel.update(start=cfg.velocity.start, end=cfg.velocity.end)
    else:
        vel["knots"] = [list(k) for k in cfg.velocity.knots]
    return {
        "household": {"participant": cfg.participant, "start_date": cfg.start_date.isoformat(),
                      "tz_offset_minutes": cfg.tz_offset, "seed": cfg.seed},
        "rooms": {"labels": list(cfg.rooms), "start": cfg.start_room},
        "adjacency": {f"{a}:{b}": d for (a, b), d in sorted(cfg.adjacency.items()) if a < b},
        "dwell": {"p_dwell": cfg.p_dwell, "p_missed_exit": cfg.p_missed_exit,
                  **{r: {"mu": p.mu, "sigma": p.sigma} for r, p in sorted(cfg.dwell.items())}},
        "line": {"room": cfg.line.room, "positions": list(cfg.line.positions),
                 "speed_spread": cfg.line.speed_spread, "jitter": cfg.line.jitter,
                 "p_noise": cfg.line.p_noise, "pause": list(cfg.line.pause)},
        "velocity": vel,
        "schedule": {"active_hours": list(cfg.active_hours), "transitions_per_day": cfg.transitions_per_day,
                     "refractory": cfg.refractory, "p_guest": cfg.p_guest,
                     "guest_transitions": cfg.guest_transitions},
        "cohort": {"velocity_scale": list(cfg.cohort_velocity_scale),
                   "distance_scale": list(cfg.cohort_distance_scale)},
    }


# ---------------------------------------------------------------------------
# simulation


@dataclass(frozen=True)
class RecordTruth:
    participant: str
    date: dt.date
    from_room: str
    to_room: str
    duration: float
    label: str  # pure | dwell | missed_exit | spurious


@dataclass(frozen=True)
class DayTruth:
    participant: str
    date: dt.date
    true_velocity: float  # at local noon
    n_moves: int
    guest: bool


@dataclass(frozen=True)
class WalkTruth:
    participant: str
    date: dt.date
    t_ms: int
    true_velocity: float
    walk_velocity: float
    direction: int
    paused: bool


@dataclass
class SimTruth:
    records: list
    daily: list
    clinic: list
    walks: list


@dataclass
class SimResult:
    config: HouseholdConfig
    n_days: int
    seed: int
    events: list
    truth: SimTruth
    exclusions: ExclusionCalendar

    @property
    def participant(self):
        return self.config.participant


def _truncated_lognormal(rng, p, upper):
    # inverse-CDF draw from log-normal(mu, sigma) conditioned below ``upper``
    if upper <= 0.0:
        return 0.0
    top = _NORMAL.cdf((math.log(upper) - p.mu) / p.sigma)
    u = rng.uniform(0.0, top)
    u = min(max(u, 1e-15), 1.0 - 1e-15)
    return math.exp(p.mu + p.sigma * _NORMAL.inv_cdf(u))


def simulate(config, n_days, seed=None):
    """Run the household for ``n_days`` local days; deterministic in (config, n_days, seed)."""
    if n_days < 1:
        raise ConfigError("n_days", f"must be at least 1, got {n_days}")
    seed = config.seed if seed is None else seed
    if seed is None:
        raise ConfigError("seed", "no seed given in the call or the config")
    rng = np.random.default_rng(seed)
    cfg = config
    pid = cfg.participant
    refr_ms = int(round(cfg.refractory * 1000))
    start_ms = (cfg.start_date.toordinal() - _EPOCH_ORDINAL) * MS_PER_DAY - cfg.tz_offset * 60_000
    area_kind = {r: AreaMotion(r) for r in cfg.rooms}
    area_sensor = {r: f"M-{r}" for r in cfg.rooms}
    positions = cfg.line.positions
    line_kind = [LineElement(i, p) for i, p in enumerate(positions)]
    line_sensor = [f"L{i}" for i in range(len(positions))]
    neighbours = {r: cfg.neighbours(r) for r in cfg.rooms}
    h0, h1 = cfg.active_hours
    interval = cfg.clinic_interval_days
    probe_days = {(k - 1) * interval + interval // 2 for k in range(1, n_days // interval + 1)}

    # attempts: (t_ms, seq, sensor, kind, move, role); role in arrive/depart/wake/guest/line
    attempts = []
    moves = []  # per move: missed-exit flag
    walks = []
    daily = []
    excluded = {}
    clinic = []
    clinic_events = []

    def push(t_ms, sensor, kind, move, role):
        attempts.append((t_ms, len(attempts), sensor, kind, move, role))

    def velocity_at(t_s):
        return cfg.velocity.at((t_s * 1000.0 - start_ms) / MS_PER_DAY, n_days)

    room = cfg.start_room
    last_arrival = start_ms / 1000.0
    rate_trips = cfg.transitions_per_day * (1.0 - cfg.p_dwell)
    for d in range(n_days):
        day_ms = start_ms + d * MS_PER_DAY
        date = cfg.start_date + dt.timedelta(days=d)
        day_s = day_ms / 1000.0
        t_open = day_s + h0 * 3600.0
        t_close = day_s + h1 * 3600.0
        guest = d not in probe_days and rng.random() < cfg.p_guest
        n_trips = int(rng.poisson(rate_trips))
        starts = np.sort(rng.uniform(t_open, t_close, n_trips))
        first_move = len(moves)
        if n_trips:
            push(int(round(t_open * 1000.0)), area_sensor[room], area_kind[room], -1, "wake")
        last_arrival = max(last_arrival, t_open)
        for s in starts:
            # an unchained trip leaves after the room's sensor has recovered
            t = max(float(s), last_arrival + cfg.refractory + 1.0)
            if t >= t_close:
                break
            first = True
            while True:
                m = len(moves)
                missed = first and rng.random() < cfg.p_missed_exit
                t_ms = int(round(t * 1000.0))
                t = t_ms / 1000.0
                if not missed:
                    push(t_ms, area_sensor[room], area_kind[room], m, "depart")
                nxt = neighbours[room][int(rng.integers(len(neighbours[room])))]
                v = velocity_at(t)
                travel = cfg.adjacency[(room, nxt)] / (v / 100.0) * math.exp(cfg.travel_sigma * rng.standard_normal())
                arrive_ms = t_ms + int(round(travel * 1000.0))
                arrive = arrive_ms / 1000.0
                push(arrive_ms, area_sensor[nxt], area_kind[nxt], m, "arrive")
                moves.append(missed)
                if nxt == cfg.line.room:
                    _line_walk(cfg, rng, arrive, velocity_at(arrive), line_kind, line_sensor, push, walks, pid, date)
                room = nxt
                last_arrival = arrive
                first = False
                if rng.random() < cfg.p_dwell:
                    t = arrive + _truncated_lognormal(rng, cfg.dwell[room], cfg.refractory)
                    continue
                break
        if guest:
            excluded[date] = ExclusionReason.GUEST
            for _ in range(cfg.guest_transitions):
                r = cfg.rooms[int(rng.integers(len(cfg.rooms)))]
                push(int(round(rng.uniform(t_open, t_close) * 1000.0)), area_sensor[r], area_kind[r], -1, "guest")
        if d in probe_days:
            t_probe = day_s + 0.5 * (h0 + h1) * 3600.0
            v_true = velocity_at(t_probe)
            v_obs = v_true + (cfg.clinic_noise_sd * rng.standard_normal() if cfg.clinic_noise_sd > 0 else 0.0)
            clinic.append(ClinicTarget(pid, date, v_obs))
            clinic_events.append(SensorEvent(pid, int(round(t_probe * 1000.0)), CLINIC_SENSOR, ClinicWalk(v_obs)))
        daily.append(DayTruth(pid, date, velocity_at(day_s + 43200.0), len(moves) - first_move, guest))

    # per-sensor refractory filter
    attempts.sort()
    last_fire = {}
    fired = []
    for a in attempts:
        t_ms, _, sensor = a[0], a[1], a[2]
        prev = last_fire.get(sensor)
        if prev is not None and t_ms - prev < refr_ms:
            continue
        last_fire[sensor] = t_ms
        fired.append(a)

    events = [SensorEvent(pid, a[0], a[2], a[3]) for a in fired]
    events.extend(clinic_events)
    events.sort(key=lambda e: e.t_ms)
    records = _label_records(pid, fired, moves, cfg.tz_offset)
    calendar = ExclusionCalendar(pid, excluded)
    return SimResult(cfg, n_days, seed, events, SimTruth(records, daily, clinic, walks), calendar)


def _line_walk(cfg, rng, t0, v_true, line_kind, line_sensor, push, walks, pid, date):
    line = cfg.line
    speed = v_true * (1.0 + rng.uniform(-line.speed_spread, line.speed_spread))
    forward = rng.random() < 0.5
    order = range(len(line_kind)) if forward else range(len(line_kind) - 1, -1, -1)
    origin = line.positions[0] if forward else line.positions[-1]
    paused = rng.random() < line.p_noise
    pause_at = int(rng.integers(1, len(line_kind))) if paused else len(line_kind)
    pause = rng.uniform(*line.pause) if paused else 0.0
    for step, i in enumerate(order):
        t = t0 + abs(line.positions[i] - origin) / (speed / 100.0)
        if line.jitter > 0:
            t += rng.uniform(-line.jitter, line.jitter)
        if step >= pause_at:
            t += pause
        push(int(round(t * 1000.0)), line_sensor[i], line_kind[i], -1, "line")
    walks.append(WalkTruth(pid, date, int(round(t0 * 1000.0)), v_true, speed, 1 if forward else -1, paused))


def _label_records(pid, fired, moves, tz_offset):
    # mirror of the transition extractor over tagged firings, one label per record
    out = []
    prev = None
    prev_date = None
    for a in fired:
        if not isinstance(a[3], AreaMotion):
            continue
        date = local_date(a[0], tz_offset)
        if prev is not None and prev_date == date and a[3].room != prev[3].room and a[0] > prev[0]:
            if prev[5] == "guest" or a[5] == "guest":
                label = "spurious"
            elif prev[5] == "depart" and a[5] == "arrive" and prev[4] == a[4]:
                label = "pure"
            elif a[5] == "arrive" and moves[a[4]]:
                label = "missed_exit"
            else:
                label = "dwell"
            out.append(RecordTruth(pid, date, prev[3].room, a[3].room, (a[0] - prev[0]) / 1000.0, label))
        prev = a
        prev_date = date
    return out


def simulate_cohort(config, n_households, n_days, seed):
    """Households that differ in speed level and floor-plan scale, with independent seeds."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n_households):
        vscale = float(rng.uniform(*config.cohort_velocity_scale))
        dscale = float(rng.uniform(*config.cohort_distance_scale))
        hh_seed = int(rng.integers(2**62))
        cfg = config.replace(
            participant=f"{config.participant}-{i + 1:02d}",
            velocity=config.velocity.scaled(vscale),
            adjacency={k: v * dscale for k, v in config.adjacency.items()},
        )
        out.append(simulate(cfg, n_days, hh_seed))
    return out


# ---------------------------------------------------------------------------
# export


TRUTH_RECORD_HEADER = ["participant", "date", "from", "to", "seconds", "label"]
TRUTH_DAILY_HEADER = ["participant", "date", "true_velocity_cm_s", "n_moves", "guest"]
TRUTH_WALK_HEADER = ["participant", "date", "timestamp_ms", "true_velocity_cm_s", "walk_velocity_cm_s", "direction", "paused"]


def _write_rows(path, header, rows):
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def export(results, out_dir):
    """Write events, exclusions, truth tables, clinic targets and line geometry to ``out_dir``.

    ``results`` is one :class:`SimResult` or a list of them (a cohort).
    Returns the written file names.
    """
    if isinstance(results, SimResult):
        results = [results]
    os.makedirs(out_dir, exist_ok=True)
    events = [e for r in results for e in r.events]
    files = {}

    def text(name, body):
        path = os.path.join(out_dir, name)
        try:
            with open(path, "w", newline="", encoding="utf-8") as fh:
                fh.write(body)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc.strerror}") from exc
        files[name] = path

    text("events.csv", serialize_events(events))
    text("exclusions.csv", serialize_exclusions([r.exclusions for r in results]))
    text("line.csv", serialize_line_geometry(results[0].config.line_geometry()))
    rows = [[t.participant, t.date.isoformat(), t.from_room, t.to_room, repr(t.duration), t.label]
            for r in results for t in r.truth.records]
    _write_rows(os.path.join(out_dir, "truth_records.csv"), TRUTH_RECORD_HEADER, rows)
    rows = [[t.participant, t.date.isoformat(), repr(t.true_velocity), t.n_moves, int(t.guest)]
            for r in results for t in r.truth.daily]
    _write_rows(os.path.join(out_dir, "truth_daily.csv"), TRUTH_DAILY_HEADER, rows)
    rows = [[w.participant, w.date.isoformat(), w.t_ms, repr(w.true_velocity), repr(w.walk_velocity), w.direction, int(w.paused)]
            for r in results for w in r.truth.walks]
    _write_rows(os.path.join(out_dir, "truth_walks.csv"), TRUTH_WALK_HEADER, rows)
    rows = [[c.participant, c.date.isoformat(), repr(c.velocity)] for r in results for c in r.truth.clinic]
    _write_rows(os.path.join(out_dir, "clinic.csv"), CLINIC_HEADER, rows)
    for name in ("truth_records.csv", "truth_daily.csv", "truth_walks.csv", "clinic.csv"):
        files[name] = os.path.join(out_dir, name)
    return files
