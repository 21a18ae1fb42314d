"""Sensor event files, exclusion calendars and per-day event streams.

Timestamps are held as integer milliseconds since the Unix epoch (UTC). Local
calendar dates come from a fixed per-home offset in minutes.
"""

import csv
import datetime as dt
import io
import re
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum

MS_PER_DAY = 86_400_000
_EPOCH = dt.datetime(1970, 1, 1, tzinfo=dt.timezone.utc)
_EPOCH_ORDINAL = dt.date(1970, 1, 1).toordinal()
MIN_TIMESTAMP_MS = int((dt.datetime(1990, 1, 1, tzinfo=dt.timezone.utc) - _EPOCH).total_seconds()) * 1000
MAX_TIMESTAMP_MS = int((dt.datetime(2100, 1, 1, tzinfo=dt.timezone.utc) - _EPOCH).total_seconds()) * 1000
MAX_CLINIC_VELOCITY = 500.0

EVENT_HEADER = ["participant", "timestamp", "sensor", "kind", "detail"]
EXCLUSION_HEADER = ["participant", "date", "reason"]
GEOMETRY_HEADER = ["index", "position_m"]

_TS_RE = re.compile(r"(\d{4})-(\d{2})-(\d{2})T(\d{2}):(\d{2}):(\d{2})(?:\.(\d{1,3}))?Z")


class EventFormatError(ValueError):
    """A malformed input row; carries the 1-based line number and offending field."""

    def __init__(self, line, field_name, message):
        super().__init__(f"line {line}: field {field_name!r}: {message}")
        self.line = line
        self.field = field_name


@dataclass(frozen=True)
class AreaMotion:
    room: str

    def __post_init__(self):
        if not self.room:
            raise ValueError("room label must be non-empty")


@dataclass(frozen=True)
class LineElement:
    index: int
    position: float

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f"line element index must be >= 0, got {self.index}")
        if not self.position >= 0.0:
            raise ValueError(f"line element position must be >= 0 m, got {self.position}")


@dataclass(frozen=True)
class ClinicWalk:
    velocity: float  # cm/s

    def __post_init__(self):
        if not 0.0 < self.velocity < MAX_CLINIC_VELOCITY:
            raise ValueError(f"clinic velocity must lie in (0, {MAX_CLINIC_VELOCITY}) cm/s, got {self.velocity}")


_KIND_TAG = {AreaMotion: "area", LineElement: "line", ClinicWalk: "clinic"}


@dataclass(frozen=True, slots=True)
class SensorEvent:
    participant: str
    t_ms: int
    sensor: str
    kind: object  # AreaMotion | LineElement | ClinicWalk

    def __post_init__(self):
        if not MIN_TIMESTAMP_MS <= self.t_ms < MAX_TIMESTAMP_MS:
            raise ValueError(f"timestamp {self.t_ms} ms lies outside [1990-01-01, 2100-01-01)")
        if type(self.kind) not in _KIND_TAG:
            raise TypeError(f"unknown sensor kind {type(self.kind).__name__}")

    @property
    def timestamp(self):
        return _EPOCH + dt.timedelta(milliseconds=self.t_ms)

    @property
    def seconds(self):
        return self.t_ms / 1000.0

    @property
    def room(self):
        return self.kind.room if isinstance(self.kind, AreaMotion) else None


def parse_timestamp(text):
    """RFC 3339 UTC instant (trailing ``Z``, optional milliseconds) -> epoch milliseconds."""
    m = _TS_RE.fullmatch(text.strip())
    if m is None:
        raise ValueError(f"not an RFC 3339 UTC timestamp: {text!r}")
    y, mo, d, h, mi, s, frac = m.groups()
    stamp = dt.datetime(int(y), int(mo), int(d), int(h), int(mi), int(s), tzinfo=dt.timezone.utc)
    ms = int(frac.ljust(3, "0")) if frac else 0
    return (stamp - _EPOCH) // dt.timedelta(seconds=1) * 1000 + ms


def format_timestamp(t_ms):
    stamp = _EPOCH + dt.timedelta(milliseconds=t_ms)
    return stamp.strftime("%Y-%m-%dT%H:%M:%S.") + f"{t_ms % 1000:03d}Z"


def local_date(t_ms, tz_offset=0):
    """Home-local calendar date of an instant, for a UTC offset in minutes."""
    return dt.date.fromordinal(_EPOCH_ORDINAL + (t_ms + tz_offset * 60_000) // MS_PER_DAY)


def _detail(kind):
    if isinstance(kind, AreaMotion):
        return kind.room
    if isinstance(kind, LineElement):
        return f"{kind.index}:{kind.position!r}"
    return repr(kind.velocity)


def _parse_kind(tag, detail):
    if tag == "area":
        return AreaMotion(detail)
    if tag == "line":
        idx, sep, pos = detail.partition(":")
        if not sep:
            raise ValueError(f"line detail must be 'index:position_m', got {detail!r}")
        return LineElement(int(idx), float(pos))
    if tag == "clinic":
        return ClinicWalk(float(detail))
    raise KeyError(tag)


def _text(data):
    if isinstance(data, bytes):
        return data.decode("utf-8")
    if isinstance(data, str):
        return data
    return data.read()


def _check_header(header, expected, what):
    if header != expected:
        got = "<empty>" if header is None else ",".join(header)
        raise EventFormatError(1, "header", f"{what} header must be {','.join(expected)}, got {got}")


def parse_event_csv(data):
    """Parse event CSV text (bytes, str or a text handle) into events in file order."""
    reader = csv.reader(io.StringIO(_text(data)))
    header = next(reader, None)
    if header is None:
        return []
    _check_header(header, EVENT_HEADER, "event CSV")
    events = []
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(EVENT_HEADER):
            raise EventFormatError(line, "row", f"expected {len(EVENT_HEADER)} fields, got {len(row)}")
        pid, stamp, sensor, tag, detail = row
        if not pid:
            raise EventFormatError(line, "participant", "empty participant id")
        if not sensor:
            raise EventFormatError(line, "sensor", "empty sensor id")
        try:
            t_ms = parse_timestamp(stamp)
        except ValueError as exc:
            raise EventFormatError(line, "timestamp", str(exc)) from None
        try:
            kind = _parse_kind(tag, detail)
        except KeyError:
            raise EventFormatError(line, "kind", f"unknown sensor kind {tag!r}") from None
        except ValueError as exc:
            raise EventFormatError(line, "detail", str(exc)) from None
        try:
            events.append(SensorEvent(pid, t_ms, sensor, kind))
        except ValueError as exc:
            raise EventFormatError(line, "timestamp", str(exc)) from None
    return events


def serialize_events(events):
    """Canonical event CSV text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EVENT_HEADER)
    for e in events:
        w.writerow([e.participant, format_timestamp(e.t_ms), e.sensor, _KIND_TAG[type(e.kind)], _detail(e.kind)])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# exclusion calendars


class ExclusionReason(str, Enum):
    GUEST = "guest"
    STAFF_VISIT = "staff_visit"
    SENSOR_OUTAGE = "sensor_outage"


@dataclass(frozen=True)
class ExclusionCalendar:
    participant: str
    excluded_days: dict = field(default_factory=dict)  # date -> ExclusionReason

    @classmethod
    def from_entries(cls, participant, entries):
        """Build from ``(date, reason)`` pairs, rejecting duplicate dates."""
        days = {}
        for day, reason in entries:
            if day in days:
                raise ValueError(f"duplicate exclusion date {day.isoformat()} for participant {participant}")
            days[day] = ExclusionReason(reason)
        return cls(participant, days)

    def __contains__(self, day):
        return day in self.excluded_days

    def __len__(self):
        return len(self.excluded_days)


def parse_exclusion_csv(data):
    """Exclusion CSV -> ``{participant: ExclusionCalendar}``."""
    reader = csv.reader(io.StringIO(_text(data)))
    header = next(reader, None)
    if header is None:
        return {}
    _check_header(header, EXCLUSION_HEADER, "exclusion CSV")
    rows = defaultdict(list)
    seen = set()
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(EXCLUSION_HEADER):
            raise EventFormatError(line, "row", f"expected {len(EXCLUSION_HEADER)} fields, got {len(row)}")
        pid, day, reason = row
        try:
            day = dt.date.fromisoformat(day)
        except ValueError as exc:
            raise EventFormatError(line, "date", str(exc)) from None
        try:
            reason = ExclusionReason(reason)
        except ValueError:
            raise EventFormatError(line, "reason", f"unknown reason {reason!r}") from None
        if (pid, day) in seen:
            raise EventFormatError(line, "date", f"duplicate exclusion date {day.isoformat()} for {pid}")
        seen.add((pid, day))
        rows[pid].append((day, reason))
    return {pid: ExclusionCalendar.from_entries(pid, entries) for pid, entries in rows.items()}


def serialize_exclusions(calendars):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EXCLUSION_HEADER)
    for cal in sorted(calendars, key=lambda c: c.participant):
        for day in sorted(cal.excluded_days):
            w.writerow([cal.participant, day.isoformat(), cal.excluded_days[day].value])
    return buf.getvalue()


def apply_exclusions(events, calendar, tz_offset=0):
    """Drop events whose local date is on the calendar; order is preserved."""
    for e in events:
        if e.participant != calendar.participant:
            raise ValueError(f"event for participant {e.participant!r} checked against calendar of {calendar.participant!r}")
    if not calendar.excluded_days:
        return list(events)
    return [e for e in events if local_date(e.t_ms, tz_offset) not in calendar.excluded_days]


# ---------------------------------------------------------------------------
# day partitioning


@dataclass(frozen=True)
class DayStream:
    participant: str
    date: dt.date
    events: tuple
    tz_offset: int = 0

    def __post_init__(self):
        prev = None
        for e in self.events:
            if prev is not None and e.t_ms < prev:
                raise ValueError("day stream events must be sorted by timestamp")
            if local_date(e.t_ms, self.tz_offset) != self.date:
                raise ValueError(f"event at {format_timestamp(e.t_ms)} is not on local date {self.date}")
            prev = e.t_ms


def split_days(events, tz_offset=0):
    """Group events by (participant, local date); each stream is sorted (stable for ties)."""
    buckets = defaultdict(list)
    for e in events:
        buckets[(e.participant, local_date(e.t_ms, tz_offset))].append(e)
    out = []
    for (pid, day) in sorted(buckets):
        evs = sorted(buckets[(pid, day)], key=lambda e: e.t_ms)
        out.append(DayStream(pid, day, tuple(evs), tz_offset))
    return out


def by_participant(events):
    groups = defaultdict(list)
    for e in events:
        groups[e.participant].append(e)
    return dict(sorted(groups.items()))


# ---------------------------------------------------------------------------
# sensor-line geometry


@dataclass(frozen=True)
class LineGeometry:
    positions: tuple  # metres along the line, indexed by element

    def __post_init__(self):
        pos = tuple(float(p) for p in self.positions)
        if len(pos) < 2:
            raise ValueError("a sensor line needs at least two elements")
        if pos[0] < 0.0 or any(b <= a for a, b in zip(pos, pos[1:])):
            raise ValueError("line element positions must be >= 0 and strictly increasing")
        object.__setattr__(self, "positions", pos)

    def __len__(self):
        return len(self.positions)


def parse_line_geometry(data):
    reader = csv.reader(io.StringIO(_text(data)))
    _check_header(next(reader, None), GEOMETRY_HEADER, "line geometry CSV")
    entries = []
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            entries.append((int(row[0]), float(row[1])))
        except (ValueError, IndexError):
            raise EventFormatError(line, "position_m", f"bad geometry row {row!r}") from None
    entries.sort()
    if [i for i, _ in entries] != list(range(len(entries))):
        raise EventFormatError(1, "index", "geometry indices must be 0..k-1 without gaps")
    return LineGeometry(tuple(p for _, p in entries))


def serialize_line_geometry(geometry):
    lines = [",".join(GEOMETRY_HEADER)] + [f"{i},{p!r}" for i, p in enumerate(geometry.positions)]
    return "\n".join(lines) + "\n"
