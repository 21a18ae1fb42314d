"""Room-to-room transition times from per-day area-motion streams."""

import csv
import datetime as dt
import io
from collections import Counter
from dataclasses import dataclass

from .ingest import AreaMotion, _text

DEFAULT_DWELL_CAP = 60.0
DEFAULT_MIN_COUNT = 50
TRANSITION_HEADER = ["participant", "date", "from", "to", "seconds"]


@dataclass(frozen=True, slots=True)
class TransitionRecord:
    participant: str
    date: dt.date
    from_room: str
    to_room: str
    duration: float  # seconds

    def __post_init__(self):
        if self.from_room == self.to_room:
            raise ValueError(f"transition must change room, got {self.from_room!r} twice")
        if not self.duration > 0.0:
            raise ValueError(f"transition duration must be positive, got {self.duration}")

    @property
    def pair(self):
        return (self.from_room, self.to_room)


class RoomPairCensus(Counter):
    """Observation count per ordered ``(from_room, to_room)`` pair."""

    def transposed(self):
        return RoomPairCensus({(b, a): n for (a, b), n in self.items()})


def extract_transitions(day):
    """One record per change of room between consecutive area-motion firings.

    Line and clinic events are skipped without breaking adjacency. Firings in
    two rooms at the same millisecond produce no record.
    """
    out = []
    prev_room = None
    prev_ms = 0
    for e in day.events:
        kind = e.kind
        if not isinstance(kind, AreaMotion):
            continue
        room = kind.room
        if prev_room is not None and room != prev_room and e.t_ms > prev_ms:
            out.append(TransitionRecord(day.participant, day.date, prev_room, room, (e.t_ms - prev_ms) / 1000.0))
        prev_room = room
        prev_ms = e.t_ms
    return out


def censor_dwell(records, cap=DEFAULT_DWELL_CAP):
    """Drop records longer than ``cap`` seconds (likely dominated by dwell time)."""
    if not cap > 0:
        raise ValueError(f"dwell cap must be positive, got {cap}")
    return [r for r in records if r.duration <= cap]


def census(records):
    return RoomPairCensus(r.pair for r in records)


def filter_rare_pairs(records, pair_census=None, min_count=DEFAULT_MIN_COUNT):
    """Keep records whose ordered pair was observed strictly more than ``min_count`` times."""
    if pair_census is None:
        pair_census = census(records)
    return [r for r in records if pair_census.get(r.pair, 0) > min_count]


def transitions_from_days(days, cap=DEFAULT_DWELL_CAP, min_count=DEFAULT_MIN_COUNT):
    """Extract, censor and count-filter; the census is taken per participant after censoring."""
    by_pid = {}
    for day in days:
        by_pid.setdefault(day.participant, []).extend(extract_transitions(day))
    out = []
    for pid in sorted(by_pid):
        kept = censor_dwell(by_pid[pid], cap)
        out.extend(filter_rare_pairs(kept, census(kept), min_count))
    return out


def write_transitions_csv(records, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(TRANSITION_HEADER)
    for r in records:
        w.writerow([r.participant, r.date.isoformat(), r.from_room, r.to_room, repr(r.duration)])


def read_transitions_csv(data):
    reader = csv.reader(io.StringIO(_text(data)))
    header = next(reader, None)
    if header is None:
        return []
    if header != TRANSITION_HEADER:
        raise ValueError(f"transitions CSV header must be {','.join(TRANSITION_HEADER)}, got {','.join(header)}")
    out = []
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            pid, day, a, b, secs = row
            out.append(TransitionRecord(pid, dt.date.fromisoformat(day), a, b, float(secs)))
        except ValueError as exc:
            raise ValueError(f"line {line}: {exc}") from None
    return out
