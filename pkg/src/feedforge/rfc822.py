"""RFC-822 style timestamps as used in RSS ``pubDate`` and ``lastBuildDate``.

Three shapes are accepted::

    Sun, 30 Jun 2013 15:21:36 GMT
    Sun, 30 Jun 2013 15:21:36 EST
    Sun, 30 Jun 2013 15:21:36 +0530

Day, hour, minute and second are always two digits.
"""

from __future__ import annotations

import calendar
import datetime as _dt
import re
import time
from dataclasses import dataclass

WEEKDAYS = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")
MONTHS = ("Jan", "Feb", "Mar", "Apr", "May", "Jun",
          "Jul", "Aug", "Sep", "Oct", "Nov", "Dec")

NAMED_ZONES = {
    "GMT": 0, "UT": 0, "Z": 0,
    "EST": -300, "EDT": -240,
    "CST": -360, "CDT": -300,
    "MST": -420, "MDT": -360,
    "PST": -480, "PDT": -420,
}

MAX_OFFSET = 14 * 60
MIN_YEAR, MAX_YEAR = 1970, 9999

_EPOCH = _dt.datetime(1970, 1, 1)


class DateParseError(ValueError):
    """Raised for text that is not one of the accepted date shapes."""

    def __init__(self, message, token="", column=1):
        super().__init__(f"{message} (token {token!r} at column {column})")
        self.reason = message
        self.token = token
        self.column = column


@dataclass(frozen=True)
class TimezoneSpec:
    """Either a named zone from the fixed table or a signed minute offset."""

    kind: str  # "named" | "offset"
    name: str | None = None
    offset_minutes: int = 0

    def __post_init__(self):
        if self.kind == "named":
            if self.name not in NAMED_ZONES:
                raise ValueError(f"unknown zone name {self.name!r}")
            object.__setattr__(self, "offset_minutes", NAMED_ZONES[self.name])
        elif self.kind == "offset":
            if self.name is not None:
                raise ValueError("offset zones carry no name")
            if abs(self.offset_minutes) > MAX_OFFSET:
                raise ValueError(f"offset {self.offset_minutes} exceeds +/-{MAX_OFFSET} minutes")
        else:
            raise ValueError(f"unknown zone kind {self.kind!r}")

    @classmethod
    def named(cls, name: str) -> TimezoneSpec:
        return cls("named", name)

    @classmethod
    def offset(cls, minutes: int) -> TimezoneSpec:
        return cls("offset", None, minutes)

    @classmethod
    def parse(cls, text: str) -> TimezoneSpec:
        if text in NAMED_ZONES:
            return cls.named(text)
        m = re.fullmatch(r"([+-])(\d{2})(\d{2})", text)
        if not m:
            raise ValueError(f"unknown zone {text!r}")
        hours, minutes = int(m.group(2)), int(m.group(3))
        if minutes >= 60:
            raise ValueError(f"bad offset minutes in {text!r}")
        total = hours * 60 + minutes
        return cls.offset(-total if m.group(1) == "-" else total)

    def render(self) -> str:
        if self.kind == "named":
            return self.name
        sign = "-" if self.offset_minutes < 0 else "+"
        hours, minutes = divmod(abs(self.offset_minutes), 60)
        return f"{sign}{hours:02d}{minutes:02d}"

    def __str__(self):
        return self.render()


GMT = TimezoneSpec.named("GMT")


@dataclass(frozen=True)
class RssDateTime:
    year: int
    month: int
    day: int
    hour: int
    minute: int
    second: int
    tz: TimezoneSpec = GMT

    def __post_init__(self):
        if not MIN_YEAR <= self.year <= MAX_YEAR:
            raise ValueError(f"year {self.year} outside {MIN_YEAR}..{MAX_YEAR}")
        if not 1 <= self.month <= 12:
            raise ValueError(f"month {self.month} out of range")
        if not 1 <= self.day <= calendar.monthrange(self.year, self.month)[1]:
            raise ValueError(f"day {self.day} invalid for {self.year}-{self.month:02d}")
        if not (0 <= self.hour <= 23 and 0 <= self.minute <= 59 and 0 <= self.second <= 59):
            raise ValueError(f"time {self.hour}:{self.minute}:{self.second} out of range")

    @classmethod
    def from_utc_seconds(cls, seconds: int, tz: TimezoneSpec = GMT) -> RssDateTime:
        try:
            local = _EPOCH + _dt.timedelta(seconds=seconds + tz.offset_minutes * 60)
        except OverflowError:
            raise ValueError("instant is outside the supported year range") from None
        return cls(local.year, local.month, local.day,
                   local.hour, local.minute, local.second, tz)

    @classmethod
    def now(cls, tz: TimezoneSpec = GMT) -> RssDateTime:
        return cls.from_utc_seconds(int(time.time()), tz)

    def in_zone(self, tz: TimezoneSpec) -> RssDateTime:
        """The same instant expressed in another zone."""
        return RssDateTime.from_utc_seconds(to_utc_seconds(self), tz)

    def weekday(self) -> int:
        """0 = Monday."""
        return _dt.date(self.year, self.month, self.day).weekday()

    def __str__(self):
        return format_rfc822(self)


def pad2(n: int) -> str:
    if not 0 <= n <= 99:
        raise ValueError(f"pad2 expects 0..99, got {n}")
    return "0" + str(n) if n < 10 else str(n)


def format_rfc822(dt: RssDateTime) -> str:
    return (f"{WEEKDAYS[dt.weekday()]}, {pad2(dt.day)} {MONTHS[dt.month - 1]} "
            f"{dt.year:04d} {pad2(dt.hour)}:{pad2(dt.minute)}:{pad2(dt.second)} "
            f"{dt.tz.render()}")


_TOKEN = re.compile(r"\S+")
_TIME = re.compile(r"(\d{2}):(\d{2}):(\d{2})")


def parse_rfc822_with_notes(s: str) -> tuple[RssDateTime, list[str]]:
    """Parse *s*, returning the instant and any non-fatal notes.

    The weekday token is checked for shape only; the date comes from the
    day, month and year fields. A weekday that disagrees with the calendar
    is reported as a note rather than an error.
    """
    tokens = [(m.group(), m.start() + 1) for m in _TOKEN.finditer(s)]
    if not tokens:
        raise DateParseError("empty date", "", 1)
    names = ("weekday", "day", "month", "year", "time", "zone")
    for (tok, col), what in zip(tokens, names):
        if what == "weekday" and not re.fullmatch(r"[A-Za-z]{3},", tok):
            raise DateParseError("expected three-letter weekday followed by a comma", tok, col)
    if len(tokens) > len(names):
        raise DateParseError("unexpected trailing field", *tokens[len(names)])
    if len(tokens) < len(names):
        raise DateParseError(f"missing {names[len(tokens)]} field", "", len(s.rstrip()) + 1)

    (wd, wd_col), (day, day_col), (mon, mon_col), (year, year_col), \
        (hms, hms_col), (zone, zone_col) = tokens

    if not re.fullmatch(r"\d{2}", day):
        raise DateParseError("day must be two digits", day, day_col)
    month = next((i + 1 for i, name in enumerate(MONTHS) if name.lower() == mon.lower()), None)
    if month is None:
        raise DateParseError("unknown month name", mon, mon_col)
    if not re.fullmatch(r"\d{4}", year):
        raise DateParseError("year must be four digits", year, year_col)
    m = _TIME.fullmatch(hms)
    if not m:
        raise DateParseError("time must be HH:MM:SS with two-digit fields", hms, hms_col)
    try:
        tz = TimezoneSpec.parse(zone)
    except ValueError:
        raise DateParseError("unknown zone", zone, zone_col) from None
    try:
        dt = RssDateTime(int(year), month, int(day),
                         int(m.group(1)), int(m.group(2)), int(m.group(3)), tz)
    except ValueError as exc:
        msg = str(exc)
        culprit = ((year, year_col) if msg.startswith("year")
                   else (day, day_col) if msg.startswith("day")
                   else (hms, hms_col))
        raise DateParseError(msg, *culprit) from None

    notes = []
    expected = WEEKDAYS[dt.weekday()]
    if wd[:3].lower() != expected.lower():
        notes.append(f"weekday {wd[:3]!r} does not match {dt.year:04d}-{dt.month:02d}-{dt.day:02d} "
                     f"(a {expected})")
    return dt, notes


def parse_rfc822(s: str) -> RssDateTime:
    return parse_rfc822_with_notes(s)[0]


def parse_compact(s: str) -> RssDateTime:
    """Parse ``YYYY-MM-DDThh:mm:ss+hhmm``."""
    m = re.fullmatch(r"(\d{4})-(\d{2})-(\d{2})T(\d{2}):(\d{2}):(\d{2})([+-]\d{4})", s.strip())
    if not m:
        raise DateParseError("expected YYYY-MM-DDThh:mm:ss+hhmm", s, 1)
    tz = TimezoneSpec.parse(m.group(7))
    return RssDateTime(*(int(g) for g in m.groups()[:6]), tz)


def to_utc_seconds(dt: RssDateTime) -> int:
    local = _dt.datetime(dt.year, dt.month, dt.day, dt.hour, dt.minute, dt.second)
    return (local - _EPOCH) // _dt.timedelta(seconds=1) - dt.tz.offset_minutes * 60


def to_utc_minutes(dt: RssDateTime) -> int:
    """Whole minutes since 1970-01-01 00:00 UTC (floored)."""
    return to_utc_seconds(dt) // 60


def is_future(dt: RssDateTime, now: RssDateTime) -> bool:
    return to_utc_seconds(dt) > to_utc_seconds(now)
