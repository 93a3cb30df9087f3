"""Remote feed fetching and unread-item tracking.

Seen items are kept in a tab-separated state file::

    #last_fetch	http://example.com/feed.xml	Sun, 30 Jun 2013 15:21:36 GMT
    http://example.com/feed.xml	http://example.com/item/1
"""

from __future__ import annotations

import contextlib
import fcntl
import os
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import httpx

from . import __version__, rfc822
from .compose import escape_field, split_lines, unescape_field
from .rfc822 import RssDateTime
from .validator import ValidationReport, validate
from .xmlcodec import FeedError, ParsedFeed, parse_feed

MAX_REDIRECTS = 5
MAX_BODY_BYTES = 8 * 1024 * 1024
USER_AGENT = f"feedforge/{__version__}"


class StateError(Exception):
    pass


def item_key(item) -> str | None:
    """guid, else link, else title; None when the item has none of them."""
    if item.guid is not None and item.guid.value:
        return item.guid.value
    return item.link or item.title or None


@dataclass(frozen=True)
class FeedSeen:
    keys: frozenset = frozenset()
    last_fetch: RssDateTime | None = None


@dataclass(frozen=True)
class SeenState:
    feeds: Mapping[str, FeedSeen] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "feeds", MappingProxyType(dict(self.feeds)))

    def __eq__(self, other):
        return isinstance(other, SeenState) and dict(self.feeds) == dict(other.feeds)

    def keys_for(self, url) -> frozenset:
        seen = self.feeds.get(url)
        return seen.keys if seen else frozenset()

    @property
    def last_fetch(self) -> RssDateTime | None:
        """Most recent fetch across all feeds."""
        dates = [f.last_fetch for f in self.feeds.values() if f.last_fetch is not None]
        return max(dates, key=rfc822.to_utc_seconds, default=None)


@dataclass
class FetchResult:
    url: str
    status: int
    feed: ParsedFeed | None
    report: ValidationReport
    bytes_len: int = 0
    error: str | None = None

    @property
    def ok(self):
        return self.feed is not None


class _TooLarge(Exception):
    pass


def fetch_feed(url: str, timeout_seconds: float = 10.0, now: RssDateTime | None = None) -> FetchResult:
    """GET *url* once; every failure comes back as a value."""
    empty = ValidationReport()
    if not url.startswith(("http://", "https://")):
        return FetchResult(url, 0, None, empty, error=f"not an http(s) URL: {url}")
    try:
        with httpx.Client(follow_redirects=True, max_redirects=MAX_REDIRECTS,
                          timeout=timeout_seconds, headers={"User-Agent": USER_AGENT}) as client:
            with client.stream("GET", url) as resp:
                status = resp.status_code
                if status != 200:
                    return FetchResult(url, status, None, empty,
                                       error=f"HTTP {status} {resp.reason_phrase}")
                declared = resp.headers.get("content-length", "")
                if declared.isdigit() and int(declared) > MAX_BODY_BYTES:
                    raise _TooLarge
                chunks, size = [], 0
                for chunk in resp.iter_bytes():
                    size += len(chunk)
                    if size > MAX_BODY_BYTES:
                        raise _TooLarge
                    chunks.append(chunk)
                body = b"".join(chunks)
    except _TooLarge:
        return FetchResult(url, 200, None, empty, error=f"body exceeds {MAX_BODY_BYTES} bytes")
    except httpx.TooManyRedirects:
        return FetchResult(url, 0, None, empty, error=f"more than {MAX_REDIRECTS} redirects")
    except httpx.TimeoutException:
        return FetchResult(url, 0, None, empty, error=f"timed out after {timeout_seconds}s")
    except (httpx.HTTPError, OSError, ValueError) as exc:
        return FetchResult(url, 0, None, empty, error=f"{type(exc).__name__}: {exc}")

    report = validate(body, now or RssDateTime.now())
    try:
        feed = parse_feed(body)
    except FeedError as exc:
        return FetchResult(url, status, None, report, len(body), error=f"unparseable feed: {exc}")
    return FetchResult(url, status, feed, report, len(body))


def diff_unread(feed: ParsedFeed, state: SeenState, url: str, now: RssDateTime | None = None):
    """Return ``(new_items, updated_state)``; *state* is left untouched."""
    seen = state.keys_for(url)
    new_items = []
    current = set()
    for item in feed.items:
        key = item_key(item)
        if key is None:
            continue
        if key not in seen and key not in current:
            new_items.append(item)
        current.add(key)
    feeds = dict(state.feeds)
    feeds[url] = FeedSeen(seen | current, now or RssDateTime.now())
    return new_items, SeenState(feeds)


def poll_due(state: SeenState, ttl_minutes: int, now: RssDateTime, url: str | None = None) -> bool:
    if url is not None:
        seen = state.feeds.get(url)
        last = seen.last_fetch if seen else None
    else:
        last = state.last_fetch
    if last is None:
        return True
    return rfc822.to_utc_seconds(now) - rfc822.to_utc_seconds(last) >= ttl_minutes * 60


def dumps_state(state: SeenState) -> str:
    lines = []
    for url in sorted(state.feeds):
        seen = state.feeds[url]
        u = escape_field(url)
        if seen.last_fetch is not None:
            lines.append(f"#last_fetch\t{u}\t{rfc822.format_rfc822(seen.last_fetch)}")
        elif not seen.keys:
            lines.append(f"#feed\t{u}")
        lines.extend(f"{u}\t{escape_field(k)}" for k in sorted(seen.keys))
    return "".join(line + "\n" for line in lines)


def loads_state(text: str) -> SeenState:
    keys: dict = {}
    fetched: dict = {}
    for lineno, line in enumerate(split_lines(text), 1):
        if not line:
            continue
        parts = line.split("\t")
        try:
            if parts[0] == "#last_fetch" and len(parts) == 3:
                url = unescape_field(parts[1])
                fetched[url] = rfc822.parse_rfc822(parts[2])
                keys.setdefault(url, set())
            elif parts[0] == "#feed" and len(parts) == 2:
                keys.setdefault(unescape_field(parts[1]), set())
            elif len(parts) == 2 and not parts[0].startswith("#"):
                key = unescape_field(parts[1])
                if not key:
                    raise ValueError("empty item key")
                keys.setdefault(unescape_field(parts[0]), set()).add(key)
            else:
                raise ValueError(f"unrecognized line {line!r}")
        except ValueError as exc:
            raise StateError(f"state line {lineno}: {exc}") from None
    return SeenState({url: FeedSeen(frozenset(k), fetched.get(url)) for url, k in keys.items()})


def load_state(path) -> SeenState:
    try:
        with open(path, encoding="utf-8") as fh:
            return loads_state(fh.read())
    except FileNotFoundError:
        return SeenState()


def save_state(state: SeenState, path) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(dumps_state(state))
    os.replace(tmp, path)


@contextlib.contextmanager
def locked_state(path):
    """Hold an exclusive advisory lock on ``<path>.lock``; fail fast if taken."""
    lock_path = f"{path}.lock"
    fd = os.open(lock_path, os.O_CREAT | os.O_RDWR, 0o644)
    try:
        try:
            fcntl.flock(fd, fcntl.LOCK_EX | fcntl.LOCK_NB)
        except BlockingIOError:
            raise StateError(f"state file {path} is locked by another process") from None
        yield
    finally:
        os.close(fd)
