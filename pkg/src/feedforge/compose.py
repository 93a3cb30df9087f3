"""Article store loading, recent-item selection and feed assembly.

The store is a tab-separated text file, one article per line::

    # articleid  articlename  authorname  description  lastupdate  final  disabled
    193	The Mechanics of RSS	Anita Rao	How feeds work	2013-06-30T15:21:36+0530	true	false

Tabs, newlines and backslashes inside text fields are written as ``\\t``,
``\\n`` and ``\\\\``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from . import rfc822
from .model import Guid, Item, SiteConfig
from .rfc822 import RssDateTime
from .xmlcodec import serialize_feed

FIELDS = ("articleid", "articlename", "authorname", "description",
          "lastupdate", "final", "disabled")


class RecordError(ValueError):
    def __init__(self, path, line, field, message):
        super().__init__(f"{path}:{line}: {field}: {message}")
        self.path = path
        self.line = line
        self.field = field


@dataclass(frozen=True)
class ArticleRecord:
    articleid: int
    articlename: str
    authorname: str
    description: str
    lastupdate: RssDateTime
    final: bool = True
    disabled: bool = False


@dataclass(frozen=True)
class RecordStore:
    records: tuple
    source_path: str = ""


_UNESCAPE = {"t": "\t", "n": "\n", "r": "\r", "\\": "\\"}


def unescape_field(s: str) -> str:
    out = []
    chars = iter(s)
    for c in chars:
        if c == "\\":
            nxt = next(chars, "")
            if nxt not in _UNESCAPE:
                raise ValueError(f"bad escape '\\{nxt}'")
            out.append(_UNESCAPE[nxt])
        else:
            out.append(c)
    return "".join(out)


def escape_field(s: str) -> str:
    return s.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n").replace("\r", "\\r")


def split_lines(text: str) -> list:
    """Split on LF only (CRLF tolerated); ``str.splitlines`` also breaks on U+001E, U+2028 and friends."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return [line[:-1] if line.endswith("\r") else line for line in lines]


def parse_lastupdate(text: str) -> RssDateTime:
    text = text.strip()
    if text[:1].isdigit():
        return rfc822.parse_compact(text)
    return rfc822.parse_rfc822(text)


def _parse_bool(text):
    if text == "true":
        return True
    if text == "false":
        return False
    raise ValueError(f"expected 'true' or 'false', got {text!r}")


def parse_records(text: str, path: str = "<records>") -> RecordStore:
    records = []
    seen = {}
    for lineno, line in enumerate(split_lines(text), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) < len(FIELDS):
            raise RecordError(path, lineno, FIELDS[len(parts)], "missing field")
        if len(parts) > len(FIELDS):
            raise RecordError(path, lineno, "line", f"expected {len(FIELDS)} fields, found {len(parts)}")
        values = {}
        for name, raw in zip(FIELDS, parts):
            try:
                if name == "articleid":
                    if not raw.isdigit() or int(raw) < 1:
                        raise ValueError(f"expected a positive integer, got {raw!r}")
                    values[name] = int(raw)
                elif name == "lastupdate":
                    values[name] = parse_lastupdate(raw)
                elif name in ("final", "disabled"):
                    values[name] = _parse_bool(raw)
                else:
                    values[name] = unescape_field(raw)
            except ValueError as exc:
                raise RecordError(path, lineno, name, str(exc)) from None
        if not values["articlename"].strip():
            raise RecordError(path, lineno, "articlename", "must not be empty")
        if values["articleid"] in seen:
            raise RecordError(path, lineno, "articleid",
                              f"duplicate id {values['articleid']} (first on line {seen[values['articleid']]})")
        seen[values["articleid"]] = lineno
        records.append(ArticleRecord(**values))
    return RecordStore(tuple(records), path)


def load_records(path) -> RecordStore:
    with open(path, encoding="utf-8") as fh:
        return parse_records(fh.read(), str(path))


def format_records(records) -> str:
    lines = ["# " + "\t".join(FIELDS)]
    for r in records:
        lines.append("\t".join([
            str(r.articleid), escape_field(r.articlename), escape_field(r.authorname),
            escape_field(r.description), rfc822.format_rfc822(r.lastupdate),
            "true" if r.final else "false", "true" if r.disabled else "false",
        ]))
    return "\n".join(lines) + "\n"


def select_recent(store: RecordStore, n: int) -> list:
    if n < 1:
        raise ValueError("n must be at least 1")
    eligible = [r for r in store.records if r.final and not r.disabled]
    eligible.sort(key=lambda r: (rfc822.to_utc_seconds(r.lastupdate), r.articleid), reverse=True)
    return eligible[:n]


def compose_item(rec: ArticleRecord, config: SiteConfig) -> Item:
    link = config.item_link_template.replace("{articleid}", str(rec.articleid))
    return Item(
        title=f"{rec.authorname} published an article {rec.articlename}",
        link=link,
        description=config.description_prefix + rec.description,
        pub_date=rec.lastupdate.in_zone(config.timezone),
        guid=Guid(link, True),
    )


def build_feed(store: RecordStore, config: SiteConfig, now: RssDateTime) -> bytes:
    channel = dataclasses.replace(config.channel, last_build_date=now.in_zone(config.timezone))
    items = [compose_item(r, config) for r in select_recent(store, config.max_items)]
    return serialize_feed(channel, items, config)

