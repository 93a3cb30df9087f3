"""Rule-based feed checking with line/column diagnostics."""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import rfc822
from .model import EmailSpec, LanguageCode, ModelError, is_absolute_url
from .xmlcodec import (
    FeedEncodingError,
    FeedStructureError,
    FeedSyntaxError,
    ParsedFeed,
    parse_feed,
    declared_encoding,
    text_segments,
)

ERROR = "error"
WARNING = "warning"
INFO = "info"

# code -> (severity, remediation hint)
RULES = {
    "CH-REQ": (ERROR, "A channel needs a nonempty <title>, an absolute <link> and a <description>."),
    "DT-FMT": (ERROR, "Write dates as 'Sun, 30 Jun 2013 15:21:36 GMT' (or EST, or +0530)."),
    "DT-FUT": (WARNING, "Check the server clock and timezone arithmetic; the date is ahead of now."),
    "DT-WKD": (WARNING, "Compute the weekday from the date instead of writing it by hand."),
    "EM-FMT": (ERROR, "Use 'user@example.com' or 'user@example.com (Full Name)'."),
    "LG-FMT": (ERROR, "Use a language code such as 'en' or 'en-us', not a language name."),
    "TX-RAW": (ERROR, "Escape &, < and > as &#x26; &#x3C; &#x3E; or wrap the text in CDATA."),
    "TX-MIX": (WARNING, "Use either hex escaping or CDATA for an element, never both."),
    "TTL-NUM": (ERROR, "<ttl> is a whole number of minutes, e.g. 240."),
    "IMG-REQ": (ERROR, "<image> needs <url>, <title> and <link> children."),
    "CR-NS": (INFO, "Declare xmlns:dc and use <dc:creator>; bare <creator> is not RSS 2.0."),
    "XML-WF": (ERROR, "Fix the XML syntax at the reported position before anything else."),
}


@dataclass(frozen=True)
class ValidationFinding:
    rule: str
    severity: str
    line: int
    column: int
    message: str
    doc_hint: str = ""


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple = ()

    @property
    def counts(self):
        tally = {ERROR: 0, WARNING: 0, INFO: 0}
        for f in self.findings:
            tally[f.severity] += 1
        return tally[ERROR], tally[WARNING], tally[INFO]

    @property
    def errors(self):
        return self.counts[0]

    def rules(self):
        return [f.rule for f in self.findings]


def _finding(rule, line, column, message):
    severity, hint = RULES[rule]
    return ValidationFinding(rule, severity, line, column, message, hint)


def _report(findings):
    return ValidationReport(tuple(sorted(findings, key=lambda f: (f.line, f.column, f.rule, f.message))))


_NAME_START = re.compile(rb"[A-Za-z_:/!?]")
_REF = re.compile(rb"&(?:#x[0-9A-Fa-f]+|#[0-9]+|[A-Za-z_][\w.-]*);")


def _raw_char_at_failure(raw, index):
    """Return the stray ``&`` or ``<`` that broke parsing near *index*, if any."""
    if index is None:
        return None
    index = min(index, len(raw) - 1)
    lo = raw.rfind(b">", 0, index) + 1
    for i in range(index, lo - 1, -1):
        c = raw[i:i + 1]
        if c == b"&" and not _REF.match(raw, i):
            return i
        if c == b"<" and not _NAME_START.match(raw, i + 1):
            return i
    return None


def _enclosing_element_start(raw, index):
    """Offset of the start tag whose content holds *index*."""
    i = raw.rfind(b"<", 0, index)
    while i >= 0 and raw[i + 1:i + 2] in (b"/", b"!", b"?"):
        i = raw.rfind(b"<", 0, i)
    return max(i, 0)


def _syntax_finding(raw, exc, encoding):
    stray = _raw_char_at_failure(raw, exc.byte_index)
    if stray is None:
        return _finding("XML-WF", exc.line, exc.column, f"not well-formed: {exc.reason}")
    start = _enclosing_element_start(raw, stray)
    line = raw.count(b"\n", 0, start) + 1
    col = len(raw[raw.rfind(b"\n", 0, start) + 1:start].decode(encoding, errors="replace")) + 1
    char = raw[stray:stray + 1].decode("ascii")
    tag = re.match(rb"<([^\s>/]+)", raw[start:])
    name = tag.group(1).decode(encoding, errors="replace") if tag else "?"
    return _finding("TX-RAW", line, col, f"raw {char!r} in <{name}> text")


def validate(doc: bytes, now: rfc822.RssDateTime) -> ValidationReport:
    if not isinstance(doc, (bytes, bytearray)):
        raise TypeError("validate expects bytes")
    try:
        feed = parse_feed(doc)
    except FeedEncodingError as exc:
        return _report([_finding("XML-WF", 1, 1, str(exc))])
    except FeedSyntaxError as exc:
        try:
            encoding = declared_encoding(bytes(doc))
        except FeedEncodingError:
            encoding = "utf-8"
        return _report([_syntax_finding(bytes(doc), exc, encoding)])
    except FeedStructureError as exc:
        return _report([_finding("CH-REQ", exc.line, exc.column, str(exc))])
    return _report(check_parsed(feed, now))


def check_parsed(feed: ParsedFeed, now: rfc822.RssDateTime) -> list:
    out = []
    els = feed.elements
    channel = els["rss/channel"]

    def at(el, rule, message):
        out.append(_finding(rule, el.line, el.column, message))

    def child(parent, name):
        return next((c for c in parent.children if c.name == name), None)

    for name in ("title", "link", "description"):
        el = child(channel, name)
        if el is None:
            at(channel, "CH-REQ", f"channel is missing <{name}>")
        elif not el.text.strip():
            at(el, "CH-REQ", f"channel <{name}> is empty")
        elif name == "link" and not is_absolute_url(el.text.strip()):
            at(el, "CH-REQ", f"channel <link> {el.text.strip()!r} is not an absolute URL")

    items = [c for c in channel.children if c.name == "item"]
    for item in items:
        title, desc = child(item, "title"), child(item, "description")
        if not (title is not None and title.text.strip()) and not (desc is not None and desc.text.strip()):
            at(item, "CH-REQ", "item has neither a title nor a description")

    date_els = [child(channel, "lastBuildDate")] + [child(i, "pubDate") for i in items]
    for el in filter(None, date_els):
        text = el.text.strip()
        try:
            dt, notes = rfc822.parse_rfc822_with_notes(text)
        except rfc822.DateParseError as exc:
            at(el, "DT-FMT", f"<{el.name}> {text!r}: {exc.reason} "
                             f"(at {exc.token!r}, column {exc.column})")
            continue
        if rfc822.is_future(dt, now):
            at(el, "DT-FUT", f"<{el.name}> {text!r} is later than {rfc822.format_rfc822(now)}")
        for note in notes:
            at(el, "DT-WKD", f"<{el.name}>: {note}")

    email_els = [child(channel, "creator"), child(channel, "dc:creator")]
    email_els += [child(i, "author") for i in items]
    for el in filter(None, email_els):
        try:
            EmailSpec.parse(el.text)
        except ModelError:
            at(el, "EM-FMT", f"<{el.name}> {el.text.strip()!r} is not 'address' or 'address (name)'")

    lang = child(channel, "language")
    if lang is not None:
        try:
            LanguageCode.parse(lang.text)
        except ModelError:
            at(lang, "LG-FMT", f"<language> {lang.text.strip()!r} is not a language code")

    for el in els.values():
        if not el.is_leaf or el.inner_end <= el.inner_start:
            continue
        inner = feed.raw[el.inner_start:el.inner_end]
        if any(kind == "text" and b">" in data for kind, data in text_segments(inner)):
            at(el, "TX-RAW", f"raw '>' in <{el.name}> text")
    for note in feed.notes:
        if note.kind == "mix":
            out.append(_finding("TX-MIX", note.line, note.column, note.message))

    ttl = child(channel, "ttl")
    if ttl is not None and not re.fullmatch(r"\d+", ttl.text.strip()):
        at(ttl, "TTL-NUM", f"<ttl> {ttl.text.strip()!r} is not a nonnegative integer")

    image = child(channel, "image")
    if image is not None:
        for name in ("url", "title", "link"):
            sub = child(image, name)
            if sub is None or not sub.text.strip():
                at(sub if sub is not None else image, "IMG-REQ",
                   f"<image> is missing <{name}>" if sub is None else f"<image><{name}> is empty")

    bare = child(channel, "creator")
    if bare is not None and not feed.channel.has_namespace("dc"):
        at(bare, "CR-NS", "bare <creator> used without an xmlns:dc binding")
    return out


def render_report(report: ValidationReport, format: str = "text") -> str:
    lines = []
    for f in report.findings:
        if format == "machine-lines":
            msg = f.message.replace("\t", " ").replace("\n", " ")
            lines.append("\t".join([str(f.line), str(f.column), f.severity, f.rule, msg, f.doc_hint]))
        elif format == "text":
            lines.append(f"{f.line}:{f.column} {f.severity} {f.rule} {f.message}")
        else:
            raise ValueError(f"unknown report format {format!r}")
    errors, warnings, infos = report.counts
    if format == "machine-lines":
        lines.append(f"summary\terrors={errors}\twarnings={warnings}\tinfos={infos}")
    else:
        lines.append(f"{errors} errors, {warnings} warnings, {infos} infos")
    return "\n".join(lines) + "\n"
