"""RSS 2.0 serialization and position-aware parsing."""

from __future__ import annotations

import bisect
import codecs
import re
from dataclasses import dataclass, field
from xml.parsers import expat

from . import rfc822
from .model import (
    CDATA,
    Channel,
    ChannelImage,
    EmailSpec,
    Enclosure,
    Guid,
    Item,
    LanguageCode,
    ModelError,
    SiteConfig,
    channel_validate_local,
    item_validate_local,
)


class FeedError(ValueError):
    pass


class FeedSyntaxError(FeedError):
    """The document is not well-formed XML."""

    def __init__(self, message, line, column, byte_index=None):
        super().__init__(f"line {line}, column {column}: {message}")
        self.reason = message
        self.line = line
        self.column = column
        self.byte_index = byte_index


class FeedStructureError(FeedError):
    def __init__(self, missing, message, line=1, column=1):
        super().__init__(message)
        self.missing = missing
        self.line = line
        self.column = column


class FeedEncodingError(FeedError):
    def __init__(self, message, element=None):
        super().__init__(message)
        self.element = element


# -- escaping ---------------------------------------------------------------

def escape_hex(s: str) -> str:
    # "&" first so the entities introduced below are not re-escaped.
    return s.replace("&", "&#x26;").replace("<", "&#x3C;").replace(">", "&#x3E;")


def wrap_cdata(s: str) -> str:
    return "<![CDATA[" + s.replace("]]>", "]]]]><![CDATA[>") + "]]>"


def _is_xml_char(c):
    o = ord(c)
    return (o in (0x9, 0xA, 0xD) or 0x20 <= o <= 0xD7FF
            or 0xE000 <= o <= 0xFFFD or 0x10000 <= o <= 0x10FFFF)


def _encodable(c, encoding):
    return encoding == "utf-8" or ord(c) < 0x100


def _charrefs(s, encoding):
    # CR would be normalized away by any XML parser; keep it as a reference.
    return "".join(f"&#x{ord(c):X};" if c == "\r" or not _encodable(c, encoding) else c
                   for c in s)


def render_text(text: str, mode: str, encoding: str, element: str) -> str:
    """Render one text node with exactly one of hex escaping or CDATA.

    A CDATA section cannot carry a carriage return or a character outside
    the document encoding, so such nodes are hex-escaped instead.
    """
    for c in text:
        if not _is_xml_char(c):
            raise FeedEncodingError(
                f"<{element}>: character U+{ord(c):04X} cannot appear in an XML document",
                element)
    if mode == CDATA and all(c != "\r" and _encodable(c, encoding) for c in text):
        return wrap_cdata(text)
    return _charrefs(escape_hex(text), encoding)


def _attr(value, encoding, element):
    for c in value:
        if not _is_xml_char(c):
            raise FeedEncodingError(
                f"<{element}>: character U+{ord(c):04X} cannot appear in an XML document",
                element)
    out = escape_hex(value).replace('"', "&#x22;")
    out = out.replace("\t", "&#x9;").replace("\n", "&#xA;")
    return '"' + _charrefs(out, encoding) + '"'


# -- serializer -------------------------------------------------------------

def serialize_feed(channel: Channel, items, config: SiteConfig) -> bytes:
    problems = channel_validate_local(channel)
    for i, item in enumerate(items):
        problems += [f"item[{i}].{p}" for p in item_validate_local(item)]
    if problems:
        raise ModelError("; ".join(problems))

    enc = config.encoding
    modes = config.text_mode
    lines = [f'<?xml version="1.0" encoding="{enc}"?>']

    ns = "".join(f" xmlns:{prefix}={_attr(uri, enc, 'rss')}"
                 for prefix, uri in channel.extra_namespaces)
    lines.append(f'<rss version="2.0"{ns}>')
    lines.append("  <channel>")

    def text_el(indent, tag, kind, value):
        body = render_text(value, modes.mode_for(kind), enc, tag)
        lines.append(f"{indent}<{tag}>{body}</{tag}>")

    ch = "    "
    text_el(ch, "title", "channel.title", channel.title)
    text_el(ch, "link", "channel.link", channel.link)
    text_el(ch, "description", "channel.description", channel.description)
    if channel.language is not None:
        text_el(ch, "language", "channel.language", channel.language.render())
    if channel.creator is not None:
        tag = "dc:creator" if channel.has_namespace("dc") else "creator"
        text_el(ch, tag, "channel.creator", channel.creator.render())
    if channel.copyright is not None:
        text_el(ch, "copyright", "channel.copyright", channel.copyright)
    if channel.image is not None:
        lines.append(ch + "<image>")
        text_el(ch + "  ", "url", "image.url", channel.image.url)
        text_el(ch + "  ", "title", "image.title", channel.image.title)
        text_el(ch + "  ", "link", "image.link", channel.image.link)
        lines.append(ch + "</image>")
    if channel.docs_url is not None:
        text_el(ch, "docs", "channel.docs", channel.docs_url)
    if channel.last_build_date is not None:
        lines.append(f"{ch}<lastBuildDate>{rfc822.format_rfc822(channel.last_build_date)}</lastBuildDate>")
    if channel.ttl_minutes is not None:
        lines.append(f"{ch}<ttl>{channel.ttl_minutes}</ttl>")

    it = ch + "  "
    for item in items:
        lines.append(ch + "<item>")
        if item.title:
            text_el(it, "title", "item.title", item.title)
        if item.link:
            text_el(it, "link", "item.link", item.link)
        if item.description:
            text_el(it, "description", "item.description", item.description)
        if item.pub_date is not None:
            lines.append(f"{it}<pubDate>{rfc822.format_rfc822(item.pub_date)}</pubDate>")
        if item.author is not None:
            text_el(it, "author", "item.author", item.author.render())
        if item.comments_url is not None:
            text_el(it, "comments", "item.comments", item.comments_url)
        if item.enclosure is not None:
            e = item.enclosure
            lines.append(f"{it}<enclosure url={_attr(e.url, enc, 'enclosure')} "
                         f'length="{e.length_bytes}" type={_attr(e.mime_type, enc, "enclosure")}/>')
        if item.guid is not None:
            perma = "true" if item.guid.is_permalink else "false"
            body = render_text(item.guid.value, modes.mode_for("item.guid"), enc, "guid")
            lines.append(f'{it}<guid isPermaLink="{perma}">{body}</guid>')
        lines.append(ch + "</item>")

    lines.append("  </channel>")
    lines.append("</rss>")
    text = "\n".join(lines) + "\n"
    try:
        return text.encode(enc)
    except UnicodeEncodeError as exc:  # pragma: no cover - render_text guards this
        raise FeedEncodingError(str(exc)) from None


# -- parser -----------------------------------------------------------------

@dataclass
class ParseNote:
    kind: str  # weekday | mix | unknown | value
    path: str
    line: int
    column: int
    message: str


@dataclass
class ElementInfo:
    path: str
    name: str
    attrs: dict
    line: int
    column: int
    start: int
    end: int = -1
    inner_start: int = -1
    inner_end: int = -1
    text: str = ""
    children: list = field(default_factory=list)

    @property
    def is_leaf(self):
        return not self.children


@dataclass
class ParsedFeed:
    channel: Channel
    items: list
    positions: dict
    notes: list
    elements: dict
    encoding: str
    raw: bytes = b""

    def element(self, path):
        return self.elements.get(path)

    def inner_bytes(self, path) -> bytes:
        el = self.elements[path]
        return self.raw[el.inner_start:el.inner_end]


_DECL = re.compile(rb"^(?:\xef\xbb\xbf)?\s*<\?xml[^>]*?encoding\s*=\s*[\"']([A-Za-z0-9._-]+)[\"']")


def declared_encoding(doc: bytes) -> str:
    m = _DECL.match(doc[:200])
    if not m:
        return "utf-8"
    name = m.group(1).decode("ascii")
    try:
        canonical = codecs.lookup(name).name
    except LookupError:
        raise FeedEncodingError(f"unknown declared encoding {name!r}") from None
    if canonical == "utf-8":
        return "utf-8"
    if canonical in ("iso8859-1", "latin-1"):
        return "iso-8859-1"
    raise FeedEncodingError(f"unsupported declared encoding {name!r} (use utf-8 or iso-8859-1)")


class _Locator:
    def __init__(self, raw, encoding):
        self.raw = raw
        self.encoding = encoding
        self.starts = [0] + [m.end() for m in re.finditer(rb"\n", raw)]

    def __call__(self, offset):
        i = bisect.bisect_right(self.starts, offset) - 1
        prefix = self.raw[self.starts[i]:offset]
        return i + 1, len(prefix.decode(self.encoding, errors="replace")) + 1


def _tag_end(raw, start):
    """Index just past the ``>`` closing the tag at *start*, honoring quotes."""
    quote = None
    i = start + 1
    n = len(raw)
    while i < n:
        c = raw[i]
        if quote:
            if c == quote:
                quote = None
        elif c in b"\"'":
            quote = c
        elif c == 0x3E:
            return i + 1
        i += 1
    return n


_SEGMENT = re.compile(rb"<!\[CDATA\[(.*?)\]\]>|<!--.*?-->|<\?.*?\?>", re.S)


def text_segments(inner: bytes):
    """Split raw element content into ``("text"|"cdata", bytes)`` pieces."""
    out = []
    pos = 0
    for m in _SEGMENT.finditer(inner):
        if m.start() > pos:
            out.append(("text", inner[pos:m.start()]))
        if m.group(0).startswith(b"<![CDATA["):
            out.append(("cdata", m.group(1)))
        pos = m.end()
    if pos < len(inner):
        out.append(("text", inner[pos:]))
    return out


_ANY_REF = re.compile(rb"&(?:#x[0-9A-Fa-f]+|#[0-9]+|[A-Za-z_][\w.-]*);")
_HEX_REF = re.compile(rb"&#x[0-9A-Fa-f]+;")


def mixes_escaping_and_cdata(inner: bytes) -> bool:
    segs = text_segments(inner)
    if not any(kind == "cdata" for kind, _ in segs):
        return False
    for kind, data in segs:
        if kind == "text" and _ANY_REF.search(data):
            return True
        if kind == "cdata" and _HEX_REF.search(data):
            return True
    return False


CHANNEL_FIELDS = {"title", "link", "description", "language", "creator", "dc:creator",
                  "copyright", "image", "docs", "lastBuildDate", "ttl", "item"}
ITEM_FIELDS = {"title", "link", "description", "pubDate", "author", "comments",
               "enclosure", "guid"}
IMAGE_FIELDS = {"url", "title", "link"}


def _raise_syntax(parser, exc, raw, locate):
    idx = parser.ErrorByteIndex
    if idx is None or idx < 0:
        idx = len(raw)
    line, col = locate(min(idx, len(raw)))
    raise FeedSyntaxError(expat.ErrorString(exc.code), line, col, idx) from None


def _build_tree(raw, encoding):
    locate = _Locator(raw, encoding)
    parser = expat.ParserCreate()
    parser.buffer_text = True
    parser.ordered_attributes = True
    stack = []
    chunks = []
    elements = {}
    root = []

    def start(name, attr_list):
        idx = parser.CurrentByteIndex
        attrs = dict(zip(attr_list[::2], attr_list[1::2]))
        parent = stack[-1] if stack else None
        if parent is None:
            path = name
        else:
            same = sum(1 for c in parent.children if c.name == name)
            if name == "item" and parent.name == "channel":
                path = f"{parent.path}/item[{same}]"
            else:
                path = f"{parent.path}/{name}" + (f"[{same}]" if same else "")
        line, col = locate(idx)
        el = ElementInfo(path, name, attrs, line, col, idx)
        tag_end = _tag_end(raw, idx)
        el.inner_start = tag_end
        if raw[tag_end - 2:tag_end] == b"/>":
            el.inner_end = el.end = tag_end
        if parent is not None:
            parent.children.append(el)
        else:
            root.append(el)
        elements[path] = el
        stack.append(el)
        chunks.append([])

    def end(name):
        el = stack.pop()
        if el.end < 0:
            idx = parser.CurrentByteIndex
            el.inner_end = idx
            el.end = _tag_end(raw, idx)
        el.text = "".join(chunks.pop())

    def chars(data):
        if chunks:
            chunks[-1].append(data)

    def doctype(*_):
        raise FeedSyntaxError("document type declarations are not supported",
                              *locate(parser.CurrentByteIndex), parser.CurrentByteIndex)

    parser.StartElementHandler = start
    parser.EndElementHandler = end
    parser.CharacterDataHandler = chars
    parser.StartDoctypeDeclHandler = doctype
    try:
        parser.Parse(raw, True)
    except expat.ExpatError as exc:
        _raise_syntax(parser, exc, raw, locate)
    return root[0], elements


_STRIPPED = {"link", "language", "creator", "dc:creator", "docs", "lastBuildDate",
             "pubDate", "ttl", "url", "author", "comments", "guid"}


def _text(el):
    if el is None:
        return None
    return el.text.strip() if el.name in _STRIPPED else el.text


def parse_feed(doc: bytes) -> ParsedFeed:
    if not isinstance(doc, (bytes, bytearray)):
        raise TypeError("parse_feed expects bytes")
    raw = bytes(doc)
    encoding = declared_encoding(raw)
    root, elements = _build_tree(raw, encoding)
    notes = []

    def note(kind, el, message):
        notes.append(ParseNote(kind, el.path, el.line, el.column, message))

    if root.name != "rss":
        raise FeedStructureError("rss", f"root element is <{root.name}>, expected <rss>",
                                 root.line, root.column)
    channel_el = next((c for c in root.children if c.name == "channel"), None)
    if channel_el is None:
        raise FeedStructureError("channel", "<rss> has no <channel> element",
                                 root.line, root.column)

    for el in elements.values():
        if el.is_leaf and mixes_escaping_and_cdata(raw[el.inner_start:el.inner_end]):
            note("mix", el, f"<{el.name}> mixes entity escaping with a CDATA section")

    def first(parent, name):
        return next((c for c in parent.children if c.name == name), None)

    def parse_date(el):
        if el is None:
            return None
        try:
            dt, date_notes = rfc822.parse_rfc822_with_notes(_text(el))
        except rfc822.DateParseError as exc:
            note("value", el, f"<{el.name}>: {exc}")
            return None
        for msg in date_notes:
            note("weekday", el, msg)
        return dt

    def typed(el, parse):
        if el is None:
            return None
        try:
            return parse(_text(el))
        except ValueError as exc:
            note("value", el, f"<{el.name}>: {exc}")
            return None

    for child in channel_el.children:
        if child.name not in CHANNEL_FIELDS:
            note("unknown", child, f"unmodeled channel element <{child.name}>")

    image = None
    image_el = first(channel_el, "image")
    if image_el is not None:
        image = ChannelImage(*(_text(first(image_el, n)) or "" for n in ("url", "title", "link")))

    ttl_el = first(channel_el, "ttl")
    ttl = None
    if ttl_el is not None:
        if re.fullmatch(r"\d+", _text(ttl_el)):
            ttl = int(_text(ttl_el))
        else:
            note("value", ttl_el, f"<ttl>: {_text(ttl_el)!r} is not a nonnegative integer")

    namespaces = tuple((k[len("xmlns:"):], v) for k, v in root.attrs.items()
                       if k.startswith("xmlns:"))
    creator_el = first(channel_el, "dc:creator") or first(channel_el, "creator")
    copyright_el = first(channel_el, "copyright")
    docs_el = first(channel_el, "docs")

    channel = Channel(
        title=_text(first(channel_el, "title")) or "",
        link=_text(first(channel_el, "link")) or "",
        description=_text(first(channel_el, "description")) or "",
        language=typed(first(channel_el, "language"), LanguageCode.parse),
        copyright=_text(copyright_el),
        creator=typed(creator_el, EmailSpec.parse),
        docs_url=_text(docs_el),
        image=image,
        last_build_date=parse_date(first(channel_el, "lastBuildDate")),
        ttl_minutes=ttl,
        extra_namespaces=namespaces,
    )

    items = []
    for item_el in (c for c in channel_el.children if c.name == "item"):
        for child in item_el.children:
            if child.name not in ITEM_FIELDS:
                note("unknown", child, f"unmodeled item element <{child.name}>")
        enclosure = None
        enc_el = first(item_el, "enclosure")
        if enc_el is not None:
            length = enc_el.attrs.get("length", "0").strip()
            if not length.isdigit():
                note("value", enc_el, f"<enclosure>: length {length!r} is not an integer")
                length = "0"
            enclosure = Enclosure(enc_el.attrs.get("url", ""), int(length),
                                  enc_el.attrs.get("type", ""))
        guid = None
        guid_el = first(item_el, "guid")
        if guid_el is not None:
            perma = guid_el.attrs.get("isPermaLink", "true").strip().lower() != "false"
            guid = Guid(_text(guid_el), perma)
        comments_el = first(item_el, "comments")
        items.append(Item(
            title=_text(first(item_el, "title")) or "",
            link=_text(first(item_el, "link")) or "",
            description=_text(first(item_el, "description")) or "",
            author=typed(first(item_el, "author"), EmailSpec.parse),
            comments_url=_text(comments_el),
            enclosure=enclosure,
            guid=guid,
            pub_date=parse_date(first(item_el, "pubDate")),
        ))

    positions = {path: (el.line, el.column) for path, el in elements.items()}
    return ParsedFeed(channel, items, positions, notes, elements, encoding, raw)
