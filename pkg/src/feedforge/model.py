"""In-memory RSS 2.0 document model and site configuration.

Value types (``LanguageCode``, ``EmailSpec``) check themselves on
construction.  ``Channel`` and ``Item`` do not, because the parser has to
represent broken feeds so the validator can report on them; use
:func:`channel_validate_local` / :func:`item_validate_local` before
serializing.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping
from urllib.parse import urlsplit

from .rfc822 import RssDateTime, TimezoneSpec

HEX_ESCAPE = "hex-escape"
CDATA = "cdata"
TEXT_MODES = (HEX_ESCAPE, CDATA)

ENCODINGS = ("utf-8", "iso-8859-1")

DC_NAMESPACE = "http://purl.org/dc/elements/1.1/"

# Every text-bearing element the serializer emits, keyed "<parent>.<tag>".
TEXT_KINDS = (
    "channel.title", "channel.link", "channel.description", "channel.language",
    "channel.creator", "channel.copyright", "channel.docs",
    "image.url", "image.title", "image.link",
    "item.title", "item.link", "item.description", "item.author",
    "item.comments", "item.guid",
)


class ModelError(ValueError):
    pass


_LANG = re.compile(r"([a-z]{2,3})(?:-([a-z]{2}))?")


@dataclass(frozen=True)
class LanguageCode:
    primary: str
    region: str | None = None

    def __post_init__(self):
        if not re.fullmatch(r"[a-z]{2,3}", self.primary or ""):
            raise ModelError(f"language primary subtag {self.primary!r} must be 2-3 lowercase letters")
        if self.region is not None and not re.fullmatch(r"[a-z]{2}", self.region):
            raise ModelError(f"language region {self.region!r} must be 2 lowercase letters")

    @classmethod
    def parse(cls, text: str) -> LanguageCode:
        # Tags are case-insensitive; "en-US" is normalized to "en-us".
        m = _LANG.fullmatch(text.strip().lower())
        if not m:
            raise ModelError(f"{text!r} is not a language code like 'en' or 'en-us'")
        return cls(m.group(1), m.group(2))

    def render(self) -> str:
        return f"{self.primary}-{self.region}" if self.region else self.primary

    def __str__(self):
        return self.render()


_ATEXT = r"[A-Za-z0-9!#$%&'*+/=?^_`{|}~-]+"
_LABEL = r"[A-Za-z0-9](?:[A-Za-z0-9-]*[A-Za-z0-9])?"
ADDR_SPEC = re.compile(rf"{_ATEXT}(?:\.{_ATEXT})*@{_LABEL}(?:\.{_LABEL})+")
_EMAIL_FORM = re.compile(r"(\S+)(?:\s+\(([^()\n]*)\))?")


@dataclass(frozen=True)
class EmailSpec:
    address: str
    display_name: str | None = None

    def __post_init__(self):
        if not ADDR_SPEC.fullmatch(self.address or ""):
            raise ModelError(f"{self.address!r} is not a valid email address")
        if self.display_name is not None:
            name = self.display_name
            if not name.strip() or name != name.strip() or any(c in name for c in "()\n\r"):
                raise ModelError(f"bad display name {name!r}")

    @classmethod
    def parse(cls, text: str) -> EmailSpec:
        """Accept ``addr`` or ``addr (Display Name)``."""
        m = _EMAIL_FORM.fullmatch(text.strip())
        if not m:
            raise ModelError(f"{text!r} is not 'address' or 'address (name)'")
        name = m.group(2)
        return cls(m.group(1), name.strip() if name is not None else None)

    def render(self) -> str:
        return f"{self.address} ({self.display_name})" if self.display_name else self.address

    def __str__(self):
        return self.render()


def is_absolute_url(text: str) -> bool:
    try:
        parts = urlsplit(text)
    except ValueError:
        return False
    return bool(parts.scheme and parts.netloc) and not any(c.isspace() for c in text)


@dataclass(frozen=True)
class ChannelImage:
    url: str
    title: str
    link: str


@dataclass(frozen=True)
class Enclosure:
    url: str
    length_bytes: int
    mime_type: str


@dataclass(frozen=True)
class Guid:
    value: str
    is_permalink: bool = True


@dataclass(frozen=True)
class Channel:
    title: str
    link: str
    description: str
    language: LanguageCode | None = None
    copyright: str | None = None
    creator: EmailSpec | None = None
    docs_url: str | None = None
    image: ChannelImage | None = None
    last_build_date: RssDateTime | None = None
    ttl_minutes: int | None = None
    extra_namespaces: tuple[tuple[str, str], ...] = ()

    def has_namespace(self, prefix: str) -> bool:
        return any(p == prefix for p, _ in self.extra_namespaces)


@dataclass(frozen=True)
class Item:
    title: str = ""
    link: str = ""
    description: str = ""
    author: EmailSpec | None = None
    comments_url: str | None = None
    enclosure: Enclosure | None = None
    guid: Guid | None = None
    pub_date: RssDateTime | None = None


def channel_validate_local(channel: Channel) -> list[str]:
    """Describe every broken channel constraint; empty means valid."""
    problems = []
    for name in ("title", "link", "description"):
        if not (getattr(channel, name) or "").strip():
            problems.append(f"{name}: required field is empty")
    if channel.link and channel.link.strip() and not is_absolute_url(channel.link):
        problems.append(f"link: {channel.link!r} is not an absolute URL")
    if channel.ttl_minutes is not None and channel.ttl_minutes < 0:
        problems.append(f"ttl_minutes: {channel.ttl_minutes} is negative")
    if channel.image is not None:
        for name in ("url", "title", "link"):
            if not (getattr(channel.image, name) or "").strip():
                problems.append(f"image.{name}: required field is empty")
    for prefix, uri in channel.extra_namespaces:
        if not re.fullmatch(r"[A-Za-z_][\w.-]*", prefix) or ":" in prefix:
            problems.append(f"extra_namespaces: bad prefix {prefix!r}")
        if not re.fullmatch(r"[A-Za-z][A-Za-z0-9+.-]*:[^\s\"<>\\^`{|}]*", uri):
            problems.append(f"extra_namespaces: {uri!r} is not a URI (prefix {prefix!r})")
    prefixes = [p for p, _ in channel.extra_namespaces]
    if len(set(prefixes)) != len(prefixes):
        problems.append("extra_namespaces: duplicate prefix")
    return problems


def item_validate_local(item: Item) -> list[str]:
    problems = []
    if not item.title.strip() and not item.description.strip():
        problems.append("title/description: at least one must be nonempty")
    if item.enclosure is not None:
        if not item.enclosure.url:
            problems.append("enclosure.url: required field is empty")
        if not item.enclosure.mime_type:
            problems.append("enclosure.mime_type: required field is empty")
        if item.enclosure.length_bytes < 0:
            problems.append("enclosure.length_bytes: negative")
    if item.guid is not None and not item.guid.value:
        problems.append("guid: empty value")
    return problems


def _default_modes():
    modes = {kind: HEX_ESCAPE for kind in TEXT_KINDS}
    # Item title/description carry free text from the store; wrap them.
    modes["item.title"] = modes["item.description"] = CDATA
    return modes


@dataclass(frozen=True)
class TextModes:
    """Which of hex-escape or CDATA each element kind is rendered with."""

    modes: Mapping[str, str] = field(default_factory=_default_modes)

    def __post_init__(self):
        merged = _default_modes()
        for kind, mode in dict(self.modes).items():
            if kind not in TEXT_KINDS:
                raise ModelError(f"text_mode: unknown element kind {kind!r}")
            if mode not in TEXT_MODES:
                raise ModelError(f"text_mode.{kind}: {mode!r} is not one of {TEXT_MODES}")
            merged[kind] = mode
        object.__setattr__(self, "modes", MappingProxyType(merged))

    @classmethod
    def uniform(cls, mode: str) -> TextModes:
        return cls({kind: mode for kind in TEXT_KINDS})

    def mode_for(self, kind: str) -> str:
        return self.modes.get(kind, HEX_ESCAPE)

    def __eq__(self, other):
        return isinstance(other, TextModes) and dict(self.modes) == dict(other.modes)

    def __hash__(self):
        return hash(tuple(sorted(self.modes.items())))


@dataclass(frozen=True)
class SiteConfig:
    channel: Channel
    item_link_template: str
    timezone: TimezoneSpec = TimezoneSpec.named("GMT")
    max_items: int = 10
    encoding: str = "utf-8"
    text_mode: TextModes = field(default_factory=TextModes)
    description_prefix: str = "ABSTRACT: "

    def __post_init__(self):
        if self.item_link_template.count("{articleid}") != 1:
            raise ModelError("item_link_template: must contain '{articleid}' exactly once")
        if not isinstance(self.max_items, int) or self.max_items < 1:
            raise ModelError(f"max_items: must be a positive integer, got {self.max_items!r}")
        if self.encoding not in ENCODINGS:
            raise ModelError(f"encoding: {self.encoding!r} is not one of {ENCODINGS}")
        problems = channel_validate_local(self.channel)
        if problems:
            raise ModelError("channel: " + "; ".join(problems))
