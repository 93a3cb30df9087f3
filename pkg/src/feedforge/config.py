"""Flat ``key = value`` site configuration files.

Example::

    title = the JournalSite
    link = http://www.journalsite.tk
    description = Instant eJournal for Self Publishing Authors!
    language = en-us
    ttl = 240
    image.url = http://journalsite.tk/logo.png
    image.title = the JournalSite
    image.link = http://www.journalsite.tk
    namespace.dc = http://purl.org/dc/elements/1.1/
    item_link_template = http://www.journalsite.tk/viewarticle.asp?articleid={articleid}
    timezone = +0530
    text_mode.item.title = cdata

Lines starting with ``#`` are comments. A value may be wrapped in double
quotes to keep leading or trailing spaces.
"""

from __future__ import annotations

from .compose import split_lines
from .model import (
    Channel,
    ChannelImage,
    EmailSpec,
    LanguageCode,
    ModelError,
    SiteConfig,
    TEXT_KINDS,
    TextModes,
)
from .rfc822 import TimezoneSpec


class ConfigError(ValueError):
    def __init__(self, field, message, path=None):
        where = f"{path}: " if path else ""
        super().__init__(f"{where}{field}: {message}")
        self.field = field


_CHANNEL_KEYS = {"title", "link", "description", "language", "creator", "copyright",
                 "docs", "ttl", "image.url", "image.title", "image.link"}
_SITE_KEYS = {"item_link_template", "timezone", "max_items", "encoding", "text_mode",
              "abstract_prefix"}


def read_pairs(text, path=None):
    pairs = {}
    for lineno, line in enumerate(split_lines(text), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}", "expected 'key = value'", path)
        key, value = (s.strip() for s in stripped.split("=", 1))
        if len(value) >= 2 and value[0] == value[-1] == '"':
            value = value[1:-1]
        if key in pairs:
            raise ConfigError(key, f"set twice (again on line {lineno})", path)
        pairs[key] = value
    return pairs


def parse_site_config(text: str, path: str | None = None) -> SiteConfig:
    pairs = read_pairs(text, path)
    modes = {}
    namespaces = []
    for key, value in pairs.items():
        if key.startswith("namespace."):
            namespaces.append((key[len("namespace."):], value))
        elif key.startswith("text_mode."):
            kind = key[len("text_mode."):]
            if kind not in TEXT_KINDS:
                raise ConfigError(key, f"unknown element kind (one of {', '.join(TEXT_KINDS)})", path)
            modes[kind] = value
        elif key not in _CHANNEL_KEYS | _SITE_KEYS:
            raise ConfigError(key, "unknown setting", path)

    def get(key, convert=None, default=None):
        if key not in pairs:
            return default
        if convert is None:
            return pairs[key]
        try:
            return convert(pairs[key])
        except ValueError as exc:
            raise ConfigError(key, str(exc), path) from None

    def nonneg_int(text):
        if not text.isdigit():
            raise ValueError(f"expected a nonnegative integer, got {text!r}")
        return int(text)

    def flag(text):
        if text not in ("true", "false"):
            raise ValueError(f"expected true or false, got {text!r}")
        return text == "true"

    image = None
    if any(k.startswith("image.") for k in pairs):
        image = ChannelImage(get("image.url", default=""), get("image.title", default=""),
                             get("image.link", default=""))

    for required in ("title", "link", "description", "item_link_template"):
        if not pairs.get(required):
            raise ConfigError(required, "required setting is missing", path)

    channel = Channel(
        title=pairs["title"],
        link=pairs["link"],
        description=pairs["description"],
        language=get("language", LanguageCode.parse),
        copyright=get("copyright"),
        creator=get("creator", EmailSpec.parse),
        docs_url=get("docs"),
        image=image,
        ttl_minutes=get("ttl", nonneg_int),
        extra_namespaces=tuple(namespaces),
    )
    if "text_mode" in pairs:
        base = get("text_mode", lambda m: dict(TextModes.uniform(m).modes))
        modes = {**base, **modes}
    try:
        text_modes = TextModes(modes)
    except ModelError as exc:
        raise ConfigError("text_mode", str(exc), path) from None

    try:
        return SiteConfig(
            channel=channel,
            item_link_template=pairs["item_link_template"],
            timezone=get("timezone", TimezoneSpec.parse, TimezoneSpec.named("GMT")),
            max_items=get("max_items", nonneg_int, 10),
            encoding=get("encoding", str.lower, "utf-8"),
            text_mode=text_modes,
            description_prefix="ABSTRACT: " if get("abstract_prefix", flag, True) else "",
        )
    except ModelError as exc:
        field = str(exc).split(":", 1)[0]
        raise ConfigError(field, str(exc).split(":", 1)[-1].strip(), path) from None


def load_site_config(path) -> SiteConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_site_config(fh.read(), str(path))
