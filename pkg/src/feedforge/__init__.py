"""RSS 2.0 feed toolkit: build feeds from an article store, validate feeds
with line-numbered findings, and track unread items across fetches."""

__version__ = "0.1.0"

from .compose import build_feed, compose_item, load_records, select_recent  # noqa: E402
from .config import load_site_config, parse_site_config  # noqa: E402
from .rfc822 import RssDateTime, TimezoneSpec, format_rfc822, parse_rfc822  # noqa: E402
from .validator import render_report, validate  # noqa: E402
from .xmlcodec import escape_hex, parse_feed, serialize_feed, wrap_cdata  # noqa: E402

__all__ = [
    "RssDateTime", "TimezoneSpec", "build_feed", "compose_item", "escape_hex",
    "format_rfc822", "load_records", "load_site_config", "parse_feed",
    "parse_rfc822", "parse_site_config", "render_report", "select_recent",
    "serialize_feed", "validate", "wrap_cdata",
]
