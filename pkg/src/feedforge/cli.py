"""``feedforge`` command line: build, validate, fetch, serve."""

from __future__ import annotations

import argparse
import socket
import sys

from . import __version__
from .aggregator import (
    StateError,
    diff_unread,
    fetch_feed,
    load_state,
    locked_state,
    save_state,
)
from .compose import RecordError, build_feed, load_records
from .config import ConfigError, load_site_config
from .rfc822 import DateParseError, RssDateTime, format_rfc822, parse_rfc822
from .validator import render_report, validate
from .xmlcodec import FeedError

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_FAILURE = 2
EXIT_NOTHING_NEW = 3


def _now_arg(text):
    try:
        dt = parse_rfc822(text)
    except DateParseError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    if dt.tz.kind != "offset":
        raise argparse.ArgumentTypeError("--now needs a numeric zone such as +0000 or +0530")
    return dt


def _fail(message):
    print(f"feedforge: {message}", file=sys.stderr)
    return EXIT_FAILURE


def cmd_build(args):
    try:
        config = load_site_config(args.config)
    except OSError as exc:
        return _fail(f"cannot read config {args.config}: {exc.strerror}")
    except (ConfigError, ValueError) as exc:
        return _fail(f"config error: {exc}")
    try:
        store = load_records(args.records)
    except OSError as exc:
        return _fail(f"cannot read records {args.records}: {exc.strerror}")
    except RecordError as exc:
        return _fail(f"record error: {exc}")
    now = args.now or RssDateTime.now(config.timezone)
    try:
        body = build_feed(store, config, now)
    except (FeedError, ValueError) as exc:
        return _fail(f"cannot serialize feed: {exc}")
    if args.out in (None, "-"):
        sys.stdout.buffer.write(body)
        sys.stdout.flush()
    else:
        try:
            with open(args.out, "wb") as fh:
                fh.write(body)
        except OSError as exc:
            return _fail(f"cannot write {args.out}: {exc.strerror}")
    return EXIT_OK


def cmd_validate(args):
    try:
        if args.feed in (None, "-"):
            doc = sys.stdin.buffer.read()
        else:
            with open(args.feed, "rb") as fh:
                doc = fh.read()
    except OSError as exc:
        return _fail(f"cannot read {args.feed}: {exc.strerror}")
    report = validate(doc, args.now or RssDateTime.now())
    sys.stdout.write(render_report(report, "machine-lines" if args.machine else "text"))
    return EXIT_INVALID if report.errors else EXIT_OK


def cmd_fetch(args):
    now = args.now or RssDateTime.now()
    try:
        with locked_state(args.state):
            result = fetch_feed(args.url, args.timeout, now)
            if not result.ok:
                return _fail(f"fetch {args.url} failed: {result.error}")
            new_items, updated = diff_unread(result.feed, load_state(args.state), args.url, now)
            for item in new_items:
                date = format_rfc822(item.pub_date) if item.pub_date else ""
                fields = (item.title, item.link, date)
                print("\t".join(" ".join(f.split()) for f in fields))
            if args.mark_read:
                save_state(updated, args.state)
    except (StateError, OSError) as exc:
        return _fail(str(exc))
    return EXIT_OK if new_items else EXIT_NOTHING_NEW


def _parse_bind(text):
    host, _, port = text.rpartition(":")
    if not port.isdigit():
        raise argparse.ArgumentTypeError(f"expected HOST:PORT, got {text!r}")
    return host or "127.0.0.1", int(port)


def cmd_serve(args):
    import uvicorn

    from .service import create_app

    host, port = args.bind
    try:
        app = create_app(args.config, args.records, args.now)
        load_records(args.records)
    except OSError as exc:
        return _fail(f"cannot read {exc.filename}: {exc.strerror}")
    except (ConfigError, RecordError, ValueError) as exc:
        return _fail(str(exc))
    try:
        # uvicorn reports bind failures by exiting; probe first for a clear message.
        with socket.create_server((host, port)):
            pass
    except OSError as exc:
        return _fail(f"cannot bind {host}:{port}: {exc.strerror}")
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except SystemExit:
        return _fail(f"server on {host}:{port} stopped")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="feedforge", description=__doc__)
    parser.add_argument("--version", action="version", version=f"feedforge {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    now_help = "fixed current time, e.g. 'Sun, 30 Jun 2013 15:21:36 +0530'"

    p = sub.add_parser("build", help="generate the feed from the article store")
    p.add_argument("--config", required=True)
    p.add_argument("--records", required=True)
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--now", type=_now_arg, help=now_help)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("validate", help="check a feed and report findings by line")
    p.add_argument("feed", nargs="?", help="feed file (default: stdin)")
    p.add_argument("--now", type=_now_arg, help=now_help)
    p.add_argument("--machine", action="store_true", help="tab-separated output")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("fetch", help="fetch a feed and list unread items")
    p.add_argument("url")
    p.add_argument("--state", required=True)
    p.add_argument("--list-new", action="store_true", help="print new items (the default)")
    p.add_argument("--mark-read", action="store_true", help="record listed items as read")
    p.add_argument("--now", type=_now_arg, help=now_help)
    p.add_argument("--timeout", type=float, default=10.0)
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("serve", help="serve the feed over HTTP at /feed.xml")
    p.add_argument("--config", required=True)
    p.add_argument("--records", required=True)
    p.add_argument("--bind", type=_parse_bind, default=("127.0.0.1", 8080))
    p.add_argument("--now", type=_now_arg, help=now_help)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_FAILURE if exc.code else EXIT_OK
    return args.func(args)
