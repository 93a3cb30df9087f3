import threading
import time

import pytest
from hypothesis import given, settings, strategies as st

from feedforge.aggregator import (
    MAX_BODY_BYTES,
    USER_AGENT,
    FeedSeen,
    SeenState,
    StateError,
    diff_unread,
    dumps_state,
    fetch_feed,
    item_key,
    load_state,
    loads_state,
    locked_state,
    poll_due,
    save_state,
)
from feedforge.model import Guid, Item
from feedforge.rfc822 import RssDateTime, TimezoneSpec, to_utc_seconds
from feedforge.xmlcodec import parse_feed

from conftest import free_port
from oracles import random_datetime

NOW = RssDateTime(2013, 6, 30, 18, 0, 0, TimezoneSpec.offset(330))
URL = "http://example.com/feed.xml"


def reply(body: bytes, status=200, headers=()):
    def handler(h):
        h.send_response(status)
        for k, v in headers:
            h.send_header(k, v)
        h.send_header("Content-Length", str(len(body)))
        h.end_headers()
        h.wfile.write(body)
    return handler


def redirect(to):
    def handler(h):
        h.send_response(302)
        h.send_header("Location", to)
        h.send_header("Content-Length", "0")
        h.end_headers()
    return handler


def test_fetch_live_feed(live_feed):
    result = fetch_feed(live_feed.url + "/feed.xml", now=NOW)
    assert result.ok and result.status == 200
    assert result.feed.channel.title == "the JournalSite"
    assert len(result.feed.items) == 10
    assert result.report.errors == 0


def test_fetch_404(live_feed):
    result = fetch_feed(live_feed.url + "/missing.xml", now=NOW)
    assert not result.ok and result.status == 404
    assert "404" in result.error


def test_fetch_non_xml(scripted_server):
    scripted_server.routes["/page"] = reply(b"<html><body>hello<br></body></html>")
    result = fetch_feed(scripted_server.url + "/page", now=NOW)
    assert result.status == 200 and result.feed is None
    assert "XML-WF" in result.report.rules()


def test_fetch_follows_three_redirects(scripted_server, golden_bytes):
    routes = scripted_server.routes
    routes["/a"] = redirect("/b")
    routes["/b"] = redirect("/c")
    routes["/c"] = redirect("/feed")
    routes["/feed"] = reply(golden_bytes)
    result = fetch_feed(scripted_server.url + "/a", now=NOW)
    assert result.ok and len(result.feed.items) == 10


def test_fetch_redirect_loop_is_bounded(scripted_server):
    scripted_server.routes["/loop"] = redirect("/loop")
    result = fetch_feed(scripted_server.url + "/loop", now=NOW)
    assert not result.ok and "redirect" in result.error


def test_fetch_six_redirects_refused(scripted_server, golden_bytes):
    for i in range(6):
        scripted_server.routes[f"/r{i}"] = redirect(f"/r{i + 1}")
    scripted_server.routes["/r6"] = reply(golden_bytes)
    assert not fetch_feed(scripted_server.url + "/r0", now=NOW).ok
    assert fetch_feed(scripted_server.url + "/r1", now=NOW).ok


def test_fetch_timeout(scripted_server):
    release = threading.Event()

    def slow(h):
        release.wait(5)
        reply(b"late")(h)

    scripted_server.routes["/slow"] = slow
    started = time.monotonic()
    result = fetch_feed(scripted_server.url + "/slow", timeout_seconds=0.3, now=NOW)
    release.set()
    assert not result.ok and "timed out" in result.error
    assert time.monotonic() - started < 3


def test_fetch_oversize_declared(scripted_server):
    def big(h):
        h.send_response(200)
        h.send_header("Content-Length", str(MAX_BODY_BYTES + 1))
        h.end_headers()
    scripted_server.routes["/big"] = big
    result = fetch_feed(scripted_server.url + "/big", now=NOW)
    assert not result.ok and "exceeds" in result.error


def test_fetch_oversize_streamed(scripted_server):
    def big(h):
        h.send_response(200)
        h.end_headers()
        chunk = b"x" * 65536
        try:
            for _ in range(MAX_BODY_BYTES // len(chunk) + 2):
                h.wfile.write(chunk)
        except OSError:
            pass
    scripted_server.routes["/big"] = big
    result = fetch_feed(scripted_server.url + "/big", now=NOW)
    assert not result.ok and "exceeds" in result.error


def test_fetch_connection_refused():
    result = fetch_feed(f"http://127.0.0.1:{free_port()}/feed.xml", timeout_seconds=2, now=NOW)
    assert not result.ok and result.status == 0 and result.error


def test_fetch_rejects_non_http():
    assert not fetch_feed("file:///etc/passwd").ok


def test_fetch_sends_user_agent(scripted_server, golden_bytes):
    seen = {}

    def handler(h):
        seen["ua"] = h.headers.get("User-Agent")
        reply(golden_bytes)(h)

    scripted_server.routes["/feed"] = handler
    fetch_feed(scripted_server.url + "/feed", now=NOW)
    assert seen["ua"] == USER_AGENT


def test_item_key_preference():
    assert item_key(Item("t", "http://l", guid=Guid("g"))) == "g"
    assert item_key(Item("t", "http://l")) == "http://l"
    assert item_key(Item("t")) == "t"
    assert item_key(Item(description="d")) is None


def test_diff_unread_cycle(golden_bytes):
    feed = parse_feed(golden_bytes)
    new, state = diff_unread(feed, SeenState(), URL, NOW)
    assert len(new) == 10
    again, state2 = diff_unread(feed, state, URL, NOW)
    assert again == []
    assert state2.keys_for(URL) == state.keys_for(URL)


def test_diff_unread_added_and_dropped(golden_bytes):
    feed = parse_feed(golden_bytes)
    _, state = diff_unread(feed, SeenState(), URL, NOW)
    fresh = Item("new one", "http://www.journalsite.tk/x?articleid=194",
                 guid=Guid("http://www.journalsite.tk/x?articleid=194"))
    import dataclasses
    shifted = dataclasses.replace(feed, items=[fresh] + feed.items[:-1])
    new, _ = diff_unread(shifted, state, URL, NOW)
    assert new == [fresh]


def test_diff_unread_is_per_feed(golden_bytes):
    feed = parse_feed(golden_bytes)
    _, state = diff_unread(feed, SeenState(), URL, NOW)
    new, _ = diff_unread(feed, state, "http://other.example/feed.xml", NOW)
    assert len(new) == 10


def test_diff_unread_leaves_input_state_alone(golden_bytes):
    state = SeenState()
    diff_unread(parse_feed(golden_bytes), state, URL, NOW)
    assert state == SeenState()


def test_poll_due_boundaries():
    state = SeenState({URL: FeedSeen(frozenset(), NOW)})
    def after(minutes):
        return RssDateTime.from_utc_seconds(to_utc_seconds(NOW) + minutes * 60)
    assert not poll_due(state, 240, after(239), URL)
    assert poll_due(state, 240, after(240), URL)
    assert poll_due(SeenState(), 240, NOW)
    assert poll_due(state, 240, NOW, "http://never.example/")


def test_state_file_roundtrip(tmp_path):
    state = SeenState({URL: FeedSeen(frozenset({"a", "b\tc"}), NOW),
                       "http://x.example/": FeedSeen(frozenset(), None)})
    path = tmp_path / "seen.tsv"
    save_state(state, path)
    assert load_state(path) == state


def test_missing_state_file_is_empty(tmp_path):
    assert load_state(tmp_path / "nope") == SeenState()


def test_corrupt_state_is_reported():
    with pytest.raises(StateError, match="line 1"):
        loads_state("garbage\n")


keys = st.text(st.characters(blacklist_categories=("Cs",)), min_size=1)
urls = st.from_regex(r"https?://[a-z]{1,8}\.example/[a-z/]{0,8}", fullmatch=True)


@settings(max_examples=150, deadline=None)
@given(st.dictionaries(urls, st.tuples(st.frozensets(keys, max_size=5), st.booleans()), max_size=4),
       st.randoms(use_true_random=False))
def test_state_text_roundtrip(feeds, rng):
    state = SeenState({u: FeedSeen(k, random_datetime(rng) if dated else None)
                       for u, (k, dated) in feeds.items()})
    assert loads_state(dumps_state(state)) == state


def test_lock_fails_fast(tmp_path):
    path = tmp_path / "seen.tsv"
    with locked_state(path):
        started = time.monotonic()
        with pytest.raises(StateError, match="locked"):
            with locked_state(path):
                pass
        assert time.monotonic() - started < 1
    with locked_state(path):
        pass
