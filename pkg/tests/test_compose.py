import random

import pytest
from hypothesis import given, settings, strategies as st

from feedforge.compose import (
    ArticleRecord,
    RecordError,
    RecordStore,
    build_feed,
    compose_item,
    escape_field,
    format_records,
    load_records,
    parse_records,
    select_recent,
    unescape_field,
)
from feedforge.config import load_site_config
from feedforge.model import CDATA, Guid, SiteConfig
from feedforge.rfc822 import RssDateTime, TimezoneSpec, format_rfc822, parse_rfc822
from feedforge.validator import validate
from feedforge.xmlcodec import parse_feed

from oracles import brute_force_select, random_store

PLUS0530 = TimezoneSpec.offset(330)


def rec(i, when, final=True, disabled=False, description="d"):
    return ArticleRecord(i, f"article {i}", "author", description, when, final, disabled)


def at(day, hour=0):
    return RssDateTime(2013, 6, day, hour, 0, 0, PLUS0530)


def test_load_three_lines(tmp_path):
    path = tmp_path / "r.tsv"
    path.write_text("# header\n"
                    "1\ta\tA\td\t2013-06-01T00:00:00+0530\ttrue\tfalse\n"
                    "\n"
                    "2\tb\tB\td\t2013-06-02T00:00:00+0530\tfalse\tfalse\n"
                    "3\tc\tC\td\tSun, 30 Jun 2013 15:21:36 GMT\ttrue\ttrue\n")
    store = load_records(path)
    assert [r.articleid for r in store.records] == [1, 2, 3]
    assert store.records[2].lastupdate == parse_rfc822("Sun, 30 Jun 2013 15:21:36 GMT")
    assert store.source_path == str(path)


def test_missing_field_names_line_and_field():
    with pytest.raises(RecordError) as info:
        parse_records("1\ta\tA\td\t2013-06-01T00:00:00+0530\ttrue\tfalse\n2\tb", "r.tsv")
    assert (info.value.line, info.value.field) == (2, "authorname")
    assert str(info.value).startswith("r.tsv:2: authorname")


def test_duplicate_id_rejected():
    line = "7\ta\tA\td\t2013-06-01T00:00:00+0530\ttrue\tfalse\n"
    with pytest.raises(RecordError, match="duplicate id 7"):
        parse_records(line + line)


@pytest.mark.parametrize("line, field", [
    ("x\ta\tA\td\t2013-06-01T00:00:00+0530\ttrue\tfalse", "articleid"),
    ("0\ta\tA\td\t2013-06-01T00:00:00+0530\ttrue\tfalse", "articleid"),
    ("1\t \tA\td\t2013-06-01T00:00:00+0530\ttrue\tfalse", "articlename"),
    ("1\ta\tA\td\t2013-06-31T00:00:00+0530\ttrue\tfalse", "lastupdate"),
    ("1\ta\tA\td\t2013-06-01T00:00:00+0530\tyes\tfalse", "final"),
    ("1\ta\tA\td\\q\t2013-06-01T00:00:00+0530\ttrue\tfalse", "description"),
])
def test_bad_field_named(line, field):
    with pytest.raises(RecordError) as info:
        parse_records(line)
    assert info.value.field == field


def test_missing_store_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_records(tmp_path / "nope.tsv")


@given(st.text(st.characters(blacklist_categories=("Cs",))))
def test_field_escape_roundtrip(text):
    escaped = escape_field(text)
    assert "\t" not in escaped and "\n" not in escaped
    assert unescape_field(escaped) == text


def test_format_records_roundtrip(fixtures):
    store = load_records(fixtures / "articles.tsv")
    assert parse_records(format_records(store.records)).records == store.records


def test_select_twelve_record_example(fixtures):
    store = load_records(fixtures / "articles.tsv")
    chosen = select_recent(store, 10)
    assert [r.articleid for r in chosen] == [193, 192, 190, 189, 188, 186, 185, 183, 182, 181]


def test_select_empty_and_short():
    assert select_recent(RecordStore(()), 10) == []
    store = RecordStore((rec(1, at(1)), rec(2, at(2))))
    assert [r.articleid for r in select_recent(store, 10)] == [2, 1]


def test_select_tie_breaks_on_larger_id():
    same = at(5, 12)
    store = RecordStore((rec(3, same), rec(9, same.in_zone(TimezoneSpec.named("GMT")))))
    assert [r.articleid for r in select_recent(store, 2)] == [9, 3]


def test_select_compares_instants_not_text():
    # 01:00 +0530 on the 2nd is 19:30 GMT on the 1st, earlier than 20:00 GMT.
    early = RssDateTime(2013, 6, 2, 1, 0, 0, PLUS0530)
    later = RssDateTime(2013, 6, 1, 20, 0, 0, TimezoneSpec.named("GMT"))
    store = RecordStore((rec(1, early), rec(2, later)))
    assert [r.articleid for r in select_recent(store, 1)] == [2]


def test_select_rejects_nonpositive_n():
    with pytest.raises(ValueError):
        select_recent(RecordStore(()), 0)


@settings(max_examples=200, deadline=None)
@given(st.randoms(use_true_random=False), st.integers(0, 60), st.integers(1, 15))
def test_select_matches_oracle(rng, size, n):
    store = random_store(rng, size)
    assert select_recent(store, n) == brute_force_select(list(store.records), n)


CONFIG_TEMPLATE = "http://journalsite.example/articles/viewarticle.asp?articleid={articleid}"


@pytest.fixture
def config(fixtures):
    return load_site_config(fixtures / "journalsite.conf")


def test_compose_item_example(config):
    import dataclasses
    config = dataclasses.replace(config, item_link_template=CONFIG_TEMPLATE)
    record = ArticleRecord(193, "The Mechanics of Implementing RSS Syndication", "Umakant Mishra",
                           "A walk through channel and item elements.", at(30, 15))
    item = compose_item(record, config)
    assert item.title == "Umakant Mishra published an article The Mechanics of Implementing RSS Syndication"
    assert item.link == "http://journalsite.example/articles/viewarticle.asp?articleid=193"
    assert item.description == "ABSTRACT: A walk through channel and item elements."
    assert item.guid == Guid(item.link, True)
    assert item.pub_date == record.lastupdate


def test_compose_item_empty_description(config):
    item = compose_item(rec(1, at(1), description=""), config)
    assert item.description == "ABSTRACT: "


def test_compose_item_reexpresses_in_site_zone(config):
    gmt = RssDateTime(2013, 6, 29, 4, 30, 0, TimezoneSpec.named("GMT"))
    item = compose_item(rec(1, gmt), config)
    assert format_rfc822(item.pub_date) == "Sat, 29 Jun 2013 10:00:00 +0530"


def test_markup_description_survives_in_cdata(config):
    item = compose_item(rec(1, at(1), description="<b>bold</b>"), config)
    assert config.text_mode.mode_for("item.description") == CDATA
    doc = build_feed(RecordStore((rec(1, at(1), description="<b>bold</b>"),)), config, at(30, 18))
    assert b"<![CDATA[ABSTRACT: <b>bold</b>]]>" in doc
    assert parse_feed(doc).items[0].description == item.description


def test_build_golden(fixtures, config, golden_bytes, golden_now):
    assert build_feed(load_records(fixtures / "articles.tsv"), config, golden_now) == golden_bytes


def test_build_is_deterministic(fixtures, config, golden_now):
    store = load_records(fixtures / "articles.tsv")
    assert build_feed(store, config, golden_now) == build_feed(store, config, golden_now)


def test_build_empty_store_is_valid(config, golden_now):
    doc = build_feed(RecordStore(()), config, golden_now)
    feed = parse_feed(doc)
    assert feed.items == []
    assert validate(doc, golden_now).errors == 0


def test_build_max_items_one(fixtures, config, golden_now):
    import dataclasses
    config = dataclasses.replace(config, max_items=1)
    feed = parse_feed(build_feed(load_records(fixtures / "articles.tsv"), config, golden_now))
    assert [i.link.rsplit("=", 1)[1] for i in feed.items] == ["193"]


def test_last_build_date_in_site_zone(config):
    now = RssDateTime(2013, 6, 30, 12, 30, 0, TimezoneSpec.named("GMT"))
    feed = parse_feed(build_feed(RecordStore(()), config, now))
    assert format_rfc822(feed.channel.last_build_date) == "Sun, 30 Jun 2013 18:00:00 +0530"


@pytest.mark.parametrize("seed", range(20))
def test_random_stores_build_valid_feeds(seed, config):
    rng = random.Random(seed)
    store = random_store(rng, rng.randint(0, 40))
    now = RssDateTime(2014, 1, 1, 0, 0, 0)
    doc = build_feed(store, config, now)
    assert validate(doc, now).errors == 0
    assert len(parse_feed(doc).items) == len(select_recent(store, config.max_items))


def test_unicode_line_separators_stay_inside_fields():
    line = "1\ta b\tA\x1eB\td\x85e\t2013-06-01T00:00:00+0530\ttrue\tfalse\r\n"
    [record] = parse_records(line).records
    assert record.articlename == "a b" and record.description == "d\x85e"
