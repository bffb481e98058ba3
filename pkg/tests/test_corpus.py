import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridloc import corpus as cp
from gridloc.corpus import (CleanTweet, CorpusFormatError, LabeledExample, RawTweetRecord, Reject,
                            Variant, assign_labels, dedupe_and_despam, filter_bbox, group_users,
                            parse_tweet_file, read_labeled, write_labeled, write_rejects)
from gridloc.geo_grid import US_BBOX, GeoPoint, LatticeSpec, grid_index


def tweet_json(tid, uid, text, lonlat=(-100.0, 40.0), description=None, mentions=()):
    obj = {"id": tid, "created_at": "Wed Apr 01 10:00:00 +0000 2015", "text": text,
           "user": {"id": uid, "description": description, "time_zone": "Central Time"},
           "entities": {"user_mentions": [{"screen_name": m} for m in mentions]}}
    if lonlat is not None:
        obj["coordinates"] = {"type": "Point", "coordinates": list(lonlat)}
    return json.dumps(obj)


def raw(tid, uid, text, geo=GeoPoint(40.0, -100.0)):
    return RawTweetRecord(id=tid, user_id=uid, time="", content=text, geo=geo)


def test_empty_file(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    stream = parse_tweet_file(path, "jsonl")
    assert list(stream) == []
    assert (stream.summary.parsed, stream.summary.skipped) == (0, 0)


def test_malformed_lines_are_counted(tmp_path):
    path = tmp_path / "t.jsonl"
    path.write_text("\n".join([
        tweet_json(1, 10, "rain in #chicago @bob", mentions=["bob"]),
        "{not json",
        tweet_json(2, 11, "snow", description="born in denver"),
        tweet_json(3, 12, "no geo here", lonlat=None),
    ]) + "\n")
    stream = parse_tweet_file(path, "jsonl")
    recs = list(stream)
    assert [r.id for r in recs] == ["1", "2", "3"]
    assert (stream.summary.parsed, stream.summary.skipped) == (3, 1)
    assert recs[0].mentions == ("bob",)
    assert recs[0].geo == GeoPoint(40.0, -100.0)  # lon,lat order on disk
    assert recs[0].user_time_zone == "Central Time"
    assert recs[1].user_description == "born in denver"
    assert recs[2].geo is None


def test_json_record_without_ids_is_skipped(tmp_path):
    path = tmp_path / "t.jsonl"
    path.write_text(json.dumps({"text": "hi", "user": {}}) + "\n" + json.dumps([1, 2]) + "\n")
    stream = parse_tweet_file(path, "jsonl")
    assert list(stream) == []
    assert stream.summary.skipped == 2


def test_csv_input(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("id,user_id,time,lat,lon,text,description\n"
                    "1,u1,2015-04-01T10:00:00Z,40.0,-100.0,hello @amy,\"born in ohio, usa\"\n"
                    "2,u2,,,,no geo,\n"
                    "3,u3,,abc,-100,bad lat,\n"
                    "4,u4,too,few\n", encoding="utf-8")
    stream = parse_tweet_file(path, "csv")
    recs = list(stream)
    assert [r.id for r in recs] == ["1", "2"]
    assert recs[0].mentions == ("amy",)
    assert recs[0].user_description == "born in ohio, usa"
    assert recs[1].geo is None
    assert (stream.summary.parsed, stream.summary.skipped) == (2, 2)


def test_csv_wrong_header(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(CorpusFormatError):
        list(parse_tweet_file(path, "csv"))


def test_unknown_format_and_missing_file(tmp_path):
    with pytest.raises(cp.UsageError):
        parse_tweet_file(tmp_path / "x", "xml")
    with pytest.raises(OSError):
        parse_tweet_file(tmp_path / "missing.jsonl", "jsonl")


def test_filter_bbox():
    inside = raw("1", "u", "a")
    nowhere = RawTweetRecord("2", "u", "", "b")
    london = raw("3", "u", "c", GeoPoint(51.5, -0.13))
    rejects = []
    kept = list(filter_bbox([inside, nowhere, london], US_BBOX, rejects))
    assert kept == [inside]
    assert [r.id for r in rejects] == ["2", "3"]
    assert list(filter_bbox(kept, US_BBOX)) == kept


def test_dedupe_examples():
    same_user = [raw("1", "u", "Hello world"), raw("2", "u", "hello   WORLD!")]
    assert [r.id for r in dedupe_and_despam(same_user)] == ["1"]
    assert dedupe_and_despam([raw("1", "u", "   ")]) == []
    assert dedupe_and_despam([raw("1", "u", "http://t.co/abc")]) == []
    spam = [raw(str(i), f"u{i}", "win a free phone") for i in range(11)]
    assert dedupe_and_despam(spam, spam_threshold=10) == []
    assert len(dedupe_and_despam(spam[:10], spam_threshold=10)) == 10
    assert len(dedupe_and_despam(spam, spam_threshold=11)) == 11


records = st.lists(st.builds(
    lambda i, u, t: raw(str(i), f"u{u}", t),
    st.integers(0, 50), st.integers(0, 4),
    st.sampled_from(["hi", "Hi!", "  ", "spam deal", "http://x.y", "@bob", "rain", "RAIN"])),
    max_size=40)


@settings(max_examples=200, deadline=None)
@given(records, st.integers(0, 3))
def test_dedupe_idempotent_and_shrinking(recs, k):
    once = dedupe_and_despam(recs, k)
    assert dedupe_and_despam(once, k) == once
    assert len(once) <= len(recs)


def test_assign_labels(us8):
    nw = CleanTweet("1", "u", "a", GeoPoint(83.162102, -167.276413))
    mid = CleanTweet("2", "u", "b", GeoPoint(40.0, -100.0))
    out = list(assign_labels([nw, mid], us8))
    assert [ex.label for ex in out] == [1, 37]
    assert all(ex.variant is Variant.TEXT_ONLY for ex in out)
    assert list(assign_labels([], us8)) == []


def test_assign_labels_routes_rejects():
    small = LatticeSpec(US_BBOX.__class__(50, 30, -90, -110), 4)
    inside = CleanTweet("1", "u", "a", GeoPoint(40.0, -100.0))
    outside = CleanTweet("2", "u", "b", GeoPoint(20.0, -100.0))
    rejects = []
    out = list(assign_labels([inside, outside], small, rejects))
    assert [ex.tweet.id for ex in out] == ["1"]
    assert rejects[0].id == "2" and "latitude" in rejects[0].reason
    with pytest.raises(ValueError):
        list(assign_labels([outside], small))


def test_group_users_centroid():
    tws = [CleanTweet("1", "a", "x", GeoPoint(40, -100)), CleanTweet("2", "a", "y", GeoPoint(42, -90)),
           CleanTweet("3", "b", "z", GeoPoint(30, -80))]
    users = group_users(tws)
    assert [u.user_id for u in users] == ["a", "b"]
    assert users[0].real_location == GeoPoint(41, -95)
    assert len(users[0].tweets) == 2


def example(text="hello", desc=None, label=1, variant=Variant.TEXT_ONLY, geo=GeoPoint(40, -100)):
    return LabeledExample(CleanTweet("id1", "user1", text, geo, desc), label, variant)


def test_labeled_round_trip(tmp_path):
    path = tmp_path / "c.csv"
    corpus = [example(), example("café ☕", "née à paris", 37, Variant.TEXT_PLUS_GEO_ENTITIES)]
    write_labeled(path, corpus)
    assert read_labeled(path) == corpus
    assert "café ☕" in path.read_text(encoding="utf-8")
    assert path.read_text().splitlines()[0] == ",".join(cp.LABELED_HEADER)


def test_empty_corpus_round_trip(tmp_path):
    write_labeled(tmp_path / "c.csv", [])
    assert read_labeled(tmp_path / "c.csv") == []


def test_wrong_header_and_version(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("id,text\n1,hi\n")
    with pytest.raises(CorpusFormatError, match="schema version 1"):
        read_labeled(bad)
    write_labeled(tmp_path / "c.csv", [example()])
    text = (tmp_path / "c.csv").read_text().replace("\n1,", "\n2,")
    (tmp_path / "c.csv").write_text(text)
    with pytest.raises(CorpusFormatError, match="found '2'"):
        read_labeled(tmp_path / "c.csv")


text_st = st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=30)
examples_st = st.lists(st.builds(
    lambda t, d, lat, lon, g, v: example(t, d, g, v, GeoPoint(lat, lon)),
    text_st, st.one_of(st.none(), text_st),
    st.sampled_from([US_BBOX.lat_min, US_BBOX.lat_max, 40.123456789]) | st.floats(5.5, 83),
    st.sampled_from([US_BBOX.lon_min, US_BBOX.lon_max]) | st.floats(-167, -53),
    st.integers(1, 1024), st.sampled_from(list(Variant))), max_size=8)


@settings(max_examples=150, deadline=None)
@given(examples_st)
def test_labeled_round_trip_property(tmp_path_factory, corpus):
    path = tmp_path_factory.mktemp("rt") / "c.csv"
    write_labeled(path, corpus)
    assert read_labeled(path) == corpus


def test_label_consistency_after_relabel(us8):
    ex = example(geo=GeoPoint(40.0, -100.0), label=999)
    [fixed] = cp.relabel([ex], us8)
    assert fixed.label == grid_index(fixed.tweet.geo, us8) == 37


def test_rejects_file(tmp_path):
    write_rejects(tmp_path / "r.csv", [Reject("7", "out of bbox: (1, 2)")])
    assert (tmp_path / "r.csv").read_bytes() == b'id,reason\r\n7,"out of bbox: (1, 2)"\r\n'
