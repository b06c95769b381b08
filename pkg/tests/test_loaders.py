import json
from datetime import datetime, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geopulse import loaders
from geopulse.loaders import (
    LoaderError,
    load_events,
    load_gazetteer,
    load_regions,
    load_sample,
    parse_posts,
    parse_wkt_polygon,
    serialize_posts,
)
from geopulse.model import MediaRef, Post, iso, utc


def jsonl(*objs) -> bytes:
    return ("\n".join(json.dumps(o) for o in objs) + "\n").encode()


def post_obj(pid="p1", **over):
    obj = {"id": pid, "created_at": "2021-09-26T10:05:00Z", "lang": "en",
           "text": "flood in town", "media": [], "is_repost": False}
    obj.update(over)
    return obj


class TestParsePosts:
    def test_empty_stream(self):
        posts, diags = parse_posts(b"")
        assert posts == [] and diags == []

    def test_three_valid_lines_in_order(self):
        posts, diags = parse_posts(jsonl(post_obj("a"), post_obj("b"), post_obj("c")))
        assert [p.id for p in posts] == ["a", "b", "c"]
        assert diags == []

    def test_latitude_out_of_range_rejected(self):
        posts, diags = parse_posts(jsonl(post_obj(native_geo={"lat": 95, "lon": 0})))
        assert posts == []
        assert len(diags) == 1 and "latitude out of range" in diags[0].reason
        assert diags[0].line == 1

    def test_duplicate_id_rejects_later(self):
        posts, diags = parse_posts(jsonl(post_obj("x", text="first"), post_obj("x", text="second")))
        assert len(posts) == 1 and posts[0].text == "first"
        assert len(diags) == 1 and "duplicate id" in diags[0].reason

    def test_bad_json_line_diagnostic(self):
        posts, diags = parse_posts(b'{"id": "ok", "created_at": "2021-09-26T10:05:00Z"}\nnot json\n')
        assert len(posts) == 1
        assert len(diags) == 1 and diags[0].line == 2

    def test_timestamp_normalized_to_utc_seconds(self):
        posts, _ = parse_posts(jsonl(post_obj(created_at="2021-09-26T12:05:00.750+02:00")))
        assert posts[0].created_at == datetime(2021, 9, 26, 10, 5, 0, tzinfo=timezone.utc)

    def test_naive_timestamp_rejected(self):
        _, diags = parse_posts(jsonl(post_obj(created_at="2021-09-26T10:05:00")))
        assert len(diags) == 1 and "offset" in diags[0].reason

    def test_repost_excluded_by_default(self):
        posts, diags = parse_posts(jsonl(post_obj("r", is_repost=True)))
        assert posts == []
        assert "repost" in diags[0].reason
        posts, diags = parse_posts(jsonl(post_obj("r", is_repost=True)), exclude_reposts=False)
        assert len(posts) == 1 and diags == []

    def test_media_traversal_rejected(self):
        bad = post_obj(media=[{"media_id": "m", "path": "../../etc/passwd"}])
        _, diags = parse_posts(jsonl(bad))
        assert len(diags) == 1 and "escapes" in diags[0].reason

    def test_bad_lang_rejected_und_default(self):
        _, diags = parse_posts(jsonl(post_obj(lang="english")))
        assert len(diags) == 1
        posts, _ = parse_posts(jsonl(post_obj()))
        posts2, _ = parse_posts(jsonl({**post_obj(), "lang": "EN"}))
        assert posts2[0].lang == "en"
        posts3, _ = parse_posts(jsonl({k: v for k, v in post_obj().items() if k != "lang"}))
        assert posts3[0].lang == "und"


sane_text = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",)), max_size=80
)
post_strategy = st.builds(
    Post,
    id=st.uuids().map(str),
    created_at=st.datetimes(
        min_value=datetime(2000, 1, 1), max_value=datetime(2100, 1, 1)
    ).map(lambda d: d.replace(tzinfo=timezone.utc, microsecond=0)),
    lang=st.sampled_from(["en", "es", "fr", "und"]),
    text=sane_text,
    media=st.lists(
        st.builds(MediaRef, media_id=st.text(min_size=1, max_size=8),
                  path=st.from_regex(r"[a-z]{1,8}\.pgm", fullmatch=True)),
        max_size=2,
    ).map(tuple),
    native_geo=st.one_of(
        st.none(),
        st.tuples(st.floats(-90, 90, allow_nan=False), st.floats(-180, 180, allow_nan=False)),
    ),
    is_repost=st.just(False),
)


@settings(max_examples=60)
@given(st.lists(post_strategy, max_size=8, unique_by=lambda p: p.id))
def test_posts_round_trip(posts):
    reparsed, diags = parse_posts(serialize_posts(posts))
    assert diags == []
    assert reparsed == list(posts)


def test_loader_determinism(tmp_path, bench_dir):
    data = (bench_dir / "posts.jsonl").read_bytes()
    a = parse_posts(data)
    b = parse_posts(data)
    assert a == b


class TestGazetteer:
    def row(self, **over):
        base = {"entry_id": "g1", "canonical_name": "Paris", "alt_names": "paris, tx|Paname",
                "lat": "48.85", "lon": "2.35", "admin_level": "8",
                "population": "2100000", "country": "FR", "polygon_wkt": ""}
        base.update(over)
        return base

    def write(self, tmp_path, rows):
        lines = [",".join(loaders.GAZETTEER_COLUMNS)]
        for r in rows:
            lines.append(",".join(
                '"%s"' % r[c].replace('"', '""') if "," in r[c] else r[c]
                for c in loaders.GAZETTEER_COLUMNS))
        path = tmp_path / "gazetteer.csv"
        path.write_text("\n".join(lines) + "\n")
        return path

    def test_casefold_lookup(self, tmp_path):
        gaz = load_gazetteer(self.write(tmp_path, [self.row()]))
        assert len(gaz.lookup("PARIS")) == 1
        assert gaz.lookup("PARIS")[0].entry_id == "g1"
        assert len(gaz.lookup("paname")) == 1
        assert gaz.lookup("paris tx")  # alt name with comma tokenizes to key

    def test_empty_file_with_header(self, tmp_path):
        gaz = load_gazetteer(self.write(tmp_path, []))
        assert len(gaz) == 0

    def test_admin_level_out_of_range(self, tmp_path):
        path = self.write(tmp_path, [self.row(admin_level="11")])
        with pytest.raises(LoaderError, match="row 2"):
            load_gazetteer(path)

    def test_wrong_header(self, tmp_path):
        path = tmp_path / "g.csv"
        path.write_text("a,b,c\n")
        with pytest.raises(LoaderError, match="header"):
            load_gazetteer(path)


class TestOtherLoaders:
    def test_event_end_before_start(self, tmp_path):
        path = tmp_path / "events.csv"
        path.write_text(
            "event_id,event_type,country,start,end,name\n"
            "e1,flood,XA,2021-09-02T00:00:00Z,2021-09-01T00:00:00Z,Backwards\n")
        with pytest.raises(LoaderError, match="not before end"):
            load_events(path)

    def test_sample_of_two_labels(self, tmp_path):
        path = tmp_path / "sample.csv"
        path.write_text("post_id,relevant\np1,1\np2,0\n")
        sample = load_sample(path, {"p1", "p2", "p3"})
        assert len(sample) == 2
        assert sample.labels == {"p1": True, "p2": False}

    def test_sample_unknown_post_listed(self, tmp_path):
        path = tmp_path / "sample.csv"
        path.write_text("post_id,relevant\nghost,1\n")
        with pytest.raises(LoaderError, match="ghost"):
            load_sample(path, {"p1"})

    def test_region_open_ring(self, tmp_path):
        path = tmp_path / "regions.csv"
        path.write_text(
            'region_id,name,population,polygon_wkt\n'
            'r1,Open,1000,"POLYGON ((0 0, 1 0, 1 1, 0 1))"\n')
        with pytest.raises(LoaderError, match="ring not closed"):
            load_regions(path)

    def test_region_valid(self, tmp_path):
        path = tmp_path / "regions.csv"
        path.write_text(
            'region_id,name,population,polygon_wkt\n'
            'r1,Box,1000,"POLYGON ((0 0, 1 0, 1 1, 0 1, 0 0))"\n')
        regions = load_regions(path)
        assert regions[0].polygon[0] == regions[0].polygon[-1] == (0.0, 0.0)

    def test_wkt_parse_error(self):
        with pytest.raises(ValueError, match="not a WKT polygon"):
            parse_wkt_polygon("LINESTRING (0 0, 1 1)")

    def test_loaders_do_not_mutate_input(self, tmp_path):
        path = tmp_path / "sample.csv"
        content = "post_id,relevant\np1,1\n"
        path.write_text(content)
        load_sample(path, {"p1"})
        assert path.read_text() == content


def test_iso_utc_round_trip():
    t = utc("2021-09-26T10:05:33Z")
    assert iso(t) == "2021-09-26T10:05:33Z"
    assert utc(iso(t)) == t
