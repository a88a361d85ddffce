import datetime as dt
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

import pytest

from siterecover.repo import (
    PROFILES,
    ArchiveAdapter,
    CacheDatePolicy,
    FixtureError,
    RepositoryDescriptor,
    StoredForm,
    StoredResource,
    TransportError,
    UnsupportedQueryError,
    load_fixture,
    manifest_entry,
    profile,
    repository_from_manifest,
    strip_repository_markup,
)

from support import BANNER, fixture, page

DAY = dt.date(2005, 8, 1)


class TestDescriptors:
    def test_profiles_carry_the_lookup_costs(self):
        assert (PROFILES["google"].nonimage_query_cost, PROFILES["google"].image_query_cost) == (1, 2)
        assert (PROFILES["msn"].nonimage_query_cost, PROFILES["msn"].image_query_cost) == (2, None)
        assert (PROFILES["yahoo"].nonimage_query_cost, PROFILES["yahoo"].image_query_cost) == (2, 2)
        assert PROFILES["archive"].is_canonical_store
        assert not PROFILES["msn"].supports_image_query

    def test_round_trip_through_dict(self):
        for desc in PROFILES.values():
            assert RepositoryDescriptor.from_dict(desc.to_dict()) == desc

    def test_invalid_descriptors_rejected(self):
        with pytest.raises(ValueError):
            RepositoryDescriptor("x", True, 1, None, False, CacheDatePolicy.NEVER)
        with pytest.raises(ValueError):
            RepositoryDescriptor("x", False, 0, None, False, CacheDatePolicy.NEVER)

    def test_unknown_profile(self):
        with pytest.raises(ValueError):
            profile("altavista")


class TestFixtureLookups:
    def test_hit_and_miss_costs(self):
        g = fixture("google", [("http://s/a.html", b"<p>a</p>", "text/html", StoredForm.CANONICAL, DAY)])
        hit = g.query_nonimage("http://s/a.html")
        miss = g.query_nonimage("http://s/b.html")
        assert hit.found and hit.queries_spent == 1
        assert not miss.found and miss.queries_spent == 1
        assert g.query_image("http://s/x.gif").queries_spent == 2

    def test_lookup_canonicalizes(self):
        g = fixture("google", [("http://S:80/a.html", b"a", "text/html")])
        assert g.query_nonimage("HTTP://s/x/../a.html#frag").found

    def test_non_retrievable_costs_an_extra_query(self):
        y = fixture("yahoo", [("http://s/a.html", b"a", "text/html", StoredForm.CANONICAL, None, False)])
        res = y.query_nonimage("http://s/a.html")
        assert not res.found and res.queries_spent == 3

    def test_indexed_only_is_not_found(self):
        m = fixture("msn", [("http://s/a.pdf", b"", "application/pdf", StoredForm.INDEXED_ONLY)])
        res = m.query_nonimage("http://s/a.pdf")
        assert not res.found and res.queries_spent == 3

    def test_msn_has_no_image_lookup(self):
        m = fixture("msn", [])
        with pytest.raises(UnsupportedQueryError):
            m.query_image("http://s/a.gif")

    @pytest.mark.parametrize("name,html_date,pdf_date", [
        ("archive", DAY, DAY), ("google", DAY, None), ("msn", DAY, DAY), ("yahoo", None, None),
    ])
    def test_visible_cache_dates_follow_the_profile(self, name, html_date, pdf_date):
        r = fixture(name, [
            ("http://s/a.html", b"a", "text/html", StoredForm.CANONICAL, DAY),
            ("http://s/b.pdf", b"<p>b</p>", "text/html" if name != "archive" else "application/pdf",
             StoredForm.HTML_CONVERTED if name != "archive" else StoredForm.CANONICAL, DAY),
        ])
        assert r.query_nonimage("http://s/a.html").resource.cache_date == html_date
        if name in ("google",):
            # a converted PDF is served as HTML, so the date shows
            assert r.query_nonimage("http://s/b.pdf").resource.cache_date == DAY
        else:
            assert r.query_nonimage("http://s/b.pdf").resource.cache_date == pdf_date

    def test_lookups_do_not_mutate(self):
        g = fixture("google", [("http://s/a.html", b"a", "text/html")])
        before = g.fingerprint()
        for _ in range(3):
            g.query_nonimage("http://s/a.html")
        assert g.fingerprint() == before


class TestWrapper:
    def test_strip_round_trip(self):
        original = page("A", ["b.html"])
        g = fixture("google", [("http://s/", original, "text/html", StoredForm.CANONICAL, DAY, True, BANNER)])
        served = g.query_nonimage("http://s/").resource
        assert served.content != original
        stripped = strip_repository_markup(served)
        assert stripped.content == original
        assert strip_repository_markup(stripped) == stripped

    def test_strip_without_wrapper_is_identity(self):
        res = StoredResource("http://s/", b"abc", "text/html", StoredForm.CANONICAL)
        assert strip_repository_markup(res) == res

    def test_thumbnail_must_be_an_image(self):
        with pytest.raises(ValueError):
            StoredResource("http://s/a.gif", b"x", "text/html", StoredForm.THUMBNAIL)


class TestManifests:
    def test_load_from_disk_with_files(self, tmp_path):
        (tmp_path / "a.html").write_bytes(b"<p>a</p>")
        manifest = {"id": "g1", "descriptor": "google", "entries": [
            {"url": "http://s/a.html", "file": "a.html", "mime": "text/html", "cache_date": "2005-08-01",
             "wrap_header": "<!--h-->", "wrap_footer": "<!--f-->"},
        ]}
        (tmp_path / "m.json").write_text(json.dumps(manifest))
        repo = load_fixture(tmp_path / "m.json")
        assert repo.descriptor.id == "g1"
        assert repo.query_nonimage("http://s/a.html").resource.content == b"<!--h--><p>a</p><!--f-->"

    def test_descriptor_given_inline(self):
        desc = {"supports_image_query": False, "nonimage_query_cost": 3, "image_query_cost": "unsupported",
                "is_canonical_store": False, "provides_cache_date": "never"}
        repo = repository_from_manifest({"id": "odd", "descriptor": desc, "entries": []})
        assert repo.query_nonimage("http://s/").queries_spent == 3

    @pytest.mark.parametrize("entries,message", [
        ([{"url": "http://s/a", "mime": "text/html"}], "entry 0"),
        ([{"url": "http://s/a", "inline_base64": "@@@", "mime": "text/html"}], "entry 0"),
        ([{"url": "relative", "inline_base64": "", "mime": "text/html"}], "entry 0"),
        ([{"url": "http://s/a", "inline_base64": "", "mime": "text/html", "form": "weird"}], "entry 0"),
        ([manifest_entry("http://s/a", b"", "text/html"), manifest_entry("http://s/a", b"", "text/html")],
         "duplicate"),
    ])
    def test_bad_entries_are_reported(self, entries, message):
        with pytest.raises(FixtureError, match=message):
            repository_from_manifest({"descriptor": "google", "entries": entries})

    def test_bad_descriptor(self):
        with pytest.raises(FixtureError):
            repository_from_manifest({"descriptor": "nope", "entries": []})

    def test_missing_manifest_file(self, tmp_path):
        with pytest.raises(FixtureError):
            load_fixture(tmp_path / "absent.json")


# ---- archive adapter against a local CDX-style server ----

CAPTURES = {
    "http://s/a.html": [("20050601000000", "text/html", 200, b"<p>old</p>"),
                        ("20050701000000", "text/html", 200, b"<p>new</p>"),
                        ("20050801000000", "text/html", 404, b"")],
    "http://s/gone.pdf": [("20050701000000", "application/pdf", 200, None)],
    "http://s/boom.html": [("20050701000000", "text/html", 200, "500")],
}


class _Handler(BaseHTTPRequestHandler):
    def log_message(self, *args):
        pass

    def do_GET(self):
        parts = urlsplit(self.path)
        if parts.path == "/cdx/search/cdx":
            url = parse_qs(parts.query)["url"][0]
            rows = CAPTURES.get(url)
            if rows is None:
                return self._reply(200, b"[]", "application/json")
            table = [["timestamp", "original", "mimetype", "statuscode"]]
            table += [[ts, url, mime, str(status)] for ts, mime, status, _ in rows]
            return self._reply(200, json.dumps(table).encode(), "application/json")
        if parts.path.startswith("/web/"):
            ts, _, original = parts.path[len("/web/"):].partition("id_/")
            for cts, mime, _, body in CAPTURES.get(original, []):
                if cts == ts:
                    if body is None:
                        return self._reply(404, b"", "text/plain")
                    if body == "500":
                        return self._reply(500, b"", "text/plain")
                    return self._reply(200, body, mime)
        self._reply(404, b"", "text/plain")

    def _reply(self, status, body, mime):
        self.send_response(status)
        self.send_header("Content-Type", mime)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


@pytest.fixture(scope="module")
def archive_url():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()


class TestArchiveAdapter:
    def test_newest_retrievable_capture_wins(self, archive_url):
        res = ArchiveAdapter(archive_url).query_nonimage("http://s/a.html")
        assert res.resource.content == b"<p>new</p>"
        assert res.resource.cache_date == dt.date(2005, 7, 1)
        assert res.resource.form is StoredForm.CANONICAL
        assert res.queries_spent == 2

    def test_unknown_url_costs_one_query(self, archive_url):
        res = ArchiveAdapter(archive_url).query_nonimage("http://s/none.html")
        assert not res.found and res.queries_spent == 1

    def test_listed_but_unretrievable(self, archive_url):
        res = ArchiveAdapter(archive_url).query_nonimage("http://s/gone.pdf")
        assert not res.found and res.queries_spent == 2

    def test_server_error_is_a_transport_error(self, archive_url):
        with pytest.raises(TransportError):
            ArchiveAdapter(archive_url).query_nonimage("http://s/boom.html")

    def test_unreachable_server(self):
        with pytest.raises(TransportError):
            ArchiveAdapter("http://127.0.0.1:9", timeout=0.5).query_nonimage("http://s/")

    def test_base_url_from_environment(self, monkeypatch, archive_url):
        monkeypatch.setenv("SITERECOVER_ARCHIVE_URL", archive_url)
        assert ArchiveAdapter().base_url == archive_url
        monkeypatch.delenv("SITERECOVER_ARCHIVE_URL")
        with pytest.raises(ValueError):
            ArchiveAdapter()
