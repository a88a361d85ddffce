import random
import xml.etree.ElementTree as ET
from fractions import Fraction

import pytest

from siterecover.evaluator import (
    Category,
    almost_identical_rate,
    build_web_graph,
    categorize,
    categorize_with_log,
    difference_vector,
    evaluate,
    mime_breakdown,
    render_recon_diagram,
    shingle_similarity,
    tokens,
)
from siterecover.store import LogEntry, SiteStore, read_log

from oracles import oracle_similarity, oracle_vector, random_pair, random_text
from support import A, example_original, example_repos, page, run, write_site

def test_categorization_matches_brute_force(tmp_path):
    rng = random.Random(2024)
    for trial in range(100):
        orig, recon = random_pair(rng, tmp_path / str(trial))
        v = difference_vector(categorize(orig, recon))
        assert v.as_tuple() == oracle_vector(orig, recon)


class TestWorkedExample:
    def build(self, tmp_path):
        orig = write_site(tmp_path / "orig", example_original())
        run(A, example_repos(), tmp_path / "recon")
        return orig, tmp_path / "recon"

    def test_vector_uses_the_recovery_log(self, tmp_path):
        orig, recon = self.build(tmp_path)
        cats = categorize_with_log(orig, recon)
        v = difference_vector(cats)
        assert v.as_tuple() == (Fraction(2, 6), Fraction(1, 6), Fraction(1, 5))
        assert str(v) == "(0.333, 0.167, 0.200)"
        assert cats.categories["s/d.html"] is Category.UNDISCOVERED
        assert cats.categories["s/f.html"] is Category.MISSING

    def test_without_the_log_every_absent_file_is_missing(self, tmp_path):
        orig, recon = self.build(tmp_path)
        v = difference_vector(categorize(orig, recon))
        assert v.as_tuple() == (Fraction(2, 6), Fraction(2, 6), Fraction(1, 5))

    def test_report(self, tmp_path):
        orig, recon = self.build(tmp_path)
        report = evaluate(orig, recon, diagram=tmp_path / "d.svg")
        assert report["vector"]["rendered"] == ["0.333", "0.167", "0.200"]
        assert report["counts"] == {"identical": 2, "changed": 2, "missing": 1, "added": 1, "undiscovered": 1}
        assert report["mime_breakdown"]["groups"]["HTML"]["original_count"] == 6
        assert report["almost_identical_rate"]["compared"] == 2
        ET.parse(tmp_path / "d.svg")


class TestVectorBounds:
    def test_identical(self, tmp_path):
        files = example_original()
        v = difference_vector(categorize(write_site(tmp_path / "a", files), write_site(tmp_path / "b", files)))
        assert v.as_tuple() == (0, 0, 0)

    def test_nothing_found(self, tmp_path):
        (tmp_path / "b").mkdir()
        v = difference_vector(categorize(write_site(tmp_path / "a", example_original()), tmp_path / "b"))
        assert v.as_tuple() == (0, 1, 0)

    def test_all_changed(self, tmp_path):
        orig = example_original()
        v = difference_vector(categorize(write_site(tmp_path / "a", orig),
                                         write_site(tmp_path / "b", {u: c + b"x" for u, c in orig.items()})))
        assert v.as_tuple() == (1, 0, 0)

    def test_empty_original(self, tmp_path):
        (tmp_path / "a").mkdir()
        with pytest.raises(ValueError):
            difference_vector(categorize(tmp_path / "a", write_site(tmp_path / "b", {"http://s/": b"x"})))

    def test_half_up_rendering(self):
        cats = {f"f{i}": Category.IDENTICAL for i in range(7)}
        cats.update({"c": Category.CHANGED})
        # 1/8 = 0.125 rounds up, not to even
        assert difference_vector(cats).rendered()[0] == "0.125"
        cats = {f"f{i}": Category.IDENTICAL for i in range(1999)}
        cats["c"] = Category.CHANGED
        assert difference_vector(cats).rendered()[0] == "0.001"


class TestMimeBreakdown:
    def test_three_group_site(self):
        cats, mimes = {}, {}
        for i in range(20):
            cats[f"h{i}.html"] = Category.CHANGED if i < 7 else Category.IDENTICAL
            mimes[f"h{i}.html"] = "text/html"
        for i in range(23):
            cats[f"i{i}.gif"] = Category.IDENTICAL if i < 5 else Category.MISSING
            mimes[f"i{i}.gif"] = "image/gif"
        for i in range(20):
            cats[f"o{i}.pdf"] = Category.IDENTICAL if i < 2 else Category.MISSING
            mimes[f"o{i}.pdf"] = "application/pdf"
        groups = mime_breakdown(cats, mimes)["groups"]
        assert [(g["original_count"], g["recovered_count"]) for g in groups.values()] == [(20, 20), (23, 5), (20, 2)]
        assert [round(g["percent"]) for g in groups.values()] == [100, 22, 10]
        assert round(100 * 27 / 63) == 43
        assert str(difference_vector(cats)) == "(0.111, 0.571, 0.000)"

    def test_empty_groups_are_omitted(self):
        groups = mime_breakdown({"a.html": Category.IDENTICAL}, {"a.html": "text/html"})["groups"]
        assert list(groups) == ["HTML"]


# ---- shingling against an enumerated oracle ----


class TestShingles:
    def test_against_oracle(self):
        rng = random.Random(9)
        vocab = ["alpha", "beta", "gamma", "delta"]
        for _ in range(200):
            a = random_text(rng, vocab, rng.randint(0, 40))
            b = a if rng.random() < 0.2 else random_text(rng, vocab, rng.randint(0, 40))
            sim = shingle_similarity(a, b)
            assert sim == pytest.approx(oracle_similarity(a.split(), b.split(), 10))
            assert shingle_similarity(b, a) == sim
            assert shingle_similarity(a, a) == 1.0
            assert (sim >= 0.75) == (oracle_similarity(a.split(), b.split(), 10) >= 0.75)

    def test_disjoint_vocabularies(self):
        a = " ".join(["red"] * 5 + ["green"] * 10)
        b = " ".join(["blue"] * 5 + ["black"] * 10)
        assert shingle_similarity(a, b) == 0.0

    def test_markup_and_case_are_ignored(self):
        words = " ".join(f"w{i}" for i in range(30))
        assert shingle_similarity(f"<p>{words.upper()}</p><script>x y z</script>", words) == 1.0
        assert tokens("<b>A</b> b<style>c</style>") == ["a", "b"]

    def test_containment(self):
        a = " ".join(f"w{i}" for i in range(20))
        b = " ".join(f"w{i}" for i in range(40))
        assert shingle_similarity(a, b, denominator="containment-a") == 1.0
        assert shingle_similarity(a, b, denominator="containment-b") == pytest.approx(11 / 31)
        with pytest.raises(ValueError):
            shingle_similarity(a, b, denominator="dice")

    def test_rate_excludes_pairs_without_text(self):
        text = " ".join(f"w{i}" for i in range(30)).encode()
        pairs = [(text, text + b" tail", "text/html"), (b"GIF89a", b"GIF89b", "image/gif"),
                 (b"%PDF " + text, b"<pre>" + text + b"</pre>", "application/pdf", "text/html")]
        rate = almost_identical_rate(pairs)
        assert (rate.compared, rate.almost_identical, rate.excluded) == (1, 1, 2)
        with_pdf = almost_identical_rate(pairs, converters={"application/pdf": "cat"})
        assert with_pdf.compared == 2


class TestDiagram:
    def test_deterministic_and_well_formed(self):
        cats = {"a": Category.CHANGED, "b": Category.IDENTICAL, "c": Category.MISSING, "d": Category.ADDED}
        v = difference_vector(cats)
        svg = render_recon_diagram(v)
        assert svg == render_recon_diagram(v)
        root = ET.fromstring(svg)
        ids = {el.get("id") for el in root.iter() if el.get("id")}
        assert ids == {"crust", "core", "changed", "hole"}
        assert "(0.333, 0.333, 0.333)" in svg

    @pytest.mark.parametrize("cats,ids", [
        ({"a": Category.IDENTICAL}, {"core"}),
        ({"a": Category.MISSING}, {"core", "hole"}),
        ({"a": Category.CHANGED}, {"core", "changed"}),
    ])
    def test_extremes(self, cats, ids):
        root = ET.fromstring(render_recon_diagram(difference_vector(cats)))
        assert {el.get("id") for el in root.iter() if el.get("id")} == ids

    def test_golden(self):
        cats = {"a": Category.CHANGED, "b": Category.IDENTICAL, "c": Category.IDENTICAL, "d": Category.IDENTICAL}
        svg = render_recon_diagram(difference_vector(cats))
        assert '<path id="changed" d="M 100 40 A 60 60 0 0 1 160 100 L 100 100 Z" fill="#555555"/>' in svg


class TestWebGraph:
    def test_graph_of_a_snapshot(self, tmp_path):
        root = write_site(tmp_path, example_original())
        (root / "s/orphan.html").write_bytes(page("orphan"))
        g = build_web_graph(root, A)
        assert len(g.nodes) == 6
        assert ("http://s/", "http://s/b.html") in g.edges
        assert g.unreachable == {"http://s/orphan.html"}

    def test_missing_root(self, tmp_path):
        tmp_path.joinpath("x").mkdir()
        with pytest.raises(FileNotFoundError):
            build_web_graph(tmp_path / "x", A)


def test_log_from_store_round_trips(tmp_path):
    store = SiteStore(tmp_path)
    store.append_log(LogEntry.missing("http://s/f.html"))
    assert read_log(tmp_path)[0].mime_or_missing == "MISSING"
