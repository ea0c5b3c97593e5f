import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from teamscope.corpus import (
    CorpusError,
    CorpusIndex,
    FilterConfig,
    LabelRecord,
    NotFoundError,
    author_past_pubs,
    citing_papers,
    export_index,
    ingest_corpus,
    load_index,
    perceived_novelty_sample,
    read_journals,
)

from conftest import make_doc


def write_jsonl(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows))
    return path


def raw(doc_id, n_refs=2, n_mesh=2, n_authors=2, year=2001, journal="1111-0000", refs=None):
    refs = refs if refs is not None else [""] * n_refs
    return {"doc_id": doc_id, "year": year, "title": "t", "abstract": "a",
            "journal_issn": journal, "mesh_terms": [f"m{i}" for i in range(n_mesh)],
            "author_ids": [f"a{i}" for i in range(n_authors)],
            "ref_doc_ids": refs, "ref_journal_issns": ["2222-0000"] * len(refs)}


def test_empty_file_gives_empty_index(tmp_path):
    f = tmp_path / "c.jsonl"
    f.write_text("")
    index, report = ingest_corpus(f)
    assert len(index) == 0
    assert report.n_rejected == 0


def test_single_author_doc_rejected(tmp_path):
    f = write_jsonl(tmp_path / "c.jsonl", [raw("D1", n_authors=1), raw("D2")])
    index, report = ingest_corpus(f, FilterConfig(min_authors=2))
    assert index.doc_ids == ["D2"]
    assert report.rejects == {"authors": 1}


def test_ten_doc_fixture_three_rejects(tmp_path):
    rows = [raw(f"D{i}") for i in range(7)]
    rows += [raw("X1", n_refs=1), raw("X2", n_mesh=0), raw("X3", n_authors=1)]
    random.Random(1).shuffle(rows)
    f = write_jsonl(tmp_path / "c.jsonl", rows)
    expected = sum(1 for r in rows if len(r["ref_doc_ids"]) >= 2 and len(r["mesh_terms"]) >= 2
                   and len(r["author_ids"]) >= 2)
    index, report = ingest_corpus(f)
    assert len(index) == expected == 7
    assert report.n_rejected == 3


def test_malformed_line_names_line_number(tmp_path):
    f = tmp_path / "c.jsonl"
    f.write_text(json.dumps(raw("D1")) + "\n{not json\n")
    with pytest.raises(CorpusError, match=":2:"):
        ingest_corpus(f)


def test_missing_field_and_bad_records(tmp_path):
    bad = raw("D1")
    del bad["year"]
    f = write_jsonl(tmp_path / "c.jsonl", [bad])
    with pytest.raises(CorpusError, match=":1:.*year"):
        ingest_corpus(f)
    with pytest.raises(CorpusError, match="itself"):
        make_doc("D1", refs=["D1"])
    with pytest.raises(CorpusError, match="duplicate author"):
        make_doc("D1", authors=["a", "a"])
    with pytest.raises(CorpusError, match="aligned"):
        make_doc("D1", refs=["x"], ref_journals=[])


def test_duplicate_doc_id(tmp_path):
    f = write_jsonl(tmp_path / "c.jsonl", [raw("D1"), raw("D1")])
    with pytest.raises(CorpusError, match="duplicate"):
        ingest_corpus(f)


def test_unknown_journal_kept_and_flagged(tmp_path):
    f = write_jsonl(tmp_path / "c.jsonl", [raw("D1", journal="9999-9999"), raw("D2")])
    j = tmp_path / "j.csv"
    j.write_text("issn,sjr,category\n1111-0000,1.5,Biology\n")
    index, report = ingest_corpus(f, journals=read_journals(j))
    assert len(index) == 2
    assert report.unknown_journal == ["D1"]
    assert index.journal("9999-9999") is None
    assert index.journal("1111-0000").sjr == 1.5


def test_citing_papers_chain():
    index = CorpusIndex([make_doc("A", refs=["B"]), make_doc("B", refs=["C"]), make_doc("C")])
    assert citing_papers(index, "C") == {"B"}
    assert citing_papers(index, "A") == frozenset()
    with pytest.raises(NotFoundError):
        citing_papers(index, "nope")


def random_graph(rng, n):
    docs = []
    for i in range(n):
        refs = sorted({f"D{j}" for j in range(i) if rng.random() < 0.2} | (
            {"outside"} if rng.random() < 0.3 else set()))
        docs.append(make_doc(f"D{i}", year=2000 + i // 5, refs=refs))
    return docs


def test_reverse_map_is_transpose():
    rng = random.Random(7)
    docs = random_graph(rng, 30)
    index = CorpusIndex(docs)
    ids = {d.doc_id for d in docs}
    edges = {(d.doc_id, r) for d in docs for r in d.ref_doc_ids if r in ids}
    for d in docs:
        assert citing_papers(index, d.doc_id) == {a for a, b in edges if b == d.doc_id}
    assert sum(len(citing_papers(index, d)) for d in index.doc_ids) == len(edges)


def test_author_past_pubs_window():
    docs = [make_doc("p97", 1997, authors=["x", "y"]), make_doc("p01", 2001, authors=["x", "y"]),
            make_doc("p03", 2003, authors=["x", "y"])]
    index = CorpusIndex(docs)
    assert author_past_pubs(index, "x", 2003, 5) == ["p01"]
    assert "p03" not in author_past_pubs(index, "x", 2003, 5)
    assert author_past_pubs(index, "nobody", 2003, 5) == []
    with pytest.raises(ValueError):
        author_past_pubs(index, "x", 2003, 0)


def test_author_past_pubs_lower_bound_inclusive():
    # the window is [t - b, t - 1]: five full years for b = 5
    docs = [make_doc("p98", 1998, authors=["x", "y"]), make_doc("p02", 2002, authors=["x", "y"])]
    index = CorpusIndex(docs)
    assert author_past_pubs(index, "x", 2003, 5) == ["p98", "p02"]
    assert author_past_pubs(index, "x", 2003, 4) == ["p02"]


def test_author_past_pubs_matches_scan(small_synth):
    _, docs, index, _ = small_synth
    for a in index.authors[:20]:
        for t in (2003, 2006, 2009):
            expect = sorted((d.year, d.doc_id) for d in docs
                            if a in d.author_ids and t - 5 <= d.year < t)
            assert author_past_pubs(index, a, t, 5) == [i for _, i in expect]


@given(st.permutations(list(range(12))))
@settings(max_examples=25, deadline=None)
def test_iteration_order_independent_of_input_order(perm):
    docs = random_graph(random.Random(3), 12)
    a = CorpusIndex(docs)
    b = CorpusIndex([docs[i] for i in perm])
    assert a.doc_ids == b.doc_ids
    assert a.citation_edges() == b.citation_edges()
    assert {x: a.author_docs(x) for x in a.authors} == {x: b.author_docs(x) for x in b.authors}


def test_author_map_covers_union_of_authors(small_synth):
    _, docs, index, _ = small_synth
    assert set(index.authors) == {a for d in docs for a in d.author_ids}


def test_export_round_trip(tmp_path, small_synth):
    _, docs, index, _ = small_synth
    export_index(index, tmp_path / "idx")
    back = load_index(tmp_path / "idx")
    assert [d.to_dict() for d in back] == [d.to_dict() for d in index]


def lab(doc_id, *cats):
    return LabelRecord(doc_id, frozenset(cats))


def test_new_finding_only_dropped():
    s = perceived_novelty_sample([lab("a", "New Finding"), lab("b", "New Finding", "Technical Advance")])
    assert "a" not in s.novel
    assert s.novel == {"b": True}
    assert s.n_dropped == 1


def test_label_sample_twenty_doc_fixture():
    labels = [
        lab("d01", "New Finding"), lab("d02", "New Finding", "Technical Advance"),
        lab("d03", "Confirmation"), lab("d04", "Interesting Hypothesis"),
        lab("d05", "New Finding"), lab("d06", "Novel Drug Target", "Technical Advance"),
        lab("d07", "Controversial"), lab("d08", "New Finding", "Confirmation"),
        lab("d09", "New Finding"), lab("d10", "Technical Advance"),
        lab("d11", "Interesting Hypothesis", "New Finding", "Novel Drug Target"),
        lab("d12", "Confirmation", "Controversial"), lab("d13", "New Finding"),
        lab("d14", "Good for Teaching"), lab("d15", "Novel Drug Target"),
        lab("d16", "New Finding", "Controversial"), lab("d17", "Technical Advance"),
        lab("d18", "New Finding"), lab("d19", "Interesting Hypothesis", "Confirmation"),
        lab("d20", "Negative/Null Results"),
    ]
    s = perceived_novelty_sample(labels)
    # hand tally: d01 d05 d09 d13 d18 dropped; positives d02 d04 d06 d10 d11 d15 d17 d19
    assert s.n_dropped == 5
    assert len(s.novel) == 15
    assert sorted(k for k, v in s.novel.items() if v) == [
        "d02", "d04", "d06", "d10", "d11", "d15", "d17", "d19"]
    assert s.n_positive == 8 and s.n_negative == 7
    assert s.n_novel_labels["d06"] == 2 and s.n_novel_labels["d11"] == 2


def test_empty_label_set_rejected():
    with pytest.raises(Exception):
        LabelRecord("x", frozenset())
