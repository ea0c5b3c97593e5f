import itertools
import json

import pytest

from teamscope.cognitive import cosine_distance
from teamscope.cooc import community_partition
from teamscope.corpus import (
    CorpusIndex,
    DocumentRecord,
    FilterConfig,
    ingest_corpus,
    read_journals,
    read_labels,
)
from teamscope.embed import DocVector
from teamscope.synth import (
    SynthConfig,
    SynthConfigError,
    cross_topic_floor,
    generate,
    load_truth,
    within_topic_ceiling,
)

SMALL = dict(n_docs=150, n_authors=40, n_journals=8, seed=5, n_topics=4)


def test_same_seed_byte_identical(tmp_path):
    a = generate(SynthConfig(**SMALL)).write(tmp_path / "a")
    b = generate(SynthConfig(**SMALL)).write(tmp_path / "b")
    for key in a:
        assert a[key].read_bytes() == b[key].read_bytes(), key
    c = generate(SynthConfig(**{**SMALL, "seed": 6})).write(tmp_path / "c")
    assert a["corpus"].read_bytes() != c["corpus"].read_bytes()


def test_every_document_passes_ingest(tmp_path):
    paths = generate(SynthConfig(**SMALL)).write(tmp_path)
    index, report = ingest_corpus(paths["corpus"], FilterConfig(),
                                  read_journals(paths["journals"]), read_labels(paths["labels"]))
    assert report.n_rejected == 0 and report.n_kept == 150
    assert not report.unknown_journal


def test_references_point_backwards_in_time():
    sc = generate(SynthConfig(**SMALL))
    year = {d["doc_id"]: d["year"] for d in sc.docs}
    for d in sc.docs:
        assert len(d["ref_doc_ids"]) == len(d["ref_journal_issns"])
        for r in d["ref_doc_ids"]:
            if r:
                assert year[r] < d["year"]


@pytest.mark.parametrize("bad", [
    {"n_docs": 0}, {"frac_diffuse": 1.5}, {"label_fraction": -0.1},
    {"year_start": 2010, "year_end": 2000}, {"dim": 4}, {"n_journals": 3},
    {"noise_radius": 0.8}, {"p_in": 0.0}, {"refs_min": 1}, {"mesh_min": 9},
    {"authors_min": 1}, {"n_authors": 6},
])
def test_validate_rejects(bad):
    with pytest.raises(SynthConfigError):
        SynthConfig(**{**SMALL, **bad}).validate()


def test_from_dict_rejects_unknown_keys():
    with pytest.raises(SynthConfigError):
        SynthConfig.from_dict({"n_docs": 10, "bogus": 1})
    assert SynthConfig.from_dict({"n_docs": 10}).n_docs == 10


def test_distance_bounds_hold():
    sc = generate(SynthConfig(**SMALL))
    topic = {t["id"]: t["topic"] for t in sc.truth if t["type"] == "doc"}
    vec = {v["doc_id"]: DocVector.normalized(v["doc_id"], v["values"]) for v in sc.vectors}
    ceil, floor = within_topic_ceiling(0.3), cross_topic_floor(0.3)
    assert ceil < floor
    ids = sorted(vec)[:80]
    for a, b in itertools.combinations(ids, 2):
        d = cosine_distance(vec[a], vec[b])
        if topic[a] == topic[b]:
            assert d <= ceil + 1e-12
        else:
            assert d >= floor - 1e-12


def test_truth_sidecar(tmp_path):
    sc = generate(SynthConfig(**SMALL))
    truth = load_truth(sc.write(tmp_path)["truth"])
    authors = [v for k, v in truth.items() if k.startswith("author:")]
    assert len(authors) == 40
    assert sum(a["archetype"] == "diffuse" for a in authors) == round(0.2 * 40)
    for a in authors:
        assert (a["home_topic"] is None) == (a["archetype"] == "diffuse")
    conc_home = {a["id"]: a["home_topic"] for a in authors if a["archetype"] == "concentrated"}
    for d in sc.docs:
        t = truth[f"doc:{d['doc_id']}"]["topic"]
        for au in d["author_ids"]:
            assert conc_home.get(au, t) == t


def test_config_echo_written(tmp_path):
    paths = generate(SynthConfig(**SMALL)).write(tmp_path)
    assert json.loads(paths["config"].read_text())["seed"] == 5


def test_planted_journal_blocks_recovered():
    sc = generate(SynthConfig(n_docs=600, n_authors=60, n_journals=8, n_topics=2, seed=1,
                              p_in=0.95, p_out=0.01))
    index = CorpusIndex([DocumentRecord.from_dict(d) for d in sc.docs])
    years = range(sc.config.year_start, sc.config.year_end + 1)
    part = community_partition(index, "journal", years, seed=0)
    block = {t["id"]: t["block"] for t in sc.truth if t["type"] == "journal"}
    # communities never mix blocks, and each block lands in a single community
    by_comm = {}
    for j, c in part.membership.items():
        by_comm.setdefault(c, set()).add(block[j])
    assert all(len(b) == 1 for b in by_comm.values())
    assert len(by_comm) == 2

