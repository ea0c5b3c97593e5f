import numpy as np
import pytest

from teamscope.corpus import CorpusIndex, DocumentRecord
from teamscope.embed import DocVector, VectorStore
from teamscope.synth import SynthConfig, generate


def make_doc(doc_id, year=2000, refs=(), ref_journals=None, authors=("a1", "a2"),
             mesh=("m1", "m2"), journal="J0", title="", abstract=""):
    refs = list(refs)
    if ref_journals is None:
        ref_journals = ["J0"] * len(refs)
    return DocumentRecord.from_dict({
        "doc_id": doc_id, "year": year, "title": title, "abstract": abstract,
        "journal_issn": journal, "mesh_terms": list(mesh), "author_ids": list(authors),
        "ref_doc_ids": refs, "ref_journal_issns": list(ref_journals),
    })


def make_store(vectors: dict) -> VectorStore:
    dim = len(next(iter(vectors.values())))
    store = VectorStore(dim)
    for k, v in vectors.items():
        store.add(DocVector.normalized(k, v))
    return store


def unit(theta):
    return [float(np.cos(theta)), float(np.sin(theta))]


def synth_index(**kw):
    sc = generate(SynthConfig(**kw))
    docs = [DocumentRecord.from_dict(d) for d in sc.docs]
    store = VectorStore(sc.config.dim)
    for v in sc.vectors:
        store.add(DocVector.normalized(v["doc_id"], v["values"]))
    return sc, docs, CorpusIndex(docs), store


@pytest.fixture(scope="session")
def small_synth():
    return synth_index(n_docs=200, n_authors=60, n_journals=12, seed=3)


def random_dag(rng, n_nodes, p_edge=None, n_years=6):
    """Citation DAG: node k may cite any earlier node; years are nondecreasing in k."""
    p = rng.uniform(0.05, 0.35) if p_edge is None else p_edge
    years = sorted(rng.randrange(2000, 2000 + n_years) for _ in range(n_nodes))
    docs = []
    for k in range(n_nodes):
        refs = [f"N{j:02d}" for j in range(k) if rng.random() < p]
        if rng.random() < 0.3:
            refs.append("")
        docs.append(make_doc(f"N{k:02d}", years[k], refs=refs))
    return docs


_CRITERIA: dict[int, tuple[bool, str]] = {}


def record_criterion(n: int, ok: bool, detail: str) -> None:
    _CRITERIA[n] = (ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
