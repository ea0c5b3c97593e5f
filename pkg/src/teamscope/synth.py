"""Seeded synthetic corpora with planted structure.

Topics are orthogonal directions in embedding space; each document vector is
its topic direction plus a perturbation of norm at most ``noise_radius``, so
within-topic and cross-topic distances are separated by known bounds.
Concentrated authors only join documents of their home topic, diffuse
authors join documents of any topic at a rate that keeps the expected
number of papers per author equal across archetypes. Journals are grouped into one block per
topic and references draw their journals from blocks with weights
``p_in`` / ``p_out``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

NOVEL_LABELS = ("Technical Advance", "Interesting Hypothesis", "Novel Drug Target")
OTHER_LABELS = ("Controversial", "Confirmation")


class SynthConfigError(ValueError):
    pass


@dataclass
class SynthConfig:
    n_docs: int = 1000
    n_authors: int = 300
    n_journals: int = 24
    year_start: int = 2000
    year_end: int = 2009
    dim: int = 32
    seed: int = 0
    n_topics: int = 6
    frac_diffuse: float = 0.2
    p_in: float = 0.85
    p_out: float = 0.03
    citation_rate: float = 6.0
    refs_min: int = 4
    refs_max: int = 14
    authors_min: int = 2
    authors_max: int = 5
    mesh_min: int = 3
    mesh_max: int = 8
    mesh_per_topic: int = 25
    noise_radius: float = 0.3
    label_fraction: float = 0.3

    def validate(self) -> None:
        counts = ("n_docs", "n_authors", "n_journals", "dim", "n_topics")
        for name in counts:
            if getattr(self, name) <= 0:
                raise SynthConfigError(f"{name} must be positive")
        if not 0.0 <= self.frac_diffuse <= 1.0:
            raise SynthConfigError("frac_diffuse must lie in [0, 1]")
        if not 0.0 <= self.label_fraction <= 1.0:
            raise SynthConfigError("label_fraction must lie in [0, 1]")
        if self.year_end < self.year_start:
            raise SynthConfigError("year_end precedes year_start")
        if self.dim < max(self.n_topics, 8):
            raise SynthConfigError("dim must be at least max(n_topics, 8)")
        if self.n_journals < self.n_topics:
            raise SynthConfigError("need at least one journal per topic block")
        if not 0.0 < self.noise_radius < math.sqrt(0.5):
            raise SynthConfigError("noise_radius must lie in (0, sqrt(1/2))")
        if self.p_in <= 0 or self.p_out < 0:
            raise SynthConfigError("p_in must be positive and p_out nonnegative")
        if not 2 <= self.refs_min <= self.refs_max:
            raise SynthConfigError("reference counts must satisfy 2 <= refs_min <= refs_max")
        if not 2 <= self.mesh_min <= self.mesh_max:
            raise SynthConfigError("mesh counts must satisfy 2 <= mesh_min <= mesh_max")
        if self.mesh_max > self.mesh_per_topic + 10:
            raise SynthConfigError("more MeSH terms per document than the vocabulary permits")
        if not 2 <= self.authors_min <= self.authors_max:
            raise SynthConfigError("team sizes must satisfy 2 <= authors_min <= authors_max")
        n_diffuse = round(self.frac_diffuse * self.n_authors)
        per_topic = (self.n_authors - n_diffuse) // self.n_topics
        if per_topic + n_diffuse < self.authors_max:
            raise SynthConfigError("too few authors per topic to staff the largest team")

    @classmethod
    def from_dict(cls, obj: dict) -> "SynthConfig":
        unknown = set(obj) - set(cls.__dataclass_fields__)
        if unknown:
            raise SynthConfigError(f"unknown config keys {sorted(unknown)}")
        return cls(**obj)


def within_topic_ceiling(noise_radius: float) -> float:
    """Largest cosine distance between two documents of one topic."""
    return 2.0 * noise_radius ** 2


def cross_topic_floor(noise_radius: float) -> float:
    """Smallest cosine distance between documents of two different topics."""
    r = noise_radius
    return 1.0 - 2.0 * r * math.sqrt(1.0 - r * r)


@dataclass
class SynthCorpus:
    docs: list[dict]
    journals: list[dict]
    labels: list[dict]
    vectors: list[dict]
    truth: list[dict]
    config: SynthConfig

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "corpus": out / "corpus.jsonl",
            "journals": out / "journals.csv",
            "labels": out / "labels.jsonl",
            "vectors": out / "vectors.jsonl",
            "truth": out / "truth.jsonl",
            "config": out / "synth_config.json",
        }
        _write_jsonl(paths["corpus"], self.docs)
        _write_jsonl(paths["labels"], self.labels)
        _write_jsonl(paths["vectors"], self.vectors)
        _write_jsonl(paths["truth"], self.truth)
        with open(paths["journals"], "w", encoding="utf-8") as fh:
            fh.write("issn,sjr,category\n")
            for j in self.journals:
                fh.write(f"{j['issn']},{j['sjr']!r},{j['category']}\n")
        paths["config"].write_text(json.dumps(asdict(self.config), indent=2, sort_keys=True) + "\n")
        return paths


def _write_jsonl(path: Path, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in rows:
            fh.write(json.dumps(r, sort_keys=True) + "\n")


def _perturbed(rng: np.random.Generator, center: np.ndarray, radius: float) -> np.ndarray:
    d = rng.standard_normal(center.shape[0])
    d /= np.linalg.norm(d)
    v = center + d * (radius * rng.random())
    return v / np.linalg.norm(v)


def generate(config: SynthConfig) -> SynthCorpus:
    """Build a corpus; every document satisfies the default ingest filters."""
    config.validate()
    c = config
    rng = np.random.default_rng(c.seed)
    years = np.sort(rng.integers(c.year_start, c.year_end + 1, size=c.n_docs))

    # journals: block b holds every journal index j with j % n_topics == b
    journals = []
    block_journals: list[list[str]] = [[] for _ in range(c.n_topics)]
    for j in range(c.n_journals):
        b = j % c.n_topics
        issn = f"{1000 + j:04d}-{b:04d}"
        block_journals[b].append(issn)
        journals.append({"issn": issn, "sjr": round(float(rng.lognormal(0.3, 0.6)), 3),
                         "category": f"Field {b % max(1, c.n_topics // 2)}", "block": b})

    n_diffuse = round(c.frac_diffuse * c.n_authors)
    archetype = ["diffuse"] * n_diffuse + ["concentrated"] * (c.n_authors - n_diffuse)
    rng.shuffle(archetype)
    author_ids = [f"A{i:04d}" for i in range(c.n_authors)]
    home = {}
    conc = [a for a, kind in zip(author_ids, archetype) if kind == "concentrated"]
    for k, a in enumerate(conc):
        home[a] = k % c.n_topics
    diffuse = [a for a, kind in zip(author_ids, archetype) if kind == "diffuse"]
    pool_by_topic = [[a for a in conc if home[a] == t] + diffuse for t in range(c.n_topics)]
    # diffuse authors sit in every pool; down-weight them so every author has
    # the same expected number of papers
    pool_p = []
    for t in range(c.n_topics):
        w = np.array([1.0 if a in home else 1.0 / c.n_topics for a in pool_by_topic[t]])
        pool_p.append(w / w.sum())

    mesh_vocab = [[f"topic{t}-term{m:02d}" for m in range(c.mesh_per_topic)]
                  for t in range(c.n_topics)]
    general_mesh = [f"general-term{m:02d}" for m in range(10)]
    words = [[f"w{t}x{m}" for m in range(40)] for t in range(c.n_topics)]
    block_w = np.full((c.n_topics, c.n_topics), c.p_out, dtype=float)
    np.fill_diagonal(block_w, c.p_in)
    block_w /= block_w.sum(axis=1, keepdims=True)

    centers = np.eye(c.dim)[: c.n_topics]
    docs, vectors, doc_truth = [], [], []
    earlier_by_topic: list[list[int]] = [[] for _ in range(c.n_topics)]
    pending: list[tuple[int, int]] = []  # docs of the current year, released at year change
    cur_year = None
    doc_topic, doc_journal = [], []
    for k in range(c.n_docs):
        y = int(years[k])
        if y != cur_year:
            for idx, t in pending:
                earlier_by_topic[t].append(idx)
            pending, cur_year = [], y
        topic = int(rng.integers(c.n_topics))
        journal = block_journals[topic][int(rng.integers(len(block_journals[topic])))]
        team_size = int(rng.integers(c.authors_min, c.authors_max + 1))
        pool = pool_by_topic[topic]
        team = sorted(pool[i] for i in rng.choice(len(pool), size=team_size, replace=False,
                                                  p=pool_p[topic]))

        n_total = int(rng.integers(c.refs_min, c.refs_max + 1))
        n_cite = min(int(rng.poisson(c.citation_rate)), n_total)
        cited: list[int] = []
        for _ in range(n_cite):
            t = int(rng.choice(c.n_topics, p=block_w[topic]))
            cands = earlier_by_topic[t]
            if not cands:
                continue
            pick = cands[int(rng.integers(len(cands)))]
            if pick not in cited:
                cited.append(pick)
        ref_ids = [docs[i]["doc_id"] for i in cited]
        ref_issns = [doc_journal[i] for i in cited]
        while len(ref_ids) < n_total:
            b = int(rng.choice(c.n_topics, p=block_w[topic]))
            ref_ids.append("")
            ref_issns.append(block_journals[b][int(rng.integers(len(block_journals[b])))])

        n_mesh = int(rng.integers(c.mesh_min, c.mesh_max + 1))
        n_general = int(rng.integers(0, min(3, n_mesh - 1) + 1))
        mesh = [mesh_vocab[topic][i] for i in
                sorted(rng.choice(c.mesh_per_topic, size=n_mesh - n_general, replace=False))]
        mesh += [general_mesh[i] for i in sorted(rng.choice(10, size=n_general, replace=False))]

        title = " ".join(words[topic][i] for i in rng.integers(0, 40, size=6))
        abstract = " ".join(words[topic][i] for i in rng.integers(0, 40, size=25))
        doc_id = f"D{k:05d}"
        docs.append({
            "doc_id": doc_id, "year": y, "title": title, "abstract": abstract,
            "journal_issn": journal, "mesh_terms": mesh, "author_ids": team,
            "ref_doc_ids": ref_ids, "ref_journal_issns": ref_issns,
        })
        vec = _perturbed(rng, centers[topic], c.noise_radius)
        vectors.append({"doc_id": doc_id, "values": vec.tolist()})
        doc_topic.append(topic)
        doc_journal.append(journal)
        doc_truth.append({"type": "doc", "id": doc_id, "topic": topic})
        pending.append((k, topic))

    labels = []
    for k in range(c.n_docs):
        if rng.random() >= c.label_fraction:
            continue
        cats = []
        if rng.random() < 0.8:
            cats.append("New Finding")
        for lab in NOVEL_LABELS:
            if rng.random() < 0.15:
                cats.append(lab)
        for lab in OTHER_LABELS:
            if rng.random() < 0.05:
                cats.append(lab)
        if not cats:
            cats.append("Confirmation")
        labels.append({"doc_id": docs[k]["doc_id"], "categories": cats})

    truth = [{"type": "author", "id": a, "archetype": kind, "home_topic": home.get(a)}
             for a, kind in zip(author_ids, archetype)]
    truth += [{"type": "journal", "id": j["issn"], "block": j["block"]} for j in journals]
    truth += doc_truth
    journal_rows = [{k: v for k, v in j.items() if k != "block"} for j in journals]
    return SynthCorpus(docs, journal_rows, labels, vectors, truth, config)


def load_truth(path: str | Path) -> dict[str, dict]:
    """Truth sidecar keyed by ``"<type>:<id>"``."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                row = json.loads(line)
                out[f"{row['type']}:{row['id']}"] = row
    return out
