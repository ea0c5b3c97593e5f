"""Per-year entity co-occurrence tables and the structures built on them.

Entities are either the journals of a document's references or its MeSH
terms. A document contributes every unordered pair over its entity list,
with multiplicity, diagonal pairs included. On top of the yearly tables this
module provides the citation-switching null model, commonness ratios,
modularity communities, first-appearance lookups and co-occurrence profile
similarity.
"""
from __future__ import annotations

import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import networkx as nx
import numpy as np

from .corpus import CorpusIndex, DocumentRecord

log = logging.getLogger(__name__)

KINDS = ("journal", "mesh")
Pair = tuple[str, str]



def _write_rows(path: str | Path, header: str, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(header + "\n")
        for r in rows:
            fh.write(",".join(repr(v) for v in r) + "\n")


def _read_rows(path: str | Path) -> list[list[str]]:
    with open(path, encoding="utf-8") as fh:
        next(fh)
        return [line.rstrip("\n").split(",") for line in fh if line.strip()]


def _check_kind(kind: str) -> None:
    if kind not in KINDS:
        raise ValueError(f"entity kind must be one of {KINDS}, got {kind!r}")


def entities(doc: DocumentRecord, kind: str) -> list[str]:
    """Entity list of a document; references without an ISSN are left out."""
    _check_kind(kind)
    if kind == "journal":
        return [j for j in doc.ref_journal_issns if j]
    return list(doc.mesh_terms)


def canonical(a: str, b: str) -> Pair:
    return (a, b) if a <= b else (b, a)


def pairs_of(ents: Sequence[str]) -> list[Pair]:
    return [canonical(a, b) for a, b in combinations(ents, 2)]


def pair_multiset(doc: DocumentRecord, kind: str) -> list[Pair]:
    """All C(m, 2) unordered entity pairs of ``doc``, with multiplicity."""
    return pairs_of(entities(doc, kind))


@dataclass
class EntityVocabulary:
    kind: str
    entities: list[str]

    def __post_init__(self):
        self._ids = {e: i for i, e in enumerate(self.entities)}
        if len(self._ids) != len(self.entities):
            raise ValueError("vocabulary entries must be unique")

    @classmethod
    def from_index(cls, index: CorpusIndex, kind: str) -> "EntityVocabulary":
        seen: set[str] = set()
        for d in index:
            seen.update(entities(d, kind))
        return cls(kind, sorted(seen))

    def id(self, entity: str) -> int:
        return self._ids[entity]

    def __len__(self) -> int:
        return len(self.entities)

    def save(self, path: str | Path) -> None:
        Path(path).write_text("".join(e + "\n" for e in self.entities), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path, kind: str) -> "EntityVocabulary":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls(kind, lines)


@dataclass
class PairCountTable:
    """Symmetric pair counts for one year, stored over canonical pairs ``a <= b``."""

    year: int
    counts: Counter = field(default_factory=Counter)

    def __post_init__(self):
        self._marg: Counter | None = None
        self._rows: dict[str, Counter] | None = None

    def add_pairs(self, pairs: Iterable[Pair]) -> None:
        self.counts.update(pairs)
        self._marg = self._rows = None

    def merge(self, other: "PairCountTable") -> "PairCountTable":
        out = PairCountTable(self.year, self.counts + other.counts)
        return out

    def n(self, a: str, b: str) -> int:
        return self.counts.get(canonical(a, b), 0)

    @property
    def marginals(self) -> Counter:
        if self._marg is None:
            m: Counter = Counter()
            for (a, b), c in self.counts.items():
                m[a] += c
                if a != b:
                    m[b] += c
            self._marg = m
        return self._marg

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def row(self, entity: str) -> Counter:
        if self._rows is None:
            rows: dict[str, Counter] = defaultdict(Counter)
            for (a, b), c in self.counts.items():
                rows[a][b] += c
                if a != b:
                    rows[b][a] += c
            self._rows = dict(rows)
        return self._rows.get(entity, Counter())

    def save(self, path: str | Path, vocab: EntityVocabulary) -> None:
        """CSV of vocabulary ids ``i,j,n``."""
        rows = sorted((vocab.id(a), vocab.id(b), c) for (a, b), c in self.counts.items())
        _write_rows(path, "i,j,n", rows)

    @classmethod
    def load(cls, path: str | Path, vocab: EntityVocabulary, year: int) -> "PairCountTable":
        ents = vocab.entities
        return cls(year, Counter({(ents[int(i)], ents[int(j)]): int(n)
                                  for i, j, n in _read_rows(path)}))


def build_counts(
    index: CorpusIndex, kind: str, year: int, per_document: bool = False
) -> PairCountTable:
    """Sum the pair multisets of every document published in ``year``.

    With ``per_document`` each pair counts at most once per document, which
    gives the number of documents containing the pair.
    """
    table = PairCountTable(year)
    for doc_id in index.docs_in_year(year):
        pairs = pair_multiset(index.doc(doc_id), kind)
        table.add_pairs(set(pairs) if per_document else pairs)
    return table


def build_history(
    index: CorpusIndex, kind: str, per_document: bool = False
) -> dict[int, PairCountTable]:
    """Tables for every year from the first to the last publication year."""
    years = index.years
    if not years:
        return {}
    return {y: build_counts(index, kind, y, per_document) for y in range(years[0], years[-1] + 1)}


# -- null model --------------------------------------------------------------

@dataclass
class SlotLayout:
    """Reference slots of one year's documents, grouped into swap strata."""

    doc_ids: list[str]
    owner: np.ndarray          # slot -> position in doc_ids
    entity: list[str]          # slot -> entity currently in the slot
    stratum: list[object]      # slot -> cited-year stratum (None when unknown)

    def strata_members(self) -> dict[object, np.ndarray]:
        groups: dict[object, list[int]] = defaultdict(list)
        for s, key in enumerate(self.stratum):
            groups[key].append(s)
        return {k: np.asarray(v, dtype=np.int64) for k, v in groups.items()}

    def doc_entities(self, entity: Sequence[str] | None = None) -> list[list[str]]:
        entity = self.entity if entity is None else entity
        out: list[list[str]] = [[] for _ in self.doc_ids]
        for s, pos in enumerate(self.owner):
            out[pos].append(entity[s])
        return out


def slot_layout(index: CorpusIndex, kind: str, year: int) -> SlotLayout:
    """Slots in canonical order: documents by id, then (entity, cited year) within a document.

    Journal slots are stratified by the publication year of the cited
    document; references resolving outside the corpus share one unknown-year
    stratum. MeSH slots form a single stratum.
    """
    _check_kind(kind)
    doc_ids, owner, ent, strat = [], [], [], []
    for doc_id in index.docs_in_year(year):
        d = index.doc(doc_id)
        if kind == "journal":
            items = [
                (j, index.doc(r).year if r and r in index else None)
                for r, j in zip(d.ref_doc_ids, d.ref_journal_issns) if j
            ]
        else:
            items = [(m, None) for m in d.mesh_terms]
        if not items:
            continue
        # canonical slot order makes the resample stream independent of reference order
        items.sort(key=lambda it: (it[0], -1 if it[1] is None else it[1]))
        pos = len(doc_ids)
        doc_ids.append(doc_id)
        for e, key in items:
            owner.append(pos)
            ent.append(e)
            strat.append(key)
    return SlotLayout(doc_ids, np.asarray(owner, dtype=np.int64), ent, strat)


def iter_resamples(
    layout: SlotLayout, m: int, seed: int, swap_factor: int = 10
) -> Iterator[list[str]]:
    """Yield the slot entity assignment of each of ``m`` resamples.

    Resample ``r`` draws from ``numpy.random.default_rng(seed + r)``. Each of
    ``swap_factor * n_slots`` attempts picks a slot uniformly, then a partner
    uniformly within the same stratum, and swaps their entities when the two
    slots belong to different documents.
    """
    n = len(layout.entity)
    groups = layout.strata_members()
    group_of = [groups[k] for k in layout.stratum]
    owner = layout.owner
    for r in range(m):
        rng = np.random.default_rng(seed + r)
        ent = list(layout.entity)
        if n == 0:
            yield ent
            continue
        n_attempts = swap_factor * n
        first = rng.integers(0, n, size=n_attempts)
        u = rng.random(n_attempts)
        for s1, x in zip(first.tolist(), u.tolist()):
            g = group_of[s1]
            s2 = int(g[int(x * len(g))])
            if owner[s1] != owner[s2]:
                ent[s1], ent[s2] = ent[s2], ent[s1]
        yield ent


@dataclass
class NullModelStats:
    year: int
    mean: dict[Pair, float]
    sd: dict[Pair, float]
    m: int
    seed: int

    def z(self, pair: Pair, observed: int) -> float | None:
        """Standard score of ``observed``; None when the pair has no spread."""
        sd = self.sd.get(pair, 0.0)
        if sd <= 0.0:
            return None
        return (observed - self.mean[pair]) / sd

    def save(self, path: str | Path, vocab: EntityVocabulary) -> None:
        """CSV of vocabulary ids ``i,j,mean,sd``; floats round-trip exactly."""
        rows = sorted(
            (vocab.id(a), vocab.id(b), self.mean[(a, b)], self.sd[(a, b)])
            for (a, b) in self.mean
        )
        _write_rows(path, "i,j,mean,sd", rows)

    @classmethod
    def load(cls, path: str | Path, vocab: EntityVocabulary, year: int, m: int, seed: int):
        ents = vocab.entities
        mean, sd = {}, {}
        for i, j, mu, s in _read_rows(path):
            pair = (ents[int(i)], ents[int(j)])
            mean[pair] = float(mu)
            sd[pair] = float(s)
        return cls(year, mean, sd, m, seed)


def moments(samples: Sequence[int]) -> tuple[float, float]:
    """Mean and sample standard deviation of integer counts, exactly rounded."""
    m = len(samples)
    s1 = sum(samples)
    s2 = sum(c * c for c in samples)
    return s1 / m, math.sqrt((m * s2 - s1 * s1) / (m * (m - 1)))


def null_resample(
    index: CorpusIndex, kind: str, year: int, m: int = 20, seed: int = 0,
    swap_factor: int = 10,
) -> NullModelStats:
    """Monte-Carlo null mean and sd of every pair count for ``year``."""
    if m < 2:
        raise ValueError(f"need at least 2 resamples for a standard deviation, got {m}")
    layout = slot_layout(index, kind, year)
    observed = Counter()
    for ents in layout.doc_entities():
        observed.update(pairs_of(ents))
    per_sample: list[Counter] = []
    for ent in iter_resamples(layout, m, seed, swap_factor):
        c: Counter = Counter()
        for doc_ents in layout.doc_entities(ent):
            c.update(pairs_of(doc_ents))
        per_sample.append(c)
    keys = set(observed)
    for c in per_sample:
        keys.update(c)
    mean, sd = {}, {}
    for p in sorted(keys):
        mu, s = moments([c.get(p, 0) for c in per_sample])
        mean[p] = mu
        sd[p] = s
    return NullModelStats(year, mean, sd, m, seed)


# -- commonness, history, profiles -----------------------------------------------

def commonness(table: PairCountTable, pair: Pair) -> float:
    """Observed-to-expected ratio ``N_ij * N_t / (N_i * N_j)``; 0 for unseen pairs."""
    a, b = canonical(*pair)
    nij = table.counts.get((a, b), 0)
    if nij == 0:
        return 0.0
    marg = table.marginals
    ni, nj = marg[a], marg[b]
    if ni == 0 or nj == 0:
        raise RuntimeError(f"pair {pair} counted without marginals")
    return (nij * table.total) / (ni * nj)


def first_year_map(history: Mapping[int, PairCountTable]) -> dict[Pair, int]:
    first: dict[Pair, int] = {}
    for year in sorted(history):
        for p, c in history[year].counts.items():
            if c >= 1 and p not in first:
                first[p] = year
    return first


def pair_first_year(
    history: Mapping[int, PairCountTable], pair: Pair, before: int | None = None
) -> int | None:
    """Earliest year with a nonzero count for ``pair`` (restricted to years < before)."""
    p = canonical(*pair)
    for year in sorted(history):
        if before is not None and year >= before:
            break
        if history[year].counts.get(p, 0) >= 1:
            return year
    return None


def profile_rows(tables: Iterable[PairCountTable], *ents: str) -> list[Counter]:
    rows = [Counter() for _ in ents]
    for t in tables:
        for r, e in zip(rows, ents):
            r.update(t.row(e))
    return rows


def profile_similarity(tables: Iterable[PairCountTable], i: str, j: str) -> float:
    """Cosine similarity of the co-occurrence rows of ``i`` and ``j`` summed over ``tables``."""
    ri, rj = profile_rows(list(tables), i, j)
    ni = sum(c * c for c in ri.values())
    nj = sum(c * c for c in rj.values())
    if ni == 0 or nj == 0:
        return 0.0
    dot = sum(c * rj.get(k, 0) for k, c in ri.items())
    return dot / math.sqrt(ni * nj)


# -- communities -------------------------------------------------------------

@dataclass
class CommunityPartition:
    years: tuple[int, ...]
    membership: dict[str, int]
    modularity: float
    seed: int
    resolution: float = 1.0

    def same(self, a: str, b: str) -> bool | None:
        ca, cb = self.membership.get(a), self.membership.get(b)
        if ca is None or cb is None:
            return None
        return ca == cb

    def to_dict(self) -> dict:
        return {
            "years": list(self.years),
            "membership": dict(sorted(self.membership.items())),
            "modularity": self.modularity,
            "seed": self.seed,
            "resolution": self.resolution,
        }

    @classmethod
    def from_dict(cls, obj: Mapping) -> "CommunityPartition":
        return cls(tuple(obj["years"]), dict(obj["membership"]), obj["modularity"],
                   obj["seed"], obj.get("resolution", 1.0))


def partition_graph(
    weights: Mapping[Pair, int | float], resolution: float = 1.0, seed: int = 0
) -> tuple[dict[str, int], float]:
    """Louvain partition of a weighted co-occurrence network.

    Nodes and edges are inserted in sorted order so the result depends only
    on the weights and the seed. Community ids are numbered by each
    community's smallest member.
    """
    if not weights:
        raise ValueError("cannot partition an empty network")
    g = nx.Graph()
    g.add_nodes_from(sorted({e for p in weights for e in p}))
    for (a, b), w in sorted(weights.items()):
        if w > 0:
            g.add_edge(a, b, weight=w)
    if g.number_of_edges() == 0:
        raise ValueError("cannot partition a network without edges")
    comms = nx.community.louvain_communities(g, weight="weight", resolution=resolution, seed=seed)
    comms = sorted((sorted(c) for c in comms), key=lambda c: c[0])
    membership = {e: k for k, members in enumerate(comms) for e in members}
    q = nx.community.modularity(g, [set(c) for c in comms], weight="weight", resolution=resolution)
    return membership, q


def community_partition(
    index: CorpusIndex | None,
    kind: str,
    years: Iterable[int],
    resolution: float = 1.0,
    seed: int = 0,
    history: Mapping[int, PairCountTable] | None = None,
) -> CommunityPartition:
    """Partition the co-occurrence network accumulated over ``years``."""
    years = tuple(sorted(years))
    acc: Counter = Counter()
    for y in years:
        t = history[y] if history is not None and y in history else (
            build_counts(index, kind, y) if index is not None else None)
        if t is not None:
            acc.update(t.counts)
    membership, q = partition_graph(acc, resolution, seed)
    return CommunityPartition(years, membership, q, seed, resolution)
