"""Per-document combinatorial novelty scores.

Five indicator families are computed on a chosen entity kind:

* ``uzzi`` - negated low percentile of pair z-scores against the switching null
* ``lee`` - negated log of a low percentile of pair commonness
* ``foster`` - share of pairs bridging two communities of the prior network
* ``wang`` - summed dissimilarity of new pairs that get reused later
* ``shibayama`` - aggregated semantic distance between embedded references

Larger is more novel for every score.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping

from .cognitive import percentile
from .cooc import (
    CommunityPartition,
    NullModelStats,
    Pair,
    PairCountTable,
    build_history,
    commonness,
    community_partition,
    entities,
    first_year_map,
    null_resample,
    pair_multiset,
    profile_similarity,
)
from .corpus import CorpusIndex, DocumentRecord
from .embed import VectorStore, cosine_distance

log = logging.getLogger(__name__)

SCORE_NAMES = ("uzzi", "lee", "foster", "wang", "shibayama")


class MissingFutureError(LookupError):
    """Raised when the reuse window extends past the available tables."""


@dataclass
class NoveltyScores:
    doc_id: str
    kind: str
    uzzi: float | None = None
    lee: float | None = None
    foster: float | None = None
    wang: float | None = None
    shibayama: float | None = None
    reasons: dict[str, str] = field(default_factory=dict)

    def as_row(self) -> dict:
        row = {"doc_id": self.doc_id}
        for name in SCORE_NAMES:
            row[name] = getattr(self, name)
        for name in SCORE_NAMES:
            row[f"{name}_missing"] = self.reasons.get(name, "")
        return row


def _aggregate(values: list[float], agg: str, q: float) -> float:
    if agg == "mean":
        return math.fsum(values) / len(values)
    if agg == "percentile":
        return percentile(values, q)
    raise ValueError(f"unknown aggregation {agg!r}")


def uzzi_score(
    doc: DocumentRecord, table: PairCountTable, null: NullModelStats, kind: str = "journal",
    agg_q: float = 10.0, agg: str = "percentile",
) -> float | None:
    zs = []
    for p in pair_multiset(doc, kind):
        z = null.z(p, table.counts.get(p, 0))
        if z is not None:
            zs.append(z)
    if not zs:
        return None
    return -_aggregate(zs, agg, agg_q)


def lee_score(
    doc: DocumentRecord, table: PairCountTable, kind: str = "journal",
    agg_q: float = 10.0, agg: str = "percentile",
) -> float | None:
    cs = [commonness(table, p) for p in pair_multiset(doc, kind)]
    if not cs:
        return None
    level = _aggregate(cs, agg, agg_q)
    if level <= 0.0:
        return None
    return -math.log(level)


def foster_score(
    doc: DocumentRecord, partition: CommunityPartition | None, kind: str = "journal"
) -> float | None:
    if partition is None:
        return None
    bridging = scored = 0
    for a, b in pair_multiset(doc, kind):
        same = partition.same(a, b)
        if same is None:
            continue
        scored += 1
        bridging += not same
    if scored == 0:
        return None
    return bridging / scored


def wang_score(
    doc: DocumentRecord,
    history: Mapping[int, PairCountTable],
    future_tables: Mapping[int, PairCountTable],
    kind: str = "journal",
    reuse_window: int = 3,
    min_reuse: int = 1,
    profile_window: int = 3,
    first_seen: Mapping[Pair, int] | None = None,
) -> float | None:
    """Sum of ``1 - profile similarity`` over new pairs reused in later documents.

    ``history`` holds pair-instance tables; ``future_tables`` hold
    per-document counts so reuse is measured in documents.
    """
    pairs = pair_multiset(doc, kind)
    if len(entities(doc, kind)) < 2:
        return None
    t = doc.year
    horizon = range(t + 1, t + reuse_window + 1)
    absent = [y for y in horizon if y not in future_tables]
    if absent:
        raise MissingFutureError(f"{doc.doc_id}: no tables for reuse years {absent}")
    if first_seen is None:
        first_seen = first_year_map({y: tb for y, tb in history.items() if y < t})
    profile_tables = [history[y] for y in range(t - profile_window, t) if y in history]
    terms = []
    for p in sorted(set(pairs)):
        seen = first_seen.get(p)
        if seen is not None and seen < t:
            continue
        reuse = sum(future_tables[y].counts.get(p, 0) for y in horizon)
        if reuse < min_reuse:
            continue
        terms.append(1.0 - profile_similarity(profile_tables, *p))
    return math.fsum(terms)


def reference_vectors(doc: DocumentRecord, store: VectorStore) -> list:
    seen, out = set(), []
    for r in doc.ref_doc_ids:
        if r and r not in seen:
            seen.add(r)
            v = store.get(r)
            if v is not None:
                out.append(v)
    return out


def shibayama_score(
    doc: DocumentRecord, store: VectorStore, agg: str = "percentile", q: float = 90.0
) -> float | None:
    vecs = reference_vectors(doc, store)
    if len(vecs) < 2:
        return None
    dists = [cosine_distance(vecs[i], vecs[j])
             for i in range(len(vecs)) for j in range(i + 1, len(vecs))]
    return _aggregate(dists, agg, q)


@dataclass
class NoveltyConfig:
    null_m: int = 20
    swap_factor: int = 10
    seed: int = 0
    uzzi_q: float = 10.0
    uzzi_agg: str = "percentile"
    lee_q: float = 10.0
    lee_agg: str = "percentile"
    foster_window: int = 3
    resolution: float = 1.0
    reuse_window: int = 3
    min_reuse: int = 1
    profile_window: int = 3
    shibayama_agg: str = "percentile"
    shibayama_q: float = 90.0


class NoveltyEngine:
    """Holds the per-year tables, nulls and partitions for one entity kind."""

    def __init__(self, index: CorpusIndex, kind: str, store: VectorStore | None = None,
                 config: NoveltyConfig = NoveltyConfig()):
        self.index = index
        self.kind = kind
        self.store = store
        self.config = config
        self.history = build_history(index, kind)
        self.doc_tables = build_history(index, kind, per_document=True)
        self.first_seen = first_year_map(self.history)
        self._nulls: dict[int, NullModelStats] = {}
        self._partitions: dict[int, CommunityPartition | None] = {}

    def null(self, year: int) -> NullModelStats:
        if year not in self._nulls:
            c = self.config
            self._nulls[year] = null_resample(self.index, self.kind, year, c.null_m, c.seed,
                                              c.swap_factor)
        return self._nulls[year]

    def partition(self, year: int) -> CommunityPartition | None:
        """Communities of the network over the ``foster_window`` years before ``year``."""
        if year not in self._partitions:
            years = [y for y in range(year - self.config.foster_window, year) if y in self.history]
            try:
                self._partitions[year] = community_partition(
                    None, self.kind, years, self.config.resolution, self.config.seed,
                    history=self.history)
            except ValueError:
                self._partitions[year] = None
        return self._partitions[year]

    def score(self, doc_id: str) -> NoveltyScores:
        c = self.config
        doc = self.index.doc(doc_id)
        out = NoveltyScores(doc_id, self.kind)
        table = self.history.get(doc.year, PairCountTable(doc.year))
        if len(entities(doc, self.kind)) < 2:
            for name in ("uzzi", "lee", "foster", "wang"):
                out.reasons[name] = "lt2_entities"
        else:
            out.uzzi = uzzi_score(doc, table, self.null(doc.year), self.kind, c.uzzi_q, c.uzzi_agg)
            if out.uzzi is None:
                out.reasons["uzzi"] = "zero_sd"
            out.lee = lee_score(doc, table, self.kind, c.lee_q, c.lee_agg)
            if out.lee is None:
                out.reasons["lee"] = "zero_commonness"
            part = self.partition(doc.year)
            out.foster = foster_score(doc, part, self.kind)
            if out.foster is None:
                out.reasons["foster"] = "no_partition" if part is None else "unpartitioned"
            try:
                out.wang = wang_score(doc, self.history, self.doc_tables, self.kind,
                                      c.reuse_window, c.min_reuse, c.profile_window,
                                      self.first_seen)
            except MissingFutureError:
                out.reasons["wang"] = "no_future"
        if self.store is None:
            out.reasons["shibayama"] = "no_vectors"
        else:
            out.shibayama = shibayama_score(doc, self.store, c.shibayama_agg, c.shibayama_q)
            if out.shibayama is None:
                out.reasons["shibayama"] = "lt2_embedded_refs"
        return out
