"""Disruption and consolidation indicators of a focal document.

Citers of the focal paper are split by how many of the focal paper's
references they also cite; later papers that cite those references while
ignoring the focal paper form the third group. Only in-corpus citation
edges are used.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

from .corpus import CorpusIndex, citing_papers


@dataclass
class DisruptionCounts:
    focal: str
    citers: frozenset[str]
    focal_refs: frozenset[str]
    n_k: int
    citer_ref_overlap: dict[str, int] = field(default_factory=dict)
    citer_mutual: dict[str, bool] = field(default_factory=dict)

    def n_i(self, level: int = 1) -> int:
        return sum(1 for c in self.citer_ref_overlap.values() if c < level)

    def n_j(self, level: int = 1) -> int:
        return sum(1 for c in self.citer_ref_overlap.values() if c >= level)


def disruption_counts(
    index: CorpusIndex, focal: str, horizon: int | None = None
) -> DisruptionCounts:
    """Count primitives for the disruption family.

    ``horizon`` caps the publication year of citers and of k-type papers at
    ``focal year + horizon``.
    """
    doc = index.doc(focal)
    max_year = None if horizon is None else doc.year + horizon

    def in_window(d: str) -> bool:
        return max_year is None or index.doc(d).year <= max_year

    refs = frozenset(index.resolved_refs(focal))
    citers = frozenset(c for c in citing_papers(index, focal) if in_window(c))
    overlap = {}
    mutual = {}
    for c in sorted(citers):
        c_refs = set(index.resolved_refs(c))
        overlap[c] = len(c_refs & refs)
        mutual[c] = any(r in citers for r in c_refs if r != c)
    k_papers: set[str] = set()
    for r in refs:
        for p in citing_papers(index, r):
            if p == focal or p in citers:
                continue
            if index.doc(p).year >= doc.year and in_window(p):
                k_papers.add(p)
    return DisruptionCounts(focal, citers, refs, len(k_papers), overlap, mutual)


def di(counts: DisruptionCounts, level: int = 1, with_k: bool = True) -> float | None:
    ni, nj = counts.n_i(level), counts.n_j(level)
    denom = ni + nj + (counts.n_k if with_k else 0)
    if denom == 0:
        return None
    return (ni - nj) / denom


def dein(counts: DisruptionCounts) -> float | None:
    """Mean number of focal references cited by each citer."""
    if not counts.citer_ref_overlap:
        return None
    return math.fsum(counts.citer_ref_overlap.values()) / len(counts.citer_ref_overlap)


def breadth_depth(counts: DisruptionCounts) -> tuple[float, float] | None:
    """(breadth, depth); a citer is dependent when it cites another citer."""
    if not counts.citer_mutual:
        return None
    dependent = sum(counts.citer_mutual.values())
    depth = dependent / len(counts.citer_mutual)
    return 1.0 - depth, depth


@dataclass
class ImpactScores:
    doc_id: str
    citation_count: int
    di1: float | None
    di5: float | None
    di1nok: float | None
    dein: float | None
    breadth: float | None
    depth: float | None

    FIELDS = ("citation_count", "di1", "di5", "di1nok", "dein", "breadth", "depth")

    def as_row(self) -> dict:
        return {"doc_id": self.doc_id, **{f: getattr(self, f) for f in self.FIELDS}}


def impact_scores(index: CorpusIndex, focal: str, horizon: int | None = None) -> ImpactScores:
    counts = disruption_counts(index, focal, horizon)
    bd = breadth_depth(counts)
    return ImpactScores(
        doc_id=focal,
        citation_count=len(counts.citers),
        di1=di(counts, 1, True),
        di5=di(counts, 5, True),
        di1nok=di(counts, 1, False),
        dein=dein(counts),
        breadth=None if bd is None else bd[0],
        depth=None if bd is None else bd[1],
    )


def impact_table(index: CorpusIndex, doc_ids: Iterable[str] | None = None,
                 horizon: int | None = None) -> list[ImpactScores]:
    ids = index.doc_ids if doc_ids is None else list(doc_ids)
    return [impact_scores(index, d, horizon) for d in ids]
