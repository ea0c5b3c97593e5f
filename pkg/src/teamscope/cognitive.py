"""Exploratory profiles and cognitive diversity of author teams.

An author's exploratory profile is a high percentile of the semantic
distances among their recent past publications. A team's cognitive diversity
is the same percentile over the pooled distances between different members'
past publications. Scoring and classification are separate passes: the
exploratory/exploitative cutoffs are fitted on the scored sample first.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

from .corpus import CorpusIndex, author_past_pubs
from .embed import DocVector, VectorStore, cosine_distance

DEFAULT_WINDOW = 5
DEFAULT_Q = 90.0


def percentile(values: Iterable[float], q: float) -> float:
    """Linear-interpolation percentile between order statistics.

    With sorted values ``v`` and ``p = q/100 * (n - 1)``, returns
    ``v[floor(p)] + frac(p) * (v[floor(p) + 1] - v[floor(p)])``.
    """
    v = sorted(values)
    if not v:
        raise ValueError("percentile of an empty collection")
    if not 0.0 <= q <= 100.0:
        raise ValueError(f"q must lie in [0, 100], got {q}")
    p = q / 100.0 * (len(v) - 1)
    lo = math.floor(p)
    frac = p - lo
    if lo + 1 >= len(v) or frac == 0.0:
        return v[lo]
    return v[lo] + frac * (v[lo + 1] - v[lo])


def _embedded_past(
    index: CorpusIndex, store: VectorStore, author_id: str, t: int, b: int,
    skipped: Counter | None,
) -> list[DocVector]:
    out = []
    for doc_id in author_past_pubs(index, author_id, t, b):
        vec = store.get(doc_id)
        if vec is None:
            if skipped is not None:
                skipped["no_vector"] += 1
            continue
        out.append(vec)
    return out


def intra_distances(vectors: Sequence[DocVector]) -> list[float]:
    return [cosine_distance(u, v) for u, v in combinations(vectors, 2)]


def intra_author(
    author_id: str,
    focal_doc: str,
    index: CorpusIndex,
    store: VectorStore,
    b: int = DEFAULT_WINDOW,
    q: float = DEFAULT_Q,
    skipped: Counter | None = None,
) -> float | None:
    """q-th percentile of pairwise distances over the author's window of past work.

    None when fewer than two past publications carry a vector.
    """
    t = index.doc(focal_doc).year
    vecs = _embedded_past(index, store, author_id, t, b, skipped)
    if len(vecs) < 2:
        return None
    return percentile(intra_distances(vecs), q)


def team_intra(per_author: Iterable[float | None]) -> float | None:
    """Mean of the defined per-author scores; None when no author is scored."""
    vals = [v for v in per_author if v is not None]
    if not vals:
        return None
    return math.fsum(vals) / len(vals)


def inter_distances(portfolios: Sequence[Sequence[DocVector]]) -> list[float]:
    pooled = []
    for pa, pe in combinations(portfolios, 2):
        for u in pa:
            for v in pe:
                pooled.append(cosine_distance(u, v))
    return pooled


def inter_author(
    focal_doc: str,
    index: CorpusIndex,
    store: VectorStore,
    b: int = DEFAULT_WINDOW,
    q: float = DEFAULT_Q,
) -> float | None:
    """q-th percentile of cross-member distances pooled over all author pairs."""
    doc = index.doc(focal_doc)
    if len(doc.author_ids) < 2:
        return None
    portfolios = [_embedded_past(index, store, a, doc.year, b, None) for a in doc.author_ids]
    pooled = inter_distances(portfolios)
    if not pooled:
        return None
    return percentile(pooled, q)


@dataclass
class TeamScores:
    focal_doc_id: str
    per_author_intra: dict[str, float | None]
    intra_fp: float | None
    inter_fp: float | None

    @property
    def n_authors(self) -> int:
        return len(self.per_author_intra)

    @property
    def n_authors_scored(self) -> int:
        return sum(v is not None for v in self.per_author_intra.values())


def score_team(
    focal_doc: str,
    index: CorpusIndex,
    store: VectorStore,
    b: int = DEFAULT_WINDOW,
    q: float = DEFAULT_Q,
    skipped: Counter | None = None,
) -> TeamScores:
    doc = index.doc(focal_doc)
    portfolios = {
        a: _embedded_past(index, store, a, doc.year, b, skipped) for a in doc.author_ids
    }
    per_author = {
        a: (percentile(intra_distances(p), q) if len(p) >= 2 else None)
        for a, p in portfolios.items()
    }
    inter = None
    if len(portfolios) >= 2:
        pooled = inter_distances(list(portfolios.values()))
        if pooled:
            inter = percentile(pooled, q)
    return TeamScores(focal_doc, per_author, team_intra(per_author.values()), inter)


@dataclass(frozen=True)
class ProfileThresholds:
    exploratory_cutoff: float
    exploitative_cutoff: float
    n_scores: int = 0
    level: str = "author"


def fit_thresholds(
    scores: Iterable[float | None],
    exploratory_q: float = 90.0,
    exploitative_q: float = 50.0,
    level: str = "author",
) -> ProfileThresholds:
    """Cutoffs from the sample distribution of intra scores.

    ``level`` records which distribution the scores came from: per-author
    scores pooled over all teams (``"author"``) or team means (``"team"``).
    """
    vals = [s for s in scores if s is not None]
    if len(vals) < 10:
        raise ValueError(f"need at least 10 defined scores to fit thresholds, got {len(vals)}")
    return ProfileThresholds(
        percentile(vals, exploratory_q), percentile(vals, exploitative_q), len(vals), level
    )


def threshold_sample(teams: Iterable[TeamScores], level: str = "author") -> list[float]:
    """Scores that thresholds are fitted on, in deterministic team order."""
    if level == "author":
        return [v for t in teams for v in t.per_author_intra.values() if v is not None]
    if level == "team":
        return [t.intra_fp for t in teams if t.intra_fp is not None]
    raise ValueError(f"unknown threshold level {level!r}")


@dataclass
class TeamCognitiveMetrics:
    focal_doc_id: str
    intra_fp: float | None
    inter_fp: float | None
    per_author_intra: dict[str, float | None] = field(default_factory=dict)
    n_exploratory: int = 0
    n_exploitative: int = 0
    share_exploratory: float = 0.0
    share_exploitative: float = 0.0
    interaction: float = 0.0
    exploratory_authors: tuple[str, ...] = ()
    exploitative_authors: tuple[str, ...] = ()

    @property
    def n_authors_scored(self) -> int:
        return sum(v is not None for v in self.per_author_intra.values())


def team_composition(scores: TeamScores, thresholds: ProfileThresholds) -> TeamCognitiveMetrics:
    """Count highly exploratory / exploitative members and their team shares.

    Unscored authors count toward team size but belong to neither class.
    """
    explo = tuple(sorted(
        a for a, v in scores.per_author_intra.items()
        if v is not None and v >= thresholds.exploratory_cutoff
    ))
    exploit = tuple(sorted(
        a for a, v in scores.per_author_intra.items()
        if v is not None and v <= thresholds.exploitative_cutoff
    ))
    size = scores.n_authors
    s_explo = len(explo) / size if size else 0.0
    s_exploit = len(exploit) / size if size else 0.0
    return TeamCognitiveMetrics(
        focal_doc_id=scores.focal_doc_id,
        intra_fp=scores.intra_fp,
        inter_fp=scores.inter_fp,
        per_author_intra=dict(scores.per_author_intra),
        n_exploratory=len(explo),
        n_exploitative=len(exploit),
        share_exploratory=s_explo,
        share_exploitative=s_exploit,
        interaction=s_explo * s_exploit,
        exploratory_authors=explo,
        exploitative_authors=exploit,
    )
