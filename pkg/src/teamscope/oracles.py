"""Definition-level brute-force recomputation of every indicator.

These functions take plain document lists and scan them directly. They
share no code with the indicator modules beyond the record type, and are
quadratic or worse; use them on small corpora only. Seeded components (the
switching null, the Louvain partition) follow the same documented seeding
protocol so that results match the engine exactly.
"""
from __future__ import annotations

import math
import random
from fractions import Fraction
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from .corpus import DocumentRecord


def _by_id(docs: Sequence[DocumentRecord]) -> dict[str, DocumentRecord]:
    return {d.doc_id: d for d in docs}


def oracle_percentile(values, q: float) -> float:
    v = sorted(values)
    pos = (q / 100.0) * (len(v) - 1)
    k = int(math.floor(pos))
    f = pos - k
    if f == 0.0 or k == len(v) - 1:
        return v[k]
    return v[k] + f * (v[k + 1] - v[k])


def oracle_distance(u, v) -> float:
    a, b = list(map(float, u)), list(map(float, v))
    if a == b:
        return 0.0
    d = 1.0 - math.fsum(x * y for x, y in zip(a, b))
    return min(2.0, max(0.0, d))


# -- cognitive --------------------------------------------------------------------

def _past(docs, author, t, b, vectors):
    hits = sorted((d.year, d.doc_id) for d in docs
                  if author in d.author_ids and t - b <= d.year <= t - 1)
    return [vectors[i] for _, i in hits if i in vectors]


def oracle_intra(docs, vectors: Mapping, author: str, focal: str, b=5, q=90.0):
    t = _by_id(docs)[focal].year
    past = _past(docs, author, t, b, vectors)
    dists = [oracle_distance(past[i], past[j])
             for i in range(len(past)) for j in range(len(past)) if i < j]
    return oracle_percentile(dists, q) if dists else None


def oracle_team_intra(docs, vectors, focal, b=5, q=90.0):
    doc = _by_id(docs)[focal]
    scores = [oracle_intra(docs, vectors, a, focal, b, q) for a in doc.author_ids]
    scores = [s for s in scores if s is not None]
    return math.fsum(scores) / len(scores) if scores else None


def oracle_inter(docs, vectors, focal, b=5, q=90.0):
    doc = _by_id(docs)[focal]
    authors = list(doc.author_ids)
    pool = []
    for x in range(len(authors)):
        for y in range(x + 1, len(authors)):
            pa = _past(docs, authors[x], doc.year, b, vectors)
            pe = _past(docs, authors[y], doc.year, b, vectors)
            pool += [oracle_distance(u, v) for u in pa for v in pe]
    return oracle_percentile(pool, q) if pool else None


def oracle_shares(docs, vectors, focal, exploratory_cutoff, exploitative_cutoff, b=5, q=90.0):
    doc = _by_id(docs)[focal]
    scores = [oracle_intra(docs, vectors, a, focal, b, q) for a in doc.author_ids]
    n = len(scores)
    explo = sum(1 for s in scores if s is not None and s >= exploratory_cutoff)
    exploit = sum(1 for s in scores if s is not None and s <= exploitative_cutoff)
    return explo / n, exploit / n, (explo / n) * (exploit / n)


# -- co-occurrence primitives ------------------------------------------------------------

def _ents(d: DocumentRecord, kind: str) -> list[str]:
    return [j for j in d.ref_journal_issns if j] if kind == "journal" else list(d.mesh_terms)


def _pairs(ents):
    out = []
    for x in range(len(ents)):
        for y in range(x + 1, len(ents)):
            a, b = ents[x], ents[y]
            out.append((min(a, b), max(a, b)))
    return out


def _count(docs, kind, year_pred, per_doc=False) -> dict:
    n: dict = {}
    for d in docs:
        if year_pred(d.year):
            ps = _pairs(_ents(d, kind))
            for p in (set(ps) if per_doc else ps):
                n[p] = n.get(p, 0) + 1
    return n


def oracle_null(docs, kind, year, m=20, seed=0, swap_factor=10):
    """Mean and sd of each pair count over ``m`` citation-switching resamples."""
    ids = _by_id(docs)
    slots = []  # (doc_pos, entity, stratum)
    owners = []
    for d in sorted((d for d in docs if d.year == year), key=lambda d: d.doc_id):
        if kind == "journal":
            items = [(j, ids[r].year if r in ids else None)
                     for r, j in zip(d.ref_doc_ids, d.ref_journal_issns) if j]
        else:
            items = [(t, None) for t in d.mesh_terms]
        items.sort(key=lambda it: (it[0], -1 if it[1] is None else it[1]))
        if items:
            owners.append(d.doc_id)
            slots += [(len(owners) - 1, e, s) for e, s in items]
    n = len(slots)
    observed = {}
    samples = []
    for pos in range(len(owners)):
        for p in _pairs([e for o, e, _ in slots if o == pos]):
            observed[p] = observed.get(p, 0) + 1
    stratum = {}
    for s in range(n):
        stratum.setdefault(slots[s][2], []).append(s)
    for r in range(m):
        rng = np.random.default_rng(seed + r)
        ent = [e for _, e, _ in slots]
        if n:
            first = rng.integers(0, n, size=swap_factor * n)
            u = rng.random(swap_factor * n)
            for a in range(swap_factor * n):
                s1 = int(first[a])
                same = stratum[slots[s1][2]]
                s2 = same[int(float(u[a]) * len(same))]
                if slots[s1][0] != slots[s2][0]:
                    ent[s1], ent[s2] = ent[s2], ent[s1]
        c = {}
        for pos in range(len(owners)):
            for p in _pairs([ent[s] for s in range(n) if slots[s][0] == pos]):
                c[p] = c.get(p, 0) + 1
        samples.append(c)
    keys = set(observed).union(*samples) if samples else set(observed)
    mean, sd = {}, {}
    for p in keys:
        xs = [s.get(p, 0) for s in samples]
        mu = Fraction(sum(xs), m)
        var = sum((Fraction(x) - mu) ** 2 for x in xs) / (m - 1)
        mean[p] = float(mu)
        sd[p] = math.sqrt(float(var))
    return observed, mean, sd


def oracle_uzzi(docs, kind, focal, m=20, seed=0, q=10.0, swap_factor=10, null=None):
    """``null`` may carry a precomputed :func:`oracle_null` result for the focal year."""
    doc = _by_id(docs)[focal]
    if null is None:
        null = oracle_null(docs, kind, doc.year, m, seed, swap_factor)
    observed, mean, sd = null
    zs = []
    for p in _pairs(_ents(doc, kind)):
        if sd.get(p, 0.0) > 0:
            zs.append((observed.get(p, 0) - mean[p]) / sd[p])
    return -oracle_percentile(zs, q) if zs else None


def oracle_lee(docs, kind, focal, q=10.0):
    doc = _by_id(docs)[focal]
    n = _count(docs, kind, lambda y: y == doc.year)
    total = sum(n.values())

    def marg(e):
        return sum(c for (a, b), c in n.items() if a == e or b == e)

    cs = []
    for p in _pairs(_ents(doc, kind)):
        if n.get(p, 0) == 0:
            cs.append(0.0)
        else:
            cs.append((n[p] * total) / (marg(p[0]) * marg(p[1])))
    if not cs:
        return None
    level = oracle_percentile(cs, q)
    return -math.log(level) if level > 0 else None


class _Graph:
    """Insertion-ordered weighted adjacency, the minimum Louvain needs."""

    def __init__(self):
        self.adj: dict = {}
        self.members: dict = {}

    def add_node(self, u, members=None):
        if u not in self.adj:
            self.adj[u] = {}
        if members is not None:
            self.members[u] = members

    def add_edge(self, u, v, w):
        self.add_node(u)
        self.add_node(v)
        self.adj[u][v] = w
        self.adj[v][u] = w

    def edges(self):
        seen = set()
        for u, nbrs in self.adj.items():
            for v, w in nbrs.items():
                if v not in seen:
                    yield u, v, w
            seen.add(u)

    def degree(self, u):
        return sum(self.adj[u].values()) + self.adj[u].get(u, 0)


def _modularity(g: _Graph, communities, resolution) -> float:
    deg = {u: g.degree(u) for u in g.adj}
    deg_sum = sum(deg.values())
    m = deg_sum / 2
    norm = 1 / deg_sum ** 2
    total = 0.0
    for comm in communities:
        inside = sum(w for u, v, w in g.edges() if u in comm and v in comm)
        d = sum(deg[u] for u in comm)
        total += inside / m - resolution * d * d * norm
    return total


def _louvain_level(g: _Graph, m, partition, resolution, rng):
    nodes = list(g.adj)
    node2com = {u: i for i, u in enumerate(nodes)}
    inner = [{u} for u in nodes]
    degrees = {u: g.degree(u) for u in nodes}
    stot = [degrees[u] for u in nodes]
    nbrs = {u: {v: w for v, w in g.adj[u].items() if v != u} for u in nodes}
    order = list(nodes)
    rng.shuffle(order)
    moves, improved = 1, False
    while moves > 0:
        moves = 0
        for u in order:
            best_gain, best = 0, node2com[u]
            to_com: dict = {}
            for v, w in nbrs[u].items():
                to_com[node2com[v]] = to_com.get(node2com[v], 0.0) + w
            k = degrees[u]
            stot[best] -= k
            cost = -to_com.get(best, 0.0) / m + resolution * (stot[best] * k) / (2 * m ** 2)
            for c, w in to_com.items():
                gain = cost + w / m - resolution * (stot[c] * k) / (2 * m ** 2)
                if gain > best_gain:
                    best_gain, best = gain, c
            stot[best] += k
            if best != node2com[u]:
                moved = g.members.get(u, {u})
                partition[node2com[u]].difference_update(moved)
                inner[node2com[u]].remove(u)
                partition[best].update(moved)
                inner[best].add(u)
                improved = True
                moves += 1
                node2com[u] = best
    return [p for p in partition if p], [p for p in inner if p], improved


def _aggregate_graph(g: _Graph, inner) -> _Graph:
    h = _Graph()
    where = {}
    for i, part in enumerate(inner):
        members = set()
        for u in part:
            where[u] = i
            members.update(g.members.get(u, {u}))
        h.add_node(i, members)
    for u, v, w in g.edges():
        a, b = where[u], where[v]
        h.add_edge(a, b, w + h.adj.get(a, {}).get(b, 0))
    return h


def oracle_louvain(weights: Mapping, resolution=1.0, seed=0, threshold=1e-7) -> list[set]:
    """Multi-level Louvain: local moves in a seeded random node order, then aggregation.

    Nodes enter in sorted order and edges in sorted pair order; the node order
    of each level is shuffled by one ``random.Random(seed)`` stream. A level is
    accepted while it raises modularity by more than ``threshold``.
    """
    g0 = _Graph()
    for e in sorted({e for p in weights for e in p}):
        g0.add_node(e)
    for (a, b), w in sorted(weights.items()):
        if w > 0:
            g0.add_edge(a, b, w)
    g = _Graph()
    for u in g0.adj:
        g.add_node(u)
    for u, v, w in g0.edges():
        g.add_edge(u, v, w)
    rng = random.Random(seed)
    partition = [{u} for u in g.adj]
    mod = _modularity(g, partition, resolution)
    m = sum(g.degree(u) for u in g.adj) / 2
    partition, inner, improved = _louvain_level(g, m, partition, resolution, rng)
    result = partition
    while improved:
        result = [set(p) for p in partition]
        new_mod = _modularity(g, inner, resolution)
        if new_mod - mod <= threshold:
            break
        mod = new_mod
        g = _aggregate_graph(g, inner)
        partition, inner, improved = _louvain_level(g, m, partition, resolution, rng)
    return result


def oracle_partition(docs, kind, years, resolution=1.0, seed=0):
    w = _count(docs, kind, lambda y: y in set(years))
    if not w:
        return None
    comms = oracle_louvain(w, resolution, seed)
    return {e: min(c) for c in comms for e in c}


def oracle_foster_years(docs, year, window=3):
    lo = min(d.year for d in docs)
    return [y for y in range(year - window, year) if y >= lo]


def oracle_foster(docs, kind, focal, window=3, resolution=1.0, seed=0, partition=False):
    """``partition`` may carry a precomputed :func:`oracle_partition` for the focal year."""
    doc = _by_id(docs)[focal]
    if partition is False:
        partition = oracle_partition(docs, kind, oracle_foster_years(docs, doc.year, window),
                                     resolution, seed)
    comm = partition
    if comm is None:
        return None
    scored = [(comm[a] != comm[b]) for a, b in _pairs(_ents(doc, kind)) if a in comm and b in comm]
    return sum(scored) / len(scored) if scored else None


def oracle_wang(docs, kind, focal, reuse_window=3, min_reuse=1, profile_window=3):
    doc = _by_id(docs)[focal]
    t = doc.year
    if len(_ents(doc, kind)) < 2:
        return None
    if t + reuse_window > max(d.year for d in docs):
        raise LookupError("reuse window extends past the corpus")
    past = _count(docs, kind, lambda y: y < t)
    future = _count(docs, kind, lambda y: t + 1 <= y <= t + reuse_window, per_doc=True)
    prof = _count(docs, kind, lambda y: t - profile_window <= y <= t - 1)

    def row(e):
        r = {}
        for (a, b), c in prof.items():
            if a == e:
                r[b] = r.get(b, 0) + c
            if b == e and a != b:
                r[a] = r.get(a, 0) + c
        return r

    terms = []
    for p in sorted(set(_pairs(_ents(doc, kind)))):
        if past.get(p, 0) > 0 or future.get(p, 0) < min_reuse:
            continue
        ri, rj = row(p[0]), row(p[1])
        ni = sum(v * v for v in ri.values())
        nj = sum(v * v for v in rj.values())
        sim = 0.0
        if ni and nj:
            sim = sum(v * rj.get(k, 0) for k, v in ri.items()) / math.sqrt(ni * nj)
        terms.append(1.0 - sim)
    return math.fsum(terms)


def oracle_shibayama(docs, vectors, focal, q=90.0, agg="percentile"):
    doc = _by_id(docs)[focal]
    refs = []
    for r in doc.ref_doc_ids:
        if r and r in vectors and r not in refs:
            refs.append(r)
    dists = [oracle_distance(vectors[a], vectors[b]) for a, b in combinations(refs, 2)]
    if not dists:
        return None
    if agg == "mean":
        return math.fsum(dists) / len(dists)
    return oracle_percentile(dists, q)


# -- disruption ------------------------------------------------------------------

def _edges(docs):
    ids = {d.doc_id for d in docs}
    return {(d.doc_id, r) for d in docs for r in d.ref_doc_ids if r in ids}


def oracle_disruption(docs, focal) -> dict:
    """All six disruption-family values by literal set comprehension."""
    e = _edges(docs)
    year = {d.doc_id: d.year for d in docs}
    nodes = set(year)
    refs = {r for r in nodes if (focal, r) in e}
    citers = {c for c in nodes if (c, focal) in e}
    overlap = {c: len({r for r in refs if (c, r) in e}) for c in citers}
    k = {p for p in nodes if p != focal and p not in citers and year[p] >= year[focal]
         and any((p, r) in e for r in refs)}
    out = {"citation_count": len(citers)}
    for name, level, with_k in (("di1", 1, True), ("di5", 5, True), ("di1nok", 1, False)):
        ni = len({c for c in citers if overlap[c] < level})
        nj = len({c for c in citers if overlap[c] >= level})
        den = ni + nj + (len(k) if with_k else 0)
        out[name] = (ni - nj) / den if den else None
    if citers:
        out["dein"] = math.fsum(overlap.values()) / len(citers)
        dep = len({c for c in citers if any((c, o) in e for o in citers if o != c)})
        out["depth"] = dep / len(citers)
        out["breadth"] = 1.0 - out["depth"]
    else:
        out["dein"] = out["depth"] = out["breadth"] = None
    return out


# -- statistics ------------------------------------------------------------------------

def oracle_percentile_rank(values, groups):
    out = []
    for i, (v, g) in enumerate(zip(values, groups)):
        if v is None or (isinstance(v, float) and math.isnan(v)):
            out.append(float("nan"))
            continue
        peers = [w for w, h in zip(values, groups)
                 if h == g and w is not None and not (isinstance(w, float) and math.isnan(w))]
        if len(peers) == 1:
            out.append(0.5)
            continue
        less = sum(1 for w in peers if w < v)
        equal = sum(1 for w in peers if w == v)
        rank = less + (equal + 1) / 2.0
        out.append((rank - 1) / (len(peers) - 1))
    return out


def oracle_clustered_se(x: np.ndarray, y: np.ndarray, clusters) -> tuple[np.ndarray, np.ndarray]:
    """OLS coefficients and CR1 cluster-robust standard errors from the normal equations."""
    n, k = x.shape
    xtx_inv = np.linalg.inv(x.T @ x)
    beta = xtx_inv @ (x.T @ y)
    u = y - x @ beta
    labels = sorted(set(clusters))
    meat = np.zeros((k, k))
    for g in labels:
        rows = [i for i in range(n) if clusters[i] == g]
        s = np.zeros(k)
        for i in rows:
            s += x[i] * u[i]
        meat += np.outer(s, s)
    G = len(labels)
    cov = (G / (G - 1)) * ((n - 1) / (n - k)) * (xtx_inv @ meat @ xtx_inv)
    return beta, np.sqrt(np.diag(cov))
