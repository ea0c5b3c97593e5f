"""Publication graph ingestion and indexing.

Documents, journals and peer labels are read from line-delimited JSON and CSV,
filtered, and frozen into a :class:`CorpusIndex` that every indicator reads
from. The index carries the author-to-publication bipartite map and the
reverse citation map.
"""
from __future__ import annotations

import bisect
import csv
import json
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

log = logging.getLogger(__name__)

NOVEL_CATEGORIES = frozenset(
    {"Technical Advance", "Interesting Hypothesis", "Novel Drug Target"}
)
NEW_FINDING = "New Finding"


class CorpusError(ValueError):
    """Raised for malformed or inconsistent corpus input."""


class NotFoundError(KeyError):
    """Raised when a document id is not present in the index."""


@dataclass(frozen=True)
class DocumentRecord:
    doc_id: str
    year: int
    title: str
    abstract: str
    journal_issn: str
    mesh_terms: tuple[str, ...]
    author_ids: tuple[str, ...]
    ref_doc_ids: tuple[str, ...]
    ref_journal_issns: tuple[str, ...]

    @classmethod
    def from_dict(cls, obj: Mapping) -> "DocumentRecord":
        try:
            doc_id = obj["doc_id"]
            year = obj["year"]
        except KeyError as exc:
            raise CorpusError(f"missing field {exc.args[0]!r}") from None
        if not isinstance(doc_id, str) or not doc_id:
            raise CorpusError("doc_id must be a nonempty string")
        if isinstance(year, bool) or not isinstance(year, int):
            raise CorpusError(f"year must be an integer, got {year!r}")
        refs = tuple(obj.get("ref_doc_ids") or ())
        ref_issns = tuple(obj.get("ref_journal_issns") or ())
        if len(refs) != len(ref_issns):
            raise CorpusError(
                f"{doc_id}: ref_doc_ids ({len(refs)}) and ref_journal_issns "
                f"({len(ref_issns)}) are not aligned"
            )
        authors = tuple(obj.get("author_ids") or ())
        if len(set(authors)) != len(authors):
            raise CorpusError(f"{doc_id}: duplicate author ids")
        if doc_id in refs:
            raise CorpusError(f"{doc_id}: document references itself")
        return cls(
            doc_id=doc_id,
            year=year,
            title=obj.get("title") or "",
            abstract=obj.get("abstract") or "",
            journal_issn=obj.get("journal_issn") or "",
            mesh_terms=tuple(obj.get("mesh_terms") or ()),
            author_ids=authors,
            ref_doc_ids=tuple(r or "" for r in refs),
            ref_journal_issns=tuple(j or "" for j in ref_issns),
        )

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "year": self.year,
            "title": self.title,
            "abstract": self.abstract,
            "journal_issn": self.journal_issn,
            "mesh_terms": list(self.mesh_terms),
            "author_ids": list(self.author_ids),
            "ref_doc_ids": list(self.ref_doc_ids),
            "ref_journal_issns": list(self.ref_journal_issns),
        }

    @property
    def text(self) -> str:
        return f"{self.title} {self.abstract}".strip()


@dataclass(frozen=True)
class JournalRecord:
    issn: str
    sjr: float
    category: str

    def __post_init__(self):
        if not self.sjr >= 0:
            raise CorpusError(f"journal {self.issn}: sjr must be >= 0")
        if not self.category:
            raise CorpusError(f"journal {self.issn}: empty category")


@dataclass(frozen=True)
class LabelRecord:
    doc_id: str
    categories: frozenset[str]

    def __post_init__(self):
        if not self.categories:
            raise CorpusError(f"label for {self.doc_id}: empty category set")


@dataclass(frozen=True)
class FilterConfig:
    min_refs: int = 2
    min_mesh: int = 2
    min_authors: int = 2
    require_issn: bool = True
    year_min: int | None = None
    year_max: int | None = None

    def reject_reason(self, doc: DocumentRecord) -> str | None:
        if self.year_min is not None and doc.year < self.year_min:
            return "year"
        if self.year_max is not None and doc.year > self.year_max:
            return "year"
        if len(doc.ref_doc_ids) < self.min_refs:
            return "refs"
        if len(doc.mesh_terms) < self.min_mesh:
            return "mesh"
        if len(doc.author_ids) < self.min_authors:
            return "authors"
        if self.require_issn and not doc.journal_issn:
            return "issn"
        return None


@dataclass
class IngestReport:
    n_read: int = 0
    n_kept: int = 0
    rejects: Counter = field(default_factory=Counter)
    unknown_journal: list[str] = field(default_factory=list)
    issnless_refs: int = 0

    @property
    def n_rejected(self) -> int:
        return sum(self.rejects.values())

    def to_dict(self) -> dict:
        return {
            "n_read": self.n_read,
            "n_kept": self.n_kept,
            "n_rejected": self.n_rejected,
            "rejects": dict(sorted(self.rejects.items())),
            "n_unknown_journal": len(self.unknown_journal),
            "issnless_refs": self.issnless_refs,
        }


class CorpusIndex:
    """Immutable indexed view over documents, journals and labels.

    Documents are held in doc_id order so that every iteration over the
    index is deterministic regardless of input order.
    """

    def __init__(
        self,
        docs: Iterable[DocumentRecord],
        journals: Mapping[str, JournalRecord] | None = None,
        labels: Mapping[str, LabelRecord] | None = None,
    ):
        by_id: dict[str, DocumentRecord] = {}
        for d in docs:
            if d.doc_id in by_id:
                raise CorpusError(f"duplicate doc_id {d.doc_id!r}")
            by_id[d.doc_id] = d
        self._docs = {k: by_id[k] for k in sorted(by_id)}
        self._journals = dict(sorted((journals or {}).items()))
        self._labels = {k: v for k, v in sorted((labels or {}).items()) if k in self._docs}

        authored: dict[str, list[tuple[int, str]]] = defaultdict(list)
        citing: dict[str, set[str]] = defaultdict(set)
        resolved: dict[str, tuple[str, ...]] = {}
        for d in self._docs.values():
            for a in d.author_ids:
                authored[a].append((d.year, d.doc_id))
            refs = []
            for r in d.ref_doc_ids:
                if r and r in self._docs and r not in refs:
                    refs.append(r)
                    citing[r].add(d.doc_id)
            resolved[d.doc_id] = tuple(refs)
        self._author_pubs = {a: sorted(v) for a, v in sorted(authored.items())}
        self._author_years = {a: [y for y, _ in v] for a, v in self._author_pubs.items()}
        self._citing = {k: frozenset(v) for k, v in citing.items()}
        self._resolved = resolved
        self._by_year: dict[int, list[str]] = defaultdict(list)
        for d in self._docs.values():
            self._by_year[d.year].append(d.doc_id)

    # -- accessors -------------------------------------------------------
    def __len__(self) -> int:
        return len(self._docs)

    def __contains__(self, doc_id: object) -> bool:
        return doc_id in self._docs

    def __iter__(self):
        return iter(self._docs.values())

    def doc(self, doc_id: str) -> DocumentRecord:
        try:
            return self._docs[doc_id]
        except KeyError:
            raise NotFoundError(doc_id) from None

    @property
    def doc_ids(self) -> list[str]:
        return list(self._docs)

    @property
    def journals(self) -> dict[str, JournalRecord]:
        return dict(self._journals)

    @property
    def labels(self) -> dict[str, LabelRecord]:
        return dict(self._labels)

    @property
    def authors(self) -> list[str]:
        return list(self._author_pubs)

    @property
    def years(self) -> list[int]:
        return sorted(self._by_year)

    def docs_in_year(self, year: int) -> list[str]:
        return list(self._by_year.get(year, ()))

    def journal(self, issn: str) -> JournalRecord | None:
        return self._journals.get(issn)

    def resolved_refs(self, doc_id: str) -> tuple[str, ...]:
        """In-corpus references of ``doc_id``, deduplicated, in citation order."""
        if doc_id not in self._docs:
            raise NotFoundError(doc_id)
        return self._resolved[doc_id]

    def author_docs(self, author_id: str) -> list[tuple[int, str]]:
        return list(self._author_pubs.get(author_id, ()))

    def citation_edges(self) -> list[tuple[str, str]]:
        return [(d, r) for d, refs in self._resolved.items() for r in refs]


def citing_papers(index: CorpusIndex, doc_id: str) -> frozenset[str]:
    """Documents whose resolved references contain ``doc_id``."""
    if doc_id not in index:
        raise NotFoundError(doc_id)
    return index._citing.get(doc_id, frozenset())


def author_past_pubs(index: CorpusIndex, author_id: str, t: int, b: int) -> list[str]:
    """Docs by ``author_id`` published in ``[t - b, t - 1]``, year-then-id sorted.

    Unknown authors yield an empty list.
    """
    if b < 1:
        raise ValueError(f"window must be >= 1 year, got {b}")
    pubs = index._author_pubs.get(author_id)
    if not pubs:
        return []
    years = index._author_years[author_id]
    lo = bisect.bisect_left(years, t - b)
    hi = bisect.bisect_left(years, t)
    return [doc_id for _, doc_id in pubs[lo:hi]]


# -- readers ---------------------------------------------------------------

def read_documents(path: str | Path) -> list[DocumentRecord]:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(obj, dict):
                raise CorpusError(f"{path}:{lineno}: expected a JSON object")
            try:
                docs.append(DocumentRecord.from_dict(obj))
            except CorpusError as exc:
                raise CorpusError(f"{path}:{lineno}: {exc}") from None
    return docs


def read_journals(path: str | Path) -> dict[str, JournalRecord]:
    out: dict[str, JournalRecord] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.DictReader(fh), start=2):
            try:
                rec = JournalRecord(row["issn"], float(row["sjr"]), row["category"])
            except (KeyError, TypeError, ValueError) as exc:
                raise CorpusError(f"{path}:{lineno}: {exc}") from None
            out[rec.issn] = rec
    return out


def read_labels(path: str | Path) -> dict[str, LabelRecord]:
    merged: dict[str, set[str]] = defaultdict(set)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                cats = obj["categories"]
                doc_id = obj["doc_id"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise CorpusError(f"{path}:{lineno}: bad label record ({exc})") from None
            if not cats:
                raise CorpusError(f"{path}:{lineno}: empty category list")
            merged[doc_id].update(cats)
    return {k: LabelRecord(k, frozenset(v)) for k, v in merged.items()}


def ingest_corpus(
    path: str | Path,
    filter: FilterConfig = FilterConfig(),
    journals: Mapping[str, JournalRecord] | None = None,
    labels: Mapping[str, LabelRecord] | None = None,
) -> tuple[CorpusIndex, IngestReport]:
    """Read, validate and filter a corpus file into an index.

    Returns the index together with an :class:`IngestReport` counting
    rejected records by reason and documents whose journal is unknown.
    """
    report = IngestReport()
    kept = []
    seen: set[str] = set()
    for doc in read_documents(path):
        if doc.doc_id in seen:
            raise CorpusError(f"duplicate doc_id {doc.doc_id!r}")
        seen.add(doc.doc_id)
        report.n_read += 1
        reason = filter.reject_reason(doc)
        if reason:
            report.rejects[reason] += 1
            continue
        kept.append(doc)
        report.issnless_refs += sum(1 for j in doc.ref_journal_issns if not j)
        if journals is not None and doc.journal_issn not in journals:
            report.unknown_journal.append(doc.doc_id)
    report.n_kept = len(kept)
    report.unknown_journal.sort()
    if report.unknown_journal:
        log.warning("%d documents have no journal record", len(report.unknown_journal))
    if report.issnless_refs:
        log.info("%d references without ISSN kept out of pair counts", report.issnless_refs)
    return CorpusIndex(kept, journals, labels), report


def export_index(index: CorpusIndex, out_dir: str | Path, report: IngestReport | None = None) -> None:
    """Persist an index as ``docs.jsonl``, ``journals.csv`` and ``labels.jsonl``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "docs.jsonl", "w", encoding="utf-8") as fh:
        for d in index:
            fh.write(json.dumps(d.to_dict(), sort_keys=True) + "\n")
    with open(out / "journals.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["issn", "sjr", "category"])
        for j in index.journals.values():
            w.writerow([j.issn, repr(j.sjr), j.category])
    with open(out / "labels.jsonl", "w", encoding="utf-8") as fh:
        for lab in index.labels.values():
            fh.write(json.dumps({"doc_id": lab.doc_id, "categories": sorted(lab.categories)}) + "\n")
    if report is not None:
        (out / "ingest_report.json").write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )


def load_index(index_dir: str | Path) -> CorpusIndex:
    """Reload an exported index without re-filtering."""
    d = Path(index_dir)
    docs = read_documents(d / "docs.jsonl")
    journals = read_journals(d / "journals.csv") if (d / "journals.csv").exists() else {}
    labels = read_labels(d / "labels.jsonl") if (d / "labels.jsonl").exists() else {}
    return CorpusIndex(docs, journals, labels)


# -- perceived novelty ------------------------------------------------------

@dataclass
class LabelSample:
    novel: dict[str, bool]
    n_novel_labels: dict[str, int]
    category_counts: Counter
    n_dropped: int

    @property
    def n_positive(self) -> int:
        return sum(self.novel.values())

    @property
    def n_negative(self) -> int:
        return len(self.novel) - self.n_positive


def perceived_novelty_sample(
    labels: Mapping[str, LabelRecord] | Iterable[LabelRecord],
    novel_categories: Iterable[str] = NOVEL_CATEGORIES,
    exclude_only: str = NEW_FINDING,
) -> LabelSample:
    """Binary and count outcomes for the perceived-novelty models.

    Docs whose only label is ``exclude_only`` are dropped. The remaining docs
    are novel iff they carry at least one of ``novel_categories``;
    ``n_novel_labels`` counts how many they carry.
    """
    novel_categories = frozenset(novel_categories)
    if not novel_categories:
        raise ValueError("novel_categories must be nonempty")
    records = labels.values() if isinstance(labels, Mapping) else labels
    novel: dict[str, bool] = {}
    counts: dict[str, int] = {}
    per_cat: Counter = Counter()
    dropped = 0
    for rec in sorted(records, key=lambda r: r.doc_id):
        if rec.categories == {exclude_only}:
            dropped += 1
            continue
        hits = len(rec.categories & novel_categories)
        novel[rec.doc_id] = hits > 0
        counts[rec.doc_id] = hits
        per_cat.update(rec.categories)
    return LabelSample(novel, counts, per_cat, dropped)
