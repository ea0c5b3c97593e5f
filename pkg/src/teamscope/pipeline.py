"""End-to-end pipeline: ingest, embed, co-occurrence, indicators, tables, models.

Each stage writes into a private staging directory and is promoted into the
output directory only on success; a failing stage's partial output is moved
under ``failed/``. A stage is skipped when its recorded inputs and outputs
still match on disk and nothing upstream ran in the same invocation.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import multiprocessing
import os
import shutil
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
import pandas as pd
import yaml

from . import __version__
from .cognitive import (
    fit_thresholds,
    score_team,
    team_composition,
    threshold_sample,
)
from .cooc import (
    KINDS,
    CommunityPartition,
    EntityVocabulary,
    NullModelStats,
    build_history,
    community_partition,
    null_resample,
)
from .corpus import (
    FilterConfig,
    export_index,
    ingest_corpus,
    load_index,
    perceived_novelty_sample,
    read_journals,
    read_labels,
)
from .disruption import ImpactScores, impact_scores
from .embed import embed_texts, load_vectors, save_vectors
from .novelty import SCORE_NAMES, NoveltyConfig, NoveltyEngine
from .stats import (
    RegressionSpec,
    binned_surface,
    correlogram,
    fit,
    percentile_rank_by_group,
    summary_stats,
    turning_point,
)

log = logging.getLogger(__name__)

STAGES = ("ingest", "embed", "cooc", "cognitive", "novelty", "disruption",
          "normalize", "regress", "report")
UPSTREAM = {
    "ingest": (),
    "embed": ("ingest",),
    "cooc": ("ingest",),
    "cognitive": ("ingest", "embed"),
    "novelty": ("ingest", "embed", "cooc"),
    "disruption": ("ingest",),
    "normalize": ("ingest", "cognitive", "novelty", "disruption"),
    "regress": ("normalize",),
    "report": ("normalize",),
}
IMPACT_COLUMNS = ImpactScores.FIELDS
STATE_FILE = ".state.json"
MANIFEST_FILE = "run_manifest.json"


class StageError(RuntimeError):
    pass


@dataclass
class Params:
    window: int = 5
    q: float = 90.0
    threshold_level: str = "author"
    null_m: int = 20
    swap_factor: int = 10
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
    embed_dim: int = 256
    bins: int = 10
    horizon: int | None = None


@dataclass
class RunConfig:
    corpus: Path
    journals: Path
    out: Path
    labels: Path | None = None
    vectors: Path | None = None
    seed: int = 0
    jobs: int = 1
    kinds: tuple[str, ...] = KINDS
    filter: FilterConfig = field(default_factory=FilterConfig)
    params: Params = field(default_factory=Params)
    models: list[RegressionSpec] | None = None

    @classmethod
    def load(cls, path: str | Path, **overrides) -> "RunConfig":
        path = Path(path)
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        return cls.from_dict(raw, base=path.parent, **overrides)

    @classmethod
    def from_dict(cls, raw: dict, base: Path = Path("."), **overrides) -> "RunConfig":
        paths = dict(raw.get("paths", {}))
        for k, v in overrides.items():
            if v is not None and k in ("out", "corpus", "journals", "labels", "vectors"):
                paths[k] = v

        def p(key):
            v = paths.get(key)
            if v is None:
                return None
            v = Path(v)
            return v if v.is_absolute() else base / v

        for key in ("corpus", "journals", "out"):
            if paths.get(key) is None:
                raise ValueError(f"config is missing paths.{key}")
        params = Params(**raw.get("params", {}))
        filt = FilterConfig(**raw.get("filter", {}))
        models = None
        if raw.get("models"):
            models = [RegressionSpec(**m) for m in raw["models"]]
        seed = overrides.get("seed")
        jobs = overrides.get("jobs")
        cfg = cls(
            corpus=p("corpus"), journals=p("journals"), out=p("out"),
            labels=p("labels"), vectors=p("vectors"),
            seed=int(raw.get("seed", 0) if seed is None else seed),
            jobs=int(raw.get("jobs", 1) if jobs is None else jobs),
            kinds=tuple(raw.get("kinds", KINDS)), filter=filt, params=params, models=models,
        )
        cfg.validate()
        return cfg

    def validate(self) -> None:
        for name in ("corpus", "journals", "labels", "vectors"):
            v = getattr(self, name)
            if v is not None and not Path(v).exists():
                raise FileNotFoundError(f"{name} input not found: {v}")
        for k in self.kinds:
            if k not in KINDS:
                raise ValueError(f"unknown entity kind {k!r}")
        if self.params.threshold_level not in ("author", "team"):
            raise ValueError("threshold_level must be 'author' or 'team'")

    def echo(self) -> dict:
        def rel(v):
            return None if v is None else Path(v).name
        return {
            "paths": {"corpus": rel(self.corpus), "journals": rel(self.journals),
                      "labels": rel(self.labels), "vectors": rel(self.vectors)},
            "seed": self.seed,
            "kinds": list(self.kinds),
            "filter": asdict(self.filter),
            "params": asdict(self.params),
            "models": [asdict(m) for m in self.model_list()],
        }

    def model_list(self) -> list[RegressionSpec]:
        return self.models if self.models is not None else default_models(self.kinds)


COG = ["inter_fp_fw", "inter_fp_fw^2", "intra_fp_fw", "intra_fp_fw^2"]
SHARES = ["share_exploratory", "share_exploitative", "share_exploratory:share_exploitative"]
CONTROLS = ["n_refs", "n_mesh", "n_authors", "sjr"]


def default_models(kinds: Sequence[str] = KINDS) -> list[RegressionSpec]:
    specs = []
    for kind in kinds:
        for ind in SCORE_NAMES:
            if ind == "shibayama" and kind != kinds[0]:
                continue
            dep = f"{ind}_fw" if ind == "shibayama" else f"{ind}_{kind}_fw"
            specs.append(RegressionSpec(f"novelty_{ind}_{kind}" if ind != "shibayama"
                                        else "novelty_shibayama", "linear", dep,
                                        COG + CONTROLS, ["year", "category"], "journal_issn"))
    for col in IMPACT_COLUMNS:
        specs.append(RegressionSpec(f"impact_{col}", "linear", f"{col}_fw", COG + CONTROLS,
                                    ["year", "category"], "journal_issn"))
    specs.append(RegressionSpec("shares_di1", "linear", "di1_fw", SHARES + CONTROLS,
                                ["year", "category"], "journal_issn"))
    specs.append(RegressionSpec("perceived_logit", "logit", "novel", COG + CONTROLS,
                                ["year"], "journal_issn"))
    specs.append(RegressionSpec("perceived_poisson", "poisson", "n_novel_labels",
                                COG + CONTROLS, ["year"], "journal_issn"))
    return specs


# -- io helpers ----------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[dict]) -> int:
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in columns])
            n += 1
    return n


def write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n",
                    encoding="utf-8")


def read_table(path: Path) -> pd.DataFrame:
    return pd.read_csv(path, float_precision="round_trip",
                       dtype={"doc_id": str, "journal_issn": str, "category": str})


def digest(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


_CTX: dict = {}


def _ctx_call(item):
    return _CTX["fn"](item)


def parallel_map(fn: Callable, items: Sequence, jobs: int = 1) -> list:
    """Order-preserving map; with ``jobs > 1`` workers are forked after ``fn`` is set."""
    items = list(items)
    if jobs <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    _CTX["fn"] = fn
    try:
        with multiprocessing.get_context("fork").Pool(jobs) as pool:
            return pool.map(_ctx_call, items, chunksize=max(1, len(items) // (4 * jobs)))
    finally:
        _CTX.clear()


# -- stages ---------------------------------------------------------------------------

class Pipeline:
    def __init__(self, config: RunConfig):
        self.cfg = config
        self.out = Path(config.out)
        self._index = None
        self._store = None

    # cached loads from promoted outputs
    def index(self):
        if self._index is None:
            self._index = load_index(self.out / "index")
        return self._index

    def store(self):
        if self._store is None:
            self._store = load_vectors(self.out / "vectors.jsonl")
        return self._store

    def stage_inputs(self, name: str) -> dict[str, str]:
        """Digests of raw inputs and config sections a stage depends on."""
        c = self.cfg
        ins = {}
        if name == "ingest":
            for key in ("corpus", "journals", "labels"):
                v = getattr(c, key)
                if v is not None:
                    ins[key] = digest(Path(v))
            ins["filter"] = json.dumps(asdict(c.filter), sort_keys=True)
        if name == "embed":
            ins["vectors"] = digest(Path(c.vectors)) if c.vectors else "fallback"
            ins["embed"] = f"dim={c.params.embed_dim};seed={c.seed}"
        if name in ("cooc", "cognitive", "novelty", "disruption", "normalize", "regress", "report"):
            ins["params"] = json.dumps(asdict(c.params), sort_keys=True)
            ins["seed"] = str(c.seed)
            ins["kinds"] = ",".join(c.kinds)
        if name == "regress":
            ins["models"] = json.dumps([asdict(m) for m in c.model_list()], sort_keys=True)
        return ins

    def run_ingest(self, stage_dir: Path) -> int:
        c = self.cfg
        journals = read_journals(c.journals)
        labels = read_labels(c.labels) if c.labels else None
        index, report = ingest_corpus(c.corpus, c.filter, journals, labels)
        export_index(index, stage_dir / "index", report)
        self._index = None
        return len(index)

    def run_embed(self, stage_dir: Path) -> int:
        c = self.cfg
        index = self.index()
        if c.vectors:
            store = load_vectors(c.vectors)
        else:
            store = embed_texts(((d.doc_id, d.text) for d in index), c.params.embed_dim, c.seed)
        save_vectors(store, stage_dir / "vectors.jsonl")
        have, missing = store.coverage(index.doc_ids)
        write_json(stage_dir / "embed_report.json",
                   {"dim": store.dim, "n_vectors": len(store), "corpus_with_vector": have,
                    "corpus_without_vector": missing})
        self._store = None
        return len(store)

    def novelty_config(self) -> NoveltyConfig:
        p = self.cfg.params
        return NoveltyConfig(
            null_m=p.null_m, swap_factor=p.swap_factor, seed=self.cfg.seed,
            uzzi_q=p.uzzi_q, uzzi_agg=p.uzzi_agg, lee_q=p.lee_q, lee_agg=p.lee_agg,
            foster_window=p.foster_window, resolution=p.resolution,
            reuse_window=p.reuse_window, min_reuse=p.min_reuse, profile_window=p.profile_window,
            shibayama_agg=p.shibayama_agg, shibayama_q=p.shibayama_q)

    def run_cooc(self, stage_dir: Path) -> int:
        index = self.index()
        ncfg = self.novelty_config()
        rows = 0
        for kind in self.cfg.kinds:
            vocab = EntityVocabulary.from_index(index, kind)
            base = stage_dir / "cooc" / kind
            base.mkdir(parents=True, exist_ok=True)
            vocab.save(base / "vocab.txt")
            history = build_history(index, kind)
            nulls = parallel_map(
                lambda y: null_resample(index, kind, y, ncfg.null_m, ncfg.seed, ncfg.swap_factor),
                index.years, self.cfg.jobs)
            (stage_dir / "null" / kind).mkdir(parents=True, exist_ok=True)
            (stage_dir / "partitions" / kind).mkdir(parents=True, exist_ok=True)
            for year, table in history.items():
                table.save(base / f"{year}.csv", vocab)
                rows += len(table.counts)
            for null in nulls:
                null.save(stage_dir / "null" / kind / f"{null.year}.csv", vocab)
            for year in index.years:
                years = [y for y in range(year - ncfg.foster_window, year) if y in history]
                try:
                    part = community_partition(None, kind, years, ncfg.resolution, ncfg.seed,
                                               history=history).to_dict()
                except ValueError:
                    part = None
                write_json(stage_dir / "partitions" / kind / f"{year}.json", part)
        return rows

    def _engine(self, kind: str) -> NoveltyEngine:
        index = self.index()
        ncfg = self.novelty_config()
        engine = NoveltyEngine(index, kind, self.store(), ncfg)
        vocab = EntityVocabulary.load(self.out / "cooc" / kind / "vocab.txt", kind)
        for year in index.years:
            engine._nulls[year] = NullModelStats.load(
                self.out / "null" / kind / f"{year}.csv", vocab, year, ncfg.null_m, ncfg.seed)
            part = json.loads((self.out / "partitions" / kind / f"{year}.json").read_text())
            engine._partitions[year] = None if part is None else CommunityPartition.from_dict(part)
        return engine

    def run_novelty(self, stage_dir: Path) -> int:
        rows = 0
        cols = ["doc_id", *SCORE_NAMES, *(f"{s}_missing" for s in SCORE_NAMES)]
        for kind in self.cfg.kinds:
            engine = self._engine(kind)
            scores = parallel_map(engine.score, engine.index.doc_ids, self.cfg.jobs)
            rows += write_csv(stage_dir / f"novelty_{kind}.csv", cols, (s.as_row() for s in scores))
        return rows

    def run_cognitive(self, stage_dir: Path) -> int:
        index, store = self.index(), self.store()
        p = self.cfg.params
        teams = parallel_map(lambda d: score_team(d, index, store, p.window, p.q),
                             index.doc_ids, self.cfg.jobs)
        sample = threshold_sample(teams, p.threshold_level)
        thresholds = fit_thresholds(sample, level=p.threshold_level)
        write_json(stage_dir / "thresholds.json", asdict(thresholds))
        cols = ["doc_id", "intra_fp", "inter_fp", "share_exploratory", "share_exploitative",
                "interaction", "n_authors_scored", "n_exploratory", "n_exploitative"]
        rows = []
        author_rows = []
        for t in teams:
            m = team_composition(t, thresholds)
            rows.append({"doc_id": m.focal_doc_id, "intra_fp": m.intra_fp, "inter_fp": m.inter_fp,
                         "share_exploratory": m.share_exploratory,
                         "share_exploitative": m.share_exploitative,
                         "interaction": m.interaction, "n_authors_scored": m.n_authors_scored,
                         "n_exploratory": m.n_exploratory, "n_exploitative": m.n_exploitative})
            for a, v in m.per_author_intra.items():
                author_rows.append({"doc_id": m.focal_doc_id, "author_id": a, "intra": v,
                                    "exploratory": a in m.exploratory_authors,
                                    "exploitative": a in m.exploitative_authors})
        write_csv(stage_dir / "cognitive_authors.csv",
                  ["doc_id", "author_id", "intra", "exploratory", "exploitative"], author_rows)
        return write_csv(stage_dir / "cognitive.csv", cols, rows)

    def run_disruption(self, stage_dir: Path) -> int:
        index = self.index()
        horizon = self.cfg.params.horizon
        scores = parallel_map(lambda d: impact_scores(index, d, horizon), index.doc_ids,
                              self.cfg.jobs)
        return write_csv(stage_dir / "impact.csv", ["doc_id", *IMPACT_COLUMNS],
                         (s.as_row() for s in scores))

    def run_normalize(self, stage_dir: Path) -> int:
        index = self.index()
        base = []
        sample = perceived_novelty_sample(index.labels)
        for d in index:
            j = index.journal(d.journal_issn)
            base.append({
                "doc_id": d.doc_id, "year": d.year, "journal_issn": d.journal_issn,
                "category": j.category if j else None, "sjr": j.sjr if j else None,
                "n_refs": len(d.ref_doc_ids), "n_mesh": len(d.mesh_terms),
                "n_authors": len(d.author_ids),
                "novel": (None if d.doc_id not in sample.novel else int(sample.novel[d.doc_id])),
                "n_novel_labels": sample.n_novel_labels.get(d.doc_id),
            })
        table = pd.DataFrame(base)
        cog = read_table(self.out / "cognitive.csv")
        table = table.merge(cog, on="doc_id", how="left")
        for kind in self.cfg.kinds:
            nov = read_table(self.out / f"novelty_{kind}.csv")
            keep = {s: (s if s == "shibayama" else f"{s}_{kind}") for s in SCORE_NAMES}
            if kind != self.cfg.kinds[0]:
                keep.pop("shibayama")
            nov = nov[["doc_id", *keep]].rename(columns=keep)
            table = table.merge(nov, on="doc_id", how="left")
        imp = read_table(self.out / "impact.csv")
        table = table.merge(imp, on="doc_id", how="left")
        groups = list(zip(table["category"].fillna(""), table["year"]))
        fw_cols = ["intra_fp", "inter_fp", *IMPACT_COLUMNS]
        fw_cols += [c for c in table.columns
                    if c == "shibayama" or any(c == f"{s}_{k}" for s in SCORE_NAMES
                                               for k in self.cfg.kinds)]
        for col in fw_cols:
            table[f"{col}_fw"] = percentile_rank_by_group(table[col].to_numpy(dtype=float), groups)
        table = table.sort_values("doc_id", kind="mergesort").reset_index(drop=True)
        cols = list(table.columns)
        return write_csv(stage_dir / "variables.csv", cols,
                         ({c: _cell(r[c]) for c in cols} for r in table.to_dict("records")))

    def run_regress(self, stage_dir: Path) -> int:
        table = read_table(self.out / "variables.csv")
        tp_rows = []
        n = 0
        for spec in self.cfg.model_list():
            try:
                res = fit(spec, table)
                obj = {"status": "ok", **res.to_dict()}
                for r in spec.regressors:
                    sq = f"{r}^2"
                    if ":" not in r and not r.endswith("^2") and sq in spec.regressors:
                        b1, b2 = res.coef(r), res.coef(sq)
                        tp_rows.append({"model": spec.name, "variable": r, "b1": b1, "b2": b2,
                                        "turning_point": turning_point(b1, b2) if b2 else None})
            except Exception as exc:  # recorded per model; the stage itself still succeeds
                log.warning("model %s failed: %s", spec.name, exc)
                obj = {"status": "error", "error": f"{type(exc).__name__}: {exc}",
                       "spec": asdict(spec)}
            write_json(stage_dir / f"fit_{spec.name}.json", obj)
            n += 1
        write_csv(stage_dir / "turning_points.csv",
                  ["model", "variable", "b1", "b2", "turning_point"], tp_rows)
        return n

    def run_report(self, stage_dir: Path) -> int:
        table = read_table(self.out / "variables.csv")
        numeric = [c for c in table.columns
                   if c not in ("doc_id", "journal_issn", "category", "year")
                   and not c.endswith("_fw") and pd.api.types.is_numeric_dtype(table[c])]
        stats = summary_stats(table, numeric)
        write_csv(stage_dir / "summary_stats.csv", list(stats.columns), stats.to_dict("records"))
        fw = [c for c in table.columns if c.endswith("_fw")]
        if len(fw) >= 2:
            cg = correlogram(table, fw)
            rows = [{"variable": c, "leaf_rank": (cg.order.index(c) if c in cg.order else None),
                     **{o: cg.matrix.loc[c, o] for o in fw}} for c in cg.order + cg.excluded]
            write_csv(stage_dir / "correlogram.csv", ["variable", "leaf_rank", *fw], rows)
        x, y = "share_exploitative", "share_exploratory"
        n = 1
        for z in self._surface_targets(table):
            surf = binned_surface(table, x, y, z, self.cfg.params.bins)
            write_csv(stage_dir / f"surface_{x}_{y}_{z}.csv", list(surf.columns),
                      surf.to_dict("records"))
            n += 1
        return n

    def _surface_targets(self, table: pd.DataFrame) -> list[str]:
        wanted = [f"uzzi_{self.cfg.kinds[0]}_fw", "citation_count_fw", "di1_fw"]
        return [z for z in wanted if z in table.columns]

    # -- orchestration -------------------------------------------------------------------

    def _load_state(self) -> dict:
        f = self.out / STATE_FILE
        return json.loads(f.read_text()) if f.exists() else {}

    def _save_state(self, state: dict) -> None:
        write_json(self.out / STATE_FILE, state)

    def _outputs_intact(self, rec: dict) -> bool:
        for rel, dg in rec.get("outputs", {}).items():
            p = self.out / rel
            if not p.exists() or digest(p) != dg:
                return False
        return True

    def _upstream_digests(self, name: str, state: dict) -> dict:
        return {u: state.get(u, {}).get("outputs", {}) for u in UPSTREAM[name]}

    def run_stage(self, name: str, state: dict, force: bool = False,
                  dirty: set[str] | None = None) -> dict:
        dirty = set() if dirty is None else dirty
        inputs = self.stage_inputs(name)
        upstream = self._upstream_digests(name, state)
        rec = state.get(name)
        if (not force and rec is not None and rec.get("inputs") == inputs
                and rec.get("upstream") == upstream
                and not (set(UPSTREAM[name]) & dirty) and self._outputs_intact(rec)):
            log.info("stage %s: up to date", name)
            return {"name": name, "status": "skipped", "rows": rec.get("rows"), "seconds": 0.0}
        for u in UPSTREAM[name]:
            if u not in state:
                raise StageError(f"stage {name} needs {u} to have run first")
        staging = self.out / ".staging" / name
        if staging.exists():
            shutil.rmtree(staging)
        staging.mkdir(parents=True)
        t0 = time.perf_counter()
        log.info("stage %s: running", name)
        try:
            rows = getattr(self, f"run_{name}")(staging)
        except Exception as exc:
            failed = self.out / "failed" / name
            if failed.exists():
                shutil.rmtree(failed)
            failed.parent.mkdir(parents=True, exist_ok=True)
            shutil.move(str(staging), str(failed))
            raise StageError(f"stage {name} failed: {type(exc).__name__}: {exc}") from exc
        seconds = time.perf_counter() - t0
        if rec:
            for rel in rec.get("outputs", {}):
                (self.out / rel).unlink(missing_ok=True)
        outputs = {}
        for f in sorted(staging.rglob("*")):
            if f.is_file():
                rel = f.relative_to(staging).as_posix()
                dest = self.out / rel
                dest.parent.mkdir(parents=True, exist_ok=True)
                os.replace(f, dest)
                outputs[rel] = digest(dest)
        shutil.rmtree(staging)
        state[name] = {"inputs": inputs, "upstream": upstream, "outputs": outputs, "rows": rows}
        self._save_state(state)
        dirty.add(name)
        if name == "ingest":
            self._index = None
        if name == "embed":
            self._store = None
        return {"name": name, "status": "ran", "rows": rows, "seconds": round(seconds, 3)}

    def run(self, stages: Sequence[str] = STAGES, force: bool = False) -> dict:
        self.out.mkdir(parents=True, exist_ok=True)
        state = self._load_state()
        dirty: set[str] = set()
        report = []
        for name in STAGES:
            if name in stages:
                report.append(self.run_stage(name, state, force, dirty))
        self.write_manifest(report)
        return {"stages": report}

    def write_manifest(self, report: list[dict]) -> None:
        c = self.cfg
        inputs = {}
        for key in ("corpus", "journals", "labels", "vectors"):
            v = getattr(c, key)
            if v is not None:
                inputs[key] = digest(Path(v))
        manifest = {"engine_version": __version__, "config": c.echo(), "inputs": inputs,
                    "stages": report}
        tmp = self.out / (MANIFEST_FILE + ".tmp")
        write_json(tmp, manifest)
        os.replace(tmp, self.out / MANIFEST_FILE)


def _cell(v):
    if isinstance(v, float) and math.isnan(v):
        return None
    return v
