"""Command-line entry point ``teamscope``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import yaml

from . import __version__
from .corpus import CorpusError, FilterConfig, export_index, ingest_corpus, load_index, read_journals, read_labels
from .embed import embed_texts, save_vectors
from .pipeline import STAGES, Pipeline, RunConfig, StageError
from .synth import SynthConfig, generate

log = logging.getLogger("teamscope")


def _global_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="run config (YAML)")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--jobs", type=int, default=None, help="worker processes for per-document stages")
    p.add_argument("--out", type=Path, default=None, help="output directory")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = argparse.ArgumentParser(prog="teamscope", description=__doc__)
    parser.add_argument("--version", action="version", version=f"teamscope {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="validate, filter and index a corpus")
    p.add_argument("--corpus", type=Path)
    p.add_argument("--journals", type=Path)
    p.add_argument("--labels", type=Path)
    p.add_argument("--min-refs", type=int, default=2)
    p.add_argument("--min-mesh", type=int, default=2)
    p.add_argument("--min-authors", type=int, default=2)

    p = sub.add_parser("embed", parents=[common], help="document vectors")
    p.add_argument("--fallback", action="store_true",
                   help="hash-based embedding of title and abstract")
    p.add_argument("--dim", type=int, default=256)
    p.add_argument("--index", type=Path, help="index directory from `ingest`")

    for name in ("cooc", "cognitive", "novelty", "disruption", "normalize", "regress", "report"):
        p = sub.add_parser(name, parents=[common], help=f"run the {name} stage of a configured run")
        if name == "disruption":
            p.add_argument("--horizon", type=int, default=None, help="cap citer years at focal year + N")

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic corpus")
    p = sub.add_parser("run", parents=[common], help="run every stage, skipping up-to-date ones")
    p.add_argument("--force", action="store_true", help="rerun all stages")
    return parser


def _standalone(args) -> bool:
    """ingest/embed can run without a config when given explicit paths."""
    if args.command == "ingest":
        return args.config is None and args.corpus is not None
    if args.command == "embed":
        return args.config is None and args.index is not None
    return False


def cmd_ingest(args) -> int:
    if args.journals is None or args.out is None:
        raise SystemExit("ingest needs --journals and --out")
    filt = FilterConfig(args.min_refs, args.min_mesh, args.min_authors)
    labels = read_labels(args.labels) if args.labels else None
    index, report = ingest_corpus(args.corpus, filt, read_journals(args.journals), labels)
    export_index(index, args.out, report)
    print(json.dumps(report.to_dict(), sort_keys=True))
    return 0


def cmd_embed(args) -> int:
    if not args.fallback:
        raise SystemExit("only --fallback embedding is available without a vectors file")
    index = load_index(args.index)
    seed = 42 if args.seed is None else args.seed
    store = embed_texts(((d.doc_id, d.text) for d in index), args.dim, seed)
    out = args.out or Path("vectors.jsonl")
    save_vectors(store, out)
    print(f"wrote {len(store)} vectors to {out}")
    return 0


def cmd_synth(args) -> int:
    if args.out is None:
        raise SystemExit("synth needs --out")
    raw = {}
    if args.config is not None:
        raw = yaml.safe_load(args.config.read_text(encoding="utf-8")) or {}
    if args.seed is not None:
        raw["seed"] = args.seed
    corpus = generate(SynthConfig.from_dict(raw))
    paths = corpus.write(args.out)
    print(f"wrote {len(corpus.docs)} documents to {paths['corpus']}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=os.environ.get("TEAMSCOPE_LOG", "WARNING").upper(),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "synth":
            return cmd_synth(args)
        if _standalone(args):
            return cmd_ingest(args) if args.command == "ingest" else cmd_embed(args)
        if args.config is None:
            raise SystemExit(f"{args.command} needs --config")
        cfg = RunConfig.load(args.config, out=args.out, seed=args.seed, jobs=args.jobs)
        if args.command == "disruption" and args.horizon is not None:
            cfg.params.horizon = args.horizon
        pipe = Pipeline(cfg)
        if args.command == "run":
            result = pipe.run(STAGES, force=args.force)
        else:
            result = pipe.run([args.command], force=True)
        for s in result["stages"]:
            print(f"{s['name']:<11} {s['status']:<8} rows={s['rows']} {s['seconds']:.2f}s")
        return 0
    except (StageError, CorpusError, FileNotFoundError, ValueError) as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
