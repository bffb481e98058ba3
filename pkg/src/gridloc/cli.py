"""``gridloc`` command line: ingest, train, evaluate, predict, synth.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal invariant violation.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import corpus as cp
from .config import ConfigError, RunConfig, load_run_config
from .corpus import Variant
from .enrich import GazetteerError, default_gazetteer, enriched_text, load_gazetteer
from .evaluation import SplitError, SplitSpec, evaluate, reports_to_csv, reports_to_table, split
from .geo_grid import GeoBoundingBox, GridError, LatticeSpec, format_label, grid_centroid
from .mnb import InvariantError, ModelFormatError, load_model, save_model
from .pipeline import build_pipeline, pipeline_inputs
from .synth import generate_synthetic_corpus, synthetic_gazetteer
from .text import EmptyVocabularyError, TweetVectorizer, Vocabulary, load_stopwords

log = logging.getLogger("gridloc")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageFailure(Exception):
    pass


class DataFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(args, payload: dict, text: str) -> None:
    if getattr(args, "json", False):
        print(json.dumps(payload, sort_keys=True))
    elif not getattr(args, "quiet", False):
        print(text)


def _resolve_config(args) -> RunConfig:
    cfg = load_run_config(args.config) if getattr(args, "config", None) else RunConfig()
    overrides = {"seed": getattr(args, "seed", None)}
    if getattr(args, "lattices", None):
        overrides["lattices"] = tuple(int(v) for v in args.lattices.split(","))
    if getattr(args, "variants", None):
        overrides["variants"] = tuple(Variant(v) for v in args.variants.split(","))
    for key in ("alpha", "min_df", "spam_k", "train_fraction", "gazetteer", "top_k"):
        overrides[key] = getattr(args, key, None)
    return cfg.with_overrides(**overrides)


def _require_files(*paths) -> None:
    missing = [p for p in paths if p is not None and not os.path.isfile(p)]
    if missing:
        raise DataFailure(f"cannot read: {', '.join(missing)}")


def _require_dir_for(*paths) -> None:
    for p in paths:
        d = os.path.dirname(os.path.abspath(p))
        if not os.path.isdir(d):
            raise DataFailure(f"output directory does not exist: {d}")


def _stopwords(cfg: RunConfig):
    return None if cfg.stopwords is None else sorted(load_stopwords(cfg.stopwords))


def _gazetteer(cfg: RunConfig):
    return default_gazetteer() if cfg.gazetteer is None else load_gazetteer(cfg.gazetteer)


def _pipeline(cfg: RunConfig, variant: Variant, gazetteer=None):
    return build_pipeline(variant, gazetteer, alpha=cfg.alpha, min_df=cfg.min_df,
                          min_token_length=cfg.min_token_length, stopwords=_stopwords(cfg),
                          stem=cfg.stem)


# -- commands ------------------------------------------------------------------

def cmd_ingest(args) -> int:
    cfg = _resolve_config(args)
    _require_files(*args.inputs, cfg.stopwords)
    rejects_path = args.rejects or os.path.splitext(args.out)[0] + ".rejects.csv"
    _require_dir_for(args.out, rejects_path)
    lattice = cfg.lattice(args.lattice)
    streams = [cp.parse_tweet_file(p, args.format) for p in args.inputs]
    rejects: list[cp.Reject] = []
    records = [r for s in streams for r in cp.filter_bbox(s, cfg.bbox, rejects)]
    survivors = cp.dedupe_and_despam(records, cfg.spam_k)
    examples = list(cp.assign_labels((cp.clean(r) for r in survivors), lattice, rejects))
    cp.write_labeled(args.out, examples)
    try:
        cp.write_rejects(rejects_path, rejects)
    except BaseException:
        os.unlink(args.out)
        raise
    parsed = sum(s.summary.parsed for s in streams)
    skipped = sum(s.summary.skipped for s in streams)
    if not examples:
        log.warning("no records survived filtering; corpus %s is empty", args.out)
    summary = {"parsed": parsed, "skipped": skipped, "in_bbox": len(records),
               "after_dedupe": len(survivors), "labeled": len(examples),
               "rejected": len(rejects), "lattice": lattice.n, "corpus": args.out,
               "rejects": rejects_path}
    _emit(args, summary, " ".join(f"{k}={v}" for k, v in summary.items()))
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _resolve_config(args)
    variant = Variant(args.variant) if args.variant else cfg.variants[0]
    _require_files(args.corpus, cfg.stopwords, cfg.gazetteer)
    _require_dir_for(args.model)
    lattice = cfg.lattice(args.lattice)
    examples = cp.relabel(cp.read_labeled(args.corpus), lattice)
    if not examples:
        raise DataFailure(f"{args.corpus}: corpus is empty")
    gaz = _gazetteer(cfg) if variant is Variant.TEXT_PLUS_GEO_ENTITIES else None
    pipe = _pipeline(cfg, variant, gaz)
    pipe.fit(pipeline_inputs(examples, variant), [ex.label for ex in examples])
    model, vocab = pipe.named_steps["mnb"], pipe.named_steps["vectorize"].vocabulary_
    b = lattice.bbox
    meta = {"lat_max": repr(b.lat_max), "lat_min": repr(b.lat_min), "lon_max": repr(b.lon_max),
            "lon_min": repr(b.lon_min), "n": str(lattice.n), "variant": variant.value,
            "min_token_length": str(cfg.min_token_length), "stem": str(cfg.stem).lower(),
            "min_df": str(cfg.min_df)}
    if cfg.stopwords:
        meta["stopwords"] = os.path.abspath(cfg.stopwords)
    if cfg.gazetteer and gaz is not None:
        meta["gazetteer"] = os.path.abspath(cfg.gazetteer)
    vocab_path = args.model + ".vocab"
    save_model(model, args.model, meta)
    tmp = vocab_path + ".tmp"
    vocab.save(tmp)
    os.replace(tmp, vocab_path)
    summary = {"model": args.model, "vocabulary": vocab_path, "classes": len(model.classes_),
               "vocab_size": model.vocab_size, "alpha": model.alpha, "lattice": lattice.n,
               "variant": variant.value, "documents": len(examples)}
    _emit(args, summary, " ".join(f"{k}={v}" for k, v in summary.items()))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = _resolve_config(args)
    reports_dir = args.reports or cfg.reports or "reports"
    _require_files(args.corpus, cfg.stopwords, cfg.gazetteer)
    os.makedirs(reports_dir, exist_ok=True)
    examples = cp.read_labeled(args.corpus)
    train, test = split(examples, SplitSpec(cfg.train_fraction, cfg.seed))
    gaz = _gazetteer(cfg) if Variant.TEXT_PLUS_GEO_ENTITIES in cfg.variants else None
    rows = []
    for n in cfg.lattices:
        lattice = cfg.lattice(n)
        tr, te = cp.relabel(train, lattice), cp.relabel(test, lattice)
        for variant in cfg.variants:
            pipe = _pipeline(cfg, variant, gaz)
            y_train = [ex.label for ex in tr]
            pipe.fit(pipeline_inputs(tr, variant), y_train)
            rows.append(evaluate(pipe, pipeline_inputs(te, variant), te, lattice, variant,
                                 train_labels=y_train))
            log.info("lattice %dx%d %s: accuracy %.4f", n, n, variant.value, rows[-1].accuracy)
    csv_path = os.path.join(reports_dir, "report.csv")
    table_path = os.path.join(reports_dir, "report.txt")
    cp.atomic_write_text(csv_path, reports_to_csv(rows))
    table = reports_to_table(rows)
    cp.atomic_write_text(table_path, table)
    cp.atomic_write_text(os.path.join(reports_dir, "run_config.cfg"), cfg.to_text())
    _emit(args, {"report_csv": csv_path, "report_table": table_path,
                 "rows": [r.__dict__ for r in rows]}, table.rstrip("\n"))
    return EXIT_OK


def _load_predictor(model_path: str):
    _require_files(model_path, model_path + ".vocab")
    model = load_model(model_path)
    vocab = Vocabulary.load(model_path + ".vocab")
    if len(vocab) != model.vocab_size:
        raise DataFailure(f"model/vocabulary mismatch: model expects V={model.vocab_size}, "
                          f"vocabulary file holds {len(vocab)} terms")
    meta = model.metadata_
    try:
        lattice = LatticeSpec(GeoBoundingBox(float(meta["lat_max"]), float(meta["lat_min"]),
                                             float(meta["lon_max"]), float(meta["lon_min"])),
                              int(meta["n"]))
        variant = Variant(meta.get("variant", Variant.TEXT_ONLY.value))
        stop = sorted(load_stopwords(meta["stopwords"])) if "stopwords" in meta else None
        vec = TweetVectorizer(min_token_length=int(meta.get("min_token_length", 2)),
                              stopwords=stop, stem=meta.get("stem") == "true")
    except (KeyError, ValueError) as exc:
        raise DataFailure(f"{model_path}: incomplete model metadata: {exc}") from None
    vec.vocabulary_ = vocab
    gaz = None
    if variant is Variant.TEXT_PLUS_GEO_ENTITIES:
        gaz = load_gazetteer(meta["gazetteer"]) if "gazetteer" in meta else default_gazetteer()
    return model, vec, lattice, gaz


def cmd_predict(args) -> int:
    cfg = _resolve_config(args)
    model_path = args.model or cfg.model
    if not model_path:
        raise UsageFailure("predict needs --model")
    if args.text is None and args.file is None:
        raise UsageFailure("predict needs TEXT or --file")
    model, vec, lattice, gaz = _load_predictor(model_path)
    items = []
    if args.file:
        _require_files(args.file)
        with open(args.file, encoding="utf-8") as fh:
            for line in fh:
                text, _, desc = line.rstrip("\n").partition("\t")
                items.append((text, desc or args.description))
    else:
        items.append((args.text, args.description))
    texts = [enriched_text(t, d, gaz) if gaz is not None else t for t, d in items]
    X = vec.transform(texts)
    if X.shape[1] != model.vocab_size:
        raise DataFailure("model/vocabulary mismatch")
    scores = model.predict_log_scores(X)
    k = min(cfg.top_k, len(model.classes_))
    results = []
    for i, (text, _) in enumerate(items):
        row = scores[i]
        if X[i].nnz == 0:
            log.warning("no in-vocabulary tokens in %r; falling back to the prior", text)
        order = np.lexsort((model.classes_, -row))
        label = int(model.classes_[order[0]])
        c = grid_centroid(label, lattice)
        results.append({"text": text, "label": format_label(label), "latitude": c.latitude,
                        "longitude": c.longitude,
                        "top": [[format_label(int(model.classes_[j])), float(row[j])]
                                for j in order[:k]]})
    if args.json:
        print(json.dumps(results, ensure_ascii=False))
    else:
        for r in results:
            top = " ".join(f"{g}:{s:.4f}" for g, s in r["top"])
            print(f"{r['label']}\t{r['latitude']:.6f}\t{r['longitude']:.6f}\t{top}")
    return EXIT_OK


def cmd_synth(args) -> int:
    cfg = _resolve_config(args)
    _require_dir_for(args.out)
    lattice = LatticeSpec(cfg.bbox, args.n)
    seed = cfg.seed
    corpus = generate_synthetic_corpus(lattice, args.docs_per_cell, args.vocab_per_cell,
                                       args.noise, seed, doc_length=args.doc_length,
                                       description_fraction=args.description_fraction)
    cp.write_labeled(args.out, corpus)
    if args.gazetteer_out:
        lines = ["# synthetic per-cell place names"]
        for e in synthetic_gazetteer(lattice).entries.values():
            lines.append(f"{e.surface}\t{e.point.latitude!r}\t{e.point.longitude!r}\t{e.population}")
        cp.atomic_write_text(args.gazetteer_out, "\n".join(lines) + "\n")
    summary = {"corpus": args.out, "documents": len(corpus), "lattice": lattice.n, "seed": seed}
    _emit(args, summary, " ".join(f"{k}={v}" for k, v in summary.items()))
    return EXIT_OK


# -- argument parsing ------------------------------------------------------------

def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    default = argparse.SUPPRESS if suppress else None
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", default=default, help="run configuration file")
    p.add_argument("--seed", type=int, default=default, help="random seed (overrides config)")
    p.add_argument("--quiet", action="store_true", default=default if suppress else False)
    p.add_argument("--json", action="store_true", default=default if suppress else False,
                   help="machine-readable output")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gridloc", parents=[_global_flags(False)],
                     description="Grid-cell geolocation of short messages.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = [_global_flags(True)]

    p = sub.add_parser("ingest", parents=common, help="parse, filter, dedupe and label tweets")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--format", choices=["jsonl", "csv"], default="jsonl")
    p.add_argument("--out", required=True, help="labeled corpus CSV to write")
    p.add_argument("--rejects", help="reject CSV (default: <out>.rejects.csv)")
    p.add_argument("--lattice", type=int, help="lattice side for labels (default: first configured)")
    p.add_argument("--spam-k", dest="spam_k", type=int)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", parents=common, help="fit a model on a labeled corpus")
    p.add_argument("corpus")
    p.add_argument("--model", required=True)
    p.add_argument("--lattice", type=int)
    p.add_argument("--variant", choices=[v.value for v in Variant])
    p.add_argument("--alpha", type=float)
    p.add_argument("--min-df", dest="min_df", type=int)
    p.add_argument("--gazetteer")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", parents=common, help="split, train and score per lattice/variant")
    p.add_argument("corpus")
    p.add_argument("--reports", help="output directory")
    p.add_argument("--lattices", help="comma-separated lattice sides, e.g. 8,11,16,32")
    p.add_argument("--variants", help="comma-separated: TextOnly,TextPlusGeoEntities")
    p.add_argument("--alpha", type=float)
    p.add_argument("--min-df", dest="min_df", type=int)
    p.add_argument("--train-fraction", dest="train_fraction", type=float)
    p.add_argument("--gazetteer")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", parents=common, help="predict grid cells for text")
    p.add_argument("text", nargs="?")
    p.add_argument("--model")
    p.add_argument("--file", help="one message per line, optional <TAB>description")
    p.add_argument("--description")
    p.add_argument("--top-k", dest="top_k", type=int)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("synth", parents=common, help="write a synthetic labeled corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--docs-per-cell", dest="docs_per_cell", type=int, default=200)
    p.add_argument("--vocab-per-cell", dest="vocab_per_cell", type=int, default=5)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--doc-length", dest="doc_length", type=int, default=8)
    p.add_argument("--description-fraction", dest="description_fraction", type=float, default=0.0)
    p.add_argument("--gazetteer-out", dest="gazetteer_out")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s: %(message)s", stream=sys.stderr, force=True)
    try:
        return args.func(args)
    except (UsageFailure, cp.UsageError) as exc:
        print(f"gridloc: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InvariantError, AssertionError) as exc:
        print(f"gridloc: internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (DataFailure, OSError, ConfigError, cp.CorpusFormatError, ModelFormatError,
            EmptyVocabularyError, SplitError, GazetteerError, GridError, ValueError) as exc:
        print(f"gridloc: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
