"""Command-line interface: analyze, compare, score, atlas validate, cache stats."""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .atlas import AtlasError, load_atlas
from .cache import CacheError, EmbeddingCache
from .corpus import CorpusError, CorpusSchema, chunk_documents, load_corpus
from .embedding import ConfigError, EmbeddingError
from .lexicon import LexiconError, default_lexicon, load_lexicon, score_intensity
from .pipeline import (
    DatasetConfig,
    PipelineConfig,
    PipelineError,
    demo_corpus_path,
    load_config,
    run_analyze,
    run_compare,
)
from .stats import StatsError

_ERRORS = (
    AtlasError, CacheError, ConfigError, CorpusError, EmbeddingError,
    LexiconError, PipelineError, StatsError, OSError, ValueError,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emotionatlas",
        description="Map emotional text content onto anatomically defined brain regions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="run the full pipeline on a corpus")
    analyze.add_argument("--config", help="YAML config file")
    analyze.add_argument("--demo", action="store_true", help="use the bundled demo corpus")
    analyze.add_argument("--input", help="corpus file (alternative to --config)")
    analyze.add_argument("--format", default="csv", choices=["csv", "tsv", "jsonl", "plain"])
    analyze.add_argument("--text-column", default="text")
    analyze.add_argument("--id-column")
    analyze.add_argument("--group-column")
    analyze.add_argument("--label-column")
    analyze.add_argument("--output-dir")
    analyze.add_argument("--provider", choices=["remote", "offline"])
    analyze.add_argument("--seed", type=int)
    analyze.add_argument("--chunk-limit", type=int)
    analyze.add_argument("--batch-size", type=int)
    analyze.add_argument("--atlas", help="bundled atlas name (atlas18/atlas25) or CSV path")
    analyze.add_argument("--lexicon", help="lexicon CSV path (default: bundled)")
    analyze.add_argument("--alpha", type=float)
    analyze.add_argument("--cache", help="embedding cache file (remote provider)")
    analyze.add_argument("--rescale-mapping", action="store_true", default=None,
                         help="min-max rescale cluster centers into the atlas box")
    analyze.add_argument("--per-occurrence-modifiers", action="store_true", default=None,
                         help="apply intensifier/absolutist bonuses per occurrence")
    analyze.add_argument("--valence-map", help="label,valence CSV (default: bundled)")
    analyze.add_argument("--remote-endpoint", help="embeddings API URL")
    analyze.add_argument("--remote-model", help="embeddings model name")
    analyze.add_argument("--api-key-env", help="env var holding the API key")

    compare = sub.add_parser("compare", help="Mann-Whitney comparison between two groups")
    compare.add_argument("--run-a", required=True, help="analyze run directory")
    compare.add_argument("--run-b", help="second run directory (default: same as --run-a)")
    compare.add_argument("--group-a", help="group name on side A")
    compare.add_argument("--group-b", help="group name on side B")
    compare.add_argument("--alpha", type=float, default=0.05)
    compare.add_argument("--out", help="output directory")

    score = sub.add_parser("score", help="lexicon-only intensity pass over a corpus")
    score.add_argument("--input", required=True)
    score.add_argument("--format", default="csv", choices=["csv", "tsv", "jsonl", "plain"])
    score.add_argument("--text-column", default="text")
    score.add_argument("--id-column")
    score.add_argument("--chunk-limit", type=int, default=300)
    score.add_argument("--lexicon", help="lexicon CSV path (default: bundled)")
    score.add_argument("--out", help="output CSV (default: stdout)")

    atlas_cmd = sub.add_parser("atlas", help="atlas utilities")
    atlas_sub = atlas_cmd.add_subparsers(dest="atlas_command", required=True)
    atlas_validate = atlas_sub.add_parser("validate", help="validate an atlas CSV")
    atlas_validate.add_argument("path")

    cache_cmd = sub.add_parser("cache", help="embedding cache utilities")
    cache_sub = cache_cmd.add_subparsers(dest="cache_command", required=True)
    cache_stats = cache_sub.add_parser("stats", help="show cache entry counts")
    cache_stats.add_argument("path")

    return parser


def _analyze_config(args: argparse.Namespace) -> PipelineConfig:
    if args.config:
        config = load_config(args.config)
    elif args.demo or args.input:
        path = str(demo_corpus_path()) if args.demo else args.input
        if args.demo:
            dataset = DatasetConfig(path=path, format="csv", text_column="text",
                                    id_column="id", group_column="group", label_column="label")
        else:
            dataset = DatasetConfig(
                path=path, format=args.format, text_column=args.text_column,
                id_column=args.id_column, group_column=args.group_column,
                label_column=args.label_column,
            )
        config = PipelineConfig(datasets=[dataset])
    else:
        raise ConfigError("analyze needs --config, --input, or --demo")

    overrides = {
        "provider": args.provider,
        "seed": args.seed,
        "chunk_limit": args.chunk_limit,
        "batch_size": args.batch_size,
        "atlas": args.atlas,
        "lexicon": args.lexicon,
        "alpha": args.alpha,
        "cache": args.cache,
        "output_dir": args.output_dir,
        "rescale_mapping": args.rescale_mapping,
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(config, key, value)
    return config


def _cmd_analyze(args: argparse.Namespace) -> int:
    config = _analyze_config(args)
    out = run_analyze(config)
    print(f"run complete: {out}")
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    out = run_compare(
        args.run_a, args.run_b, group_a=args.group_a, group_b=args.group_b,
        alpha=args.alpha, out_dir=args.out,
    )
    print(f"comparison written: {out}")
    return 0


def _cmd_score(args: argparse.Namespace) -> int:
    schema = CorpusSchema(text=args.text_column, id=args.id_column)
    loaded = load_corpus(args.input, args.format, schema)
    lex = load_lexicon(args.lexicon) if args.lexicon else default_lexicon()
    chunks = chunk_documents(loaded.documents, args.chunk_limit)

    rows = [
        (c.doc_id, c.chunk_index, f"{score_intensity(c.text, lex).value:.4f}", c.text)
        for c in chunks
    ]
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["doc_id", "chunk_index", "intensity", "text"])
            w.writerows(rows)
        with open(args.out, newline="", encoding="utf-8") as fh:
            written = list(csv.reader(fh))
        if written[0] != ["doc_id", "chunk_index", "intensity", "text"] or any(
            len(r) != 4 for r in written[1:]
        ):
            raise PipelineError("validate", f"{args.out}: malformed score output")
        print(f"scored {len(rows)} chunks -> {args.out}")
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["doc_id", "chunk_index", "intensity", "text"])
        w.writerows(rows)
    return 0


def _cmd_atlas_validate(args: argparse.Namespace) -> int:
    atlas = load_atlas(args.path)
    systems: dict[str, int] = {}
    for region in atlas.regions:
        systems[region.system] = systems.get(region.system, 0) + 1
    print(f"{args.path}: OK ({len(atlas)} regions)")
    for system, count in sorted(systems.items()):
        print(f"  {system}: {count}")
    return 0


def _cmd_cache_stats(args: argparse.Namespace) -> int:
    if not Path(args.path).exists():
        print(f"{args.path}: no such cache file", file=sys.stderr)
        return 1
    with EmbeddingCache(args.path) as cache:
        stats = cache.stats()
    print(f"{args.path}: {stats.entries} entries, {stats.file_size} bytes")
    for model, count in stats.models.items():
        print(f"  {model}: {count}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "analyze":
            return _cmd_analyze(args)
        if args.command == "compare":
            return _cmd_compare(args)
        if args.command == "score":
            return _cmd_score(args)
        if args.command == "atlas":
            return _cmd_atlas_validate(args)
        if args.command == "cache":
            return _cmd_cache_stats(args)
        raise AssertionError(f"unhandled command {args.command!r}")
    except _ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
