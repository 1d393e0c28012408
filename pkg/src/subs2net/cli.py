"""Command-line interface: ``subs2net <verb> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from .bechdel import (
    classification_report, feature_importance, holdout_newest, load_labels, precision_at_k_scores, train,
)
from .config import CorpusManifest, PipelineConfig, default_cache_root, load_config, load_manifest
from .errors import ManifestError, Subs2NetError
from .evaluation import edge_coverage, top_k_overlap
from .forest import ForestModel
from .gender import TOP_K_METRICS, compare_by_gender, triangle_census
from .mentions import find_mentions, load_external_entities, mentions_to_csv
from .metrics import features_csv, network_features, vertex_features
from .network import build_network, export_network, load_network, snapshot
from .pipeline import (
    STAGES, analysis_tables, forest_params, labeled_movies, load_corpus_roster, popular,
    probabilities_csv, process_corpus, read_vertex_rows, run_pipeline,
)
from .roster import build_blacklist, load_name_set, load_roster, roster_for_movie
from .subtitles import parse_srt

logger = logging.getLogger("subs2net")

EXIT_OK, EXIT_PARTIAL, EXIT_USAGE = 0, 1, 2
CONFIG_FLAGS = (
    "t_window_s", "w_min", "threshold", "min_votes", "seed", "damping", "group_by", "holdout_newest",
)


class UsageError(Exception):
    pass


def _out(data: str | bytes, path: str | None) -> None:
    if isinstance(data, str):
        data = data.encode("utf-8")
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n"


def _manifest(args) -> CorpusManifest:
    if not getattr(args, "corpus", None):
        raise UsageError("--corpus <manifest.json> is required")
    if getattr(args, "_manifest", None) is None:
        args._manifest = load_manifest(args.corpus)
    return args._manifest


def _config(args) -> PipelineConfig:
    """Defaults, then the manifest's config block, then ``--config``, then flags."""
    cfg = PipelineConfig()
    if getattr(args, "corpus", None):
        cfg = cfg.updated(_manifest(args).config)
    cfg = load_config(getattr(args, "config", None), cfg)
    return cfg.updated({k: getattr(args, k, None) for k in CONFIG_FLAGS})


def _movie(args):
    manifest = _manifest(args)
    spec = manifest.movie(args.movie_id)
    cfg = _config(args)
    roster = roster_for_movie(load_corpus_roster(manifest, cfg), spec.roster_id)
    return spec, roster, cfg


def _mentions(args):
    spec, roster, cfg = _movie(args)
    doc = parse_srt(spec.srt_path.read_bytes(), spec.movie_id)
    ner_path = getattr(args, "ner_file", None) or spec.ner_path
    external = load_external_entities(ner_path, doc) if ner_path else None
    return spec, roster, cfg, find_mentions(doc, roster, cfg.threshold, external)


def _movie_network(args):
    spec, roster, cfg, mentions = _mentions(args)
    net = build_network(mentions, roster, cfg.t_window_s, cfg.w_min, spec.movie_id)
    return spec, roster, cfg, net


def _read_network(path: str):
    p = Path(path)
    return load_network(p.read_bytes(), p.suffix.lstrip(".").lower())


def _cache(args, out: Path | None = None) -> Path:
    if getattr(args, "cache", None):
        return Path(args.cache)
    return default_cache_root(out or Path("."))


def _corpus_results(args):
    """Per-movie stages for the whole corpus; failed movies are reported and dropped."""
    manifest = _manifest(args)
    cfg = _config(args)
    results = process_corpus(manifest, cfg, _cache(args), None, jobs=args.jobs)
    pairs = []
    for spec, res in zip(manifest.movies, results):
        if res.error:
            print(f"FAILED {spec.movie_id} [{res.failed_stage}]: {res.error}", file=sys.stderr)
        else:
            pairs.append((spec, res))
    return manifest, cfg, pairs, len(pairs) < len(results)


# -- verbs -------------------------------------------------------------------

def cmd_parse(args) -> int:
    doc = parse_srt(Path(args.file).read_bytes(), args.movie_id or Path(args.file).stem)
    _out(doc.to_json(), args.out)
    return EXIT_OK


def cmd_mentions(args) -> int:
    _, _, _, mentions = _mentions(args)
    _out(mentions_to_csv(mentions), args.out)
    return EXIT_OK


def cmd_build(args) -> int:
    _, _, _, net = _movie_network(args)
    if args.until_ms is not None:
        net = snapshot(net, args.until_ms)
    _out(export_network(net, args.format), args.out)
    return EXIT_OK


def cmd_features(args) -> int:
    spec, _, cfg, net = _movie_network(args)
    vfeats = vertex_features(net, cfg.damping)
    _out(features_csv(spec.movie_id, vfeats, network_features(net, vfeats)), args.out)
    return EXIT_OK


def cmd_triangles(args) -> int:
    if args.network:
        net = _read_network(args.network)
    elif args.movie_id:
        _, _, _, net = _movie_network(args)
    else:
        raise UsageError("give a movie id (with --corpus) or --network")
    census = triangle_census(net)
    _out(_json({
        "movie_id": net.movie_id,
        "counts": list(census.counts),
        "percents": list(census.percents),
        "excluded": census.excluded,
        "total": census.total,
    }), args.out)
    return EXIT_OK


def cmd_analyze(args) -> int:
    _, cfg, pairs, partial = _corpus_results(args)
    tables = analysis_tables(popular(pairs, cfg.min_votes), cfg)
    _out(tables["trends.csv"], args.out)
    if args.vertices_out:
        _out(tables["vertices.csv"], args.vertices_out)
    if args.movies_out:
        _out(tables["movie_stats.csv"], args.movies_out)
    return EXIT_PARTIAL if partial else EXIT_OK


def cmd_mwu(args) -> int:
    if args.by != "gender":
        raise UsageError("only --by gender is supported")
    if args.vertices:
        rows = read_vertex_rows(Path(args.vertices))
    else:
        _, cfg, pairs, _ = _corpus_results(args)
        rows = [
            row | {"genres": tuple(spec.record.genres)}
            for spec, res in popular(pairs, cfg.min_votes)
            for row in res.vertex_rows
        ]
    res = compare_by_gender(rows, args.feature, args.genre)
    _out(_json({"feature": args.feature, "genre": args.genre, **asdict(res)}), args.out)
    return EXIT_OK


def _labels(args, manifest) -> dict[str, int]:
    path = args.labels or manifest.labels_file
    if path is None:
        raise UsageError("no labels file: pass --labels or set 'labels' in the manifest")
    return load_labels(path)


def cmd_bechdel_train(args) -> int:
    manifest, cfg, pairs, partial = _corpus_results(args)
    dataset = labeled_movies(pairs, _labels(args, manifest))
    train_set, _ = holdout_newest(dataset, cfg.holdout_newest)
    model = train(train_set, forest_params(cfg), cfg.seed)
    _out(model.to_bytes(), args.model)
    if args.importances:
        _out(_json(feature_importance(model)), args.importances)
    return EXIT_PARTIAL if partial else EXIT_OK


def cmd_bechdel_predict(args) -> int:
    model = ForestModel.from_bytes(Path(args.model).read_bytes())
    _, _, pairs, partial = _corpus_results(args)
    probs = model.predict_proba([r.features for _, r in pairs]) if pairs else []
    _out(probabilities_csv([s.movie_id for s, _ in pairs], probs), args.out)
    return EXIT_PARTIAL if partial else EXIT_OK


def cmd_bechdel_eval(args) -> int:
    model = ForestModel.from_bytes(Path(args.model).read_bytes())
    manifest, cfg, pairs, partial = _corpus_results(args)
    dataset = labeled_movies(pairs, _labels(args, manifest))
    _, test = holdout_newest(dataset, cfg.holdout_newest)
    if cfg.holdout_newest <= 0:
        test = dataset
    if not test:
        raise UsageError("no labeled movies to evaluate")
    scores = model.predict_proba([m.features for m in test])
    labels = [m.label for m in test]
    report = classification_report(labels, scores)
    ids = [m.movie_id for m in test]
    report["p_at_k"] = {str(k): precision_at_k_scores(labels, scores, k, ids) for k in args.p_at if k <= len(test)}
    _out(_json(report), args.out)
    return EXIT_PARTIAL if partial else EXIT_OK


def cmd_compare(args) -> int:
    report = edge_coverage(_read_network(args.a), _read_network(args.b), args.threshold, args.fuzzy)
    _out(_json(report.to_dict()), args.out)
    return EXIT_OK


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def cmd_rank_eval(args) -> int:
    spec, roster, cfg, net = _movie_network(args)
    if args.reference == "cast":
        reference = [e.character_name for e in roster]
    else:
        text = Path(args.reference).read_text(encoding="utf-8")
        reference = [line.strip() for line in text.splitlines() if line.strip()]
    overlaps = {str(k): top_k_overlap(net, reference, k, args.metric, cfg.threshold, args.fuzzy) for k in args.k}
    _out(_json({"movie_id": spec.movie_id, "metric": args.metric, "overlap": overlaps}), args.out)
    return EXIT_OK


def cmd_blacklist_build(args) -> int:
    entries = []
    for path in args.cast:
        entries.extend(load_roster(path))
    blacklist = build_blacklist(
        entries, load_name_set(args.given_names), load_name_set(args.surnames), args.max_mean_order
    )
    _out(blacklist.to_text(), args.out)
    return EXIT_OK


def cmd_run(args) -> int:
    manifest = _manifest(args)
    cfg = _config(args)
    stages = [s.strip() for s in args.stages.split(",") if s.strip()] if args.stages else list(STAGES)
    unknown = set(stages) - set(STAGES)
    if unknown:
        raise UsageError(f"unknown stage(s): {', '.join(sorted(unknown))}")
    out = Path(args.out)
    report = run_pipeline(manifest, cfg, out, stages, _cache(args, out), args.jobs)
    for failure in report.failures:
        print(f"FAILED {failure['movie_id']} [{failure['stage']}]: {failure['error']}", file=sys.stderr)
    if report.corpus.get("error"):
        print(f"FAILED corpus: {report.corpus['error']}", file=sys.stderr)
    return report.exit_code


def cmd_config_show(args) -> int:
    _out(_config(args).to_text(), args.out)
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def _config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--t", "--t-window-s", dest="t_window_s", type=int, help="co-occurrence window in seconds")
    p.add_argument("--w-min", dest="w_min", type=int, help="minimum edge weight kept")
    p.add_argument("--threshold", type=int, help="name-match similarity threshold (0-100)")
    p.add_argument("--damping", type=float, help="PageRank damping factor")


def _corpus_flags(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--corpus", "--manifest", dest="corpus", required=required, help="corpus manifest (JSON)")
    p.add_argument("--cache", help="cache directory (default: $SUBS2NET_CACHE or ./.subs2net-cache)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--min-votes", dest="min_votes", type=int)
    p.add_argument("--seed", type=int)
    _config_flags(p)


def _movie_cmd(sub, name: str, help: str) -> argparse.ArgumentParser:
    p = sub.add_parser(name, help=help)
    p.add_argument("movie_id")
    p.add_argument("--out", "-o")
    _corpus_flags(p)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subs2net", description="Character networks from movie subtitles.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse an SRT file to JSON")
    p.add_argument("file")
    p.add_argument("--movie-id")
    p.add_argument("--json-out", "--out", "-o", dest="out")
    p.set_defaults(func=cmd_parse)

    p = _movie_cmd(sub, "mentions", "character mentions as CSV")
    p.add_argument("--ner-file", help="JSON-lines entity file (overrides the manifest)")
    p.set_defaults(func=cmd_mentions)

    p = _movie_cmd(sub, "build", "build a movie's character network")
    p.add_argument("--format", choices=("gexf", "json", "csv"), default="gexf")
    p.add_argument("--until-ms", dest="until_ms", type=float, help="snapshot up to this time")
    p.set_defaults(func=cmd_build)

    _movie_cmd(sub, "features", "vertex and network features as CSV").set_defaults(func=cmd_features)

    p = sub.add_parser("triangles", help="gendered triangle census")
    p.add_argument("movie_id", nargs="?")
    p.add_argument("--network", help="read a network file (json/gexf/csv) instead")
    p.add_argument("--out", "-o")
    _corpus_flags(p, required=False)
    p.set_defaults(func=cmd_triangles)

    p = sub.add_parser("analyze", help="corpus trend table")
    _corpus_flags(p)
    p.add_argument("--group-by", dest="group_by", help="comma-separated: year, decade, genre, genre_decade")
    p.add_argument("--out", "-o")
    p.add_argument("--vertices-out", help="also write per-character rows")
    p.add_argument("--movies-out", help="also write per-movie statistics")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("mwu", help="Mann-Whitney U test of a vertex feature, women vs men")
    p.add_argument("--feature", required=True)
    p.add_argument("--by", default="gender")
    p.add_argument("--genre")
    p.add_argument("--vertices", help="per-character CSV from analyze --vertices-out")
    p.add_argument("--out", "-o")
    _corpus_flags(p, required=False)
    p.set_defaults(func=cmd_mwu)

    p = sub.add_parser("bechdel", help="Bechdel-test classifier")
    bsub = p.add_subparsers(dest="bechdel_command", required=True)
    q = bsub.add_parser("train")
    _corpus_flags(q)
    q.add_argument("--labels")
    q.add_argument("--holdout-newest", dest="holdout_newest", type=int)
    q.add_argument("--model", required=True, help="output model file")
    q.add_argument("--importances", help="write feature importances JSON here")
    q.set_defaults(func=cmd_bechdel_train)
    q = bsub.add_parser("predict")
    _corpus_flags(q)
    q.add_argument("--model", required=True)
    q.add_argument("--out", "-o")
    q.set_defaults(func=cmd_bechdel_predict)
    q = bsub.add_parser("eval")
    _corpus_flags(q)
    q.add_argument("--labels")
    q.add_argument("--holdout-newest", dest="holdout_newest", type=int)
    q.add_argument("--model", required=True)
    q.add_argument("--p-at", dest="p_at", type=_int_list, default=[10, 50, 100, 200])
    q.add_argument("--out", "-o")
    q.set_defaults(func=cmd_bechdel_eval)

    p = sub.add_parser("compare", help="edge coverage between two networks")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--threshold", type=int, default=85)
    p.add_argument("--fuzzy", action="store_true", help="also align names by similarity")
    p.add_argument("--out", "-o")
    p.set_defaults(func=cmd_compare)

    p = _movie_cmd(sub, "rank-eval", "top-k overlap with a reference ranking")
    p.add_argument("--reference", default="cast", help="'cast' (roster order) or a file with one name per line")
    p.add_argument("--k", type=_int_list, default=[5, 10])
    p.add_argument("--metric", choices=TOP_K_METRICS, default="degree_centrality")
    p.add_argument("--fuzzy", action="store_true")
    p.set_defaults(func=cmd_rank_eval)

    p = sub.add_parser("blacklist", help="generic character-name blacklist")
    bl = p.add_subparsers(dest="blacklist_command", required=True)
    q = bl.add_parser("build")
    q.add_argument("--cast", nargs="+", required=True)
    q.add_argument("--given-names", required=True)
    q.add_argument("--surnames", required=True)
    q.add_argument("--max-mean-order", type=float, default=3.0)
    q.add_argument("--out", "-o")
    q.set_defaults(func=cmd_blacklist_build)

    p = sub.add_parser("run", help="run pipeline stages over a corpus")
    _corpus_flags(p)
    p.add_argument("--group-by", dest="group_by")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--stages", help=f"comma-separated subset of {','.join(STAGES)}")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("config", help="configuration")
    csub = p.add_subparsers(dest="config_command", required=True)
    q = csub.add_parser("show", help="print the effective configuration")
    q.add_argument("--out", "-o")
    _corpus_flags(q, required=False)
    q.set_defaults(func=cmd_config_show)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (UsageError, ManifestError) as exc:
        print(f"subs2net: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (Subs2NetError, OSError, ValueError) as exc:
        print(f"subs2net: error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
