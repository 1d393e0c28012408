"""End-to-end corpus runs with a content-addressed cache of per-movie intermediates."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__
from .bechdel import (
    LabeledMovie, assemble_features, classification_report, feature_importance,
    holdout_newest, load_labels, precision_at_k_scores, train,
)
from .config import CorpusManifest, MovieSpec, PipelineConfig, default_cache_root
from .forest import ForestModel, ForestParams
from .gender import (
    MovieStats, corpus_trends, degree_ratio_test, movie_gender_stats, rows_to_csv, triangle_census,
)
from .mentions import find_mentions, load_external_entities, mentions_from_dicts, mentions_to_csv, mentions_to_dicts
from .metrics import features_csv, network_features, vertex_features
from .network import build_network, export_network, from_json_dict, to_json_dict
from .roster import Blacklist, RosterEntry, filter_roster, load_roster, roster_for_movie
from .subtitles import SubtitleDocument, parse_srt

logger = logging.getLogger(__name__)

STAGES = ("parse", "mentions", "build", "features", "analyze", "bechdel")
MOVIE_STAGES = STAGES[:4]
CACHE_SCHEMA = f"subs2net-{__version__}-2"


def _digest(*parts) -> str:
    h = hashlib.sha256()
    for part in parts:
        if isinstance(part, bytes):
            h.update(part)
        else:
            h.update(json.dumps(part, sort_keys=True, default=str).encode("utf-8"))
        h.update(b"\x1f")
    return h.hexdigest()


class Cache:
    """JSON blobs addressed by stage and content key."""

    def __init__(self, root: Path):
        self.root = Path(root)

    def _file(self, stage: str, key: str) -> Path:
        return self.root / stage / key[:2] / f"{key}.json"

    def get(self, stage: str, key: str):
        path = self._file(stage, key)
        try:
            return json.loads(path.read_bytes())
        except FileNotFoundError:
            return None
        except json.JSONDecodeError:
            logger.warning("corrupt cache entry %s ignored", path)
            return None

    def put(self, stage: str, key: str, value) -> None:
        path = self._file(stage, key)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(f".tmp{id(value)}")
        tmp.write_text(json.dumps(value, ensure_ascii=False), encoding="utf-8")
        tmp.replace(path)


def _safe_name(movie_id: str) -> str:
    return re.sub(r"[^\w.-]", "_", movie_id) or "_"


def _write(path: Path, data: str | bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    path.write_bytes(data)


def roster_fingerprint(roster: Sequence[RosterEntry]) -> list[list]:
    return [[e.movie_id, e.character_name, e.actor_name, e.gender, e.cast_order] for e in roster]


@dataclass
class MovieResult:
    movie_id: str
    stages: dict[str, str] = field(default_factory=dict)
    error: str | None = None
    failed_stage: str | None = None
    stats: dict | None = None
    vertex_rows: list[dict] = field(default_factory=list)
    features: dict | None = None
    # cache key of the last completed stage
    key: str | None = None


def process_movie(
    spec: MovieSpec,
    roster: list[RosterEntry],
    config: PipelineConfig,
    cache_root: Path,
    out_dir: Path | None,
    stages: Sequence[str] = MOVIE_STAGES,
) -> MovieResult:
    """Run the per-movie stages, reusing cached results when their keys match.

    Every cache entry holds the stage's data plus its exported files, so a
    fully cached movie only copies bytes. With ``out_dir=None`` nothing is
    exported.
    """
    cache = Cache(cache_root)
    result = MovieResult(spec.movie_id)
    movie_out = out_dir / "movies" / _safe_name(spec.movie_id) if out_dir is not None else None
    stages = [s for s in MOVIE_STAGES if s in stages]
    artifacts: dict[str, str] = {}

    def run_stage(name: str, key: str, compute) -> dict:
        payload = cache.get(name, key)
        if payload is None:
            payload = compute()
            cache.put(name, key, payload)
            result.stages[name] = "computed"
        else:
            result.stages[name] = "cached"
        artifacts.update(payload["artifacts"])
        return payload

    stage = "parse"
    try:
        # keys depend only on inputs and configuration, so they are known up front
        raw = spec.srt_path.read_bytes()
        keys = {"parse": _digest(CACHE_SCHEMA, "parse", raw, spec.movie_id)}
        stage = "mentions"
        ner_bytes = spec.ner_path.read_bytes() if spec.ner_path else b""
        roster_fp = roster_fingerprint(roster)
        keys["mentions"] = _digest(CACHE_SCHEMA, "mentions", keys["parse"], roster_fp, config.threshold, ner_bytes)
        keys["build"] = _digest(CACHE_SCHEMA, "build", keys["mentions"], config.t_window_s, config.w_min)
        keys["features"] = _digest(CACHE_SCHEMA, "features", keys["build"], roster_fp, config.damping)

        # a whole-movie bundle lets a fully cached movie cost one read
        bundle_key = _digest(CACHE_SCHEMA, "movie", keys[stages[-1]], stages)
        bundle = cache.get("movie", bundle_key)
        if bundle is not None:
            result.stages = {s: "cached" for s in stages}
            artifacts = bundle["artifacts"]
            data = bundle["data"]
        else:
            data = _compute_stages(spec, roster, config, stages, keys, run_stage)
            cache.put("movie", bundle_key, {"artifacts": artifacts, "data": data})
        if "features" in stages:
            result.stats = data["stats"]
            result.features = data["vector"]
            result.vertex_rows = data["vertex_rows"]
            result.key = keys["features"]
    except StageFailure as exc:
        stage, cause = exc.stage, exc.__cause__
        logger.error("%s: %s stage failed: %s", spec.movie_id, stage, cause)
        result.error = f"{type(cause).__name__}: {cause}"
        result.failed_stage = stage
    except Exception as exc:  # isolate per-movie failures
        logger.error("%s: %s stage failed: %s", spec.movie_id, stage, exc)
        result.error = f"{type(exc).__name__}: {exc}"
        result.failed_stage = stage
    if movie_out is not None and artifacts:
        movie_out.mkdir(parents=True, exist_ok=True)
        for fname, text in artifacts.items():
            (movie_out / fname).write_bytes(text.encode("utf-8"))
    return result


class StageFailure(Exception):
    def __init__(self, stage: str):
        super().__init__(stage)
        self.stage = stage


def _compute_stages(spec: MovieSpec, roster, config: PipelineConfig, stages, keys, run_stage) -> dict:
    stage = "parse"
    try:
        def do_parse():
            doc = parse_srt(spec.srt_path.read_bytes(), spec.movie_id)
            data = doc.to_dict() | {"skipped_count": doc.skipped_count}
            return {"data": data, "artifacts": {"document.json": json.dumps(data, ensure_ascii=False, indent=2) + "\n"}}

        parsed = run_stage("parse", keys["parse"], do_parse)
        if "mentions" not in stages:
            return {}

        stage = "mentions"

        def do_mentions():
            doc = SubtitleDocument.from_dict(parsed["data"])
            external = load_external_entities(spec.ner_path, doc) if spec.ner_path else None
            mentions = find_mentions(doc, roster, config.threshold, external)
            return {"data": mentions_to_dicts(mentions), "artifacts": {"mentions.csv": mentions_to_csv(mentions)}}

        found = run_stage("mentions", keys["mentions"], do_mentions)
        if "build" not in stages:
            return {}

        stage = "build"

        def do_build():
            mentions = mentions_from_dicts(found["data"])
            net = build_network(mentions, roster, config.t_window_s, config.w_min, spec.movie_id)
            return {
                "data": to_json_dict(net),
                "artifacts": {
                    "network.json": export_network(net, "json").decode("utf-8"),
                    "network.gexf": export_network(net, "gexf").decode("utf-8"),
                    "edges.csv": export_network(net, "csv").decode("utf-8"),
                },
            }

        built = run_stage("build", keys["build"], do_build)
        if "features" not in stages:
            return {}

        stage = "features"

        def do_features():
            net = from_json_dict(built["data"])
            vfeats = vertex_features(net, config.damping)
            nfeats = network_features(net, vfeats)
            census = triangle_census(net)
            ratio = degree_ratio_test(net)
            gender = {
                "triangle_counts": list(census.counts),
                "triangle_percents": list(census.percents),
                "triangles_excluded": census.excluded,
                "degree_ratio": ratio.ratio,
                "degree_ratio_pass": ratio.passed,
                "degree_ratio_flagged": ratio.flagged,
            }
            vertex_rows = [
                {"movie_id": spec.movie_id, "character": k, "gender": net.nodes[k].gender, **asdict(vf)}
                for k, vf in vfeats.items()
            ]
            return {
                "data": {
                    "stats": movie_gender_stats(net, vfeats),
                    "vector": assemble_features(net, roster, spec.record, vfeats),
                    "vertex_rows": vertex_rows,
                },
                "artifacts": {
                    "features.csv": features_csv(spec.movie_id, vfeats, nfeats),
                    "gender.json": json.dumps(gender, indent=2, sort_keys=True) + "\n",
                },
            }

        return run_stage("features", keys["features"], do_features)["data"]
    except Exception as exc:
        raise StageFailure(stage) from exc


@dataclass
class RunReport:
    movies: list[dict] = field(default_factory=list)
    corpus: dict = field(default_factory=dict)

    @property
    def failures(self) -> list[dict]:
        return [m for m in self.movies if m.get("error")]

    @property
    def exit_code(self) -> int:
        return 1 if self.failures or self.corpus.get("error") else 0

    def to_json(self) -> str:
        return json.dumps(
            {"movies": self.movies, "corpus": self.corpus, "failures": self.failures},
            indent=2, sort_keys=True,
        ) + "\n"


def load_corpus_roster(manifest: CorpusManifest, config: PipelineConfig) -> list[RosterEntry]:
    if manifest.cast_file is None:
        return []
    entries = load_roster(manifest.cast_file, manifest.gender_file, config.gender_threshold)
    if manifest.blacklist_file is not None:
        entries = filter_roster(entries, Blacklist.load(manifest.blacklist_file))
    return entries


def _resolve_stages(stages: Iterable[str] | None) -> list[str]:
    wanted = set(stages or STAGES)
    unknown = wanted - set(STAGES)
    if unknown:
        raise ValueError(f"unknown stage(s): {', '.join(sorted(unknown))}")
    # a stage needs everything upstream of it
    last = max(STAGES.index(s) for s in wanted)
    needed = set(STAGES[: min(last, 3) + 1]) | wanted
    return [s for s in STAGES if s in needed]


def run_pipeline(
    manifest: CorpusManifest,
    config: PipelineConfig,
    out_dir: str | Path,
    stages: Iterable[str] | None = None,
    cache_root: str | Path | None = None,
    jobs: int = 1,
) -> RunReport:
    out_dir = Path(out_dir)
    cache_root = Path(cache_root) if cache_root else default_cache_root(out_dir)
    stage_list = _resolve_stages(stages)
    movie_stages = [s for s in stage_list if s in MOVIE_STAGES]

    results = process_corpus(manifest, config, cache_root, out_dir, movie_stages, jobs)

    report = RunReport()
    for res in results:
        entry = {"movie_id": res.movie_id, "stages": res.stages}
        if res.error:
            entry.update(error=res.error, stage=res.failed_stage)
        report.movies.append(entry)

    ok = [(spec, res) for spec, res in zip(manifest.movies, results) if not res.error and res.stats is not None]
    if "analyze" in stage_list:
        report.corpus["analyze"] = write_analysis(ok, config, out_dir, Cache(cache_root))
    if "bechdel" in stage_list:
        try:
            report.corpus["bechdel"] = run_bechdel_stage(manifest, ok, config, out_dir, Cache(cache_root))
        except Exception as exc:
            logger.error("bechdel stage failed: %s", exc)
            report.corpus["error"] = f"bechdel: {type(exc).__name__}: {exc}"
    _write(out_dir / "run_report.json", report.to_json())
    return report


def process_corpus(
    manifest: CorpusManifest,
    config: PipelineConfig,
    cache_root: Path,
    out_dir: Path | None,
    stages: Sequence[str] = MOVIE_STAGES,
    jobs: int = 1,
) -> list[MovieResult]:
    """Per-movie stages for every manifest entry, in manifest order."""
    all_entries = load_corpus_roster(manifest, config)
    args = [
        (spec, roster_for_movie(all_entries, spec.roster_id), config, cache_root, out_dir, list(stages))
        for spec in manifest.movies
    ]
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_process_star, args))
    return [process_movie(*a) for a in args]


def _process_star(args):
    return process_movie(*args)


def popular(pairs, min_votes: int):
    return [(spec, res) for spec, res in pairs if spec.record.votes >= min_votes]


def write_analysis(pairs, config: PipelineConfig, out_dir: Path, cache: Cache | None = None) -> dict:
    """Corpus trend tables and per-character rows for the popular movies."""
    kept = popular(pairs, config.min_votes)
    summary = {"movies_analyzed": len(kept), "movies_below_min_votes": len(pairs) - len(kept)}
    key = _digest(
        CACHE_SCHEMA, "analyze", config.group_by,
        [(spec.movie_id, res.key, spec.record.release_year, sorted(spec.record.genres)) for spec, res in kept],
    )
    payload = cache.get("analyze", key) if cache is not None and all(res.key for _, res in kept) else None
    if payload is None:
        payload = analysis_tables(kept, config)
        if cache is not None:
            cache.put("analyze", key, payload)
    for name, text in payload.items():
        _write(out_dir / "corpus" / name, text)
    return summary


def analysis_tables(kept, config: PipelineConfig) -> dict[str, str]:
    records = [
        MovieStats(spec.movie_id, spec.record.release_year, tuple(sorted(spec.record.genres)), res.stats)
        for spec, res in kept
    ]
    rows = []
    for group_by in [g.strip() for g in config.group_by.split(",") if g.strip()]:
        rows.extend(corpus_trends(records, group_by))
    movie_rows = [{"movie_id": r.movie_id, "year": r.year, "genres": r.genres, **r.stats} for r in records]
    vertex_rows = [
        row | {"genres": tuple(sorted(spec.record.genres)), "year": spec.record.release_year}
        for spec, res in kept
        for row in res.vertex_rows
    ]
    return {
        "trends.csv": rows_to_csv(rows),
        "movie_stats.csv": rows_to_csv(movie_rows),
        "vertices.csv": rows_to_csv(vertex_rows),
    }


def read_vertex_rows(path: Path) -> list[dict]:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        row["genres"] = tuple(g for g in row.get("genres", "").split("|") if g)
    return rows


def forest_params(config: PipelineConfig) -> ForestParams:
    return ForestParams(config.tree_count, config.max_depth, config.min_leaf)


def labeled_movies(pairs, labels: dict[str, int]) -> list[LabeledMovie]:
    return [
        LabeledMovie(spec.movie_id, res.features, labels[spec.movie_id], spec.record.release_year)
        for spec, res in pairs
        if spec.movie_id in labels and res.features is not None
    ]


def run_bechdel_stage(manifest: CorpusManifest, pairs, config: PipelineConfig, out_dir: Path, cache: Cache) -> dict:
    if manifest.labels_file is None:
        return {"skipped": "no labels file in manifest"}
    labels = load_labels(manifest.labels_file)
    dataset = labeled_movies(pairs, labels)
    train_set, test_set = holdout_newest(dataset, min(config.holdout_newest, max(len(dataset) - 20, 0)))
    key = _digest(
        CACHE_SCHEMA, "bechdel",
        [(m.movie_id, m.raw_score, m.features) for m in train_set],
        asdict(forest_params(config)), config.seed,
    )
    blob = cache.get("bechdel", key)
    if blob is None:
        model = train(train_set, forest_params(config), config.seed)
        cache.put("bechdel", key, {"model": model.to_bytes().decode("utf-8")})
    else:
        model = ForestModel.from_bytes(blob["model"].encode("utf-8"))
    corpus = out_dir / "corpus"
    _write(corpus / "bechdel.model", model.to_bytes())

    summary: dict = {"train_size": len(train_set), "test_size": len(test_set)}
    if test_set:
        scores = model.predict_proba([m.features for m in test_set])
        report = classification_report([m.label for m in test_set], scores)
        summary["evaluation"] = report
        summary["p_at_k"] = {
            str(k): precision_at_k_scores([m.label for m in test_set], scores, k, [m.movie_id for m in test_set])
            for k in (10, 50, 100, 200) if k <= len(test_set)
        }
    summary["feature_importance"] = feature_importance(model)[:10]
    _write(corpus / "bechdel_eval.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")

    all_scores = model.predict_proba([res.features for _, res in pairs]) if pairs else []
    prob_rows = [
        {"movie_id": spec.movie_id, "year": spec.record.release_year, "genres": tuple(sorted(spec.record.genres)),
         "pass_probability": float(p)}
        for (spec, _), p in zip(pairs, all_scores)
    ]
    _write(corpus / "bechdel_probs.csv", rows_to_csv(prob_rows))
    return {"train_size": len(train_set), "test_size": len(test_set)}


def probabilities_csv(movie_ids: Sequence[str], probs) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["movie_id", "pass_probability"])
    for mid, p in zip(movie_ids, probs):
        writer.writerow([mid, repr(float(p))])
    return buf.getvalue()
