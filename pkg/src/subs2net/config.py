"""Run configuration and corpus manifests."""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

from .errors import ManifestError
from .roster import MovieRecord

CACHE_ENV = "SUBS2NET_CACHE"


@dataclass(frozen=True)
class PipelineConfig:
    t_window_s: int = 60
    w_min: int = 2
    threshold: int = 85
    min_votes: int = 1000
    seed: int = 42
    damping: float = 0.85
    gender_threshold: float = 0.9
    holdout_newest: int = 300
    tree_count: int = 200
    max_depth: int = 8
    min_leaf: int = 5
    group_by: str = "decade,genre"

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in asdict(self).items())

    def updated(self, overrides: Mapping[str, Any]) -> "PipelineConfig":
        known = {f.name: f.type for f in fields(self)}
        clean = {}
        for key, value in overrides.items():
            key = key.replace("-", "_")
            if value is None:
                continue
            if key not in known:
                raise ManifestError(f"unknown configuration key {key!r}")
            clean[key] = _coerce(getattr(self, key), value)
        return replace(self, **clean)


def _coerce(current, value):
    if isinstance(current, bool):
        return str(value).lower() in ("1", "true", "yes")
    if isinstance(current, int):
        return int(value)
    if isinstance(current, float):
        return float(value)
    return str(value)


def parse_config_text(text: str) -> dict[str, str]:
    """``key = value`` lines; blank lines and ``#`` comments ignored."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ManifestError(f"config line {lineno}: expected key = value")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_config(path: str | Path | None, base: PipelineConfig | None = None) -> PipelineConfig:
    base = base or PipelineConfig()
    if path is None:
        return base
    return base.updated(parse_config_text(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class MovieSpec:
    movie_id: str
    srt_path: Path
    roster_id: str
    record: MovieRecord
    ner_path: Path | None = None


@dataclass(frozen=True)
class CorpusManifest:
    path: Path
    movies: tuple[MovieSpec, ...]
    cast_file: Path | None
    gender_file: Path | None = None
    blacklist_file: Path | None = None
    labels_file: Path | None = None
    config: dict = field(default_factory=dict)

    def movie(self, movie_id: str) -> MovieSpec:
        for spec in self.movies:
            if spec.movie_id == movie_id:
                return spec
        raise ManifestError(f"movie {movie_id!r} not in manifest {self.path}")


def _path(base: Path, value: str | None) -> Path | None:
    if not value:
        return None
    p = Path(value)
    return p if p.is_absolute() else base / p


def load_manifest(path: str | Path) -> CorpusManifest:
    """Read a JSON corpus manifest; relative paths resolve against its directory."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    base = path.parent
    movies = []
    seen = set()
    for i, m in enumerate(doc.get("movies", [])):
        try:
            movie_id = str(m["movie_id"])
            srt = _path(base, m["srt"] if "srt" in m else m["srt_path"])
        except KeyError as exc:
            raise ManifestError(f"{path}: movie #{i} lacks {exc}") from exc
        if movie_id in seen:
            raise ManifestError(f"{path}: duplicate movie_id {movie_id!r}")
        seen.add(movie_id)
        if not srt.exists():
            raise ManifestError(f"{path}: subtitle file {srt} does not exist")
        ner = _path(base, m.get("ner_file"))
        if ner is not None and not ner.exists():
            raise ManifestError(f"{path}: NER file {ner} does not exist")
        genres = m.get("genres") or []
        if isinstance(genres, str):
            genres = [g for g in genres.replace("|", ",").split(",") if g]
        record = MovieRecord(
            movie_id=movie_id,
            title=m.get("title", ""),
            release_year=m.get("release_year"),
            genres=frozenset(genres),
            rating=m.get("rating"),
            votes=int(m.get("votes", 0)),
            runtime_min=m.get("runtime_min"),
        )
        movies.append(MovieSpec(movie_id, srt, str(m.get("roster_id", movie_id)), record, ner))

    files = {}
    for key in ("cast_file", "gender_file", "blacklist", "labels"):
        p = _path(base, doc.get(key))
        if p is not None and not p.exists():
            raise ManifestError(f"{path}: {key} {p} does not exist")
        files[key] = p
    return CorpusManifest(
        path=path,
        movies=tuple(movies),
        cast_file=files["cast_file"],
        gender_file=files["gender_file"],
        blacklist_file=files["blacklist"],
        labels_file=files["labels"],
        config=dict(doc.get("config", {})),
    )


def default_cache_root(out_dir: Path | None = None) -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return (out_dir or Path(".")) / ".subs2net-cache"
