"""Cast rosters, gender resolution, name reconciliation and the minor-character blacklist."""
from __future__ import annotations

import csv
import json
import logging
import re
from collections import defaultdict
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping

from .errors import EmptyCorpus, MissingColumn

logger = logging.getLogger(__name__)

FEMALE, MALE, UNKNOWN = "female", "male", "unknown"
GENDER_THRESHOLD = 0.9

_PUNCT_RE = re.compile(r"[^\w\s'-]|_")
_TOKEN_SPLIT_RE = re.compile(r"[\s-]+")

# column aliases accepted in cast files; the first name is canonical
CAST_COLUMNS = {
    "movie_id": ("movie_id", "tconst", "movie"),
    "character": ("character", "characters", "character_name", "role"),
    "actor": ("actor", "actor_name", "primaryname", "name"),
    "category": ("category", "gender_category"),
    "ordering": ("ordering", "cast_order", "order"),
}
REQUIRED_CAST_COLUMNS = ("movie_id", "character", "actor", "ordering")


def normalize_name(name: str) -> str:
    """Lowercase, drop punctuation other than apostrophes/hyphens, collapse whitespace."""
    return " ".join(_PUNCT_RE.sub(" ", name.lower()).split())


def name_tokens(name: str) -> list[str]:
    return [t for t in _TOKEN_SPLIT_RE.split(normalize_name(name)) if t.strip("'-")]


def _all_tokens(name: str) -> set[str]:
    return set(name.split()) | set(name_tokens(name))


@dataclass(frozen=True)
class RosterEntry:
    movie_id: str
    character_name: str
    actor_name: str
    gender: str = UNKNOWN
    cast_order: int = 1

    def __post_init__(self):
        if not normalize_name(self.character_name) or not normalize_name(self.actor_name):
            raise ValueError(f"empty character or actor name in {self!r}")
        if self.cast_order < 1:
            raise ValueError(f"cast_order must be >= 1, got {self.cast_order}")
        if self.gender not in (FEMALE, MALE, UNKNOWN):
            raise ValueError(f"bad gender {self.gender!r}")

    @property
    def key(self) -> str:
        return self.character_name


@dataclass(frozen=True)
class MovieRecord:
    movie_id: str
    title: str = ""
    release_year: int | None = None
    genres: frozenset[str] = frozenset()
    rating: float | None = None
    votes: int = 0
    runtime_min: int | None = None

    def __post_init__(self):
        if self.votes < 0:
            raise ValueError("votes must be non-negative")
        if self.release_year is not None and not 1880 <= self.release_year <= 2100:
            raise ValueError(f"implausible release year {self.release_year}")


@dataclass(frozen=True)
class ActorRecord:
    actor_name: str
    birth_year: int | None = None
    death_year: int | None = None

    def __post_init__(self):
        if (
            self.birth_year is not None
            and self.death_year is not None
            and self.death_year < self.birth_year
        ):
            raise ValueError(f"{self.actor_name}: death year precedes birth year")

    def age_at(self, year: int) -> int | None:
        if self.birth_year is None:
            return None
        return year - self.birth_year


@dataclass(frozen=True)
class Blacklist:
    names: frozenset[str] = field(default_factory=frozenset)

    def __contains__(self, name: str) -> bool:
        return normalize_name(name) in self.names

    def __len__(self) -> int:
        return len(self.names)

    def to_text(self) -> str:
        return "".join(f"{n}\n" for n in sorted(self.names))

    @classmethod
    def from_names(cls, names: Iterable[str]) -> "Blacklist":
        return cls(frozenset(n for n in (normalize_name(x) for x in names) if n))

    @classmethod
    def load(cls, path: str | Path) -> "Blacklist":
        return cls.from_names(Path(path).read_text(encoding="utf-8").splitlines())


def _sniff_delimiter(header: str, path: Path) -> str:
    if path.suffix.lower() in (".tsv", ".tab") or "\t" in header:
        return "\t"
    return ","


def _read_table(path: str | Path) -> tuple[list[str], list[dict[str, str]]]:
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        header = fh.readline()
        fh.seek(0)
        reader = csv.DictReader(fh, delimiter=_sniff_delimiter(header, path))
        fields = [f.strip().lower() for f in (reader.fieldnames or [])]
        rows = [
            {k.strip().lower(): (v or "").strip() for k, v in row.items() if k is not None}
            for row in reader
        ]
    return fields, rows


def _resolve_columns(fields: list[str], path) -> dict[str, str]:
    resolved = {}
    for canonical, aliases in CAST_COLUMNS.items():
        for alias in aliases:
            if alias in fields:
                resolved[canonical] = alias
                break
    missing = [c for c in REQUIRED_CAST_COLUMNS if c not in resolved]
    if missing:
        raise MissingColumn(f"{path}: missing column(s) {', '.join(missing)}")
    return resolved


def _split_characters(value: str) -> list[str]:
    # IMDb principals store characters as a JSON list, e.g. ["Neo"]
    if value.startswith("["):
        try:
            parsed = json.loads(value)
        except json.JSONDecodeError:
            parsed = None
        if isinstance(parsed, list):
            return [str(x).strip() for x in parsed if str(x).strip()]
    return [value] if value and value != r"\N" else []


def load_gender_table(path: str | Path) -> dict[str, tuple[str, float]]:
    """Read ``name,gender,probability`` rows into first name -> (gender, p).

    When a name has several rows the most probable one wins.
    """
    fields, rows = _read_table(path)
    for col in ("name", "gender", "probability"):
        if col not in fields:
            raise MissingColumn(f"{path}: missing column {col}")
    table: dict[str, tuple[str, float]] = {}
    for row in rows:
        name = normalize_name(row["name"])
        gender = {"f": FEMALE, "female": FEMALE, "m": MALE, "male": MALE}.get(row["gender"].lower())
        if not name or gender is None:
            continue
        p = float(row["probability"])
        if name not in table or p > table[name][1]:
            table[name] = (gender, p)
    return table


def resolve_gender(
    category: str,
    actor_name: str,
    gender_table: Mapping[str, tuple[str, float]],
    threshold: float = GENDER_THRESHOLD,
) -> str:
    category = category.strip().lower()
    if category == "actress":
        return FEMALE
    if category == "actor":
        return MALE
    tokens = normalize_name(actor_name).split()
    if tokens and tokens[0] in gender_table:
        gender, p = gender_table[tokens[0]]
        if p >= threshold:
            return gender
    return UNKNOWN


def load_roster(
    cast_file: str | Path,
    names_gender_file: str | Path | None = None,
    gender_threshold: float = GENDER_THRESHOLD,
) -> list[RosterEntry]:
    fields, rows = _read_table(cast_file)
    cols = _resolve_columns(fields, cast_file)
    table = load_gender_table(names_gender_file) if names_gender_file else {}
    seen: set[tuple[str, str, str]] = set()
    entries: list[RosterEntry] = []
    for lineno, row in enumerate(rows, start=2):
        movie_id = row[cols["movie_id"]]
        actor = row[cols["actor"]]
        category = row.get(cols.get("category", ""), "")
        if category and category.lower() not in ("actor", "actress", "self"):
            continue  # crew rows in IMDb principals dumps
        try:
            order = int(row[cols["ordering"]])
        except ValueError:
            logger.warning("%s:%d: bad ordering %r, row skipped", cast_file, lineno, row[cols["ordering"]])
            continue
        for character in _split_characters(row[cols["character"]]):
            dedup = (movie_id, normalize_name(actor), normalize_name(character))
            if dedup in seen:
                logger.warning("%s:%d: duplicate entry %s, keeping first", cast_file, lineno, dedup)
                continue
            if not normalize_name(character) or not normalize_name(actor):
                logger.warning("%s:%d: empty name, row skipped", cast_file, lineno)
                continue
            seen.add(dedup)
            gender = resolve_gender(category, actor, table, gender_threshold)
            entries.append(RosterEntry(movie_id, character, actor, gender, max(order, 1)))
    return entries


def load_name_set(path: str | Path) -> set[str]:
    """Newline-delimited names; for CSV-like lines (``Mary,F,7065``) the first field is used."""
    names = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        first = line.split(",", 1)[0].strip()
        if first:
            names.add(normalize_name(first))
    return names


def reconcile_name(name_a: str, name_b: str) -> str:
    """Keep the longer of two spellings of the same character; ties keep ``name_a``."""
    return name_b if len(name_b) > len(name_a) else name_a


def reconcile_rosters(
    primary: list[RosterEntry], secondary: list[RosterEntry]
) -> list[RosterEntry]:
    """Match entries by (movie, actor) and keep the longer character name."""
    lookup: dict[tuple[str, str], str] = {}
    for entry in secondary:
        lookup.setdefault((entry.movie_id, normalize_name(entry.actor_name)), entry.character_name)
    out = []
    for entry in primary:
        other = lookup.get((entry.movie_id, normalize_name(entry.actor_name)))
        if other is not None:
            entry = replace(entry, character_name=reconcile_name(entry.character_name, other))
        out.append(entry)
    return out


def build_blacklist(
    all_rosters: list[RosterEntry],
    given_names: set[str],
    surnames: set[str],
    max_mean_order: float = 3.0,
) -> Blacklist:
    if not all_rosters:
        raise EmptyCorpus("cannot build a blacklist from an empty roster corpus")
    known = {normalize_name(n) for n in given_names} | {normalize_name(n) for n in surnames}

    by_name: dict[str, list[RosterEntry]] = defaultdict(list)
    for entry in all_rosters:
        by_name[normalize_name(entry.character_name)].append(entry)

    # drop anything that looks like a real name
    candidates = {
        name for name in by_name if not (_all_tokens(name) & known)
    }

    # recurring roles: same actor, same character name, several films
    recurring = set()
    for name in candidates:
        films_by_actor: dict[str, set[str]] = defaultdict(set)
        for entry in by_name[name]:
            films_by_actor[normalize_name(entry.actor_name)].add(entry.movie_id)
        if any(len(films) > 1 for films in films_by_actor.values()):
            recurring.add(name)
    candidates -= recurring

    blacklisted = set()
    for name in candidates:
        entries = by_name[name]
        mean_order = sum(e.cast_order for e in entries) / len(entries)
        if mean_order <= max_mean_order:
            continue
        if len({e.movie_id for e in entries}) <= 1:
            continue
        blacklisted.add(name)
    return Blacklist(frozenset(blacklisted))


def filter_roster(entries: list[RosterEntry], blacklist: Blacklist) -> list[RosterEntry]:
    return [e for e in entries if normalize_name(e.character_name) not in blacklist.names]


def roster_for_movie(entries: Iterable[RosterEntry], movie_id: str) -> list[RosterEntry]:
    """Entries for one movie, one per character (lowest cast order wins), in cast order."""
    best: dict[str, RosterEntry] = {}
    for entry in entries:
        if entry.movie_id != movie_id:
            continue
        cur = best.get(entry.character_name)
        if cur is None or entry.cast_order < cur.cast_order:
            best[entry.character_name] = entry
    return sorted(best.values(), key=lambda e: (e.cast_order, e.character_name))
