"""Find timestamped character mentions in a parsed subtitle document."""
from __future__ import annotations

import csv
import io
import json
import logging
import re
from collections import defaultdict
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

from .fuzzy import similarity
from .roster import RosterEntry, name_tokens, normalize_name
from .subtitles import SubtitleDocument, extract_hearing_impaired

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 85
MAX_NGRAM = 4

SPEAKER_TAG, NAME_MATCH, EXTERNAL_NER = "speaker_tag", "name_match", "external_ner"
# lower value wins when two detectors report the same character in the same cue
SOURCE_PRIORITY = {SPEAKER_TAG: 0, EXTERNAL_NER: 1, NAME_MATCH: 2}
ENTITY_LABELS = {"PERSON", "ORG"}

# tokens too generic to identify a character on their own
INDEX_STOPWORDS = frozenset(
    "the a an of and in on at to mr mrs ms miss dr sir madam lady lord mister "
    "st jr sr young old little big".split()
)
HONORIFICS = frozenset("mr mrs ms dr st jr sr".split())

_WORD_RE = re.compile(r"\S+")
_EDGE_PUNCT = "\"'“”‘’()[]{}¿¡*…"
_BREAK_PUNCT = set(",.!?;:…—")
_CLOSERS = set("\"”’)]}")


@dataclass(frozen=True)
class Mention:
    character_key: str
    time_ms: int
    source: str
    surface: str
    score: int
    cue_index: int = 0


class Resolution(NamedTuple):
    key: str
    score: int
    fuzzy: bool


class ExternalEntity(NamedTuple):
    surface: str
    cue_index: int
    label: str


class NameIndex:
    """Token -> characters lookup over a single movie's roster."""

    def __init__(self, roster: Iterable[RosterEntry]):
        self.full_names: dict[str, str] = {}
        self.cast_order: dict[str, int] = {}
        self.tokens: dict[str, list[str]] = defaultdict(list)
        for entry in roster:
            key = entry.key
            if key in self.cast_order:
                self.cast_order[key] = min(self.cast_order[key], entry.cast_order)
                continue
            self.cast_order[key] = entry.cast_order
            self.full_names.setdefault(normalize_name(entry.character_name), key)
            toks = name_tokens(entry.character_name)
            useful = [t for t in toks if t not in INDEX_STOPWORDS] or toks
            for tok in dict.fromkeys(useful):
                self.tokens[tok].append(key)
        self.tokens = dict(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.tokens

    def characters(self) -> list[str]:
        return list(self.cast_order)


def resolve_entity(person_name: str, index: NameIndex, threshold: int = DEFAULT_THRESHOLD) -> Resolution | None:
    """Map a surface name to a roster character.

    Scans the name's tokens in order. The first token that any character owns
    decides: a sole owner is returned directly, otherwise the owner with the
    best similarity to the whole surface name wins if it reaches ``threshold``.
    Ties go to the lower cast order, then the alphabetically first name.
    """
    norm = normalize_name(person_name)
    if not norm:
        return None
    exact = index.full_names.get(norm)
    if exact is not None:
        return Resolution(exact, 100, False)
    for token in name_tokens(norm):
        owners = index.tokens.get(token)
        if not owners:
            continue
        if len(owners) == 1:
            return Resolution(owners[0], similarity(person_name, owners[0]), False)
        scored = sorted(
            ((similarity(person_name, key), key) for key in owners),
            key=lambda sk: (-sk[0], index.cast_order[sk[1]], normalize_name(sk[1]), sk[1]),
        )
        best_score, best_key = scored[0]
        if best_score >= threshold:
            return Resolution(best_key, best_score, True)
        return None
    return None


def match_entity(person_name: str, index: NameIndex, threshold: int = DEFAULT_THRESHOLD) -> str | None:
    res = resolve_entity(person_name, index, threshold)
    return res.key if res else None


def _words(line: str) -> list[tuple[str, bool]]:
    """Split a dialogue line into (word, closes_run) pairs without edge punctuation."""
    out = []
    for raw in _WORD_RE.findall(line):
        word = raw.strip(_EDGE_PUNCT + "".join(_BREAK_PUNCT))
        if word.endswith(("'s", "’s")):
            word = word[:-2]
        ends = raw[-1] in _BREAK_PUNCT or raw[-1] in _CLOSERS
        # "Mr." does not end a name run
        if raw.endswith(".") and word.lower() in HONORIFICS:
            ends = False
        out.append((word, ends))
    return out


def candidate_spans(line: str, index: NameIndex) -> list[str]:
    """Capitalized word n-grams (n <= 4) that contain at least one indexed token.

    Runs of capitalized words are split at phrase punctuation. Within a run the
    longest, leftmost span is taken first and its words are consumed, so a
    failed resolution of "Mr. McFly" does not fall back to "McFly".
    """
    runs: list[list[str]] = []
    current: list[str] = []
    for word, ends in _words(line):
        if word and word[0].isupper():
            current.append(word)
            if not ends:
                continue
        if current:
            runs.append(current)
        current = []
    if current:
        runs.append(current)

    spans = []
    for run in runs:
        indexed = [any(t in index for t in name_tokens(w)) for w in run]
        used = [False] * len(run)
        picked = []
        for n in range(min(MAX_NGRAM, len(run)), 0, -1):
            for i in range(len(run) - n + 1):
                window = range(i, i + n)
                if any(used[j] for j in window) or not any(indexed[j] for j in window):
                    continue
                picked.append((i, " ".join(run[i:i + n])))
                for j in window:
                    used[j] = True
        spans.extend(span for _, span in sorted(picked))
    return spans


def load_external_entities(path: str | Path, doc: SubtitleDocument | None = None) -> list[ExternalEntity]:
    """Read JSON-lines NER output, keeping PERSON/ORG records with a valid cue index."""
    valid = {c.index for c in doc.cues} if doc is not None else None
    out = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        rec = json.loads(line)
        label = str(rec.get("label", "")).upper()
        if label not in ENTITY_LABELS:
            continue
        cue_index = int(rec["cue_index"])
        if valid is not None and cue_index not in valid:
            logger.warning("%s:%d: unknown cue index %d, record skipped", path, lineno, cue_index)
            continue
        out.append(ExternalEntity(str(rec["surface"]), cue_index, label))
    return out


def find_mentions(
    doc: SubtitleDocument,
    roster: list[RosterEntry],
    threshold: int = DEFAULT_THRESHOLD,
    external: Iterable[ExternalEntity] | None = None,
) -> list[Mention]:
    index = NameIndex(roster)
    by_cue: dict[int, list[ExternalEntity]] = defaultdict(list)
    for ent in external or ():
        by_cue[ent.cue_index].append(ent)

    mentions: list[Mention] = []
    unresolved = 0
    seen_ext_cues: set[int] = set()
    for cue in doc.cues:
        found: dict[str, Mention] = {}

        def offer(surface: str, source: str) -> None:
            nonlocal unresolved
            res = resolve_entity(surface, index, threshold)
            if res is None:
                unresolved += 1
                return
            m = Mention(res.key, cue.start_ms, source, surface, res.score, cue.index)
            prev = found.get(res.key)
            if prev is None or SOURCE_PRIORITY[source] < SOURCE_PRIORITY[prev.source]:
                found[res.key] = m

        tags, _, dialogue = extract_hearing_impaired(list(cue.lines))
        for tag in tags:
            offer(tag, SPEAKER_TAG)
        # external records attach to the first cue carrying their index
        if cue.index not in seen_ext_cues:
            seen_ext_cues.add(cue.index)
            for ent in by_cue.get(cue.index, ()):
                offer(ent.surface, EXTERNAL_NER)
        for line in dialogue:
            for span in candidate_spans(line, index):
                offer(span, NAME_MATCH)
        # insertion order follows detection order within the cue
        mentions.extend(found.values())
    if unresolved:
        logger.info("%s: %d entities did not resolve to a roster character", doc.movie_id, unresolved)
    return mentions


MENTION_COLUMNS = ("character", "time_ms", "source", "surface", "score")


def mentions_to_csv(mentions: Iterable[Mention]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(MENTION_COLUMNS)
    for m in mentions:
        writer.writerow([m.character_key, m.time_ms, m.source, m.surface, m.score])
    return buf.getvalue()


def mentions_to_dicts(mentions: Iterable[Mention]) -> list[dict]:
    return [asdict(m) for m in mentions]


def mentions_from_dicts(rows: Iterable[dict]) -> list[Mention]:
    return [Mention(**r) for r in rows]
