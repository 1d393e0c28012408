"""SRT parsing and hearing-impaired annotation extraction."""
from __future__ import annotations

import json
import logging
import re
from dataclasses import asdict, dataclass, field

from .errors import EmptyDocument, EncodingError

logger = logging.getLogger(__name__)

_TIME = r"(\d{1,3}):(\d{2}):(\d{2})[,.](\d{1,3})"
TIMING_RE = re.compile(rf"^\s*{_TIME}\s*-->\s*{_TIME}(?:\s+.*)?$")
INDEX_RE = re.compile(r"^\s*(\d+)\s*$")
TAG_RE = re.compile(r"<[^<>]*>|\{\\[^{}]*\}")
SPEAKER_RE = re.compile(r"^([A-Z][A-Z .'-]{1,40}):")
ANNOTATION_RE = re.compile(r"\[([^\[\]]*)\]|\(([^()]*)\)")
BLANK_SPLIT_RE = re.compile(r"\n[ \t]*\n")


@dataclass(frozen=True)
class SubtitleCue:
    index: int
    start_ms: int
    end_ms: int
    lines: tuple[str, ...]
    speaker_tags: tuple[str, ...] = ()
    sound_cues: tuple[str, ...] = ()

    @property
    def dialogue(self) -> list[str]:
        """Lines with speaker prefixes and sound cues removed."""
        return extract_hearing_impaired(list(self.lines))[2]

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("lines", "speaker_tags", "sound_cues"):
            d[key] = list(d[key])
        return d


@dataclass(frozen=True)
class SubtitleDocument:
    movie_id: str
    cues: tuple[SubtitleCue, ...]
    skipped_count: int = 0
    hearing_impaired: bool = field(init=False)

    def __post_init__(self):
        hi = any(c.speaker_tags or c.sound_cues for c in self.cues)
        object.__setattr__(self, "hearing_impaired", hi)

    def cue_by_index(self, index: int) -> SubtitleCue | None:
        for cue in self.cues:
            if cue.index == index:
                return cue
        return None

    def to_dict(self) -> dict:
        return {
            "movie_id": self.movie_id,
            "hearing_impaired": self.hearing_impaired,
            "cues": [c.to_dict() for c in self.cues],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "SubtitleDocument":
        cues = tuple(
            SubtitleCue(
                index=c["index"],
                start_ms=c["start_ms"],
                end_ms=c["end_ms"],
                lines=tuple(c["lines"]),
                speaker_tags=tuple(c.get("speaker_tags", ())),
                sound_cues=tuple(c.get("sound_cues", ())),
            )
            for c in data["cues"]
        )
        return cls(data["movie_id"], cues, data.get("skipped_count", 0))


def decode_subtitle_bytes(raw: bytes) -> str:
    # NUL bytes mean UTF-16 or a binary file; neither fallback can decode it.
    if b"\x00" in raw:
        raise EncodingError("input contains NUL bytes; not UTF-8 or Latin-1 text")
    try:
        return raw.decode("utf-8-sig")
    except UnicodeDecodeError:
        return raw.decode("latin-1")


def _to_ms(h: str, m: str, s: str, frac: str) -> int:
    # "5" after the comma means 500 ms, not 5 ms
    ms = int(frac.ljust(3, "0"))
    return ((int(h) * 60 + int(m)) * 60 + int(s)) * 1000 + ms


def format_timestamp(ms: int) -> str:
    h, rem = divmod(ms, 3_600_000)
    m, rem = divmod(rem, 60_000)
    s, ms = divmod(rem, 1000)
    return f"{h:02d}:{m:02d}:{s:02d},{ms:03d}"


def strip_markup(line: str) -> str:
    prev = None
    while prev != line:
        prev, line = line, TAG_RE.sub("", line)
    return line


def _clean_line(line: str) -> str:
    line = strip_markup(line).strip()
    if line.startswith("-"):
        line = line.lstrip("-").strip()
    return line


def _is_sound_cue(content: str) -> bool:
    text = content.strip()
    return bool(text) and any(ch.isalpha() for ch in text) and text == text.upper()


def extract_hearing_impaired(
    cue_lines: list[str],
) -> tuple[list[str], list[str], list[str]]:
    """Split markup-free cue lines into speaker tags, sound cues and dialogue.

    Speaker tags are leading ``NAME:`` prefixes with at least two capitals.
    Only all-caps bracketed or parenthesised annotations count as sound cues;
    lowercase asides stay in the dialogue.
    """
    speaker_tags: list[str] = []
    sound_cues: list[str] = []
    cleaned: list[str] = []
    for line in cue_lines:
        removed = False

        def _take(match: re.Match) -> str:
            nonlocal removed
            content = match.group(1) if match.group(1) is not None else match.group(2)
            if _is_sound_cue(content):
                sound_cues.append(" ".join(content.split()))
                removed = True
                return " "
            return match.group(0)

        text = ANNOTATION_RE.sub(_take, line)
        if removed:
            text = " ".join(text.split())
        text = text.strip()
        if text.startswith("-"):
            text = text.lstrip("-").strip()

        m = SPEAKER_RE.match(text)
        if m and sum(ch.isupper() for ch in m.group(1)) >= 2:
            tag = m.group(1).strip()
            if tag:
                speaker_tags.append(tag)
                text = text[m.end():].strip()
        if text:
            cleaned.append(text)
    return speaker_tags, sound_cues, cleaned


def _parse_block(block: str) -> SubtitleCue | None:
    lines = block.split("\n")
    while lines and not lines[0].strip():
        lines.pop(0)
    if len(lines) < 2:
        return None
    idx = INDEX_RE.match(lines[0])
    timing = TIMING_RE.match(lines[1])
    if not idx or not timing:
        return None
    index = int(idx.group(1))
    g = timing.groups()
    start, end = _to_ms(*g[:4]), _to_ms(*g[4:])
    if index < 1 or end < start:
        return None
    text = [c for c in (_clean_line(line) for line in lines[2:]) if c]
    tags, cues, _ = extract_hearing_impaired(text)
    return SubtitleCue(index, start, end, tuple(text), tuple(tags), tuple(cues))


def parse_srt_text(text: str, movie_id: str) -> SubtitleDocument:
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    cues: list[SubtitleCue] = []
    skipped = 0
    for block in BLANK_SPLIT_RE.split(text):
        if not block.strip():
            continue
        cue = _parse_block(block)
        if cue is None:
            skipped += 1
        else:
            cues.append(cue)
    if not cues:
        raise EmptyDocument(f"{movie_id}: no parseable subtitle cues")
    if skipped:
        logger.warning("%s: skipped %d malformed subtitle blocks", movie_id, skipped)
    cues.sort(key=lambda c: (c.start_ms, c.index))
    return SubtitleDocument(movie_id, tuple(cues), skipped)


def parse_srt(raw: bytes, movie_id: str) -> SubtitleDocument:
    return parse_srt_text(decode_subtitle_bytes(raw), movie_id)


def to_srt(doc: SubtitleDocument) -> str:
    """Serialize cues back to canonical SRT text."""
    blocks = []
    for cue in doc.cues:
        head = f"{cue.index}\n{format_timestamp(cue.start_ms)} --> {format_timestamp(cue.end_ms)}"
        blocks.append("\n".join([head, *cue.lines]))
    return "\n\n".join(blocks) + "\n"
