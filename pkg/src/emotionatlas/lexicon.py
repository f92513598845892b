"""Tiered keyword lexicon and the emotional-intensity scorer built on it.

Scoring model: every text starts at a base intensity of 0.1. Word hits add
their tier score (extreme 1.0, high 0.8, moderate 0.6, mild 0.3), the
presence of intensifier words adds a flat 0.3, absolutist words a flat 0.2,
exclamation marks 0.25 each (at most 4 counted), question marks 0.15 each
(at most 3 counted), and fully upper-case text longer than 3 characters
adds 0.5. The total is capped at 2.0.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

_WORD_RE = re.compile(r"[a-z0-9]+")

TIER_SCORES = {
    "extreme": 1.0,
    "high": 0.8,
    "moderate": 0.6,
    "mild": 0.3,
}

BASE_INTENSITY = 0.1
INTENSITY_CAP = 2.0
INTENSIFIER_BONUS = 0.3
ABSOLUTIST_BONUS = 0.2
EXCLAMATION_BONUS = 0.25
EXCLAMATION_MAX = 4
QUESTION_BONUS = 0.15
QUESTION_MAX = 3
ALLCAPS_BONUS = 0.5


class LexiconError(ValueError):
    """Raised for malformed lexicon files."""


def tokenize(text: str) -> list[str]:
    """Lowercase word tokens, split on any non-alphanumeric character."""
    return _WORD_RE.findall(text.lower())


@dataclass(frozen=True)
class Lexicon:
    """Scored words plus the two modifier word classes."""

    entries: dict[str, float]
    intensifiers: frozenset[str]
    absolutists: frozenset[str]

    def __post_init__(self) -> None:
        overlap = self.intensifiers & self.absolutists
        if overlap:
            raise LexiconError(
                f"words in both intensifier and absolutist sets: {sorted(overlap)}"
            )


@dataclass(frozen=True)
class IntensityScore:
    """Final capped intensity with its additive breakdown."""

    value: float
    components: dict[str, float]


def load_lexicon(path: str | Path) -> Lexicon:
    """Load a lexicon CSV with header ``word,tier``.

    Tier is one of extreme/high/moderate/mild for scored words, or
    intensifier/absolutist for the modifier classes. Words are lowercased.
    A word may appear under exactly one tier. Entries containing spaces are
    rejected; a phrase syntax is reserved for a later version.
    """
    path = Path(path)
    entries: dict[str, float] = {}
    intensifiers: set[str] = set()
    absolutists: set[str] = set()
    seen: set[str] = set()

    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames[:2]] != ["word", "tier"]:
            raise LexiconError(f"{path}: expected header 'word,tier'")
        for lineno, row in enumerate(reader, start=2):
            word = (row.get("word") or "").strip().lower()
            tier = (row.get("tier") or "").strip().lower()
            if not word and not tier:
                continue
            if " " in word:
                raise LexiconError(
                    f"{path}:{lineno}: multi-word entry {word!r} not supported"
                )
            if word in seen:
                raise LexiconError(f"{path}:{lineno}: duplicate word {word!r}")
            seen.add(word)
            if tier in TIER_SCORES:
                entries[word] = TIER_SCORES[tier]
            elif tier == "intensifier":
                intensifiers.add(word)
            elif tier == "absolutist":
                absolutists.add(word)
            else:
                raise LexiconError(f"{path}:{lineno}: unknown tier {tier!r}")

    return Lexicon(entries, frozenset(intensifiers), frozenset(absolutists))


def default_lexicon() -> Lexicon:
    """The lexicon shipped with the package."""
    with resources.as_file(resources.files("emotionatlas.data") / "lexicon_default.csv") as p:
        return load_lexicon(p)


def score_intensity(
    text: str,
    lex: Lexicon,
    per_occurrence_modifiers: bool = False,
) -> IntensityScore:
    """Score one text against a lexicon.

    Components are summed in a fixed order (base, lexical, intensifier,
    absolutist, exclamation, question, allcaps) so results are reproducible
    bit for bit. ``per_occurrence_modifiers`` switches the intensifier and
    absolutist bonuses from flat per-category to per-occurrence; the flat
    reading is the default.
    """
    tokens = tokenize(text)

    lexical = 0.0
    n_intens = 0
    n_absol = 0
    for tok in tokens:
        lexical += lex.entries.get(tok, 0.0)
        if tok in lex.intensifiers:
            n_intens += 1
        if tok in lex.absolutists:
            n_absol += 1

    if per_occurrence_modifiers:
        intensifier = INTENSIFIER_BONUS * n_intens
        absolutist = ABSOLUTIST_BONUS * n_absol
    else:
        intensifier = INTENSIFIER_BONUS if n_intens else 0.0
        absolutist = ABSOLUTIST_BONUS if n_absol else 0.0

    exclamation = EXCLAMATION_BONUS * min(text.count("!"), EXCLAMATION_MAX)
    question = QUESTION_BONUS * min(text.count("?"), QUESTION_MAX)
    allcaps = ALLCAPS_BONUS if text.isupper() and len(text) > 3 else 0.0

    components = {
        "base": BASE_INTENSITY,
        "lexical": lexical,
        "intensifier": intensifier,
        "absolutist": absolutist,
        "exclamation": exclamation,
        "question": question,
        "allcaps": allcaps,
    }
    total = (
        BASE_INTENSITY + lexical + intensifier + absolutist
        + exclamation + question + allcaps
    )
    return IntensityScore(value=min(total, INTENSITY_CAP), components=components)
