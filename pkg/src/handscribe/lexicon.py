"""Edit-distance machinery: Levenshtein distance, corpus character error
rate, and a frequency-dictionary spell corrector with user-extensible
vocabulary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable

from .errors import EmptyCorpusError, EmptyWordError, IoFailure


def levenshtein(a: str, b: str) -> int:
    """Minimum insertions + deletions + substitutions turning a into b,
    unit costs, over Unicode scalar values."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(min(
                previous[j] + 1,          # delete from a
                current[j - 1] + 1,       # insert into a
                previous[j - 1] + (ca != cb),
            ))
        previous = current
    return previous[-1]


@dataclass(frozen=True)
class EvalPair:
    ground_truth: str
    recognized: str


def cer(pairs: Iterable[EvalPair]) -> float:
    """Corpus character error rate: total edit distance over total
    ground-truth characters. May exceed 1 for badly over-long predictions."""
    total_dist = 0
    total_chars = 0
    for pair in pairs:
        total_dist += levenshtein(pair.ground_truth, pair.recognized)
        total_chars += len(pair.ground_truth)
    if total_chars == 0:
        raise EmptyCorpusError("total ground-truth length is zero")
    return total_dist / total_chars


def cer_report(pairs: list[EvalPair]) -> dict:
    """Structured CER report: metric name, value, pair count."""
    return {"metric": "cer", "value": cer(pairs), "pairs": len(pairs)}


@dataclass
class Dictionary:
    """Word-frequency vocabulary backing the spell corrector.

    Keys are stored case-folded unless case_sensitive; an empty dictionary
    disables correction (every word passes through unchanged).
    """

    entries: dict[str, int] = field(default_factory=dict)
    case_sensitive: bool = False

    def __post_init__(self):
        normalized: dict[str, int] = {}
        for word, freq in self.entries.items():
            if not word:
                raise EmptyWordError("dictionary words must be non-empty")
            if freq < 1:
                raise ValueError(f"frequency for {word!r} must be >= 1")
            key = word if self.case_sensitive else word.casefold()
            normalized[key] = normalized.get(key, 0) + freq
        self.entries = normalized
        self._alphabet = sorted({ch for word in self.entries for ch in word})

    def _key(self, word: str) -> str:
        return word if self.case_sensitive else word.casefold()

    def __contains__(self, word: str) -> bool:
        return self._key(word) in self.entries

    def frequency(self, word: str) -> int:
        return self.entries.get(self._key(word), 0)

    @property
    def alphabet(self) -> list[str]:
        return self._alphabet


def add_word(dictionary: Dictionary, word: str, frequency: int = 1) -> Dictionary:
    """Insert a word or raise its frequency; returns the dictionary."""
    if not word:
        raise EmptyWordError("cannot add an empty word")
    if frequency < 1:
        raise ValueError("frequency must be >= 1")
    key = dictionary._key(word)
    dictionary.entries[key] = dictionary.entries.get(key, 0) + frequency
    for ch in key:
        if ch not in dictionary._alphabet:
            dictionary._alphabet.append(ch)
            dictionary._alphabet.sort()
    return dictionary


def _edits1(word: str, alphabet: list[str]) -> set[str]:
    splits = [(word[:i], word[i:]) for i in range(len(word) + 1)]
    deletes = {left + right[1:] for left, right in splits if right}
    transposes = {left + right[1] + right[0] + right[2:] for left, right in splits if len(right) > 1}
    replaces = {left + ch + right[1:] for left, right in splits if right for ch in alphabet}
    inserts = {left + ch + right for left, right in splits for ch in alphabet}
    return deletes | transposes | replaces | inserts


def _best_candidate(candidates: set[str], dictionary: Dictionary) -> str | None:
    known = [w for w in candidates if w in dictionary.entries]
    if not known:
        return None
    return min(known, key=lambda w: (-dictionary.entries[w], w))


def correct(word: str, dictionary: Dictionary) -> str:
    """Dictionary spell correction.

    In-vocabulary words pass through. Otherwise candidates at edit
    distance 1 are tried, then (only when none exist) distance 2; the
    highest-frequency candidate wins, ties lexicographically. Tokens with
    no alphabetic character bypass correction, and the input's first-letter
    case is re-applied to the result.
    """
    if not word or not dictionary.entries or not any(ch.isalpha() for ch in word):
        return word
    if word in dictionary:
        return word

    folded = dictionary._key(word)
    pick = _best_candidate(_edits1(folded, dictionary.alphabet), dictionary)
    if pick is None:
        distance2 = set()
        for e1 in _edits1(folded, dictionary.alphabet):
            distance2 |= _edits1(e1, dictionary.alphabet)
        pick = _best_candidate(distance2, dictionary)
    if pick is None:
        return word
    if word[0].isupper() and pick:
        pick = pick[0].upper() + pick[1:]
    return pick


def load_dictionary(path, case_sensitive: bool = False) -> Dictionary:
    """Read a `word count` per line frequency file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read dictionary {path}: {exc}") from exc
    return parse_dictionary(text, case_sensitive=case_sensitive)


def parse_dictionary(text: str, case_sensitive: bool = False) -> Dictionary:
    entries: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        word = parts[0]
        freq = int(parts[1]) if len(parts) > 1 else 1
        entries[word] = entries.get(word, 0) + freq
    return Dictionary(entries=entries, case_sensitive=case_sensitive)


def default_dictionary() -> Dictionary:
    """The small English word-frequency list bundled with the package."""
    text = resources.files("handscribe.data").joinpath("wordfreq_en.txt").read_text("utf-8")
    return parse_dictionary(text)


def save_dictionary(dictionary: Dictionary, path) -> None:
    lines = [f"{word} {freq}" for word, freq in sorted(dictionary.entries.items())]
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + ("\n" if lines else ""))
    except OSError as exc:
        raise IoFailure(f"cannot write dictionary {path}: {exc}") from exc
