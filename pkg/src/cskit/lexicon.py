"""Pronunciation lexicon with per-entry provenance tags and conversion to
the phoneme-to-word transducer used for decoding (the "L graph")."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .confnet import PhonemeSequence, _check_sequence
from .errors import CskitError, ParseError
from .fst import EPSILON, EPSILON_ID, Arc, SymbolTable, Wfst

SOURCES = ("L0", "L1", "L2f", "L2n", "L3a", "L3ab")

_RESERVED_WORDS = (EPSILON, "<s>", "</s>")


@dataclass(frozen=True)
class PronEntry:
    word: str
    phonemes: PhonemeSequence
    source: str
    score: float | None = None

    def __post_init__(self):
        if not self.word:
            raise CskitError("entry word must be nonempty")
        if self.source not in SOURCES:
            raise CskitError(f"unknown source tag: {self.source!r}")
        object.__setattr__(self, "phonemes", _check_sequence(self.phonemes))

    def key(self) -> tuple:
        return (self.word, self.phonemes, self.source)


class Lexicon:
    """Insertion-ordered multimap word -> pronunciations. Two entries may
    share word and phonemes as long as their sources differ."""

    def __init__(self, entries=()):
        self.entries: list[PronEntry] = []
        self._keys: set[tuple] = set()
        for e in entries:
            self.add(e)

    def add(self, entry: PronEntry) -> bool:
        """Add unless an entry with the same (word, phonemes, source)
        already exists; the first occurrence wins."""
        if entry.key() in self._keys:
            return False
        self._keys.add(entry.key())
        self.entries.append(entry)
        return True

    def words(self) -> list[str]:
        seen = dict.fromkeys(e.word for e in self.entries)
        return list(seen)

    def lookup(self, word: str) -> list[PronEntry]:
        return [e for e in self.entries if e.word == word]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __contains__(self, word: str) -> bool:
        return any(e.word == word for e in self.entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Lexicon):
            return NotImplemented
        return self.entries == other.entries


def merge(lexicons: list[Lexicon]) -> Lexicon:
    """Union preserving input order; exact duplicates collapse, entries
    differing only in source are all kept."""
    out = Lexicon()
    for lex in lexicons:
        for entry in lex:
            out.add(entry)
    return out


def build_l_fst(
    lex: Lexicon,
    isyms: SymbolTable,
    osyms: SymbolTable,
    use_scores: bool = False,
) -> Wfst:
    """Phoneme-to-word transducer: one path per entry from a shared start
    to a shared final state, emitting the word on the first arc.

    Missing phonemes and words are added to the given tables. By default
    every path costs 0; with ``use_scores`` a path costs
    -ln(score / best score for that word), so the best pronunciation stays
    free and weaker ones pay their vote ratio. The conversion only applies
    when the word's best score is positive (vote counts are); entries
    without a usable score stay free.
    """
    best: dict[str, float] = {}
    if use_scores:
        for e in lex:
            if e.score is not None:
                best[e.word] = max(best.get(e.word, -math.inf), e.score)

    f = Wfst(isyms, osyms)
    start = f.add_state()
    final = f.add_state()
    f.set_start(start)
    f.set_final(final, 0.0)
    for entry in lex:
        if entry.word in _RESERVED_WORDS:
            raise CskitError(f"word collides with a reserved symbol: {entry.word!r}")
        for p in entry.phonemes:
            if p in _RESERVED_WORDS:
                raise CskitError(f"phoneme collides with a reserved symbol: {p!r}")
        cost = 0.0
        if use_scores and entry.score is not None and best[entry.word] > 0:
            cost = -math.log(entry.score / best[entry.word])
        word_id = osyms.add(entry.word)
        src = start
        for k, p in enumerate(entry.phonemes):
            dst = final if k == len(entry.phonemes) - 1 else f.add_state()
            olabel = word_id if k == 0 else EPSILON_ID
            f.add_arc(src, Arc(dst, isyms.add(p), olabel, cost if k == 0 else 0.0))
            src = dst
    return f


def _fmt_score(score: float) -> str:
    if float(score).is_integer():
        return "%d" % score
    return repr(float(score))


def save_tsv(lex: Lexicon) -> str:
    lines = []
    for e in lex:
        line = f"{e.word}\t{' '.join(e.phonemes)}\t{e.source}"
        if e.score is not None:
            line += f"\t{_fmt_score(e.score)}"
        lines.append(line)
    return "".join(line + "\n" for line in lines)


def load_tsv(text: str) -> Lexicon:
    lex = Lexicon()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) not in (3, 4):
            raise ParseError(f"expected 3 or 4 tab-separated fields, got {len(fields)}", lineno)
        word, phonemes, source = fields[0], tuple(fields[1].split()), fields[2]
        score = None
        if len(fields) == 4:
            try:
                score = float(fields[3])
            except ValueError:
                raise ParseError(f"bad score {fields[3]!r}", lineno) from None
        try:
            lex.add(PronEntry(word, phonemes, source, score))
        except CskitError as exc:
            raise ParseError(str(exc), lineno) from None
    return lex
