"""ARPA backoff n-gram models: parsing, scoring, and conversion to a
word-level WFST (the "G graph").

ARPA stores log10 probabilities; graph costs are negative natural logs.
The base change happens exactly once, inside :func:`build_g`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import CskitError, ParseError
from .fst import EPSILON_ID, Arc, SymbolTable, Wfst

BOS = "<s>"
EOS = "</s>"

# log10 values at or below this carry no probability mass (the usual
# "-99" convention); they keep an entry parseable without producing an arc
NO_MASS = -99.0

_LN10 = math.log(10.0)


@dataclass(frozen=True)
class NgramEntry:
    tokens: tuple[str, ...]
    logprob: float
    backoff: float | None = None

    @property
    def has_mass(self) -> bool:
        return self.logprob > NO_MASS


class ArpaModel:
    """Parsed backoff model: per-order entry maps keyed by token tuple."""

    def __init__(self, orders: list[dict[tuple[str, ...], NgramEntry]]):
        if not orders:
            raise CskitError("model needs at least a unigram section")
        self.orders = orders
        self.max_order = len(orders)
        self.vocabulary = {tokens[0] for tokens in orders[0]}
        self._validate()

    def _validate(self) -> None:
        for marker in (BOS, EOS):
            if marker not in self.vocabulary:
                raise CskitError(f"unigram section must contain {marker}")
        for n in range(1, self.max_order):
            for tokens in self.orders[n]:
                if tokens[:-1] not in self.orders[n - 1]:
                    raise CskitError(
                        f"{n + 1}-gram {' '.join(tokens)!r} has no {n}-gram prefix"
                    )

    def entry(self, tokens: tuple[str, ...]) -> NgramEntry | None:
        if not 1 <= len(tokens) <= self.max_order:
            return None
        return self.orders[len(tokens) - 1].get(tokens)

    def counts(self) -> list[int]:
        return [len(o) for o in self.orders]


def parse_arpa(text: str) -> ArpaModel:
    lines = text.splitlines()
    declared: list[int] = []
    pos = 0

    def next_content(i):
        while i < len(lines) and not lines[i].strip():
            i += 1
        return i

    pos = next_content(pos)
    if pos >= len(lines) or lines[pos].strip() != "\\data\\":
        raise ParseError("expected \\data\\ header", pos + 1)
    pos += 1
    while True:
        pos = next_content(pos)
        if pos >= len(lines):
            raise ParseError("unterminated \\data\\ section", len(lines))
        line = lines[pos].strip()
        if not line.startswith("ngram "):
            break
        try:
            order_part, count_part = line[len("ngram "):].split("=")
            order, count = int(order_part), int(count_part)
        except ValueError:
            raise ParseError(f"bad count declaration: {line!r}", pos + 1) from None
        if order != len(declared) + 1:
            raise ParseError(f"count declarations must cover orders 1..N in order", pos + 1)
        declared.append(count)
        pos += 1
    if not declared:
        raise ParseError("\\data\\ section declares no orders", pos + 1)

    orders: list[dict[tuple[str, ...], NgramEntry]] = [dict() for _ in declared]
    for n in range(1, len(declared) + 1):
        pos = next_content(pos)
        header = f"\\{n}-grams:"
        if pos >= len(lines) or lines[pos].strip() != header:
            raise ParseError(f"expected section header {header}", pos + 1)
        pos += 1
        section = orders[n - 1]
        while True:
            pos = next_content(pos)
            if pos >= len(lines):
                raise ParseError("unterminated n-gram section", len(lines))
            line = lines[pos].strip()
            if line.startswith("\\"):
                break
            fields = line.split()
            if len(fields) == n + 1:
                backoff = None
            elif len(fields) == n + 2:
                if n == len(declared):
                    raise ParseError("highest order cannot carry a backoff weight", pos + 1)
                try:
                    backoff = float(fields[-1])
                except ValueError:
                    raise ParseError(f"bad backoff weight {fields[-1]!r}", pos + 1) from None
            else:
                raise ParseError(
                    f"expected {n + 1} or {n + 2} fields for a {n}-gram, got {len(fields)}",
                    pos + 1,
                )
            try:
                logprob = float(fields[0])
            except ValueError:
                raise ParseError(f"bad log probability {fields[0]!r}", pos + 1) from None
            if logprob > 0:
                raise ParseError(f"log probability must be <= 0, got {fields[0]}", pos + 1)
            tokens = tuple(fields[1 : n + 1])
            if tokens in section:
                raise ParseError(f"duplicate {n}-gram {' '.join(tokens)!r}", pos + 1)
            section[tokens] = NgramEntry(tokens, logprob, backoff)
            pos += 1
        if len(section) != declared[n - 1]:
            raise ParseError(
                f"\\data\\ declares {declared[n - 1]} {n}-grams but section has {len(section)}",
                pos + 1,
            )
    if pos >= len(lines) or lines[pos].strip() != "\\end\\":
        raise ParseError("expected \\end\\", pos + 1)
    try:
        return ArpaModel(orders)
    except CskitError as exc:
        raise ParseError(str(exc)) from None


def _fmt(value: float) -> str:
    if float(value).is_integer():
        return "%d" % value
    return repr(float(value))


def serialize_arpa(model: ArpaModel) -> str:
    out = ["\\data\\"]
    for n, count in enumerate(model.counts(), 1):
        out.append(f"ngram {n}={count}")
    for n, section in enumerate(model.orders, 1):
        out.append("")
        out.append(f"\\{n}-grams:")
        for entry in section.values():
            line = f"{_fmt(entry.logprob)}\t{' '.join(entry.tokens)}"
            if entry.backoff is not None:
                line += f"\t{_fmt(entry.backoff)}"
            out.append(line)
    out.append("")
    out.append("\\end\\")
    return "".join(line + "\n" for line in out)


def score_sentence(
    model: ArpaModel, words: list[str], strict: bool = True, unk: str = "<unk>"
) -> float:
    """Katz-backoff log10 probability of ``<s> words </s>``.

    Unknown words raise in strict mode; otherwise they are scored as
    ``unk``, which must itself be a unigram.
    """
    if not words:
        raise CskitError("cannot score an empty sentence")
    resolved = []
    for w in words:
        if w in model.vocabulary:
            resolved.append(w)
        elif strict:
            raise CskitError(f"out-of-vocabulary word: {w!r}")
        elif unk in model.vocabulary:
            resolved.append(unk)
        else:
            raise CskitError(f"out-of-vocabulary word {w!r} and no {unk!r} unigram")

    def cond_logprob(word: str, history: tuple[str, ...]) -> float:
        entry = model.entry(history + (word,))
        if entry is not None and entry.has_mass:
            return entry.logprob
        if not history:
            return -math.inf
        h_entry = model.entry(history)
        bow = h_entry.backoff if h_entry is not None and h_entry.backoff is not None else 0.0
        return bow + cond_logprob(word, history[1:])

    total = 0.0
    history: tuple[str, ...] = (BOS,)
    for w in resolved + [EOS]:
        total += cond_logprob(w, history)
        history = (history + (w,))[-(model.max_order - 1):] if model.max_order > 1 else ()
    return total


def build_g(model: ArpaModel) -> Wfst:
    """Standard backoff construction of the LM acceptor.

    One state per n-gram history; a word arc per entry carrying mass (the
    sentence markers are structural: ``<s>`` entries only shape the start
    state and ``</s>`` entries become final costs); an epsilon arc per
    listed backoff weight.
    """
    syms = SymbolTable()
    for tokens in model.orders[0]:
        syms.add(tokens[0])
    g = Wfst(syms, syms)

    states: dict[tuple[str, ...], int] = {(): g.add_state()}
    for n in range(0, model.max_order - 1):
        for tokens in model.orders[n]:
            if tokens[-1] != EOS:
                states[tokens] = g.add_state()

    def suffix_state(tokens: tuple[str, ...]) -> int:
        while tokens not in states:
            tokens = tokens[1:]
        return states[tokens]

    horizon = model.max_order - 1
    for section in model.orders:
        for tokens, entry in section.items():
            word = tokens[-1]
            if word == EOS:
                if entry.has_mass:
                    g.set_final(states[tokens[:-1]], -entry.logprob * _LN10)
                continue
            if word == BOS:
                continue
            if not entry.has_mass:
                continue
            src = states[tokens[:-1]]
            dst = suffix_state(tokens[-horizon:] if horizon else ())
            word_id = syms.id_of(word)
            g.add_arc(src, Arc(dst, word_id, word_id, -entry.logprob * _LN10))
    for n in range(0, model.max_order - 1):
        for tokens, entry in model.orders[n].items():
            if entry.backoff is None or tokens[-1] == EOS:
                continue
            g.add_arc(
                states[tokens],
                Arc(suffix_state(tokens[1:]), EPSILON_ID, EPSILON_ID, -entry.backoff * _LN10),
            )
    g.set_start(states[(BOS,)] if model.max_order > 1 else states[()])
    return g
