"""Turn a monolingual LM graph into a code-switching one.

For each translated word pair, every arc carrying the native word gets a
parallel arc with the foreign word between the same states, copying the
native cost. A scale factor multiplies the copied probability mass, so in
cost space the new arc costs ``original - ln(scale)``: scales above one
boost the foreign word, scales below one suppress it, and the native side
of the graph is never touched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import CskitError, ParseError
from .fst import Arc, Wfst

_RESERVED = ("<eps>", "<s>", "</s>")


@dataclass(frozen=True)
class WordPair:
    nl_word: str
    fl_word: str

    def __post_init__(self):
        if not self.nl_word or not self.fl_word:
            raise CskitError("word pair fields must be nonempty")
        if self.nl_word == self.fl_word:
            raise CskitError(f"pair maps {self.nl_word!r} to itself")
        for w in (self.nl_word, self.fl_word):
            if w in _RESERVED:
                raise CskitError(f"reserved symbol in word pair: {w!r}")


@dataclass
class EnrichConfig:
    scale: float = 1.0
    strict: bool = False

    def __post_init__(self):
        if not self.scale > 0:
            raise CskitError(f"scale must be positive, got {self.scale}")


@dataclass
class EnrichReport:
    rows: list[tuple[str, str, int, str]] = field(default_factory=list)

    def arcs_added(self) -> int:
        return sum(count for _, _, count, _ in self.rows)


def enrich(g: Wfst, pairs: list[WordPair], cfg: EnrichConfig | None = None) -> tuple[Wfst, EnrichReport]:
    """Insert parallel foreign-word arcs into the acceptor ``g``.

    Pairs are applied in order against the growing graph, so a batch run
    equals the same pairs applied one at a time. Re-adding an arc that
    already exists (same states and foreign word) is rejected to prevent
    accidental double enrichment.
    """
    cfg = cfg if cfg is not None else EnrichConfig()
    if g.isyms != g.osyms or not g.is_acceptor():
        raise CskitError("enrich expects an acceptor (matching input/output labels)")
    syms = g.isyms.copy()
    out = Wfst(syms, syms)
    for _ in range(g.num_states):
        out.add_state()
    out.set_start(g.start)
    for state, cost in g.finals.items():
        out.set_final(state, cost)
    for src, arcs in enumerate(g.arcs):
        for arc in arcs:
            out.add_arc(src, arc)

    bonus = -math.log(cfg.scale)
    report = EnrichReport()
    for pair in pairs:
        if pair.nl_word not in syms:
            if cfg.strict:
                raise CskitError(
                    f"native word {pair.nl_word!r} of pair ({pair.nl_word}, {pair.fl_word}) "
                    "is absent from the graph"
                )
            report.rows.append((pair.fl_word, pair.nl_word, 0, "skipped:nl-word-absent"))
            continue
        nl_id = syms.id_of(pair.nl_word)
        fl_id = syms.add(pair.fl_word)
        existing = {
            (src, arc.dst)
            for src, arcs in enumerate(out.arcs)
            for arc in arcs
            if arc.olabel == fl_id
        }
        additions = []
        for src, arcs in enumerate(out.arcs):
            for arc in arcs:
                if arc.olabel == nl_id:
                    if (src, arc.dst) in existing:
                        raise CskitError(
                            f"arc {src}->{arc.dst} already carries {pair.fl_word!r}; "
                            "refusing to enrich twice"
                        )
                    additions.append((src, Arc(arc.dst, fl_id, fl_id, arc.cost + bonus)))
        if not additions:
            if cfg.strict:
                raise CskitError(
                    f"native word {pair.nl_word!r} of pair ({pair.nl_word}, {pair.fl_word}) "
                    "labels no arc"
                )
            report.rows.append((pair.fl_word, pair.nl_word, 0, "skipped:nl-word-absent"))
            continue
        for src, arc in additions:
            out.add_arc(src, arc)
        report.rows.append((pair.fl_word, pair.nl_word, len(additions), "ok"))
    return out, report


def format_report(report: EnrichReport) -> str:
    return "".join(
        f"{fl}\t{nl}\t{count}\t{status}\n" for fl, nl, count, status in report.rows
    )


def load_pairs_tsv(text: str) -> list[WordPair]:
    """``nl_word<TAB>fl_word`` per line; ``#`` starts a comment line."""
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise ParseError(f"expected 'nl_word<TAB>fl_word', got {line!r}", lineno)
        try:
            pairs.append(WordPair(fields[0], fields[1]))
        except CskitError as exc:
            raise ParseError(str(exc), lineno) from None
    return pairs
