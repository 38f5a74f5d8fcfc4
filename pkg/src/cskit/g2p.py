"""Joint-sequence grapheme-to-phoneme conversion.

Words and pronunciations are segmented into graphones, joint units pairing
a short grapheme chunk with a short phoneme chunk. An EM pass over the
monotone segmentation lattice learns unit probabilities and emits one
Viterbi segmentation per entry; an n-gram model with Witten-Bell smoothing
over those graphone sequences then drives beam-search prediction of new
pronunciations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .confnet import PhonemeSequence
from .errors import CskitError, ParseError
from .lexicon import PronEntry


@dataclass(frozen=True)
class Graphone:
    """Up to two graphemes paired with up to two phonemes, not both empty."""

    graphemes: str
    phonemes: tuple[str, ...]

    def __post_init__(self):
        if not (0 <= len(self.graphemes) <= 2 and 0 <= len(self.phonemes) <= 2):
            raise CskitError(f"graphone sides must have size 0..2: {self}")
        if not self.graphemes and not self.phonemes:
            raise CskitError("graphone cannot be empty on both sides")


def _moves(max_g: int, max_p: int):
    """Admissible segmentation steps: a unit may span two graphemes or two
    phonemes but not both at once, so shared small units carry alignment
    evidence instead of whole-chunk memorization."""
    return [
        (dg, dp)
        for dg in range(1, max_g + 1)
        for dp in range(1, max_p + 1)
        if min(dg, dp) == 1
    ]


def _lattice_edges(word: str, phones: PhonemeSequence, moves):
    n, m = len(word), len(phones)
    edges: dict[tuple[int, int], list] = {}
    for i in range(n + 1):
        for j in range(m + 1):
            out = []
            for dg, dp in moves:
                if i + dg <= n and j + dp <= m:
                    out.append((i + dg, j + dp, Graphone(word[i : i + dg], phones[j : j + dp])))
            edges[(i, j)] = out
    return edges


def _reachable(word: str, phones: PhonemeSequence, edges) -> bool:
    n, m = len(word), len(phones)
    ok = {(0, 0)}
    for i in range(n + 1):
        for j in range(m + 1):
            if (i, j) not in ok:
                continue
            for ni, nj, _ in edges[(i, j)]:
                ok.add((ni, nj))
    return (n, m) in ok


@dataclass
class AlignmentResult:
    alignments: list[tuple[Graphone, ...]]
    skipped: list[PronEntry]
    log_likelihoods: list[float]
    probs: dict[Graphone, float] = field(default_factory=dict)


def align_lexicon(
    entries: list[PronEntry],
    max_g: int = 2,
    max_p: int = 2,
    em_iters: int = 10,
) -> AlignmentResult:
    """EM over monotone segmentations of (word, pronunciation) pairs.

    Each iteration accumulates expected graphone counts by forward-backward
    over every pair's segmentation lattice and renormalizes; the recorded
    log-likelihood sequence is nondecreasing. Pairs with no admissible
    segmentation are skipped and reported. The returned alignments are the
    final model's Viterbi segmentations, in entry order.
    """
    if not entries:
        raise CskitError("need at least one entry to align")
    if em_iters < 1:
        raise CskitError(f"em_iters must be >= 1, got {em_iters}")
    moves = _moves(max_g, max_p)

    usable = []
    skipped = []
    inventory: dict[Graphone, float] = {}
    for entry in entries:
        edges = _lattice_edges(entry.word, entry.phonemes, moves)
        if not _reachable(entry.word, entry.phonemes, edges):
            skipped.append(entry)
            continue
        usable.append((entry, edges))
        for outs in edges.values():
            for _, _, unit in outs:
                inventory.setdefault(unit, 0.0)
    if not usable:
        raise CskitError("no entry admits a segmentation under the size bounds")

    probs = {unit: 1.0 / len(inventory) for unit in inventory}
    log_likelihoods = []
    for _ in range(em_iters):
        counts = dict.fromkeys(inventory, 0.0)
        ll = 0.0
        for entry, edges in usable:
            n, m = len(entry.word), len(entry.phonemes)
            nodes = [(i, j) for i in range(n + 1) for j in range(m + 1)]
            alpha = dict.fromkeys(nodes, 0.0)
            alpha[(0, 0)] = 1.0
            for node in nodes:
                a = alpha[node]
                if a == 0.0:
                    continue
                for ni, nj, unit in edges[node]:
                    alpha[(ni, nj)] += a * probs[unit]
            z = alpha[(n, m)]
            if z <= 0.0:
                raise CskitError(
                    f"segmentation mass vanished for {entry.word!r}; "
                    "EM cannot continue"
                )
            ll += math.log(z)
            beta = dict.fromkeys(nodes, 0.0)
            beta[(n, m)] = 1.0
            for node in reversed(nodes):
                for ni, nj, unit in edges[node]:
                    beta[node] += probs[unit] * beta[(ni, nj)]
            for node in nodes:
                a = alpha[node]
                if a == 0.0:
                    continue
                for ni, nj, unit in edges[node]:
                    counts[unit] += a * probs[unit] * beta[(ni, nj)] / z
        log_likelihoods.append(ll)
        total = sum(counts.values())
        probs = {unit: c / total for unit, c in counts.items()}

    alignments = []
    for entry, edges in usable:
        alignments.append(_viterbi(entry, edges, probs))
    return AlignmentResult(alignments, skipped, log_likelihoods, probs)


def _viterbi(entry, edges, probs):
    n, m = len(entry.word), len(entry.phonemes)
    best: dict[tuple[int, int], tuple[float, tuple]] = {(0, 0): (0.0, ())}
    for i in range(n + 1):
        for j in range(m + 1):
            state = best.get((i, j))
            if state is None:
                continue
            score, trail = state
            for ni, nj, unit in edges[(i, j)]:
                p = probs[unit]
                if p <= 0.0:
                    continue
                cand = (score + math.log(p), trail + (unit,))
                cur = best.get((ni, nj))
                if cur is None or cand[0] > cur[0] + 1e-15:
                    best[(ni, nj)] = cand
    if (n, m) not in best:
        raise CskitError(f"no surviving segmentation for {entry.word!r}")
    return best[(n, m)][1]


class G2pModel:
    """Witten-Bell smoothed n-gram model over graphone sequences.

    Counts are normalized by the number of training alignments, so a
    uniformly duplicated corpus trains the identical model while skewed
    duplication (weighting one data source) shifts probabilities.
    """

    def __init__(self, inventory: list[Graphone], order: int, num_alignments: int):
        if order < 1:
            raise CskitError(f"order must be >= 1, got {order}")
        self.inventory = list(inventory)
        self.order = order
        self.num_alignments = num_alignments
        self.ids = {g: i for i, g in enumerate(self.inventory)}
        self.eos = len(self.inventory)
        self.bos = len(self.inventory) + 1
        # context tuple -> successor id -> raw count
        self.counts: dict[tuple[int, ...], dict[int, int]] = {}

    def _observe(self, ctx: tuple[int, ...], w: int) -> None:
        slot = self.counts.setdefault(ctx, {})
        slot[w] = slot.get(w, 0) + 1

    def grapheme_alphabet(self) -> set[str]:
        return {ch for g in self.inventory for ch in g.graphemes}

    def prob(self, w: int, history: tuple[int, ...]) -> float:
        """P(next unit | history), smoothed; sums to one over units + EOS."""
        history = history[-(self.order - 1):] if self.order > 1 else ()
        scale = 1.0 / self.num_alignments
        uniform = 1.0 / (len(self.inventory) + 1)

        def level(h):
            slot = self.counts.get(h)
            if not slot:
                return level(h[1:]) if h else uniform
            total = sum(slot.values()) * scale
            types = len(slot)
            direct = slot.get(w, 0) * scale
            lower = level(h[1:]) if h else uniform
            return (direct + types * lower) / (total + types)

        return level(history)

    def sequence_logprob(self, units: tuple[int, ...]) -> float:
        history = (self.bos,) * max(self.order - 1, 0)
        total = 0.0
        for u in tuple(units) + (self.eos,):
            p = self.prob(u, history)
            if p <= 0.0:
                return -math.inf
            total += math.log(p)
            history = (history + (u,))[-(self.order - 1):] if self.order > 1 else ()
        return total


def train(alignments: list[tuple[Graphone, ...]], order: int = 3) -> G2pModel:
    """Count n-grams of every order over the graphone sequences, with
    sentence boundaries."""
    if not alignments:
        raise CskitError("need at least one alignment to train")
    if order < 1:
        raise CskitError(f"order must be >= 1, got {order}")
    inventory: dict[Graphone, None] = {}
    for seq in alignments:
        for unit in seq:
            inventory.setdefault(unit)
    model = G2pModel(list(inventory), order, len(alignments))
    for seq in alignments:
        tokens = [model.ids[u] for u in seq] + [model.eos]
        history = (model.bos,) * (order - 1)
        for tok in tokens:
            for k in range(order):
                model._observe(history[len(history) - k:], tok)
            history = (history + (tok,))[-(order - 1):] if order > 1 else ()
    return model


def _logsumexp(values):
    top = max(values)
    return top + math.log(sum(math.exp(v - top) for v in values))


def predict(
    model: G2pModel, word: str, n: int = 4, beam: int = 10
) -> list[tuple[PhonemeSequence, float]]:
    """Up to ``n`` pronunciations with log posterior scores.

    Beam search extends graphone hypotheses left to right over the word,
    keeping the best ``beam`` per consumed-prefix length; survivors are
    deduplicated by phoneme sequence and scored relative to one another,
    so a lone candidate scores log 1. With a beam at least as wide as the
    full hypothesis space the search is exhaustive.
    """
    if n < 1:
        raise CskitError(f"predict: n must be >= 1, got {n}")
    if beam < 1:
        raise CskitError(f"predict: beam must be >= 1, got {beam}")
    alphabet = model.grapheme_alphabet()
    for ch in word:
        if ch not in alphabet:
            raise CskitError(f"character {ch!r} is outside the model's grapheme alphabet")
    by_chunk: dict[str, list[int]] = {}
    for gid, unit in enumerate(model.inventory):
        if unit.graphemes:
            by_chunk.setdefault(unit.graphemes, []).append(gid)

    h0 = (model.bos,) * max(model.order - 1, 0)
    # hypotheses per consumed length: (history, phonemes) -> logprob
    layers: list[dict[tuple, float]] = [dict() for _ in range(len(word) + 1)]
    layers[0][(h0, ())] = 0.0
    for pos in range(len(word) + 1):
        if not layers[pos]:
            continue
        ranked = sorted(layers[pos].items(), key=lambda kv: (-kv[1], kv[0][1], kv[0][0]))
        layers[pos] = dict(ranked[:beam])
        if pos == len(word):
            break
        for (history, phones), logp in layers[pos].items():
            for width in (1, 2):
                chunk = word[pos : pos + width]
                if len(chunk) < width:
                    continue
                for gid in by_chunk.get(chunk, ()):
                    p = model.prob(gid, history)
                    if p <= 0.0:
                        continue
                    nh = (history + (gid,))[-(model.order - 1):] if model.order > 1 else ()
                    key = (nh, phones + model.inventory[gid].phonemes)
                    cand = logp + math.log(p)
                    if layers[pos + width].get(key, -math.inf) < cand:
                        layers[pos + width][key] = cand

    complete: dict[PhonemeSequence, float] = {}
    for (history, phones), logp in layers[len(word)].items():
        p_end = model.prob(model.eos, history)
        if p_end <= 0.0:
            continue
        joint = logp + math.log(p_end)
        if complete.get(phones, -math.inf) < joint:
            complete[phones] = joint
    if not complete:
        return []
    z = _logsumexp(list(complete.values()))
    ranked = sorted(complete.items(), key=lambda kv: (-kv[1], kv[0]))
    return [(phones, joint - z) for phones, joint in ranked[:n]]


MODEL_MAGIC = "cskit-g2p 1"


def save_model(model: G2pModel) -> str:
    lines = [MODEL_MAGIC, f"order {model.order}", f"alignments {model.num_alignments}"]
    for unit in model.inventory:
        lines.append(f"unit\t{unit.graphemes}\t{' '.join(unit.phonemes)}")
    for ctx in sorted(model.counts, key=lambda c: (len(c), c)):
        slot = model.counts[ctx]
        ctx_txt = " ".join(str(t) for t in ctx) if ctx else "-"
        for w in sorted(slot):
            lines.append(f"ngram\t{ctx_txt}\t{w}\t{slot[w]}")
    return "".join(line + "\n" for line in lines)


def load_model(text: str) -> G2pModel:
    lines = text.splitlines()
    if not lines or lines[0] != MODEL_MAGIC:
        raise ParseError(f"not a g2p model file (expected {MODEL_MAGIC!r})", 1)
    try:
        order = int(lines[1].split()[1])
        num_alignments = int(lines[2].split()[1])
    except (IndexError, ValueError):
        raise ParseError("bad model header", 2) from None
    inventory = []
    counts: list[tuple[tuple[int, ...], int, int]] = []
    for lineno, line in enumerate(lines[3:], 4):
        if not line.strip():
            continue
        fields = line.split("\t")
        if fields[0] == "unit" and len(fields) == 3:
            phones = tuple(fields[2].split())
            try:
                inventory.append(Graphone(fields[1], phones))
            except CskitError as exc:
                raise ParseError(str(exc), lineno) from None
        elif fields[0] == "ngram" and len(fields) == 4:
            ctx = () if fields[1] == "-" else tuple(int(t) for t in fields[1].split())
            counts.append((ctx, int(fields[2]), int(fields[3])))
        else:
            raise ParseError(f"unrecognized model line: {line!r}", lineno)
    model = G2pModel(inventory, order, num_alignments)
    for ctx, w, count in counts:
        model.counts.setdefault(ctx, {})[w] = count
    return model
