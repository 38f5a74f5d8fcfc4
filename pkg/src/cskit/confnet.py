"""Phoneme confusion networks: ROVER-style merging of decoded phoneme
sequences for one word, and vote-ranked extraction of pronunciations.

A network is an ordered list of slots; each slot maps a phoneme (or ""
for the epsilon entry, meaning "this input skipped the slot") to a vote
count. After merging k sequences every slot's votes sum to k.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from .errors import CskitError, ParseError
from .fst import EPSILON

PhonemeSequence = tuple[str, ...]

EPS_VOTE = ""


@dataclass
class ConfusionNetwork:
    slots: list[dict[str, int]]
    total_inputs: int


def _check_sequence(seq) -> PhonemeSequence:
    seq = tuple(seq)
    if not seq:
        raise CskitError("phoneme sequences must be nonempty")
    for p in seq:
        if not p or p == EPSILON:
            raise CskitError(f"invalid phoneme token: {p!r}")
    return seq


def build_cn(sequences: list[PhonemeSequence]) -> ConfusionNetwork:
    """Merge sequences in input order.

    The first sequence opens one slot per phoneme; every later sequence is
    aligned slot-by-slot with edit-distance DP (matching an existing vote is
    free, substitution / insertion / deletion cost 1; ties prefer
    match-or-substitute, then deletion, then insertion) and its votes are
    added. Insertions open new slots in which all earlier inputs count as
    epsilon.
    """
    if not sequences:
        raise CskitError("need at least one phoneme sequence")
    seqs = [_check_sequence(s) for s in sequences]
    slots: list[dict[str, int]] = [{p: 1} for p in seqs[0]]
    for merged, seq in enumerate(seqs[1:], start=1):
        slots = _merge(slots, seq, merged)
    return ConfusionNetwork(slots, len(seqs))


def _merge(slots, seq, merged_count):
    n, m = len(seq), len(slots)
    INF = float("inf")
    dp = [[INF] * (m + 1) for _ in range(n + 1)]
    dp[0][0] = 0
    for j in range(1, m + 1):
        dp[0][j] = j
    for i in range(1, n + 1):
        dp[i][0] = i
        for j in range(m + 1):
            if j > 0:
                sub = 0 if seq[i - 1] in slots[j - 1] else 1
                dp[i][j] = min(dp[i][j], dp[i - 1][j - 1] + sub)
                dp[i][j] = min(dp[i][j], dp[i][j - 1] + 1)
            dp[i][j] = min(dp[i][j], dp[i - 1][j] + 1)

    ops = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            sub = 0 if seq[i - 1] in slots[j - 1] else 1
            if dp[i][j] == dp[i - 1][j - 1] + sub:
                ops.append("align")
                i, j = i - 1, j - 1
                continue
        if j > 0 and dp[i][j] == dp[i][j - 1] + 1:
            ops.append("skip")
            j -= 1
            continue
        ops.append("new")
        i -= 1
    ops.reverse()

    out: list[dict[str, int]] = []
    i = j = 0
    for op in ops:
        if op == "align":
            slot = slots[j]
            slot[seq[i]] = slot.get(seq[i], 0) + 1
            out.append(slot)
            i, j = i + 1, j + 1
        elif op == "skip":
            slot = slots[j]
            slot[EPS_VOTE] = slot.get(EPS_VOTE, 0) + 1
            out.append(slot)
            j += 1
        else:
            out.append({seq[i]: 1, EPS_VOTE: merged_count})
            i += 1
    return out


def nbest(cn: ConfusionNetwork, n: int) -> list[tuple[PhonemeSequence, int]]:
    """Top ``n`` pronunciations by per-slot vote sum.

    Every way of picking one entry per slot is a candidate; epsilon picks
    drop out of the emitted sequence but their votes still count. Candidates
    that emit the same sequence collapse to the best-scoring one, the
    all-epsilon pick is excluded, and equal scores order lexicographically.
    """
    if n < 1:
        raise CskitError(f"nbest: n must be >= 1, got {n}")
    per_slot = [sorted(slot.items(), key=lambda kv: (-kv[1], kv[0])) for slot in cn.slots]
    base = tuple(0 for _ in per_slot)
    if not base:
        return []

    def score(vec):
        return sum(per_slot[k][v][1] for k, v in enumerate(vec))

    heap = [(-score(base), base)]
    visited = {base}
    results: list[tuple[PhonemeSequence, int]] = []
    emitted: set[PhonemeSequence] = set()
    while heap and len(results) < n:
        plateau_score = -heap[0][0]
        plateau_seqs: set[PhonemeSequence] = set()
        while heap and -heap[0][0] == plateau_score:
            _, vec = heapq.heappop(heap)
            seq = tuple(
                per_slot[k][v][0] for k, v in enumerate(vec) if per_slot[k][v][0] != EPS_VOTE
            )
            if seq:
                plateau_seqs.add(seq)
            for k in range(len(vec)):
                if vec[k] + 1 < len(per_slot[k]):
                    child = vec[:k] + (vec[k] + 1,) + vec[k + 1:]
                    if child not in visited:
                        visited.add(child)
                        heapq.heappush(heap, (-score(child), child))
        for seq in sorted(plateau_seqs):
            if seq not in emitted:
                emitted.add(seq)
                results.append((seq, plateau_score))
                if len(results) >= n:
                    break
    return results


def cn_to_report(cn: ConfusionNetwork) -> str:
    """One line per slot: ``index: phoneme(count) ...``, highest votes
    first. The epsilon entry renders as ``<eps>``."""
    lines = []
    for idx, slot in enumerate(cn.slots):
        entries = sorted(slot.items(), key=lambda kv: (-kv[1], kv[0] or EPSILON))
        rendered = " ".join(
            f"{sym or EPSILON}({count})" for sym, count in entries
        )
        lines.append(f"{idx}: {rendered}")
    return "".join(line + "\n" for line in lines)


def parse_report(text: str) -> ConfusionNetwork:
    slots = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        head, _, body = line.partition(":")
        try:
            idx = int(head)
        except ValueError:
            raise ParseError(f"bad slot index {head!r}", lineno) from None
        if idx != len(slots):
            raise ParseError(f"slot index {idx} out of order", lineno)
        slot: dict[str, int] = {}
        for item in body.split():
            if not item.endswith(")") or "(" not in item:
                raise ParseError(f"bad vote entry {item!r}", lineno)
            sym, _, count = item[:-1].rpartition("(")
            try:
                votes = int(count)
            except ValueError:
                raise ParseError(f"bad vote count in {item!r}", lineno) from None
            slot[EPS_VOTE if sym == EPSILON else sym] = votes
        if not slot:
            raise ParseError("empty slot", lineno)
        slots.append(slot)
    if not slots:
        raise ParseError("empty confusion network report")
    totals = {sum(slot.values()) for slot in slots}
    if len(totals) != 1:
        raise ParseError(f"slot vote totals disagree: {sorted(totals)}")
    return ConfusionNetwork(slots, totals.pop())


def parse_sequences(text: str) -> list[PhonemeSequence]:
    """One space-separated phoneme sequence per nonempty line."""
    seqs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            seqs.append(_check_sequence(line.split()))
        except CskitError as exc:
            raise ParseError(str(exc), lineno) from None
    return seqs
