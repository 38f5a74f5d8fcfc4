"""Phoneme-string decoding through the lexicon and LM graphs.

This is the desk-scale stand-in for a full recognizer: the input is an
already-known phoneme sequence, and decoding is the shortest path through
acceptor(phonemes) o closure(L) o G.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .enrich import EnrichConfig, WordPair, enrich
from .fst import Wfst, accept_sequence, closure, compose, shortest_path

NO_PATH = "no_path"
OK = "ok"


@dataclass(frozen=True)
class DecodeResult:
    words: tuple[str, ...]
    total_cost: float
    status: str = OK


def decode(phonemes, l_fst: Wfst, g: Wfst, n: int = 1) -> list[DecodeResult]:
    """Up to ``n`` cheapest word sequences for the phoneme string.

    Distinct phoneme alignments yielding the same words collapse to the
    cheapest. A single ``no_path`` result is returned when the graphs
    accept nothing, which is exactly how an out-of-vocabulary foreign word
    surfaces against an unenriched configuration.
    """
    acc = accept_sequence(list(phonemes), l_fst.isyms)
    lattice = compose(compose(acc, closure(l_fst)), g)
    want = max(8 * n + 16, 64)
    while True:
        paths = shortest_path(lattice, want)
        if len(paths) < want or want > 4096:
            break
        want *= 2
    results: list[DecodeResult] = []
    seen = set()
    for p in paths:
        if p.osequence in seen:
            continue
        seen.add(p.osequence)
        results.append(DecodeResult(p.osequence, p.total_cost))
        if len(results) >= n:
            break
    if not results:
        return [DecodeResult((), math.inf, NO_PATH)]
    return results


def compare_scales(
    phonemes,
    l_fst: Wfst,
    g: Wfst,
    pairs: list[WordPair],
    scales: list[float],
    strict: bool = False,
) -> list[tuple[float, tuple[str, ...], float]]:
    """Best hypothesis per weight-copying scale.

    The LM is re-enriched at each scale and the same phoneme input decoded
    against it; rows are (scale, best word sequence, cost)."""
    rows = []
    for scale in scales:
        gp, _ = enrich(g, pairs, EnrichConfig(scale=scale, strict=strict))
        best = decode(phonemes, l_fst, gp, 1)[0]
        rows.append((scale, best.words, best.total_cost))
    return rows
