"""Code-switching-aware word error rate.

Each Chinese character counts as its own word; contiguous runs of any
other non-space characters stay whole. Errors come from a minimal
Levenshtein alignment of reference and hypothesis token sequences.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import CskitError

TokenSequence = tuple[str, ...]

# CJK Unified Ideographs plus Extension A
_CJK_RANGES = ((0x4E00, 0x9FFF), (0x3400, 0x4DBF))

_PUNCTUATION = set(
    r"""!"#$%&'()*+,-./:;<=>?@[\]^_`{|}~"""
    "，。！？、；：“”‘’（）《》〈〉【】…—·「」『』"
)


def is_cjk(char: str) -> bool:
    code = ord(char)
    return any(lo <= code <= hi for lo, hi in _CJK_RANGES)


def tokenize_cs(text: str, strip_punct: bool = True, fold_case: bool = False) -> TokenSequence:
    """Split into scoring tokens: one per CJK character, one per run of
    other non-space characters. Punctuation is treated as whitespace unless
    ``strip_punct`` is off; ``fold_case`` lowercases non-CJK tokens."""
    tokens: list[str] = []
    run: list[str] = []

    def flush():
        if run:
            word = "".join(run)
            tokens.append(word.lower() if fold_case else word)
            run.clear()

    for ch in text:
        if ch.isspace() or (strip_punct and ch in _PUNCTUATION):
            flush()
        elif is_cjk(ch):
            flush()
            tokens.append(ch)
        else:
            run.append(ch)
    flush()
    return tuple(tokens)


@dataclass(frozen=True)
class WerResult:
    substitutions: int
    insertions: int
    deletions: int
    ref_len: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.insertions + self.deletions

    @property
    def wer(self) -> float:
        return self.errors / self.ref_len

    def percent(self) -> str:
        return f"{100.0 * self.wer:.1f}%"


def wer(reference: TokenSequence, hypothesis: TokenSequence) -> WerResult:
    """Substitution/insertion/deletion counts from one minimal alignment.

    Ties during backtrace prefer substitution over deletion over insertion.
    The rate can exceed 1 when the hypothesis is much longer than the
    reference.
    """
    ref, hyp = tuple(reference), tuple(hypothesis)
    if not ref:
        raise CskitError("reference must be nonempty")
    m, n = len(ref), len(hyp)
    dp = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(1, m + 1):
        dp[i][0] = i
    for j in range(1, n + 1):
        dp[0][j] = j
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            sub = 0 if ref[i - 1] == hyp[j - 1] else 1
            dp[i][j] = min(dp[i - 1][j - 1] + sub, dp[i - 1][j] + 1, dp[i][j - 1] + 1)

    subs = ins = dels = 0
    i, j = m, n
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            sub = 0 if ref[i - 1] == hyp[j - 1] else 1
            if dp[i][j] == dp[i - 1][j - 1] + sub:
                subs += sub
                i, j = i - 1, j - 1
                continue
        if i > 0 and dp[i][j] == dp[i - 1][j] + 1:
            dels += 1
            i -= 1
            continue
        ins += 1
        j -= 1
    return WerResult(subs, ins, dels, m)


def score_corpus(
    references: list[TokenSequence], hypotheses: list[TokenSequence]
) -> tuple[list[WerResult], WerResult]:
    """Per-line results plus the corpus aggregate (summed errors over
    summed reference length)."""
    if len(references) != len(hypotheses):
        raise CskitError(
            f"reference and hypothesis line counts differ: "
            f"{len(references)} vs {len(hypotheses)}"
        )
    per_line = [wer(r, h) for r, h in zip(references, hypotheses)]
    total = WerResult(
        sum(r.substitutions for r in per_line),
        sum(r.insertions for r in per_line),
        sum(r.deletions for r in per_line),
        sum(r.ref_len for r in per_line),
    )
    return per_line, total
