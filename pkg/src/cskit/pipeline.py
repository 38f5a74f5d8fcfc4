"""Pronunciation harvesting pipelines.

Audio is never touched here: segments are opaque references, and all
acoustic behavior sits behind three small interfaces (phone decoder,
forced aligner, acoustic scorer). Scripted mock implementations make every
pipeline fully deterministic and testable.

Two harvesting passes produce lexicon entries: one over foreign-speaker
recordings of foreign words (tag L2f), one over native-speaker recordings
located by forced alignment with an initial lexicon (tag L2n, capturing
accent). A third recipe assembles accented G2P training data by pooling
G2P output with phone-decoded recordings and keeping the acoustically
best-scoring candidates (tag L3ab).
"""

from __future__ import annotations

import threading
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .confnet import PhonemeSequence, build_cn, nbest
from .errors import CskitError, ParseError
from .g2p import G2pModel, predict
from .lexicon import Lexicon, PronEntry


def _fmt(value: float) -> str:
    if float(value).is_integer():
        return "%d" % value
    return repr(float(value))


@dataclass(frozen=True)
class SegmentRef:
    """Opaque handle for a stretch of audio containing one word."""

    utt_id: str
    word: str
    start: float
    end: float

    def key(self) -> str:
        return f"{self.utt_id}:{self.word}:{_fmt(self.start)}:{_fmt(self.end)}"


@dataclass
class Utterance:
    id: str
    transcript: tuple[str, ...]
    segments: tuple[tuple[str, float, float], ...] | None = None

    def __post_init__(self):
        self.transcript = tuple(self.transcript)
        if self.segments is not None:
            self.segments = tuple(self.segments)
            last_end = None
            for word, start, end in self.segments:
                if start > end:
                    raise CskitError(f"segment for {word!r} ends before it starts")
                if last_end is not None and start < last_end:
                    raise CskitError(f"segments overlap at {word!r} in {self.id}")
                last_end = end


class PhoneDecoder(ABC):
    """Maps a segment to a phoneme sequence in the native phone set."""

    supports_parallel_calls = True

    @abstractmethod
    def decode_segment(self, segment: SegmentRef) -> PhonemeSequence: ...


class ForcedAligner(ABC):
    """Locates per-word time spans for a transcript."""

    supports_parallel_calls = True

    @abstractmethod
    def align(
        self, utterance: Utterance, transcript: tuple[str, ...], lexicon: Lexicon | None
    ) -> tuple[list[SegmentRef], list[str]]:
        """Returns (aligned segments, words that could not be aligned)."""


class AcousticScorer(ABC):
    """Scores how well a candidate pronunciation fits a segment (higher
    is better)."""

    supports_parallel_calls = True

    @abstractmethod
    def score(self, segment: SegmentRef, phonemes: PhonemeSequence) -> float: ...


class ScriptedPhoneDecoder(PhoneDecoder):
    """Deterministic decoder backed by a segment-key -> phonemes table."""

    def __init__(self, table: dict[str, PhonemeSequence]):
        self.table = dict(table)

    @classmethod
    def from_script(cls, text: str) -> "ScriptedPhoneDecoder":
        table = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise ParseError("expected 'segment_ref<TAB>phoneme sequence'", lineno)
            table[fields[0]] = tuple(fields[1].split())
        return cls(table)

    def decode_segment(self, segment: SegmentRef) -> PhonemeSequence:
        try:
            return self.table[segment.key()]
        except KeyError:
            raise CskitError(f"decoder script has no entry for segment {segment.key()!r}") from None


class SpanForcedAligner(ForcedAligner):
    """Mock alignment from the utterance's own segment annotations.

    A transcript word aligns when the utterance provides a span for that
    occurrence and the lexicon (if any) knows the word.
    """

    def align(self, utterance, transcript, lexicon):
        spans: dict[str, list[tuple[float, float]]] = {}
        for word, start, end in utterance.segments or ():
            spans.setdefault(word, []).append((start, end))
        aligned, unalignable = [], []
        for word in transcript:
            covered = lexicon is None or word in lexicon
            if covered and spans.get(word):
                start, end = spans[word].pop(0)
                aligned.append(SegmentRef(utterance.id, word, start, end))
            else:
                unalignable.append(word)
        return aligned, unalignable


class ScriptedAcousticScorer(AcousticScorer):
    """Deterministic scorer keyed on (segment key, phoneme string)."""

    def __init__(self, table: dict[tuple[str, str], float], default: float | None = None):
        self.table = dict(table)
        self.default = default

    @classmethod
    def from_script(cls, text: str, default: float | None = None) -> "ScriptedAcousticScorer":
        table = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise ParseError("expected 'segment_ref<TAB>phonemes<TAB>score'", lineno)
            table[(fields[0], fields[1])] = float(fields[2])
        return cls(table, default)

    def score(self, segment, phonemes):
        key = (segment.key(), " ".join(phonemes))
        if key in self.table:
            return self.table[key]
        if self.default is not None:
            return self.default
        raise CskitError(f"scorer script has no entry for {key!r}")


class _SerializedCalls:
    """Adapter forcing one call at a time into a non-thread-safe backend."""

    def __init__(self, inner):
        self._inner = inner
        self._lock = threading.Lock()

    def __getattr__(self, name):
        attr = getattr(self._inner, name)
        if not callable(attr):
            return attr
        def locked(*args, **kwargs):
            with self._lock:
                return attr(*args, **kwargs)
        return locked


def _maybe_serialize(backend, jobs):
    if jobs > 1 and not backend.supports_parallel_calls:
        return _SerializedCalls(backend)
    return backend


@dataclass
class HarvestResult:
    lexicon: Lexicon
    missing: list[str] = field(default_factory=list)
    segment_counts: dict[str, int] = field(default_factory=dict)


def _harvest(corpus, target_words, aligner, decoder, nbest_n, source, lexicon, jobs):
    if not target_words:
        raise CskitError("no target words given")
    by_word: dict[str, list[SegmentRef]] = {w: [] for w in sorted(target_words)}
    for utt in corpus:
        aligned, _ = aligner.align(utt, utt.transcript, lexicon)
        for seg in aligned:
            if seg.word in by_word:
                by_word[seg.word].append(seg)

    decoder = _maybe_serialize(decoder, jobs)

    def harvest_word(word):
        segments = by_word[word]
        if not segments:
            return word, None
        cn = build_cn([decoder.decode_segment(s) for s in segments])
        entries = [
            PronEntry(word, phones, source, float(score))
            for phones, score in nbest(cn, nbest_n)
        ]
        return word, entries

    words = list(by_word)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = dict(pool.map(harvest_word, words))
    else:
        outcomes = dict(map(harvest_word, words))

    result = HarvestResult(Lexicon())
    for word in words:
        entries = outcomes[word]
        result.segment_counts[word] = len(by_word[word])
        if entries is None:
            result.missing.append(word)
            continue
        for e in entries:
            result.lexicon.add(e)
    return result


def pdff(
    fl_corpus: list[Utterance],
    target_words: set[str],
    aligner: ForcedAligner,
    decoder: PhoneDecoder,
    nbest_n: int = 4,
    jobs: int = 1,
) -> HarvestResult:
    """Harvest pronunciations of foreign words from foreign-speaker data.

    The foreign recognizer force-aligns its own training utterances (here:
    the aligner with no lexicon constraint), the native phone decoder
    transcribes each located segment, and vote-ranked confusion-network
    pronunciations become L2f entries.
    """
    return _harvest(fl_corpus, target_words, aligner, decoder, nbest_n, "L2f", None, jobs)


def pdfn(
    nl_corpus: list[Utterance],
    initial_lexicon: Lexicon,
    target_words: set[str],
    aligner: ForcedAligner,
    decoder: PhoneDecoder,
    nbest_n: int = 4,
    jobs: int = 1,
) -> HarvestResult:
    """Harvest accented pronunciations from native-speaker data.

    Foreign words in native utterances can only be located once an initial
    lexicon (typically the L2f harvest merged with the native lexicon)
    covers them; located segments are then decoded and vote-ranked exactly
    as in the foreign-speaker pass, tagged L2n.
    """
    return _harvest(
        nl_corpus, target_words, aligner, decoder, nbest_n, "L2n", initial_lexicon, jobs
    )


@dataclass
class DataBResult:
    entries: list[PronEntry]
    missing: list[str] = field(default_factory=list)


def build_g2p_data_b(
    words: list[str],
    recordings: dict[str, list[SegmentRef]],
    g2p_model: G2pModel,
    decoder: PhoneDecoder,
    scorer: AcousticScorer,
    k: int = 4,
    jobs: int = 1,
) -> DataBResult:
    """Accented G2P training data: per word, pool ``k`` spelled-out
    pronunciations from the baseline G2P model with ``k`` decoded from its
    recordings, rescore the pool acoustically, and keep the top ``k``.

    Duplicates collapse before rescoring. Words with recordings are ranked
    by mean acoustic score across their segments; words with no recordings
    keep the G2P ranking. Words yielding no candidate at all are reported.
    """
    decoder = _maybe_serialize(decoder, jobs)
    scorer = _maybe_serialize(scorer, jobs)

    def process(word):
        try:
            spelled = predict(g2p_model, word, k)
        except CskitError:
            spelled = []
        segments = list(recordings.get(word, ()))
        decoded = []
        if segments:
            cn = build_cn([decoder.decode_segment(s) for s in segments])
            decoded = nbest(cn, k)
        candidates: dict[PhonemeSequence, float] = {}
        for phones, score in list(spelled) + [(p, float(s)) for p, s in decoded]:
            candidates.setdefault(phones, score)
        if not candidates:
            return None
        if segments:
            rescored = {
                phones: sum(scorer.score(s, phones) for s in segments) / len(segments)
                for phones in candidates
            }
        else:
            rescored = candidates
        ranked = sorted(rescored.items(), key=lambda kv: (-kv[1], kv[0]))
        return [PronEntry(word, phones, "L3ab", score) for phones, score in ranked[:k]]

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(process, words))
    else:
        outcomes = list(map(process, words))

    result = DataBResult([])
    for word, entries in zip(words, outcomes):
        if entries is None:
            result.missing.append(word)
        else:
            result.entries.extend(entries)
    return result


def load_corpus(corpus_text: str, segments_text: str | None = None) -> list[Utterance]:
    """Corpus manifest: ``utt_id<TAB>transcript``; optional segment manifest:
    ``utt_id<TAB>word<TAB>start<TAB>end``."""
    spans: dict[str, list[tuple[str, float, float]]] = {}
    if segments_text is not None:
        for ref in load_segment_refs(segments_text):
            spans.setdefault(ref.utt_id, []).append((ref.word, ref.start, ref.end))
    utterances = []
    for lineno, raw in enumerate(corpus_text.splitlines(), 1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise ParseError("expected 'utt_id<TAB>transcript'", lineno)
        utt_id, transcript = fields
        try:
            utterances.append(
                Utterance(utt_id, tuple(transcript.split()), tuple(spans.get(utt_id, ())) or None)
            )
        except CskitError as exc:
            raise ParseError(str(exc), lineno) from None
    return utterances


def load_segment_refs(text: str) -> list[SegmentRef]:
    refs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise ParseError("expected 'utt_id<TAB>word<TAB>start<TAB>end'", lineno)
        try:
            refs.append(SegmentRef(fields[0], fields[1], float(fields[2]), float(fields[3])))
        except ValueError:
            raise ParseError(f"bad time stamp in {line!r}", lineno) from None
    return refs


def recordings_by_word(refs: list[SegmentRef]) -> dict[str, list[SegmentRef]]:
    out: dict[str, list[SegmentRef]] = {}
    for ref in refs:
        out.setdefault(ref.word, []).append(ref)
    return out
