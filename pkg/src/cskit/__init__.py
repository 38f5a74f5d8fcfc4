"""Code-switching recognizer toolkit.

Builds a code-switching speech recognizer configuration out of existing
monolingual resources: foreign-word pronunciations are harvested through
confusion-network voting over phone-decoder output and a joint-sequence
G2P model, and the monolingual LM graph gains parallel foreign-word arcs
that borrow their native counterparts' statistics.
"""

from .arpa import ArpaModel, NgramEntry, build_g, parse_arpa, score_sentence, serialize_arpa
from .confnet import ConfusionNetwork, build_cn, cn_to_report, nbest, parse_report
from .enrich import EnrichConfig, EnrichReport, WordPair, enrich
from .errors import CskitError, ConfigError, ParseError
from .fst import Arc, Path, SymbolTable, Wfst, accept_sequence, closure, compose, shortest_path
from .g2p import G2pModel, Graphone, align_lexicon, predict, train
from .lexicon import Lexicon, PronEntry, build_l_fst, load_tsv, merge, save_tsv
from .pipeline import (
    AcousticScorer,
    ForcedAligner,
    PhoneDecoder,
    SegmentRef,
    Utterance,
    build_g2p_data_b,
    pdff,
    pdfn,
)
from .recognizer import DecodeResult, compare_scales, decode
from .scoring import WerResult, score_corpus, tokenize_cs, wer

__version__ = "0.1.0"
