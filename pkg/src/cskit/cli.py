"""Command-line front end.

Every subcommand is path plumbing around one library operation; no
recognition logic lives here. Exit codes: 0 success, 1 validation error,
2 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import arpa, confnet, g2p, lexicon, pipeline, recognizer, scoring
from .enrich import EnrichConfig, enrich, format_report, load_pairs_tsv
from .errors import CskitError
from .fst import format_cost, load_fst, load_symbols, save_fst, SymbolTable

log = logging.getLogger("cskit")


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _write(path: str, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def _emit(text: str, out: str | None) -> None:
    if out:
        _write(out, text)
    else:
        sys.stdout.write(text)


def _cmd_arpa2fst(args) -> int:
    model = arpa.parse_arpa(_read(args.arpa))
    g = arpa.build_g(model)
    save_fst(g, args.out)
    log.info("wrote %s (%d states, %d arcs)", args.out, g.num_states, g.num_arcs())
    return 0


def _cmd_enrich(args) -> int:
    g = load_fst(args.g)
    pairs = load_pairs_tsv(_read(args.pairs))
    cfg = EnrichConfig(scale=args.scale, strict=args.strict)
    gp, report = enrich(g, pairs, cfg)
    save_fst(gp, args.out)
    if args.report:
        _write(args.report, format_report(report))
    log.info("added %d arcs for %d pairs", report.arcs_added(), len(pairs))
    return 0


def _cmd_cn_build(args) -> int:
    word = args.word or Path(args.infile).stem
    sequences = confnet.parse_sequences(_read(args.infile))
    if not sequences:
        raise CskitError(f"no phoneme sequences in {args.infile}")
    # sort inputs so reruns over reshuffled files agree
    cn = confnet.build_cn(sorted(sequences))
    lines = [
        f"{word}\t{rank}\t{score}\t{' '.join(phones)}"
        for rank, (phones, score) in enumerate(confnet.nbest(cn, args.nbest), 1)
    ]
    _emit("".join(line + "\n" for line in lines), args.out)
    if args.report:
        _write(args.report, confnet.cn_to_report(cn))
    return 0


def _cmd_merge_lex(args) -> int:
    merged = lexicon.merge([lexicon.load_tsv(_read(p)) for p in args.lex])
    _write(args.out, lexicon.save_tsv(merged))
    return 0


def _cmd_lex2fst(args) -> int:
    lex = lexicon.load_tsv(_read(args.lex))
    isyms = load_symbols(args.isyms) if args.isyms else SymbolTable()
    osyms = load_symbols(args.osyms) if args.osyms else SymbolTable()
    l_fst = lexicon.build_l_fst(lex, isyms, osyms, use_scores=args.use_scores)
    save_fst(l_fst, args.out)
    return 0


def _cmd_g2p_train(args) -> int:
    entries = list(lexicon.load_tsv(_read(args.lex)))
    if args.lex_b:
        entries += list(lexicon.load_tsv(_read(args.lex_b))) * args.weight_b
    result = g2p.align_lexicon(entries, args.max_g, args.max_p, args.em_iters)
    model = g2p.train(result.alignments, args.order)
    _write(args.out, g2p.save_model(model))
    if args.report:
        _write(
            args.report,
            "".join(f"{e.word}\t{' '.join(e.phonemes)}\tskipped\n" for e in result.skipped),
        )
    log.info(
        "trained order-%d model on %d alignments (%d skipped)",
        args.order, len(result.alignments), len(result.skipped),
    )
    return 0


def _cmd_g2p_apply(args) -> int:
    model = g2p.load_model(_read(args.model))
    lines = []
    for raw in _read(args.words).splitlines():
        word = raw.strip()
        if not word or word.startswith("#"):
            continue
        for rank, (phones, score) in enumerate(
            g2p.predict(model, word, args.nbest, args.beam), 1
        ):
            lines.append(f"{word}\t{rank}\t{repr(score)}\t{' '.join(phones)}")
    _emit("".join(line + "\n" for line in lines), args.out)
    return 0


def _read_words(path: str) -> list[str]:
    words = []
    for raw in _read(path).splitlines():
        word = raw.strip()
        if word and not word.startswith("#"):
            words.append(word)
    return words


def _harvest_outputs(result: pipeline.HarvestResult, args) -> int:
    _write(args.out, lexicon.save_tsv(result.lexicon))
    if args.report:
        lines = [f"{w}\t{result.segment_counts.get(w, 0)}\tno-segments\n" for w in result.missing]
        _write(args.report, "".join(lines))
    return 0


def _cmd_pdff(args) -> int:
    corpus = pipeline.load_corpus(_read(args.corpus), _read(args.segments))
    decoder = pipeline.ScriptedPhoneDecoder.from_script(_read(args.decoder))
    result = pipeline.pdff(
        corpus, set(_read_words(args.words)), pipeline.SpanForcedAligner(), decoder,
        args.nbest, args.jobs,
    )
    return _harvest_outputs(result, args)


def _cmd_pdfn(args) -> int:
    corpus = pipeline.load_corpus(_read(args.corpus), _read(args.segments))
    decoder = pipeline.ScriptedPhoneDecoder.from_script(_read(args.decoder))
    initial = lexicon.load_tsv(_read(args.initial_lex))
    if args.nl_lex:
        initial = lexicon.merge([lexicon.load_tsv(_read(args.nl_lex)), initial])
    result = pipeline.pdfn(
        corpus, initial, set(_read_words(args.words)), pipeline.SpanForcedAligner(), decoder,
        args.nbest, args.jobs,
    )
    return _harvest_outputs(result, args)


def _cmd_g2p_data_b(args) -> int:
    model = g2p.load_model(_read(args.model))
    decoder = pipeline.ScriptedPhoneDecoder.from_script(_read(args.decoder))
    scorer = pipeline.ScriptedAcousticScorer.from_script(
        _read(args.scorer), default=args.default_score
    )
    recordings = pipeline.recordings_by_word(pipeline.load_segment_refs(_read(args.recordings)))
    result = pipeline.build_g2p_data_b(
        _read_words(args.words), recordings, model, decoder, scorer, args.k, args.jobs
    )
    _write(args.out, lexicon.save_tsv(lexicon.Lexicon(result.entries)))
    if args.report:
        _write(args.report, "".join(f"{w}\tno-candidates\n" for w in result.missing))
    return 0


def _cmd_decode(args) -> int:
    l_fst = load_fst(args.l)
    g = load_fst(args.g)
    results = recognizer.decode(args.phonemes.split(), l_fst, g, args.nbest)
    if results[0].status == recognizer.NO_PATH:
        _emit("no_path\n", args.out)
        return 0
    lines = [
        f"{rank}\t{format_cost(r.total_cost)}\t{' '.join(r.words)}"
        for rank, r in enumerate(results, 1)
    ]
    _emit("".join(line + "\n" for line in lines), args.out)
    return 0


def _cmd_compare_scales(args) -> int:
    l_fst = load_fst(args.l)
    g = load_fst(args.g)
    pairs = load_pairs_tsv(_read(args.pairs))
    scales = [float(s) for s in args.scales.split(",") if s]
    if not scales:
        raise CskitError("no scales given")
    rows = recognizer.compare_scales(args.phonemes.split(), l_fst, g, pairs, scales)
    lines = [
        f"{_num(scale)}\t{format_cost(cost)}\t{' '.join(words) if words else 'no_path'}"
        for scale, words, cost in rows
    ]
    _emit("".join(line + "\n" for line in lines), args.out)
    return 0


def _num(value: float) -> str:
    return "%d" % value if float(value).is_integer() else repr(float(value))


def _cmd_score_wer(args) -> int:
    refs = _read(args.ref).splitlines()
    hyps = _read(args.hyp).splitlines()
    tok = lambda line: scoring.tokenize_cs(
        line, strip_punct=not args.keep_punct, fold_case=args.fold_case
    )
    per_line, total = scoring.score_corpus([tok(r) for r in refs], [tok(h) for h in hyps])
    lines = [
        f"{i}\t{r.substitutions}\t{r.insertions}\t{r.deletions}\t{r.ref_len}\t{r.percent()}"
        for i, r in enumerate(per_line, 1)
    ]
    lines.append(
        f"corpus\t{total.substitutions}\t{total.insertions}\t{total.deletions}"
        f"\t{total.ref_len}\t{total.percent()}"
    )
    _emit("".join(line + "\n" for line in lines), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cskit",
        description="Convert monolingual lexicon and LM resources into a "
        "code-switching recognizer configuration.",
    )
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")
    parser.add_argument("--seed", type=int, default=None,
                        help="seed for randomized utilities (none of the core "
                        "subcommands are randomized)")
    sub = parser.add_subparsers(dest="command", metavar="subcommand")

    p = sub.add_parser("arpa2fst", help="compile an ARPA model into an LM graph")
    p.add_argument("--arpa", required=True, help="ARPA text model (\\data\\ ... \\end\\)")
    p.add_argument("--out", required=True, help="graph path; .isyms/.osyms written alongside")
    p.set_defaults(func=_cmd_arpa2fst)

    p = sub.add_parser("enrich", help="add parallel foreign-word arcs to an LM graph")
    p.add_argument("--g", required=True)
    p.add_argument("--pairs", required=True, help="TSV: nl_word<TAB>fl_word")
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--strict", action="store_true", help="fail when a native word has no arcs")
    p.add_argument("--out", required=True)
    p.add_argument("--report", help="TSV: fl<TAB>nl<TAB>arcs_added<TAB>status")
    p.set_defaults(func=_cmd_enrich)

    p = sub.add_parser("cn-build", help="vote decoded phoneme sequences into pronunciations")
    p.add_argument("--in", dest="infile", required=True,
                   help="one space-separated phoneme sequence per line (e.g. 'OU W EI Z')")
    p.add_argument("--word", help="word label (default: input file stem)")
    p.add_argument("--nbest", type=int, default=4)
    p.add_argument("--out", help="TSV: word<TAB>rank<TAB>score<TAB>phonemes (default stdout)")
    p.add_argument("--report", help="slot report: '0: OU(3)' per line")
    p.set_defaults(func=_cmd_cn_build)

    p = sub.add_parser("merge-lex", help="union pronunciation lexicons, keeping provenance")
    p.add_argument("--lex", action="append", required=True, help="repeatable, ordered")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_merge_lex)

    p = sub.add_parser("lex2fst", help="compile a lexicon into a phoneme-to-word graph")
    p.add_argument("--lex", required=True, help="TSV: word<TAB>phonemes<TAB>source[<TAB>score]")
    p.add_argument("--isyms", help="phone table (symbol<TAB>id, or one symbol per line)")
    p.add_argument("--osyms", help="word table, e.g. the .isyms file of the LM graph")
    p.add_argument("--use-scores", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_lex2fst)

    p = sub.add_parser("g2p-train", help="train a graphone model from lexicon data")
    p.add_argument("--lex", required=True, help="standard training lexicon")
    p.add_argument("--lex-b", help="accented entries to add")
    p.add_argument("--weight-b", type=int, default=1, help="duplication weight for --lex-b")
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--em-iters", type=int, default=10)
    p.add_argument("--max-g", type=int, default=2)
    p.add_argument("--max-p", type=int, default=2)
    p.add_argument("--out", required=True)
    p.add_argument("--report", help="entries skipped as unalignable")
    p.set_defaults(func=_cmd_g2p_train)

    p = sub.add_parser("g2p-apply", help="predict pronunciations for written words")
    p.add_argument("--model", required=True)
    p.add_argument("--words", required=True, help="one word per line")
    p.add_argument("--nbest", type=int, default=4)
    p.add_argument("--beam", type=int, default=10)
    p.add_argument("--out", help="TSV: word<TAB>rank<TAB>score<TAB>phonemes (default stdout)")
    p.set_defaults(func=_cmd_g2p_apply)

    def harvest_common(p):
        p.add_argument("--corpus", required=True, help="TSV: utt_id<TAB>transcript")
        p.add_argument("--segments", required=True, help="TSV: utt_id<TAB>word<TAB>start<TAB>end")
        p.add_argument("--decoder", required=True,
                       help="TSV: utt:word:start:end<TAB>phoneme sequence")
        p.add_argument("--words", required=True, help="target foreign words, one per line")
        p.add_argument("--nbest", type=int, default=4)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--out", required=True)
        p.add_argument("--report", help="words with no usable segments")

    p = sub.add_parser("pdff", help="harvest pronunciations from foreign-speaker data")
    harvest_common(p)
    p.set_defaults(func=_cmd_pdff)

    p = sub.add_parser("pdfn", help="harvest accented pronunciations from native-speaker data")
    harvest_common(p)
    p.add_argument("--initial-lex", required=True,
                   help="lexicon covering the foreign words (e.g. the pdff output)")
    p.add_argument("--nl-lex", help="native lexicon merged in for alignment")
    p.set_defaults(func=_cmd_pdfn)

    p = sub.add_parser("g2p-data-b", help="assemble accented G2P training entries")
    p.add_argument("--words", required=True, help="one word per line, ordered")
    p.add_argument("--recordings", required=True, help="TSV: utt_id<TAB>word<TAB>start<TAB>end")
    p.add_argument("--model", required=True, help="G2P model trained on standard data")
    p.add_argument("--decoder", required=True)
    p.add_argument("--scorer", required=True,
                   help="TSV: utt:word:start:end<TAB>phonemes<TAB>score")
    p.add_argument("--default-score", type=float, default=None)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.set_defaults(func=_cmd_g2p_data_b)

    p = sub.add_parser("decode", help="decode a phoneme string to words")
    p.add_argument("--phonemes", required=True, help='e.g. "OU W EI Z"')
    p.add_argument("--l", required=True, help="lexicon graph")
    p.add_argument("--g", required=True, help="LM graph")
    p.add_argument("--nbest", type=int, default=1)
    p.add_argument("--out", help="TSV: rank<TAB>cost<TAB>words (default stdout)")
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("compare-scales", help="decode against the LM enriched at several scales")
    p.add_argument("--phonemes", required=True)
    p.add_argument("--l", required=True)
    p.add_argument("--g", required=True, help="unenriched LM graph")
    p.add_argument("--pairs", required=True)
    p.add_argument("--scales", required=True, help="comma separated, e.g. 0.667,1.0,1.5")
    p.add_argument("--out", help="TSV: scale<TAB>cost<TAB>words (default stdout)")
    p.set_defaults(func=_cmd_compare_scales)

    p = sub.add_parser("score-wer", help="code-switching WER over parallel text files")
    p.add_argument("--ref", required=True, help="reference text, one utterance per line")
    p.add_argument("--hyp", required=True, help="hypothesis text, line-aligned with --ref")
    p.add_argument("--keep-punct", action="store_true")
    p.add_argument("--fold-case", action="store_true")
    p.add_argument("--out", help="per-line and corpus TSV (default stdout)")
    p.set_defaults(func=_cmd_score_wer)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    if getattr(args, "func", None) is None:
        parser.print_usage(sys.stderr)
        return 1
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except CskitError as exc:
        print(f"cskit: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"cskit: i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
