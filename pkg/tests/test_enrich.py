import math
import random

import pytest

from cskit.enrich import EnrichConfig, WordPair, enrich, format_report, load_pairs_tsv
from cskit.errors import CskitError, ParseError
from oracles import enumerate_paths
from toys import hand_g, random_word_acceptor

PAIR = WordPair("篮球", "basketball")


class TestWordPair:
    def test_self_pair_rejected(self):
        with pytest.raises(CskitError):
            WordPair("x", "x")

    def test_reserved_words_rejected(self):
        for bad in ("<eps>", "<s>", "</s>"):
            with pytest.raises(CskitError):
                WordPair(bad, "x")
            with pytest.raises(CskitError):
                WordPair("x", bad)


class TestEnrichConfig:
    def test_scale_must_be_positive(self):
        with pytest.raises(CskitError):
            EnrichConfig(scale=0.0)
        with pytest.raises(CskitError):
            EnrichConfig(scale=-1.5)


class TestHandToyGraph:
    def test_sentence_path_exists_with_expected_labels(self):
        from cskit.fst import shortest_path

        paths = shortest_path(hand_g(), 2)
        assert paths[0].osequence == ("我们", "打", "篮球")
        assert paths[1].osequence == ("我们", "打", "足球")


class TestEnrich:
    def test_parallel_arc_copies_weight(self):
        g = hand_g()
        gp, report = enrich(g, [PAIR], EnrichConfig(scale=1.0))
        fl_id = gp.isyms.id_of("basketball")
        nl_id = gp.isyms.id_of("篮球")
        mirrors = [
            (src, a)
            for src, arcs in enumerate(gp.arcs)
            for a in arcs
            if a.olabel == fl_id
        ]
        originals = [
            (src, a)
            for src, arcs in enumerate(gp.arcs)
            for a in arcs
            if a.olabel == nl_id
        ]
        assert len(mirrors) == len(originals) == 1
        assert mirrors[0][0] == originals[0][0]
        assert mirrors[0][1].dst == originals[0][1].dst
        assert mirrors[0][1].cost == originals[0][1].cost
        assert report.rows == [("basketball", "篮球", 1, "ok")]

    def test_empty_pair_list_is_identity(self):
        g = hand_g()
        gp, report = enrich(g, [])
        assert gp.arcs == g.arcs
        assert gp.finals == g.finals
        assert gp.start == g.start
        assert report.rows == []

    def test_scale_cost_arithmetic(self):
        g = hand_g()
        gp, _ = enrich(g, [PAIR], EnrichConfig(scale=1.5))
        fl_id = gp.isyms.id_of("basketball")
        (arc,) = [a for arcs in gp.arcs for a in arcs if a.olabel == fl_id]
        assert arc.cost == pytest.approx(1.6094379124341003 - math.log(1.5), abs=1e-12)

    def test_originals_untouched(self):
        g = hand_g()
        gp, _ = enrich(g, [PAIR], EnrichConfig(scale=2.0))
        for src, arcs in enumerate(g.arcs):
            assert gp.arcs[src][: len(arcs)] == arcs
        assert gp.finals == g.finals

    def test_strict_mode_absent_word_raises(self):
        g = hand_g()
        with pytest.raises(CskitError, match="missing"):
            enrich(g, [WordPair("missing", "fl")], EnrichConfig(strict=True))

    def test_permissive_mode_reports_skip(self):
        g = hand_g()
        gp, report = enrich(g, [WordPair("missing", "fl")])
        assert report.rows == [("fl", "missing", 0, "skipped:nl-word-absent")]
        assert gp.arcs == g.arcs

    def test_double_enrichment_rejected(self):
        g = hand_g()
        gp, _ = enrich(g, [PAIR])
        with pytest.raises(CskitError, match="twice"):
            enrich(gp, [PAIR])

    def test_two_pairs_sharing_nl_word(self):
        g = hand_g()
        gp, report = enrich(g, [PAIR, WordPair("篮球", "bball")])
        assert [(r[0], r[2]) for r in report.rows] == [("basketball", 1), ("bball", 1)]

    def test_batch_equals_sequential(self):
        pairs = [PAIR, WordPair("打", "play"), WordPair("我们", "we")]
        g = hand_g()
        batch, _ = enrich(g, pairs, EnrichConfig(scale=1.5))
        step = g
        for p in pairs:
            step, _ = enrich(step, [p], EnrichConfig(scale=1.5))
        assert step.arcs == batch.arcs
        assert step.finals == batch.finals
        assert list(step.isyms) == list(batch.isyms)


class TestEnrichmentInvariants:
    def scales(self):
        return (0.667, 1.0, 1.5)

    def graphs(self):
        yield hand_g(), "篮球"
        rng = random.Random(59)
        for _ in range(25):
            g = random_word_acceptor(rng)
            yield g, "w1"

    def test_nl_paths_preserved_exactly(self):
        for g, nl in self.graphs():
            gp, _ = enrich(g, [WordPair(nl, "fl_word")], EnrichConfig(scale=1.5))
            fl_id = gp.isyms.id_of("fl_word") if "fl_word" in gp.isyms else None
            before = sorted((p[1], p[2]) for p in enumerate_paths(g, 8))
            after = sorted(
                (p[1], p[2])
                for p in enumerate_paths(gp, 8)
                if fl_id is None or fl_id not in p[1]
            )
            assert after == before

    def test_fl_path_mirror_cost_delta(self):
        for scale in self.scales():
            for g, nl in self.graphs():
                gp, report = enrich(g, [WordPair(nl, "fl_word")], EnrichConfig(scale=scale))
                if not report.rows or report.rows[0][3] != "ok":
                    continue
                nl_id = g.isyms.id_of(nl)
                fl_id = gp.isyms.id_of("fl_word")
                gp_paths = {
                    (p[1], round(p[2], 9)) for p in enumerate_paths(gp, 8)
                }
                for labels, _, cost, _, _ in (
                    (p[0], p[1], p[2], p[3], p[4]) for p in enumerate_paths(g, 8)
                ):
                    k = sum(1 for x in labels if x == nl_id)
                    if k == 0:
                        continue
                    mirrored = tuple(fl_id if x == nl_id else x for x in labels)
                    want = round(cost - k * math.log(scale), 9)
                    assert (mirrored, want) in gp_paths

    def test_arc_count_arithmetic(self):
        for g, nl in self.graphs():
            nl_id = g.isyms.id_of(nl)
            nl_arcs = sum(1 for arcs in g.arcs for a in arcs if a.olabel == nl_id)
            gp, _ = enrich(g, [WordPair(nl, "fl_word")])
            assert gp.num_arcs() == g.num_arcs() + nl_arcs

    def test_boost_monotone_in_scale(self):
        for g, nl in self.graphs():
            per_scale = []
            for scale in self.scales():
                gp, report = enrich(g, [WordPair(nl, "fl_word")], EnrichConfig(scale=scale))
                if not report.arcs_added():
                    break
                fl_id = gp.isyms.id_of("fl_word")
                per_scale.append(
                    [(s, i, a.cost) for s, arcs in enumerate(gp.arcs)
                     for i, a in enumerate(arcs) if a.olabel == fl_id]
                )
            for low, high in zip(per_scale, per_scale[1:]):
                assert all(lo[2] > hi[2] for lo, hi in zip(low, high))


class TestReportFormat:
    def test_ok_line(self):
        g = hand_g()
        _, report = enrich(g, [PAIR])
        assert format_report(report) == "basketball\t篮球\t1\tok\n"

    def test_skip_line(self):
        g = hand_g()
        _, report = enrich(g, [WordPair("nope", "fl")])
        assert format_report(report).endswith("0\tskipped:nl-word-absent\n")

    def test_shared_nl_word_counts_match(self):
        g = hand_g()
        _, report = enrich(g, [PAIR, WordPair("篮球", "hoops")])
        lines = format_report(report).splitlines()
        assert len(lines) == 2
        assert lines[0].split("\t")[2] == lines[1].split("\t")[2]


class TestPairsTsv:
    def test_load(self):
        pairs = load_pairs_tsv("# pairs\n篮球\tbasketball\n打\tplay\n")
        assert pairs == [WordPair("篮球", "basketball"), WordPair("打", "play")]

    def test_bad_line_reported(self):
        with pytest.raises(ParseError, match="line 1"):
            load_pairs_tsv("basketball\n")
