import csv
import json
import random

import pytest

from pseudopairs.chem import canonicalize
from pseudopairs.dataset_ops import (
    C2S,
    S2C,
    Corpus,
    corpus_stats,
    description_stats,
    emit_adaptation_corpus,
    emit_augmented_set,
    filter_overlap,
    iter_descriptions,
    load_corpus,
    save_corpus,
)
from pseudopairs.errors import DataError
from pseudopairs.quality import QualityScore
from pseudopairs.retrieval import AnnotatedPair

ROWS = [
    ("m1", "OCC", "The molecule is ethanol. It is a solvent."),
    ("m2", "c1ccccc1O", "The molecule is phenol."),
    ("m3", "CC(=O)O", "Acetic acid, with\ttabs and\nnewlines."),
    ("m4", "C1CCCCC1", "Cyclohexane! Very nonpolar?"),
    ("m5", "N", "Ammonia."),
]


def write_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "smiles", "description"])
        w.writerows(rows)


def write_jsonl(path, rows):
    path.write_text("".join(json.dumps(dict(zip(("id", "smiles", "description"), r))) + "\n" for r in rows))


def corpus_of(n, prefix="p"):
    from pseudopairs.synthetic import synthetic_pairs

    return Corpus([AnnotatedPair(f"{prefix}{i}", s, d) for i, (_, s, d) in enumerate(synthetic_pairs(n, seed=3))])


class TestLoad:
    def test_csv(self, tmp_path):
        write_csv(tmp_path / "c.csv", ROWS)
        c = load_corpus(tmp_path / "c.csv")
        assert len(c) == 5 and c.pairs[0].canonical_smiles == canonicalize("CCO")

    def test_bad_row_diagnostic(self, tmp_path):
        write_csv(tmp_path / "c.csv", ROWS + [("m6", "C1CC", "broken")])
        c = load_corpus(tmp_path / "c.csv")
        assert len(c) == 5 and len(c.diagnostics) == 1 and "unclosed_ring" in c.diagnostics[0]

    def test_formats_equivalent(self, tmp_path):
        write_csv(tmp_path / "c.csv", ROWS)
        write_jsonl(tmp_path / "c.jsonl", ROWS)
        assert load_corpus(tmp_path / "c.csv").pairs == load_corpus(tmp_path / "c.jsonl").pairs

    def test_missing_column(self, tmp_path):
        (tmp_path / "c.csv").write_text("id,smiles\n1,CCO\n")
        with pytest.raises(DataError):
            load_corpus(tmp_path / "c.csv")

    def test_unreadable(self, tmp_path):
        with pytest.raises(DataError):
            load_corpus(tmp_path / "missing.csv")

    def test_duplicate_ids(self, tmp_path):
        write_csv(tmp_path / "c.csv", ROWS + [("m1", "C", "dup")])
        with pytest.raises(DataError):
            load_corpus(tmp_path / "c.csv")

    @pytest.mark.parametrize("suffix", [".csv", ".jsonl"])
    def test_save_round_trip(self, tmp_path, suffix):
        write_csv(tmp_path / "c.csv", ROWS)
        c = load_corpus(tmp_path / "c.csv")
        save_corpus(c, tmp_path / f"out{suffix}")
        assert load_corpus(tmp_path / f"out{suffix}").pairs == c.pairs


class TestFilter:
    def test_canonical_overlap(self, tmp_path):
        write_csv(tmp_path / "c.csv", ROWS)
        c = load_corpus(tmp_path / "c.csv")
        filtered, removed = filter_overlap(c, [["CCO"], ["Oc1ccccc1"]])
        assert removed == 2 and {p.id for p in filtered.pairs} == {"m3", "m4", "m5"}

    def test_disjoint(self, tmp_path):
        write_csv(tmp_path / "c.csv", ROWS)
        _, removed = filter_overlap(load_corpus(tmp_path / "c.csv"), [["CCCCCCCC"]])
        assert removed == 0

    def test_idempotent(self, tmp_path):
        write_csv(tmp_path / "c.csv", ROWS)
        once, _ = filter_overlap(load_corpus(tmp_path / "c.csv"), [["N", "CC(O)=O"]])
        twice, removed = filter_overlap(once, [["N", "CC(O)=O"]])
        assert removed == 0 and twice.pairs == once.pairs

    def test_unparseable_raw_fallback(self):
        c = Corpus([AnnotatedPair("x", "C1CC", "odd"), AnnotatedPair("y", "CCO", "fine")])
        filtered, removed = filter_overlap(c, [["C1CC"]])
        assert removed == 1 and [p.id for p in filtered.pairs] == ["y"]
        assert any("raw string" in d for d in filtered.diagnostics)


class TestStats:
    def test_hand_count(self):
        s = corpus_stats(Corpus([AnnotatedPair("a", "C", "The molecule is an acid. It is red.")]))
        assert (s.pair_count, s.mean_sentences, s.mean_words) == (1, 2, 8)
        assert s.mean_tokens == 10

    def test_means(self, tmp_path):
        write_csv(tmp_path / "c.csv", ROWS)
        s = corpus_stats(load_corpus(tmp_path / "c.csv"))
        assert s.mean_sentences == pytest.approx((2 + 1 + 1 + 2 + 1) / 5)

    def test_empty(self):
        with pytest.raises(DataError):
            corpus_stats(Corpus([]))


class TestEmitAdaptation:
    def test_counts_and_prefixes(self, tmp_path):
        c = corpus_of(50)
        counts = emit_adaptation_corpus(c, tmp_path / "a.tsv", seed=1)
        out = (tmp_path / "a.tsv").read_text().splitlines()
        assert counts["total"] == len(out) == 100
        assert sum(x.startswith(S2C) for x in out) == 50 == sum(x.startswith(C2S) for x in out)
        assert all(x.count("\t") == 1 for x in out)

    def test_single_pair_both_directions(self, tmp_path):
        c = Corpus([AnnotatedPair("a", "CC(=O)O", "Acetic acid, with\ttabs and\nnewlines.")])
        emit_adaptation_corpus(c, tmp_path / "a.tsv", seed=0)
        out = sorted((tmp_path / "a.tsv").read_text().splitlines())
        assert out == [
            f"{C2S} Acetic acid, with tabs and newlines.\tCC(=O)O",
            f"{S2C} CC(=O)O\tAcetic acid, with tabs and newlines.",
        ]

    def test_seeded(self, tmp_path):
        c = corpus_of(30)
        emit_adaptation_corpus(c, tmp_path / "a.tsv", seed=4)
        emit_adaptation_corpus(c, tmp_path / "b.tsv", seed=4)
        emit_adaptation_corpus(c, tmp_path / "c.tsv", seed=5)
        assert (tmp_path / "a.tsv").read_bytes() == (tmp_path / "b.tsv").read_bytes()
        assert (tmp_path / "a.tsv").read_bytes() != (tmp_path / "c.tsv").read_bytes()

    def test_empty(self, tmp_path):
        with pytest.raises(DataError):
            emit_adaptation_corpus(Corpus([]), tmp_path / "a.tsv")


class TestEmitAugmented:
    def setup_scores(self, real, pseudo):
        scores = {p.id: QualityScore(0.5 + 0.001 * i) for i, p in enumerate(real.pairs)}
        scores.update({p.id: QualityScore(0.001 * i) for i, p in enumerate(pseudo.pairs)})
        return scores

    def test_zero_pseudo_is_real(self, tmp_path):
        real, pseudo = corpus_of(20, "r"), corpus_of(30, "q")
        counts = emit_augmented_set(real, pseudo, 0, {}, tmp_path / "aug.jsonl")
        rows = [json.loads(x) for x in (tmp_path / "aug.jsonl").read_text().splitlines()]
        assert counts["total"] == 20 and [r["id"] for r in rows] == [p.id for p in real.pairs]
        assert all(r["origin"] == "real" for r in rows)

    def test_full_size_train_split(self, tmp_path):
        rng = random.Random(0)
        real = Corpus([AnnotatedPair(f"r{i}", "CCO", "An alcohol.") for i in range(26_407)])
        pseudo = Corpus([AnnotatedPair(f"q{i}", "CCN", "An amine.") for i in range(5_000)])
        scores = {p.id: QualityScore(rng.random()) for p in real.pairs + pseudo.pairs}
        counts = emit_augmented_set(real, pseudo, 2_000, scores, tmp_path / "aug.jsonl")
        assert counts == {"real": 26_407, "pseudo": 2_000, "total": 28_407}
        assert len((tmp_path / "aug.jsonl").read_text().splitlines()) == 28_407

    def test_sizes_and_real_preserved(self, tmp_path):
        real, pseudo = corpus_of(40, "r"), corpus_of(60, "q")
        counts = emit_augmented_set(real, pseudo, 25, self.setup_scores(real, pseudo), tmp_path / "aug.jsonl", seed=2)
        rows = [json.loads(x) for x in (tmp_path / "aug.jsonl").read_text().splitlines()]
        assert counts == {"real": 40, "pseudo": 25, "total": 65}
        real_rows = [r for r in rows if r["origin"] == "real"]
        assert [r["id"] for r in real_rows] == [p.id for p in real.pairs]
        assert len({r["id"] for r in rows}) == 65
        assert load_corpus(tmp_path / "aug.jsonl").pairs[:40] == real.pairs

    def test_insufficient_supply(self, tmp_path):
        with pytest.raises(DataError):
            emit_augmented_set(corpus_of(5, "r"), corpus_of(3, "q"), 4, {}, tmp_path / "x.jsonl")

    def test_missing_score(self, tmp_path):
        with pytest.raises(DataError):
            emit_augmented_set(corpus_of(5, "r"), corpus_of(5, "q"), 2, {}, tmp_path / "x.jsonl")

    def test_id_collision(self, tmp_path):
        real, pseudo = corpus_of(5, "p"), corpus_of(5, "p")
        scores = {p.id: 0.5 for p in real.pairs}
        with pytest.raises(DataError):
            emit_augmented_set(real, pseudo, 5, scores, tmp_path / "x.jsonl")


def test_iter_descriptions_streams_text_column(tmp_path):
    p = tmp_path / "big.tsv"
    p.write_text("cid\tdescription\n1\tThe molecule is an acid. It is sour.\n2\tIt is a base.\n")
    assert description_stats(iter_descriptions(p)).mean_sentences == 1.5
    j = tmp_path / "big.jsonl"
    j.write_text('{"description": "One. Two."}\n\n{"description": "Three."}\n')
    assert list(iter_descriptions(j)) == ["One. Two.", "Three."]
    with pytest.raises(DataError):
        list(iter_descriptions(p, column="caption"))
