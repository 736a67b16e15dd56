import csv
import json

import pytest

from pseudopairs.chem import parse_smiles, randomize_smiles
from pseudopairs.cli import main
from pseudopairs.synthetic import distinct_molecules, synthetic_pairs


def write_corpus(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(("id", "smiles", "description"))
        w.writerows(rows)
    return path


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    write_corpus(d / "db.csv", synthetic_pairs(150, seed=3))
    (d / "inputs.txt").write_text("CCO\nc1ccccc1N\nCC(=O)O\n")
    return d


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_generate_mock_three_inputs(workspace, tmp_path, capsys):
    out = tmp_path / "gen.jsonl"
    code, stdout, _ = run(capsys, "generate", "--db", workspace / "db.csv", "--inputs", workspace / "inputs.txt",
                          "--out", out, "--mock-llm")
    assert code == 0
    assert len(out.read_text().splitlines()) == 3
    assert json.loads(stdout)["kept"] == 3


def test_generate_is_reproducible(workspace, tmp_path, capsys):
    outs = []
    for name, workers in (("a.jsonl", 1), ("b.jsonl", 4)):
        out = tmp_path / name
        assert run(capsys, "generate", "--db", workspace / "db.csv", "--inputs", workspace / "inputs.txt",
                   "--out", out, "--mock-llm", "--workers", workers)[0] == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_generate_respects_exclusions(workspace, tmp_path, capsys):
    excl = tmp_path / "excl.txt"
    excl.write_text(randomize_smiles(parse_smiles("c1ccccc1N"), 4) + "\n")
    out = tmp_path / "gen.jsonl"
    code, stdout, _ = run(capsys, "generate", "--db", workspace / "db.csv", "--inputs", workspace / "inputs.txt",
                          "--exclude", excl, "--out", out, "--mock-llm")
    assert code == 0 and json.loads(stdout)["skipped_excluded"] == 1
    assert len(out.read_text().splitlines()) == 2


def test_unknown_subcommand(capsys):
    assert run(capsys, "frobnicate")[0] == 1


def test_missing_subcommand(capsys):
    assert run(capsys)[0] == 1


def test_missing_required_path_is_usage_error(workspace, capsys):
    assert run(capsys, "generate", "--db", workspace / "db.csv", "--mock-llm")[0] == 1


def test_missing_file_is_data_error(tmp_path, capsys):
    assert run(capsys, "stats", "--corpus", tmp_path / "nope.csv")[0] == 2


def test_evaluate_length_mismatch(tmp_path, capsys):
    (tmp_path / "p.txt").write_text("CCO\nCCN\n")
    (tmp_path / "r.txt").write_text("CCO\n")
    assert run(capsys, "evaluate-generation", "--predictions", tmp_path / "p.txt",
               "--references", tmp_path / "r.txt")[0] == 2


def test_generate_without_key_is_remote_error(workspace, tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("OPENAI_API_KEY", raising=False)
    code, _, err = run(capsys, "generate", "--db", workspace / "db.csv", "--inputs", workspace / "inputs.txt",
                       "--out", tmp_path / "g.jsonl")
    assert code == 3 and "OPENAI_API_KEY" in err


def test_build_index_then_retrieve(workspace, tmp_path, capsys):
    idx = tmp_path / "db.idx"
    code, stdout, _ = run(capsys, "build-index", "--db", workspace / "db.csv", "--out", idx)
    assert code == 0 and json.loads(stdout)["records"] == 150
    code, stdout, _ = run(capsys, "retrieve", "--index", idx, "--k", 3, "CCO")
    hits = json.loads(stdout)
    assert code == 0 and len(hits) == 3
    sims = [h["similarity"] for h in hits]
    assert sims == sorted(sims, reverse=True)


def test_retrieve_tsv(workspace, capsys):
    code, stdout, _ = run(capsys, "retrieve", "--db", workspace / "db.csv", "--k", 2, "--format", "tsv", "CCO")
    lines = stdout.splitlines()
    assert code == 0 and len(lines) == 2 and lines[0].startswith("pair_id=")


def test_retrieve_bad_smiles(workspace, capsys):
    assert run(capsys, "retrieve", "--db", workspace / "db.csv", "C1CC")[0] == 2


def test_config_file_and_flag_precedence(workspace, tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"k": 5, "paths": {"db": str(workspace / "db.csv")}}))
    code, stdout, _ = run(capsys, "retrieve", "--config", cfg, "CCO")
    assert code == 0 and len(json.loads(stdout)) == 5
    code, stdout, _ = run(capsys, "retrieve", "--config", cfg, "--k", 2, "CCO")
    assert code == 0 and len(json.loads(stdout)) == 2


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"kk": 5}))
    assert run(capsys, "stats", "--config", cfg, "--corpus", "x.csv")[0] == 2


def test_filter_and_stats(workspace, tmp_path, capsys):
    rows = synthetic_pairs(150, seed=3)
    ref = tmp_path / "ref.txt"
    ref.write_text("\n".join(randomize_smiles(parse_smiles(s), 1) for _, s, _ in rows[:10]) + "\n")
    out = tmp_path / "filtered.jsonl"
    code, stdout, _ = run(capsys, "filter", "--corpus", workspace / "db.csv", "--reference", ref, "--out", out)
    assert code == 0 and json.loads(stdout) == {"kept": 140, "removed": 10, "unparseable": 0}
    code, stdout, _ = run(capsys, "stats", "--corpus", out)
    stats = json.loads(stdout)
    assert code == 0 and stats["pair_count"] == 140 and stats["mean_sentences"] > 1


def test_emit_adaptation(workspace, tmp_path, capsys):
    outs = []
    for name in ("a.tsv", "b.tsv"):
        out = tmp_path / name
        code, stdout, _ = run(capsys, "emit-adaptation", "--corpus", workspace / "db.csv", "--out", out, "--seed", 9)
        assert code == 0 and json.loads(stdout)["total"] == 300
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_quality_and_augmented(workspace, tmp_path, capsys):
    pseudo_rows = [(f"ps{i:04d}", s, d) for i, (_, s, d) in enumerate(synthetic_pairs(60, seed=11))]
    pseudo = write_corpus(tmp_path / "pseudo.csv", pseudo_rows)
    real = write_corpus(tmp_path / "real.csv", synthetic_pairs(30, seed=12, prefix="rl"))
    scores = tmp_path / "scores.jsonl"
    kde = tmp_path / "kde.csv"
    code, stdout, _ = run(capsys, "quality", "--db", workspace / "db.csv", "--corpus", pseudo,
                          "--out", scores, "--kde-out", kde, "--grid", 50)
    assert code == 0 and json.loads(stdout)["scored"] == 60
    real_scores = tmp_path / "real_scores.jsonl"
    assert run(capsys, "quality", "--db", workspace / "db.csv", "--corpus", real, "--out", real_scores)[0] == 0
    assert len(kde.read_text().splitlines()) == 51
    both = tmp_path / "all_scores.jsonl"
    both.write_text(scores.read_text() + real_scores.read_text())
    out = tmp_path / "aug.jsonl"
    code, stdout, _ = run(capsys, "emit-augmented", "--real", real, "--pseudo", pseudo, "--scores", both,
                          "--n-pseudo", 20, "--out", out)
    assert code == 0 and json.loads(stdout) == {"real": 30, "pseudo": 20, "total": 50}
    origins = [json.loads(x)["origin"] for x in out.read_text().splitlines()]
    assert origins.count("pseudo") == 20


def test_evaluate_caption(tmp_path, capsys):
    (tmp_path / "p.txt").write_text("the molecule is an acid\nit is a base\n")
    (tmp_path / "r.txt").write_text("the molecule is an acid\nit is an alcohol\n")
    report, per_pair = tmp_path / "rep.json", tmp_path / "pp.csv"
    code, stdout, _ = run(capsys, "evaluate-caption", "--predictions", tmp_path / "p.txt",
                          "--references", tmp_path / "r.txt", "--out", report, "--per-pair", per_pair)
    doc = json.loads(stdout)
    assert code == 0 and 0 < doc["rougeL_f"] < 1
    assert json.loads(report.read_text())["n_pairs"] == 2
    assert len(per_pair.read_text().splitlines()) == 3


def test_evaluate_generation(tmp_path, capsys):
    mols = [c for _, c in distinct_molecules(5, seed=1)]
    (tmp_path / "p.txt").write_text("\n".join(mols[:4] + ["C1CC"]) + "\n")
    (tmp_path / "r.txt").write_text("\n".join(mols) + "\n")
    code, stdout, _ = run(capsys, "evaluate-generation", "--predictions", tmp_path / "p.txt",
                          "--references", tmp_path / "r.txt")
    doc = json.loads(stdout)
    assert code == 0 and doc["accuracy"] == pytest.approx(0.8) and doc["validity"] == pytest.approx(0.8)


def test_generated_file_feeds_corpus_tools(workspace, tmp_path, capsys):
    gen = tmp_path / "gen.jsonl"
    inputs = tmp_path / "in.txt"
    inputs.write_text("CCO\nC1CC\nc1ccccc1N\n")
    assert run(capsys, "generate", "--db", workspace / "db.csv", "--inputs", inputs, "--out", gen, "--mock-llm")[0] == 0
    ref = tmp_path / "ref.txt"
    ref.write_text("OCC\n")
    out = tmp_path / "clean.jsonl"
    code, stdout, _ = run(capsys, "filter", "--corpus", gen, "--reference", ref, "--out", out)
    assert code == 0 and json.loads(stdout) == {"kept": 1, "removed": 1, "unparseable": 0}
    assert json.loads(out.read_text())["id"] == "pseudo0000002"
