"""CLI tests: file handling, output formats, exit codes, determinism."""

import json
import math

import numpy as np
import pytest

from inkbridge import cli
from inkbridge.errors import NumericalFailure


def run(capsys, argv):
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


def manifest_file(tmp_path, n_pairs=3, n_unpaired=14):
    items = []
    for i in range(n_pairs):
        items.append({"id": f"pa{i:02d}", "modality": "painting", "pair_id": f"po{i:02d}"})
        items.append({"id": f"po{i:02d}", "modality": "poem", "pair_id": f"pa{i:02d}"})
    items += [{"id": f"u{i:02d}", "modality": "poem"} for i in range(n_unpaired)]
    return write(tmp_path / "manifest.json", json.dumps({"items": items}))


def probs_file(tmp_path):
    lines = [
        json.dumps({"id": "a", "chars": ["山", "水"], "logp": [-1.0, -1.0], "group_id": "g1"}),
        json.dumps({"id": "b", "chars": ["风"], "logp": [-3.0], "group_id": "g1"}),
        json.dumps({"id": "c", "chars": ["月"], "logp": [-2.0], "group_id": "g2"}),
    ]
    return write(tmp_path / "probs.jsonl", "\n".join(lines) + "\n")


def pairs_file(tmp_path):
    lines = [
        json.dumps({"id": "p1", "candidate": "白日依山尽", "references": ["白日依山尽"]}),
        json.dumps({"id": "p2", "candidate": "山水风", "references": ["山水月"]}),
    ]
    return write(tmp_path / "pairs.jsonl", "\n".join(lines) + "\n", )


def features_file(tmp_path, name, rows, offset=0.0, seed=0, dim=6):
    rng = np.random.default_rng(seed)
    lines = ["id," + ",".join(f"f{j}" for j in range(dim))]
    for i in range(rows):
        values = rng.normal(size=dim) + offset
        lines.append(f"{name}{i:03d}," + ",".join(repr(float(v)) for v in values))
    return write(tmp_path / f"{name}.csv", "\n".join(lines) + "\n")


def test_split_outputs_and_determinism(tmp_path, capsys):
    manifest = manifest_file(tmp_path, n_pairs=0, n_unpaired=100)
    argv = ["split", "--manifest", manifest, "--ratios", "0.7,0.15,0.15", "--seed", "42"]
    code, out1, err = run(capsys, argv)
    assert code == 0 and err == ""
    payload = json.loads(out1)
    counts = {"train": 0, "val": 0, "test": 0}
    for split in payload["assignment"].values():
        counts[split] += 1
    assert counts == {"train": 70, "val": 15, "test": 15}
    code, out2, _ = run(capsys, argv)
    assert out2 == out1

    code, csv_out, _ = run(capsys, argv + ["--format", "csv"])
    assert csv_out.startswith("id,split\n")
    assert len(csv_out.strip().splitlines()) == 101


def test_split_out_file(tmp_path, capsys):
    manifest = manifest_file(tmp_path)
    out = tmp_path / "split.json"
    code, stdout, _ = run(capsys, ["split", "--manifest", manifest, "--out", str(out)])
    assert code == 0 and stdout == ""
    assert json.loads(out.read_text())["seed"] == 0


def test_schedule_pipeline(tmp_path, capsys):
    manifest = manifest_file(tmp_path, n_pairs=4, n_unpaired=40)
    split_path = tmp_path / "split.json"
    code, _, _ = run(
        capsys,
        ["split", "--manifest", manifest, "--ratios", "0.8,0.1,0.1",
         "--seed", "1", "--out", str(split_path)],
    )
    assert code == 0
    code, out, _ = run(
        capsys,
        ["schedule", "--manifest", manifest, "--split", str(split_path),
         "--paired-per-batch", "1", "--ratio-k", "5", "--seed", "2"],
    )
    assert code == 0
    plan = json.loads(out)
    for batch in plan["batches"]:
        assert len(batch["unpaired_ids"]) == 5 * len(batch["paired_ids"])


def test_mce_json_and_csv(tmp_path, capsys):
    probs = probs_file(tmp_path)
    code, out, _ = run(capsys, ["mce", "--probs", probs])
    assert code == 0
    report = json.loads(out)
    assert report["metric"] == "mce"
    assert report["value"] == 2.0
    code, csv_out, _ = run(capsys, ["mce", "--probs", probs, "--format", "csv"])
    assert csv_out == "id,value\na,1.0\nb,3.0\nc,2.0\n"


def test_mte_and_ppl(tmp_path, capsys):
    probs = probs_file(tmp_path)
    code, out, _ = run(capsys, ["mte", "--probs", probs])
    assert json.loads(out)["value"] == pytest.approx(2.0)
    code, out, _ = run(capsys, ["ppl", "--probs", probs])
    assert json.loads(out)["value"] == pytest.approx(math.exp(7.0 / 4.0))


def test_pair_metrics(tmp_path, capsys):
    pairs = pairs_file(tmp_path)
    code, out, _ = run(capsys, ["prf", "--pairs", pairs])
    assert json.loads(out)["value"]["F1"] == pytest.approx((1.0 + 2 / 3) / 2)
    code, out, _ = run(capsys, ["bleu", "--pairs", pairs, "--max-n", "2"])
    assert 0.0 < json.loads(out)["value"] <= 1.0
    code, out, _ = run(capsys, ["meteor", "--pairs", pairs])
    assert json.loads(out)["variant"] == "simplified"


def test_fid_and_dce(tmp_path, capsys):
    real = features_file(tmp_path, "real", rows=40, seed=1)
    gen = features_file(tmp_path, "gen", rows=40, offset=1.0, seed=2)
    code, out, _ = run(capsys, ["fid", "--real", real, "--generated", gen])
    assert code == 0
    assert json.loads(out)["value"] > 0
    code, out, _ = run(
        capsys,
        ["dce", "--paintings", real, "--poems", gen, "--pca-dim", "3"],
    )
    report = json.loads(out)
    assert report["metric"] == "dce"
    assert report["pca_dim"] == 3
    assert report["estimator"] == "ledoit_wolf"


def test_genre_acc(tmp_path, capsys):
    pred = write(tmp_path / "pred.csv", "id,genre\na,figure\nb,landscape\n")
    truth = write(tmp_path / "truth.csv", "id,genre\na,figure\nb,boundary\n")
    code, out, _ = run(capsys, ["genre-acc", "--predicted", pred, "--truth", truth])
    assert code == 0
    assert json.loads(out)["value"] == 0.5


def test_losses_subcommand(tmp_path, capsys):
    orig = write(tmp_path / "orig.csv", "id,f0,f1\nx,0.0,0.0\n")
    recon = write(tmp_path / "recon.csv", "id,f0,f1\nx,0.5,0.5\n")
    scores = write(tmp_path / "scores.csv", "id,f0\ns0,0.5\ns1,0.5\n")
    grids = write(tmp_path / "grids.csv", "id,f0,f1\ng0,0.5,0.25\n")
    shapes = write(tmp_path / "shapes.jsonl", json.dumps({"id": "g0", "w": 2, "h": 1}) + "\n")
    code, out, _ = run(
        capsys,
        [
            "losses",
            "--cycle-painting-original", orig,
            "--cycle-painting-reconstruction", recon,
            "--cycle-poem-original", orig,
            "--cycle-poem-reconstruction", orig,
            "--seq-real-scores", scores,
            "--seq-fake-scores", scores,
            "--patch-fake-grids", grids,
            "--patch-fake-shapes", shapes,
            "--lambda-adv", "0.5",
        ],
    )
    assert code == 0
    report = json.loads(out)
    assert report["value"]["cycle"] == pytest.approx(0.5)
    assert report["value"]["adversarial_sequence"] == pytest.approx(-2 * math.log(2))
    assert report["value"]["adversarial_patch_generator"] == pytest.approx(
        (math.log(2) + math.log(4)) / 2
    )
    assert "full_objective" not in report["value"]  # supervised inputs absent
    assert report["lambda_adv"] == 0.5


def test_sample_jsonl_echo_and_determinism(tmp_path, capsys):
    logits = write(
        tmp_path / "logits.csv",
        "id,f0,f1,f2\n民,0.0,1.0,2.0\n民,2.0,1.0,0.0\n江,9.0,0.0,0.0\n",
    )
    argv = ["sample", "--logits", logits, "--strategy", "top_k", "--k", "2",
            "--temperature", "0.6", "--seed", "5"]
    code, out1, _ = run(capsys, argv)
    assert code == 0
    lines = out1.strip().splitlines()
    echo = json.loads(lines[0])["config"]
    assert echo == {"strategy": "top_k", "k": 2, "temperature": 0.6, "p": 0.9, "seed": 5}
    first_seq = json.loads(lines[1])
    assert first_seq["id"] == "民" and len(first_seq["tokens"]) == 2
    code, out2, _ = run(capsys, argv)
    assert out2 == out1


def test_sample_requires_strategy(tmp_path, capsys):
    logits = write(tmp_path / "l.csv", "id,f0\na,1.0\n")
    code, _, err = run(capsys, ["sample", "--logits", logits])
    assert code == 1
    assert "ERROR 1:" in err


def test_seed_env_fallback(tmp_path, capsys, monkeypatch):
    manifest = manifest_file(tmp_path, n_pairs=0, n_unpaired=10)
    monkeypatch.setenv("INKBRIDGE_SEED", "9")
    code, out, _ = run(capsys, ["split", "--manifest", manifest])
    assert json.loads(out)["seed"] == 9
    monkeypatch.setenv("INKBRIDGE_SEED", "not-a-number")
    code, _, err = run(capsys, ["split", "--manifest", manifest])
    assert code == 1 and "INKBRIDGE_SEED" in err


def test_correlate_from_reports(tmp_path, capsys):
    ids = [f"i{k}" for k in range(12)]
    per_item = [{"id": i, "value": float(k)} for k, i in enumerate(ids)]
    report_path = write(
        tmp_path / "mce.json", json.dumps({"metric": "mce", "value": 1.0, "per_item": per_item})
    )
    ratings_lines = ["id,quality"] + [f"{i},{1.0 + 0.3 * k}" for k, i in enumerate(ids)]
    ratings = write(tmp_path / "ratings.csv", "\n".join(ratings_lines) + "\n")
    code, out, _ = run(
        capsys, ["correlate", "--metrics", report_path, "--ratings", ratings]
    )
    assert code == 0
    result = json.loads(out)
    assert result["row_names"] == ["MCE"]
    assert result["values"][0][0] == pytest.approx(1.0)
    code, csv_out, _ = run(
        capsys,
        ["correlate", "--metrics", report_path, "--ratings", ratings, "--format", "csv"],
    )
    assert csv_out.splitlines()[0] == "metric,quality"


def test_summary_column_order_and_stability(tmp_path, capsys):
    reports = {
        "mce": {"metric": "mce", "value": 2.15},
        "dce": {"metric": "dce", "value": 0.85, "pca_dim": 100},
        "prf": {"metric": "prf", "value": {"P": 0.537, "R": 0.511, "F1": 0.524}},
        "fid": {"metric": "fid", "value": 57.2},
    }
    paths = [write(tmp_path / f"{k}.json", json.dumps(v)) for k, v in reports.items()]
    argv = ["summary", "--reports", *paths, "--format", "csv"]
    code, out1, _ = run(capsys, argv)
    assert code == 0
    header = out1.splitlines()[0].split(",")
    assert header == ["P", "R", "F1", "MCE", "P-FID", "DCE"]
    code, out2, _ = run(capsys, argv)
    assert out2 == out1
    code, out3, _ = run(capsys, argv + ["--workers", "4"])
    assert out3 == out1


def test_summary_conflicting_duplicates(tmp_path, capsys):
    a = write(tmp_path / "a.json", json.dumps({"metric": "mce", "value": 1.0}))
    b = write(tmp_path / "b.json", json.dumps({"metric": "mce", "value": 2.0}))
    code, _, err = run(capsys, ["summary", "--reports", a, b])
    assert code == 1
    assert err.startswith("ERROR 1:")


def test_unknown_subcommand_usage_exit_1(capsys):
    code, _, err = run(capsys, ["frobnicate"])
    assert code == 1
    assert "usage:" in err
    assert "ERROR 1:" in err


def test_missing_file_exit_2(tmp_path, capsys):
    code, _, err = run(capsys, ["mce", "--probs", str(tmp_path / "absent.jsonl")])
    assert code == 2
    assert err.startswith("ERROR 2:")


def test_invalid_manifest_exit_1(tmp_path, capsys):
    bad = write(
        tmp_path / "bad.json",
        json.dumps({"items": [{"id": "a", "modality": "poem", "pair_id": "zz"}]}),
    )
    code, _, err = run(capsys, ["split", "--manifest", bad])
    assert code == 1
    assert err.startswith("ERROR 1:") and "zz" in err


def test_numerical_failure_exit_3(tmp_path, capsys, monkeypatch):
    probs = probs_file(tmp_path)

    def boom(req):
        raise NumericalFailure("synthetic numerical breakdown")

    monkeypatch.setitem(cli._HANDLERS, "mce", boom)
    code, _, err = run(capsys, ["mce", "--probs", probs])
    assert code == 3
    assert err.startswith("ERROR 3:")


def test_remote_error_mapping(tmp_path, capsys, monkeypatch):
    probs = probs_file(tmp_path)

    class FakeResponse:
        status_code = 400
        text = "{}"

        @staticmethod
        def json():
            return {"error": {"category": "numerical", "message": "bad matrix"}}

    import httpx

    monkeypatch.setattr(httpx, "post", lambda *a, **k: FakeResponse())
    code, _, err = run(
        capsys, ["mce", "--probs", probs, "--server", "http://example.invalid"]
    )
    assert code == 3
    assert "bad matrix" in err
