import csv
import json

import numpy as np
import pytest

from citecast import load_model, load_series_jsonl
from citecast.cli import main
from citecast.corpus import examples_from_series
from citecast.training import evaluate_split


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    payload = json.loads(captured.out) if captured.out.strip() else None
    return code, payload, captured.err


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def test_ingest_reports_fixture_counts(capsys, paper_csv, edge_csv, tmp_path):
    out = tmp_path / "series.jsonl"
    code, payload, _ = run_cli(
        capsys, "ingest", str(paper_csv), str(edge_csv), str(out),
        "--span", "2000", "2014",
    )
    assert code == 0
    assert payload["report"] == {
        "rows": 59,
        "papers": 10,
        "events": 55,
        "duplicates": 1,
        "self_loops": 1,
        "unknown_cited": 1,
        "out_of_span": 1,
        "unresolved_citing": 13,
    }
    assert payload["span"] == [2000, 2014]
    assert payload["series_written"] == 10
    series = {s.paper_id: s for s in load_series_jsonl(str(out))}
    assert len(series) == 10
    np.testing.assert_array_equal(
        series["A"].cumulative, [1, 2, 3, 4, 5, 6, 7, 7, 8, 8]
    )


def test_ingest_filter_keeps_eligible_subset(capsys, paper_csv, edge_csv, tmp_path):
    out = tmp_path / "series.jsonl"
    code, payload, _ = run_cli(
        capsys, "ingest", str(paper_csv), str(edge_csv), str(out),
        "--span", "2000", "2014", "--filter",
    )
    assert code == 0
    assert payload["filtered"] is True
    assert payload["series_written"] == 4
    assert sorted(s.paper_id for s in load_series_jsonl(str(out))) == list("ACDF")


def test_ingest_missing_file_is_data_error(capsys, tmp_path):
    code, _, err = run_cli(
        capsys, "ingest", str(tmp_path / "nope.csv"),
        str(tmp_path / "nope2.csv"), str(tmp_path / "out.jsonl"),
    )
    assert code == 2
    assert "error" in err


def test_usage_errors_exit_one(capsys, tmp_path):
    assert run_cli(capsys, "train")[0] == 1
    assert run_cli(capsys, "gradcheck", "--variant", "mystery", "--seed", "1")[0] == 1
    assert (
        run_cli(
            capsys, "train", "a", "b", "--variant", "lt-ccp", "--seed", "1",
            "--epochs", "-3",
        )[0]
        == 1
    )


def test_synth_is_deterministic(capsys, tmp_path):
    args = ["synth", "--n-papers", "120", "--years", "8", "--m-refs", "4",
            "--seed", "77"]
    code_a, pa, _ = run_cli(capsys, args[0], str(tmp_path / "a"), *args[1:])
    code_b, pb, _ = run_cli(capsys, args[0], str(tmp_path / "b"), *args[1:])
    assert code_a == code_b == 0
    assert pa["papers"] == 120
    for name in ("papers.csv", "edges.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (
            tmp_path / "b" / name
        ).read_bytes()


@pytest.fixture(scope="module")
def synth_series(tmp_path_factory):
    """A small synthetic corpus ingested to a filtered series file."""
    root = tmp_path_factory.mktemp("pipeline")
    raw = root / "raw"
    series = root / "series.jsonl"
    assert main(["synth", str(raw), "--n-papers", "300", "--years", "14",
                 "--m-refs", "6", "--seed", "5"]) == 0
    assert main(["ingest", str(raw / "papers.csv"), str(raw / "edges.csv"),
                 str(series), "--filter"]) == 0
    return series


@pytest.fixture(scope="module")
def trained_model(synth_series, tmp_path_factory):
    root = tmp_path_factory.mktemp("model")
    model = root / "model.json"
    assert main(["train", str(synth_series), str(model),
                 "--variant", "att-a-lt", "--hidden", "3", "--attn", "4",
                 "--epochs", "2", "--batch-size", "8", "--seed", "11"]) == 0
    return model


def test_train_writes_loadable_model(capsys, trained_model):
    cfg, params, meta = load_model(str(trained_model))
    assert cfg.variant.value == "att-a-lt"
    assert cfg.hidden == 3
    assert meta["seed"] == 11
    assert meta["train_config"]["epochs"] == 2
    assert meta["final_val_loss"] is not None


def test_train_deterministic_up_to_wall_time(capsys, synth_series, tmp_path):
    outputs = []
    for tag in ("x", "y"):
        model = tmp_path / f"{tag}.json"
        trace = tmp_path / f"{tag}.csv"
        code, payload, _ = run_cli(
            capsys, "train", str(synth_series), str(model),
            "--variant", "lt-ccp", "--hidden", "3",
            "--epochs", "2", "--batch-size", "8", "--seed", "3",
            "--trace", str(trace),
        )
        assert code == 0
        payload.pop("model"), payload.pop("trace")
        outputs.append((model.read_bytes(), read_csv(trace), payload))
    (bytes_a, (head_a, rows_a), pa), (bytes_b, (head_b, rows_b), pb) = outputs
    assert bytes_a == bytes_b
    assert pa == pb
    assert head_a == head_b == ["epoch", "train_loss", "val_loss", "seconds"]
    assert [r[:3] for r in rows_a] == [r[:3] for r in rows_b]


def test_train_rejects_tiny_series(capsys, paper_csv, edge_csv, tmp_path):
    series = tmp_path / "series.jsonl"
    run_cli(capsys, "ingest", str(paper_csv), str(edge_csv), str(series),
            "--span", "2000", "2014")
    code, _, err = run_cli(
        capsys, "train", str(series), str(tmp_path / "m.json"),
        "--variant", "lt-ccp", "--seed", "1",
    )
    assert code == 2
    assert "2 x batch size" in err


def test_evaluate_matches_library_and_writes_quartiles(
    capsys, synth_series, trained_model, tmp_path
):
    report_csv = tmp_path / "report.csv"
    quart_csv = tmp_path / "quartiles.csv"
    code, payload, _ = run_cli(
        capsys, "evaluate", str(trained_model), str(synth_series),
        str(report_csv), "--quartiles", str(quart_csv),
    )
    assert code == 0

    cfg, params, _ = load_model(str(trained_model))
    series_list = load_series_jsonl(str(synth_series))
    examples = examples_from_series(series_list, cfg.t_obs, cfg.horizons, cfg.window)
    want = evaluate_split(cfg, params, examples)
    assert payload["population"] == want.population
    np.testing.assert_allclose(payload["mape"], want.mape, rtol=0, atol=0)
    np.testing.assert_allclose(payload["acc"], want.acc, rtol=0, atol=0)

    header, rows = read_csv(report_csv)
    assert header == ["horizon", "mape", "acc"]
    assert [int(r[0]) for r in rows] == [1, 2, 3, 4, 5]
    assert [float(r[1]) for r in rows] == want.mape

    qheader, qrows = read_csv(quart_csv)
    assert qheader == ["quartile", "horizon", "n", "mape"]
    assert {int(r[0]) for r in qrows} == {1, 2, 3, 4}
    sizes = {int(r[0]): int(r[2]) for r in qrows}
    assert sum(sizes.values()) == want.population


def test_dist_writes_histogram_and_tv(capsys, synth_series, trained_model, tmp_path):
    out_csv = tmp_path / "dist.csv"
    code, payload, _ = run_cli(
        capsys, "dist", str(trained_model), str(synth_series), str(out_csv),
    )
    assert code == 0
    assert 0.0 <= payload["tv_distance"] <= 1.0
    assert payload["horizon"] == 5
    header, rows = read_csv(out_csv)
    assert header == ["bin_lo", "bin_hi", "count_actual", "count_predicted"]
    assert [float(rows[0][0]), float(rows[0][1])] == [0.0, 1.0]
    assert float(rows[1][0]) == 1.0
    total_actual = sum(int(r[2]) for r in rows)
    assert total_actual == payload["population"]


def test_dist_rejects_out_of_range_horizon(
    capsys, synth_series, trained_model, tmp_path
):
    code, _, err = run_cli(
        capsys, "dist", str(trained_model), str(synth_series),
        str(tmp_path / "d.csv"), "--horizon", "9",
    )
    assert code == 2
    assert "horizon" in err


def test_gradcheck_passes_cleanly(capsys):
    code, payload, _ = run_cli(
        capsys, "gradcheck", "--variant", "att-b-lt", "--hidden", "3",
        "--attn", "4", "--window", "6", "--seed", "2", "--trials", "4",
    )
    assert code == 0
    assert payload["pass"] is True
    assert payload["max_rel_error"] <= payload["tolerance"]


def test_gradcheck_corrupt_gradient_fails(capsys):
    code, payload, err = run_cli(
        capsys, "gradcheck", "--variant", "lt-ccp", "--hidden", "3",
        "--window", "6", "--seed", "2", "--trials", "2", "--corrupt-gradient",
    )
    assert code == 3
    assert payload["pass"] is False
    assert payload["worst_block"] == "readout.b"
    assert "gradient check failed" in err
