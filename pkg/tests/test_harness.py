import json
import math

import numpy as np
import pytest

from searchnet.cli import main as cli_main
from searchnet.evolution import EvolutionConfig
from searchnet.harness import (
    ENGINE_OFF,
    ENGINE_ON,
    ENGINE_PAIRED,
    KIND_DEGREE,
    KIND_DIAMETER,
    KIND_RUMOR,
    KIND_THEORY,
    ExperimentSpec,
    HarnessError,
    SyntheticSeed,
    builtin_figure_spec,
    read_csv,
    reproduce_figures,
    run_experiment,
)
from searchnet.sir import SirConfig


def degree_spec(out, steps=600, replicates=2, seed=5, threads=1):
    return ExperimentSpec(
        kind=KIND_DEGREE,
        seed_graph=SyntheticSeed(),
        evolution=EvolutionConfig(beta=0.5, p_search=0.1, steps=steps),
        replicates=replicates,
        engine_mode=ENGINE_PAIRED,
        seed=seed,
        out_dir=str(out),
        d_floor=1,
        fit_d_min=3,
        threads=threads,
    )


def read_bytes(path):
    with open(path, "rb") as fh:
        return fh.read()


# -------------------------------------------------------------- degree runs


def test_degree_experiment_files_and_schema(tmp_path):
    artifacts = run_experiment(degree_spec(tmp_path / "deg"))
    header, rows = read_csv(artifacts.aggregated_csv)
    assert header == ["d", "count", "ln_d", "ln_count", "mode"]
    assert rows, "aggregated degree CSV is empty"
    modes = {r[4] for r in rows}
    assert modes == {ENGINE_ON, ENGINE_OFF}
    for r in rows:
        d, count, ln_d, ln_count = int(r[0]), float(r[1]), float(r[2]), float(r[3])
        assert count > 0
        assert math.isfinite(ln_d) and math.isfinite(ln_count)
        assert ln_d == pytest.approx(math.log(d))
        assert ln_count == pytest.approx(math.log(count))
    assert len(artifacts.replicate_csvs) == 4  # 2 modes x 2 replicates
    assert (tmp_path / "deg" / "fits.json").exists()


def test_degree_aggregate_recomputes_from_replicates(tmp_path):
    artifacts = run_experiment(degree_spec(tmp_path / "deg2", replicates=3))
    # oracle: rebuild per-mode mean counts from the replicate files
    per_mode = {}
    for path in artifacts.replicate_csvs:
        _, rows = read_csv(path)
        mode = rows[0][4]
        per_mode.setdefault(mode, []).append({int(r[0]): int(r[1]) for r in rows})
    _, agg_rows = read_csv(artifacts.aggregated_csv)
    for r in agg_rows:
        d, count, mode = int(r[0]), float(r[1]), r[4]
        counts = [c.get(d, 0) for c in per_mode[mode]]
        assert count == float(np.mean(counts))


def test_zero_steps_reports_seed_graph_only(tmp_path):
    spec = degree_spec(tmp_path / "deg0", steps=0, replicates=1)
    spec.engine_mode = ENGINE_ON
    artifacts = run_experiment(spec)
    _, rows = read_csv(artifacts.aggregated_csv)
    # 10+10 seed with c=2: every user has degree exactly 2
    user_rows = [r for r in rows if r[4] == ENGINE_ON]
    assert {int(r[0]) for r in user_rows} == {2}
    assert float(user_rows[0][1]) == 10.0


# ------------------------------------------------------------ diameter runs


def test_diameter_trace_schema_and_recompute(tmp_path):
    spec = ExperimentSpec(
        kind=KIND_DIAMETER,
        evolution=EvolutionConfig(beta=0.5, p_search=0.1, steps=200),
        replicates=2,
        record_interval=50,
        engine_mode=ENGINE_PAIRED,
        seed=3,
        out_dir=str(tmp_path / "diam"),
    )
    artifacts = run_experiment(spec)
    header, rows = read_csv(artifacts.aggregated_csv)
    assert header == ["t", "mean", "stddev", "mode"]
    times = sorted({int(r[0]) for r in rows})
    assert times == [0, 50, 100, 150, 200]
    per_mode = {}
    for path in artifacts.replicate_csvs:
        _, rrows = read_csv(path)
        mode = rrows[0][2]
        per_mode.setdefault(mode, []).append({int(r[0]): int(r[1]) for r in rrows})
    for r in rows:
        t, mean, std, mode = int(r[0]), float(r[1]), float(r[2]), r[3]
        vals = np.array([series[t] for series in per_mode[mode]], dtype=np.float64)
        assert mean == float(vals.mean())
        assert std == float(vals.std())


# --------------------------------------------------------------- rumor runs


def test_rumor_coverage_run(tmp_path):
    spec = ExperimentSpec(
        kind=KIND_RUMOR,
        evolution=EvolutionConfig(beta=0.5, p_search=0.1, steps=400),
        sir=SirConfig(max_steps=60),
        replicates=2,
        engine_mode=ENGINE_PAIRED,
        seed=8,
        out_dir=str(tmp_path / "rumor"),
    )
    artifacts = run_experiment(spec)
    header, rows = read_csv(artifacts.aggregated_csv)
    assert header == ["t", "coverage_mean", "coverage_std", "mode"]
    by_mode = {m: {} for m in (ENGINE_ON, ENGINE_OFF)}
    for r in rows:
        by_mode[r[3]][int(r[0])] = float(r[1])
    assert set(by_mode[ENGINE_ON]) == set(range(61))
    for t in range(61):
        assert 0.0 <= by_mode[ENGINE_ON][t] <= 1.0
        assert by_mode[ENGINE_ON][t] >= by_mode[ENGINE_OFF][t]
    # per-replicate files are padded to the horizon and carry S/I/R columns
    _, rrows = read_csv(artifacts.replicate_csvs[0])
    assert len(rrows) == 61
    n_users = sum(int(x) for x in rrows[0][1:4])
    assert all(sum(int(x) for x in r[1:4]) == n_users for r in rrows)


def test_rumor_requires_sir_config(tmp_path):
    spec = ExperimentSpec(
        kind=KIND_RUMOR,
        evolution=EvolutionConfig(steps=10),
        out_dir=str(tmp_path / "x"),
    )
    with pytest.raises(HarnessError):
        run_experiment(spec)


# --------------------------------------------------------------- theory runs


def test_theory_tables(tmp_path):
    spec = ExperimentSpec(
        kind=KIND_THEORY,
        evolution=EvolutionConfig(beta=0.5, p_search=0.1, c_u=2, c_t=2),
        replicates=1,
        out_dir=str(tmp_path / "theory"),
    )
    artifacts = run_experiment(spec)
    header, rows = read_csv(artifacts.aggregated_csv)
    assert header == ["u", "p_search", "without_engine", "with_engine"]
    ten = next(r for r in rows if int(r[0]) == 10)
    assert float(ten[2]) == 11.0 and float(ten[3]) == pytest.approx(10.0)
    assert set(artifacts.extras) >= {"expected_route", "degree_fraction", "recursion_limit"}


# ------------------------------------------------------------- determinism


def test_manifest_rerun_is_byte_identical(tmp_path):
    first = run_experiment(degree_spec(tmp_path / "a", steps=400, replicates=2, seed=11))
    spec2 = ExperimentSpec.from_manifest(first.manifest_path)
    spec2.out_dir = str(tmp_path / "b")
    second = run_experiment(spec2)
    for p1, p2 in zip(
        [first.aggregated_csv, *first.replicate_csvs],
        [second.aggregated_csv, *second.replicate_csvs],
    ):
        assert read_bytes(p1) == read_bytes(p2), f"{p1.name} differs on rerun"


def test_threads_do_not_change_outputs(tmp_path):
    solo = run_experiment(degree_spec(tmp_path / "s", steps=300, replicates=3, seed=4))
    multi = run_experiment(
        degree_spec(tmp_path / "m", steps=300, replicates=3, seed=4, threads=2)
    )
    assert read_bytes(solo.aggregated_csv) == read_bytes(multi.aggregated_csv)


def test_spec_json_round_trip(tmp_path):
    spec = builtin_figure_spec("fig5", str(tmp_path / "f5"), quick=True)
    d = spec.to_dict()
    again = ExperimentSpec.from_dict(json.loads(json.dumps(d)))
    assert again.to_dict() == d


# ----------------------------------------------------------------- figures


def test_fig4_equals_equivalent_hand_spec(tmp_path):
    artifacts = reproduce_figures("fig4", tmp_path / "repro", quick=True, seed=77)
    manual = builtin_figure_spec("fig4", str(tmp_path / "manual"), quick=True, seed=77)
    manual_artifacts = run_experiment(manual)
    assert read_bytes(artifacts.aggregated_csv) == read_bytes(manual_artifacts.aggregated_csv)


def test_fig3_is_elementwise_logs_of_fig2(tmp_path):
    a2 = reproduce_figures("fig2", tmp_path / "f", quick=True, seed=9)
    a3 = reproduce_figures("fig3", tmp_path / "f", quick=True, seed=9)
    h2, rows2 = read_csv(a2.extras["figure_csv"])
    h3, rows3 = read_csv(a3.extras["figure_csv"])
    assert h3 == ["ln_d", "ln_count", "mode"]
    assert len(rows2) == len(rows3)
    for r2, r3 in zip(rows2, rows3):
        assert float(r3[0]) == math.log(int(r2[0]))
        assert float(r3[1]) == pytest.approx(math.log(float(r2[1])), rel=1e-12)
        assert r3[2] == r2[4]
        assert math.isfinite(float(r3[0])) and math.isfinite(float(r3[1]))


def test_fig5_has_both_modes_over_horizon(tmp_path):
    artifacts = reproduce_figures("fig5", tmp_path / "f5", quick=True, seed=3)
    _, rows = read_csv(artifacts.extras["figure_csv"])
    on_rows = [r for r in rows if r[3] == ENGINE_ON]
    off_rows = [r for r in rows if r[3] == ENGINE_OFF]
    assert len(on_rows) == len(off_rows) == 201
    assert all(0.0 <= float(r[1]) <= 1.0 for r in rows)


# ---------------------------------------------------------------------- CLI


def test_cli_pipeline(tmp_path, capsys):
    edge_file = tmp_path / "raw.txt"
    edge_file.write_text("# demo\n1 2\n2 3\n3 4\n4 1\n")
    graph_file = tmp_path / "seed.txt"
    rc = cli_main(
        [
            "ingest",
            "--in",
            str(edge_file),
            "--strategy",
            "double_cover",
            "--c-u",
            "2",
            "--c-t",
            "2",
            "--out",
            str(graph_file),
        ]
    )
    assert rc == 0
    assert (tmp_path / "seed.txt.provenance.json").exists()

    evolved_file = tmp_path / "evolved.txt"
    rc = cli_main(
        [
            "evolve",
            "--graph",
            str(graph_file),
            "--steps",
            "300",
            "--seed",
            "6",
            "--trace",
            str(tmp_path / "trace.jsonl"),
            "--out",
            str(evolved_file),
        ]
    )
    assert rc == 0
    trace_lines = (tmp_path / "trace.jsonl").read_text().strip().splitlines()
    assert len(trace_lines) == 300
    assert {"t", "side", "new", "prototype", "copied", "search"} <= set(
        json.loads(trace_lines[0])
    )

    rc = cli_main(["validate", "--graph", str(evolved_file)])
    assert rc == 0

    rc = cli_main(
        [
            "metrics",
            "--graph",
            str(evolved_file),
            "--d-min",
            "5",
            "--out-prefix",
            str(tmp_path / "m"),
        ]
    )
    assert rc == 0
    summary = json.loads((tmp_path / "m_metrics.json").read_text())
    assert summary["diameter"]["is_exact"]

    rc = cli_main(
        [
            "sir",
            "--graph",
            str(evolved_file),
            "--steps",
            "40",
            "--engine",
            "paired",
            "--out-prefix",
            str(tmp_path / "sir"),
        ]
    )
    assert rc == 0
    assert (tmp_path / "sir_on.csv").exists() and (tmp_path / "sir_off.csv").exists()
    capsys.readouterr()


def test_cli_reproduce_config_roundtrip(tmp_path):
    spec = degree_spec(tmp_path / "from_config", steps=200, replicates=1)
    config_path = tmp_path / "spec.json"
    config_path.write_text(json.dumps(spec.to_dict()))
    rc = cli_main(["reproduce", "--config", str(config_path)])
    assert rc == 0
    assert (tmp_path / "from_config" / "degree_aggregated.csv").exists()


def test_cli_error_paths(tmp_path, capsys):
    rc = cli_main(["validate", "--graph", str(tmp_path / "missing.txt")])
    assert rc == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("1 2 3\n")
    rc = cli_main(["ingest", "--in", str(bad), "--out", str(tmp_path / "o.txt")])
    assert rc == 2
    capsys.readouterr()


def test_dataset_spec_defaults_steps_to_half_seed(tmp_path):
    data = tmp_path / "edges.txt"
    data.write_text("\n".join(f"{i} {i+1}" for i in range(40)) + "\n")
    spec_dict = {
        "schema_version": 1,
        "kind": KIND_DEGREE,
        "seed_graph": {"dataset": {"path": str(data), "strategy": "double_cover", "c_u": 1, "c_t": 1}},
        "evolution": {"beta": 0.5, "p_search": 0.1},
        "replicates": 1,
        "engine_mode": ENGINE_ON,
        "seed": 2,
        "out_dir": str(tmp_path / "run"),
        "d_floor": 1,
        "fit_d_min": 1,
    }
    spec = ExperimentSpec.from_dict(spec_dict)
    assert spec.evolution.steps == -1
    artifacts = run_experiment(spec)
    # double cover of a 41-node path: 82 seed nodes -> 41 steps
    assert spec.evolution.steps == 41
    manifest = json.loads(artifacts.manifest_path.read_text())
    assert manifest["spec"]["evolution"]["steps"] == 41
