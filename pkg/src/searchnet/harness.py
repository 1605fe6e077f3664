"""Batch experiment runner with seeded replicates and paired modes.

An :class:`ExperimentSpec` describes one experiment declaratively: the
seed graph (synthetic or dataset-derived), the evolution parameters, the
rumor parameters when relevant, replicate count, and output directory.
``run_experiment`` executes every replicate (optionally fanned out over
worker processes), writes per-replicate and aggregated CSVs plus a
manifest JSON that suffices to re-run the experiment bit-identically.

Paired mode runs engine-on and engine-off against the same replicate
seeds; the named substreams guarantee the non-search randomness is
shared, so the off run is a coupled counterfactual of the on run.

Fixed CSV schemas (documented contract for the plotting component):

    degree    d, count, ln_d, ln_count, mode
    diameter  t, mean, stddev, mode        (per-replicate: t, diameter, mode)
    coverage  t, coverage_mean, coverage_std, mode
              (per-replicate: t, susceptible, infectious, recovered,
               coverage, mode -- padded to the horizon)
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .evolution import EvolutionConfig, SearchPolicy, run_evolution
from .graph import BipartiteGraph, ParameterError, new_seed_graph, Side
from .ingest import BipartizeStrategy, load_edge_list, seed_from_dataset
from .metrics import (
    METHOD_MLE,
    METHOD_REGRESSION,
    FitError,
    degree_histogram,
    diameter_exact,
    expected_route,
    fit_power_law,
    fit_record,
    recursion_ratio_limit,
    theoretical_degree_fraction,
    worst_case_diameter,
)
from .rng import CH_SEED_GRAPH, derive_seed, substream
from .sir import SirConfig, run_sir

KIND_DEGREE = "degree_distribution"
KIND_DIAMETER = "diameter_trace"
KIND_RUMOR = "rumor_coverage"
KIND_THEORY = "theory_tables"
_KINDS = (KIND_DEGREE, KIND_DIAMETER, KIND_RUMOR, KIND_THEORY)

ENGINE_ON = "on"
ENGINE_OFF = "off"
ENGINE_PAIRED = "paired"
_ENGINE_MODES = (ENGINE_ON, ENGINE_OFF, ENGINE_PAIRED)

FIGURES = ("fig2", "fig3", "fig4", "fig5")

_CH_SIR_SEED = 23
_CH_DATASET = 31

# sentinel for dataset-seeded specs: resolved to seed_node_count // 2
AUTO_STEPS = -1

SCHEMA_VERSION = 1


class HarnessError(RuntimeError):
    """Spec, ingest, or output failures with a user-facing message."""


@dataclass
class SyntheticSeed:
    users: int = 10
    topics: int = 10
    c_u: int = 2
    c_t: int = 2
    connected: bool = True


@dataclass
class DatasetSeed:
    path: str
    strategy: str = "double_cover"
    split_fraction: float = 0.5
    c_u: int = 2
    c_t: int = 2


@dataclass
class ExperimentSpec:
    kind: str
    seed_graph: SyntheticSeed | DatasetSeed = field(default_factory=SyntheticSeed)
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    sir: SirConfig | None = None
    replicates: int = 10
    record_interval: int = 20
    engine_mode: str = ENGINE_PAIRED
    seed: int = 0
    out_dir: str = "runs/experiment"
    d_floor: int = 11
    fit_d_min: int = 11
    threads: int = 1
    name: str = "experiment"

    def validate(self) -> None:
        if self.kind not in _KINDS:
            raise HarnessError(f"unknown experiment kind {self.kind!r}")
        if self.engine_mode not in _ENGINE_MODES:
            raise HarnessError(f"unknown engine mode {self.engine_mode!r}")
        if self.replicates < 1:
            raise HarnessError("replicates must be >= 1")
        if self.record_interval < 1:
            raise HarnessError("record_interval must be >= 1")
        if self.threads < 1:
            raise HarnessError("threads must be >= 1")
        try:
            self.evolution.validate()
            if self.sir is not None:
                self.sir.validate()
        except ParameterError as exc:
            raise HarnessError(f"invalid spec: {exc}") from exc
        if self.kind == KIND_RUMOR and self.sir is None:
            raise HarnessError("rumor_coverage needs a sir config")

    # -- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "replicates": self.replicates,
            "record_interval": self.record_interval,
            "engine_mode": self.engine_mode,
            "seed": self.seed,
            "out_dir": self.out_dir,
            "d_floor": self.d_floor,
            "fit_d_min": self.fit_d_min,
            "threads": self.threads,
            "name": self.name,
            "evolution": asdict(self.evolution),
            "sir": asdict(self.sir) if self.sir is not None else None,
        }
        if isinstance(self.seed_graph, SyntheticSeed):
            d["seed_graph"] = {"synthetic": asdict(self.seed_graph)}
        else:
            d["seed_graph"] = {"dataset": asdict(self.seed_graph)}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        version = d.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise HarnessError(f"unsupported spec schema_version {version}")
        sg = d.get("seed_graph", {"synthetic": {}})
        if "synthetic" in sg:
            seed_graph: SyntheticSeed | DatasetSeed = SyntheticSeed(**sg["synthetic"])
        elif "dataset" in sg:
            seed_graph = DatasetSeed(**sg["dataset"])
        else:
            raise HarnessError("seed_graph must name 'synthetic' or 'dataset'")
        evo = dict(d.get("evolution", {}))
        policy = evo.pop("search_policy", None)
        # dataset-seeded specs may omit steps: resolved at run time to
        # half the seed graph's node count
        if "steps" not in evo and "dataset" in sg:
            evo["steps"] = AUTO_STEPS
        evolution = EvolutionConfig(**evo)
        if policy is not None:
            evolution.search_policy = SearchPolicy(**policy)
        sir = d.get("sir")
        return cls(
            kind=d["kind"],
            seed_graph=seed_graph,
            evolution=evolution,
            sir=SirConfig(**sir) if sir is not None else None,
            replicates=d.get("replicates", 10),
            record_interval=d.get("record_interval", 20),
            engine_mode=d.get("engine_mode", ENGINE_PAIRED),
            seed=d.get("seed", 0),
            out_dir=d.get("out_dir", "runs/experiment"),
            d_floor=d.get("d_floor", 11),
            fit_d_min=d.get("fit_d_min", 11),
            threads=d.get("threads", 1),
            name=d.get("name", "experiment"),
        )

    @classmethod
    def from_json(cls, path) -> "ExperimentSpec":
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        # accept either a bare spec or a manifest wrapping one
        if "spec" in payload and "kind" not in payload:
            payload = payload["spec"]
        return cls.from_dict(payload)

    from_manifest = from_json


@dataclass
class RunArtifacts:
    out_dir: Path
    manifest_path: Path
    aggregated_csv: Path
    replicate_csvs: list[Path]
    extras: dict[str, Path] = field(default_factory=dict)
    diagnostics: list[str] = field(default_factory=list)


# ------------------------------------------------------------- CSV helpers


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    """Tiny strict reader for the harness's own CSV files."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    header = lines[0].split(",")
    return header, [ln.split(",") for ln in lines[1:]]


# -------------------------------------------------------------- seed graphs


def _build_seed_graph(spec: ExperimentSpec, replicate: int) -> BipartiteGraph:
    sg = spec.seed_graph
    if isinstance(sg, SyntheticSeed):
        return new_seed_graph(
            sg.users,
            sg.topics,
            sg.c_u,
            sg.c_t,
            connected=sg.connected,
            rng=substream(spec.seed, replicate, CH_SEED_GRAPH),
        )
    try:
        raw = load_edge_list(sg.path)
    except OSError as exc:
        raise HarnessError(f"cannot read dataset {sg.path}: {exc}") from exc
    strategy = BipartizeStrategy(
        kind=sg.strategy,
        split_fraction=sg.split_fraction,
        seed=derive_seed(spec.seed, replicate, _CH_DATASET),
    )
    return seed_from_dataset(raw, strategy, sg.c_u, sg.c_t)


def _evolution_for_mode(spec: ExperimentSpec, mode: str) -> EvolutionConfig:
    config = replace(spec.evolution, seed=spec.seed)
    return config.without_engine() if mode == ENGINE_OFF else config


# ---------------------------------------------------------------- replicate


def _degree_replicate(spec: ExperimentSpec, mode: str, rep: int) -> dict:
    graph = _build_seed_graph(spec, rep)
    config = _evolution_for_mode(spec, mode)
    run_evolution(graph, config, replicate=rep, keep_reports=False)
    hist = degree_histogram(graph, Side.USER, d_floor=spec.d_floor)
    fits = {}
    for method in (METHOD_MLE, METHOD_REGRESSION):
        try:
            fits[method] = fit_record(fit_power_law(hist, spec.fit_d_min, method))
        except FitError as exc:
            fits[method] = {"error": str(exc), "n_tail": exc.n_tail}
    return {
        "mode": mode,
        "rep": rep,
        "counts": [(int(d), int(c)) for d, c in hist.counts.items()],
        "fits": fits,
    }


def _diameter_replicate(spec: ExperimentSpec, mode: str, rep: int) -> dict:
    graph = _build_seed_graph(spec, rep)
    config = _evolution_for_mode(spec, mode)
    series: list[tuple[int, int]] = [(0, diameter_exact(graph).value)]
    interval = spec.record_interval

    def observer(report):
        if report.time % interval == 0:
            series.append((report.time, diameter_exact(graph).value))

    run_evolution(graph, config, observers=[observer], replicate=rep, keep_reports=False)
    return {"mode": mode, "rep": rep, "series": series}


def _rumor_replicate(spec: ExperimentSpec, modes: tuple[str, ...], rep: int) -> dict:
    graph = _build_seed_graph(spec, rep)
    config = _evolution_for_mode(spec, ENGINE_ON)  # the substrate is the search network
    run_evolution(graph, config, replicate=rep, keep_reports=False)
    sir_seed = derive_seed(spec.seed, rep, _CH_SIR_SEED)
    out = {"rep": rep, "modes": {}}
    horizon = spec.sir.max_steps
    for mode in modes:
        sir_config = replace(
            spec.sir, engine_enabled=(mode == ENGINE_ON), seed=sir_seed
        )
        trace = run_sir(graph, sir_config)
        length = len(trace.coverage)
        pad = horizon + 1 - length
        out["modes"][mode] = {
            "coverage": trace.coverage_padded(horizon).tolist(),
            "susceptible": trace.susceptible.tolist() + [int(trace.susceptible[-1])] * pad,
            "infectious": trace.infectious.tolist() + [int(trace.infectious[-1])] * pad,
            "recovered": trace.recovered.tolist() + [int(trace.recovered[-1])] * pad,
            "steps_to_stability": trace.steps_to_stability,
        }
    return out


def _task(args: tuple) -> dict:
    spec_dict, kind, mode, rep = args
    spec = ExperimentSpec.from_dict(spec_dict)
    if kind == KIND_DEGREE:
        return _degree_replicate(spec, mode, rep)
    if kind == KIND_DIAMETER:
        return _diameter_replicate(spec, mode, rep)
    if kind == KIND_RUMOR:
        return _rumor_replicate(spec, tuple(mode.split("+")), rep)
    raise HarnessError(f"no replicate task for kind {kind!r}")


def _run_tasks(spec: ExperimentSpec, tasks: list[tuple]) -> list[dict]:
    if spec.threads == 1 or len(tasks) <= 1:
        return [_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=spec.threads) as pool:
        return list(pool.map(_task, tasks))


# -------------------------------------------------------------- experiments


def run_experiment(spec: ExperimentSpec) -> RunArtifacts:
    """Execute the experiment and write CSVs plus a manifest.

    Returns the artifact paths; raises HarnessError on invalid specs or
    unusable output locations.
    """
    if spec.evolution.steps == AUTO_STEPS:
        if not isinstance(spec.seed_graph, DatasetSeed):
            raise HarnessError("auto steps only apply to dataset seed graphs")
        probe_graph = _build_seed_graph(spec, 0)
        spec.evolution = replace(
            spec.evolution,
            steps=(probe_graph.num_users + probe_graph.num_topics) // 2,
        )
    spec.validate()
    started = time.perf_counter()
    out = Path(spec.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise HarnessError(f"output directory not writable: {out} ({exc})") from exc

    modes = (
        (ENGINE_ON, ENGINE_OFF) if spec.engine_mode == ENGINE_PAIRED else (spec.engine_mode,)
    )
    diagnostics: list[str] = []
    replicate_csvs: list[Path] = []
    extras: dict[str, Path] = {}

    if spec.kind == KIND_THEORY:
        aggregated = _write_theory_tables(spec, out, extras)
    elif spec.kind == KIND_DEGREE:
        tasks = [(spec.to_dict(), spec.kind, m, r) for m in modes for r in range(spec.replicates)]
        payloads = _run_tasks(spec, tasks)
        aggregated = _emit_degree(spec, out, modes, payloads, replicate_csvs, extras, diagnostics)
    elif spec.kind == KIND_DIAMETER:
        tasks = [(spec.to_dict(), spec.kind, m, r) for m in modes for r in range(spec.replicates)]
        payloads = _run_tasks(spec, tasks)
        aggregated = _emit_diameter(spec, out, modes, payloads, replicate_csvs)
    else:
        mode_token = "+".join(modes)
        tasks = [(spec.to_dict(), spec.kind, mode_token, r) for r in range(spec.replicates)]
        payloads = _run_tasks(spec, tasks)
        aggregated = _emit_rumor(spec, out, modes, payloads, replicate_csvs)

    manifest_path = out / "manifest.json"
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "spec": spec.to_dict(),
        "replicate_seeds": [derive_seed(spec.seed, r, 0) for r in range(spec.replicates)],
        "outputs": sorted(
            p.name for p in [aggregated, *replicate_csvs, *extras.values()]
        ),
        "diagnostics": diagnostics,
        "wall_time_s": round(time.perf_counter() - started, 3),
    }
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return RunArtifacts(
        out_dir=out,
        manifest_path=manifest_path,
        aggregated_csv=aggregated,
        replicate_csvs=replicate_csvs,
        extras=extras,
        diagnostics=diagnostics,
    )


def _emit_degree(spec, out, modes, payloads, replicate_csvs, extras, diagnostics):
    by_mode: dict[str, list[dict]] = {m: [] for m in modes}
    for payload in payloads:
        by_mode[payload["mode"]].append(payload)
    fits_summary: dict = {}
    for mode in modes:
        for payload in sorted(by_mode[mode], key=lambda p: p["rep"]):
            rows = [
                (d, c, math.log(d), math.log(c))
                for d, c in payload["counts"]
                if c > 0 and d >= 1
            ]
            path = out / f"degree_{mode}_rep{payload['rep']:02d}.csv"
            _write_csv(
                path,
                ["d", "count", "ln_d", "ln_count", "mode"],
                [(d, c, ld, lc, mode) for d, c, ld, lc in rows],
            )
            replicate_csvs.append(path)
        records = [p["fits"] for p in sorted(by_mode[mode], key=lambda p: p["rep"])]
        for method in (METHOD_MLE, METHOD_REGRESSION):
            bad = [r[method] for r in records if "error" in r[method]]
            for b in bad:
                diagnostics.append(f"{mode}: fit failed: {b['error']}")
        mags = {
            method: [
                r[method]["magnitude"] for r in records if "magnitude" in r[method]
            ]
            for method in (METHOD_MLE, METHOD_REGRESSION)
        }
        fits_summary[mode] = {
            "replicates": records,
            "mean_magnitude": {
                m: (float(np.mean(v)) if v else None) for m, v in mags.items()
            },
        }
    agg_rows = []
    for mode in modes:
        counts_by_rep = [dict(p["counts"]) for p in by_mode[mode]]
        degrees = sorted({d for c in counts_by_rep for d in c})
        for d in degrees:
            mean_count = float(np.mean([c.get(d, 0) for c in counts_by_rep]))
            if mean_count <= 0:
                continue
            agg_rows.append((d, mean_count, math.log(d), math.log(mean_count), mode))
    aggregated = out / "degree_aggregated.csv"
    _write_csv(aggregated, ["d", "count", "ln_d", "ln_count", "mode"], agg_rows)
    fits_path = out / "fits.json"
    with open(fits_path, "w", encoding="utf-8") as fh:
        json.dump(fits_summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    extras["fits"] = fits_path
    return aggregated


def _emit_diameter(spec, out, modes, payloads, replicate_csvs):
    by_mode: dict[str, list[dict]] = {m: [] for m in modes}
    for payload in payloads:
        by_mode[payload["mode"]].append(payload)
    agg_rows = []
    for mode in modes:
        reps = sorted(by_mode[mode], key=lambda p: p["rep"])
        for payload in reps:
            path = out / f"diameter_{mode}_rep{payload['rep']:02d}.csv"
            _write_csv(
                path,
                ["t", "diameter", "mode"],
                [(t, v, mode) for t, v in payload["series"]],
            )
            replicate_csvs.append(path)
        times = [t for t, _ in reps[0]["series"]]
        matrix = np.array([[v for _, v in p["series"]] for p in reps], dtype=np.float64)
        for j, t in enumerate(times):
            agg_rows.append(
                (t, float(matrix[:, j].mean()), float(matrix[:, j].std()), mode)
            )
    aggregated = out / "diameter_aggregated.csv"
    _write_csv(aggregated, ["t", "mean", "stddev", "mode"], agg_rows)
    return aggregated


def _emit_rumor(spec, out, modes, payloads, replicate_csvs):
    payloads = sorted(payloads, key=lambda p: p["rep"])
    agg_rows = []
    for mode in modes:
        for payload in payloads:
            series = payload["modes"][mode]
            path = out / f"coverage_{mode}_rep{payload['rep']:02d}.csv"
            _write_csv(
                path,
                ["t", "susceptible", "infectious", "recovered", "coverage", "mode"],
                [
                    (
                        t,
                        series["susceptible"][t],
                        series["infectious"][t],
                        series["recovered"][t],
                        float(series["coverage"][t]),
                        mode,
                    )
                    for t in range(len(series["coverage"]))
                ],
            )
            replicate_csvs.append(path)
        matrix = np.array(
            [p["modes"][mode]["coverage"] for p in payloads], dtype=np.float64
        )
        for t in range(matrix.shape[1]):
            agg_rows.append(
                (t, float(matrix[:, t].mean()), float(matrix[:, t].std()), mode)
            )
    aggregated = out / "coverage_aggregated.csv"
    _write_csv(aggregated, ["t", "coverage_mean", "coverage_std", "mode"], agg_rows)
    return aggregated


def _write_theory_tables(spec: ExperimentSpec, out: Path, extras: dict) -> Path:
    config = spec.evolution
    rows = []
    for u in range(1, 21):
        rows.append(
            (
                u,
                float(config.p_search),
                worst_case_diameter(u, config.p_search, with_engine=False),
                worst_case_diameter(u, config.p_search, with_engine=True),
            )
        )
    aggregated = out / "worst_case_diameter.csv"
    _write_csv(aggregated, ["u", "p_search", "without_engine", "with_engine"], rows)

    route_rows = []
    for n in (10, 100, 1000):
        for u in (10, 100):
            r = expected_route(e0=min(n, 50), n=n, u=u, d_max=100.0, config=config)
            route_rows.append(
                (
                    r.e0,
                    n,
                    u,
                    r.d_max,
                    r.value_with_engine,
                    r.value_without_engine,
                    r.value_without_engine - r.value_with_engine,
                )
            )
    route_path = out / "expected_route.csv"
    _write_csv(
        route_path,
        ["e0", "n", "u", "d_max", "with_engine", "without_engine", "gap"],
        route_rows,
    )
    extras["expected_route"] = route_path

    frac_rows = []
    off = config.without_engine()
    for i in range(config.c_u, 65):
        frac_rows.append(
            (
                i,
                theoretical_degree_fraction(i, off, u_term=1.0),
                theoretical_degree_fraction(i, config, u_term=1.0),
            )
        )
    frac_path = out / "degree_fraction.csv"
    _write_csv(frac_path, ["i", "fraction_no_engine", "fraction_engine"], frac_rows)
    extras["degree_fraction"] = frac_path

    rec_path = out / "recursion_limit.csv"
    ratio = recursion_ratio_limit(1.0, 2.0, t0=1, horizon=1_000_000)
    _write_csv(rec_path, ["b", "c", "horizon", "ratio", "limit"], [(1.0, 2.0, 1_000_000, ratio, 1.0)])
    extras["recursion_limit"] = rec_path
    return aggregated


# ------------------------------------------------------------------ figures


def builtin_figure_spec(
    figure: str,
    out_dir: str,
    *,
    quick: bool = False,
    seed: int | None = None,
    replicates: int | None = None,
    threads: int = 1,
) -> ExperimentSpec:
    """The default desk-scale spec behind each reproduced figure."""
    if figure not in FIGURES:
        raise HarnessError(f"unknown figure {figure!r}; pick one of {FIGURES}")
    seed = 1902 if seed is None else seed
    if figure in ("fig2", "fig3"):
        spec = ExperimentSpec(
            kind=KIND_DEGREE,
            seed_graph=SyntheticSeed(),
            evolution=EvolutionConfig(
                beta=0.5, p_search=0.1, c_u=2, c_t=2, steps=2500 if quick else 20000
            ),
            replicates=replicates or (2 if quick else 5),
            engine_mode=ENGINE_PAIRED,
            seed=seed,
            out_dir=out_dir,
            d_floor=11,
            fit_d_min=11,
            threads=threads,
            name=figure,
        )
        return spec
    if figure == "fig4":
        return ExperimentSpec(
            kind=KIND_DIAMETER,
            seed_graph=SyntheticSeed(),
            evolution=EvolutionConfig(
                beta=0.5, p_search=0.1, c_u=2, c_t=2, steps=600 if quick else 2000
            ),
            replicates=replicates or (3 if quick else 10),
            record_interval=20,
            engine_mode=ENGINE_PAIRED,
            seed=seed,
            out_dir=out_dir,
            threads=threads,
            name=figure,
        )
    return ExperimentSpec(
        kind=KIND_RUMOR,
        seed_graph=SyntheticSeed(),
        evolution=EvolutionConfig(
            beta=0.5, p_search=0.1, c_u=2, c_t=2, steps=1200 if quick else 5000
        ),
        sir=SirConfig(
            lambda_adj=0.7, mu=0.07, xi=0.7, initial_fraction=0.01, max_steps=200
        ),
        replicates=replicates or (2 if quick else 5),
        engine_mode=ENGINE_PAIRED,
        seed=seed,
        out_dir=out_dir,
        threads=threads,
        name=figure,
    )


def reproduce_figures(
    figure: str,
    out_dir,
    *,
    quick: bool = False,
    seed: int | None = None,
    replicates: int | None = None,
    threads: int = 1,
) -> RunArtifacts:
    """Run the built-in spec for a figure and emit its figure CSV.

    fig2 emits the aggregated degree table, fig3 the same data projected
    onto its log-log columns, fig4 the diameter trace, and fig5 the
    coverage series; all land in ``out_dir/<figure>.csv`` next to the
    full experiment artifacts in ``out_dir/<figure>_run/``.
    """
    out = Path(out_dir)
    spec = builtin_figure_spec(
        figure,
        str(out / f"{figure}_run"),
        quick=quick,
        seed=seed,
        replicates=replicates,
        threads=threads,
    )
    artifacts = run_experiment(spec)
    header, rows = read_csv(artifacts.aggregated_csv)
    fig_path = out / f"{figure}.csv"
    if figure == "fig3":
        idx = [header.index(c) for c in ("ln_d", "ln_count", "mode")]
        _write_csv(
            fig_path,
            ["ln_d", "ln_count", "mode"],
            [tuple(r[i] for i in idx) for r in rows],
        )
    else:
        with open(artifacts.aggregated_csv, "rb") as src, open(fig_path, "wb") as dst:
            dst.write(src.read())
    artifacts.extras["figure_csv"] = fig_path
    return artifacts
