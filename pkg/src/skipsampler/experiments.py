"""Experiment drivers behind the CLI subcommands.

Each driver computes, writes its delimited outputs (trace CSV / metrics
JSON / aligned text), renders the companion figures, and returns the
summary dict.  Runs and chains are reproducible from (config, seed) alone:
per-run streams are spawned from the root seed, so results do not depend
on the worker-pool size.
"""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import (
    SCHEMA_VERSION,
    ExperimentConfig,
    build_halting,
    build_proposal,
    build_target,
)
from .core import LogTarget, make_stream, split_stream
from .diagnostics import ergodic_average
from .figures import (
    save_endpoints_figure,
    save_metrics_bar_figure,
    save_tail_comparison_figure,
    save_trace_figure,
)
from .optimize import BoxProblem, OptRunReport, basin_hopping, multistart_single
from .proposals import DeterministicHalting, GaussianProposal, InfiniteHalting
from .samplers import ChainResult, SkippingConfig, make_rwm_step, make_skip_step, run_chain
from .targets import (
    EGGHOLDER_BOUNDS,
    EGGHOLDER_MIN_VALUE,
    EGGHOLDER_OPTIMUM,
    eggholder,
    eggholder_batch,
    make_random_mixture,
)

TAIL_COMPONENTS = 20
TAIL_SPREAD = 10.0
TAIL_LEVELS = {2: -30.0, 50: -350.0}
TAIL_SAFETY_CAP = 1000


def _json_dump(obj: dict, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def write_trace_csv(path: Path, trace) -> None:
    """Trace CSV: one row per step, LF endings, schema comment first."""
    d = len(trace[0].state)
    header = "step," + ",".join(f"x{i + 1}" for i in range(d)) + ",accepted,skip_count,log_target"
    lines = [f"# skipsampler trace schema {SCHEMA_VERSION}", header]
    for i, rec in enumerate(trace):
        coords = ",".join(repr(float(v)) for v in rec.state)
        lines.append(
            f"{i},{coords},{int(rec.accepted)},{rec.skip_count},{repr(rec.log_target_at_state)}"
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def tune_rwm_scale(
    target: LogTarget,
    x0: np.ndarray,
    seed: int,
    target_rate: float = 0.25,
    tol: float = 0.02,
    pilot_steps: int = 10_000,
) -> float:
    """Offline proposal-scale tuning by bisection on pilot acceptance rates.

    Acceptance of an isotropic-Gaussian random walk decreases in its scale,
    so bracket then bisect in log-scale until the pilot acceptance is within
    ``tol`` of the target.  Deterministic for a given seed.
    """

    def acceptance(scale: float) -> float:
        proposal = GaussianProposal(scale**2 * np.eye(len(x0)))
        chain = run_chain(x0, make_rwm_step(target, proposal), pilot_steps, make_stream(seed))
        return chain.acceptance_rate

    lo = hi = 1.0
    acc = acceptance(1.0)
    if acc > target_rate:
        while acc > target_rate:
            lo = hi
            hi *= 4.0
            if hi > 1e8:
                raise RuntimeError("tuning failed: acceptance never fell below the target rate")
            acc = acceptance(hi)
    else:
        while acc < target_rate:
            hi = lo
            lo /= 4.0
            if lo < 1e-10:
                raise RuntimeError("tuning failed: acceptance never rose above the target rate")
            acc = acceptance(lo)

    scale = math.sqrt(lo * hi)
    for _ in range(20):
        acc = acceptance(scale)
        if abs(acc - target_rate) <= tol:
            break
        if acc > target_rate:
            lo = scale
        else:
            hi = scale
        scale = math.sqrt(lo * hi)
    return scale


def _build_step_fn(cfg: ExperimentConfig, target: LogTarget, proposal):
    if cfg.sampler["kind"] == "rwm":
        return make_rwm_step(target, proposal)
    halting = build_halting(cfg.sampler["halting"])
    return make_skip_step(target, SkippingConfig(proposal=proposal, halting=halting))


def _sample_chain(args: tuple) -> tuple[int, list, float, float]:
    """Worker: run one chain of a ``sample`` invocation (picklable args)."""
    cfg_dict, proposal_spec, chain_idx, n_chains, seed, steps, x0 = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    bundle = build_target(cfg.target)
    proposal = build_proposal(proposal_spec, bundle.dim)
    step_fn = _build_step_fn(cfg, bundle.log_target, proposal)
    stream = split_stream(make_stream(seed), n_chains)[chain_idx]
    result = run_chain(np.asarray(x0, dtype=float), step_fn, steps, stream)
    return chain_idx, result.trace, result.acceptance_rate, result.skip_fraction


def run_sample(
    cfg: ExperimentConfig,
    out_dir: str | Path,
    *,
    tune: bool = False,
    threads: int = 1,
    seed_override: int | None = None,
    steps_override: int | None = None,
) -> dict:
    """Run the configured sampler; write per-chain trace CSVs, a summary
    JSON and a trace figure.  Returns the summary dict."""
    t_start = time.perf_counter()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    seed = cfg.run["seed"] if seed_override is None else seed_override
    steps = cfg.run["steps"] if steps_override is None else steps_override
    n_chains = cfg.run.get("chains", 1)
    burn_in = cfg.run.get("burn_in", steps // 10)

    bundle = build_target(cfg.target)
    x0 = np.asarray(cfg.run.get("initial", bundle.default_initial), dtype=float)
    if len(x0) != bundle.dim:
        raise ValueError(f"run.initial: expected {bundle.dim} coordinates, got {len(x0)}")

    proposal_spec = dict(cfg.sampler["proposal"])
    tuned_scale = None
    if tune:
        if proposal_spec["kind"] != "gaussian":
            raise ValueError("--tune requires a gaussian proposal")
        tuned_scale = tune_rwm_scale(bundle.log_target, x0, seed + 987_654_321)
        proposal_spec = {"kind": "gaussian", "scale": tuned_scale}

    jobs = [
        (cfg.to_dict(), proposal_spec, c, n_chains, seed, steps, [float(v) for v in x0])
        for c in range(n_chains)
    ]
    if threads > 1 and n_chains > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = sorted(pool.map(_sample_chain, jobs))
    else:
        results = [_sample_chain(j) for j in jobs]

    per_chain = []
    for chain_idx, trace, acc, skipf in results:
        write_trace_csv(out / f"trace_{chain_idx:03d}.csv", trace)
        states = np.stack([r.state for r in trace])[burn_in:]
        means = {
            f"x{i + 1}": {
                "mean": float(est.mean),
                "std_error": float(est.std_error),
            }
            for i in range(states.shape[1])
            for est in [ergodic_average(states[:, i])]
        }
        per_chain.append(
            {"chain": chain_idx, "acceptance_rate": acc, "skip_fraction": skipf,
             "ergodic_mean": means}
        )

    first_trace = results[0][1]
    save_trace_figure(
        np.stack([r.state for r in first_trace]),
        out / "trace.png",
        title=f"{cfg.target['kind']} / {cfg.sampler['kind']}",
    )

    summary = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg.to_dict(),
        "seed": seed,
        "acceptance_rate": float(np.mean([c["acceptance_rate"] for c in per_chain])),
        "skip_fraction": float(np.mean([c["skip_fraction"] for c in per_chain])),
        "metrics": {
            "chains": per_chain,
            "burn_in": burn_in,
            "tuned_scale": tuned_scale,
            "effective_proposal": proposal_spec,
        },
        "runtime_s": time.perf_counter() - t_start,
    }
    _json_dump(summary, out / "summary.json")
    return summary


def run_tail_experiment(
    dim: int,
    seed: int,
    steps: int,
    out_dir: str | Path,
    *,
    threads: int = 1,
) -> dict:
    """Random-mixture sublevel-tail comparison of tuned random walk vs
    skipping with the same proposal (levels exp(-30) at d=2, exp(-350) at
    d=50).  Writes both traces, the mixture description, a comparison JSON
    and the comparison figure."""
    if dim not in TAIL_LEVELS:
        raise ValueError(f"dim must be one of {sorted(TAIL_LEVELS)}")
    t_start = time.perf_counter()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    level = TAIL_LEVELS[dim]

    cfg = ExperimentConfig.from_dict(
        {
            "target": {
                "kind": "mixture_tail",
                "mixture_seed": seed,
                "components": TAIL_COMPONENTS,
                "dim": dim,
                "spread": TAIL_SPREAD,
                "level_log": level,
            },
            "sampler": {"kind": "rwm", "proposal": {"kind": "gaussian", "scale": 1.0}},
            "run": {"steps": steps, "seed": seed},
        }
    )
    bundle = build_target(cfg.target)
    x0 = bundle.default_initial
    mixture = make_random_mixture(seed, TAIL_COMPONENTS, dim, TAIL_SPREAD)
    _json_dump(mixture.to_dict(), out / f"tail_d{dim}_mixture.json")

    scale = tune_rwm_scale(bundle.log_target, x0, seed + 987_654_321)
    proposal = GaussianProposal(scale**2 * np.eye(dim))

    root = make_stream(seed)
    rwm_stream, skip_stream = split_stream(root, 2)
    rwm = run_chain(x0, make_rwm_step(bundle.log_target, proposal), steps, rwm_stream)
    skip_cfg = SkippingConfig(
        proposal=proposal, halting=InfiniteHalting(safety_cap=TAIL_SAFETY_CAP)
    )
    skip = run_chain(x0, make_skip_step(bundle.log_target, skip_cfg), steps, skip_stream)

    write_trace_csv(out / f"tail_d{dim}_rwm.csv", rwm.trace)
    write_trace_csv(out / f"tail_d{dim}_skipping.csv", skip.trace)

    rwm_states = rwm.states()
    skip_states = skip.states()
    save_tail_comparison_figure(
        rwm_states,
        skip_states,
        out / f"tail_d{dim}.png",
        mixture=mixture if dim == 2 else None,
        level_log=level,
    )

    summary = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg.to_dict(),
        "seed": seed,
        "dim": dim,
        "level_log": level,
        "tuned_scale": scale,
        "rwm": {"acceptance_rate": rwm.acceptance_rate, "skip_fraction": rwm.skip_fraction},
        "skipping": {"acceptance_rate": skip.acceptance_rate, "skip_fraction": skip.skip_fraction},
        "acceptance_gap": skip.acceptance_rate - rwm.acceptance_rate,
        "first_coordinate": {
            "rwm": [float(v) for v in rwm_states[:, 0]],
            "skipping": [float(v) for v in skip_states[:, 0]],
        },
        "runtime_s": time.perf_counter() - t_start,
    }
    _json_dump(summary, out / f"tail_d{dim}_comparison.json")
    return summary


def _eggholder_problem() -> BoxProblem:
    return BoxProblem(
        f=eggholder,
        bounds=EGGHOLDER_BOUNDS,
        known_optimum=(EGGHOLDER_OPTIMUM, EGGHOLDER_MIN_VALUE),
        f_batch=eggholder_batch,
    )


TABLE1_MODES = ("vanilla", "rwm", "mss")
TABLE2_MODES = ("classic", "monotonic", "mss")


def _table1_chunk(args: tuple) -> list[tuple[int, str, dict]]:
    seed, n_total, m, lo_idx, hi_idx = args
    prob = _eggholder_problem()
    children = split_stream(make_stream(seed), n_total)
    proposal = GaussianProposal(2.0 * np.eye(2))
    out = []
    for i in range(lo_idx, hi_idx):
        subs = split_stream(children[i], 3)
        x0 = subs[0].uniform(prob.bounds[:, 0], prob.bounds[:, 1])
        for mode, stream in zip(TABLE1_MODES, (subs[0], subs[1], subs[2])):
            skipping = None
            if mode == "mss":
                skipping = SkippingConfig(
                    proposal=proposal, halting=DeterministicHalting(k=200)
                )
            report = multistart_single(
                prob, mode, stream, x0=x0, m=m, proposal=proposal,
                temperature=1.0, skipping=skipping,
            )
            out.append((i, mode, report.to_dict()))
    return out


def _table2_chunk(args: tuple) -> list[tuple[int, str, dict]]:
    seed, n_total, m, lo_idx, hi_idx = args
    prob = _eggholder_problem()
    children = split_stream(make_stream(seed), n_total)
    skipping = SkippingConfig(proposal=GaussianProposal(np.eye(2)),
                              halting=DeterministicHalting(k=200))
    out = []
    for i in range(lo_idx, hi_idx):
        subs = split_stream(children[i], 4)
        x0 = subs[0].uniform(prob.bounds[:, 0], prob.bounds[:, 1])
        for mode, stream in zip(TABLE2_MODES, (subs[1], subs[2], subs[3])):
            report = basin_hopping(
                prob, x0, mode, m, stream,
                step_scale=math.sqrt(3.0), temperature=1.0,
                skipping=skipping if mode == "mss" else None,
            )
            out.append((i, mode, report.to_dict()))
    return out


def _run_chunked(worker, seed: int, n_runs: int, m: int, threads: int) -> dict[str, list[dict]]:
    chunk = max(1, math.ceil(n_runs / max(threads, 1) / 4))
    jobs = [
        (seed, n_runs, m, lo, min(lo + chunk, n_runs)) for lo in range(0, n_runs, chunk)
    ]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            pieces = list(pool.map(worker, jobs))
    else:
        pieces = [worker(j) for j in jobs]
    flat = sorted((item for piece in pieces for item in piece), key=lambda t: t[0])
    by_mode: dict[str, list[dict]] = {}
    for _, mode, report in flat:
        by_mode.setdefault(mode, []).append(report)
    return by_mode


def _variant_metrics(reports: list[dict]) -> dict:
    return {
        "avg_distance_to_optimum": float(np.mean([r["distance_to_optimum"] for r in reports])),
        "basin_fraction": float(np.mean([r["in_basin"] for r in reports])),
        "avg_optimality_gap": float(
            np.mean([r["final_value"] - EGGHOLDER_MIN_VALUE for r in reports])
        ),
        "avg_function_evals": float(np.mean([r["function_evals"] for r in reports])),
        "avg_wall_time_s": float(np.mean([r["wall_time_s"] for r in reports])),
        "n_runs": len(reports),
    }


def _format_metrics_table(metrics: dict[str, dict], title: str) -> str:
    rows = [
        ("Avg distance to optimum", "avg_distance_to_optimum", "{:.3f}"),
        ("Basin fraction", "basin_fraction", "{:.3f}"),
        ("Avg optimality gap", "avg_optimality_gap", "{:.3f}"),
        ("Avg function evals", "avg_function_evals", "{:.1f}"),
        ("Avg wall time (s)", "avg_wall_time_s", "{:.4f}"),
    ]
    names = list(metrics)
    widths = [max(len(r[0]) for r in rows)] + [max(len(n), 12) for n in names]
    lines = [title, ""]
    header = "  ".join(["Metric".ljust(widths[0])] + [n.rjust(w) for n, w in zip(names, widths[1:])])
    lines.append(header)
    lines.append("-" * len(header))
    for label, key, fmt in rows:
        cells = [fmt.format(metrics[n][key]).rjust(w) for n, w in zip(names, widths[1:])]
        lines.append("  ".join([label.ljust(widths[0])] + cells))
    return "\n".join(lines) + "\n"


def _run_table(
    which: int,
    n_runs: int,
    m: int,
    seed: int,
    out_dir: str | Path,
    threads: int,
) -> dict:
    t_start = time.perf_counter()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    worker = _table1_chunk if which == 1 else _table2_chunk
    by_mode = _run_chunked(worker, seed, n_runs, m, threads)
    metrics = {mode: _variant_metrics(reports) for mode, reports in by_mode.items()}

    name = f"table{which}"
    summary = {
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
        "n_runs": n_runs,
        "m": m,
        "metrics": metrics,
        "runs": {mode: reports for mode, reports in by_mode.items()},
        "runtime_s": time.perf_counter() - t_start,
    }
    _json_dump(summary, out / f"{name}.json")
    title = (
        "Multistart starting-point quality on the eggholder box"
        if which == 1
        else "Basin-hopping variants on the eggholder box"
    )
    (out / f"{name}.txt").write_text(_format_metrics_table(metrics, title), encoding="utf-8")

    endpoints = {
        mode: np.array([r["final_point"] for r in reports])
        for mode, reports in by_mode.items()
    }
    save_endpoints_figure(endpoints, EGGHOLDER_BOUNDS, out / f"{name}_endpoints.png",
                          optimum=EGGHOLDER_OPTIMUM)
    save_metrics_bar_figure(metrics, "basin_fraction", out / f"{name}_basin_fraction.png",
                            ylabel="fraction of endpoints in the optimum's basin")
    return summary


def run_table1(n_runs: int, m: int, seed: int, out_dir: str | Path, *, threads: int = 1) -> dict:
    """Multistart comparison: uniform starts vs random-walk-evolved vs
    monotonic-skipping-evolved starts (shared start points per run)."""
    return _run_table(1, n_runs, m, seed, out_dir, threads)


def run_table2(n_runs: int, m: int, seed: int, out_dir: str | Path, *, threads: int = 1) -> dict:
    """Basin-hopping comparison: classic / monotonic / skipping-subroutine."""
    return _run_table(2, n_runs, m, seed, out_dir, threads)
