"""Command line interface: sweeps, reports, and debug dumps.

Subcommands
-----------
simulate
    Gaussian two-class sweeps over a separation grid, aggregated over trials
    into one CSV per sample size plus a JSON manifest.
bounds
    Bound report for a single dataset (labeled feature CSV or precomputed
    distance matrix), written as JSON.
blend
    Bound sweep over convex combinations of two distance matrices; runs on a
    built-in synthetic fixture when no matrices are given.
weights
    Print the solved ensemble weight vector for a scale grid and dimension.
mst
    Dump the pooled-sample minimum spanning tree edges and cross-edge summary.

A JSON config file passed with ``--config`` supplies defaults using the flag
names (underscored, e.g. ``{"sample_sizes": [150, 1000]}``); explicit command
line flags win over config values. All outputs are UTF-8, newline terminated,
and contain no timestamps, so a rerun with the same inputs and seed is byte
identical.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .bounds import ALL_BOUNDS, BoundsConfig, BoundsReport, estimate_all_bounds
from .data import (
    DistanceData,
    GaussianSpec,
    derive_seed,
    load_distance_matrix,
    load_labeled_csv,
    sample_gaussian_pair,
    true_gaussian_ber,
)
from .ensemble import EnsembleConfig, solve_weights
from .mst import mst_statistics

__all__ = [
    "main",
    "blend_distances",
    "run_gaussian_sweep",
    "run_blend_sweep",
    "synthetic_blend_fixture",
]

# (bound_name, estimator) rows each bound key contributes to a report.
_PAIR_TABLE = {
    "chernoff": (("chernoff_upper", "knn-ensemble"),),
    "hp-knn": (("hp_lower", "knn-ensemble"), ("hp_upper", "knn-ensemble")),
    "hp-mst": (("hp_lower", "mst"), ("hp_upper", "mst")),
    "softmin": (("softmin_lower", "knn-ensemble"),),
}

DEFAULT_DELTAS = tuple(0.5 * i for i in range(1, 9))
DEFAULT_SAMPLE_SIZES = (150, 1000)


def _floats(value) -> tuple[float, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(float(v) for v in value)
    return tuple(float(p) for p in str(value).split(",") if p.strip())


def _ints(value) -> tuple[int, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(int(v) for v in value)
    return tuple(int(p) for p in str(value).split(",") if p.strip())


def _strs(value) -> tuple[str, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(str(v) for v in value)
    return tuple(p.strip() for p in str(value).split(",") if p.strip())


def _fmt(value) -> str:
    """Shortest-round-trip cell text; empty for missing values."""
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([cell if isinstance(cell, str) else _fmt(cell) for cell in row])
    path.write_text(buf.getvalue(), encoding="utf-8")


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _expected_pairs(bounds: tuple[str, ...]) -> list[tuple[str, str]]:
    pairs: list[tuple[str, str]] = []
    for key in bounds:
        pairs.extend(_PAIR_TABLE[key])
    return pairs


def _bounds_config_from_args(ns, n_bootstrap: int = 0, seed: int = 0) -> BoundsConfig:
    ensemble = None
    if getattr(ns, "k_scales", None):
        ensemble = EnsembleConfig(_floats(ns.k_scales), ns.weight_mode, ns.norm_budget)
    return BoundsConfig(
        bounds=_strs(ns.bounds),
        ensemble=ensemble,
        eval_mode=ns.eval_mode,
        prior1=ns.prior1,
        chernoff_grid=_floats(ns.chernoff_grid) if getattr(ns, "chernoff_grid", None) else None,
        softmin_alpha=ns.softmin_alpha,
        hp_form=ns.hp_form,
        mst_normalization=ns.mst_normalization,
        n_bootstrap=n_bootstrap,
        ci_level=ns.ci_level,
        bootstrap_estimators=_strs(ns.bootstrap_estimators),
        seed=seed,
    )


# ---------------------------------------------------------------------------
# simulate


def run_gaussian_sweep(
    dim: int,
    deltas: tuple[float, ...],
    sample_sizes: tuple[int, ...],
    trials: int,
    seed: int,
    config: BoundsConfig,
    out_dir: Path,
    max_workers: int | None = None,
) -> tuple[list[Path], float]:
    """Run the Gaussian sweep and write one CSV per sample size.

    Each trial draws a fresh two-class Gaussian sample with a child seed
    derived from ``(seed, sample_size, delta_index, trial_index)`` and runs the
    requested bounds on it. Per-(delta, bound, estimator) rows aggregate the
    successful trials into mean and standard deviation next to the analytic
    Bayes error. Returns the written files and the failed-trial fraction.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if not deltas:
        raise ValueError("the separation grid is empty")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    pairs = _expected_pairs(config.bounds)
    header = [
        "delta", "bound_name", "estimator",
        "mean", "sd", "truth", "n_trials", "n_failed", "error",
    ]
    workers = max_workers or min(8, os.cpu_count() or 1)
    files: list[Path] = []
    failed_trials = 0

    def one_trial(size: int, d_idx: int, t_idx: int):
        child = derive_seed(seed, size, d_idx, t_idx)
        spec = GaussianSpec.from_shift(dim, deltas[d_idx], size, seed=child)
        report = estimate_all_bounds(sample_gaussian_pair(spec), config)
        return {
            (e.bound_name, e.estimator): (e.estimate, e.error) for e in report.entries
        }

    for size in sample_sizes:
        rows: list[list] = []
        for d_idx, delta in enumerate(deltas):
            truth = true_gaussian_ber(GaussianSpec.from_shift(dim, delta, 1))
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futures = [
                    pool.submit(one_trial, size, d_idx, t_idx) for t_idx in range(trials)
                ]
                outcomes = []
                for fut in futures:
                    try:
                        outcomes.append(fut.result())
                    except Exception as exc:  # noqa: BLE001 - recorded, sweep continues
                        outcomes.append(exc)
            trial_failed = [
                isinstance(o, Exception)
                or any(o.get(p, (None, "missing"))[1] is not None for p in pairs)
                for o in outcomes
            ]
            failed_trials += sum(trial_failed)
            for bound_name, estimator in pairs:
                values: list[float] = []
                first_error = ""
                for outcome in outcomes:
                    if isinstance(outcome, Exception):
                        first_error = first_error or str(outcome)
                        continue
                    estimate, error = outcome.get((bound_name, estimator), (None, "missing"))
                    if error is not None or estimate is None:
                        first_error = first_error or (error or "missing")
                    else:
                        values.append(estimate)
                mean = float(np.mean(values)) if values else None
                sd = float(np.std(values, ddof=1)) if len(values) > 1 else (0.0 if values else None)
                rows.append([
                    delta, bound_name, estimator,
                    mean, sd, truth, trials, trials - len(values), first_error,
                ])
        path = out_dir / f"sweep_T{size}.csv"
        _write_csv(path, header, rows)
        files.append(path)

    manifest = {
        "mode": "simulate",
        "dim": dim,
        "deltas": list(deltas),
        "sample_sizes": list(sample_sizes),
        "trials": trials,
        "seed": seed,
        "bounds": list(config.bounds),
        "files": {str(size): f"sweep_T{size}.csv" for size in sample_sizes},
        "csv_columns": header,
        "axes": {"x": "delta", "y": "mean", "error_bar": "sd", "reference": "truth"},
        "series": ["bound_name", "estimator"],
    }
    _write_json(out_dir / "manifest.json", manifest)
    total = len(sample_sizes) * len(deltas) * trials
    return files, failed_trials / total


def _cmd_simulate(ns) -> int:
    config = _bounds_config_from_args(ns)
    files, failed_fraction = run_gaussian_sweep(
        ns.dim,
        _floats(ns.deltas),
        _ints(ns.sample_sizes),
        ns.trials,
        ns.seed,
        config,
        Path(ns.out_dir),
        ns.workers,
    )
    for path in files:
        print(path)
    if failed_fraction > 0.05:
        print(
            f"error: {failed_fraction:.1%} of trials failed (limit 5%)",
            file=sys.stderr,
        )
        return 1
    return 0


# ---------------------------------------------------------------------------
# bounds / mst input handling


def _load_dataset(ns):
    if ns.data is not None:
        if ns.distances is not None or ns.labels is not None:
            raise ValueError("give either --data or --distances/--labels, not both")
        return load_labeled_csv(ns.data, ns.label_column, getattr(ns, "prior1", None))
    if ns.distances is None or ns.labels is None:
        raise ValueError("need --data or both --distances and --labels")
    return load_distance_matrix(ns.distances, ns.labels, getattr(ns, "intrinsic_dim", None))


def _cmd_bounds(ns) -> int:
    data = _load_dataset(ns)
    config = _bounds_config_from_args(ns, n_bootstrap=ns.bootstrap, seed=ns.seed)
    report = estimate_all_bounds(data, config)
    text = report.to_json() + "\n"
    if ns.out:
        Path(ns.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_mst(ns) -> int:
    data = _load_dataset(ns)
    stats = mst_statistics(data, ns.normalization)
    out_dir = Path(ns.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    labels = (
        data.labels
        if isinstance(data, DistanceData)
        else data.pooled()[1]
    )
    rows = [
        [i, j, w, int(labels[i]), int(labels[j]), int(labels[i] != labels[j])]
        for i, j, w in stats.result.edges
    ]
    _write_csv(out_dir / "mst_edges.csv", ["i", "j", "weight", "label_i", "label_j", "cross"], rows)
    summary = {
        "n": int(labels.size),
        "n1": stats.n1,
        "n2": stats.n2,
        "cross_count": stats.result.cross_count,
        "total_weight": stats.result.total_weight,
        "normalization": ns.normalization,
        "divergence_raw": stats.raw,
        "divergence": stats.value,
        "clamped": stats.clamped,
    }
    _write_json(out_dir / "mst_summary.json", summary)
    print(out_dir / "mst_edges.csv")
    print(out_dir / "mst_summary.json")
    return 0


# ---------------------------------------------------------------------------
# weights


def _cmd_weights(ns) -> int:
    wv = solve_weights(_floats(ns.k_scales), ns.dim, ns.weight_mode, ns.norm_budget)
    payload = {
        "k_scales": list(_floats(ns.k_scales)),
        "dim": ns.dim,
        "mode": wv.mode,
        "weights": wv.weights.tolist(),
        "residuals": wv.residuals.tolist(),
        "norm": wv.norm,
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if ns.out:
        Path(ns.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# blend


def blend_distances(first: DistanceData, second: DistanceData, r: float) -> DistanceData:
    """Entrywise convex combination ``r * first + (1 - r) * second``.

    The matrices must have identical shapes and labels and matching
    ``intrinsic_dim``; the endpoints return the corresponding input matrix
    exactly.
    """
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"blend weight r must lie in [0, 1], got {r}")
    if first.distances.shape != second.distances.shape:
        raise ValueError("distance matrices have different shapes")
    if not np.array_equal(first.labels, second.labels):
        raise ValueError("distance matrices have different labels")
    if first.intrinsic_dim != second.intrinsic_dim:
        raise ValueError(
            f"intrinsic_dim mismatch: {first.intrinsic_dim} vs {second.intrinsic_dim}"
        )
    if r == 0.0:
        blended = second.distances.copy()
    elif r == 1.0:
        blended = first.distances.copy()
    else:
        blended = r * first.distances + (1.0 - r) * second.distances
    return DistanceData(blended, first.labels.copy(), first.intrinsic_dim)


def synthetic_blend_fixture(
    n_per_class: int = 20, seed: int = 7
) -> tuple[DistanceData, DistanceData]:
    """Distance-matrix pair for exercising the blend pipeline end to end.

    Both matrices come from one-dimensional embeddings of the same 2n points.
    The second matrix separates the classes into disjoint blocks while the
    first interleaves them, so sweeping the blend weight from 0 (second
    matrix only) to 1 moves the problem from nearly separable to nearly
    indistinguishable and the Bayes error bounds rise with the weight.
    """
    rng = np.random.default_rng(seed)
    base = np.linspace(0.0, 1.0, n_per_class)
    jitter = rng.uniform(-1.0, 1.0, size=(4, n_per_class)) * 1e-3
    spacing = 1.0 / (n_per_class - 1)
    mixed = np.r_[base + jitter[0], base + 0.5 * spacing + jitter[1]]
    separated = np.r_[base + jitter[2], base + 1.6 + jitter[3]]
    labels = np.r_[np.ones(n_per_class, dtype=int), np.full(n_per_class, 2)]
    d_mixed = np.abs(mixed[:, None] - mixed[None, :])
    d_separated = np.abs(separated[:, None] - separated[None, :])
    return (
        DistanceData(d_mixed, labels, intrinsic_dim=1),
        DistanceData(d_separated, labels, intrinsic_dim=1),
    )


def run_blend_sweep(
    first: DistanceData,
    second: DistanceData,
    r_grid: tuple[float, ...],
    config: BoundsConfig,
) -> list[tuple[float, BoundsReport]]:
    """Bound reports along the blend path, one per grid value.

    Bootstrap seeds are re-derived per grid position from ``config.seed`` so
    positions stay independent and the whole sweep is reproducible.
    """
    if not r_grid:
        raise ValueError("the blend weight grid is empty")
    reports = []
    for idx, r in enumerate(r_grid):
        blended = blend_distances(first, second, r)
        local = replace(config, seed=derive_seed(config.seed, idx))
        reports.append((r, estimate_all_bounds(blended, local)))
    return reports


def _cmd_blend(ns) -> int:
    if ns.distances_a is not None or ns.distances_b is not None:
        if ns.distances_a is None or ns.distances_b is None or ns.labels is None:
            raise ValueError("need --distances-a, --distances-b, and --labels together")
        first = load_distance_matrix(ns.distances_a, ns.labels, ns.intrinsic_dim)
        second = load_distance_matrix(ns.distances_b, ns.labels, ns.intrinsic_dim)
    else:
        first, second = synthetic_blend_fixture()
    config = _bounds_config_from_args(ns, n_bootstrap=ns.bootstrap, seed=ns.seed)
    r_grid = _floats(ns.r_grid)
    reports = run_blend_sweep(first, second, r_grid, config)

    pairs = _expected_pairs(config.bounds)
    rows: list[list] = []
    for r, report in reports:
        for bound_name, estimator in pairs:
            entry = report.entry(bound_name, estimator)
            ci_lo, ci_hi = entry.ci if entry.ci is not None else (None, None)
            rows.append([
                r, bound_name, estimator, entry.estimate,
                ci_lo, ci_hi, entry.error or "",
            ])
    out_dir = Path(ns.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    header = ["r", "bound_name", "estimator", "estimate", "ci_lo", "ci_hi", "error"]
    _write_csv(out_dir / "blend_sweep.csv", header, rows)
    manifest = {
        "mode": "blend",
        "r_grid": list(r_grid),
        "bounds": list(config.bounds),
        "n_bootstrap": ns.bootstrap,
        "ci_level": ns.ci_level,
        "seed": ns.seed,
        "synthetic_fixture": ns.distances_a is None,
        "files": {"sweep": "blend_sweep.csv"},
        "csv_columns": header,
        "axes": {"x": "r", "y": "estimate", "band": ["ci_lo", "ci_hi"]},
        "series": ["bound_name", "estimator"],
    }
    _write_json(out_dir / "blend_manifest.json", manifest)
    print(out_dir / "blend_sweep.csv")
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_common_bound_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bounds", default=",".join(ALL_BOUNDS),
                   help="comma list from: chernoff, hp-knn, hp-mst, softmin")
    p.add_argument("--k-scales", default=None,
                   help="comma list of neighbor scale multipliers")
    p.add_argument("--weight-mode", default="exact-null",
                   choices=["exact-null", "relaxed"])
    p.add_argument("--norm-budget", type=float, default=None,
                   help="weight norm cap for relaxed mode")
    p.add_argument("--eval-mode", default="loo", choices=["loo", "split"])
    p.add_argument("--chernoff-grid", default=None,
                   help="comma list of exponents in (0, 1)")
    p.add_argument("--softmin-alpha", type=float, default=500.0)
    p.add_argument("--prior1", type=float, default=None,
                   help="class-1 prior override (default: empirical)")
    p.add_argument("--hp-form", default="rational", choices=["rational", "variational"])
    p.add_argument("--mst-normalization", default="harmonic",
                   choices=["harmonic", "arithmetic"])
    p.add_argument("--ci-level", type=float, default=0.95)
    p.add_argument("--bootstrap-estimators", default="knn-ensemble",
                   help="comma list from: knn-ensemble, mst")


def _add_dataset_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", default=None, help="labeled feature CSV with a header")
    p.add_argument("--label-column", default="label")
    p.add_argument("--distances", default=None, help="square distance matrix CSV")
    p.add_argument("--labels", default=None, help="one label per line, matching rows")
    p.add_argument("--intrinsic-dim", type=int, default=None,
                   help="dimension for k-NN densities on distance data")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="berbounds",
        description="Bayes error bounds from ensemble k-NN and MST divergence estimates.",
    )
    parser.add_argument("--config", default=None,
                        help="JSON file of defaults keyed by flag name (flags win)")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_sim = sub.add_parser("simulate", help="Gaussian separation sweeps")
    p_sim.add_argument("--dim", type=int, default=5)
    p_sim.add_argument("--deltas", default=",".join(str(d) for d in DEFAULT_DELTAS))
    p_sim.add_argument("--sample-sizes",
                       default=",".join(str(s) for s in DEFAULT_SAMPLE_SIZES),
                       help="comma list of per-class sample sizes")
    p_sim.add_argument("--trials", type=int, default=200)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out-dir", default="sweep_out")
    p_sim.add_argument("--workers", type=int, default=None)
    _add_common_bound_flags(p_sim)
    p_sim.set_defaults(func=_cmd_simulate)

    p_bounds = sub.add_parser("bounds", help="bound report for one dataset")
    _add_dataset_flags(p_bounds)
    _add_common_bound_flags(p_bounds)
    p_bounds.add_argument("--bootstrap", type=int, default=0,
                          help="bootstrap replicates for confidence intervals")
    p_bounds.add_argument("--seed", type=int, default=0)
    p_bounds.add_argument("--out", default=None, help="output JSON path (default stdout)")
    p_bounds.set_defaults(func=_cmd_bounds)

    p_blend = sub.add_parser("blend", help="bound sweep over blended distance matrices")
    p_blend.add_argument("--distances-a", default=None,
                         help="matrix receiving weight r (omit to use the synthetic fixture)")
    p_blend.add_argument("--distances-b", default=None,
                         help="matrix receiving weight 1 - r")
    p_blend.add_argument("--labels", default=None)
    p_blend.add_argument("--intrinsic-dim", type=int, default=None)
    p_blend.add_argument("--r-grid", default="0,0.25,0.5,0.75,1")
    p_blend.add_argument("--bootstrap", type=int, default=200)
    p_blend.add_argument("--seed", type=int, default=0)
    p_blend.add_argument("--out-dir", default="blend_out")
    _add_common_bound_flags(p_blend)
    p_blend.set_defaults(func=_cmd_blend)

    p_weights = sub.add_parser("weights", help="solve and print ensemble weights")
    p_weights.add_argument("--k-scales", required=True)
    p_weights.add_argument("--dim", type=int, required=True)
    p_weights.add_argument("--weight-mode", default="exact-null",
                           choices=["exact-null", "relaxed"])
    p_weights.add_argument("--norm-budget", type=float, default=None)
    p_weights.add_argument("--out", default=None)
    p_weights.set_defaults(func=_cmd_weights)

    p_mst = sub.add_parser("mst", help="dump MST edges and cross-edge statistics")
    _add_dataset_flags(p_mst)
    p_mst.add_argument("--normalization", default="harmonic",
                       choices=["harmonic", "arithmetic"])
    p_mst.add_argument("--out-dir", default="mst_out")
    p_mst.set_defaults(func=_cmd_mst)
    return parser


def _walk_parsers(parser: argparse.ArgumentParser):
    stack = [parser]
    while stack:
        p = stack.pop()
        yield p
        for action in p._actions:  # noqa: SLF001 - argparse has no public walk
            if isinstance(action, argparse._SubParsersAction):  # noqa: SLF001
                stack.extend(action.choices.values())


def _parser_dests(parser: argparse.ArgumentParser) -> set[str]:
    return {
        a.dest
        for a in parser._actions  # noqa: SLF001
        if a.dest != "help" and not isinstance(a, argparse._SubParsersAction)  # noqa: SLF001
    }


def _apply_config_defaults(parser: argparse.ArgumentParser, config_values: dict) -> None:
    """Install config values as defaults on every (sub)parser that owns the flag.

    Subcommand parsers fill a fresh namespace, so defaults must be set on each
    of them, not just the top-level parser; explicitly passed flags still win.
    """
    all_dests = set()
    for p in _walk_parsers(parser):
        dests = _parser_dests(p)
        all_dests |= dests
        applicable = {k: v for k, v in config_values.items() if k in dests}
        if applicable:
            p.set_defaults(**applicable)
    unknown = sorted(set(config_values) - all_dests)
    if unknown:
        parser.error(f"unknown config keys: {', '.join(unknown)}")


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if known.config:
        config_values = json.loads(Path(known.config).read_text(encoding="utf-8"))
        if not isinstance(config_values, dict):
            parser.error("--config must contain a JSON object")
        _apply_config_defaults(parser, config_values)
    ns = parser.parse_args(argv)
    try:
        return ns.func(ns)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
