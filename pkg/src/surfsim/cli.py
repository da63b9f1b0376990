"""Command-line interface: config parsing, subcommand dispatch, output files.

Subcommands: simulate, renewal, analyze, export-graph, experiment,
regime-matrix.  Config values can come from a JSON file (--config); explicit
flags override file values.  Every stochastic subcommand requires --seed, and
identical invocations produce byte-identical outputs (timestamps live only in
the .meta.json sidecars).

Exit codes: 0 success, 1 failed checks, 2 configuration errors.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._hash import derive_run_seed
from .analytics import (
    chain,
    coalescence_estimate,
    export_subgraph,
    j_count,
    longest_edge_leaf_stats,
    reach_stats,
)
from .dists import make_distribution
from .experiments import (
    ExperimentConfig,
    monte_carlo_renewal_check,
    run_mean_v,
    run_regime_matrix,
    run_single_trajectory,
    run_streams,
)
from .io import (
    save_trajectory_binary,
    trajectory_header,
    trajectory_rows,
    write_csv,
    write_json,
    write_sidecar_meta,
    write_text,
)
from .renewal import renewal_sequence, squared_sum_diagnostic
from .simulate import LeafConfig, LeafPool, simulate

CANONICAL_ALPHAS = (1.2, 0.6, 0.3)


class ConfigError(Exception):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _add_dist_flags(sp, default_kind="zeta_pareto"):
    sp.add_argument("--dist", default=default_kind,
                    choices=["zeta_pareto", "inverse_power", "geometric", "table"],
                    help="delay distribution kind")
    sp.add_argument("--alpha", type=float, default=None,
                    help="tail exponent for zeta_pareto / inverse_power")
    sp.add_argument("--p", type=float, default=None,
                    help="success probability for geometric")
    sp.add_argument("--pmf", default=None,
                    help="comma-separated probabilities for table, e.g. 0.5,0.5")


def _add_leaf_config_flags(sp):
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--leaf-config", choices=["i", "ii", "iii"], default=None,
                   help="initial preference layout (default iii)")
    g.add_argument("--config-i", action="store_const", const="i",
                   dest="leaf_config", help="alias for --leaf-config i")
    g.add_argument("--config-ii", action="store_const", const="ii",
                   dest="leaf_config", help="alias for --leaf-config ii")
    g.add_argument("--config-iii", action="store_const", const="iii",
                   dest="leaf_config", help="alias for --leaf-config iii")


def _dist_spec_from_args(args) -> dict:
    kind = args.dist
    if kind in ("zeta_pareto", "inverse_power"):
        if args.alpha is None:
            raise ConfigError("alpha", f"required for kind {kind}")
        return {"kind": kind, "alpha": args.alpha}
    if kind == "geometric":
        if args.p is None:
            raise ConfigError("p", "required for kind geometric")
        return {"kind": kind, "success_prob": args.p}
    if args.pmf is None:
        raise ConfigError("pmf", "required for kind table")
    try:
        probs = [float(x) for x in args.pmf.split(",") if x.strip()]
    except ValueError:
        raise ConfigError("pmf", f"could not parse {args.pmf!r}") from None
    return {"kind": "table", "pmf": probs}


def _require_seed(args) -> int:
    if args.seed is None:
        raise ConfigError("seed", "required (no silent nondeterminism)")
    if args.seed < 0:
        raise ConfigError("seed", "must be non-negative")
    return args.seed


def _load_config_file(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError("config", f"invalid JSON in {path}: {e}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config", "top level must be an object")
    return doc


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    seed = _require_seed(args)
    spec = _dist_spec_from_args(args)
    leaf_config = LeafConfig(args.leaf_config or "iii")
    delay_seed, pool_seed = run_streams(seed, 0)
    traj = simulate(
        make_distribution(spec),
        args.k,
        args.n,
        LeafPool(leaf_config, pool_seed),
        delay_seed,
        retain_delays=args.retain_delays,
    )
    out = Path(args.out)
    write_csv(out, trajectory_header(traj), trajectory_rows(traj, args.thin))
    config = {"dist": spec, "k": args.k, "horizon": args.n, "seed": seed,
              "leaf_config": leaf_config.value, "thin": args.thin}
    write_sidecar_meta(out, config)
    if args.binary_out:
        save_trajectory_binary(args.binary_out, traj)
    print(f"simulate: wrote {out} ({args.n} steps, k={args.k}, seed={seed})")
    return 0


def cmd_renewal(args) -> int:
    spec = _dist_spec_from_args(args)
    dist = make_distribution(spec)
    seq = renewal_sequence(dist, args.n_max, method=args.method)
    out = Path(args.out)
    rows = zip(
        range(args.n_max + 1),
        seq.values,
        seq.partial_square_sums,
    )
    write_csv(out, ["n", "r_n", "partial_square_sum"], rows)
    write_sidecar_meta(out, {"dist": spec, "n_max": args.n_max, "method": args.method})
    if args.n_max >= 100:
        report = squared_sum_diagnostic(seq)
        print(
            f"renewal: wrote {out}; sum r_n^2 partial={report.partial_sum:.6g} "
            f"verdict={report.verdict} (fitted exponent {report.exponent:.3f})"
        )
    else:
        print(f"renewal: wrote {out}; sequence too short for a decay verdict")
    return 0


def cmd_analyze(args) -> int:
    seed = _require_seed(args)
    spec = _dist_spec_from_args(args)
    leaf_config = LeafConfig(args.leaf_config or "iii")
    delay_seed, pool_seed = run_streams(seed, 0)
    traj = simulate(
        make_distribution(spec), args.k, args.n,
        LeafPool(leaf_config, pool_seed), delay_seed,
    )
    wanted = [s.strip() for s in args.stats.split(",") if s.strip()]
    unknown = set(wanted) - {"reach", "chains", "j", "longest", "coalescence"}
    if unknown:
        raise ConfigError("stats", f"unknown statistics: {sorted(unknown)}")
    at = [int(x) for x in args.at.split(",")] if args.at else [args.n]
    for v in at:
        if not 1 <= v <= args.n:
            raise ConfigError("at", f"vertex {v} outside 1..{args.n}")
    report = {
        "config": {"dist": spec, "k": args.k, "horizon": args.n, "seed": seed,
                   "leaf_config": leaf_config.value},
        "vertices": {},
    }
    for v in at:
        entry = {}
        if "reach" in wanted:
            rs = reach_stats(traj, v)
            entry["reach"] = {
                "leaf_count": rs.leaf_count,
                "rightmost_leaf": rs.rightmost_leaf,
                "leftmost_leaf": rs.leftmost_leaf,
                "reach_size": rs.reach_size,
            }
        if "chains" in wanted:
            entry["chains"] = {}
            for kind in [*range(traj.k), "min"]:
                ch = chain(traj, v, kind)
                entry["chains"][str(kind)] = {
                    "length": len(ch.vertices),
                    "terminal_leaf": ch.terminal_leaf,
                }
        if "j" in wanted:
            entry["longest_edge_chain_hits"] = j_count(traj, v)
        if "longest" in wanted:
            le = longest_edge_leaf_stats(traj, v)
            entry["longest_edge_leaves"] = {
                "distinct": le.distinct_leaves,
                "multiplicities": {str(k): c for k, c in sorted(le.multiplicities.items())},
            }
        report["vertices"][str(v)] = entry
    if "coalescence" in wanted:
        est = coalescence_estimate(traj)
        report["coalescence"] = {
            "vertex": est,
            "censored_at_horizon": est is None,
        }
    out = Path(args.out)
    write_json(out, report)
    write_sidecar_meta(out, report["config"])
    print(f"analyze: wrote {out} ({len(at)} vertices)")
    return 0


def cmd_export_graph(args) -> int:
    seed = _require_seed(args)
    spec = _dist_spec_from_args(args)
    leaf_config = LeafConfig(args.leaf_config or "iii")
    delay_seed, pool_seed = run_streams(seed, 0)
    traj = simulate(
        make_distribution(spec), args.k, args.n,
        LeafPool(leaf_config, pool_seed), delay_seed,
    )
    text = export_subgraph(traj, args.n, fmt=args.format)
    out = Path(args.out)
    write_text(out, text)
    write_sidecar_meta(out, {"dist": spec, "k": args.k, "n": args.n, "seed": seed,
                             "format": args.format})
    print(f"export-graph: wrote {out} ({args.format}, n={args.n})")
    return 0


def _merged_experiment_values(args) -> dict:
    doc = _load_config_file(args.config) if args.config else {}
    merged = {
        "dist": doc.get("dist"),
        "alphas": doc.get("alphas"),
        "mode": doc.get("mode", "single"),
        "k": doc.get("k", 2),
        "horizon": doc.get("horizon", 100_000),
        "runs": doc.get("runs", 1000),
        "thinning": doc.get("thinning", 100),
        "seed": doc.get("seed"),
        "jobs": doc.get("jobs"),
        "leaf_config": doc.get("leaf_config", "iii"),
    }
    if args.mode is not None:
        merged["mode"] = args.mode
    if args.alphas is not None:
        merged["alphas"] = [float(x) for x in args.alphas.split(",")]
    if args.k is not None:
        merged["k"] = args.k
    if args.horizon is not None:
        merged["horizon"] = args.horizon
    if args.runs is not None:
        merged["runs"] = args.runs
    if args.thin is not None:
        merged["thinning"] = args.thin
    if args.seed is not None:
        merged["seed"] = args.seed
    if args.jobs is not None:
        merged["jobs"] = args.jobs
    return merged


def cmd_experiment(args) -> int:
    vals = _merged_experiment_values(args)
    if vals["seed"] is None:
        raise ConfigError("seed", "required (no silent nondeterminism)")
    if vals["mode"] not in ("single", "mean"):
        raise ConfigError("mode", f"must be 'single' or 'mean', got {vals['mode']!r}")
    if vals["alphas"]:
        specs = [({"kind": "zeta_pareto", "alpha": a}, f"alpha{a:g}") for a in vals["alphas"]]
    elif vals["dist"]:
        specs = [(vals["dist"], vals["dist"].get("kind", "dist"))]
    else:
        raise ConfigError("dist", "provide either 'dist' or 'alphas'")
    out_dir = Path(args.out_dir)
    written = []
    report = {"mode": vals["mode"], "seed": vals["seed"], "series": []}
    for idx, (spec, label) in enumerate(specs):
        cfg = ExperimentConfig(
            dist_spec=spec,
            master_seed=derive_run_seed(vals["seed"], idx),
            k=vals["k"],
            horizon=vals["horizon"],
            leaf_config=LeafConfig(vals["leaf_config"]),
            runs=1 if vals["mode"] == "single" else vals["runs"],
            thinning=vals["thinning"],
            jobs=vals["jobs"],
        )
        if vals["mode"] == "single":
            series = run_single_trajectory(cfg)
            out = out_dir / f"v_single_{label}.csv"
            write_csv(out, ["n", "V_n"], zip(series.indices, series.values))
        else:
            series = run_mean_v(cfg)
            out = out_dir / f"v_mean_{label}.csv"
            write_csv(out, ["n", "mean_V_n"], zip(series.indices, series.values))
        write_sidecar_meta(out, series.config)
        written.append(str(out))
        report["series"].append({"file": str(out), "config": series.config})
    report_path = out_dir / f"experiment_{vals['mode']}_report.json"
    write_json(report_path, report)
    write_sidecar_meta(report_path, report)
    print(f"experiment: wrote {len(written)} series + {report_path}")
    return 0


def cmd_regime_matrix(args) -> int:
    seed = _require_seed(args)
    if args.preset == "canonical":
        # one representative per regime; geometric is the light-tail row
        # (its running maxima settle well inside the default horizon)
        specs = [
            {"kind": "geometric", "success_prob": 0.5},
            {"kind": "zeta_pareto", "alpha": 0.6},
            {"kind": "zeta_pareto", "alpha": 0.3},
        ]
    else:
        specs = [_dist_spec_from_args(args)]
    configs = [
        ExperimentConfig(
            dist_spec=spec,
            master_seed=derive_run_seed(seed, idx),
            k=args.k,
            horizon=args.horizon,
            runs=args.runs,
            jobs=args.jobs,
        )
        for idx, spec in enumerate(specs)
    ]
    reports = run_regime_matrix(configs)
    out = Path(args.out)
    write_json(out, {"reports": [r.to_dict() for r in reports], "seed": seed})
    write_sidecar_meta(out, {"seed": seed, "k": args.k, "horizon": args.horizon,
                             "runs": args.runs})
    any_fail = False
    for rep in reports:
        for cell in rep.cells:
            mark = {"pass": "PASS", "fail": "FAIL", "inconclusive": "INCONCLUSIVE"}[cell.verdict]
            print(f"[{rep.regime_label}] {cell.statistic}: {mark} ({cell.observed})")
        any_fail = any_fail or rep.failed
    print(f"regime-matrix: wrote {out}")
    return 1 if any_fail else 0


def cmd_renewal_check(args) -> int:
    seed = _require_seed(args)
    spec = _dist_spec_from_args(args)
    dist = make_distribution(spec)
    if args.min_of_k > 1:
        dist = dist.min_of_k(args.min_of_k)
    report = monte_carlo_renewal_check(dist, args.n_probe, args.runs, seed)
    print(
        f"renewal-check: empirical={report.empirical:.5f} "
        f"predicted={report.predicted:.5f} sigma={report.sigma:.2g} "
        f"{'OK (within 4 sigma)' if report.within_4_sigma else 'MISMATCH'}"
    )
    return 0 if report.within_4_sigma else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="surfsim",
        description="Simulator and analytics for k-choice subtractive random forests",
    )
    parser.add_argument("--version", action="version", version=f"surfsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="generate one trajectory, dump CSV")
    _add_dist_flags(sp)
    _add_leaf_config_flags(sp)
    sp.add_argument("--k", type=int, default=2, help="choices per step")
    sp.add_argument("--n", type=int, default=100_000, help="horizon (steps)")
    sp.add_argument("--seed", type=int, default=None, help="master seed (required)")
    sp.add_argument("--thin", type=int, default=1, help="output stride")
    sp.add_argument("--retain-delays", action="store_true",
                    help="include delay columns in the dump")
    sp.add_argument("--out", default="trajectory.csv", help="output CSV path")
    sp.add_argument("--binary-out", default=None, help="optional binary snapshot path")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("renewal", help="chain hitting probabilities r_n")
    _add_dist_flags(sp)
    sp.add_argument("--n-max", type=int, default=100_000, help="last index to compute")
    sp.add_argument("--method", choices=["auto", "direct", "fft"], default="auto")
    sp.add_argument("--out", default="renewal.csv", help="output CSV path")
    sp.set_defaults(func=cmd_renewal)

    sp = sub.add_parser("analyze", help="reach/chain statistics of a trajectory")
    _add_dist_flags(sp)
    _add_leaf_config_flags(sp)
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--n", type=int, default=10_000, help="horizon (steps)")
    sp.add_argument("--seed", type=int, default=None, help="master seed (required)")
    sp.add_argument("--at", default=None, help="comma-separated vertices (default: horizon)")
    sp.add_argument("--stats", default="reach,chains,j,longest,coalescence",
                    help="statistics to compute")
    sp.add_argument("--out", default="analysis.json", help="output JSON path")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("export-graph", help="reach subgraph as DOT or JSON")
    _add_dist_flags(sp)
    _add_leaf_config_flags(sp)
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--n", type=int, default=150, help="root vertex / horizon")
    sp.add_argument("--seed", type=int, default=None, help="master seed (required)")
    sp.add_argument("--format", choices=["dot", "json"], default="dot")
    sp.add_argument("--out", default=None, help="output path (default reach_<n>.<fmt>)")
    sp.set_defaults(func=cmd_export_graph)

    sp = sub.add_parser("experiment", help="value-trace experiments (single or mean)")
    sp.add_argument("--config", default=None, help="JSON config file")
    sp.add_argument("--mode", choices=["single", "mean"], default=None)
    sp.add_argument("--alphas", default=None, help="comma-separated tail exponents")
    sp.add_argument("--k", type=int, default=None)
    sp.add_argument("--horizon", type=int, default=None)
    sp.add_argument("--runs", type=int, default=None)
    sp.add_argument("--thin", type=int, default=None)
    sp.add_argument("--seed", type=int, default=None, help="master seed (required)")
    sp.add_argument("--jobs", type=int, default=None, help="worker threads")
    sp.add_argument("--out-dir", default="out", help="output directory")
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("regime-matrix", help="consistency-table checks")
    _add_dist_flags(sp)
    sp.add_argument("--preset", choices=["canonical"], default=None,
                    help="canonical = geometric(1/2) + alpha 1.2/0.6/0.3")
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--horizon", type=int, default=10_000)
    sp.add_argument("--runs", type=int, default=200)
    sp.add_argument("--seed", type=int, default=None, help="master seed (required)")
    sp.add_argument("--jobs", type=int, default=None)
    sp.add_argument("--out", default="regime_matrix.json", help="output JSON path")
    sp.set_defaults(func=cmd_regime_matrix)

    sp = sub.add_parser("renewal-check", help="Monte Carlo chains vs the recursion")
    _add_dist_flags(sp)
    sp.add_argument("--n-probe", type=int, default=500)
    sp.add_argument("--runs", type=int, default=10_000)
    sp.add_argument("--min-of-k", type=int, default=1,
                    help="check the minimum law of this many copies")
    sp.add_argument("--seed", type=int, default=None, help="master seed (required)")
    sp.set_defaults(func=cmd_renewal_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "out", None) is None and args.command == "export-graph":
        args.out = f"reach_{args.n}.{args.format}"
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
