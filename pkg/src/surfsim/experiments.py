"""Monte Carlo harness: value-trace experiments, the regime test matrix,
k-choice sweeps, and chain-vs-recursion consistency checks.

Almost-sure statements cannot be verified from finite runs, so every matrix
cell is a declared finite-horizon proxy with explicit thresholds:

* bounded statistic  -- the running maximum over the second half of the
  horizon grows in fewer than 5% of runs;
* diverging statistic -- the cross-run median strictly increases across the
  decade checkpoints (horizon/100, horizon/10, horizon);
* rightmost-leaf divergence -- the per-run maximum of |R| exceeds 1000 in at
  least 90% of runs;
* leaf-count dips (heavy tails) -- every run shows at least ``dip_floor``
  indices whose shortest delay overshoots the whole history, each with at
  most two reachable leaves;
* weak leaf-count growth -- the empirical P(leaf count <= m) decreases
  strictly across the decade checkpoints.

Runs are embarrassingly parallel; per-run seeds derive from the master seed
by a published mixing function and results are reduced in run order, so
reports are bit-identical for any worker count.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ._hash import DELAY_SALT, LEAF_SALT, derive_run_seed, derive_substream
from .analytics import _reach_core, extreme_leaf_curves, j_count, reach_stats
from .dists import DelayDistribution, Regime, RegimeLabel, classify_regime, make_distribution
from .renewal import SquaredSumReport, renewal_sequence, squared_sum_diagnostic
from .simulate import LeafConfig, LeafPool, simulate, stream_v

BOUNDED_GROWTH_FRAC = 0.05
R_BOUNDED_FRAC = 0.90
R_DIVERGENCE_FRAC = 0.90
R_DIVERGENCE_DEPTH = 1000
SQUARED_SUM_N_MAX = 10 ** 5
_DIP_SAMPLE_LIMIT = 32


def run_streams(master_seed: int, run_index: int) -> Tuple[int, int]:
    """(delay seed, leaf-pool seed) for one Monte Carlo run.

    Published derivation: run seed = derive_run_seed(master, index), then
    fixed salts split it into the two independent sub-streams.
    """
    rs = derive_run_seed(master_seed, run_index)
    return derive_substream(rs, DELAY_SALT), derive_substream(rs, LEAF_SALT)


@dataclass(frozen=True)
class ExperimentConfig:
    """Complete description of one experiment; echoed into every report."""

    dist_spec: dict
    master_seed: int
    k: int = 2
    horizon: int = 10_000
    leaf_config: LeafConfig = LeafConfig.IID_UNIFORM
    runs: int = 200
    thinning: int = 1
    outputs: Tuple[str, ...] = ()
    jobs: Optional[int] = None
    checkpoint_stride: int = 100
    dip_floor: int = 10
    tightness_m: int = 10

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")
        if self.master_seed < 0:
            raise ValueError("master_seed must be non-negative")
        if isinstance(self.leaf_config, str):
            object.__setattr__(self, "leaf_config", LeafConfig(self.leaf_config))

    def echo(self) -> dict:
        return {
            "dist": self.dist_spec,
            "k": self.k,
            "horizon": self.horizon,
            "leaf_config": self.leaf_config.value,
            "runs": self.runs,
            "master_seed": self.master_seed,
            "thinning": self.thinning,
            "checkpoint_stride": self.checkpoint_stride,
            "dip_floor": self.dip_floor,
            "tightness_m": self.tightness_m,
        }

    def effective_jobs(self) -> int:
        return self.jobs if self.jobs else (os.cpu_count() or 1)


@dataclass
class SeriesResult:
    """One emitted series (a value trace or a cross-run mean)."""

    statistic: str
    indices: np.ndarray
    values: np.ndarray
    config: dict


def _build_dist(cfg: ExperimentConfig) -> DelayDistribution:
    dist = make_distribution(cfg.dist_spec)
    _warm(dist)
    return dist


def _warm(dist: DelayDistribution) -> None:
    # touch lazy caches in the main thread before workers share the object
    dist.tail(1)
    dist.sample(np.random.default_rng(0))


def run_single_trajectory(cfg: ExperimentConfig) -> SeriesResult:
    """Thinned V_n trace of a single run (random-preference configuration)."""
    if cfg.leaf_config is not LeafConfig.IID_UNIFORM:
        raise ValueError("single-trajectory traces are defined for leaf config iii")
    dist = _build_dist(cfg)
    delay_seed, pool_seed = run_streams(cfg.master_seed, 0)
    series = stream_v(
        dist,
        cfg.k,
        cfg.horizon,
        LeafPool(cfg.leaf_config, pool_seed),
        delay_seed,
        thinning=cfg.thinning,
    )
    return SeriesResult("v_trace", series.indices, series.values, cfg.echo())


def run_mean_v(cfg: ExperimentConfig) -> SeriesResult:
    """Per-index arithmetic mean of V_n across runs.

    Accumulation follows run order regardless of the worker count, so means
    are bit-stable for a fixed config.
    """
    dist = _build_dist(cfg)

    def one_run(i: int) -> np.ndarray:
        delay_seed, pool_seed = run_streams(cfg.master_seed, i)
        return stream_v(
            dist,
            cfg.k,
            cfg.horizon,
            LeafPool(cfg.leaf_config, pool_seed),
            delay_seed,
            thinning=cfg.thinning,
        ).values

    indices = np.arange(cfg.thinning, cfg.horizon + 1, cfg.thinning, dtype=np.int64)
    acc = np.zeros(len(indices))
    with ThreadPoolExecutor(max_workers=cfg.effective_jobs()) as ex:
        for vals in ex.map(one_run, range(cfg.runs)):
            acc += vals
    return SeriesResult("mean_v", indices, acc / cfg.runs, cfg.echo())


# ---------------------------------------------------------------------------
# regime matrix
# ---------------------------------------------------------------------------


@dataclass
class MatrixCell:
    """Verdict for one consistency-table cell under the declared proxy."""

    statistic: str
    table_row: str
    regime_column: str
    expected: str
    observed: str
    verdict: str  # pass / fail / inconclusive

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "table_row": self.table_row,
            "regime_column": self.regime_column,
            "expected": self.expected,
            "observed": self.observed,
            "verdict": self.verdict,
        }


@dataclass
class RegimeReport:
    """Classification plus per-cell verdicts for one experiment config."""

    config: dict
    regime_label: str
    mean_z: float
    mean_min_k: float
    aperiodic: bool
    cells: List[MatrixCell]
    diagnostics: dict

    @property
    def failed(self) -> bool:
        return any(c.verdict == "fail" for c in self.cells)

    def cell(self, statistic: str) -> MatrixCell:
        for c in self.cells:
            if c.statistic == statistic:
                return c
        raise KeyError(statistic)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "regime": self.regime_label,
            "mean_z": _json_num(self.mean_z),
            "mean_min_k": _json_num(self.mean_min_k),
            "aperiodic": self.aperiodic,
            "cells": [c.to_dict() for c in self.cells],
            "diagnostics": self.diagnostics,
            "failed": self.failed,
        }


def _json_num(x: float):
    return "inf" if math.isinf(x) else x


@dataclass
class _RunStats:
    lam: np.ndarray
    abs_r: np.ndarray
    abs_l: np.ndarray
    dip_count: int
    dip_lambda_max: int


def _matrix_run(dist, cfg: ExperimentConfig, grid: np.ndarray, run_index: int) -> _RunStats:
    delay_seed, pool_seed = run_streams(cfg.master_seed, run_index)
    traj = simulate(
        dist, cfg.k, cfg.horizon, LeafPool(cfg.leaf_config, pool_seed), delay_seed
    )
    # leaf counts need a backward sweep per checkpoint; the extreme leaves
    # come from the exact forward recursion at every index
    lam = np.empty(len(grid))
    for gi, g in enumerate(grid):
        _, _, leaf_hits = _reach_core(traj.delays, int(g))
        lam[gi] = np.unique(leaf_hits).size
    rightmost, leftmost = extreme_leaf_curves(traj)
    abs_r = (-rightmost[1:]).astype(np.float64)
    abs_l = (-leftmost[1:]).astype(np.float64)
    steps = np.arange(1, cfg.horizon + 1, dtype=np.int64)
    dips = np.nonzero(traj.delays.min(axis=1) >= steps)[0] + 1
    dip_lambda_max = 0
    for d in dips[:_DIP_SAMPLE_LIMIT]:
        dip_lambda_max = max(dip_lambda_max, reach_stats(traj, int(d)).leaf_count)
    return _RunStats(lam, abs_r, abs_l, len(dips), dip_lambda_max)


def _frac_growing(curves: np.ndarray, grid: np.ndarray, split: int) -> float:
    """Fraction of runs whose running max still grows after the split point."""
    early = curves[:, grid <= split].max(axis=1)
    late = curves.max(axis=1)
    return float(np.mean(late > early))


def _decade_columns(grid: np.ndarray, decades: Sequence[int]) -> List[int]:
    # snap each checkpoint to the first grid point at or above it
    return [min(int(np.searchsorted(grid, d)), len(grid) - 1) for d in decades]


def _median_increasing(curves: np.ndarray, grid: np.ndarray, decades: Sequence[int]) -> Tuple[str, List[float]]:
    meds = [float(np.median(curves[:, j])) for j in _decade_columns(grid, decades)]
    if all(b > a for a, b in zip(meds, meds[1:])):
        return "pass", meds
    if any(b == a for a, b in zip(meds, meds[1:])):
        return "inconclusive", meds
    return "fail", meds


def _frac_verdict(frac: float, threshold: float, runs: int, pass_below: bool) -> str:
    # straddle test against the Monte Carlo error of the observed fraction
    sigma = math.sqrt(frac * (1.0 - frac) / runs)
    if abs(frac - threshold) <= 2.0 * sigma:
        return "inconclusive"
    ok = frac < threshold if pass_below else frac > threshold
    return "pass" if ok else "fail"


def run_regime_matrix(
    configs: Union[ExperimentConfig, Sequence[ExperimentConfig]]
) -> List[RegimeReport]:
    """Evaluate the consistency-table proxies for each config."""
    if isinstance(configs, ExperimentConfig):
        configs = [configs]
    return [_matrix_single(cfg) for cfg in configs]


def _matrix_single(cfg: ExperimentConfig) -> RegimeReport:
    dist = _build_dist(cfg)
    regime = classify_regime(dist, cfg.k)
    column = regime.label.value
    stride = min(cfg.checkpoint_stride, max(1, cfg.horizon // 10))
    grid = np.arange(stride, cfg.horizon + 1, stride)
    decades = [max(1, cfg.horizon // 100), max(1, cfg.horizon // 10), cfg.horizon]
    # warm the jitted kernels before the pool shares them
    _matrix_run(dist, cfg, grid[:1], 0)

    with ThreadPoolExecutor(max_workers=cfg.effective_jobs()) as ex:
        stats = list(ex.map(lambda i: _matrix_run(dist, cfg, grid, i), range(cfg.runs)))
    lam = np.stack([s.lam for s in stats])
    abs_r = np.stack([s.abs_r for s in stats])
    abs_l = np.stack([s.abs_l for s in stats])
    dip_counts = np.array([s.dip_count for s in stats])
    dip_lambda_max = max(s.dip_lambda_max for s in stats)

    # leaf counts live on the checkpoint grid; extreme leaves on every index
    steps = np.arange(1, cfg.horizon + 1)
    split = cfg.horizon // 2
    cells: List[MatrixCell] = []
    diagnostics: Dict[str, object] = {
        "grid_stride": stride,
        "decades": decades,
        "dip_count_min": int(dip_counts.min()),
        "dip_count_mean": float(dip_counts.mean()),
        "dip_lambda_max": int(dip_lambda_max),
    }

    def bounded_cell(statistic, table_row, curves, axis):
        frac = _frac_growing(curves, axis, split)
        cells.append(
            MatrixCell(
                statistic,
                table_row,
                column,
                "bounded (running max stabilizes)",
                f"running max grew after n={split} in {frac:.1%} of runs",
                _frac_verdict(frac, BOUNDED_GROWTH_FRAC, cfg.runs, pass_below=True),
            )
        )

    def diverging_cell(statistic, table_row, curves, axis):
        verdict, meds = _median_increasing(curves, axis, decades)
        cells.append(
            MatrixCell(
                statistic,
                table_row,
                column,
                "diverges (median grows across decades)",
                f"median at {decades} = {[round(m, 1) for m in meds]}",
                verdict,
            )
        )

    if regime.label is RegimeLabel.LIGHT:
        bounded_cell("strong_L", "L_n -> -inf a.s.: no", abs_l, steps)
        bounded_cell("strong_lambda", "Lambda_n -> inf a.s.: no", lam, grid)
        bounded_cell("strong_R", "R_n bounded a.s.: yes", abs_r, steps)
    elif regime.label is RegimeLabel.MODERATE:
        diverging_cell("strong_L", "L_n -> -inf a.s.: yes", abs_l, steps)
        diverging_cell("strong_lambda", "Lambda_n -> inf a.s.: yes", lam, grid)
        frac_r = _frac_growing(abs_r, steps, split)
        cells.append(
            MatrixCell(
                "strong_R",
                "R_n bounded a.s.: yes",
                column,
                f"bounded (stable in >= {R_BOUNDED_FRAC:.0%} of runs)",
                f"running max of |R| stable after n={split} in {1 - frac_r:.1%} of runs",
                _frac_verdict(frac_r, 1.0 - R_BOUNDED_FRAC, cfg.runs, pass_below=True),
            )
        )
    else:
        diverging_cell("strong_L", "L_n -> -inf a.s.: yes", abs_l, steps)
        dips_ok = int(dip_counts.min()) >= cfg.dip_floor and dip_lambda_max <= 2
        cells.append(
            MatrixCell(
                "strong_lambda",
                "Lambda_n -> inf a.s.: no",
                column,
                f"dips detected (>= {cfg.dip_floor} overshoot indices per run, "
                "leaf count <= 2 at each)",
                f"min dips/run = {int(dip_counts.min())}, "
                f"max leaf count at dips = {dip_lambda_max}",
                "pass" if dips_ok else "fail",
            )
        )
        frac_deep = float(np.mean(abs_r.max(axis=1) > R_DIVERGENCE_DEPTH))
        cells.append(
            MatrixCell(
                "strong_R",
                "R_n bounded a.s.: no",
                column,
                f"|R| exceeds {R_DIVERGENCE_DEPTH} in >= {R_DIVERGENCE_FRAC:.0%} of runs",
                f"|R| max exceeded {R_DIVERGENCE_DEPTH} in {frac_deep:.1%} of runs",
                _frac_verdict(frac_deep, R_DIVERGENCE_FRAC, cfg.runs, pass_below=False),
            )
        )
        sq = squared_sum_diagnostic(
            renewal_sequence(dist, SQUARED_SUM_N_MAX, method="fft")
        )
        diagnostics["squared_sum"] = {
            "verdict": sq.verdict,
            "partial_sum": sq.partial_sum,
            "exponent": sq.exponent,
        }
        cells.append(
            MatrixCell(
                "squared_sum",
                "Lambda_n -> inf in prob.: yes if sum r_n^2 < inf",
                column,
                "sum of squared renewal values converges",
                f"verdict {sq.verdict}, fitted exponent {sq.exponent:.3f}",
                "pass" if sq.verdict == "converged" else
                ("inconclusive" if sq.verdict == "inconclusive" else "fail"),
            )
        )
        di = _decade_columns(grid, decades)
        fr = [float(np.mean(lam[:, j] <= cfg.tightness_m)) for j in di]
        tight_ok = all(b < a for a, b in zip(fr, fr[1:]))
        cells.append(
            MatrixCell(
                "weak_lambda",
                "Lambda_n -> inf in prob.: yes if sum r_n^2 < inf",
                column,
                f"P(leaf count <= {cfg.tightness_m}) decreases across decades",
                f"P at {decades} = {[round(f, 3) for f in fr]}",
                "pass" if tight_ok else "fail",
            )
        )

    return RegimeReport(
        config=cfg.echo(),
        regime_label=column,
        mean_z=regime.mean_z,
        mean_min_k=regime.mean_min_k,
        aperiodic=regime.aperiodic,
        cells=cells,
        diagnostics=diagnostics,
    )


def run_k_choice_sweep(
    dist_spec: dict,
    k_list: Sequence[int],
    horizon: int,
    runs: int,
    master_seed: int,
    jobs: Optional[int] = None,
) -> List[RegimeReport]:
    """Regime matrix per k, with the regime reclassified for each k.

    The heavy-tail dip floor is relaxed to one index per run here: away from
    the canonical heavy case the per-run overshoot count has no guaranteed
    floor, only a growing mean (recorded in the diagnostics).
    """
    reports = []
    for k in k_list:
        cfg = ExperimentConfig(
            dist_spec=dist_spec,
            master_seed=derive_substream(master_seed, k),
            k=k,
            horizon=horizon,
            runs=runs,
            jobs=jobs,
            dip_floor=1,
        )
        reports.append(_matrix_single(cfg))
    return reports


# ---------------------------------------------------------------------------
# chain Monte Carlo vs the renewal recursion
# ---------------------------------------------------------------------------


@dataclass
class RenewalCheckReport:
    n_probe: int
    runs: int
    empirical: float
    predicted: float
    sigma: float
    within_4_sigma: bool
    config: dict


def simulate_chain_terminals(
    dist: DelayDistribution, n_probe: int, runs: int, rng: np.random.Generator
) -> np.ndarray:
    """Terminal leaf of a single-choice chain from n_probe, for many chains.

    All chains advance in lockstep, drawing only for the still-active ones,
    so the whole batch is vectorized.
    """
    positions = np.full(runs, n_probe, dtype=np.int64)
    active = positions >= 1
    while np.any(active):
        draws = dist.sample_array(rng, int(active.sum()))
        positions[active] -= draws
        active = positions >= 1
    return positions


def monte_carlo_renewal_check(
    dist: DelayDistribution, n_probe: int, runs: int, master_seed: int
) -> RenewalCheckReport:
    """Empirical frequency of chains from n_probe terminating at vertex 0,
    against the recursion value, with a 4-sigma binomial agreement verdict."""
    if n_probe > 2000:
        raise ValueError("n_probe is capped at 2000 for the chain check")
    _warm(dist)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(master_seed)))
    terminals = simulate_chain_terminals(dist, n_probe, runs, rng)
    freq = float(np.mean(terminals == 0))
    predicted = float(renewal_sequence(dist, n_probe).values[-1])
    sigma = math.sqrt(max(predicted * (1.0 - predicted), 0.0) / runs)
    return RenewalCheckReport(
        n_probe=n_probe,
        runs=runs,
        empirical=freq,
        predicted=predicted,
        sigma=sigma,
        within_4_sigma=abs(freq - predicted) <= 4.0 * sigma,
        config={"dist": dist.spec(), "runs": runs, "master_seed": master_seed},
    )


def expected_longest_edge_hits(dist: DelayDistribution, k: int, n: int) -> float:
    """Convolution value of E[count of min-chain vertices whose longest
    delay reaches a leaf]: sum_m v_{n-m} * P(max of k delays >= m)."""
    v = renewal_sequence(dist.min_of_k(k), n).values
    p = dist.tail_array(n)
    p_max = 1.0 - (1.0 - p) ** k
    return float(np.dot(v[: n][::-1], p_max[:n]))


# ---------------------------------------------------------------------------
# figure-style profiles
# ---------------------------------------------------------------------------


def figure_single_runs(
    alphas: Sequence[float],
    horizon: int = 100_000,
    master_seed: int = 0,
    thinning: int = 1,
    kind: str = "zeta_pareto",
) -> Dict[float, SeriesResult]:
    """Single-run V_n traces for several tail exponents (one CSV per alpha)."""
    out = {}
    for idx, alpha in enumerate(alphas):
        cfg = ExperimentConfig(
            dist_spec={"kind": kind, "alpha": alpha},
            master_seed=derive_run_seed(master_seed, idx),
            horizon=horizon,
            runs=1,
            thinning=thinning,
        )
        out[alpha] = run_single_trajectory(cfg)
    return out


def figure_mean_runs(
    alphas: Sequence[float],
    horizon: int = 100_000,
    runs: int = 1000,
    master_seed: int = 0,
    thinning: int = 100,
    jobs: Optional[int] = None,
    kind: str = "zeta_pareto",
) -> Dict[float, SeriesResult]:
    """Cross-run mean V_n for several tail exponents."""
    out = {}
    for idx, alpha in enumerate(alphas):
        cfg = ExperimentConfig(
            dist_spec={"kind": kind, "alpha": alpha},
            master_seed=derive_run_seed(master_seed, idx),
            horizon=horizon,
            runs=runs,
            thinning=thinning,
            jobs=jobs,
        )
        out[alpha] = run_mean_v(cfg)
    return out
