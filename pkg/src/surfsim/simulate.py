"""Trajectory generation for the k-choice coloring process.

Each step n >= 1 draws k independent delays, resolves the k candidate
parents n - Z^(j) (stored history for positive indices, the leaf pool for
non-positive ones), and adopts the color/value of the candidate with the
lowest preference value, ties going to the lowest choice index.

Determinism contract: a trajectory is a pure function of
(distribution, k, horizon, pool, seed).  Delays and leaf values come from
two independent sub-streams -- delays from a PCG64 generator seeded by
``seed``, leaf values from the counter-based hash in :mod:`surfsim._hash`
keyed by the pool's own seed -- so extending the horizon never perturbs
leaf values.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from numba import njit

from ._hash import MASK64, U_C1, U_C2, U_C3, U_LEAF_SALT, leaf_unit
from .dists import DelayDistribution

_CHUNK = 1 << 16
_U_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_INV53 = 2.0 ** -53


class LeafConfig(str, Enum):
    """Initial preference layouts for the leaf pool.

    i   -- values strictly increase with leaf age; leaf 0 is globally best
    ii  -- values strictly decrease with leaf age; older is always better
    iii -- i.i.d. uniform values, keyed by (seed, leaf index)
    """

    INCREASING_BEST0 = "i"
    DECREASING_OLD_BEST = "ii"
    IID_UNIFORM = "iii"


_CONFIG_CODE = {
    LeafConfig.INCREASING_BEST0: 1,
    LeafConfig.DECREASING_OLD_BEST: 2,
    LeafConfig.IID_UNIFORM: 3,
}


@dataclass(frozen=True)
class LeafPool:
    """Lazy, reproducible preference values for leaves i <= 0.

    config i uses U_i = |i| / (|i| + 1) (codomain [0, 1), minimum at i = 0);
    config ii uses U_i = 1 / (|i| + 1) (codomain (0, 1], infimum 0 never
    attained); config iii hashes (seed, i) to a uniform in [0, 1).  Only the
    order matters for the process; the maps are fixed so the value surface
    is reproducible.
    """

    config: LeafConfig
    seed: int = 0

    def leaf_value(self, i: int) -> float:
        if i > 0:
            raise ValueError(f"leaf index must be <= 0, got {i}")
        if self.config is LeafConfig.IID_UNIFORM:
            return leaf_unit(self.seed, i)
        a = float(-i)
        if self.config is LeafConfig.INCREASING_BEST0:
            return a / (a + 1.0)
        return 1.0 / (a + 1.0)


@dataclass
class Trajectory:
    """One realized run: delay history and the (color, value) sequences.

    ``colors[n]`` / ``values[n]`` hold (C_n, V_n) for 1 <= n <= horizon;
    index 0 carries the leaf-0 sentinel.  ``delays`` has shape
    (horizon, k) with row n-1 holding the step-n delay vector, or None when
    the run was generated without analytics retention.
    """

    dist_spec: dict
    k: int
    horizon: int
    pool: LeafPool
    seed: int
    colors: np.ndarray
    values: np.ndarray
    delays: Optional[np.ndarray]

    @property
    def has_delays(self) -> bool:
        return self.delays is not None

    def delay_row(self, n: int) -> np.ndarray:
        """Delay vector (Z^(1), ..., Z^(k)) drawn at step n."""
        if self.delays is None:
            raise ValueError("delay matrix was not retained for this trajectory")
        if not 1 <= n <= self.horizon:
            raise ValueError(f"step {n} outside 1..{self.horizon}")
        return self.delays[n - 1]

    def color_value(self, n: int):
        """(C_n, V_n); non-positive n resolves through the leaf pool."""
        if n <= 0:
            return n, self.pool.leaf_value(n)
        if n > self.horizon:
            raise ValueError(f"step {n} beyond horizon {self.horizon}")
        return int(self.colors[n]), float(self.values[n])


@dataclass
class ThinnedSeries:
    """(n, C_n, V_n) samples at a fixed stride, plus the generating run."""

    indices: np.ndarray
    colors: np.ndarray
    values: np.ndarray
    trajectory: Trajectory


@njit(cache=True, nogil=True)
def _splitmix64_nb(x):
    x = (x + U_C1) & _U_MASK
    x = ((x ^ (x >> np.uint64(30))) * U_C2) & _U_MASK
    x = ((x ^ (x >> np.uint64(27))) * U_C3) & _U_MASK
    return x ^ (x >> np.uint64(31))


@njit(cache=True, nogil=True)
def _leaf_value_nb(config_code, leaf_seed, m):
    # m <= 0; must stay bit-identical to LeafPool.leaf_value
    if config_code == 3:
        a = np.uint64(-m)
        h = _splitmix64_nb(((leaf_seed ^ U_LEAF_SALT) + a * U_C1) & _U_MASK)
        return np.float64(h >> np.uint64(11)) * _INV53
    a = np.float64(-m)
    if config_code == 1:
        return a / (a + 1.0)
    return 1.0 / (a + 1.0)


@njit(cache=True, nogil=True)
def _color_kernel(delays, start_n, colors, values, config_code, leaf_seed):
    nsteps, k = delays.shape
    for t in range(nsteps):
        n = start_n + t
        best_v = np.inf
        best_c = np.int64(0)
        for j in range(k):
            m = n - delays[t, j]
            if m >= 1:
                v = values[m]
                c = colors[m]
            else:
                v = _leaf_value_nb(config_code, leaf_seed, m)
                c = m
            if v < best_v:
                best_v = v
                best_c = c
        values[n] = best_v
        colors[n] = best_c


def _delay_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def simulate(
    dist: DelayDistribution,
    k: int,
    horizon: int,
    pool: LeafPool,
    seed: int,
    retain_delays: bool = True,
) -> Trajectory:
    """Generate one trajectory of the k-choice process.

    The full delay matrix is retained by default so the run can be analyzed
    backward; pass ``retain_delays=False`` (or use :func:`stream_v`) for
    long value-only runs.
    """
    _validate_run_args(k, horizon, seed)
    rng = _delay_rng(seed)
    colors = np.zeros(horizon + 1, dtype=np.int64)
    values = np.empty(horizon + 1, dtype=np.float64)
    values[0] = pool.leaf_value(0)
    code = _CONFIG_CODE[pool.config]
    leaf_seed = np.uint64(pool.seed & MASK64)
    if retain_delays:
        delays = dist.sample_array(rng, (horizon, k))
        _color_kernel(delays, np.int64(1), colors, values, code, leaf_seed)
    else:
        delays = None
        pos = 0
        while pos < horizon:
            step = min(_CHUNK, horizon - pos)
            chunk = dist.sample_array(rng, (step, k))
            _color_kernel(chunk, np.int64(pos + 1), colors, values, code, leaf_seed)
            pos += step
    return Trajectory(
        dist_spec=dist.spec(),
        k=k,
        horizon=horizon,
        pool=pool,
        seed=seed,
        colors=colors,
        values=values,
        delays=delays,
    )


def stream_v(
    dist: DelayDistribution,
    k: int,
    horizon: int,
    pool: LeafPool,
    seed: int,
    thinning: int = 1,
    retain_delays: bool = False,
) -> ThinnedSeries:
    """Run the process and return (n, C_n, V_n) at every ``thinning`` steps.

    Values are identical to :func:`simulate` at the sampled indices; delays
    are generated chunk-by-chunk and discarded unless retention is requested,
    so memory stays at the (C, V) history plus a constant-size buffer.
    """
    if thinning < 1:
        raise ValueError("thinning stride must be >= 1")
    traj = simulate(dist, k, horizon, pool, seed, retain_delays=retain_delays)
    idx = np.arange(thinning, horizon + 1, thinning, dtype=np.int64)
    return ThinnedSeries(
        indices=idx,
        colors=traj.colors[idx],
        values=traj.values[idx],
        trajectory=traj,
    )


def _validate_run_args(k: int, horizon: int, seed: int) -> None:
    if k < 2:
        raise ValueError("the multi-choice process requires k >= 2")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if seed < 0:
        raise ValueError("seed must be a non-negative integer")
