"""Shared builders for the trajectory corpus used across test modules."""

import numpy as np

from surfsim import InversePower, LeafConfig, LeafPool, simulate

# one distribution per tail regime; the closed-form-tail kind keeps the
# corpus cheap to regenerate
REGIME_DISTS = {
    "light": InversePower(1.4),
    "moderate": InversePower(0.7),
    "heavy": InversePower(0.35),
}

CONFIGS = (LeafConfig.INCREASING_BEST0, LeafConfig.DECREASING_OLD_BEST, LeafConfig.IID_UNIFORM)


def corpus_params(total: int = 200, max_horizon: int = 300):
    """Deterministic list of (dist, config, k, horizon, seed) covering all
    regime x config x k combinations."""
    combos = [
        (regime, dist, config, k)
        for regime, dist in REGIME_DISTS.items()
        for config in CONFIGS
        for k in (2, 3)
    ]
    params = []
    for idx in range(total):
        regime, dist, config, k = combos[idx % len(combos)]
        horizon = 60 + (idx * 37) % (max_horizon - 60 + 1)
        params.append((regime, dist, config, k, horizon, 1000 + idx))
    return params


def build_corpus(total: int = 200, max_horizon: int = 300):
    """Simulate the corpus trajectories (delays retained)."""
    out = []
    for regime, dist, config, k, horizon, seed in corpus_params(total, max_horizon):
        pool = LeafPool(config, seed=seed * 7 + 1)
        out.append(simulate(dist, k, horizon, pool, seed))
    return out
