import json

import numpy as np
import pytest

from surfsim import (
    InversePower,
    LeafConfig,
    LeafPool,
    TableDist,
    Trajectory,
    ZetaPareto,
    brute_force_cv,
    chain,
    coalescence_estimate,
    export_subgraph,
    j_count,
    longest_edge_leaf_stats,
    reach_stats,
    simulate,
)
from surfsim._hash import derive_run_seed
from surfsim.analytics import _reach_sets_dfs


def make_traj(delay_rows, k=2, config=LeafConfig.IID_UNIFORM, pool_seed=0):
    """Hand-built trajectory from an explicit delay matrix (reach-only use)."""
    delays = np.asarray(delay_rows, dtype=np.int64)
    horizon = delays.shape[0]
    pool = LeafPool(config, pool_seed)
    colors = np.zeros(horizon + 1, dtype=np.int64)
    values = np.zeros(horizon + 1, dtype=np.float64)
    return Trajectory(
        dist_spec={"kind": "table", "pmf": [1.0]},
        k=k,
        horizon=horizon,
        pool=pool,
        seed=0,
        colors=colors,
        values=values,
        delays=delays,
    )


def unit_traj(horizon=5, config=LeafConfig.IID_UNIFORM):
    return simulate(TableDist((1.0,)), 2, horizon, LeafPool(config, 3), 1)


# ---------------------------------------------------------------------------
# reach stats
# ---------------------------------------------------------------------------


def test_reach_unit_delays():
    rs = reach_stats(unit_traj(), 5, collect_leaves=True)
    assert rs.leaf_count == 1
    assert rs.rightmost_leaf == 0 and rs.leftmost_leaf == 0
    assert rs.reach_size == 6  # {5,4,3,2,1,0}
    assert list(rs.leaves) == [0]
    assert not rs.leaves_truncated


def test_reach_first_step_both_leaves():
    traj = make_traj([[3, 7]])
    rs = reach_stats(traj, 1, collect_leaves=True)
    assert rs.leaf_count == 2
    assert rs.rightmost_leaf == -2
    assert rs.leftmost_leaf == -6
    assert list(rs.leaves) == [-6, -2]
    assert rs.reach_size == 3


def test_reach_requires_delays_and_valid_vertex():
    traj = unit_traj()
    with pytest.raises(ValueError):
        reach_stats(traj, 0)
    with pytest.raises(ValueError):
        reach_stats(traj, 6)
    lean = Trajectory(
        dist_spec={}, k=2, horizon=5, pool=traj.pool, seed=0,
        colors=traj.colors, values=traj.values, delays=None,
    )
    with pytest.raises(ValueError):
        reach_stats(lean, 3)


def test_reach_matches_independent_dfs(small_corpus):
    for traj in small_corpus:
        for n in (1, traj.horizon // 2, traj.horizon):
            rs = reach_stats(traj, n, collect_leaves=True)
            internal, leaves = _reach_sets_dfs(traj, n)
            assert rs.leaf_count == len(leaves)
            assert rs.rightmost_leaf == max(leaves)
            assert rs.leftmost_leaf == min(leaves)
            assert rs.reach_size == len(internal) + len(leaves)
            assert set(int(x) for x in rs.leaves) == leaves


# ---------------------------------------------------------------------------
# chains
# ---------------------------------------------------------------------------


def test_chain_unit_delays():
    traj = unit_traj(6)
    ch = chain(traj, 6, kind=0)
    assert ch.vertices == [6, 5, 4, 3, 2, 1, 0]
    assert ch.terminal_leaf == 0


def test_chain_single_jump_to_leaf():
    traj = make_traj([[0, 0]] * 9 + [[14, 3]])  # placeholder rows below n
    traj.delays[:9] = 1  # valid positive delays for unvisited rows
    ch = chain(traj, 10, kind=0)
    assert ch.vertices == [10, -4]
    assert ch.terminal_leaf == -4


def test_min_chain_gaps_match_delay_matrix(small_corpus):
    for traj in small_corpus[:8]:
        ch = chain(traj, traj.horizon, kind="min")
        for a, b in zip(ch.vertices, ch.vertices[1:]):
            assert a - b == int(traj.delays[a - 1].min())
        zc = chain(traj, traj.horizon, kind=traj.k - 1)
        for a, b in zip(zc.vertices, zc.vertices[1:]):
            assert a - b == int(traj.delays[a - 1, traj.k - 1])


def test_chain_kind_validation():
    traj = unit_traj()
    with pytest.raises(ValueError):
        chain(traj, 3, kind=2)
    with pytest.raises(ValueError):
        chain(traj, 3, kind="max")


def test_chains_inside_reach_set(small_corpus):
    for traj in small_corpus[:12]:
        n = traj.horizon
        internal, leaves = _reach_sets_dfs(traj, n)
        members = internal | leaves
        rs = reach_stats(traj, n)
        for kind in [*range(traj.k), "min"]:
            ch = chain(traj, n, kind)
            assert set(ch.vertices) <= members
            assert ch.terminal_leaf in leaves
            assert rs.leftmost_leaf <= ch.terminal_leaf


# ---------------------------------------------------------------------------
# longest-edge statistics
# ---------------------------------------------------------------------------


def test_j_count_unit_delays():
    traj = unit_traj(9)
    # only m=1 has max delay (=1) >= m
    for n in range(1, 10):
        assert j_count(traj, n) == 1


def test_j_count_always_positive(small_corpus):
    # the terminal chain vertex m jumps below 1, so its min (hence max)
    # delay is >= m: the count can never be zero
    for traj in small_corpus:
        assert j_count(traj, traj.horizon) >= 1


def test_longest_edge_stats_unit_delays():
    traj = unit_traj(7)
    st = longest_edge_leaf_stats(traj, 7)
    assert st.distinct_leaves == 1
    assert st.multiplicities == {0: 1}
    assert st.chain_multiplicities == {0: 1}


def test_longest_edge_identities(small_corpus):
    for traj in small_corpus:
        n = traj.horizon
        jc = j_count(traj, n)
        st = longest_edge_leaf_stats(traj, n)
        assert st.distinct_leaves <= jc
        assert sum(st.chain_multiplicities.values()) == jc
        # chain-restricted counts can never exceed the all-vertex counts
        for leaf, count in st.chain_multiplicities.items():
            assert count <= st.multiplicities[leaf]


# ---------------------------------------------------------------------------
# the defining identity
# ---------------------------------------------------------------------------


def test_brute_force_cv_unit_delays():
    traj = unit_traj(5)
    u0 = traj.pool.leaf_value(0)
    assert brute_force_cv(traj, 3) == (0, u0)


def test_oracle_equivalence_on_corpus(corpus):
    # forward recursion vs argmin/min over the enumerated reached leaves
    for traj in corpus:
        for n in range(1, traj.horizon + 1):
            assert brute_force_cv(traj, n) == traj.color_value(n)


def test_monotone_config_extreme_leaf_identities(corpus):
    # increasing values: the best reached leaf is the rightmost one;
    # decreasing values: it is the leftmost one
    for traj in corpus:
        if traj.pool.config is LeafConfig.IID_UNIFORM:
            continue
        for n in (1, traj.horizon // 3, traj.horizon):
            rs = reach_stats(traj, n)
            if traj.pool.config is LeafConfig.INCREASING_BEST0:
                assert traj.values[n] == traj.pool.leaf_value(rs.rightmost_leaf)
                assert traj.colors[n] == rs.rightmost_leaf
            else:
                assert traj.values[n] == traj.pool.leaf_value(rs.leftmost_leaf)
                assert traj.colors[n] == rs.leftmost_leaf


def test_extreme_leaf_curves_match_backward_sweep(small_corpus):
    # the forward extreme-leaf recursion and the backward reach sweep are
    # independent routes to the same two statistics
    from surfsim import extreme_leaf_curves

    for traj in small_corpus:
        rightmost, leftmost = extreme_leaf_curves(traj)
        for n in (1, traj.horizon // 2, traj.horizon):
            rs = reach_stats(traj, n)
            assert rightmost[n] == rs.rightmost_leaf
            assert leftmost[n] == rs.leftmost_leaf


def test_leaf_list_cap(monkeypatch):
    import surfsim.analytics as mod

    monkeypatch.setattr(mod, "LEAF_LIST_CAP", 3)
    traj = simulate(InversePower(0.35), 2, 400, LeafPool(LeafConfig.IID_UNIFORM, 1), 4)
    rs = reach_stats(traj, 400, collect_leaves=True)
    if rs.leaf_count > 3:
        assert rs.leaves_truncated
        assert len(rs.leaves) == 3
        # the kept entries are the rightmost ones, still sorted
        assert rs.leaves[-1] == rs.rightmost_leaf


def test_reach_invariants(corpus):
    for traj in corpus[:60]:
        n = traj.horizon
        rs = reach_stats(traj, n)
        assert rs.leftmost_leaf <= rs.rightmost_leaf <= 0
        assert 1 <= rs.leaf_count <= rs.reach_size
        assert rs.leaf_count <= -rs.leftmost_leaf + 1
        assert -rs.leftmost_leaf >= -rs.rightmost_leaf


# ---------------------------------------------------------------------------
# coalescence
# ---------------------------------------------------------------------------


def test_coalescence_unit_delays():
    assert coalescence_estimate(unit_traj(9)) == 1


def test_coalescence_overshoot_blocks_small_candidates():
    # vertex 2 jumps past everything: nothing below 2 can be on its chain
    traj = make_traj([[1, 1], [5, 9], [1, 1]])
    est = coalescence_estimate(traj)
    assert est is None or est >= 2


def test_coalescence_exists_for_moderate_tails():
    dist = ZetaPareto(0.6)
    hits = 0
    runs = 200
    for i in range(runs):
        traj = simulate(
            dist, 2, 10 ** 4,
            LeafPool(LeafConfig.IID_UNIFORM, i),
            derive_run_seed(505, i),
        )
        est = coalescence_estimate(traj)
        if est is not None:
            hits += 1
            # spot-check membership on a few later vertices
            for n in (est, (est + traj.horizon) // 2, traj.horizon):
                assert est in chain(traj, n, "min").vertices
    assert hits >= 0.90 * runs


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------


def test_export_unit_delays_dot():
    traj = unit_traj(3)
    text = export_subgraph(traj, 3, fmt="dot")
    assert text.startswith("digraph T {")
    assert text.count("role=internal") == 3
    assert text.count("role=leaf") == 1
    assert text.count("->") == 6  # two parallel edges per internal vertex
    assert '"3" -> "2" [choice=0];' in text


def test_export_json_round_trip():
    traj = simulate(ZetaPareto(0.6), 2, 150, LeafPool(LeafConfig.IID_UNIFORM, 2), 7)
    doc = json.loads(export_subgraph(traj, 150, fmt="json"))
    assert doc["schema_version"] == 1
    assert doc["root"] == 150
    roles = {v["id"]: v["role"] for v in doc["vertices"]}
    internal, leaves = _reach_sets_dfs(traj, 150)
    assert {i for i, r in roles.items() if r == "internal"} == internal
    assert {i for i, r in roles.items() if r == "leaf"} == leaves
    # every edge originates at an internal vertex and lands inside the set
    edge_multiset = {}
    for e in doc["edges"]:
        assert roles[e["source"]] == "internal"
        assert e["target"] in roles
        key = (e["source"], e["target"], e["choice"])
        edge_multiset[key] = edge_multiset.get(key, 0) + 1
    # one edge per (internal vertex, choice)
    assert len(doc["edges"]) == len(internal) * traj.k
    recomputed = {}
    for m in internal:
        for j in range(traj.k):
            key = (m, int(m - traj.delays[m - 1, j]), j)
            recomputed[key] = recomputed.get(key, 0) + 1
    assert edge_multiset == recomputed


def test_export_format_validation():
    with pytest.raises(ValueError):
        export_subgraph(unit_traj(), 3, fmt="gexf")


def test_leaf_fraction_orders_by_regime():
    # leaf share of the reach subgraph at n=150: heavy > moderate > light
    wins = 0
    seeds = 100
    for i in range(seeds):
        fracs = {}
        for name, alpha in (("light", 1.2), ("moderate", 0.6), ("heavy", 0.3)):
            traj = simulate(
                ZetaPareto(alpha), 2, 150,
                LeafPool(LeafConfig.IID_UNIFORM, i),
                derive_run_seed(9090, i),
            )
            rs = reach_stats(traj, 150)
            fracs[name] = rs.leaf_count / rs.reach_size
        if fracs["heavy"] > fracs["moderate"] > fracs["light"]:
            wins += 1
    assert wins > seeds // 2
