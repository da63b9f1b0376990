"""Backward structural analysis of simulated trajectories.

Everything here is read-only over a frozen :class:`Trajectory` whose delay
matrix was retained: reach sets and leaf statistics, single-choice and
shortest-edge chains, longest-edge leaf counts, coalescence estimates, and
DOT/JSON subgraph export.

The primary reach computation is an iterative descending-index sweep over a
visited bitmap (no recursion, bounded memory even for reach sets spanning
10^4+ indices).  A deliberately independent set-based DFS backs the oracle
functions used to cross-check both the sweep and the forward recursion.
"""

import json
from dataclasses import dataclass
from typing import Dict, List, Optional, Set, Tuple, Union

import numpy as np
from numba import njit

from .simulate import Trajectory

LEAF_LIST_CAP = 10 ** 6

ChainKind = Union[int, str]  # choice index j, or "min"


@dataclass
class ReachStats:
    """Leaf statistics of the reach set of one vertex.

    leaf_count      -- number of distinct leaves reached
    rightmost_leaf  -- largest (closest to 0) leaf index reached
    leftmost_leaf   -- smallest (oldest) leaf index reached
    reach_size      -- total vertices reached, leaves included
    leaves          -- sorted leaf indices when collected (capped)
    """

    n: int
    leaf_count: int
    rightmost_leaf: int
    leftmost_leaf: int
    reach_size: int
    leaves: Optional[np.ndarray] = None
    leaves_truncated: bool = False


@dataclass
class ChainStats:
    """One descending chain: per-step delays follow a single choice index
    ("z" chains) or the per-step minimum ("min" chain, kind="min")."""

    kind: ChainKind
    vertices: List[int]
    terminal_leaf: int


@dataclass
class LongestEdgeLeafStats:
    """Leaves hit through longest outgoing edges.

    distinct_leaves       -- leaves reached from min-chain vertices via their
                             longest edge
    multiplicities        -- for each such leaf, how many vertices m in 1..n
                             (chain member or not) have longest delay m - leaf
    chain_multiplicities  -- same counts restricted to min-chain vertices;
                             their total equals j_count(traj, n)
    """

    distinct_leaves: int
    multiplicities: Dict[int, int]
    chain_multiplicities: Dict[int, int]


def _require_delays(traj: Trajectory) -> None:
    if traj.delays is None:
        raise ValueError(
            "analytics requires the delay matrix; simulate with retain_delays=True"
        )


def _check_vertex(traj: Trajectory, n: int) -> None:
    if not 1 <= n <= traj.horizon:
        raise ValueError(f"vertex {n} outside 1..{traj.horizon}")


@njit(cache=True, nogil=True)
def _reach_core(delays, n):
    """Descending sweep: mark every positive vertex reached from n and
    record each edge landing on a leaf (duplicates preserved)."""
    k = delays.shape[1]
    active = np.zeros(n + 1, dtype=np.uint8)
    active[n] = 1
    leaf_hits = np.empty(n * k, dtype=np.int64)
    nl = 0
    internal = 0
    for m in range(n, 0, -1):
        if active[m]:
            internal += 1
            for j in range(k):
                par = m - delays[m - 1, j]
                if par >= 1:
                    active[par] = 1
                else:
                    leaf_hits[nl] = par
                    nl += 1
    return internal, active, leaf_hits[:nl]


def reach_stats(traj: Trajectory, n: int, collect_leaves: bool = False) -> ReachStats:
    """Exact leaf statistics of the reach set of vertex n."""
    _require_delays(traj)
    _check_vertex(traj, n)
    internal, _, leaf_hits = _reach_core(traj.delays, n)
    leaves = np.unique(leaf_hits)
    stats = ReachStats(
        n=n,
        leaf_count=int(leaves.size),
        rightmost_leaf=int(leaves[-1]),
        leftmost_leaf=int(leaves[0]),
        reach_size=internal + int(leaves.size),
    )
    if collect_leaves:
        if leaves.size > LEAF_LIST_CAP:
            stats.leaves = leaves[-LEAF_LIST_CAP:]
            stats.leaves_truncated = True
        else:
            stats.leaves = leaves
    return stats


def chain(traj: Trajectory, n: int, kind: ChainKind) -> ChainStats:
    """Follow one delay per step (choice j, or the per-step minimum for
    kind="min") from n down to its terminal leaf."""
    _require_delays(traj)
    _check_vertex(traj, n)
    if kind != "min" and not (isinstance(kind, int) and 0 <= kind < traj.k):
        raise ValueError(f"chain kind must be 'min' or a choice index < {traj.k}")
    vertices = [n]
    m = n
    while m >= 1:
        row = traj.delays[m - 1]
        step = int(row.min()) if kind == "min" else int(row[kind])
        m -= step
        vertices.append(m)
    return ChainStats(kind=kind, vertices=vertices, terminal_leaf=m)


def j_count(traj: Trajectory, n: int) -> int:
    """Number of min-chain vertices m >= 1 whose longest delay reaches a
    leaf (max_j Z_m^(j) >= m)."""
    _require_delays(traj)
    _check_vertex(traj, n)
    count = 0
    m = n
    while m >= 1:
        row = traj.delays[m - 1]
        if int(row.max()) >= m:
            count += 1
        m -= int(row.min())
    return count


def longest_edge_leaf_stats(traj: Trajectory, n: int) -> LongestEdgeLeafStats:
    """Distinct leaves hit by longest edges from the min chain, plus
    per-leaf longest-edge multiplicities over all vertices 1..n."""
    _require_delays(traj)
    _check_vertex(traj, n)
    chain_mult: Dict[int, int] = {}
    m = n
    while m >= 1:
        row = traj.delays[m - 1]
        longest = int(row.max())
        if longest >= m:
            leaf = m - longest
            chain_mult[leaf] = chain_mult.get(leaf, 0) + 1
        m -= int(row.min())
    steps = np.arange(1, n + 1, dtype=np.int64)
    longest_all = traj.delays[:n].max(axis=1)
    mask = longest_all >= steps
    leaves, counts = np.unique(steps[mask] - longest_all[mask], return_counts=True)
    multiplicities = {int(l): int(c) for l, c in zip(leaves, counts)}
    return LongestEdgeLeafStats(
        distinct_leaves=len(chain_mult),
        multiplicities=multiplicities,
        chain_multiplicities=chain_mult,
    )


@njit(cache=True, nogil=True)
def _extreme_leaf_kernel(delays, rightmost, leftmost):
    """Forward recursion for the extreme reached leaves of every vertex.

    Leaves of a reach set are the union of the parents' leaves, so the
    rightmost/leftmost leaf of n is the max/min over its k parents' values,
    with a non-positive parent contributing itself.
    """
    nsteps, k = delays.shape
    for t in range(nsteps):
        n = t + 1
        best_r = np.int64(-(2 ** 62))
        best_l = np.int64(1)
        for j in range(k):
            m = n - delays[t, j]
            if m >= 1:
                r = rightmost[m]
                l = leftmost[m]
            else:
                r = m
                l = m
            if r > best_r:
                best_r = r
            if l < best_l:
                best_l = l
        rightmost[n] = best_r
        leftmost[n] = best_l


def extreme_leaf_curves(traj: Trajectory) -> Tuple[np.ndarray, np.ndarray]:
    """Exact (rightmost, leftmost) reached-leaf indices for every vertex
    1..horizon in one forward pass; entry 0 is the leaf-0 sentinel."""
    _require_delays(traj)
    rightmost = np.zeros(traj.horizon + 1, dtype=np.int64)
    leftmost = np.zeros(traj.horizon + 1, dtype=np.int64)
    _extreme_leaf_kernel(traj.delays, rightmost, leftmost)
    return rightmost, leftmost


def _reach_sets_dfs(traj: Trajectory, n: int) -> Tuple[Set[int], Set[int]]:
    """Independent reach computation: explicit-stack DFS with a visited set.

    Used as the oracle against both the bitmap sweep and the forward
    recursion; shares no code or traversal order with either.
    """
    internal: Set[int] = set()
    leaves: Set[int] = set()
    stack = [n]
    delays = traj.delays
    while stack:
        m = stack.pop()
        if m <= 0:
            leaves.add(m)
            continue
        if m in internal:
            continue
        internal.add(m)
        for d in delays[m - 1]:
            stack.append(m - int(d))
    return internal, leaves


def brute_force_cv(traj: Trajectory, n: int) -> Tuple[int, float]:
    """(color, value) of vertex n computed from scratch: enumerate the
    reached leaves and take the minimum preference value over them."""
    _require_delays(traj)
    _check_vertex(traj, n)
    _, leaves = _reach_sets_dfs(traj, n)
    best_leaf = 0
    best_v = np.inf
    for leaf in sorted(leaves):
        v = traj.pool.leaf_value(leaf)
        if v < best_v:
            best_v = v
            best_leaf = leaf
    return best_leaf, float(best_v)


@njit(cache=True, nogil=True)
def _coalescence_core(parent):
    """Smallest chain vertex of the horizon that lies on the min chain of
    every later vertex; -1 when none qualifies within the horizon."""
    h = parent.shape[0]
    cand_buf = np.empty(h, dtype=np.int64)
    nc = 0
    m = h
    while m >= 1:
        cand_buf[nc] = m
        nc += 1
        m = parent[m - 1]
    hit = np.zeros(h + 1, dtype=np.uint8)
    for ci in range(nc - 1, -1, -1):
        cand = cand_buf[ci]
        ok = True
        hit[:] = 0
        hit[cand] = 1
        for v in range(cand + 1, h + 1):
            p = parent[v - 1]
            if p >= cand and hit[p] == 1:
                hit[v] = 1
            else:
                ok = False
                break
        if ok:
            return cand
    return np.int64(-1)


def coalescence_estimate(traj: Trajectory) -> Optional[int]:
    """Smallest vertex lying on the min chain of every vertex up to the
    horizon, or None if no such vertex exists within the run.

    The result is right-censored: a true coalescence vertex may exceed the
    horizon, and None only means none was observed in this window.
    """
    _require_delays(traj)
    mins = traj.delays.min(axis=1)
    parent = np.arange(1, traj.horizon + 1, dtype=np.int64) - mins
    cand = int(_coalescence_core(parent))
    return cand if cand >= 1 else None


def export_subgraph(traj: Trajectory, n: int, fmt: str = "dot") -> str:
    """Serialize the subgraph induced by the reach set of n.

    Vertices carry a role tag (internal for positive indices, leaf
    otherwise); one directed edge is emitted per (vertex, choice) pair, so
    parallel edges stay distinct records.  Vertex order is descending and
    deterministic.
    """
    _require_delays(traj)
    _check_vertex(traj, n)
    if fmt not in ("dot", "json"):
        raise ValueError(f"format must be 'dot' or 'json', got {fmt!r}")
    _, active, leaf_hits = _reach_core(traj.delays, n)
    internal = np.nonzero(active)[0][::-1]  # descending
    leaves = np.unique(leaf_hits)[::-1]  # descending: 0, -1, ...
    edges = []
    for m in internal:
        for j in range(traj.k):
            edges.append((int(m), int(m - traj.delays[m - 1, j]), j))
    if fmt == "json":
        doc = {
            "schema_version": 1,
            "root": n,
            "vertices": [
                {"id": int(v), "role": "internal"} for v in internal
            ]
            + [{"id": int(v), "role": "leaf"} for v in leaves],
            "edges": [
                {"source": a, "target": b, "choice": j} for a, b, j in edges
            ],
        }
        return json.dumps(doc, indent=2) + "\n"
    lines = ["digraph T {"]
    for v in internal:
        lines.append(f'  "{int(v)}" [role=internal];')
    for v in leaves:
        lines.append(f'  "{int(v)}" [role=leaf];')
    for a, b, j in edges:
        lines.append(f'  "{a}" -> "{b}" [choice={j}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
