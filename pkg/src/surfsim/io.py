"""File output: atomic CSV/JSON writers, trajectory dumps, binary snapshots.

Main outputs are byte-deterministic for a fixed config: floats are written
with shortest round-trip repr, JSON keys are sorted, and timestamps live
only in the sidecar metadata file written next to each output.
"""

import json
import os
import struct
import tempfile
import time
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .simulate import LeafConfig, LeafPool, Trajectory

_BINARY_MAGIC = b"SRF2"
_BINARY_VERSION = 1


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Comma-separated, header row, '.' decimals, LF endings, atomic."""
    path = Path(path)
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    _atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8"))


def write_json(path, obj) -> None:
    path = Path(path)
    _atomic_write(
        path, (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode("utf-8")
    )


def write_text(path, text: str) -> None:
    _atomic_write(Path(path), text.encode("utf-8"))


def write_sidecar_meta(path, config: dict, extra: Optional[dict] = None) -> None:
    """Config echo plus wall-clock timestamp, kept out of the main output."""
    meta = {"config": config, "created_at": time.strftime("%Y-%m-%dT%H:%M:%S%z")}
    if extra:
        meta.update(extra)
    write_json(str(path) + ".meta.json", meta)


def trajectory_rows(traj: Trajectory, thinning: int = 1):
    """Rows (n, C_n, V_n [, Z_1..Z_k]) for the trajectory CSV dump."""
    for n in range(thinning, traj.horizon + 1, thinning):
        row = [n, int(traj.colors[n]), float(traj.values[n])]
        if traj.delays is not None:
            row.extend(int(z) for z in traj.delays[n - 1])
        yield row


def trajectory_header(traj: Trajectory) -> list:
    head = ["n", "C_n", "V_n"]
    if traj.delays is not None:
        head.extend(f"Z_{j + 1}" for j in range(traj.k))
    return head


def save_trajectory_binary(path, traj: Trajectory) -> None:
    """Versioned binary snapshot: header + raw arrays, atomic."""
    spec_bytes = json.dumps(traj.dist_spec, sort_keys=True).encode("utf-8")
    header = struct.pack(
        "<4sIIQQBBI",
        _BINARY_MAGIC,
        _BINARY_VERSION,
        traj.k,
        traj.horizon,
        traj.seed,
        {"i": 1, "ii": 2, "iii": 3}[traj.pool.config.value],
        1 if traj.delays is not None else 0,
        len(spec_bytes),
    )
    parts = [
        header,
        spec_bytes,
        struct.pack("<Q", traj.pool.seed),
        traj.colors.tobytes(),
        traj.values.tobytes(),
    ]
    if traj.delays is not None:
        parts.append(traj.delays.tobytes())
    _atomic_write(Path(path), b"".join(parts))


def load_trajectory_binary(path) -> Trajectory:
    raw = Path(path).read_bytes()
    head_size = struct.calcsize("<4sIIQQBBI")
    magic, version, k, horizon, seed, cfg_code, has_delays, spec_len = struct.unpack(
        "<4sIIQqBBI", raw[:head_size]
    )
    if magic != _BINARY_MAGIC:
        raise ValueError("not a trajectory snapshot (bad magic)")
    if version != _BINARY_VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    off = head_size
    dist_spec = json.loads(raw[off : off + spec_len].decode("utf-8"))
    off += spec_len
    (pool_seed,) = struct.unpack("<Q", raw[off : off + 8])
    off += 8
    n_cv = horizon + 1
    colors = np.frombuffer(raw, dtype=np.int64, count=n_cv, offset=off).copy()
    off += 8 * n_cv
    values = np.frombuffer(raw, dtype=np.float64, count=n_cv, offset=off).copy()
    off += 8 * n_cv
    delays = None
    if has_delays:
        delays = (
            np.frombuffer(raw, dtype=np.int64, count=horizon * k, offset=off)
            .reshape(horizon, k)
            .copy()
        )
    config = {1: LeafConfig.INCREASING_BEST0, 2: LeafConfig.DECREASING_OLD_BEST, 3: LeafConfig.IID_UNIFORM}[cfg_code]
    return Trajectory(
        dist_spec=dist_spec,
        k=k,
        horizon=horizon,
        pool=LeafPool(config, pool_seed),
        seed=seed,
        colors=colors,
        values=values,
        delays=delays,
    )
