"""Pure-numpy readers for run-directory files (no compiled code needed)."""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"VSWM1"


@dataclass
class Snapshot:
    nx: int
    ny: int
    dx: float
    t: float
    rho: np.ndarray  # (ny, nx)
    ux: np.ndarray
    uy: np.ndarray
    wz: np.ndarray
    polyline: np.ndarray | None  # (n, 2) in cell coordinates


def load_snapshot(path) -> Snapshot:
    data = Path(path).read_bytes()
    if data[:5] != MAGIC:
        raise ValueError(f"{path}: not a VSWM1 snapshot (magic {data[:5]!r})")
    off = 5
    nx, ny = struct.unpack_from("<II", data, off)
    off += 8
    dx, t = struct.unpack_from("<dd", data, off)
    off += 16
    n = nx * ny
    need = off + 4 * n * 8
    if len(data) < need:
        raise ValueError(f"{path}: truncated ({len(data)} bytes, planes need {need})")
    planes = np.frombuffer(data, dtype="<f8", count=4 * n, offset=off).reshape(4, ny, nx)
    off = need
    poly = None
    if off < len(data):
        (count,) = struct.unpack_from("<I", data, off)
        off += 4
        if len(data) != off + 16 * count:
            raise ValueError(f"{path}: polyline length mismatch")
        poly = np.frombuffer(data, dtype="<f8", count=2 * count, offset=off).reshape(count, 2).copy()
    rho, ux, uy, wz = (p.copy() for p in planes)
    return Snapshot(nx, ny, dx, t, rho, ux, uy, wz, poly)


def _rows(path):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    return rows


def read_rewards(path) -> dict[str, np.ndarray]:
    """rewards.csv -> columns episode, steps, cumulative_reward, outcome."""
    rows = _rows(path)
    if not rows:
        raise ValueError(f"{path}: empty reward log")
    return {
        "episode": np.array([int(r["episode"]) for r in rows]),
        "steps": np.array([int(r["steps"]) for r in rows]),
        "cumulative_reward": np.array([float(r["cumulative_reward"]) for r in rows]),
        "outcome": np.array([r["outcome"] for r in rows]),
    }


def read_trajectory(path) -> dict[str, np.ndarray]:
    rows = _rows(path)
    cols = rows[0].keys() if rows else []
    return {c: np.array([float(r[c]) for r in rows]) for c in cols}


def read_summary(path) -> list[dict]:
    out = []
    for r in _rows(path):
        out.append({
            "start_x": float(r["start_x"]),
            "outcome": r["outcome"],
            "steps_to_outcome": int(r["steps_to_outcome"]),
            "final_distance": float(r["final_distance"]),
        })
    return out


def rolling_mean(x, window: int) -> np.ndarray:
    """Trailing mean over up to `window` values (shorter at the start)."""
    x = np.asarray(x, dtype=float)
    c = np.concatenate([[0.0], np.cumsum(x)])
    i = np.arange(1, len(x) + 1)
    lo = np.maximum(0, i - window)
    return (c[i] - c[lo]) / (i - lo)
