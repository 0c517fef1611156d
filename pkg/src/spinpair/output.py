"""Serialization of trajectory and ensemble results to analysis-ready files.

The column layouts are a stable contract: plotting tooling reads these
files directly. Floats carry 17 significant digits so written values
round-trip exactly.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .trajectory import EnsembleStats, TrajectoryRecord

__all__ = [
    "TRAJECTORY_HEADER",
    "ENSEMBLE_HEADER",
    "write_trajectory_csv",
    "write_ensemble_csv",
    "write_summary_json",
    "read_ensemble_csv",
]

TRAJECTORY_HEADER = (
    "trajectory_seed,event_index,channel,theta,entropy_bits,overlap_psi0,"
    "mean_jz_sum,variance_jz_sum,p_plus,p_minus,p_scatter"
)
ENSEMBLE_HEADER = (
    "event_index,mean_entropy,std_entropy,mean_overlap,std_overlap,"
    "mean_variance_jz,n_trajectories"
)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_trajectory_csv(record: TrajectoryRecord, path: str | Path) -> None:
    """One row per recorded snapshot; theta and overlap may be empty."""
    lines = [TRAJECTORY_HEADER]
    has_overlap = record.overlap_psi0 is not None
    for i in range(record.n_recorded):
        theta = record.theta[i]
        lines.append(
            ",".join(
                (
                    str(record.seed),
                    str(int(record.event_index[i])),
                    str(record.channel[i]),
                    _fmt(theta) if math.isfinite(theta) else "",
                    _fmt(record.entropy_bits[i]),
                    _fmt(record.overlap_psi0[i]) if has_overlap else "",
                    _fmt(record.mean_jz_sum[i]),
                    _fmt(record.variance_jz_sum[i]),
                    _fmt(record.p_plus[i]),
                    _fmt(record.p_minus[i]),
                    _fmt(record.p_scatter[i]),
                )
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def write_ensemble_csv(stats: EnsembleStats, path: str | Path) -> None:
    lines = [ENSEMBLE_HEADER]
    mean_ovl = stats.mean_overlap
    std_ovl = stats.std_overlap
    for i in range(stats.event_index.size):
        lines.append(
            ",".join(
                (
                    str(int(stats.event_index[i])),
                    _fmt(stats.mean_entropy[i]),
                    _fmt(stats.std_entropy[i]),
                    _fmt(mean_ovl[i]) if mean_ovl is not None else "",
                    _fmt(std_ovl[i]) if std_ovl is not None else "",
                    _fmt(stats.mean_variance_jz[i]),
                    str(stats.n_trajectories),
                )
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_ensemble_csv(path: str | Path) -> dict[str, np.ndarray]:
    """Parse an ensemble CSV back into column arrays (round-trip helper)."""
    text = Path(path).read_text().strip().splitlines()
    if not text or text[0] != ENSEMBLE_HEADER:
        raise ValueError(f"{path}: not an ensemble CSV (bad header)")
    names = ENSEMBLE_HEADER.split(",")
    cols: dict[str, list[float]] = {name: [] for name in names}
    for line in text[1:]:
        parts = line.split(",")
        for name, part in zip(names, parts):
            cols[name].append(float(part) if part else math.nan)
    return {name: np.asarray(vals) for name, vals in cols.items()}


def write_summary_json(
    records: list[TrajectoryRecord],
    config_echo: dict,
    wall_time_s: float,
    path: str | Path,
    extra: dict | None = None,
) -> None:
    """Run-level summary: config echo, channel totals, clamp count, timing."""
    counts = np.array([rec.counts for rec in records], dtype=np.int64)
    summary = {
        "config": config_echo,
        "n_trajectories": len(records),
        "channel_counts": {
            "plus": int(counts[:, 0].sum()),
            "minus": int(counts[:, 1].sum()),
            "scatter": int(counts[:, 2].sum()),
        },
        "clamp_events": int(sum(rec.clamp_events for rec in records)),
        "wall_time_s": wall_time_s,
        "trajectories": [
            {
                "seed": rec.seed,
                "stream_index": rec.stream_index,
                "counts": list(rec.counts),
                "final_norm": rec.final_norm,
                "final_entropy": rec.final_entropy,
                "final_overlap": rec.final_overlap,
            }
            for rec in records
        ],
    }
    if extra:
        summary.update(extra)
    Path(path).write_text(json.dumps(summary, indent=2) + "\n")
