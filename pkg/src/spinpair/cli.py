"""Command-line entry points: run | ensemble | compare | selftest.

All numeric results go to files under the configured output directory;
progress goes to stderr. Failures exit nonzero and print one JSON line
with a machine-readable error category to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .config import OUTPUT_DIR_ENV, RunConfig, parse_config
from .errors import SimulationError
from .output import write_ensemble_csv, write_summary_json, write_trajectory_csv
from .photon_channel import ClampPolicy
from .selftest import run_selftest
from .trajectory import EnsembleStats, run_ensemble, run_trajectory

# flags that mirror RunConfig fields (--<field name>), plus conveniences
_CONFIG_FLAGS = {
    "n_atoms": "n_atoms",
    "n_atoms_1": "n_atoms_1",
    "n_atoms_2": "n_atoms_2",
    "delta_tau": "delta_tau",
    "detuning_ratio": "detuning_ratio",
    "protocol": "protocol",
    "n_photons_total": "n_photons",
    "n_photons_before_rotation": "n_before_rotation",
    "rotation_angle": "rotation_angle",
    "n_trajectories": "trajectories",
    "base_seed": "seed",
    "clamp_mode": "clamp_mode",
    "snapshot_stride": "snapshot_stride",
    "output_dir": "output_dir",
}


def _add_config_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", help="key=value configuration file")
    for flag in _CONFIG_FLAGS:
        parser.add_argument(f"--{flag}", metavar="V", default=None)
    parser.add_argument(
        "--parallelism",
        type=int,
        default=1,
        help="worker processes for ensembles (default 1)",
    )


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {
        key: getattr(args, flag)
        for flag, key in _CONFIG_FLAGS.items()
        if getattr(args, flag) is not None
    }
    return parse_config(args.config, overrides)


def _status(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def _progress(total: int):
    step = max(1, total // 10)

    def callback(done: int) -> None:
        if done % step == 0 or done == total:
            _status(f"  trajectory {done}/{total}")

    return callback


def _outdir(config: RunConfig) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_run(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    out = _outdir(config)
    spec1, spec2 = config.specs()
    t0 = time.perf_counter()
    _status(f"run: 1 trajectory, {config.n_photons_total} photons, seed {config.base_seed}")
    record = run_trajectory(
        spec1,
        spec2,
        config.physical_params(),
        config.protocol_obj(),
        ClampPolicy(config.clamp_mode_obj()),
        config.base_seed,
        snapshot_stride=config.snapshot_stride,
    )
    wall = time.perf_counter() - t0
    write_trajectory_csv(record, out / "trajectory.csv")
    write_summary_json([record], config.echo(), wall, out / "summary.json")
    _status(f"wrote {out / 'trajectory.csv'} ({record.n_recorded} rows) in {wall:.1f} s")
    return 0


def _run_config_ensemble(
    config: RunConfig, parallelism: int, detuning_ratio: float | None = None
) -> tuple[EnsembleStats, list]:
    spec1, spec2 = config.specs()
    return run_ensemble(
        spec1,
        spec2,
        config.physical_params(detuning_ratio),
        config.protocol_obj(),
        config.n_trajectories,
        config.base_seed,
        parallelism,
        clamp_mode=config.clamp_mode_obj(),
        snapshot_stride=config.snapshot_stride,
        progress=_progress(config.n_trajectories),
    )


def _cmd_ensemble(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    out = _outdir(config)
    t0 = time.perf_counter()
    _status(
        f"ensemble: {config.n_trajectories} trajectories, "
        f"{config.n_photons_total} photons each, parallelism {args.parallelism}"
    )
    stats, records = _run_config_ensemble(config, args.parallelism)
    wall = time.perf_counter() - t0
    write_ensemble_csv(stats, out / "ensemble.csv")
    write_summary_json(records, config.echo(), wall, out / "summary.json")
    _status(f"wrote {out / 'ensemble.csv'} in {wall:.1f} s")
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    """Paired comparison of the scattering and no-scattering schemes.

    Both ensembles use the same seed set, so the difference column
    isolates the scattering effect instead of sampling noise.
    """
    config = _config_from_args(args)
    if config.detuning_ratio == 0.0:
        raise SimulationError(
            "compare needs detuning_ratio > 0 (the scattering scheme to compare against)"
        )
    out = _outdir(config)
    t0 = time.perf_counter()
    _status(f"compare: scattering scheme (detuning_ratio {config.detuning_ratio})")
    stats_scatter, recs_scatter = _run_config_ensemble(config, args.parallelism)
    _status("compare: ideal scheme (no scattering)")
    stats_ideal, recs_ideal = _run_config_ensemble(config, args.parallelism, 0.0)
    wall = time.perf_counter() - t0

    write_ensemble_csv(stats_ideal, out / "ensemble_ideal.csv")
    write_ensemble_csv(stats_scatter, out / "ensemble_scatter.csv")
    diff = stats_ideal.mean_entropy - stats_scatter.mean_entropy
    lines = ["event_index,mean_entropy_ideal,mean_entropy_scatter,entropy_difference"]
    for i in range(stats_ideal.event_index.size):
        lines.append(
            f"{int(stats_ideal.event_index[i])},"
            f"{stats_ideal.mean_entropy[i]:.17g},"
            f"{stats_scatter.mean_entropy[i]:.17g},"
            f"{diff[i]:.17g}"
        )
    (out / "compare.csv").write_text("\n".join(lines) + "\n")
    final_diff = float(diff[-1]) if diff.size else 0.0
    write_summary_json(
        recs_scatter,
        config.echo(),
        wall,
        out / "summary.json",
        extra={
            "ideal_trajectories": [
                {"seed": r.seed, "final_entropy": r.final_entropy} for r in recs_ideal
            ],
            "final_entropy_difference_ideal_minus_scatter": final_diff,
        },
    )
    _status(f"final mean-entropy difference (ideal - scatter): {final_diff:+.4f}")
    _status(f"wrote {out / 'compare.csv'} in {wall:.1f} s")
    return 0


def _cmd_selftest(_args: argparse.Namespace) -> int:
    return 0 if run_selftest() else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinpair",
        description=(
            "Monte Carlo wave-function simulation of two atomic ensembles "
            "entangled by interferometric photodetection"
        ),
        epilog=f"default output directory comes from ${OUTPUT_DIR_ENV} when set",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, doc in (
        ("run", _cmd_run, "simulate a single trajectory"),
        ("ensemble", _cmd_ensemble, "simulate an ensemble of seeded trajectories"),
        ("compare", _cmd_compare, "paired scattering vs no-scattering ensembles"),
    ):
        p = sub.add_parser(name, help=doc)
        _add_config_arguments(p)
        p.set_defaults(handler=fn)
    p = sub.add_parser("selftest", help="run built-in invariant and oracle checks")
    p.set_defaults(handler=_cmd_selftest)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except SimulationError as exc:
        print(
            json.dumps({"error": exc.category, "message": str(exc)}),
            file=sys.stderr,
        )
        return 1
    except (ValueError, OSError) as exc:
        print(
            json.dumps({"error": "invalid-input", "message": str(exc)}),
            file=sys.stderr,
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
