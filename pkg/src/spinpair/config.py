"""Run configuration: flat key=value files with CLI flag overrides.

The file format is one `key = value` assignment per line; `#` starts a
comment. Keys, defaults, and validation live here so that every entry
point shares one schema. The physical inputs are the two dimensionless
numbers (delta_tau, detuning_ratio); the dynamics depend on nothing
else.
"""

from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass
from pathlib import Path

from .collective_spin import SampleSpec
from .errors import ConfigError
from .photon_channel import ClampMode, PhysicalParams
from .trajectory import Protocol, ProtocolKind

__all__ = ["RunConfig", "parse_config", "parse_kv_file", "OUTPUT_DIR_ENV"]

OUTPUT_DIR_ENV = "SPINPAIR_OUTPUT_DIR"
_DEFAULT_OUTPUT_DIR = "runs"

# config-file key -> RunConfig field; `n_atoms` fans out to both samples
_KEY_MAP = {
    "n_atoms_1": "n_atoms_1",
    "n_atoms_2": "n_atoms_2",
    "delta_tau": "delta_tau",
    "detuning_ratio": "detuning_ratio",
    "protocol": "protocol",
    "n_photons": "n_photons_total",
    "n_before_rotation": "n_photons_before_rotation",
    "rotation_angle": "rotation_angle",
    "trajectories": "n_trajectories",
    "seed": "base_seed",
    "clamp_mode": "clamp_mode",
    "snapshot_stride": "snapshot_stride",
    "output_dir": "output_dir",
}
_FILE_KEYS = set(_KEY_MAP) | {"n_atoms"}


@dataclass(frozen=True)
class RunConfig:
    """Validated inputs for one run; see `parse_config` for defaults."""

    n_atoms_1: int
    n_atoms_2: int
    delta_tau: float
    detuning_ratio: float  # Delta/gamma; 0 means no spontaneous scattering
    protocol: str  # "consecutive" | "continuous"
    n_photons_total: int
    n_photons_before_rotation: int
    rotation_angle: float
    n_trajectories: int
    base_seed: int
    clamp_mode: str  # "permissive" | "strict"
    snapshot_stride: int
    output_dir: str

    def physical_params(self, detuning_ratio: float | None = None) -> PhysicalParams:
        ratio = self.detuning_ratio if detuning_ratio is None else detuning_ratio
        gamma_over_delta = 0.0 if ratio == 0.0 else 1.0 / ratio
        return PhysicalParams(self.delta_tau, gamma_over_delta)

    def specs(self) -> tuple[SampleSpec, SampleSpec]:
        return SampleSpec(self.n_atoms_1), SampleSpec(self.n_atoms_2)

    def protocol_obj(self) -> Protocol:
        kind = ProtocolKind(self.protocol)
        if kind is ProtocolKind.CONSECUTIVE_ZY:
            return Protocol.consecutive_zy(
                self.n_photons_total, self.n_photons_before_rotation, self.rotation_angle
            )
        return Protocol.continuous_rotation(self.n_photons_total, self.rotation_angle)

    def clamp_mode_obj(self) -> ClampMode:
        return ClampMode(self.clamp_mode)

    def to_file_dict(self) -> dict[str, str]:
        """Round-trippable key=value representation (file schema keys)."""
        inverse = {v: k for k, v in _KEY_MAP.items()}
        out: dict[str, str] = {}
        for fname, value in asdict(self).items():
            key = inverse[fname]
            if isinstance(value, float):
                out[key] = format(value, ".17g")
            else:
                out[key] = str(value)
        return out

    def echo(self) -> dict:
        return asdict(self)


def parse_kv_file(path: str | Path) -> dict[str, str]:
    """Read a flat key=value file; rejects malformed lines."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    out: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in out:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _to_int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {value!r}") from None


def _to_float(key: str, value: str) -> float:
    try:
        out = float(value)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {value!r}") from None
    if not math.isfinite(out):
        raise ConfigError(f"{key}: must be finite, got {value!r}")
    return out


def parse_config(
    path: str | Path | None = None, overrides: dict[str, str] | None = None
) -> RunConfig:
    """Build a validated RunConfig from a file and/or override mapping.

    Overrides use the same keys as the file and win over it. Unknown
    keys, missing required fields, and out-of-range values raise
    ConfigError naming the offending key.
    """
    raw: dict[str, str] = {}
    if path is not None:
        raw.update(parse_kv_file(path))
    if overrides:
        raw.update({k: str(v) for k, v in overrides.items() if v is not None})

    unknown = sorted(set(raw) - _FILE_KEYS)
    if unknown:
        raise ConfigError(f"unknown configuration key(s): {', '.join(unknown)}")

    if "n_atoms" in raw:
        if "n_atoms_1" in raw or "n_atoms_2" in raw:
            raise ConfigError("n_atoms conflicts with n_atoms_1/n_atoms_2")
        raw["n_atoms_1"] = raw["n_atoms_2"] = raw.pop("n_atoms")

    for required in ("n_atoms_1", "n_atoms_2", "delta_tau", "protocol", "n_photons"):
        if required not in raw:
            missing = "n_atoms" if required.startswith("n_atoms") else required
            raise ConfigError(f"missing required configuration key: {missing}")

    protocol = raw["protocol"].strip().lower()
    if protocol not in ("consecutive", "continuous"):
        raise ConfigError(
            f"protocol: expected 'consecutive' or 'continuous', got {raw['protocol']!r}"
        )

    n_atoms_1 = _to_int("n_atoms_1", raw["n_atoms_1"])
    n_atoms_2 = _to_int("n_atoms_2", raw["n_atoms_2"])
    for key, val in (("n_atoms_1", n_atoms_1), ("n_atoms_2", n_atoms_2)):
        if val < 1:
            raise ConfigError(f"{key}: must be >= 1, got {val}")

    delta_tau = _to_float("delta_tau", raw["delta_tau"])
    if not (0.0 < delta_tau < math.pi):
        raise ConfigError(f"delta_tau: must lie in (0, pi), got {delta_tau}")

    detuning_ratio = _to_float("detuning_ratio", raw.get("detuning_ratio", "0"))
    if detuning_ratio < 0.0:
        raise ConfigError(f"detuning_ratio: must be >= 0, got {detuning_ratio}")
    if 0.0 < detuning_ratio <= 1.0:
        raise ConfigError(
            f"detuning_ratio: the far-detuned model needs Delta > gamma, got {detuning_ratio}"
        )

    n_photons = _to_int("n_photons", raw["n_photons"])
    if n_photons < 0:
        raise ConfigError(f"n_photons: must be >= 0, got {n_photons}")

    if protocol == "consecutive":
        if "n_before_rotation" not in raw:
            raise ConfigError(
                "missing required configuration key: n_before_rotation "
                "(consecutive protocol)"
            )
        n_before = _to_int("n_before_rotation", raw["n_before_rotation"])
        if not (0 <= n_before <= n_photons):
            raise ConfigError(
                f"n_before_rotation: must lie in [0, n_photons], got {n_before}"
            )
        default_angle = math.pi / 2
    else:
        n_before = _to_int("n_before_rotation", raw.get("n_before_rotation", "0"))
        if n_before != 0:
            raise ConfigError("n_before_rotation: only meaningful for protocol=consecutive")
        default_angle = math.pi / 5

    rotation_angle = (
        _to_float("rotation_angle", raw["rotation_angle"])
        if "rotation_angle" in raw
        else default_angle
    )

    n_trajectories = _to_int("trajectories", raw.get("trajectories", "1"))
    if n_trajectories < 1:
        raise ConfigError(f"trajectories: must be >= 1, got {n_trajectories}")

    base_seed = _to_int("seed", raw.get("seed", "0"))
    if base_seed < 0:
        raise ConfigError(f"seed: must be >= 0, got {base_seed}")

    clamp_mode = raw.get("clamp_mode", "permissive").strip().lower()
    if clamp_mode not in ("permissive", "strict"):
        raise ConfigError(
            f"clamp_mode: expected 'permissive' or 'strict', got {raw.get('clamp_mode')!r}"
        )

    snapshot_stride = _to_int("snapshot_stride", raw.get("snapshot_stride", "1"))
    if snapshot_stride < 1:
        raise ConfigError(f"snapshot_stride: must be >= 1, got {snapshot_stride}")

    output_dir = raw.get("output_dir") or os.environ.get(OUTPUT_DIR_ENV) or _DEFAULT_OUTPUT_DIR

    return RunConfig(
        n_atoms_1=n_atoms_1,
        n_atoms_2=n_atoms_2,
        delta_tau=delta_tau,
        detuning_ratio=detuning_ratio,
        protocol=protocol,
        n_photons_total=n_photons,
        n_photons_before_rotation=n_before,
        rotation_angle=rotation_angle,
        n_trajectories=n_trajectories,
        base_seed=base_seed,
        clamp_mode=clamp_mode,
        snapshot_stride=snapshot_stride,
        output_dir=output_dir,
    )
