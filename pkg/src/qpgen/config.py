"""Run configuration: JSON schema validation, content hashing, CSV output.

A run is described by a single JSON document naming a scenario, the circuit
and environment parameters, the sweep grid, and the numerical truncations.
Validation is strict -- unknown keys anywhere in the document are rejected
so that typos fail loudly instead of silently using defaults.

Floating-point values are serialized with 17 significant digits, which
round-trips float64 exactly, so repeated runs with the same configuration
produce byte-identical CSV files.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from .circuits import SquidParams, TransmonParams
from .rates import QpEnvironment
from .scenarios import Numerics, SquidNumerics
from .specfn import Gap

CSV_HEADER = ("grid_index,omega_d_GHz,amplitude,alpha,beta,n,junction,"
              "omega_GHz,gamma_per_s,T_s,xqp_star,flags")

SCENARIOS = (
    "charge_drive_map",
    "constant_stark_cut",
    "readout_sweep",
    "kapitza_sweep",
)

PROFILES = ("full", "ci")

# Reduced-fidelity truncations used by the "ci" profile.
CI_NUMERICS = {"n_cut": 20, "d": 12, "m_max": 10}


class ConfigError(ValueError):
    """Raised for any malformed or inconsistent run configuration."""


@dataclass(frozen=True)
class RunConfig:
    """A fully validated run description.

    ``resolved`` is the canonical dictionary after profile overrides; it is
    what gets hashed, so two configs that resolve identically share a hash.
    """

    scenario: str
    profile: str
    circuit: TransmonParams | SquidParams
    environment: QpEnvironment
    grid: dict[str, Any]
    numerics: Numerics | SquidNumerics
    output: dict[str, str]
    resolved: dict[str, Any] = field(repr=False)

    @property
    def hash(self) -> str:
        return config_hash(self.resolved)


def config_hash(resolved: Mapping[str, Any]) -> str:
    """Content-addressed hash of a resolved configuration."""
    canonical = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def _require_keys(section: Mapping[str, Any], allowed: Mapping[str, type | tuple],
                  required: Sequence[str], where: str) -> None:
    unknown = set(section) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")
    missing = [k for k in required if k not in section]
    if missing:
        raise ConfigError(f"missing key(s) in {where}: {missing}")
    for key, value in section.items():
        want = allowed[key]
        if want is float:
            want = (int, float)
        if not isinstance(value, want) or isinstance(value, bool):
            raise ConfigError(f"{where}.{key} has wrong type "
                              f"({type(value).__name__})")


def _float_list(section: Mapping[str, Any], key: str, where: str) -> list[float]:
    values = section[key]
    if (not isinstance(values, list) or not values
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                       and math.isfinite(v) for v in values)):
        raise ConfigError(f"{where}.{key} must be a non-empty list of finite "
                          "numbers")
    return [float(v) for v in values]


_GRID_SCHEMAS: dict[str, tuple[dict, tuple[str, ...]]] = {
    "charge_drive_map": (
        {"omega_d_GHz": list, "amplitude_GHz": list, "alphas": list},
        ("omega_d_GHz", "amplitude_GHz"),
    ),
    "constant_stark_cut": (
        {"omega_d_GHz": list, "delta_target_GHz": float, "tol_GHz": float},
        ("omega_d_GHz",),
    ),
    "readout_sweep": (
        {"omega_r_GHz": float, "nbar": list, "chi_target_GHz": float,
         "alphas": list},
        ("omega_r_GHz", "nbar"),
    ),
    "kapitza_sweep": (
        {"omega_d_GHz": float, "phi_ac_over_2pi": list},
        ("omega_d_GHz", "phi_ac_over_2pi"),
    ),
}

_TRANSMON_KEYS = {"e_j_GHz": float, "e_c_GHz": float, "n_g": float}
_SQUID_KEYS = {"e_j1_GHz": float, "e_j2_GHz": float, "e_c_GHz": float,
               "n_g": float, "c_1": float, "c_2": float}
_ENV_KEYS = {"delta_GHz": float, "n_cp": float, "c_r_per_s": float}
_NUMERICS_KEYS = {"n_cut": int, "d": int, "m_max": int, "m_guard": int,
                  "k_max": int}
_SQUID_NUMERICS_KEYS = {"n_cut": int, "m_max": int, "m_guard": int,
                        "k_max": int}
_OUTPUT_KEYS = {"csv": str, "summary": str, "svg": str}


def _build_circuit(scenario: str, section: Mapping[str, Any]):
    if scenario == "kapitza_sweep":
        _require_keys(section, _SQUID_KEYS,
                      ("e_j1_GHz", "e_j2_GHz", "e_c_GHz"), "circuit")
        try:
            return SquidParams(**{k: float(v) for k, v in section.items()})
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    _require_keys(section, _TRANSMON_KEYS, ("e_j_GHz", "e_c_GHz"), "circuit")
    try:
        return TransmonParams(**{k: float(v) for k, v in section.items()})
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _build_numerics(scenario: str, section: Mapping[str, Any], profile: str):
    squid = scenario == "kapitza_sweep"
    keys = _SQUID_NUMERICS_KEYS if squid else _NUMERICS_KEYS
    _require_keys(section, keys, (), "numerics")
    merged = dict(section)
    if profile == "ci":
        for key, value in CI_NUMERICS.items():
            if key in keys:
                merged[key] = value
    try:
        cls = SquidNumerics if squid else Numerics
        return cls(**{k: int(v) for k, v in merged.items()})
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def validate_config(raw: Mapping[str, Any],
                    profile_override: str | None = None) -> RunConfig:
    """Validate a parsed JSON document and build the typed run description."""
    if not isinstance(raw, Mapping):
        raise ConfigError("config must be a JSON object")
    top = {"scenario": str, "profile": str, "circuit": dict,
           "environment": dict, "grid": dict, "numerics": dict,
           "output": dict}
    _require_keys(raw, top, ("scenario", "circuit", "grid"), "config")

    scenario = raw["scenario"]
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; "
                          f"expected one of {list(SCENARIOS)}")
    profile = profile_override or raw.get("profile", "full")
    if profile not in PROFILES:
        raise ConfigError(f"profile must be one of {list(PROFILES)}, "
                          f"got {profile!r}")

    grid_raw = raw["grid"]
    allowed, required = _GRID_SCHEMAS[scenario]
    _require_keys(grid_raw, allowed, required, "grid")
    grid: dict[str, Any] = {}
    for key in grid_raw:
        if allowed[key] is list and key != "alphas":
            grid[key] = _float_list(grid_raw, key, "grid")
        elif key == "alphas":
            alphas = grid_raw[key]
            if (not isinstance(alphas, list) or not alphas
                    or not all(isinstance(a, int) and not isinstance(a, bool)
                               and a >= 0 for a in alphas)):
                raise ConfigError("grid.alphas must be a non-empty list of "
                                  "non-negative integers")
            grid[key] = list(alphas)
        else:
            grid[key] = float(grid_raw[key])

    env_raw = raw.get("environment", {})
    _require_keys(env_raw, _ENV_KEYS, (), "environment")
    try:
        gap = Gap(float(env_raw.get("delta_GHz", Gap().delta_GHz)))
        environment = QpEnvironment(
            gap=gap,
            n_cp=float(env_raw.get("n_cp", QpEnvironment().n_cp)),
            c_r_per_s=float(env_raw.get("c_r_per_s",
                                        QpEnvironment().c_r_per_s)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    circuit = _build_circuit(scenario, raw["circuit"])
    numerics = _build_numerics(scenario, raw.get("numerics", {}), profile)

    out_raw = raw.get("output", {})
    _require_keys(out_raw, _OUTPUT_KEYS, (), "output")
    output = {"csv": out_raw.get("csv", f"{scenario}.csv"),
              "summary": out_raw.get("summary", f"{scenario}_summary.json")}
    if "svg" in out_raw:
        output["svg"] = out_raw["svg"]

    resolved = {
        "scenario": scenario,
        "profile": profile,
        "circuit": {k: float(v) for k, v in raw["circuit"].items()},
        "environment": {"delta_GHz": environment.gap.delta_GHz,
                        "n_cp": environment.n_cp,
                        "c_r_per_s": environment.c_r_per_s},
        "grid": grid,
        "numerics": {f: getattr(numerics, f)
                     for f in type(numerics).__dataclass_fields__},
        "output": output,
    }
    return RunConfig(scenario=scenario, profile=profile, circuit=circuit,
                     environment=environment, grid=grid, numerics=numerics,
                     output=output, resolved=resolved)


def load_config(path: str | Path,
                profile_override: str | None = None) -> RunConfig:
    """Read and validate a JSON config file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    return validate_config(raw, profile_override)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def format_value(value: Any) -> str:
    """Serialize one CSV cell; floats use 17 significant digits."""
    if isinstance(value, bool):
        raise TypeError("boolean cells are not part of the schema")
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return format(value, ".17g")
    return str(value)


def write_csv(path: str | Path, rows: Sequence[Mapping[str, Any]],
              header: str = CSV_HEADER) -> None:
    """Write rows (dicts keyed by the header columns) deterministically."""
    columns = header.split(",")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row[c]) for c in columns])


def flag_counts(rows: Sequence[Mapping[str, Any]]) -> dict[str, int]:
    """Count occurrences of each flag across all rows."""
    counts: dict[str, int] = {}
    for row in rows:
        for flag in str(row.get("flags", "")).split(";"):
            if flag:
                counts[flag] = counts.get(flag, 0) + 1
    return dict(sorted(counts.items()))


def write_summary(path: str | Path, config: RunConfig,
                  rows: Sequence[Mapping[str, Any]],
                  timestamp: str, version: str,
                  extra: Mapping[str, Any] | None = None) -> None:
    """Write the JSON run summary (the only output carrying a timestamp)."""
    summary = {
        "scenario": config.scenario,
        "profile": config.profile,
        "config_hash": config.hash,
        "code_version": version,
        "timestamp": timestamp,
        "n_rows": len(rows),
        "flag_counts": flag_counts(rows),
        "config": config.resolved,
    }
    if extra:
        summary.update(extra)
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
