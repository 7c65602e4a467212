"""Run configuration: strict JSON schema with path-precise errors."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

ALL_SUITES = ("algebra", "kernels", "reduction", "constraints", "brackets", "eh", "halfshell")

DEFAULTS = {
    "signature": "lorentzian",
    "gamma": 1.0,
    "Lambda": 0.0,
    "grid_n": [8],
    "seed": 1,
    "suites": list(ALL_SUITES),
    "tolerances": {},
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    signature: str = "lorentzian"
    gamma: float = 1.0
    Lambda: float = 0.0
    grid_n: list = field(default_factory=lambda: [8])
    seed: int = 1
    suites: list = field(default_factory=lambda: list(ALL_SUITES))
    tolerances: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        gamma = "infinity" if math.isinf(self.gamma) else self.gamma
        return {
            "signature": self.signature,
            "gamma": gamma,
            "Lambda": self.Lambda,
            "grid_n": list(self.grid_n),
            "seed": self.seed,
            "suites": list(self.suites),
            "tolerances": dict(self.tolerances),
        }

    def tol(self, name: str, default: float) -> float:
        return float(self.tolerances.get(name, default))


def validate_config(raw: dict) -> RunConfig:
    unknown = set(raw) - set(DEFAULTS)
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown key at $.{key}")
    merged = {**DEFAULTS, **raw}

    signature = merged["signature"]
    if signature not in ("euclidean", "lorentzian"):
        raise ConfigError("$.signature must be 'euclidean' or 'lorentzian'")

    gamma = merged["gamma"]
    if gamma == "infinity":
        gamma = math.inf
    if not isinstance(gamma, (int, float)):
        raise ConfigError("$.gamma must be a number or 'infinity'")
    if gamma == 0:
        raise ConfigError("$.gamma must be nonzero")

    lam = merged["Lambda"]
    if not isinstance(lam, (int, float)):
        raise ConfigError("$.Lambda must be a number")

    grid_n = merged["grid_n"]
    if not isinstance(grid_n, list) or not grid_n:
        raise ConfigError("$.grid_n must be a nonempty list of even integers")
    suites = merged["suites"]
    if not isinstance(suites, list):
        raise ConfigError("$.suites must be a list")
    for s in suites:
        if s not in ALL_SUITES:
            raise ConfigError(f"$.suites: unknown suite {s!r}")
    for i, n in enumerate(grid_n):
        if not isinstance(n, int) or n < 2 or n % 2:
            raise ConfigError(f"$.grid_n[{i}] must be an even integer >= 2")
        if n < 4 and any(s != "halfshell" for s in suites):
            raise ConfigError(f"$.grid_n[{i}] = {n} requires suites to be halfshell only")

    seed = merged["seed"]
    if not isinstance(seed, int) or seed < 0 or seed >= 2**64:
        raise ConfigError("$.seed must be a uint64")

    tolerances = merged["tolerances"]
    if not isinstance(tolerances, dict):
        raise ConfigError("$.tolerances must be an object")
    for k, v in tolerances.items():
        if not isinstance(v, (int, float)):
            raise ConfigError(f"$.tolerances.{k} must be a number")

    return RunConfig(
        signature=signature,
        gamma=float(gamma),
        Lambda=float(lam),
        grid_n=list(grid_n),
        seed=seed,
        suites=list(suites),
        tolerances=dict(tolerances),
    )


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    return validate_config(raw)
