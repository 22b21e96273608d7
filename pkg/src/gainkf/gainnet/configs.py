"""Named gain-network configurations used throughout the benchmarks.

Each entry pairs an architecture with a feature set and the training
regime it is normally driven by:

* C1 - joint net, features {f2, f4}, fixed-truncation training (v3)
* C2 - joint net, features {f2, f4}, whole-trajectory training (v1)
* C3 - joint net, features {f1, f3, f4}, split-long-trajectory training (v2)
* C4 - cascade net, all features, whole-trajectory training (v1)
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class GainConfig:
    config_id: str
    arch: str                       # "joint" | "cascade"
    features: tuple[str, ...]
    bptt: str                       # "v1" | "v2" | "v3"


GAIN_CONFIGS = {
    "C1": GainConfig("C1", "joint", ("f2", "f4"), "v3"),
    "C2": GainConfig("C2", "joint", ("f2", "f4"), "v1"),
    "C3": GainConfig("C3", "joint", ("f1", "f3", "f4"), "v2"),
    "C4": GainConfig("C4", "cascade", ("f1", "f2", "f3", "f4"), "v1"),
}


def get_gain_config(config_id: str) -> GainConfig:
    try:
        return GAIN_CONFIGS[config_id.upper()]
    except KeyError:
        raise KeyError(f"unknown gain config {config_id!r}; choose from {sorted(GAIN_CONFIGS)}")
