"""Run configuration shared by all CLI commands.

Config files are flat ``key = value`` text; the documented keys are
wavelet, resize, entropy_levels, dist_bins, kl_epsilon, and seed.
Command-line flags override file values.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .selection import DEFAULT_KL_EPSILON
from .wavelet import WAVELETS

CONFIG_KEYS = ("wavelet", "resize", "entropy_levels", "dist_bins", "kl_epsilon", "seed")


@dataclass
class RunConfig:
    wavelet: str = "haar"
    resize: int = 256  # 0 disables resizing
    entropy_levels: int = 256
    dist_bins: int = 32
    kl_epsilon: float = DEFAULT_KL_EPSILON
    seed: int = 0
    workers: int = 1

    def validate(self) -> "RunConfig":
        if self.wavelet not in WAVELETS:
            raise ValueError(f"unknown wavelet {self.wavelet!r}; available: {', '.join(sorted(WAVELETS))}")
        if self.resize != 0 and self.resize < 8:
            raise ValueError(f"resize must be 0 (off) or >= 8, got {self.resize}")
        if self.entropy_levels < 2:
            raise ValueError(f"entropy_levels must be >= 2, got {self.entropy_levels}")
        if self.dist_bins < 1:
            raise ValueError(f"dist_bins must be >= 1, got {self.dist_bins}")
        if self.kl_epsilon <= 0:
            raise ValueError(f"kl_epsilon must be positive, got {self.kl_epsilon}")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        return self

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def describe(self) -> str:
        return " ".join(f"{k}={v}" for k, v in self.as_dict().items())


def load_config_file(path) -> dict:
    """Parse flat key-value lines into typed config fields."""
    text = Path(path).read_text()
    types = {f.name: f.type for f in fields(RunConfig)}
    casts = {"str": str, "int": int, "float": float}
    out: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = body.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in CONFIG_KEYS:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r} (known: {', '.join(CONFIG_KEYS)})")
        try:
            out[key] = casts[types[key]](value)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: bad value {value!r} for {key}") from None
    return out


def write_config_file(path, config: RunConfig) -> None:
    lines = [f"{k} = {getattr(config, k)}" for k in CONFIG_KEYS]
    Path(path).write_text("\n".join(lines) + "\n")
