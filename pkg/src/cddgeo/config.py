"""Run configuration: defaults, TOML loading, and validation."""

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

from .geodesic import DEFAULT_GRID_N, HomotopySchedule
from .noise import NoiseParams

__all__ = ["RunConfig", "load_config", "DEFAULT_NOISE"]

DEFAULT_NOISE = NoiseParams(eta=0.34, omega_c=math.pi / 5.0, omega_T=math.pi / 5.0)


@dataclass(frozen=True)
class RunConfig:
    """Everything a command needs besides its positional inputs."""

    noise: NoiseParams = DEFAULT_NOISE
    grid_n: int = DEFAULT_GRID_N
    schedule: HomotopySchedule = field(default_factory=HomotopySchedule)
    tol: float = 1e-4
    tol_relaxed: float = 5e-3
    seed: int = 2024
    jobs: int = 1
    out_dir: Path = Path("out")

    def __post_init__(self):
        if self.grid_n < 100:
            raise ValueError("grid_n must be >= 100")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        if not 0.0 < self.tol <= self.tol_relaxed:
            raise ValueError("need 0 < tol <= tol_relaxed")
        object.__setattr__(self, "out_dir", Path(self.out_dir))

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **kw)


def _noise_from_table(tab: dict) -> NoiseParams:
    omega_c = float(tab.get("omega_c", DEFAULT_NOISE.omega_c))
    # temperature rides the cutoff unless pinned explicitly
    return NoiseParams(
        eta=float(tab.get("eta", DEFAULT_NOISE.eta)),
        omega_c=omega_c,
        omega_T=float(tab.get("omega_t", omega_c)),
    )


def _schedule_from_table(tab: dict) -> HomotopySchedule:
    return HomotopySchedule(
        q_start=float(tab.get("q_start", 10.0)),
        q_stop=float(tab.get("q_stop", 2000.0)),
        n_jumps=int(tab.get("n_jumps", 100)),
    )


def load_config(path=None) -> RunConfig:
    """Build a RunConfig from a TOML file; missing keys keep defaults."""
    if path is None:
        return RunConfig()
    raw = Path(path).read_bytes()
    data = tomllib.loads(raw.decode("utf-8"))
    kw = {}
    if "noise" in data:
        kw["noise"] = _noise_from_table(data["noise"])
    if "schedule" in data:
        kw["schedule"] = _schedule_from_table(data["schedule"])
    for key in ("grid_n", "seed", "jobs"):
        if key in data:
            kw[key] = int(data[key])
    for key in ("tol", "tol_relaxed"):
        if key in data:
            kw[key] = float(data[key])
    if "out_dir" in data:
        kw["out_dir"] = Path(data["out_dir"])
    return RunConfig(**kw)
