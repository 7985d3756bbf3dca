"""RunConfig defaults, TOML loading, and validation."""

import math
from pathlib import Path

import pytest

from cddgeo.config import DEFAULT_NOISE, RunConfig, load_config


def test_defaults():
    cfg = RunConfig()
    assert cfg.noise is DEFAULT_NOISE
    assert cfg.grid_n >= 100
    assert cfg.tol == 1e-4
    assert cfg.tol_relaxed == 5e-3
    assert cfg.jobs == 1
    assert cfg.out_dir == Path("out")


def test_default_noise_matches_headline_parameters():
    assert DEFAULT_NOISE.eta == 0.34
    assert abs(DEFAULT_NOISE.omega_c - math.pi / 5.0) < 1e-15
    assert DEFAULT_NOISE.omega_T == DEFAULT_NOISE.omega_c


def test_grid_floor_enforced():
    with pytest.raises(ValueError):
        RunConfig(grid_n=50)


def test_jobs_floor_enforced():
    with pytest.raises(ValueError):
        RunConfig(jobs=0)


def test_tolerance_ordering_enforced():
    with pytest.raises(ValueError):
        RunConfig(tol=1e-2, tol_relaxed=1e-3)
    with pytest.raises(ValueError):
        RunConfig(tol=0.0)


def test_with_overrides_is_a_copy():
    cfg = RunConfig()
    cfg2 = cfg.with_overrides(seed=7, jobs=3)
    assert cfg2.seed == 7 and cfg2.jobs == 3
    assert cfg.seed == 2024 and cfg.jobs == 1


def test_load_config_none_gives_defaults():
    assert load_config(None) == RunConfig()


def test_load_config_toml_round_trip(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(
        "\n".join([
            "grid_n = 500",
            "seed = 99",
            "tol = 1e-5",
            'out_dir = "results"',
            "[noise]",
            "eta = 0.2",
            "omega_c = 0.9",
            "[schedule]",
            "q_start = 5.0",
            "q_stop = 800.0",
            "n_jumps = 40",
        ]),
        encoding="utf-8",
    )
    cfg = load_config(path)
    assert cfg.grid_n == 500
    assert cfg.seed == 99
    assert cfg.tol == 1e-5
    assert cfg.out_dir == Path("results")
    assert cfg.noise.eta == 0.2
    # temperature follows the cutoff when not pinned
    assert cfg.noise.omega_T == cfg.noise.omega_c == 0.9
    assert cfg.schedule.q_start == 5.0
    assert cfg.schedule.q_stop == 800.0
    assert cfg.schedule.n_jumps == 40


def test_load_config_partial_keeps_defaults(tmp_path):
    path = tmp_path / "partial.toml"
    path.write_text("seed = 5\n", encoding="utf-8")
    cfg = load_config(path)
    assert cfg.seed == 5
    assert cfg.grid_n == RunConfig().grid_n
    assert cfg.noise == DEFAULT_NOISE


def test_load_config_pinned_temperature(tmp_path):
    path = tmp_path / "temp.toml"
    path.write_text("[noise]\nomega_c = 0.9\nomega_t = 0.1\n", encoding="utf-8")
    cfg = load_config(path)
    assert cfg.noise.omega_c == 0.9
    assert cfg.noise.omega_T == 0.1
