"""Shared fixtures.

The expensive resources are session-scoped and lazy: the four-gate
solution bundle costs a few seconds, the desk-scale surrogate bundle
(dataset generation, training, one augmentation cycle) costs several
minutes and is built only when a test first asks for it.
"""

import math

import numpy as np
import pytest

from cddgeo.config import RunConfig
from cddgeo.gates import gate_matrix, synthesize
from cddgeo.geodesic import HomotopySchedule, extract_control
from cddgeo.noise import NoiseParams


@pytest.fixture(scope="session")
def p_default() -> NoiseParams:
    return NoiseParams()


@pytest.fixture(scope="session")
def p_eta0() -> NoiseParams:
    return NoiseParams(eta=0.0)


@pytest.fixture(scope="session")
def gate_bundle(p_default):
    """Synthesized solutions and control fields for the four named gates."""
    out = {}
    for name in ("hadamard", "x", "t", "identity"):
        res = synthesize(name, p_default)
        out[name] = {
            "result": res,
            "field": extract_control(res.solution),
            "target": gate_matrix(name),
        }
    return out


REDUCED_SCHEDULE = HomotopySchedule(q_start=10.0, q_stop=500.0, n_jumps=30)


@pytest.fixture(scope="session")
def desk_config() -> RunConfig:
    """Reduced-schedule configuration for dataset generation."""
    return RunConfig(schedule=REDUCED_SCHEDULE, seed=2024)


@pytest.fixture(scope="session")
def surrogate_bundle(desk_config):
    """Desk-scale surrogate pipeline: records, trained model, histograms.

    Built once per session; every consumer reads, none mutates.  The
    recipe: generate 1000 records at the reduced schedule, consolidate
    so costates vary smoothly across targets, train a wide net, run one
    augmentation cycle, warm-retrain at a lower rate.
    """
    import time

    from cddgeo.cli import generate_dataset
    from cddgeo.surrogate import (
        MlpModel,
        augment,
        consolidate_records,
        detect_plateau,
        evaluate_histogram,
        records_to_arrays,
        split_records,
        train,
    )

    cfg = desk_config
    t0 = time.monotonic()
    raw_records, n_failed = generate_dataset(1000, cfg, max_attempts=1600)
    assert len(raw_records) >= 1000, f"only {len(raw_records)} records admitted"
    records, n_consolidated = consolidate_records(raw_records, cfg.noise)

    train_recs, test_recs = split_records(records, seed=cfg.seed)
    x, y = records_to_arrays(train_recs)
    xt, yt = records_to_arrays(test_recs)

    layers = (3,) + (256,) * 5 + (6,)
    model = MlpModel.init(layers, seed=cfg.seed)
    fit = train(model, x, y, epochs=400, batch=32, lr=1e-3, val=(xt, yt),
                seed=cfg.seed + 1)
    plateau = detect_plateau(fit.val_mse)

    new_records, _ = augment(model, cfg.noise, batch=150, threshold=5e-3,
                             seed=5000, max_evals=400)
    grown = train_recs + new_records
    x2, y2 = records_to_arrays(grown)
    fit2 = train(model, x2, y2, epochs=400, batch=32, lr=5e-4, val=(xt, yt),
                 seed=cfg.seed + 2)

    frac_train, edges, infids_train = evaluate_histogram(model, train_recs,
                                                         cfg.noise)
    frac_test, _, infids_test = evaluate_histogram(model, test_recs, cfg.noise)

    return {
        "config": cfg,
        "raw_records": raw_records,
        "records": records,
        "n_consolidated": n_consolidated,
        "train": train_recs,
        "test": test_recs,
        "n_failed": n_failed,
        "model": model,
        "fit": fit,
        "plateau": plateau,
        "augmented": new_records,
        "fit2": fit2,
        "edges": edges,
        "frac_train": frac_train,
        "frac_test": frac_test,
        "infids_train": infids_train,
        "infids_test": infids_test,
        "elapsed_s": time.monotonic() - t0,
    }


def pauli_plus() -> np.ndarray:
    v = np.array([1.0, 1.0]) / math.sqrt(2.0)
    return np.outer(v, v.conj())
