"""Energy-minimal continuous driving fields for single-qubit gates under
dephasing noise, with an amplitude-damping variant by axis permutation.

The workflow: pick a target gate, solve the costate boundary-value
problem on the noise-purified group (`geodesic`, seeded per gate by
`gates`), read off the lab-frame drive (`fields`), and audit it against
the master equation (`simulator`).  `surrogate` learns costate seeds so
repeated syntheses skip the homotopy ramp.
"""

from ._kernels import BACKEND
from .algebra import axis_from_target, infidelity, target_from_axis
from .ampdamp import conjugate_target, correction_operator, permute_fields, rwa_check
from .config import DEFAULT_NOISE, RunConfig, load_config
from .fields import ControlField
from .gates import GATES, gate_axis, gate_matrix, gate_names, protective_seed, synthesize
from .geodesic import (
    GeodesicSolution,
    HomotopyResult,
    HomotopySchedule,
    extract_control,
    minimize_infidelity,
    penalized_energy,
    propagate_penalized,
    propagate_sub_riemannian,
    seed_costate,
    shoot_newton,
    solve_homotopy,
)
from .noise import NoiseParams, ancilla_coupling, bath_correlation, coherence_factor
from .simulator import (
    avg_fidelity_t,
    energy_cost,
    exact_no_control,
    fidelity_t,
    solve_jc_amplitude_damping,
    solve_master_dephasing,
    trivial_hamiltonian,
)
from .surrogate import (
    MlpModel,
    augment,
    consolidate_records,
    evaluate_histogram,
    generate_targets,
    kfold_crossval,
    load_model,
    predict_costate,
    save_model,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ControlField",
    "DEFAULT_NOISE",
    "GATES",
    "GeodesicSolution",
    "HomotopyResult",
    "HomotopySchedule",
    "MlpModel",
    "NoiseParams",
    "RunConfig",
    "ancilla_coupling",
    "augment",
    "avg_fidelity_t",
    "axis_from_target",
    "bath_correlation",
    "coherence_factor",
    "conjugate_target",
    "consolidate_records",
    "correction_operator",
    "energy_cost",
    "evaluate_histogram",
    "exact_no_control",
    "extract_control",
    "fidelity_t",
    "gate_axis",
    "gate_matrix",
    "gate_names",
    "generate_targets",
    "infidelity",
    "kfold_crossval",
    "load_config",
    "load_model",
    "minimize_infidelity",
    "penalized_energy",
    "permute_fields",
    "predict_costate",
    "propagate_penalized",
    "propagate_sub_riemannian",
    "protective_seed",
    "rwa_check",
    "save_model",
    "seed_costate",
    "shoot_newton",
    "solve_homotopy",
    "solve_jc_amplitude_damping",
    "solve_master_dephasing",
    "synthesize",
    "target_from_axis",
    "train",
    "trivial_hamiltonian",
    "__version__",
]
