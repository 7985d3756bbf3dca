"""Command-line front end.

Subcommands cover the whole pipeline: synthesize a control field for a
gate, replay it through the master equation against trivial and
noise-only baselines, build costate datasets, train and evaluate the
seed surrogate, and tabulate energy costs.  Structured results go to
JSON, curves to CSV; nothing here plots.

Exit codes: 0 success, 2 result above tolerance, 3 bad input.
"""

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .algebra import axis_from_target, target_from_axis
from .ampdamp import correction_operator, permute_fields, rwa_check
from .config import RunConfig, load_config
from .fields import ControlField
from .gates import gate_axis, gate_names, resolve_gate, synthesize
from .geodesic import extract_control, minimize_infidelity, shoot_newton, solve_homotopy
from .noise import NoiseParams
from .simulator import (
    avg_fidelity_t,
    bloch_export,
    energy_cost,
    fidelity_t,
    solve_jc_amplitude_damping,
    solve_master_dephasing,
    trivial_hamiltonian,
)
from .surrogate import (
    DatasetRecord,
    MlpModel,
    consolidate_records,
    detect_plateau,
    evaluate_histogram,
    generate_targets,
    kfold_crossval,
    load_model,
    load_records,
    predict_costate,
    records_to_arrays,
    save_model,
    save_records,
    split_records,
    train,
)

EXIT_OK = 0
EXIT_TOLERANCE = 2
EXIT_INPUT = 3

_SOLUTION_KEYS = {"u", "lambda0", "q_max", "infidelity", "grid_n", "control"}


class CliError(Exception):
    """Bad input; maps to exit code 3."""


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; 2 is taken by tolerance misses
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(message)


def _json_dump(doc, path: Path) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _csv_dump(path: Path, header, rows) -> None:
    with path.open("w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.12g}" if isinstance(v, float) else v for v in row])


def _parse_triple(text: str) -> np.ndarray:
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise CliError(f"expected comma-separated floats, got {text!r}") from exc
    if len(vals) != 3:
        raise CliError("gate coordinates need exactly three components")
    return np.asarray(vals)


def _build_config(args) -> RunConfig:
    try:
        cfg = load_config(getattr(args, "config", None))
    except (OSError, ValueError) as exc:
        raise CliError(f"config: {exc}") from exc
    over = {}
    if getattr(args, "seed", None) is not None:
        over["seed"] = args.seed
    if getattr(args, "jobs", None) is not None:
        if args.jobs < 1:
            raise CliError("--jobs must be >= 1")
        over["jobs"] = args.jobs
    if getattr(args, "out", None) is not None:
        over["out_dir"] = Path(args.out)
    cfg = cfg.with_overrides(**over) if over else cfg
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    return cfg


def _target_from_args(args):
    """(label, u) from --gate or --u; exactly one must be given."""
    if bool(getattr(args, "gate", None)) == bool(getattr(args, "u", None)):
        raise CliError("give exactly one of --gate or --u")
    if args.gate:
        try:
            name = resolve_gate(args.gate)
        except KeyError as exc:
            raise CliError(f"unknown gate {args.gate!r}; "
                           f"known: {', '.join(gate_names())}") from exc
        return name, None
    u = _parse_triple(args.u)
    if np.linalg.norm(u) > math.pi + 1e-12:
        raise CliError("|u| must not exceed pi")
    return None, u


def _write_solution(sol, q_max, out_dir: Path):
    doc = sol.to_json_dict(q_max=q_max)
    _json_dump(doc, out_dir / "solution.json")
    ctrl = extract_control(sol)
    _csv_dump(out_dir / "control.csv", ("t", "wx", "wy", "wz"),
              zip(ctrl.grid.tolist(), ctrl.wx.tolist(),
                  ctrl.wy.tolist(), ctrl.wz.tolist()))
    return doc


def cmd_synthesize(args) -> int:
    cfg = _build_config(args)
    name, u = _target_from_args(args)
    gate_or_u = name if name is not None else u
    p = cfg.noise

    costate0 = None
    if getattr(args, "costate", None):
        try:
            costate0 = np.asarray([float(x) for x in args.costate.split(",")])
        except ValueError as exc:
            raise CliError("costate must be comma-separated floats") from exc
        if costate0.shape != (6,):
            raise CliError("costate needs exactly six components")
    elif getattr(args, "model", None):
        model = _load_model_checked(args.model)
        target_u = u if u is not None else gate_axis(name)
        costate0 = predict_costate(model, target_u)

    res = synthesize(gate_or_u, p, schedule=cfg.schedule, tol=cfg.tol,
                     tol_relaxed=cfg.tol_relaxed, n_steps=cfg.grid_n,
                     costate0=costate0)
    doc = _write_solution(res.solution, res.q_reached, cfg.out_dir)
    summary = {
        "gate": name,
        "u": doc["u"],
        "infidelity": res.infidelity,
        "q_reached": res.q_reached,
        "converged": bool(res.converged),
        "relaxed": bool(res.relaxed),
        "energy": energy_cost(extract_control(res.solution)),
    }
    _json_dump(summary, cfg.out_dir / "synthesize_summary.json")
    print(f"infidelity {res.infidelity:.3e} (tol {cfg.tol:.0e}); "
          f"artifacts in {cfg.out_dir}")
    return EXIT_OK if res.infidelity <= cfg.tol else EXIT_TOLERANCE


def _load_model_checked(path) -> MlpModel:
    try:
        return load_model(path)
    except (OSError, ValueError, KeyError) as exc:
        raise CliError(f"model file: {exc}") from exc


def _load_solution(path):
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"solution file: {exc}") from exc
    missing = _SOLUTION_KEYS - set(doc)
    if missing:
        raise CliError(f"solution file lacks keys: {sorted(missing)}")
    ctrl = doc["control"]
    try:
        field = ControlField(
            grid=np.asarray(ctrl["t"], dtype=float),
            wx=np.asarray(ctrl["wx"], dtype=float),
            wy=np.asarray(ctrl["wy"], dtype=float),
            wz=np.asarray(ctrl["wz"], dtype=float),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(f"solution control block: {exc}") from exc
    u = None if doc.get("u") is None else np.asarray(doc["u"], dtype=float)
    return field, u, doc


def cmd_simulate(args) -> int:
    cfg = _build_config(args)
    p = cfg.noise
    field, u, doc = _load_solution(args.solution)
    want_trivial = args.baseline == "trivial"
    if want_trivial and u is None:
        raise CliError("solution has no target coordinates; use --baseline none")
    grid = field.grid

    if args.noise == "dephasing":
        plus = 0.5 * np.array([[1.0, 1.0], [1.0, 1.0]], dtype=complex)
        legs = {"optimal": solve_master_dephasing(field, p, plus)}
        if want_trivial:
            triv = trivial_hamiltonian(target_from_axis(u), grid)
            legs["trivial"] = solve_master_dephasing(triv, p, plus)
        legs["noise_only"] = solve_master_dephasing(ControlField.zeros(grid), p, plus)
        curves = {k: fidelity_t(t) for k, t in legs.items()}
        bloch = bloch_export(legs["optimal"])
        energies = {"optimal": energy_cost(field)}
        if want_trivial:
            energies["trivial"] = energy_cost(triv)
        energies["noise_only"] = 0.0
        fid_col = "F"
    else:
        omega0 = p.omega_c if args.omega0 is None else args.omega0
        report = rwa_check(omega0, p)
        if not report.valid:
            print(f"warning: {report.message}", file=sys.stderr)
        permuted = permute_fields(field, omega0)
        curves = {"optimal": avg_fidelity_t(solve_jc_amplitude_damping, permuted,
                                            p, omega0=omega0)}
        baseline_field = permute_fields(ControlField.zeros(grid), omega0)
        curves["noise_only"] = avg_fidelity_t(solve_jc_amplitude_damping,
                                              baseline_field, p, omega0=omega0)
        plus = 0.5 * np.array([[1.0, 1.0], [1.0, 1.0]], dtype=complex)
        bloch = bloch_export(solve_jc_amplitude_damping(permuted, p, plus,
                                                        omega0=omega0))
        energies = {"optimal": energy_cost(field), "noise_only": 0.0}
        fid_col = "Fbar"

    names = sorted(curves)
    _csv_dump(cfg.out_dir / "fidelity.csv",
              ["t"] + [f"{fid_col}_{n}" for n in names],
              zip(grid.tolist(), *[curves[n].tolist() for n in names]))
    _csv_dump(cfg.out_dir / "bloch.csv", ("t", "x", "y", "z", "purity"),
              zip(grid.tolist(), *[bloch[:, i].tolist() for i in range(4)]))
    summary = {
        "noise": args.noise,
        "u": doc.get("u"),
        "fidelity_tau": {n: float(curves[n][-1]) for n in names},
        "energy": energies,
    }
    _json_dump(summary, cfg.out_dir / "simulate_summary.json")
    line = ", ".join(f"{n}={curves[n][-1]:.5f}" for n in names)
    print(f"fidelity at tau: {line}; artifacts in {cfg.out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Dataset generation and surrogate commands.


def _solve_target(u, p: NoiseParams, schedule, tol, tol_relaxed, n_steps):
    res = solve_homotopy(target_from_axis(u), p, schedule=schedule, tol=tol,
                         tol_relaxed=tol_relaxed, n_steps=n_steps)
    return res.costate, res.infidelity, res.q_reached


def _dataset_worker(task):
    u, p, schedule, tol, tol_relaxed, n_steps = task
    try:
        lam, infid, q_reached = _solve_target(u, p, schedule, tol, tol_relaxed,
                                              n_steps)
    except Exception:
        return None
    return [float(x) for x in u], [float(x) for x in lam], infid, q_reached


def generate_dataset(n: int, cfg: RunConfig, threshold: float | None = None,
                     max_attempts: int | None = None, jobs: int | None = None,
                     progress=None):
    """Solve random targets until n records pass the admission threshold.

    Work is farmed to a process pool when jobs > 1; the caller's process
    is the only writer.  Returns (records, n_failed).
    """
    threshold = cfg.tol_relaxed if threshold is None else threshold
    max_attempts = 2 * n if max_attempts is None else max_attempts
    jobs = cfg.jobs if jobs is None else jobs
    records, failed = [], 0
    attempted = 0
    rng_seed = cfg.seed
    while len(records) < n and attempted < max_attempts:
        want = min(max(n - len(records), 1), max_attempts - attempted)
        batch = generate_targets(want, rng_seed + attempted)
        tasks = [(u, cfg.noise, cfg.schedule, cfg.tol, cfg.tol_relaxed,
                  cfg.grid_n) for u in batch]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_dataset_worker, tasks, chunksize=1))
        else:
            results = [_dataset_worker(t) for t in tasks]
        for out in results:
            attempted += 1
            if out is None:
                failed += 1
                continue
            u, lam, infid, q_reached = out
            if infid <= threshold:
                records.append(DatasetRecord(np.asarray(u), np.asarray(lam),
                                             infid, q_reached))
            else:
                failed += 1
            if progress is not None:
                progress(len(records), attempted)
    return records, failed


def cmd_dataset(args) -> int:
    cfg = _build_config(args)
    if args.n < 1:
        raise CliError("--n must be >= 1")
    path = cfg.out_dir / "dataset.jsonl"
    records, failed = generate_dataset(args.n, cfg, threshold=args.threshold)
    replaced = 0
    if args.consolidate:
        records, replaced = consolidate_records(records, cfg.noise,
                                                threshold=args.threshold
                                                or cfg.tol_relaxed)
    save_records(records, path)
    _json_dump({"requested": args.n, "admitted": len(records), "failed": failed,
                "consolidated": replaced},
               cfg.out_dir / "dataset_summary.json")
    print(f"admitted {len(records)}/{args.n} records ({failed} failed) -> {path}")
    return EXIT_OK if len(records) >= args.n else EXIT_TOLERANCE


def _read_dataset(path):
    try:
        records, skipped = load_records(path)
    except OSError as exc:
        raise CliError(f"dataset: {exc}") from exc
    if skipped:
        print(f"skipped {skipped} corrupt record line(s)", file=sys.stderr)
    if not records:
        raise CliError("dataset holds no valid records")
    return records


def cmd_train(args) -> int:
    cfg = _build_config(args)
    records = _read_dataset(args.data)
    train_recs, test_recs = split_records(records, seed=cfg.seed)
    x, y = records_to_arrays(train_recs)

    metrics = {"n_train": len(train_recs), "n_test": len(test_recs)}
    if args.kfold:
        folds, results, mean_val = kfold_crossval(
            x, y, k=args.kfold, epochs=args.epochs, seed=cfg.seed)
        metrics["kfold"] = {
            "k": args.kfold,
            "fold_sizes": [int(f.size) for f in folds],
            "mean_val_mse": mean_val.tolist(),
            "plateau_epoch": detect_plateau(mean_val),
        }

    model = MlpModel.init(seed=cfg.seed)
    xt, yt = records_to_arrays(test_recs) if test_recs else (None, None)
    res = train(model, x, y, epochs=args.epochs, batch=args.batch, lr=args.lr,
                val=None if xt is None else (xt, yt), seed=cfg.seed + 1)
    model_path = cfg.out_dir / "model.json"
    save_model(model, model_path)
    metrics["train_objective"] = res.train_objective.tolist()
    metrics["train_mse"] = res.train_mse.tolist()
    if res.val_mse is not None:
        metrics["val_mse"] = res.val_mse.tolist()
        metrics["plateau_epoch"] = detect_plateau(res.val_mse)
    metrics["diverged"] = bool(res.diverged)
    _json_dump(metrics, cfg.out_dir / "train_metrics.json")
    print(f"trained {args.epochs} epochs on {len(train_recs)} records "
          f"-> {model_path}")
    return EXIT_OK


def _refine_worker(task):
    u, lam, p, threshold, n_steps, max_evals = task
    target = target_from_axis(np.asarray(u))
    try:
        res = minimize_infidelity(np.asarray(lam), target, math.inf, p,
                                  tol=threshold, stop_tol=threshold * 1e-2,
                                  n_steps=n_steps, max_evals=max_evals)
        best_lam, best_inf = res.costate, res.infidelity
        if best_inf > threshold:
            sh = shoot_newton(best_lam, target, math.inf, p, n_steps=n_steps)
            if sh.infidelity < best_inf:
                best_lam, best_inf = sh.costate, sh.infidelity
    except Exception:
        return None
    if best_inf >= threshold:
        return None
    return [float(v) for v in best_lam], float(best_inf)


def cmd_augment(args) -> int:
    cfg = _build_config(args)
    model = _load_model_checked(args.model)
    records = _read_dataset(args.data)
    targets = generate_targets(args.batch, cfg.seed + len(records))
    tasks = [(u, predict_costate(model, u), cfg.noise, args.threshold,
              cfg.grid_n, 600) for u in targets]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_refine_worker, tasks, chunksize=1))
    else:
        results = [_refine_worker(t) for t in tasks]
    admitted = [
        DatasetRecord(np.asarray(u), np.asarray(lam), inf, math.inf)
        for u, out in zip(targets, results) if out is not None
        for lam, inf in (out,)
    ]
    # append-only: the dataset file only ever grows
    with Path(args.data).open("a", encoding="utf-8") as f:
        for rec in admitted:
            f.write(rec.to_json() + "\n")
    n_failed = len(targets) - len(admitted)
    _json_dump({"batch": args.batch, "admitted": len(admitted),
                "failed": n_failed, "dataset_size": len(records) + len(admitted)},
               cfg.out_dir / "augment_summary.json")
    print(f"admitted {len(admitted)}/{args.batch} refined records "
          f"-> appended to {args.data}")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _build_config(args)
    model = _load_model_checked(args.model)
    records = _read_dataset(args.data)
    train_recs, test_recs = split_records(records, seed=cfg.seed)
    if not test_recs:
        raise CliError("dataset too small to carve out a test split")
    rows = []
    fractions = {}
    infids = {}
    for split, recs in (("train", train_recs), ("test", test_recs)):
        frac, edges, inf = evaluate_histogram(model, recs, cfg.noise,
                                              n_steps=cfg.grid_n)
        fractions[split] = frac
        infids[split] = inf
    lows = [0.0] + list(edges)
    highs = list(edges) + [math.inf]
    for i, (lo, hi) in enumerate(zip(lows, highs)):
        rows.append((lo, hi, float(fractions["train"][i]),
                     float(fractions["test"][i])))
    _csv_dump(cfg.out_dir / "histogram.csv",
              ("bin_low", "bin_high", "train_fraction", "test_fraction"), rows)

    pred_rows = []
    for rec in test_recs:
        pred = predict_costate(model, rec.u)
        pred_rows.append(tuple(float(v) for v in rec.lambda0) +
                         tuple(float(v) for v in pred))
    _csv_dump(cfg.out_dir / "predictions.csv",
              tuple(f"actual_{i}" for i in range(6)) +
              tuple(f"predicted_{i}" for i in range(6)), pred_rows)

    def lowest_bin(split):
        # everything below the first decade edge counts as a hit
        return float(fractions[split][0] + fractions[split][1])

    metrics = {
        "n_train": len(train_recs),
        "n_test": len(test_recs),
        "lowest_bin_train": lowest_bin("train"),
        "lowest_bin_test": lowest_bin("test"),
        "median_infidelity_test": float(np.median(infids["test"])),
    }
    _json_dump(metrics, cfg.out_dir / "eval_metrics.json")
    print(f"lowest-bin fraction: train {metrics['lowest_bin_train']:.2f}, "
          f"test {metrics['lowest_bin_test']:.2f}")
    return EXIT_OK


def cmd_compare_energy(args) -> int:
    cfg = _build_config(args)
    wanted = [g.strip() for g in args.gates.split(",") if g.strip()]
    if not wanted:
        raise CliError("--gates list is empty")
    try:
        names = [resolve_gate(g) for g in wanted]
    except KeyError as exc:
        raise CliError(f"unknown gate in --gates: {exc}") from exc
    table = {}
    for name in names:
        res = synthesize(name, cfg.noise, schedule=cfg.schedule, tol=cfg.tol,
                         tol_relaxed=cfg.tol_relaxed, n_steps=cfg.grid_n)
        table[name] = {
            "oc_energy": energy_cost(extract_control(res.solution)),
            "gcdd_energy": "not computed",
            "infidelity": res.infidelity,
        }
    doc = {"units": "hbar/tau", "gates": table}
    _json_dump(doc, cfg.out_dir / "energy_table.json")
    width = max(len(n) for n in table)
    for name, row in table.items():
        print(f"{name:{width}s}  OC {row['oc_energy']:8.4f}  GCDD not computed")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser wiring.


def _add_common(sp):
    sp.add_argument("--config", help="TOML config file")
    sp.add_argument("--seed", type=int, help="master seed override")
    sp.add_argument("--jobs", type=int, help="worker processes for batch work")
    sp.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cddgeo",
                     description="Noise-protective control synthesis toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("synthesize", help="solve a control field for a gate")
    sp.add_argument("--gate", help=f"named gate: {', '.join(gate_names())}")
    sp.add_argument("--u", help="axis-angle coordinates 'a,b,c'")
    sp.add_argument("--costate", help="explicit six-component seed costate")
    sp.add_argument("--model", help="surrogate model file for the seed")
    _add_common(sp)
    sp.set_defaults(func=cmd_synthesize)

    sp = sub.add_parser("simulate", help="replay a solution through the noise model")
    sp.add_argument("--solution", required=True, help="solution JSON from synthesize")
    sp.add_argument("--noise", choices=("dephasing", "ampdamp"),
                    default="dephasing")
    sp.add_argument("--baseline", choices=("trivial", "none"), default="trivial")
    sp.add_argument("--omega0", type=float,
                    help="qubit gap for ampdamp mode (default: bath cutoff)")
    _add_common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("dataset", help="generate a costate training set")
    sp.add_argument("--n", type=int, required=True, help="records to admit")
    sp.add_argument("--threshold", type=float, default=None,
                    help="admission infidelity (default: relaxed tolerance)")
    sp.add_argument("--consolidate", action="store_true",
                    help="re-solve records at q=inf with neighbour-continued "
                         "seeds so stored costates vary smoothly")
    _add_common(sp)
    sp.set_defaults(func=cmd_dataset)

    sp = sub.add_parser("train", help="fit the costate surrogate")
    sp.add_argument("--data", required=True, help="JSONL dataset")
    sp.add_argument("--epochs", type=int, default=400)
    sp.add_argument("--batch", type=int, default=32)
    sp.add_argument("--lr", type=float, default=1e-3)
    sp.add_argument("--kfold", type=int, default=0,
                    help="also run k-fold cross-validation")
    _add_common(sp)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("augment", help="refine model predictions into the dataset")
    sp.add_argument("--data", required=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--batch", type=int, default=100)
    sp.add_argument("--threshold", type=float, default=5e-3)
    _add_common(sp)
    sp.set_defaults(func=cmd_augment)

    sp = sub.add_parser("eval", help="histogram raw-prediction infidelities")
    sp.add_argument("--data", required=True)
    sp.add_argument("--model", required=True)
    _add_common(sp)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("compare-energy", help="tabulate control energy per gate")
    sp.add_argument("--gates", default="hadamard,x,t,identity",
                    help="comma-separated gate names")
    _add_common(sp)
    sp.set_defaults(func=cmd_compare_energy)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
