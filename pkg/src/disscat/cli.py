"""Command-line front end: parameter sweeps to reproducible CSV files.

Commands map to the figure data of the study: `spectrum` and
`thirdq-compare` (quadratic-limit spectra), `transition` (smallest decay
rates vs N), `phase-scan` (mean-field order parameter and analytic gap over
a drive/loss grid), `quench` (error-recovery protocol sweeps), and `ns-diag`
(noiseless-subsystem evidence vs N).

Output is UTF-8 CSV with a single `#` metadata line carrying the fully
resolved configuration; floats are written with 17 significant digits so
identical configs reproduce byte-identical files. Sweep points are dispatched
to a worker pool (size from --workers, else DISSCAT_THREADS, else the
processor count); completed rows are flushed in sweep order even when a later
point fails.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from multiprocessing import Pool

import numpy as np

from . import __version__
from .fock import FockSpace, TruncationError, auto_dim
from .lindblad import LindbladModel
from .meanfield import solve as meanfield_solve
from .spectra import (
    DefectiveBlock,
    boundary_leakage_per_mode,
    eig_sectors,
    sector_eigenvalues,
)
from .symmetry import SymmetryViolation, decompose_model
from .thirdq import BrokenPhase, analytic_gap, many_body, single_particle

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

def _numerical_errors():
    from .diagnostics import Ambiguous, NoOffdiagZeroMode
    from .protocol import IntegratorFailure

    return (
        TruncationError,
        DefectiveBlock,
        SymmetryViolation,
        BrokenPhase,
        Ambiguous,
        NoOffdiagZeroMode,
        IntegratorFailure,
        FloatingPointError,
        np.linalg.LinAlgError,
    )


NUMERICAL_ERRORS = _numerical_errors()


class ConfigError(ValueError):
    pass


def parse_range(text) -> list[float]:
    """Sweep range syntax: a single value, start:stop:count, or start:stop:count:log."""
    if isinstance(text, (int, float)):
        return [float(text)]
    parts = str(text).split(":")
    try:
        if len(parts) == 1:
            return [float(parts[0])]
        if len(parts) in (3, 4):
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
            if count < 1:
                raise ConfigError(f"range {text!r} has empty count")
            if len(parts) == 4:
                if parts[3] != "log":
                    raise ConfigError(f"range {text!r}: unknown spacing {parts[3]!r}")
                if start <= 0 or stop <= 0:
                    raise ConfigError(f"log range {text!r} needs positive endpoints")
                return [float(x) for x in np.geomspace(start, stop, count)]
            return [float(x) for x in np.linspace(start, stop, count)]
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"cannot parse range {text!r}: {exc}") from None
    raise ConfigError(f"cannot parse range {text!r}")


def parse_complex(text) -> complex:
    if isinstance(text, complex):
        return text
    if isinstance(text, (int, float)):
        return complex(text)
    parts = str(text).split(",")
    if len(parts) == 2:
        return complex(float(parts[0]), float(parts[1]))
    return complex(str(text))


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17e")
    return str(value)


class CsvWriter:
    """Incremental CSV writer: metadata line, header, then flushed rows."""

    def __init__(self, path: str, columns: list[str], meta: str):
        self.columns = columns
        self.fh = open(path, "w", encoding="utf-8", newline="\n")
        self.fh.write(f"# {meta}\n")
        self.fh.write(",".join(columns) + "\n")
        self.fh.flush()
        self.rows = 0

    def write(self, row: dict):
        missing = [c for c in self.columns if c not in row]
        if missing:
            raise KeyError(f"row missing columns {missing}")
        self.fh.write(",".join(_fmt(row[c]) for c in self.columns) + "\n")
        self.fh.flush()
        self.rows += 1

    def close(self):
        self.fh.close()


def _resolved_meta(command: str, cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return f"disscat {__version__} command={command} config={blob}"


def _model_dim(cfg, n_scale: float) -> int:
    dim = int(cfg["dim"])
    return dim if dim > 0 else auto_dim(n_scale)


# ---------------------------------------------------------------------------
# command implementations; each returns (columns, tasks, task_fn)
# where task_fn(task) -> list of row dicts
# ---------------------------------------------------------------------------

def _spectrum_columns(cfg):
    return ["lam_over_omega", "sector", "idx", "re", "im", "abs", "leakage"]


def _spectrum_rows(task):
    cfg, lam_ratio = task
    omega = cfg["omega"]
    lam = lam_ratio * omega
    model = LindbladModel(
        omega=omega,
        lam=lam,
        kappa1=cfg["kappa1_over_omega"] * omega,
        kappa2=cfg["kappa2_over_omega"] * omega,
        kappad=cfg["kappad_over_omega"] * omega,
        space=FockSpace(int(cfg["dim"])),
    )
    decomp = decompose_model(model)
    spectral = eig_sectors(decomp, want_left=False)
    entries = []
    for sec in spectral.sectors:
        leak = boundary_leakage_per_mode(spectral, sec.label)
        for j, w in enumerate(sec.eigenvalues):
            entries.append((abs(w), sec.label, w, float(leak[j])))
    entries.sort(key=lambda e: (e[0], e[1]))
    rows = []
    for idx, (absw, label, w, leak) in enumerate(entries[: int(cfg["top"])]):
        rows.append({
            "lam_over_omega": lam_ratio, "sector": label, "idx": idx,
            "re": w.real, "im": w.imag, "abs": absw, "leakage": leak,
        })
    return rows


def _transition_columns(cfg):
    cols = ["N", "dim"]
    for k in range(1, int(cfg["modes"]) + 1):
        cols += [f"mode{k}_sector", f"mode{k}_abs", f"mode{k}_re", f"mode{k}_im"]
    return cols


def _transition_rows(task):
    cfg, n_scale = task
    omega = cfg["omega"]
    lam = cfg["lam_over_omega"] * omega
    kappa2 = lam / n_scale
    weak = cfg["symmetry"] == "weak"
    dim = _model_dim(cfg, n_scale)
    model = LindbladModel(
        omega=omega,
        lam=lam,
        kappa1=cfg["kappa1_over_omega"] * omega if weak else 0.0,
        kappa2=kappa2,
        kappad=cfg["kappad_over_omega"] * omega,
        space=FockSpace(dim),
    )
    vals = sector_eigenvalues(model)
    entries = []
    for label, w in vals.items():
        entries.extend((abs(x), label, x) for x in w)
    entries.sort(key=lambda e: (e[0], e[1]))
    row = {"N": n_scale, "dim": dim}
    for k in range(1, int(cfg["modes"]) + 1):
        absw, label, w = entries[k - 1]
        row[f"mode{k}_sector"] = label
        row[f"mode{k}_abs"] = absw
        row[f"mode{k}_re"] = w.real
        row[f"mode{k}_im"] = w.imag
    return [row]


def _phase_scan_columns(cfg):
    return ["lam_over_omega", "kappa1_over_omega", "alpha_re", "alpha_im",
            "population", "arg_alpha", "phase", "boundary_lam_over_omega", "gap"]


def _phase_scan_rows(task):
    cfg, (lam_ratio, kappa1_ratio) = task
    omega = cfg["omega"]
    lam = lam_ratio * omega
    kappa1 = kappa1_ratio * omega
    kappad = cfg["kappad_over_omega"] * omega
    model = LindbladModel(
        omega=omega, lam=lam, kappa1=kappa1,
        kappa2=cfg["kappa2_over_omega"] * omega, kappad=kappad,
        space=FockSpace(4),  # mean-field only; no operator work happens
    )
    mf = meanfield_solve(model)
    gap = analytic_gap(omega, lam, kappa1 + kappad)
    return [{
        "lam_over_omega": lam_ratio,
        "kappa1_over_omega": kappa1_ratio,
        "alpha_re": mf.alpha.real,
        "alpha_im": mf.alpha.imag,
        "population": mf.population,
        "arg_alpha": math.atan2(mf.alpha.imag, mf.alpha.real) if mf.population else 0.0,
        "phase": mf.phase,
        "boundary_lam_over_omega": mf.boundary_lambda / omega,
        "gap": gap,
    }]


def _quench_columns(cfg):
    return ["N", "dim", "tau_q", "tauq_lam", "fidelity", "one_minus_f", "purity_M",
            "deviation", "gamma_m_re", "gamma_m_im", "gamma_f_re", "gamma_f_im",
            "abs_one_minus_gamma_f", "gap_error", "corrected"]


def _quench_rows(task):
    from .diagnostics import ns_analysis
    from .protocol import QuenchSpec, run_quench
    from .symmetry import classify

    cfg, n_scale = task
    kappa2 = 1.0
    lam = n_scale * kappa2
    dim = _model_dim(cfg, n_scale)
    base = LindbladModel(0.0, lam, 0.0, kappa2, 0.0, FockSpace(dim))
    kind = cfg["error"]
    if kind == "omega":
        deltas = {"delta_omega": lam / cfg["lam_over_omega"]}
    elif kind == "kappad":
        deltas = {"delta_kappad": cfg["kappad_over_lam"] * lam}
    elif kind == "kappa1":
        deltas = {"delta_kappa1": cfg["kappa1_over_lam"] * lam}
    else:
        raise ConfigError(f"unknown error kind {kind!r}")

    rows = []
    for tauq_lam in parse_range(cfg["tauq_lam"]):
        tau_q = tauq_lam / lam
        spec = QuenchSpec(base, tau_q=tau_q,
                          c_even=parse_complex(cfg["ce"]), c_odd=parse_complex(cfg["co"]),
                          **deltas)
        rep = run_quench(spec, corrected_tol=cfg["corrected_tol"])
        err_model = spec.error_model
        gap_err = ns_analysis(err_model).gap_broken if classify(err_model).is_strong else float("nan")
        rows.append({
            "N": n_scale, "dim": dim, "tau_q": tau_q, "tauq_lam": tauq_lam,
            "fidelity": rep.fidelity, "one_minus_f": 1.0 - rep.fidelity,
            "purity_M": rep.purity_M, "deviation": rep.deviation,
            "gamma_m_re": rep.gamma_m.real, "gamma_m_im": rep.gamma_m.imag,
            "gamma_f_re": rep.gamma_f.real, "gamma_f_im": rep.gamma_f.imag,
            "abs_one_minus_gamma_f": abs(1.0 - rep.gamma_f),
            "gap_error": gap_err, "corrected": rep.corrected,
        })
    return rows


def _ns_diag_columns(cfg):
    return ["N", "dim", "dt_zpp_zmm", "dt_zpp_zpm", "z_purity", "decay_rate",
            "decay_r2", "lambda_offdiag_min", "q_dev", "q_dev_weighted",
            "gamma_m_re", "gamma_m_im", "gamma_f_re", "gamma_f_im",
            "abs_one_minus_gamma_f", "gap_broken"]


def _ns_diag_rows(task):
    from .diagnostics import gamma_factors, ns_analysis

    cfg, n_scale = task
    kappa2 = 1.0
    lam = n_scale * kappa2
    dim = _model_dim(cfg, n_scale)
    space = FockSpace(dim)
    base = LindbladModel(0.0, lam, 0.0, kappa2, 0.0, space)
    if cfg["error"] == "kappad":
        model = LindbladModel(0.0, lam, 0.0, kappa2, cfg["kappad_over_lam"] * lam, space)
    elif cfg["error"] == "omega":
        model = LindbladModel(cfg["omega_over_lam"] * lam, lam, 0.0, kappa2, 0.0, space)
    else:
        raise ConfigError(f"unknown error kind {cfg['error']!r}")
    a = ns_analysis(model)
    gamma_m, gamma_f = gamma_factors(base, model)
    row = {
        "N": n_scale, "dim": dim,
        "dt_zpp_zmm": a.dt_zpp_zmm, "dt_zpp_zpm": a.dt_zpp_zpm,
        "z_purity": a.z_purity, "decay_rate": a.decay_rate, "decay_r2": a.decay_r2,
        "lambda_offdiag_min": a.lambda_offdiag_min,
        "q_dev": a.q_identity_deviation, "q_dev_weighted": a.q_identity_deviation_weighted,
        "gamma_m_re": gamma_m.real, "gamma_m_im": gamma_m.imag,
        "gamma_f_re": gamma_f.real, "gamma_f_im": gamma_f.imag,
        "abs_one_minus_gamma_f": abs(1.0 - gamma_f),
        "gap_broken": a.gap_broken,
    }
    extras = {"zdiag": [], "qblock": []}
    zdiag = np.real(np.diag(a.z_pp))
    for i, z in enumerate(zdiag):
        extras["zdiag"].append({"N": n_scale, "i": i, "z_pp_ii": float(z)})
    kq = min(int(cfg["qblock_size"]), a.q_pm.shape[0], a.q_pm.shape[1])
    for i in range(kq):
        for j in range(kq):
            extras["qblock"].append({
                "N": n_scale, "i": i, "j": j,
                "q_re": float(a.q_pm[i, j].real), "q_im": float(a.q_pm[i, j].imag),
            })
    return [(row, extras)]


def _thirdq_columns(cfg):
    return ["lam_over_omega", "idx", "ed_re", "ed_im", "leakage",
            "n", "m", "analytic_re", "analytic_im", "abs_err"]


def _thirdq_rows(task):
    cfg, lam_ratio = task
    omega = cfg["omega"]
    lam = lam_ratio * omega
    kappa1 = cfg["kappa1_over_omega"] * omega
    model = LindbladModel(omega, lam, kappa1, 0.0, 0.0, FockSpace(int(cfg["dim"])))
    decomp = decompose_model(model)
    spectral = eig_sectors(decomp, want_left=False)
    entries = []
    for sec in spectral.sectors:
        leak = boundary_leakage_per_mode(spectral, sec.label)
        for j, w in enumerate(sec.eigenvalues):
            entries.append((abs(w), w, float(leak[j])))
    entries.sort(key=lambda e: e[0])
    kept = [e for e in entries if e[2] <= cfg["leak_tol"]]

    sp = single_particle(omega, lam, kappa1)
    grid = many_body(sp, int(cfg["grid_max"]), int(cfg["grid_max"]))
    grid_vals = np.array([mo[2] for mo in grid.modes])
    grid_nm = [(mo[0], mo[1]) for mo in grid.modes]

    rows = []
    for idx, (absw, w, leak) in enumerate(kept[: int(cfg["top"])]):
        j = int(np.argmin(np.abs(grid_vals - w)))
        n, m = grid_nm[j]
        rows.append({
            "lam_over_omega": lam_ratio, "idx": idx,
            "ed_re": w.real, "ed_im": w.imag, "leakage": leak,
            "n": n, "m": m,
            "analytic_re": grid_vals[j].real, "analytic_im": grid_vals[j].imag,
            "abs_err": float(abs(w - grid_vals[j])),
        })
    return rows


COMMANDS = {
    "spectrum": {
        "columns": _spectrum_columns,
        "rows": _spectrum_rows,
        "defaults": {"omega": 1.0, "kappa1_over_omega": 0.0, "kappa2_over_omega": 0.0,
                     "kappad_over_omega": 0.0, "lam_over_omega": None, "dim": 70, "top": 25},
        "required": ["lam_over_omega"],
        "sweep": lambda cfg: parse_range(cfg["lam_over_omega"]),
    },
    "transition": {
        "columns": _transition_columns,
        "rows": _transition_rows,
        "defaults": {"omega": 1.0, "symmetry": "strong", "N": None, "lam_over_omega": 2.0,
                     "kappad_over_omega": 0.01, "kappa1_over_omega": 0.02, "modes": 0,
                     "dim": 0},
        "required": ["N"],
        "sweep": lambda cfg: parse_range(cfg["N"]),
    },
    "phase-scan": {
        "columns": _phase_scan_columns,
        "rows": _phase_scan_rows,
        "defaults": {"omega": 1.0, "lam_over_omega": None, "kappa1_over_omega": None,
                     "kappad_over_omega": 0.0, "kappa2_over_omega": 0.0},
        "required": ["lam_over_omega", "kappa1_over_omega"],
        "sweep": lambda cfg: [(l, k) for l in parse_range(cfg["lam_over_omega"])
                              for k in parse_range(cfg["kappa1_over_omega"])],
    },
    "quench": {
        "columns": _quench_columns,
        "rows": _quench_rows,
        "defaults": {"error": None, "N": None, "tauq_lam": "10", "lam_over_omega": 2.0,
                     "kappad_over_lam": 0.03, "kappa1_over_lam": 0.03,
                     "ce": "0.7071067811865476,0", "co": "0,0.7071067811865476",
                     "corrected_tol": 1e-2, "dim": 0},
        "required": ["error", "N"],
        "sweep": lambda cfg: parse_range(cfg["N"]),
    },
    "ns-diag": {
        "columns": _ns_diag_columns,
        "rows": _ns_diag_rows,
        "defaults": {"error": None, "N": None, "kappad_over_lam": 0.03,
                     "omega_over_lam": 0.5, "dim": 0, "qblock_size": 10,
                     "zdiag_out": "", "qblock_out": ""},
        "required": ["error", "N"],
        "sweep": lambda cfg: parse_range(cfg["N"]),
    },
    "thirdq-compare": {
        "columns": _thirdq_columns,
        "rows": _thirdq_rows,
        "defaults": {"omega": 1.0, "kappa1_over_omega": 2.0, "lam_over_omega": None,
                     "dim": 70, "top": 25, "grid_max": 24, "leak_tol": 1e-6},
        "required": ["lam_over_omega"],
        "sweep": lambda cfg: parse_range(cfg["lam_over_omega"]),
    },
}


def _worker(packed):
    command, task = packed
    try:
        return ("ok", COMMANDS[command]["rows"](task))
    except NUMERICAL_ERRORS as exc:
        return ("numerical", {"type": type(exc).__name__, "message": str(exc), "task": repr(task[1])})
    except ConfigError as exc:
        return ("config", {"type": "ConfigError", "message": str(exc), "task": repr(task[1])})


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="disscat",
        description="Driven-dissipative parity-symmetric mode: sweeps and figure data.",
    )
    parser.add_argument("--version", action="version", version=f"disscat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, info in COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--out", required=True, help="output CSV path")
        p.add_argument("--config", default=None, help="JSON config file (flags override it)")
        p.add_argument("--workers", type=int, default=None,
                       help="worker pool size (default: DISSCAT_THREADS or CPU count)")
        p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
        p.add_argument("--json-summary", default=None, help="write a JSON run summary here")
        for key, default in info["defaults"].items():
            flag = "--" + key.replace("_", "-")
            if isinstance(default, int) and not isinstance(default, bool):
                p.add_argument(flag, type=int, default=argparse.SUPPRESS)
            elif isinstance(default, float):
                p.add_argument(flag, type=float, default=argparse.SUPPRESS)
            else:
                p.add_argument(flag, default=argparse.SUPPRESS)
    return parser


def _emit_error(kind: str, payload: dict):
    sys.stderr.write(json.dumps({"error": kind, **payload}, sort_keys=True, default=str) + "\n")


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    info = COMMANDS[command]
    cfg = dict(info["defaults"])
    cfg["seed"] = 0
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}") from None
        unknown = set(file_cfg) - set(cfg)
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        cfg.update(file_cfg)
    for key in list(cfg):
        if hasattr(args, key):
            cfg[key] = getattr(args, key)
    missing = [k for k in info["required"] if cfg.get(k) is None]
    if missing:
        raise ConfigError(f"missing required options: {', '.join(sorted(missing))}")
    if command == "transition":
        if cfg["symmetry"] not in ("strong", "weak"):
            raise ConfigError(f"symmetry must be strong or weak, got {cfg['symmetry']!r}")
        if int(cfg["modes"]) <= 0:
            cfg["modes"] = 4 if cfg["symmetry"] == "strong" else 2
    return cfg


def run(command: str, cfg: dict, out_path: str, workers: int | None,
        json_summary: str | None = None) -> int:
    info = COMMANDS[command]
    try:
        sweep = info["sweep"](cfg)
    except ConfigError as exc:
        _emit_error("config", {"message": str(exc)})
        return EXIT_CONFIG
    if workers is None:
        workers = int(os.environ.get("DISSCAT_THREADS", 0)) or (os.cpu_count() or 1)

    columns = info["columns"](cfg)
    meta = _resolved_meta(command, cfg)
    writer = CsvWriter(out_path, columns, meta)
    extra_writers = {}
    if command == "ns-diag":
        if cfg.get("zdiag_out"):
            extra_writers["zdiag"] = CsvWriter(cfg["zdiag_out"], ["N", "i", "z_pp_ii"], meta)
        if cfg.get("qblock_out"):
            extra_writers["qblock"] = CsvWriter(cfg["qblock_out"], ["N", "i", "j", "q_re", "q_im"], meta)

    tasks = [(command, (cfg, point)) for point in sweep]
    status = EXIT_OK
    try:
        if workers <= 1 or len(tasks) <= 1:
            results = map(_worker, tasks)
            _consume = None
        else:
            _consume = Pool(processes=min(workers, len(tasks)))
            results = _consume.imap(_worker, tasks)
        for outcome, payload in results:
            if outcome != "ok":
                _emit_error(outcome, payload)
                status = EXIT_CONFIG if outcome == "config" else EXIT_NUMERICAL
                break
            for item in payload:
                if isinstance(item, tuple):
                    row, extras = item
                    writer.write(row)
                    for key, wtr in extra_writers.items():
                        for extra_row in extras.get(key, []):
                            wtr.write(extra_row)
                else:
                    writer.write(item)
        if _consume is not None:
            _consume.terminate()
            _consume.join()
    finally:
        writer.close()
        for wtr in extra_writers.values():
            wtr.close()

    if json_summary:
        with open(json_summary, "w", encoding="utf-8") as fh:
            json.dump({"command": command, "config": cfg, "rows": writer.rows,
                       "out": out_path, "exit": status}, fh, sort_keys=True, default=str)
            fh.write("\n")
    return status


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args.command, args)
    except ConfigError as exc:
        _emit_error("config", {"message": str(exc)})
        return EXIT_CONFIG
    try:
        return run(args.command, cfg, args.out, args.workers, args.json_summary)
    except NUMERICAL_ERRORS as exc:
        _emit_error("numerical", {"type": type(exc).__name__, "message": str(exc)})
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
