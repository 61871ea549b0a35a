"""``hyperspec`` command-line front end.

Exit codes: 0 success, 2 usage error, 3 configuration/input error,
4 computation error, 5 fit did not converge.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .config import TASKS, ConfigError, RunConfig, UsageError, parse_config, read_series, write_series
from .electronic import (
    CrystalFieldParams,
    FreeIonParams,
    build_electronic_hamiltonian,
    diagonalize_electronic,
)
from .hyperfine import HyperfineParams, HyperfineSystem, NuclearParams, second_order_oracle
from .lineshape import fit_echo_decay, fit_line, fit_modulated_echo
from .photonics import Cavity, purcell_chain
from .shb import LevelScheme, fit_hole_decay, simulate_spectrum
from .spinfit import FitError, fit_hyperfine_constants, fit_spin_hamiltonian_from_model

log = logging.getLogger("hyperspec")

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_COMPUTE, EXIT_NOCONVERGE = 0, 2, 3, 4, 5
CF_MISSING = "CF parameters not supplied"


class ComputeError(RuntimeError):
    def __init__(self, module: str, msg: str):
        super().__init__(f"[{module}] {msg}")
        self.module = module


@dataclass
class RunReport:
    task: str
    status: str
    config_hash: str
    version: str
    outputs: dict
    seed: int
    threads: int
    warnings: list = field(default_factory=list)
    defaults_applied: list = field(default_factory=list)
    inputs: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)
    wall_time_s: float = 0.0

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "status": self.status,
            "config_hash": self.config_hash,
            "version": self.version,
            "seed": self.seed,
            "threads": self.threads,
            "inputs": self.inputs,
            "defaults_applied": self.defaults_applied,
            "outputs": _jsonable(self.outputs),
            "warnings": self.warnings,
            "artifacts": self.artifacts,
            "wall_time_s": self.wall_time_s,
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


# --- tasks ---------------------------------------------------------------------

def _electronic(cfg: RunConfig):
    fi_sec = cfg.get("free_ion")
    fi = FreeIonParams(**fi_sec)
    cf_sec = cfg.get("crystal_field")
    cf = CrystalFieldParams(cf_sec["bkq"], cf_sec["site_symmetry"])
    tol = cfg.get("numeric").get("degeneracy_tol", 0.01)
    levels = diagonalize_electronic(build_electronic_hamiltonian(fi, cf), degeneracy_tol=tol)
    return fi, cf, levels


def _nuclear(cfg) -> NuclearParams:
    ion = cfg.get("ion")
    return NuclearParams(ion["nuclear_spin"], ion["g_n"])


def _systems(cfg, levels, cf):
    ion = cfg.get("ion")
    nuc = _nuclear(cfg)
    return {role: HyperfineSystem(levels, cf, ion[role], nuc, g_e=ion["g_e"])
            for role in ("ground", "excited")}


def _cf_missing(cfg: RunConfig) -> dict:
    fi = FreeIonParams(**cfg.get("free_ion"))
    levels = diagonalize_electronic(build_electronic_hamiltonian(fi, CrystalFieldParams({}, "C1")))
    centroids = {}
    for m in dict.fromkeys(levels.multiplet):
        centroids[str(m)] = float(np.mean(levels.multiplet_energies(m)))
    return {"message": CF_MISSING + "; crystal-field dependent results were not computed. "
                       "Supply B_kq values in [crystal_field] and set placeholder = false.",
            "free_ion_multiplets_cm-1": centroids}


def task_levels(cfg: RunConfig, threads: int, seed: int, out: Path):
    if not cfg.cf_supplied:
        return CF_MISSING, _cf_missing(cfg), []
    _, cf, levels = _electronic(cfg)
    hf = HyperfineParams(**cfg.get("hyperfine"))
    pair_tol = cfg.get("numeric")["pair_tol"]
    outputs = {"cf_levels_cm-1": {}, "hyperfine": {}}
    for role, sys_ in _systems(cfg, levels, cf).items():
        outputs["cf_levels_cm-1"][role] = (levels.multiplet_energies(sys_.multiplet)).tolist()
        zf = sys_.zero_field_splittings(hf, 0, pair_tol_hz=pair_tol)
        d = zf.to_dict()
        d["contributions"] = sys_.contribution_analysis(hf, 0)
        try:
            d["second_order_splittings_MHz"] = second_order_oracle(sys_, hf).tolist()
        except ValueError as exc:
            d["second_order_splittings_MHz"] = None
            warnings.warn(str(exc))
        outputs["hyperfine"][role] = d
    path = out / "levels.csv"
    write_series(path, ("index", "energy_cm-1"), (np.arange(len(levels.energies)), levels.energies))
    outputs["multiplet_labels"] = [str(m) for m in levels.multiplet]
    return "ok", outputs, [str(path)]


def task_fit_ai(cfg: RunConfig, threads: int, seed: int, out: Path):
    if not cfg.cf_supplied:
        return CF_MISSING, _cf_missing(cfg), []
    _, cf, levels = _electronic(cfg)
    sec = cfg.get("fit_ai")
    systems = _systems(cfg, levels, cf)
    targets = sec["targets"]
    if len(targets) != 4:
        raise ConfigError("fit_ai.targets: expected 4 splittings (2 ground, 2 excited)")
    init = HyperfineParams(sec["init_a1"], sec["init_a2"], sec["init_a3"])
    rep = fit_hyperfine_constants(targets, [(systems["ground"], 0), (systems["excited"], 0)], init,
                                  max_nfev=sec["max_iterations"])
    return "ok", rep.to_dict(), []


def task_fit_spinham(cfg: RunConfig, threads: int, seed: int, out: Path):
    if not cfg.cf_supplied:
        return CF_MISSING, _cf_missing(cfg), []
    _, cf, levels = _electronic(cfg)
    hf = HyperfineParams(**cfg.get("hyperfine"))
    sec = cfg.get("spinham")
    systems = _systems(cfg, levels, cf)
    outputs = {}
    for role in sec["levels"]:
        if role not in systems:
            raise ConfigError(f"spinham.levels: unknown level {role!r} (use ground/excited)")
        rep = fit_spin_hamiltonian_from_model(systems[role], hf, 0, sec["directions"], sec["field"],
                                              threads, n_starts=sec["starts"], seed=seed,
                                              shared_axes=sec["shared_axes"])
        d = rep.to_dict()
        d.pop("spin_params", None)
        outputs[role] = d
    return "ok", outputs, []


def task_shb(cfg: RunConfig, threads: int, seed: int, out: Path):
    sec = cfg.get("shb")
    kw = {}
    if sec["strengths"] is not None:
        kw["strengths"] = np.asarray(sec["strengths"])
    if sec["degeneracy"] is not None:
        kw["degeneracy"] = tuple(sec["degeneracy"])
    scheme = LevelScheme.from_splittings(sec["ground_splittings"], sec["excited_splittings"], **kw)
    spec = simulate_spectrum(scheme, sec["width"], sec["depth"],
                             (sec["grid_start"], sec["grid_stop"], sec["grid_step"]))
    outputs = {"scheme": {"ground_MHz": list(scheme.ground), "excited_MHz": list(scheme.excited)},
               **spec.to_dict(),
               "antiholes_MHz": [f.detuning for f in spec.features if f.kind == "antihole"],
               "holes_MHz": [f.detuning for f in spec.features if f.kind == "hole"]}
    arts = []
    p = out / "spectrum.csv"
    write_series(p, ("detuning_MHz", "delta_absorption"), (spec.detuning, spec.delta_absorption))
    arts.append(str(p))
    p = out / "features.json"
    p.write_text(json.dumps(_jsonable(spec.to_dict()), indent=2, sort_keys=True) + "\n")
    arts.append(str(p))
    if sec["decay_input"]:
        t, y, _ = read_series(sec["decay_input"], "s")
        outputs["hole_decay"] = fit_hole_decay(t, y, sec["optical_t1"]).to_dict()
    return "ok", outputs, arts


def task_echo(cfg: RunConfig, threads: int, seed: int, out: Path):
    sec = cfg.get("echo")
    t, y, sigma = read_series(sec["input"], "s")
    if not sec["modulated"]:
        return "ok", fit_echo_decay(t, y, sigma).to_dict(), []
    init = {}
    if sec["init_T2"] is not None:
        init["T2"] = sec["init_T2"]
    if sec["init_m"] is not None:
        init["m"] = sec["init_m"]
    if sec["init_frequency"] is not None:
        init["omega"] = 2 * math.pi * sec["init_frequency"]
    fit = fit_modulated_echo(t, y, init, sigma, n_omega=sec["omega_starts"])
    return "ok", fit.to_dict(), []


def task_line(cfg: RunConfig, threads: int, seed: int, out: Path):
    sec = cfg.get("line")
    x, y, sigma = read_series(sec["input"], "Hz")
    return "ok", fit_line(x, y, sec["kind"], sigma).to_dict(), []


def task_purcell(cfg: RunConfig, threads: int, seed: int, out: Path):
    s = cfg.get("purcell")
    if s["P_avg"] is None and s["P_single"] is None and s["xi"] is None:
        raise ConfigError("purcell: give one of P_avg, P_single or xi")
    cav = Cavity.from_inputs(s["finesse"], s["length"], s["mirror_roc"], s["wavelength"],
                             s["Q"], s["V"], s["waist"])
    res = purcell_chain(P_avg=s["P_avg"], P_single=s["P_single"], xi=s["xi"], T1=s["T1"], T2=s["T2"],
                        wavelength=s["wavelength"], n=s["n"], cavity=cav,
                        convention=s["convention"], local_field=s["local_field"])
    return "ok", res, []


DISPATCH = {
    "levels": ("hyperfine", task_levels),
    "fit-ai": ("spinfit", task_fit_ai),
    "fit-spinham": ("spinfit", task_fit_spinham),
    "shb": ("shb", task_shb),
    "echo-fit": ("lineshape", task_echo),
    "line-fit": ("lineshape", task_line),
    "purcell": ("photonics", task_purcell),
}


def run(cfg: RunConfig, out_dir: Path | str | None = None, threads: int | None = None,
        seed: int | None = None) -> RunReport:
    """Execute the configured task and write ``report.json`` into ``out_dir``."""
    runsec = cfg.get("run")
    threads = threads if threads is not None else runsec.get("threads", 1)
    seed = seed if seed is not None else runsec.get("seed", 0)
    if threads < 1:
        raise ConfigError("threads must be >= 1")
    out = Path(out_dir if out_dir is not None else runsec.get("output", "hyperspec_out"))
    out.mkdir(parents=True, exist_ok=True)
    module, fn = DISPATCH[cfg.task]
    t0 = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught, threadpool_limits(limits=1):
        # BLAS stays single-threaded so results do not depend on --threads
        warnings.simplefilter("always")
        try:
            status, outputs, arts = fn(cfg, threads, seed, out)
        except (ConfigError, FitError):
            raise
        except (ValueError, ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
            raise ComputeError(module, f"{exc} (config: {cfg.path})") from exc
    msgs = sorted({f"{w.category.__name__}: {w.message}" for w in caught})
    if status == CF_MISSING:
        msgs.append(CF_MISSING)
    rep = RunReport(cfg.task, status, cfg.config_hash, __version__, outputs, seed, threads, msgs,
                    cfg.defaults_applied, cfg.inputs, arts, round(time.perf_counter() - t0, 6))
    path = out / "report.json"
    path.write_text(json.dumps(rep.to_dict(), indent=2, sort_keys=True) + "\n")
    return rep


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hyperspec", description=__doc__.splitlines()[0])
    p.add_argument("task", nargs="?", choices=TASKS, help="task to run (or run.task in the config)")
    p.add_argument("--config", required=True, help="TOML run configuration")
    p.add_argument("--out", help="output directory (default: run.output)")
    p.add_argument("--threads", type=int, help="worker threads (default: run.threads)")
    p.add_argument("--seed", type=int, help="random seed (default: run.seed)")
    p.add_argument("--modulated", action="store_true", help="echo-fit: use the modulated-echo model")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=f"hyperspec {__version__}")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(args.config, args.task)
        if args.modulated:
            if cfg.task != "echo-fit":
                raise ConfigError("--modulated only applies to echo-fit")
            cfg.sections["echo"]["modulated"] = True
        rep = run(cfg, args.out, args.threads, args.seed)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"hyperspec: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"hyperspec: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FitError as exc:
        print(f"hyperspec: [spinfit] fit did not converge: {exc}", file=sys.stderr)
        return EXIT_NOCONVERGE
    except ComputeError as exc:
        print(f"hyperspec: computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    print(json.dumps({"task": rep.task, "status": rep.status,
                      "report": str(Path(args.out or cfg.get("run").get("output", "hyperspec_out"))
                                    / "report.json")}))
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
