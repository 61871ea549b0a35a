"""Run configuration: TOML parsing, validation, defaults and CSV ingestion.

Every dimensioned value must carry a unit, written as a string such as
``"68955 cm^-1"`` or ``"5 mT"``.  Unknown sections or keys are errors.
Values are stored in the internal units listed in :data:`SCHEMA`.
"""
from __future__ import annotations

import csv
import hashlib
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .units import UnitError, to_si, ureg

TASKS = ("levels", "fit-ai", "fit-spinham", "shb", "echo-fit", "line-fit", "purcell")
REQUIRED = object()


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field path."""


class UsageError(ConfigError):
    """No task selected or conflicting task selection."""


# kind, internal unit, default
SCHEMA: dict[str, dict[str, tuple]] = {
    "run": {
        "task": ("str", None, None),
        "seed": ("int", None, 0),
        "threads": ("int", None, 1),
        "output": ("str", None, "hyperspec_out"),
    },
    "ion": {
        "ground": ("str", None, "3H4"),
        "excited": ("str", None, "1D2"),
        "nuclear_spin": ("float", None, 2.5),
        "g_n": ("float", None, 1.6),
        "g_e": ("float", None, 2.0023),
    },
    "free_ion": {
        "F2": ("quantity", "cm^-1", REQUIRED),
        "F4": ("quantity", "cm^-1", REQUIRED),
        "F6": ("quantity", "cm^-1", REQUIRED),
        "zeta": ("quantity", "cm^-1", REQUIRED),
        "alpha": ("quantity", "cm^-1", 0.0),
        "beta": ("quantity", "cm^-1", 0.0),
        "gamma": ("quantity", "cm^-1", 0.0),
    },
    # crystal_field is validated separately (B_kq keys, complex values)
    "hyperfine": {
        "a1": ("quantity", "MHz", REQUIRED),
        "a2": ("quantity", "MHz", REQUIRED),
        "a3": ("float", None, REQUIRED),
    },
    "fit_ai": {
        "targets": ("quantity_list", "MHz", REQUIRED),
        "init_a1": ("quantity", "MHz", 500.0),
        "init_a2": ("quantity", "MHz", 20.0),
        "init_a3": ("float", None, 3e-8),
        "max_iterations": ("int", None, 500),
    },
    "spinham": {
        "field": ("quantity", "T", 5e-3),
        "directions": ("int", None, 100),
        "starts": ("int", None, 8),
        "shared_axes": ("bool", None, False),
        "levels": ("str_list", None, ["ground", "excited"]),
    },
    "shb": {
        "ground_splittings": ("quantity_list", "MHz", REQUIRED),
        "excited_splittings": ("quantity_list", "MHz", REQUIRED),
        "strengths": ("matrix", None, None),
        "degeneracy": ("float_list", None, None),
        "width": ("quantity", "MHz", 0.1),
        "depth": ("float", None, 0.5),
        "grid_start": ("quantity", "MHz", -20.0),
        "grid_stop": ("quantity", "MHz", 20.0),
        "grid_step": ("quantity", "MHz", 0.01),
        "decay_input": ("path", None, None),
        "optical_t1": ("quantity", "s", None),
    },
    "echo": {
        "input": ("path", None, REQUIRED),
        "modulated": ("bool", None, False),
        "init_T2": ("quantity", "s", None),
        "init_m": ("float", None, None),
        "init_frequency": ("quantity", "Hz", None),
        "omega_starts": ("int", None, 20),
    },
    "line": {
        "input": ("path", None, REQUIRED),
        "kind": ("str", None, "auto"),
    },
    "purcell": {
        "wavelength": ("quantity", "m", 619.011e-9),
        "n": ("float", None, 1.93),
        "finesse": ("float", None, 1e5),
        "length": ("quantity", "m", 2e-6),
        "mirror_roc": ("quantity", "m", 22e-6),
        "Q": ("float", None, None),
        "V": ("quantity", "m**3", None),
        "waist": ("quantity", "m", None),
        "T1": ("quantity", "s", 140e-6),
        "T2": ("quantity", "s", 3e-6),
        "P_avg": ("float", None, None),
        "P_single": ("float", None, None),
        "xi": ("float", None, None),
        "convention": ("str", None, "vacuum"),
        "local_field": ("str", None, "absorption"),
    },
    "numeric": {
        "degeneracy_tol": ("quantity", "cm^-1", 0.01),
        "pair_tol": ("quantity", "Hz", 10.0),
    },
}

CF_META = {"unit", "site_symmetry", "placeholder", "source"}
_BKQ = re.compile(r"^B(2|4|6)(-?\d)$")

TASK_SECTIONS = {
    "levels": ("free_ion", "crystal_field", "hyperfine"),
    "fit-ai": ("free_ion", "crystal_field", "fit_ai"),
    "fit-spinham": ("free_ion", "crystal_field", "hyperfine"),
    "shb": ("shb",),
    "echo-fit": ("echo",),
    "line-fit": ("line",),
    "purcell": (),
}


@dataclass
class RunConfig:
    task: str
    sections: dict
    defaults_applied: list
    config_hash: str
    path: Path | None = None
    inputs: dict = field(default_factory=dict)
    cf_supplied: bool = False

    def get(self, section: str) -> dict:
        return self.sections.get(section, {})


def _convert(kind: str, unit: str | None, value, path: str, base: Path):
    try:
        if kind == "quantity":
            return to_si(value, unit, path, allow_bare=False)
        if kind == "quantity_list":
            if not isinstance(value, list) or not value:
                raise ConfigError(f"{path}: expected a non-empty list")
            return [to_si(v, unit, f"{path}[{i}]", allow_bare=False) for i, v in enumerate(value)]
        if kind == "float":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{path}: expected a number")
            return float(value)
        if kind == "float_list":
            if not isinstance(value, list) or not all(isinstance(v, (int, float)) for v in value):
                raise ConfigError(f"{path}: expected a list of numbers")
            return [float(v) for v in value]
        if kind == "int":
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{path}: expected an integer")
            return int(value)
        if kind == "bool":
            if not isinstance(value, bool):
                raise ConfigError(f"{path}: expected true/false")
            return value
        if kind == "str":
            if not isinstance(value, str):
                raise ConfigError(f"{path}: expected a string")
            return value
        if kind == "str_list":
            if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
                raise ConfigError(f"{path}: expected a list of strings")
            return list(value)
        if kind == "matrix":
            arr = np.asarray(value, dtype=float)
            if arr.ndim != 2:
                raise ConfigError(f"{path}: expected a 2-D array")
            return arr.tolist()
        if kind == "path":
            if not isinstance(value, str):
                raise ConfigError(f"{path}: expected a file path string")
            p = (base / value).resolve() if not Path(value).is_absolute() else Path(value)
            if not p.is_file():
                raise ConfigError(f"{path}: file not found: {p}")
            return str(p)
    except UnitError as exc:
        raise ConfigError(str(exc)) from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: {exc}") from exc
    raise ConfigError(f"{path}: unsupported field kind {kind}")  # pragma: no cover


def parse_complex(text, path: str) -> complex:
    if isinstance(text, bool):
        raise ConfigError(f"{path}: malformed complex number {text!r}")
    if isinstance(text, (int, float)):
        return complex(text)
    if isinstance(text, list) and len(text) == 2 and all(isinstance(v, (int, float)) for v in text):
        return complex(text[0], text[1])
    if isinstance(text, str):
        try:
            return complex(text.replace(" ", "").replace("i", "j"))
        except ValueError:
            pass
    raise ConfigError(f"{path}: malformed complex number {text!r} (use \"a+bj\" or [re, im])")


def _parse_cf(raw: dict) -> tuple[dict, bool]:
    unknown = [k for k in raw if k not in CF_META and not _BKQ.match(k)]
    if unknown:
        raise ConfigError(f"crystal_field.{unknown[0]}: unknown key")
    bkq = {}
    for key, val in raw.items():
        m = _BKQ.match(key)
        if not m:
            continue
        k, q = int(m.group(1)), int(m.group(2))
        if abs(q) > k:
            raise ConfigError(f"crystal_field.{key}: |q| exceeds k")
        bkq[(k, q)] = parse_complex(val, f"crystal_field.{key}")
    if bkq and "unit" not in raw:
        raise ConfigError("crystal_field.unit: missing unit for B_kq values")
    scale = 1.0
    if "unit" in raw:
        try:
            scale = to_si(f"1 {raw['unit']}", "cm^-1", "crystal_field.unit")
        except UnitError as exc:
            raise ConfigError(str(exc)) from exc
    placeholder = bool(raw.get("placeholder", False))
    sec = {
        "bkq": {kq: v * scale for kq, v in bkq.items()},
        "site_symmetry": raw.get("site_symmetry", "C2"),
        "placeholder": placeholder,
        "source": raw.get("source", ""),
    }
    supplied = bool(bkq) and not placeholder and any(v != 0 for v in bkq.values())
    return sec, supplied


def parse_config(path, task: str | None = None) -> RunConfig:
    """Read and validate a TOML run configuration.

    ``task`` (from the command line) takes precedence over ``run.task``; the
    two must agree when both are given.
    """
    path = Path(path)
    try:
        data_bytes = path.read_bytes()
        raw = tomllib.loads(data_bytes.decode("utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except (UnicodeDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return validate(raw, path.parent, task, data_bytes, path)


def validate(raw: dict, base: Path, task: str | None = None, data_bytes: bytes = b"",
             path: Path | None = None) -> RunConfig:
    sections: dict = {}
    defaults: list = []
    for name in raw:
        if name not in SCHEMA and name != "crystal_field":
            raise ConfigError(f"{name}: unknown section")
        if not isinstance(raw[name], dict):
            raise ConfigError(f"{name}: expected a [section] table")
    cf_supplied = False
    if "crystal_field" in raw:
        sections["crystal_field"], cf_supplied = _parse_cf(raw["crystal_field"])
    run_task = raw.get("run", {}).get("task")
    if task and run_task and task != run_task:
        raise UsageError(f"run.task: config says {run_task!r} but {task!r} was requested")
    task = task or run_task
    if not task:
        raise UsageError("run.task: no task given on the command line or in the config")
    if task not in TASKS:
        raise ConfigError(f"run.task: unknown task {task!r}; choose from {', '.join(TASKS)}")
    needed = set(TASK_SECTIONS[task]) | {"run", "ion", "numeric"}
    if task == "purcell":
        needed.add("purcell")
    if task == "fit-spinham":
        needed.add("spinham")
    for name, spec in SCHEMA.items():
        given = raw.get(name, {})
        for key in given:
            if key not in spec:
                raise ConfigError(f"{name}.{key}: unknown key")
        if name not in needed and name not in raw:
            continue
        sec = {}
        for key, (kind, unit, default) in spec.items():
            p = f"{name}.{key}"
            if key in given:
                sec[key] = _convert(kind, unit, given[key], p, base)
            elif default is REQUIRED:
                if name in needed:
                    raise ConfigError(f"{p}: required for task {task!r}")
                sec = None
                break
            else:
                sec[key] = default
                if name in needed:
                    defaults.append(p)
        if sec is not None:
            sections[name] = sec
    for name in TASK_SECTIONS[task]:
        if name == "crystal_field":
            sections.setdefault("crystal_field", {"bkq": {}, "site_symmetry": "C2",
                                                  "placeholder": True, "source": ""})
        elif name not in sections:
            raise ConfigError(f"{name}: section required for task {task!r}")
    h = hashlib.sha256(data_bytes)
    inputs = {}
    for name, sec in sections.items():
        for key, (kind, _, _) in SCHEMA.get(name, {}).items():
            if kind == "path" and sec.get(key):
                blob = Path(sec[key]).read_bytes()
                h.update(blob)
                inputs[f"{name}.{key}"] = {"path": sec[key], "sha256": hashlib.sha256(blob).hexdigest()}
    return RunConfig(task, sections, sorted(defaults), h.hexdigest(), path, inputs, cf_supplied)


# --- CSV ----------------------------------------------------------------------

_UNIT_IN_HEADER = [re.compile(r"\[(.+?)\]\s*$"), re.compile(r"\((.+?)\)\s*$"), re.compile(r"_([A-Za-z]+)$")]


def header_unit(name: str) -> str | None:
    for pat in _UNIT_IN_HEADER:
        m = pat.search(name.strip())
        if m:
            return m.group(1)
    return None


def read_series(path, x_unit: str) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Two- or three-column CSV; the first header must declare its unit.

    Header examples: ``tau_us``, ``delay [ms]``, ``detuning (MHz)``.  The
    optional third column holds 1-sigma uncertainties of the second.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if len(rows) < 2:
        raise ConfigError(f"{path}: no data rows")
    head, body = rows[0], rows[1:]
    if len(head) not in (2, 3):
        raise ConfigError(f"{path}: expected 2 or 3 columns, got {len(head)}")
    unit = header_unit(head[0])
    if unit is None:
        raise ConfigError(f"{path}: first column header {head[0]!r} does not declare a unit")
    try:
        factor = to_si(f"1 {unit}", x_unit, f"{path}:{head[0]}")
        arr = np.array([[float(v) for v in r] for r in body])
    except UnitError as exc:
        raise ConfigError(str(exc)) from exc
    except ValueError as exc:
        raise ConfigError(f"{path}: non-numeric data ({exc})") from exc
    if arr.ndim != 2 or arr.shape[1] != len(head):
        raise ConfigError(f"{path}: ragged rows")
    x = arr[:, 0] * factor
    sigma = arr[:, 2] if arr.shape[1] == 3 else None
    return x, arr[:, 1], sigma


def write_series(path, header: tuple[str, ...], columns) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([repr(float(v)) for v in row])


__all__ = ["ConfigError", "UsageError", "RunConfig", "TASKS", "parse_config", "validate", "read_series",
           "write_series", "header_unit", "parse_complex", "ureg"]
