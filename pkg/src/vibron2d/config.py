"""Flat ``key = value`` run configuration with a typed schema.

Parameter keys carry their unit (``P23_cm1``). Comments start with ``#``.
A config may name a bundled molecule instead of a path; see
:func:`bundled_configs`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError, InvalidArgumentError
from .spectra import PARAM_NAMES, HamiltonianParams, ModelParams

HAMILTONIANS = ("four_body", "model")
KNOWN_MOLECULES = ("CH3NCO", "37ClCNO", "OCCCO", "HNC", "Si2C", "NCNCS", "model", "custom")


def parse_grid(text: str) -> np.ndarray:
    """``min:max:step`` -> inclusive, evenly spaced grid."""
    try:
        lo, hi, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise ConfigError(f"grid must be min:max:step, got {text!r}") from None
    if not (math.isfinite(lo) and math.isfinite(hi) and step > 0 and hi >= lo):
        raise ConfigError(f"bad grid {text!r}: need min <= max and step > 0")
    count = (hi - lo) / step
    n = round(count)
    if abs(count - n) > 1e-9 * max(1.0, count):
        raise ConfigError(f"grid step {step} does not divide [{lo}, {hi}]")
    # linspace, not arange, so endpoints are exact
    return np.linspace(lo, hi, n + 1)


def parse_int_list(text: str) -> list[int]:
    items = [x.strip() for x in text.split(",") if x.strip()]
    try:
        return [int(x) for x in items]
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from None


def _int(v: str) -> int:
    try:
        return int(v)
    except ValueError:
        raise ConfigError(f"expected an integer, got {v!r}") from None


def _float(v: str) -> float:
    try:
        x = float(v)
    except ValueError:
        raise ConfigError(f"expected a number, got {v!r}") from None
    if not math.isfinite(x):
        raise ConfigError(f"expected a finite number, got {v!r}")
    return x


SCHEMA = {
    "molecule": str,
    "hamiltonian": str,
    "N": _int,
    "xi": _float,
    "l_list": parse_int_list,
    "lambda_grid": parse_grid,
    "xi_grid": parse_grid,
    "probe_lambda": _float,
    "n_states": _int,
    "critical_tol": _float,
    "min_peak_width": _float,
    "fit_active": lambda v: [x.strip() for x in v.split(",") if x.strip()],
    "max_iterations": _int,
    "tolerance_cm1": _float,
    "data": str,
}
SCHEMA.update({f"{p}_cm1": _float for p in PARAM_NAMES})


@dataclass
class RunConfig:
    molecule: str
    hamiltonian: str
    N: int
    params: HamiltonianParams | ModelParams
    l_list: list[int] = field(default_factory=lambda: [0])
    lambda_grid: np.ndarray = field(default_factory=lambda: np.linspace(-1.0, 1.0, 201))
    xi_grid: np.ndarray | None = None
    probe_lambda: float = 0.0
    n_states: int = 8
    critical_tol: float = 2e-3
    min_peak_width: float = 5e-3
    fit_active: list[str] = field(default_factory=list)
    max_iterations: int = 50
    tolerance_cm1: float = 1e-4
    data: Path | None = None
    source: str = "<config>"


def parse_config(text: str, source: str = "<config>", base: Path | None = None) -> RunConfig:
    raw: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, value = (x.strip() for x in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            raw[key] = SCHEMA[key](value)
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: {key}: {exc}") from None

    for key in ("molecule", "hamiltonian", "N"):
        if key not in raw:
            raise ConfigError(f"{source}: missing required key {key!r}")
    if raw["molecule"] not in KNOWN_MOLECULES:
        raise ConfigError(f"{source}: unknown molecule {raw['molecule']!r}; known: {', '.join(KNOWN_MOLECULES)}")
    kind = raw["hamiltonian"]
    if kind not in HAMILTONIANS:
        raise ConfigError(f"{source}: hamiltonian must be one of {HAMILTONIANS}")
    coeffs = {k[:-4]: v for k, v in raw.items() if k.endswith("_cm1") and k[:-4] in PARAM_NAMES}
    try:
        if kind == "model":
            if coeffs:
                raise ConfigError(f"{source}: four-body parameters given for the model Hamiltonian")
            if "xi" not in raw:
                raise ConfigError(f"{source}: model Hamiltonian needs xi")
            params = ModelParams(raw["xi"], raw["N"])
        else:
            if "xi" in raw:
                raise ConfigError(f"{source}: xi applies only to the model Hamiltonian")
            params = HamiltonianParams(raw["N"], coeffs)
    except InvalidArgumentError as exc:
        raise ConfigError(f"{source}: {exc}") from None

    cfg = RunConfig(raw["molecule"], kind, raw["N"], params, source=source)
    for key in ("l_list", "lambda_grid", "xi_grid", "probe_lambda", "n_states", "critical_tol",
                "min_peak_width", "fit_active", "max_iterations", "tolerance_cm1"):
        if key in raw:
            setattr(cfg, key, raw[key])
    if "data" in raw:
        p = Path(raw["data"])
        cfg.data = p if p.is_absolute() or base is None else base / p
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    src = cfg.source
    if not cfg.l_list:
        raise ConfigError(f"{src}: l_list is empty")
    for l in cfg.l_list:
        if abs(l) > cfg.N:
            raise ConfigError(f"{src}: |l|={abs(l)} exceeds N={cfg.N}")
    g = cfg.lambda_grid
    if g[0] < -1.0 or g[-1] > 1.0:
        raise ConfigError(f"{src}: lambda grid must lie inside [-1, 1]")
    if cfg.xi_grid is not None and (cfg.xi_grid[0] < 0.0 or cfg.xi_grid[-1] > 1.0):
        raise ConfigError(f"{src}: xi grid must lie inside [0, 1]")
    if not -1.0 <= cfg.probe_lambda <= 1.0:
        raise ConfigError(f"{src}: probe_lambda must lie in [-1, 1]")
    if cfg.n_states < 1 or cfg.max_iterations < 1:
        raise ConfigError(f"{src}: n_states and max_iterations must be positive")
    if cfg.critical_tol < 0 or cfg.min_peak_width <= 0 or cfg.tolerance_cm1 <= 0:
        raise ConfigError(f"{src}: tolerances must be positive")
    bad = [p for p in cfg.fit_active if p not in PARAM_NAMES]
    if bad:
        raise ConfigError(f"{src}: unknown fit_active parameters {bad}")


def bundled_configs() -> dict[str, Path]:
    """Bundled configs by lower-case key (file stem)."""
    root = resources.files("vibron2d") / "data" / "molecules"
    return {p.name[:-4].lower(): Path(str(p)) for p in root.iterdir() if p.name.endswith(".cfg")}


def bundled_dataset(name: str) -> Path:
    p = resources.files("vibron2d") / "data" / "datasets" / name
    return Path(str(p))


def load_config(ref: str) -> RunConfig:
    """Load from a file path, or from a bundled key such as ``si2c``."""
    path = Path(ref)
    if not path.is_file():
        known = bundled_configs()
        if ref.lower() not in known:
            raise ConfigError(
                f"{ref!r} is neither a config file nor a bundled molecule ({', '.join(sorted(known))})"
            )
        path = known[ref.lower()]
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(text, str(path), path.parent)
