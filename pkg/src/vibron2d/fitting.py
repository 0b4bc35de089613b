"""Least-squares optimization of four-body parameters against band origins.

Observed lines are assigned to (l, index) eigenstates, calculated band
origins are eigenvalues relative to the l=0 ground state, and the Jacobian
comes from Hellmann-Feynman expectation values. The optimizer is a
Levenberg-Marquardt loop with Marquardt's diagonal scaling, Nielsen's damping
update and a geodesic-acceleration correction for curved valleys.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .basis import block_dim, enumerate_block
from .errors import (
    DataError,
    DegenerateSpectrumError,
    InvalidArgumentError,
    SingularNormalEquationsError,
)
from .operators import matrix
from .spectra import (
    OPERATOR_OF,
    PARAM_NAMES,
    BlockSpectrum,
    HamiltonianParams,
    build_h4b,
    eigensolve,
    fmt12,
)
from .probes import StateRef

NOTATIONS = ("bent", "linear")
CSV_HEADER = ["notation", "label1", "label2", "energy_cm1"]


@dataclass(frozen=True)
class ExperimentalLine:
    """Observed band origin. label1 is nu_b (bent) or n (linear), label2 is l."""

    notation: str
    label1: int
    label2: int
    energy: float
    weight: float = 1.0

    def __post_init__(self):
        if self.notation not in NOTATIONS:
            raise InvalidArgumentError(f"notation must be bent or linear, got {self.notation!r}")
        if not math.isfinite(self.energy):
            raise InvalidArgumentError("energy must be finite")
        if not (self.weight > 0 and math.isfinite(self.weight)):
            raise InvalidArgumentError("weight must be positive")

    @property
    def label(self) -> str:
        return f"{self.notation}({self.label1},{self.label2})"


def assign(line: ExperimentalLine, N: int) -> StateRef:
    l = abs(line.label2)
    if l > N:
        raise InvalidArgumentError(f"{line.label}: |l| exceeds N={N}")
    if line.notation == "bent":
        k = line.label1
    else:
        n = line.label1
        if n < l or n > N or (n - l) % 2:
            raise InvalidArgumentError(f"{line.label}: n must satisfy |l| <= n <= N with n - |l| even")
        k = (n - l) // 2
    dim = block_dim(N, l)
    if not 0 <= k < dim:
        raise InvalidArgumentError(f"{line.label}: index {k} outside block of dimension {dim} (N={N})")
    return StateRef(l, k)


def _spectra(params: HamiltonianParams, ls: Iterable[int]) -> dict[int, BlockSpectrum]:
    out = {}
    for l in sorted(set(ls) | {0}):
        block = enumerate_block(params.N, l)
        out[l] = eigensolve(build_h4b(params, block), block)
    return out


def band_origins(params: HamiltonianParams, lines: Sequence[ExperimentalLine]) -> np.ndarray:
    refs = [assign(x, params.N) for x in lines]
    spec = _spectra(params, (r.l for r in refs))
    e0 = spec[0].eigenvalues[0]
    return np.array([spec[r.l].eigenvalues[r.k] - e0 for r in refs])


def _check_isolated(spec: BlockSpectrum, k: int) -> None:
    E = spec.eigenvalues
    tol = 1e-10 * max(E[-1] - E[0], 1.0)
    for i in (k - 1, k + 1):
        if 0 <= i < E.size and abs(E[i] - E[k]) < tol:
            raise DegenerateSpectrumError(f"state {k} of block l={spec.block.l} is degenerate")


def gradient(
    params: HamiltonianParams, lines: Sequence[ExperimentalLine], active: Sequence[str]
) -> np.ndarray:
    """d(band origin)/dP for each line (rows) and active parameter (columns)."""
    for name in active:
        if name not in OPERATOR_OF:
            raise InvalidArgumentError(f"unknown parameter {name!r}")
    refs = [assign(x, params.N) for x in lines]
    spec = _spectra(params, (r.l for r in refs))
    _check_isolated(spec[0], 0)
    for r in refs:
        _check_isolated(spec[r.l], r.k)

    # <k|O|k> for every needed (l, k), then subtract the ground-state value
    expect = {}
    for l, s in spec.items():
        V = s.eigenvectors
        expect[l] = np.array(
            [np.einsum("ik,ij,jk->k", V, matrix(OPERATOR_OF[p], s.block), V) for p in active]
        )
    g0 = expect[0][:, 0]
    J = np.empty((len(refs), len(active)))
    for row, r in enumerate(refs):
        J[row] = expect[r.l][:, r.k] - g0
    return J


@dataclass(frozen=True)
class FitConfig:
    N: int
    active: tuple[str, ...]
    initial: HamiltonianParams
    max_iterations: int = 50
    tolerance: float = 1e-4  # on rms change, cm^-1

    def __post_init__(self):
        object.__setattr__(self, "active", tuple(self.active))
        bad = [p for p in self.active if p not in PARAM_NAMES]
        if bad:
            raise InvalidArgumentError(f"unknown active parameters {bad}")
        if len(set(self.active)) != len(self.active) or not self.active:
            raise InvalidArgumentError("active parameters must be a non-empty set")
        if self.initial.N != self.N:
            raise InvalidArgumentError("initial parameters use a different N")
        if self.max_iterations < 1 or not self.tolerance > 0:
            raise InvalidArgumentError("max_iterations and tolerance must be positive")


@dataclass
class FitResult:
    params: HamiltonianParams
    sigma: dict[str, float]
    residuals: np.ndarray  # obs - calc, input line order
    calc: np.ndarray
    rms: float  # sqrt(SSR / (N_data - N_params))
    rms_plain: float  # sqrt(SSR / N_data)
    converged: bool
    iterations: int
    lines: list[ExperimentalLine] = field(default_factory=list)
    active: tuple[str, ...] = ()

    def to_json(self) -> str:
        doc = {
            "N": self.params.N,
            "parameters_cm1": {k: self.params.get(k) for k in PARAM_NAMES if k in self.params.coeffs},
            "sigma_cm1": {k: self.sigma[k] for k in self.active},
            "active": list(self.active),
            "rms_cm1": self.rms,
            "rms_plain_cm1": self.rms_plain,
            "n_data": len(self.lines),
            "converged": self.converged,
            "iterations": self.iterations,
            "residuals": [
                {"notation": x.notation, "label1": x.label1, "label2": x.label2,
                 "obs": x.energy, "calc": float(c), "obs_minus_calc": float(r)}
                for x, c, r in zip(self.lines, self.calc, self.residuals)
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"

    def residual_csv(self) -> str:
        return residual_csv(self.lines, self.calc)


def residual_csv(lines: Sequence[ExperimentalLine], calc: Sequence[float]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["notation", "label1", "label2", "obs_cm1", "calc_cm1", "obs_minus_calc_cm1"])
    for x, c in zip(lines, calc):
        w.writerow([x.notation, x.label1, x.label2, fmt12(x.energy), fmt12(c), fmt12(x.energy - c)])
    return buf.getvalue()


def rms_values(residuals, n_params: int, weights=None) -> tuple[float, float]:
    """(dof-corrected rms, plain rms) of a residual vector."""
    r = np.asarray(residuals, dtype=float)
    w = np.ones_like(r) if weights is None else np.asarray(weights, dtype=float)
    ssr = float(np.sum(w * r * r))
    dof = r.size - n_params
    return (math.sqrt(ssr / dof) if dof > 0 else float("nan")), math.sqrt(ssr / r.size)


def _condition(J: np.ndarray) -> float:
    norms = np.linalg.norm(J, axis=0)
    if np.any(norms == 0):
        return float("inf")
    s = np.linalg.svd(J / norms, compute_uv=False)
    return float(s[0] / s[-1]) if s[-1] > 0 else float("inf")


def _geodesic(M, J, r, v, resid, x, h=0.1, alpha=0.75):
    """Second-order correction along the Gauss-Newton direction.

    Uses the finite-difference directional curvature of the residuals; helps
    in the long curved valleys typical of strongly correlated parameters.
    The correction is dropped when it would dominate the first-order step.
    """
    # r = obs - f, so the curvature of f enters with a minus sign
    k = (2.0 / h) * ((r - resid(x + h * v)) / h - J @ v)
    a = -np.linalg.solve(M, J.T @ k)
    if 2.0 * np.linalg.norm(a) > alpha * np.linalg.norm(v):
        return np.zeros_like(v)
    return a


def fit(config: FitConfig, lines: Sequence[ExperimentalLine]) -> FitResult:
    lines = list(lines)
    p = len(config.active)
    if len(lines) < p:
        raise InvalidArgumentError(f"{len(lines)} lines cannot determine {p} parameters")
    obs = np.array([x.energy for x in lines])
    sw = np.sqrt(np.array([x.weight for x in lines]))

    def at(x):
        return config.initial.replace(**dict(zip(config.active, map(float, x))))

    def resid(x):
        return sw * (obs - band_origins(at(x), lines))

    def ssr_of(x):
        return float(np.sum(resid(x) ** 2))

    x = np.array([config.initial.get(k) for k in config.active])
    ssr = ssr_of(x)
    mu, nu = 1e-6, 2.0
    converged = False
    it = 0
    while it < config.max_iterations:
        it += 1
        params = at(x)
        r = resid(x)
        J = sw[:, None] * gradient(params, lines, config.active)
        if _condition(J) > 1e12:
            raise SingularNormalEquationsError(
                f"normal equations are singular; active set {list(config.active)} is redundant"
            )
        A = J.T @ J
        g = J.T @ r
        d = np.diag(A)
        rms_old = math.sqrt(ssr / len(lines))
        while True:
            # Marquardt scaling: damping proportional to diag(J^T J)
            M = A + mu * np.diag(d)
            step = np.linalg.solve(M, g)
            step = step + 0.5 * _geodesic(M, J, r, step, resid, x)
            trial = x + step
            new = ssr_of(trial)
            predicted = step @ (mu * d * step + g)
            if new <= ssr and predicted > 0:
                rho = (ssr - new) / predicted
                mu *= max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0) ** 3)
                nu = 2.0
                break
            mu *= nu
            nu *= 2.0
            if mu > 1e16:
                # no descent direction left at working precision
                new, trial = ssr, x
                break
        x, ssr = trial, new
        if abs(rms_old - math.sqrt(ssr / len(lines))) < config.tolerance:
            converged = True
            break

    params = at(x)
    calc = band_origins(params, lines)
    res = obs - calc
    J = sw[:, None] * gradient(params, lines, config.active)
    rms, rms_plain = rms_values(res, p, sw ** 2)
    dof = len(lines) - p
    sigma = {k: float("nan") for k in config.active}
    if dof > 0:
        try:
            cov = np.linalg.inv(J.T @ J) * (ssr / dof)
            sigma = {k: float(math.sqrt(max(v, 0.0))) for k, v in zip(config.active, np.diag(cov))}
        except np.linalg.LinAlgError:
            pass
    return FitResult(params, sigma, res, calc, rms, rms_plain, converged, it, lines, config.active)


def initial_guess(lines: Sequence[ExperimentalLine], N: int) -> HamiltonianParams:
    """Start for fits without prior parameters: P11 from the lowest l=0 line, P23 = -P11/(4N)."""
    refs = [(assign(x, N), x.energy) for x in lines]
    l0 = [e for r, e in refs if r.l == 0 and r.k > 0]
    p11 = min(l0) if l0 else min(e for _, e in refs)
    return HamiltonianParams(N, {"P11": p11, "P23": -p11 / (4.0 * N)})


def parse_lines(text: str, source: str = "<data>") -> list[ExperimentalLine]:
    """Read the band-origin CSV. Lines starting with '#' are comments."""
    out = []
    header = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        cells = [c.strip() for c in next(csv.reader([raw]))]
        if header is None:
            if cells not in (CSV_HEADER, CSV_HEADER + ["weight"]):
                raise DataError(f"{source}:{lineno}: expected header {','.join(CSV_HEADER)}[,weight]")
            header = cells
            continue
        if len(cells) != len(header):
            raise DataError(f"{source}:{lineno}: expected {len(header)} fields, got {len(cells)}")
        try:
            w = float(cells[4]) if len(cells) == 5 else 1.0
            out.append(ExperimentalLine(cells[0], int(cells[1]), int(cells[2]), float(cells[3]), w))
        except (ValueError, InvalidArgumentError) as exc:
            raise DataError(f"{source}:{lineno}: {exc}") from None
    if header is None:
        raise DataError(f"{source}: no header row")
    if not out:
        raise DataError(f"{source}: no data rows")
    return out


def read_lines(path) -> list[ExperimentalLine]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    return parse_lines(text, str(path))
