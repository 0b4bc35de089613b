"""Hamiltonian assembly, lambda splitting, block diagonalization and scans."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .basis import BasisBlock, enumerate_block, fix_signs
from .errors import ConvergenceError, InvalidArgumentError
from .operators import matrix

PARAM_NAMES = (
    "P11", "P21", "P22", "P23", "P31", "P32", "P33",
    "P41", "P42", "P43", "P44", "P45", "P46", "P47",
)

# parameter -> operator, grouped by where the operator is diagonal
H_I_TERMS = {"P11": "n", "P21": "n2", "P31": "n3", "P41": "n4", "P32": "nl2", "P42": "n2l2"}
H_II_TERMS = {"P23": "W2", "P44": "l2W2", "P46": "W4"}
H_MIX_TERMS = {"P33": "sym_nW2", "P45": "sym_n2W2", "P47": "sym_W2W2bar"}
H_I_II_TERMS = {"P22": "l2", "P43": "l4"}
OPERATOR_OF = {**H_I_TERMS, **H_II_TERMS, **H_MIX_TERMS, **H_I_II_TERMS}


@dataclass(frozen=True)
class HamiltonianParams:
    """Four-body coefficients in cm^-1 at fixed vibron number N."""

    N: int
    coeffs: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise InvalidArgumentError(f"N must be a positive integer, got {self.N}")
        bad = set(self.coeffs) - set(PARAM_NAMES)
        if bad:
            raise InvalidArgumentError(f"unknown parameter names {sorted(bad)}")
        for k, v in self.coeffs.items():
            if not math.isfinite(v):
                raise InvalidArgumentError(f"{k} is not finite")
        object.__setattr__(self, "coeffs", dict(self.coeffs))

    def get(self, name: str) -> float:
        return float(self.coeffs.get(name, 0.0))

    def replace(self, **values: float) -> "HamiltonianParams":
        return HamiltonianParams(self.N, {**self.coeffs, **values})

    @property
    def active(self) -> list[str]:
        """Names with a nonzero coefficient, in canonical order."""
        return [k for k in PARAM_NAMES if self.coeffs.get(k, 0.0) != 0.0]


@dataclass(frozen=True)
class ModelParams:
    """Two-parameter model: (1 - xi) n + xi/(N-1) P, energy scale fixed to 1."""

    xi: float
    N: int

    def __post_init__(self):
        if not 0.0 <= self.xi <= 1.0:
            raise InvalidArgumentError(f"xi must lie in [0, 1], got {self.xi}")
        if int(self.N) != self.N or self.N < 2:
            raise InvalidArgumentError("the model Hamiltonian needs N >= 2 (pairing term scales as 1/(N-1))")


@dataclass(frozen=True)
class LambdaSplit:
    h_I: np.ndarray
    h_II: np.ndarray
    h_mix: np.ndarray
    h_I_II: np.ndarray
    block: BasisBlock | None = None

    @property
    def dim(self) -> int:
        return self.h_I.shape[0]


@dataclass(frozen=True)
class BlockSpectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    block: BasisBlock | None = None


def _combine(p: HamiltonianParams, block: BasisBlock, terms: Mapping[str, str]) -> np.ndarray:
    out = np.zeros((block.dim, block.dim))
    for name, kind in terms.items():
        c = p.get(name)
        if c != 0.0:
            out += c * matrix(kind, block)
    return out


def build_model(p: ModelParams, block: BasisBlock) -> np.ndarray:
    if block.N != p.N:
        raise InvalidArgumentError("block and parameters disagree on N")
    return (1.0 - p.xi) * matrix("n", block) + p.xi / (p.N - 1) * matrix("pairing", block)


def build_h4b(p: HamiltonianParams, block: BasisBlock) -> np.ndarray:
    if block.N != p.N:
        raise InvalidArgumentError("block and parameters disagree on N")
    return _combine(p, block, OPERATOR_OF)


def split_lambda(p: HamiltonianParams, block: BasisBlock) -> LambdaSplit:
    if block.N != p.N:
        raise InvalidArgumentError("block and parameters disagree on N")
    return LambdaSplit(
        h_I=_combine(p, block, H_I_TERMS),
        h_II=_combine(p, block, H_II_TERMS),
        h_mix=_combine(p, block, H_MIX_TERMS),
        h_I_II=_combine(p, block, H_I_II_TERMS),
        block=block,
    )


def split_model(p: ModelParams, block: BasisBlock) -> LambdaSplit:
    """Embed the model Hamiltonian: h_I = (1-xi) n, h_II = xi/(N-1) P."""
    zero = np.zeros((block.dim, block.dim))
    return LambdaSplit(
        h_I=(1.0 - p.xi) * matrix("n", block),
        h_II=p.xi / (p.N - 1) * matrix("pairing", block),
        h_mix=zero,
        h_I_II=zero.copy(),
        block=block,
    )


def _check_lambda(lam: float) -> None:
    if not -1.0 <= lam <= 1.0:
        raise InvalidArgumentError(f"lambda must lie in [-1, 1], got {lam}")


def h_lambda(s: LambdaSplit, lam: float) -> np.ndarray:
    _check_lambda(lam)
    return (1.0 - lam) * s.h_I + (1.0 + lam) * s.h_II + (1.0 - lam * lam) * s.h_mix + s.h_I_II


def h_interaction(s: LambdaSplit, lam: float) -> np.ndarray:
    """d H(lambda) / d lambda."""
    _check_lambda(lam)
    return -s.h_I + s.h_II - 2.0 * lam * s.h_mix


def eigensolve(h: np.ndarray, block: BasisBlock | None = None) -> BlockSpectrum:
    h = np.asarray(h, dtype=float)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise InvalidArgumentError(f"expected a square matrix, got shape {h.shape}")
    scale = max(np.abs(h).max(), 1.0)
    if not np.allclose(h, h.T, atol=1e-12 * scale, rtol=0):
        raise InvalidArgumentError("matrix is not symmetric")
    try:
        vals, vecs = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(str(exc)) from exc
    vecs = fix_signs(vecs)
    vals.setflags(write=False)
    vecs.setflags(write=False)
    return BlockSpectrum(vals, vecs, block)


@dataclass(frozen=True)
class ScanResult:
    """Eigenvalues on a control-parameter grid, one row per grid point."""

    control: np.ndarray
    l: int
    energies: np.ndarray  # (grid, dim)

    def rows(self) -> Iterable[tuple[float, int, int, float]]:
        for x, row in zip(self.control, self.energies):
            for k, e in enumerate(row):
                yield float(x), k, self.l, float(e)


def correlation_scan(
    build, grid: Sequence[float], block: BasisBlock, threads: int = 1
) -> ScanResult:
    """Diagonalize ``build(x, block)`` for every x of a monotone grid.

    ``build`` maps a control value to a symmetric matrix, e.g.
    ``lambda xi, b: build_model(ModelParams(xi, N), b)``.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise InvalidArgumentError("grid must be a non-empty 1-D sequence")
    d = np.diff(grid)
    if d.size and not (np.all(d > 0) or np.all(d < 0)):
        raise InvalidArgumentError("grid must be strictly monotone")

    def one(x):
        return np.linalg.eigvalsh(build(float(x), block))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, grid))
    else:
        rows = [one(x) for x in grid]
    return ScanResult(grid, block.l, np.array(rows))


def model_xi_scan(N: int, l: int, grid: Sequence[float], threads: int = 1) -> ScanResult:
    return correlation_scan(lambda xi, b: build_model(ModelParams(xi, N), b), grid, enumerate_block(N, l), threads)


def lambda_scan(s: LambdaSplit, grid: Sequence[float], threads: int = 1) -> ScanResult:
    return correlation_scan(lambda lam, b: h_lambda(s, lam), grid, s.block, threads)


def fmt12(x: float) -> str:
    return format(float(x), ".12g")


def scan_csv(scans: Iterable[ScanResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["control", "level_index", "l", "energy"])
    for scan in scans:
        for x, k, l, e in scan.rows():
            w.writerow([fmt12(x), k, l, fmt12(e)])
    return buf.getvalue()
