"""Localization and fidelity probes of excited-state phase transitions.

The central quantity is the fidelity susceptibility of the j-th eigenstate
of H(lambda) in its summation form,

    chi_j(lambda) = sum_{i != j} |<i|H^I|j>|^2 / (E_i - E_j)^2,

with H^I = dH/dlambda. The sum is restricted to one l block since H^I
conserves l. A state whose chi peaks at negative lambda is on the bent side
of the separatrix, one peaking at positive lambda on the linear side.
"""
from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .basis import so3_transform
from .errors import DegenerateSpectrumError, FlatCurveError, InvalidArgumentError
from .operators import matrix
from .spectra import BlockSpectrum, LambdaSplit, eigensolve, fmt12, h_interaction, h_lambda

BENT, LINEAR, CRITICAL = "Bent", "Linear", "Critical"

DEFAULT_GRID = np.linspace(-1.0, 1.0, 201)
DEFAULT_CRITICAL_TOL = 2e-3
DEFAULT_MIN_PEAK_WIDTH = 5e-3
DEFAULT_N_STATES = 8


@dataclass(frozen=True)
class StateRef:
    l: int
    k: int


def _unit(c, name="coefficients") -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if c.ndim != 1:
        raise InvalidArgumentError(f"{name} must be a vector")
    if abs(np.linalg.norm(c) - 1.0) > 1e-10:
        raise InvalidArgumentError(f"{name} not normalized (norm={np.linalg.norm(c)!r})")
    return c


def participation_ratio(coeffs) -> float:
    """1 / sum |c_i|^4 ; ranges from 1 (basis state) to dim (uniform)."""
    c = _unit(coeffs)
    return float(1.0 / np.sum(c ** 4))


def pr_in_basis(vec, basis: str = "U2", transform: np.ndarray | None = None) -> float:
    """PR of a U(2)-basis coefficient vector expressed in the U2 or SO3 basis.

    For ``basis="SO3"`` pass the orthogonal matrix from
    :func:`vibron2d.basis.so3_transform`.
    """
    vec = np.asarray(vec, dtype=float)
    if basis == "U2":
        return participation_ratio(vec)
    if basis != "SO3":
        raise InvalidArgumentError(f"basis must be 'U2' or 'SO3', got {basis!r}")
    if transform is None:
        raise InvalidArgumentError("SO3 participation ratio needs the SO(3) transform")
    if transform.shape[0] != vec.shape[0]:
        raise InvalidArgumentError("transform and vector dimensions differ")
    return participation_ratio(transform.T @ vec)


def fidelity(psi_a, psi_b) -> float:
    a = _unit(psi_a, "psi_a")
    b = _unit(psi_b, "psi_b")
    if a.shape != b.shape:
        raise InvalidArgumentError("dimension mismatch")
    return float(min(abs(a @ b), 1.0))


def _susceptibilities(spec: BlockSpectrum, hint: np.ndarray, states=None) -> np.ndarray:
    E, V = spec.eigenvalues, spec.eigenvectors
    if E.size == 1:
        return np.zeros(1)
    m = V.T @ hint @ V
    gap = E[:, None] - E[None, :]
    # relative to the spectral range; the H^I scale guards a fully degenerate block
    tol = 1e-10 * max(E[-1] - E[0], np.abs(hint).max())
    cols = range(E.size) if states is None else states
    coupled = np.abs(m) > 1e-12 * max(np.abs(hint).max(), 1.0)
    for j in cols:
        near = np.abs(gap[:, j]) <= tol
        near[j] = False
        if np.any(near & coupled[:, j]):
            i = int(np.flatnonzero(near & coupled[:, j])[0])
            raise DegenerateSpectrumError(f"states {i} and {j} are degenerate and coupled by H^I")
    np.fill_diagonal(gap, np.inf)
    degenerate = np.abs(gap) <= tol
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(degenerate, np.where(coupled, np.inf, 0.0), m ** 2 / gap ** 2)
    return np.sum(terms, axis=0)


def qfs_all(split: LambdaSplit, lam: float, checked=None) -> tuple[np.ndarray, BlockSpectrum]:
    """Susceptibility of every eigenstate of H(lam), plus the spectrum used.

    Degeneracy is checked for the ``checked`` state indices (default: all).
    """
    spec = eigensolve(h_lambda(split, lam))
    return _susceptibilities(spec, h_interaction(split, lam), checked), spec


def qfs_state(j: int, lam: float, split: LambdaSplit) -> float:
    if not 0 <= j < split.dim:
        raise InvalidArgumentError(f"state index {j} outside block of dimension {split.dim}")
    spec = eigensolve(h_lambda(split, lam))
    return float(_susceptibilities(spec, h_interaction(split, lam), states=[j])[j])


def qfs_finite_difference(j: int, lam: float, split: LambdaSplit, delta: float = 1e-4) -> float:
    """Fidelity-based estimate -2 ln F / delta^2, symmetrized over +-delta.

    Independent of the summation form: only eigenvector overlaps are used.
    """
    if delta <= 0 or lam - delta < -1.0 or lam + delta > 1.0:
        raise InvalidArgumentError("lambda +- delta must stay inside [-1, 1]")
    psi = eigensolve(h_lambda(split, lam)).eigenvectors[:, j]
    total = 0.0
    for x in (lam - delta, lam + delta):
        phi = eigensolve(h_lambda(split, x)).eigenvectors[:, j]
        phi = phi if psi @ phi >= 0 else -phi
        # 1 - F = |psi - phi|^2 / 2 avoids cancellation near F = 1
        one_minus_f = 0.5 * np.sum((psi - phi) ** 2)
        total += -2.0 * np.log1p(-one_minus_f)
    return float(total / (2.0 * delta * delta))


@dataclass(frozen=True)
class QfsScan:
    lambda_grid: np.ndarray
    chi: np.ndarray  # (states, grid)
    N: int
    l: int

    @property
    def chi_normalized(self) -> np.ndarray:
        return self.chi / self.N


def _grid(grid) -> np.ndarray:
    g = np.asarray(DEFAULT_GRID if grid is None else grid, dtype=float)
    if g.ndim != 1 or g.size < 1 or np.any(np.diff(g) <= 0):
        raise InvalidArgumentError("lambda grid must be strictly ascending")
    if g[0] < -1.0 or g[-1] > 1.0:
        raise InvalidArgumentError("lambda grid must lie inside [-1, 1]")
    return g


def qfs_scan(split: LambdaSplit, grid=None, threads: int = 1) -> QfsScan:
    g = _grid(grid)

    def one(x):
        return qfs_all(split, float(x))[0]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cols = list(pool.map(one, g))
    else:
        cols = [one(x) for x in g]
    block = split.block
    return QfsScan(g, np.array(cols).T, block.N if block else 1, block.l if block else 0)


def lambda_max(chi_row, grid) -> float:
    """Grid argmax refined by a parabola through the peak and its neighbours."""
    c = np.asarray(chi_row, dtype=float)
    g = np.asarray(grid, dtype=float)
    if c.size < 3 or c.shape != g.shape:
        raise InvalidArgumentError("need at least 3 grid points and matching shapes")
    if np.ptp(c) < 1e-12:
        raise FlatCurveError("susceptibility curve is flat")
    i = int(np.argmax(c))
    if i == 0 or i == c.size - 1:
        return float(g[i])
    y0, y1, y2 = c[i - 1], c[i], c[i + 1]
    h0, h1 = g[i] - g[i - 1], g[i + 1] - g[i]
    # vertex of the parabola through three (possibly unevenly spaced) points
    den = h0 * (y1 - y2) + h1 * (y1 - y0)
    if den <= 0:
        return float(g[i])
    x = g[i] - 0.5 * (h0 * h0 * (y1 - y2) - h1 * h1 * (y1 - y0)) / den
    return float(np.clip(x, g[i - 1], g[i + 1]))


def _chi_at(split: LambdaSplit, j: int, lam: float) -> float:
    # an exact crossing inside a sharp spike counts as an infinitely tall peak
    try:
        return float(qfs_all(split, float(np.clip(lam, -1.0, 1.0)), [j])[0][j])
    except DegenerateSpectrumError:
        return 1e300


def peak_lambda(
    split: LambdaSplit,
    j: int,
    grid=None,
    chi_row=None,
    min_width: float = DEFAULT_MIN_PEAK_WIDTH,
) -> float:
    """Location of the separatrix peak of chi_j(lambda).

    Every local maximum of the sampled curve is refined by a bounded scalar
    search inside its grid cell pair. Peaks narrower than ``min_width`` at half
    height are sharp avoided crossings with a single distant level and are
    skipped; the tallest remaining peak wins. If every peak is narrow the
    tallest one is returned.
    """
    g = _grid(grid)
    if chi_row is None:
        chi_row = qfs_scan(split, g).chi[j]
    c = np.asarray(chi_row, dtype=float)
    if c.shape != g.shape:
        raise InvalidArgumentError("chi_row and grid shapes differ")
    if g.size < 3:
        return float(g[np.argmax(c)])
    if np.ptp(c) < 1e-12:
        raise FlatCurveError(f"susceptibility of state {j} is flat on the grid")
    padded = np.concatenate(([-np.inf], c, [-np.inf]))
    idx = np.flatnonzero((padded[1:-1] >= padded[:-2]) & (padded[1:-1] > padded[2:]))

    peaks = []
    for i in idx:
        lo, hi = g[max(i - 1, 0)], g[min(i + 1, g.size - 1)]
        r = minimize_scalar(
            lambda x: -_chi_at(split, j, x), bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-8},
        )
        x, top = float(r.x), -float(r.fun)
        if not top >= c[i]:
            x, top = float(g[i]), float(c[i])
        half = 0.5 * min_width
        below = [
            (x + s < -1.0 or x + s > 1.0) or _chi_at(split, j, x + s) < 0.5 * top
            for s in (-half, half)
        ]
        peaks.append((all(below), top, x))
    broad = [p for p in peaks if not p[0]]
    pool = broad or peaks
    return max(pool, key=lambda p: p[1])[2]


@dataclass(frozen=True)
class Classification:
    state: int
    lambda_max: float
    phase: str


@dataclass(frozen=True)
class ClassificationReport:
    l: int
    states: list[Classification]
    transition_state: int  # smallest |lambda_max|
    critical_state: int  # largest chi at lambda = 0

    def table(self) -> list[tuple[int, float, str]]:
        return [(c.state, c.lambda_max, c.phase) for c in self.states]


def phase_of(lam: float, tol: float = DEFAULT_CRITICAL_TOL) -> str:
    if abs(lam) <= tol:
        return CRITICAL
    return BENT if lam < 0 else LINEAR


def classify(
    split: LambdaSplit,
    n_states: int = DEFAULT_N_STATES,
    grid=None,
    tol: float = DEFAULT_CRITICAL_TOL,
    min_width: float = DEFAULT_MIN_PEAK_WIDTH,
    threads: int = 1,
) -> ClassificationReport:
    """Assign Bent / Linear / Critical to the lowest ``n_states`` levels."""
    if n_states < 1:
        raise InvalidArgumentError("n_states must be positive")
    if tol < 0:
        raise InvalidArgumentError("critical tolerance must be non-negative")
    n_states = min(n_states, split.dim)
    scan = qfs_scan(split, grid, threads)
    out = []
    for j in range(n_states):
        lam = peak_lambda(split, j, scan.lambda_grid, scan.chi[j], min_width)
        out.append(Classification(j, lam, phase_of(lam, tol)))
    transition = min(out, key=lambda c: abs(c.lambda_max)).state
    chi0 = qfs_all(split, 0.0)[0][:n_states]
    return ClassificationReport(scan.l, out, transition, int(np.argmax(chi0)))


def qfs_csv(scans: Sequence[QfsScan], states: int | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lambda", "l", "state_index", "chi", "chi_over_N"])
    for s in scans:
        n = s.chi.shape[0] if states is None else min(states, s.chi.shape[0])
        for a, lam in enumerate(s.lambda_grid):
            for j in range(n):
                w.writerow([fmt12(lam), s.l, j, fmt12(s.chi[j, a]), fmt12(s.chi[j, a] / s.N)])
    return buf.getvalue()


def classification_csv(reports: Sequence[ClassificationReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["l", "state_index", "lambda_max", "phase"])
    for r in reports:
        for c in r.states:
            w.writerow([r.l, c.state, fmt12(c.lambda_max), c.phase])
    return buf.getvalue()


def pr_profile(split: LambdaSplit, lam: float, transform: np.ndarray | None = None):
    """U(2) and SO(3) participation ratios of every eigenstate of H(lam).

    ``transform`` is the SO(3) basis from :func:`vibron2d.basis.so3_transform`;
    it is computed from the split's block when omitted.
    """
    if transform is None:
        if split.block is None:
            raise InvalidArgumentError("SO(3) ratios need the basis block")
        transform = so3_transform(split.block, matrix("W2", split.block))
    V = eigensolve(h_lambda(split, lam)).eigenvectors
    u2 = 1.0 / np.sum(V ** 4, axis=0)
    so3 = 1.0 / np.sum((transform.T @ V) ** 4, axis=0)
    return u2, so3
