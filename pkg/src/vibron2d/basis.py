"""Cylindrical-oscillator basis blocks and the displaced-oscillator labels.

States of the U(3) irrep [N] are labelled either by (n, l) (linear limit,
U(2) chain) or by (omega, l) with nu_b = (N - omega)/2 (bent limit, SO(3)
chain). Hamiltonians conserve l, so everything is organised per l block.
Only l >= 0 is represented; the -l block is identical.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSpectrumError, InvalidArgumentError


@dataclass(frozen=True)
class BasisState:
    N: int
    n: int
    l: int

    def __post_init__(self):
        if not 0 <= abs(self.l) <= self.n <= self.N or (self.n - abs(self.l)) % 2:
            raise InvalidArgumentError(f"invalid basis labels {self}")


@dataclass(frozen=True)
class So3Label:
    N: int
    omega: int
    nu_b: int


@dataclass(frozen=True)
class BasisBlock:
    """U(2) basis states |[N] n^l> of one l block, n ascending in steps of 2."""

    N: int
    l: int
    states: tuple[BasisState, ...] = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.states)

    @property
    def n_values(self) -> np.ndarray:
        return np.array([s.n for s in self.states], dtype=float)


def _check(N: int, l: int) -> None:
    if int(N) != N or N < 1:
        raise InvalidArgumentError(f"vibron number must be a positive integer, got {N}")
    if int(l) != l or l < 0 or l > N:
        raise InvalidArgumentError(f"need 0 <= l <= N, got l={l}, N={N}")


def block_dim(N: int, l: int) -> int:
    _check(N, l)
    return (N - l) // 2 + 1


def enumerate_block(N: int, l: int) -> BasisBlock:
    _check(N, l)
    states = tuple(BasisState(N, n, l) for n in range(l, N + 1, 2))
    return BasisBlock(N, l, states)


def so3_labels(N: int, l: int) -> list[So3Label]:
    """SO(3)-chain labels of the l block, ordered by nu_b ascending."""
    _check(N, l)
    return [So3Label(N, N - 2 * nu, nu) for nu in range(block_dim(N, l))]


def fix_signs(vecs: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Flip columns so that each column's first non-negligible entry is positive."""
    vecs = np.array(vecs, dtype=float, copy=True)
    for k in range(vecs.shape[1]):
        col = vecs[:, k]
        nz = np.flatnonzero(np.abs(col) > tol * max(np.abs(col).max(), 1.0))
        if nz.size and col[nz[0]] < 0:
            vecs[:, k] = -col
    return vecs


def so3_transform(block: BasisBlock, w2: np.ndarray) -> np.ndarray:
    """Orthogonal matrix whose columns are the SO(3) basis states in the U(2) basis.

    Columns are eigenvectors of W^2 ordered by descending eigenvalue, i.e.
    ascending nu_b, matching :func:`so3_labels`.
    """
    w2 = np.asarray(w2, dtype=float)
    if w2.shape != (block.dim, block.dim):
        raise InvalidArgumentError(f"W2 shape {w2.shape} does not match block dimension {block.dim}")
    vals, vecs = np.linalg.eigh(w2)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    scale = max(np.abs(vals).max(), 1.0)
    if vals.size > 1 and np.min(-np.diff(vals)) < 1e-10 * scale:
        raise DegenerateSpectrumError("W2 eigenvalues are degenerate; matrix is not a valid Casimir block")
    return fix_signs(vecs)
