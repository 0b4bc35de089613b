"""Matrices of the Hamiltonian building blocks in the U(2) basis of one l block.

W2 is the SO(3) Casimir in the convention where its off-diagonal elements
are negative; W2bar is the second SO(3) Casimir, same diagonal, positive
off-diagonal. Composite operators are built by explicit products of these.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .basis import BasisBlock, enumerate_block
from .errors import InvalidArgumentError

OPERATOR_KINDS = (
    "n", "n2", "n3", "n4", "l2", "l4", "nl2", "n2l2",
    "W2", "W2bar", "W4", "l2W2", "sym_nW2", "sym_n2W2", "sym_W2W2bar", "pairing",
)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def w2_diagonal(N: int, n: np.ndarray, l: int) -> np.ndarray:
    return (N - n) * (n + 2) + (N - n + 1) * n + l * l


def w2_offdiagonal(N: int, n: np.ndarray, l: int) -> np.ndarray:
    """Elements <n-2|W2|n> for each n > |l| of the block (negative by convention)."""
    return -np.sqrt((N - n + 2) * (N - n + 1) * (n + l) * (n - l))


@lru_cache(maxsize=512)
def _cached(kind: str, N: int, l: int) -> np.ndarray:
    return _frozen(_build(kind, enumerate_block(N, l)))


def _build(kind: str, block: BasisBlock) -> np.ndarray:
    N, l = block.N, block.l
    n = block.n_values
    L2 = float(l * l)
    if kind in ("n", "n2", "n3", "n4"):
        return np.diag(n ** int(kind[1:] or 1))
    if kind == "l2":
        return L2 * np.eye(block.dim)
    if kind == "l4":
        return L2 * L2 * np.eye(block.dim)
    if kind == "nl2":
        return np.diag(n * L2)
    if kind == "n2l2":
        return np.diag(n * n * L2)
    if kind in ("W2", "W2bar"):
        w = np.diag(w2_diagonal(N, n, l))
        off = w2_offdiagonal(N, n[1:], l)
        if kind == "W2bar":
            off = -off
        idx = np.arange(block.dim - 1)
        w[idx, idx + 1] = off
        w[idx + 1, idx] = off
        return w
    if kind == "pairing":
        return N * (N + 1) * np.eye(block.dim) - _cached("W2", N, l)
    w2 = _cached("W2", N, l)
    if kind == "W4":
        return w2 @ w2
    if kind == "l2W2":
        return L2 * w2
    if kind in ("sym_nW2", "sym_n2W2"):
        d = np.diag(n if kind == "sym_nW2" else n * n)
        return d @ w2 + w2 @ d
    if kind == "sym_W2W2bar":
        wb = _cached("W2bar", N, l)
        return 0.5 * (w2 @ wb + wb @ w2)
    raise InvalidArgumentError(f"unknown operator kind {kind!r}")


def matrix(kind: str, block: BasisBlock) -> np.ndarray:
    """Dense, read-only matrix of operator `kind` in the U(2) basis of `block`."""
    if kind not in OPERATOR_KINDS:
        raise InvalidArgumentError(f"unknown operator kind {kind!r}; expected one of {OPERATOR_KINDS}")
    return _cached(kind, block.N, block.l)
