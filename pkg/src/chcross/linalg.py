"""Sparse storage, 3x3 block systems and the direct solver used per time step.

Matrices are plain :class:`scipy.sparse.csr_matrix` objects; unknowns of a
block system are ordered field by field (phi block, c block, mu block).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.io
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ArgumentError, SolverError

__all__ = ["BlockSystem", "matvec", "residual_norm", "solve", "solve_sparse", "write_matrix_market"]

RESIDUAL_RTOL = 1e-10


def matvec(A: sp.spmatrix, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or A.shape[1] != x.shape[0]:
        raise ArgumentError(f"cannot multiply {A.shape[0]}x{A.shape[1]} matrix by vector of shape {x.shape}")
    return np.asarray(A @ x).ravel()


def residual_norm(A: sp.spmatrix, x: np.ndarray, b: np.ndarray) -> float:
    """Relative residual ``||Ax - b|| / max(1, ||b||)``."""
    b = np.asarray(b, dtype=float)
    r = matvec(A, x) - b
    return float(np.linalg.norm(r) / max(1.0, np.linalg.norm(b)))


@dataclass
class BlockSystem:
    """Coupled 3x3 block operator over the (phi, c, mu) unknowns."""

    blocks: Sequence[Sequence[sp.spmatrix | None]]
    rhs: np.ndarray
    # node permutation used only to order the factorization
    node_order: np.ndarray | None = None
    _matrix: sp.csc_matrix | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if len(self.blocks) != 3 or any(len(row) != 3 for row in self.blocks):
            raise ArgumentError("a block system needs a 3x3 grid of blocks")
        shapes = {b.shape for row in self.blocks for b in row if b is not None}
        if len(shapes) != 1:
            raise ArgumentError(f"blocks must share one square shape, got {sorted(shapes)}")
        (n, m), = shapes
        if n != m:
            raise ArgumentError("blocks must be square")
        self.rhs = np.asarray(self.rhs, dtype=float)
        if self.rhs.shape != (3 * n,):
            raise ArgumentError(f"rhs must have length {3 * n}, got {self.rhs.shape}")
        self.n = n

    @property
    def matrix(self) -> sp.csc_matrix:
        """Monolithic ``3n x 3n`` matrix, assembled on first access."""
        if self._matrix is None:
            A = sp.bmat(self.blocks, format="csc")
            A.sum_duplicates()
            A.sort_indices()
            self._matrix = A
        return self._matrix

    @property
    def elimination_order(self) -> np.ndarray | None:
        """Unknown permutation grouping the three fields of each node, in ``node_order``."""
        if self.node_order is None:
            return None
        o = np.asarray(self.node_order)
        return (o[:, None] + self.n * np.arange(3)[None, :]).ravel()

    def split(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = self.n
        return x[:n], x[n:2 * n], x[2 * n:]


def solve_sparse(
    A: sp.spmatrix,
    b: np.ndarray,
    *,
    ordering: np.ndarray | None = None,
    rtol: float = RESIDUAL_RTOL,
) -> tuple[np.ndarray, float]:
    """Solve ``Ax = b`` by sparse LU and return the solution with its relative residual.

    With ``ordering`` the matrix is permuted symmetrically before a
    factorization that keeps that order and prefers diagonal pivots;
    otherwise SuperLU's COLAMD column ordering is used.  One step of
    iterative refinement is applied when the first solve misses ``rtol``; a
    :class:`SolverError` carrying the residual is raised if the target is
    still not met or the factorization breaks down.
    """
    A = sp.csc_matrix(A)
    b = np.asarray(b, dtype=float)
    if A.shape[0] != A.shape[1] or A.shape[0] != b.shape[0]:
        raise ArgumentError(f"incompatible system: matrix {A.shape}, rhs {b.shape}")
    if ordering is not None:
        perm = np.asarray(ordering)
        if np.sort(perm).tolist() != list(range(A.shape[0])):
            raise ArgumentError("ordering is not a permutation of the unknowns")
        Ap = A[perm][:, perm].tocsc()
        kwargs = dict(permc_spec="NATURAL", diag_pivot_thresh=0.1, options=dict(SymmetricMode=True))
    else:
        perm, Ap, kwargs = None, A, {}
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", spla.MatrixRankWarning)
            factor = spla.splu(Ap, **kwargs)
    except (RuntimeError, spla.MatrixRankWarning) as exc:
        raise SolverError(f"sparse factorization failed: {exc}") from exc

    def lu_solve(rhs):
        if perm is None:
            return factor.solve(rhs)
        out = np.empty_like(rhs)
        out[perm] = factor.solve(rhs[perm])
        return out

    x = lu_solve(b)
    if not np.all(np.isfinite(x)):
        raise SolverError("solution contains non-finite entries")
    res = residual_norm(A, x, b)
    if res > rtol:
        x = x + lu_solve(b - A @ x)
        res = residual_norm(A, x, b)
    if not res <= rtol:
        raise SolverError(f"residual {res:.3e} exceeds tolerance {rtol:.1e}", residual=res)
    return x, res


def solve(system: BlockSystem, *, full_output: bool = False):
    """Solve a block system; with ``full_output`` also return the residual."""
    x, res = solve_sparse(system.matrix, system.rhs, ordering=system.elimination_order)
    return (x, res) if full_output else x


def write_matrix_market(A: sp.spmatrix, path: str | Path) -> None:
    """Dump ``A`` in MatrixMarket coordinate format (general, 1-based)."""
    scipy.io.mmwrite(str(path), sp.coo_matrix(A), symmetry="general", precision=17)
