"""Structured P1 triangulations of rectangles and nodal fields on them.

Nodes are numbered lexicographically with x running fastest, so node
``(i, j)`` has index ``j * (nx + 1) + i``.  Every grid cell is split along
its anti-diagonal into the triangles ``(n00, n10, n01)`` and
``(n10, n11, n01)``, both counterclockwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from .errors import ArgumentError, DataError

__all__ = [
    "Mesh",
    "NodalFunction",
    "build_rect_mesh",
    "element_geometry",
    "interpolate_nodal",
    "transfer_to_mesh",
]

# Grid coordinates closer than this (in cell units) to an integer snap to it,
# which keeps transfers between nested meshes exact.
_SNAP_TOL = 1e-9


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class Mesh:
    """Uniform conforming triangulation of ``[x0, x1] x [y0, y1]``.

    Instances are immutable; geometric data (areas, basis gradients, the
    sparse assembly pattern) is computed once and cached.
    """

    def __init__(self, x0: float, x1: float, y0: float, y1: float, nx: int, ny: int):
        if not all(np.isfinite(v) for v in (x0, x1, y0, y1)):
            raise ArgumentError("mesh bounds must be finite")
        if not (x1 > x0 and y1 > y0):
            raise ArgumentError(f"empty rectangle [{x0}, {x1}] x [{y0}, {y1}]")
        if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
            raise ArgumentError(f"subdivisions must be positive integers, got {nx}x{ny}")
        self.x0, self.x1, self.y0, self.y1 = float(x0), float(x1), float(y0), float(y1)
        self.nx, self.ny = int(nx), int(ny)

        xs = np.linspace(self.x0, self.x1, self.nx + 1)
        ys = np.linspace(self.y0, self.y1, self.ny + 1)
        X, Y = np.meshgrid(xs, ys)
        self.nodes: NDArray[np.float64] = _readonly(np.column_stack([X.ravel(), Y.ravel()]))

        i, j = np.meshgrid(np.arange(self.nx), np.arange(self.ny))
        n00 = (j * (self.nx + 1) + i).ravel()
        n10 = n00 + 1
        n01 = n00 + self.nx + 1
        n11 = n01 + 1
        lower = np.column_stack([n00, n10, n01])
        upper = np.column_stack([n10, n11, n01])
        # interleave so that cell k owns elements 2k and 2k+1
        elements = np.empty((2 * n00.size, 3), dtype=np.int64)
        elements[0::2] = lower
        elements[1::2] = upper
        self.elements: NDArray[np.int64] = _readonly(elements)

    def __repr__(self) -> str:
        return (
            f"Mesh([{self.x0:g}, {self.x1:g}] x [{self.y0:g}, {self.y1:g}], "
            f"nx={self.nx}, ny={self.ny})"
        )

    @property
    def node_count(self) -> int:
        return (self.nx + 1) * (self.ny + 1)

    @property
    def element_count(self) -> int:
        return 2 * self.nx * self.ny

    @property
    def domain(self) -> tuple[float, float, float, float]:
        return (self.x0, self.x1, self.y0, self.y1)

    @property
    def domain_area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    @property
    def hx(self) -> float:
        return (self.x1 - self.x0) / self.nx

    @property
    def hy(self) -> float:
        return (self.y1 - self.y0) / self.ny

    @property
    def h(self) -> float:
        """Largest element diameter (the cell diagonal)."""
        return float(np.hypot(self.hx, self.hy))

    def same_domain(self, other: Mesh, rtol: float = 1e-12) -> bool:
        scale = max(abs(v) for v in (*self.domain, 1.0))
        return all(abs(a - b) <= rtol * scale for a, b in zip(self.domain, other.domain))

    @cached_property
    def _geometry(self) -> tuple[np.ndarray, np.ndarray]:
        p = self.nodes[self.elements]  # (E, 3, 2)
        x, y = p[..., 0], p[..., 1]
        det = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])
        grads = np.empty((self.element_count, 3, 2))
        grads[:, 0, 0] = y[:, 1] - y[:, 2]
        grads[:, 0, 1] = x[:, 2] - x[:, 1]
        grads[:, 1, 0] = y[:, 2] - y[:, 0]
        grads[:, 1, 1] = x[:, 0] - x[:, 2]
        grads[:, 2, 0] = y[:, 0] - y[:, 1]
        grads[:, 2, 1] = x[:, 1] - x[:, 0]
        grads /= det[:, None, None]
        return _readonly(0.5 * det), _readonly(grads)

    @property
    def areas(self) -> NDArray[np.float64]:
        """Signed element areas (all positive for a valid mesh)."""
        return self._geometry[0]

    @property
    def grads(self) -> NDArray[np.float64]:
        """Constant barycentric gradients, shape ``(E, 3, 2)``."""
        return self._geometry[1]

    @cached_property
    def csr_pattern(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(indptr, indices, data_map)`` of the P1 sparsity pattern.

        ``data_map`` sends the flattened ``(E, 3, 3)`` element matrices to
        positions in the CSR data array, so assembly is a single bincount.
        """
        n = self.node_count
        rows = np.repeat(self.elements, 3, axis=1).ravel()
        cols = np.tile(self.elements, (1, 3)).ravel()
        keys, data_map = np.unique(rows * n + cols, return_inverse=True)
        indices = keys % n
        counts = np.bincount(keys // n, minlength=n)
        indptr = np.concatenate([[0], np.cumsum(counts)])
        return _readonly(indptr), _readonly(indices), _readonly(data_map.ravel())

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Unique undirected edges and the number of elements sharing each."""
        e = self.elements
        pairs = np.concatenate([e[:, [0, 1]], e[:, [1, 2]], e[:, [2, 0]]])
        pairs.sort(axis=1)
        return np.unique(pairs, axis=0, return_counts=True)

    @cached_property
    def nested_dissection_order(self) -> NDArray[np.int64]:
        """Node permutation from geometric nested dissection of the grid.

        Separator lines are numbered after the two halves they split, which
        keeps LU fill low for sparse direct solves.
        """
        out: list[np.ndarray] = []
        stride = self.nx + 1

        def block(i0, i1, j0, j1):
            jj, ii = np.mgrid[j0:j1 + 1, i0:i1 + 1]
            return (jj * stride + ii).ravel()

        def rec(i0, i1, j0, j1):
            if i0 > i1 or j0 > j1:
                return
            w, h = i1 - i0 + 1, j1 - j0 + 1
            if w * h <= 16:
                out.append(block(i0, i1, j0, j1))
            elif w >= h:
                im = (i0 + i1) // 2
                rec(i0, im - 1, j0, j1)
                rec(im + 1, i1, j0, j1)
                out.append(block(im, im, j0, j1))
            else:
                jm = (j0 + j1) // 2
                rec(i0, i1, j0, jm - 1)
                rec(i0, i1, jm + 1, j1)
                out.append(block(i0, i1, jm, jm))

        rec(0, self.nx, 0, self.ny)
        return _readonly(np.concatenate(out).astype(np.int64))

    def boundary_nodes(self) -> NDArray[np.bool_]:
        i = np.arange(self.node_count) % (self.nx + 1)
        j = np.arange(self.node_count) // (self.nx + 1)
        return (i == 0) | (i == self.nx) | (j == 0) | (j == self.ny)


def build_rect_mesh(x0: float, x1: float, y0: float, y1: float, nx: int, ny: int) -> Mesh:
    return Mesh(x0, x1, y0, y1, nx, ny)


def element_geometry(mesh: Mesh, e: int) -> tuple[float, np.ndarray]:
    """Area of element ``e`` and the gradients of its three basis functions."""
    if not 0 <= e < mesh.element_count:
        raise IndexError(f"element {e} out of range [0, {mesh.element_count})")
    return float(mesh.areas[e]), mesh.grads[e].copy()


@dataclass(frozen=True, eq=False)
class NodalFunction:
    """Continuous piecewise-linear field given by its nodal values."""

    mesh: Mesh
    values: NDArray[np.float64]

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.mesh.node_count,):
            raise ArgumentError(
                f"expected {self.mesh.node_count} nodal values, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise DataError("nodal values must be finite")
        object.__setattr__(self, "values", _readonly(v))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __len__(self) -> int:
        return self.values.size


def interpolate_nodal(mesh: Mesh, f: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> NodalFunction:
    """Nodal interpolant of ``f(x, y)``; ``f`` is called once on coordinate arrays."""
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    vals = np.broadcast_to(np.asarray(f(x, y), dtype=float), x.shape).copy()
    bad = ~np.isfinite(vals)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise DataError(f"non-finite value at node {k} ({x[k]:g}, {y[k]:g})")
    return NodalFunction(mesh, vals)


def _cell_coords(t: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    near = np.rint(t)
    t = np.where(np.abs(t - near) <= _SNAP_TOL, near, t)
    cell = np.clip(np.floor(t), 0, n - 1).astype(np.int64)
    return cell, t - cell


def evaluate(u: NodalFunction, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Evaluate the P1 field ``u`` at points inside its rectangle."""
    m = u.mesh
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    tol = 1e-12 * max(1.0, m.x1 - m.x0, m.y1 - m.y0)
    if np.any((x < m.x0 - tol) | (x > m.x1 + tol) | (y < m.y0 - tol) | (y > m.y1 + tol)):
        raise ArgumentError("evaluation points lie outside the mesh rectangle")
    i, xi = _cell_coords((x - m.x0) / m.hx, m.nx)
    j, eta = _cell_coords((y - m.y0) / m.hy, m.ny)
    n00 = j * (m.nx + 1) + i
    v = u.values
    u00, u10, u01, u11 = v[n00], v[n00 + 1], v[n00 + m.nx + 1], v[n00 + m.nx + 2]
    lower = xi + eta <= 1.0
    out_lower = u00 * (1.0 - xi - eta) + u10 * xi + u01 * eta
    out_upper = u11 * (xi + eta - 1.0) + u10 * (1.0 - eta) + u01 * (1.0 - xi)
    return np.where(lower, out_lower, out_upper)


def transfer_to_mesh(src: NodalFunction, dst: Mesh) -> NodalFunction:
    """P1 interpolation of ``src`` onto the nodes of ``dst`` (same rectangle)."""
    if not src.mesh.same_domain(dst):
        raise ArgumentError(f"domain mismatch: {src.mesh!r} vs {dst!r}")
    return NodalFunction(dst, evaluate(src, dst.nodes[:, 0], dst.nodes[:, 1]))
