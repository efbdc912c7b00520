"""P1 assembly of the mass, stiffness and weighted stiffness matrices, load
vectors, and Lebesgue/Sobolev norms of nodal fields.

All assembly is vectorised over elements and accumulated in a fixed order,
so repeated calls produce bit-identical matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import ceil
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .errors import ArgumentError, DataError
from .mesh import Mesh, NodalFunction

__all__ = [
    "QuadratureRule",
    "CENTROID",
    "STRANG_FIX_3",
    "DUNAVANT_6",
    "collapsed_gauss",
    "assemble_mass",
    "assemble_stiffness",
    "assemble_weighted_stiffness",
    "assemble_load",
    "integrate",
    "operators",
    "Operators",
    "lp_norm",
    "grad_lp_norm",
    "h1_norm",
    "w1p_norm",
]


@dataclass(frozen=True)
class QuadratureRule:
    """Rule on a triangle in barycentric coordinates; weights sum to one."""

    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        w = np.asarray(self.weights, dtype=float)
        if pts.shape[1] != 3 or pts.shape[0] != w.size:
            raise ArgumentError("points must be barycentric triples matching the weights")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)


def _perm3(a: float, b: float) -> list[tuple[float, float, float]]:
    return [(a, b, b), (b, a, b), (b, b, a)]


CENTROID = QuadratureRule([(1 / 3, 1 / 3, 1 / 3)], [1.0], degree=1)

STRANG_FIX_3 = QuadratureRule(_perm3(2 / 3, 1 / 6), [1 / 3] * 3, degree=2)

_A1 = 0.445948490915964886318329253883
_A2 = 0.091576213509770743459571463402
_W1 = 0.223381589678011465944640202350
_W2 = 0.109951743655321867388693130983
DUNAVANT_6 = QuadratureRule(
    _perm3(1.0 - 2.0 * _A1, _A1) + _perm3(1.0 - 2.0 * _A2, _A2),
    [_W1] * 3 + [_W2] * 3,
    degree=4,
)


@lru_cache(maxsize=None)
def collapsed_gauss(degree: int) -> QuadratureRule:
    """Conical-product Gauss rule (Duffy map of a tensor Gauss-Legendre rule).

    Exact for total degree ``degree``; all weights are positive.
    """
    if degree < 0:
        raise ArgumentError("degree must be non-negative")
    n = max(1, ceil((degree + 2) / 2))
    g, w = np.polynomial.legendre.leggauss(n)
    t, wt = 0.5 * (g + 1.0), 0.5 * w
    u, v = np.meshgrid(t, t, indexing="ij")
    wu, wv = np.meshgrid(wt, wt, indexing="ij")
    x = u.ravel()
    y = (v * (1.0 - u)).ravel()
    weights = (2.0 * wu * wv * (1.0 - u)).ravel()
    pts = np.column_stack([1.0 - x - y, x, y])
    return QuadratureRule(pts, weights, degree=degree)


def _assemble(mesh: Mesh, local: np.ndarray) -> sp.csr_matrix:
    indptr, indices, data_map = mesh.csr_pattern
    data = np.bincount(data_map, weights=local.ravel(), minlength=indices.size)
    n = mesh.node_count
    return sp.csr_matrix((data, indices.copy(), indptr.copy()), shape=(n, n))


_MASS_REF = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


def assemble_mass(mesh: Mesh) -> sp.csr_matrix:
    """Consistent P1 mass matrix."""
    return _assemble(mesh, mesh.areas[:, None, None] * _MASS_REF)


@lru_cache(maxsize=32)
def _grad_products(mesh: Mesh) -> np.ndarray:
    G = mesh.grads
    return np.einsum("eik,ejk->eij", G, G)


def _stiffness_from_coef(mesh: Mesh, coef: np.ndarray) -> sp.csr_matrix:
    return _assemble(mesh, coef[:, None, None] * _grad_products(mesh))


def assemble_stiffness(mesh: Mesh) -> sp.csr_matrix:
    """P1 stiffness matrix of the Neumann Laplacian (constants in the kernel)."""
    return _stiffness_from_coef(mesh, mesh.areas)


def _values(mesh: Mesh, u) -> np.ndarray:
    if isinstance(u, NodalFunction):
        if u.mesh is not mesh:
            raise ArgumentError("field lives on a different mesh")
        return u.values
    u = np.asarray(u, dtype=float)
    if u.shape != (mesh.node_count,):
        raise ArgumentError(f"expected {mesh.node_count} nodal values, got shape {u.shape}")
    return u


def _at_points(mesh: Mesh, u: np.ndarray, rule: QuadratureRule) -> np.ndarray:
    """Values of the P1 field at the rule's points, shape ``(E, q)``."""
    return u[mesh.elements] @ rule.points.T


def assemble_weighted_stiffness(mesh: Mesh, w, p: int) -> sp.csr_matrix:
    """Stiffness matrix with coefficient ``w**p`` (``p`` in {1, 2}).

    The elementwise integral of ``w**p`` uses a rule exact for degree ``p``,
    which is exact for P1 data.
    """
    if p not in (1, 2):
        raise ArgumentError(f"weight power must be 1 or 2, got {p}")
    wv = _values(mesh, w)
    rule = CENTROID if p == 1 else STRANG_FIX_3
    wq = _at_points(mesh, wv, rule)
    coef = mesh.areas * ((wq ** p) @ rule.weights)
    return _stiffness_from_coef(mesh, coef)


def assemble_load(
    mesh: Mesh,
    g: Callable[[np.ndarray], np.ndarray],
    u,
    rule: QuadratureRule = DUNAVANT_6,
) -> np.ndarray:
    """Load vector ``b_i = <g(u), psi_i>`` by elementwise quadrature."""
    uq = _at_points(mesh, _values(mesh, u), rule)
    gq = np.asarray(g(uq), dtype=float)
    if not np.all(np.isfinite(gq)):
        raise DataError("load integrand is not finite")
    local = mesh.areas[:, None] * ((gq * rule.weights) @ rule.points)
    return np.bincount(mesh.elements.ravel(), weights=local.ravel(), minlength=mesh.node_count)


def integrate(mesh: Mesh, g: Callable[[np.ndarray], np.ndarray], u, rule: QuadratureRule = DUNAVANT_6) -> float:
    """``\\int g(u) dx`` with the same elementwise rule as :func:`assemble_load`."""
    uq = _at_points(mesh, _values(mesh, u), rule)
    gq = np.asarray(g(uq), dtype=float)
    if not np.all(np.isfinite(gq)):
        raise DataError("integrand is not finite")
    return float(mesh.areas @ (gq @ rule.weights))


@dataclass(frozen=True)
class Operators:
    """Mesh-dependent matrices that never change during a run."""

    mesh: Mesh
    mass: sp.csr_matrix
    stiffness: sp.csr_matrix

    @property
    def ones_mass(self) -> np.ndarray:
        """``M @ 1``, i.e. the integrals of the basis functions."""
        return np.asarray(self.mass.sum(axis=1)).ravel()


@lru_cache(maxsize=16)
def operators(mesh: Mesh) -> Operators:
    return Operators(mesh, assemble_mass(mesh), assemble_stiffness(mesh))


def _check_p(p: float) -> float:
    p = float(p)
    if not p >= 1.0:
        raise ArgumentError(f"norm exponent must be >= 1, got {p}")
    return p


def lp_norm(v: NodalFunction, p: float) -> float:
    p = _check_p(p)
    mesh = v.mesh
    if p == 2.0:
        M = operators(mesh).mass
        return float(np.sqrt(max(v.values @ (M @ v.values), 0.0)))
    rule = collapsed_gauss(int(ceil(p)) + 1) if p.is_integer() else DUNAVANT_6
    return integrate(mesh, lambda s: np.abs(s) ** p, v, rule) ** (1.0 / p)


def _grad_magnitudes(v: NodalFunction) -> np.ndarray:
    mesh = v.mesh
    g = np.einsum("ei,eik->ek", v.values[mesh.elements], mesh.grads)
    return np.hypot(g[:, 0], g[:, 1])


def grad_lp_norm(v: NodalFunction, p: float) -> float:
    """Exact ``||grad v||_{L^p}`` (the gradient is constant per element)."""
    p = _check_p(p)
    return float((v.mesh.areas @ _grad_magnitudes(v) ** p) ** (1.0 / p))


def h1_norm(v: NodalFunction) -> float:
    return float(np.hypot(lp_norm(v, 2), grad_lp_norm(v, 2)))


def w1p_norm(v: NodalFunction, p: float) -> float:
    """``(||v||_p^p + ||grad v||_p^p)^(1/p)``."""
    p = _check_p(p)
    return float((lp_norm(v, p) ** p + grad_lp_norm(v, p) ** p) ** (1.0 / p))
