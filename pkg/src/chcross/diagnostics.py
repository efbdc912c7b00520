"""Discrete energy, dissipation, mass and a-priori monitors along a run.

Every quadratic form is evaluated with the same matrices the stepper
assembles, so the energy inequality holds here to solver precision rather
than up to a quadrature mismatch.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .errors import ArgumentError
from .fem import (
    assemble_weighted_stiffness,
    h1_norm,
    integrate,
    lp_norm,
    operators,
    w1p_norm,
)
from .linalg import solve_sparse
from .mesh import Mesh, NodalFunction
from .stepper import SchemeParams, State

__all__ = [
    "EnergyRecord",
    "MonitorReport",
    "energy",
    "dissipation",
    "dissipation_residual",
    "mass",
    "mean",
    "inverse_laplacian",
    "record",
    "accumulate",
    "mean_mu_bound",
]


def mass(v: NodalFunction) -> float:
    """``<v, 1>``."""
    return float(operators(v.mesh).ones_mass @ v.values)


def mean(v: NodalFunction) -> float:
    return mass(v) / v.mesh.domain_area


def energy(state: State, p: SchemeParams) -> float:
    """``1/2 |grad phi|^2 + eps^-2 <F(phi), 1> + 1/2 |c|^2 - <phi, c>``."""
    ops = operators(state.mesh)
    phi, c = state.phi.values, state.c.values
    M, K = ops.mass, ops.stiffness
    bulk = integrate(state.mesh, p.potential.F, phi)
    return float(0.5 * phi @ (K @ phi) + bulk / p.eps ** 2 + 0.5 * c @ (M @ c) - phi @ (M @ c))


def _dissipation_parts(s_n: State, s_np1: State, p: SchemeParams) -> tuple[float, float]:
    """``(|grad mu - c grad w|^2, |grad w|^2)`` with ``w = c_new - phi_old``."""
    mesh = s_n.mesh
    K = operators(mesh).stiffness
    cn = s_n.c.values
    Kc = assemble_weighted_stiffness(mesh, cn, 1)
    Kcc = assemble_weighted_stiffness(mesh, cn, 2)
    mu = s_np1.mu.values
    w = s_np1.c.values - s_n.phi.values
    flux = mu @ (K @ mu) - 2.0 * (mu @ (Kc @ w)) + w @ (Kcc @ w)
    return max(float(flux), 0.0), max(float(w @ (K @ w)), 0.0)


def dissipation(s_n: State, s_np1: State, p: SchemeParams) -> float:
    """``tau (|grad mu - c grad w|^2 + g |grad w|^2)``; nonnegative by construction."""
    flux, grad_w = _dissipation_parts(s_n, s_np1, p)
    return p.tau * (flux + p.g * grad_w)


def dissipation_residual(s_n: State, s_np1: State, p: SchemeParams) -> float:
    """``E(n+1) - E(n) + dissipation``; nonpositive up to roundoff in certified mode."""
    return energy(s_np1, p) - energy(s_n, p) + dissipation(s_n, s_np1, p)


def inverse_laplacian(mesh: Mesh, xi: NodalFunction) -> NodalFunction:
    """Mean-free ``u`` with ``<grad u, grad eta> = <xi - mean(xi), eta>`` for all ``eta``.

    The constant kernel of the Neumann stiffness matrix is removed with a
    Lagrange multiplier enforcing ``<u, 1> = 0``.
    """
    if xi.mesh is not mesh:
        raise ArgumentError("field lives on a different mesh")
    ops = operators(mesh)
    one = ops.ones_mass
    rhs = ops.mass @ xi.values - (one @ xi.values / mesh.domain_area) * one
    n = mesh.node_count
    A = sp.bmat([[ops.stiffness, sp.csr_matrix(one[:, None])], [sp.csr_matrix(one[None, :]), None]], format="csc")
    x, _ = solve_sparse(A, np.concatenate([rhs, [0.0]]))
    u = x[:n]
    # the multiplier is zero up to roundoff; recentre to kill the residual mean
    u = u - (one @ u) / mesh.domain_area
    return NodalFunction(mesh, u)


@dataclass(frozen=True)
class EnergyRecord:
    step_index: int
    t: float
    E: float
    mass_phi: float
    mass_c: float
    dissipation: float
    mu_mean: float
    mu_w16_5: float

    def __post_init__(self):
        vals = [getattr(self, f.name) for f in fields(self)]
        if not np.all(np.isfinite(vals)):
            raise ArgumentError(f"non-finite diagnostic in record at step {self.step_index}")
        if self.dissipation < 0:
            raise ArgumentError("dissipation must be nonnegative")


def record(s_n: State, s_np1: State, p: SchemeParams) -> EnergyRecord:
    return EnergyRecord(
        step_index=s_np1.step_index,
        t=s_np1.t,
        E=energy(s_np1, p),
        mass_phi=mass(s_np1.phi),
        mass_c=mass(s_np1.c),
        dissipation=dissipation(s_n, s_np1, p),
        mu_mean=mean(s_np1.mu),
        mu_w16_5=w1p_norm(s_np1.mu, 6 / 5),
    )


def mean_mu_bound(s_n: State, s_np1: State, p: SchemeParams) -> float:
    """Upper bound for ``|mean(mu_new)|`` from testing the mu equation with 1.

    ``mean(mu_new) = eps^-2 mean(f(phi_old)) - mean(c_new)``, and
    ``|f(s)| <= L |s|`` for the truncated well, giving
    ``eps^-2 L |phi_old| / sqrt(|Omega|) + |mean(c_new)|``.
    """
    L = p.potential.lipschitz_bound()
    area = s_n.mesh.domain_area
    return L * lp_norm(s_n.phi, 2) / np.sqrt(area) / p.eps ** 2 + abs(mean(s_np1.c))


@dataclass
class MonitorReport:
    """Running sums bounded uniformly in ``(h, tau)`` for a fixed problem.

    Increments of ``c`` and ``grad phi`` are plain step differences, not
    difference quotients.
    """

    steps: int = 0
    sum_dc_sq: float = 0.0
    sum_grad_dphi_sq: float = 0.0
    sum_flux_sq: float = 0.0
    sum_grad_w_sq: float = 0.0
    sum_mu_w16_5: float = 0.0
    sup_phi_h1: float = 0.0
    sup_c_l2: float = 0.0
    max_mu_mean_ratio: float = 0.0

    SUM_FIELDS = ("sum_dc_sq", "sum_grad_dphi_sq", "sum_flux_sq", "sum_grad_w_sq", "sum_mu_w16_5")
    BOUNDED_FIELDS = SUM_FIELDS + ("sup_phi_h1", "sup_c_l2")

    def as_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in ("steps",) + self.BOUNDED_FIELDS + ("max_mu_mean_ratio",)}


def accumulate(
    report: MonitorReport,
    rec: Optional[EnergyRecord],
    s_n: State,
    s_np1: State,
    p: SchemeParams,
) -> MonitorReport:
    """Add one step's contributions to ``report`` (in place) and return it."""
    ops = operators(s_n.mesh)
    M, K = ops.mass, ops.stiffness
    dc = s_np1.c.values - s_n.c.values
    dphi = s_np1.phi.values - s_n.phi.values
    flux, grad_w = _dissipation_parts(s_n, s_np1, p)
    mu_w = rec.mu_w16_5 if rec is not None else w1p_norm(s_np1.mu, 6 / 5)
    mu_mean = rec.mu_mean if rec is not None else mean(s_np1.mu)
    f_l2 = np.sqrt(integrate(s_n.mesh, lambda s: p.potential.f(s) ** 2, s_n.phi))

    report.steps += 1
    report.sum_dc_sq += float(dc @ (M @ dc))
    report.sum_grad_dphi_sq += float(dphi @ (K @ dphi))
    report.sum_flux_sq += p.tau * flux
    report.sum_grad_w_sq += p.tau * grad_w
    report.sum_mu_w16_5 += p.tau * mu_w ** (4 / 3)
    report.sup_phi_h1 = max(report.sup_phi_h1, h1_norm(s_np1.phi))
    report.sup_c_l2 = max(report.sup_c_l2, lp_norm(s_np1.c, 2))
    report.max_mu_mean_ratio = max(report.max_mu_mean_ratio, abs(mu_mean) / (f_l2 ** 2 + 1.0))
    return report

