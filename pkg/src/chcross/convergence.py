"""Temporal and spatial refinement studies against self-generated references."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ArgumentError, StepError
from .fem import grad_lp_norm, h1_norm, lp_norm
from .initial_data import TWO_PI_SQUARE, exp1_c, exp1_phi
from .mesh import Mesh, NodalFunction, build_rect_mesh, interpolate_nodal, transfer_to_mesh
from .potential import Potential
from .stepper import SchemeParams, State, initial_state, run, step_count

__all__ = [
    "StudyConfig",
    "RateRow",
    "StudyError",
    "simulate",
    "temporal_study",
    "spatial_study",
    "compute_rates",
    "fit_order",
    "time_aggregated_error",
]

log = logging.getLogger(__name__)

Field2D = Callable[[np.ndarray, np.ndarray], np.ndarray]


class StudyError(RuntimeError):
    """A run inside a refinement study failed."""

    def __init__(self, message, resolution):
        super().__init__(message)
        self.resolution = resolution


@dataclass
class StudyConfig:
    """Defaults reproduce the first packaged experiment (untruncated, ``S = 1``)."""

    mode: str = "temporal"
    domain: tuple[float, float, float, float] = TWO_PI_SQUARE
    eps: float = 0.3
    S: float = 1.0
    g: float = 1.0
    potential: Potential = field(default_factory=Potential.untruncated)
    T: float = 0.128
    phi0: Field2D = exp1_phi
    c0: Field2D = exp1_c
    # temporal: reference tau on the shared n_ref mesh; spatial: shared tau
    tau_ref: float = 5e-4
    n_ref: int = 128
    sweep: Sequence[float] = (1e-3, 2e-3, 4e-3, 8e-3, 16e-3)

    @classmethod
    def temporal(cls, **kw) -> StudyConfig:
        return cls(mode="temporal", **kw)

    @classmethod
    def spatial(cls, **kw) -> StudyConfig:
        kw.setdefault("tau_ref", 1e-3)
        kw.setdefault("n_ref", 256)
        kw.setdefault("sweep", (8, 16, 32, 64, 128))
        return cls(mode="spatial", **kw)

    def validate(self) -> None:
        if self.mode not in ("temporal", "spatial"):
            raise ArgumentError(f"unknown study mode {self.mode!r}")
        if not self.sweep:
            raise ArgumentError("empty sweep")
        step_count(self.T, self.tau_ref)
        if self.mode == "temporal":
            for tau in self.sweep:
                if tau < self.tau_ref:
                    raise ArgumentError(f"sweep tau {tau:g} is finer than the reference {self.tau_ref:g}")
                step_count(self.T, tau)
                _subsample_factor(tau, self.tau_ref)
        else:
            for n in self.sweep:
                if int(n) != n or n < 1 or n > self.n_ref or self.n_ref % int(n):
                    raise ArgumentError(f"sweep mesh {n} is not a coarsening of {self.n_ref}")

    def mesh(self, n: int) -> Mesh:
        return build_rect_mesh(*self.domain, int(n), int(n))

    def params(self, mesh: Mesh, tau: float) -> SchemeParams:
        return SchemeParams(mesh, tau, self.eps, self.S, self.potential, self.T, self.g)


@dataclass
class RateRow:
    resolution: float
    err_phi_H1: float
    err_c: float
    err_mu_H1: float
    rate_phi: Optional[float] = None
    rate_c: Optional[float] = None
    rate_mu: Optional[float] = None
    # time-aggregated ||grad(mu - mu_ref)||_{L^{4/3}(L^{6/5})}, temporal studies only
    err_grad_mu_l43_l65: Optional[float] = None

    ERROR_COLUMNS = ("err_phi_H1", "err_c", "err_mu_H1")
    RATE_COLUMNS = ("rate_phi", "rate_c", "rate_mu")


def _subsample_factor(tau: float, tau_ref: float) -> int:
    k = round(tau / tau_ref)
    if k < 1 or abs(tau / tau_ref - k) > 1e-9 * k:
        raise ArgumentError(f"tau {tau:g} is not a multiple of the reference step {tau_ref:g}")
    return k


def simulate(cfg: StudyConfig, mesh: Mesh, tau: float, keep_mu: bool = False) -> tuple[State, list[NodalFunction]]:
    """Run one configuration to ``cfg.T``; optionally keep ``mu`` at every step."""
    p = cfg.params(mesh, tau)
    s0 = initial_state(interpolate_nodal(mesh, cfg.phi0), interpolate_nodal(mesh, cfg.c0))
    traj: list[NodalFunction] = []
    observer = (lambda _prev, new: traj.append(new.mu)) if keep_mu else None
    try:
        final = run(s0, p, observer)
    except StepError as exc:
        res = tau if cfg.mode == "temporal" else mesh.nx
        raise StudyError(f"run with n={mesh.nx}, tau={tau:g} failed: {exc}", res) from exc
    return final, traj


def _diff(a: NodalFunction, b: NodalFunction) -> NodalFunction:
    return NodalFunction(a.mesh, a.values - b.values)


def compute_rates(rows: list[RateRow]) -> list[RateRow]:
    """Sort rows finest first and fill the rate columns.

    The rate attached to a row compares it with the next finer one:
    ``log(e / e_finer) / log(r / r_finer)``, i.e. ``log2`` of the error
    ratio under 2:1 refinement.
    """
    rows = sorted(rows, key=lambda r: r.resolution)
    for i, row in enumerate(rows):
        for err_col, rate_col in zip(RateRow.ERROR_COLUMNS, RateRow.RATE_COLUMNS):
            rate = None
            if i > 0:
                prev = rows[i - 1]
                e_f, e_c = getattr(prev, err_col), getattr(row, err_col)
                if e_f > 0 and e_c > 0 and row.resolution > prev.resolution:
                    rate = float(np.log(e_c / e_f) / np.log(row.resolution / prev.resolution))
            setattr(row, rate_col, rate)
    return rows


def time_aggregated_error(
    traj: Sequence[NodalFunction],
    traj_ref: Sequence[NodalFunction],
    tau: float,
    p_time: float,
    inner: str = "grad_l65",
) -> float:
    """Discrete ``L^p``-in-time norm of the error, ``(sum_k tau ||e_k||^p)^(1/p)``.

    ``p_time = inf`` gives the maximum over the time levels.  ``inner``
    selects the spatial norm: ``"l2"``, ``"h1"`` or ``"grad_l65"``
    (``||grad e||_{L^{6/5}}``).
    """
    if len(traj) != len(traj_ref):
        raise ArgumentError(f"time grids differ: {len(traj)} vs {len(traj_ref)} levels")
    norms = {
        "l2": lambda e: lp_norm(e, 2),
        "h1": h1_norm,
        "grad_l65": lambda e: grad_lp_norm(e, 6 / 5),
    }
    if inner not in norms:
        raise ArgumentError(f"unknown inner norm {inner!r}")
    vals = np.array([norms[inner](_diff(a, b)) for a, b in zip(traj, traj_ref)])
    if vals.size == 0:
        return 0.0
    if np.isinf(p_time):
        return float(vals.max())
    return float((tau * np.sum(vals ** p_time)) ** (1.0 / p_time))


def temporal_study(cfg: StudyConfig) -> list[RateRow]:
    """Errors at ``T`` on the shared reference mesh as ``tau`` varies."""
    cfg.validate()
    if cfg.mode != "temporal":
        raise ArgumentError("temporal_study needs a temporal StudyConfig")
    log.info("temporal reference: n=%d tau=%g", cfg.n_ref, cfg.tau_ref)
    mesh = cfg.mesh(cfg.n_ref)
    ref, ref_mu = simulate(cfg, mesh, cfg.tau_ref, keep_mu=True)
    rows = []
    for tau in cfg.sweep:
        log.info("temporal sweep: tau=%g", tau)
        final, mu_traj = simulate(cfg, mesh, tau, keep_mu=True)
        k = _subsample_factor(tau, cfg.tau_ref)
        rows.append(RateRow(
            resolution=float(tau),
            err_phi_H1=h1_norm(_diff(final.phi, ref.phi)),
            err_c=h1_norm(_diff(final.c, ref.c)),
            err_mu_H1=h1_norm(_diff(final.mu, ref.mu)),
            err_grad_mu_l43_l65=time_aggregated_error(mu_traj, ref_mu[k - 1::k], tau, 4 / 3),
        ))
    return compute_rates(rows)


def spatial_study(cfg: StudyConfig) -> list[RateRow]:
    """Errors at ``T`` against the reference interpolated onto each coarse mesh."""
    cfg.validate()
    if cfg.mode != "spatial":
        raise ArgumentError("spatial_study needs a spatial StudyConfig")
    log.info("spatial reference: n=%d tau=%g", cfg.n_ref, cfg.tau_ref)
    ref, _ = simulate(cfg, cfg.mesh(cfg.n_ref), cfg.tau_ref)
    width = cfg.domain[1] - cfg.domain[0]
    rows = []
    for n in cfg.sweep:
        log.info("spatial sweep: n=%d", n)
        final, _ = simulate(cfg, cfg.mesh(n), cfg.tau_ref)
        mesh = final.mesh
        phi_r, c_r, mu_r = (transfer_to_mesh(f, mesh) for f in (ref.phi, ref.c, ref.mu))
        rows.append(RateRow(
            resolution=width / int(n),
            err_phi_H1=h1_norm(_diff(final.phi, phi_r)),
            err_c=lp_norm(_diff(final.c, c_r), 2),
            err_mu_H1=h1_norm(_diff(final.mu, mu_r)),
        ))
    return compute_rates(rows)


def fit_order(rows: Sequence[RateRow], column: str) -> float:
    """Least-squares slope of ``log(error)`` against ``log(resolution)``."""
    if len(rows) < 3:
        raise ArgumentError("fitting an order needs at least three rows")
    if column not in RateRow.ERROR_COLUMNS and column != "err_grad_mu_l43_l65":
        raise ArgumentError(f"unknown error column {column!r}")
    res = np.array([r.resolution for r in rows], dtype=float)
    err = np.array([getattr(r, column) for r in rows], dtype=float)
    if np.any(err <= 0) or np.any(res <= 0):
        raise ArgumentError("errors and resolutions must be positive to fit an order")
    slope, _ = np.polyfit(np.log(res), np.log(err), 1)
    return float(slope)
