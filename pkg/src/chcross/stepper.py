"""Stabilized linear time stepping for the Cahn-Hilliard cross-diffusion system.

One step solves a single coupled linear system for ``(phi, c, mu)`` at the
new time level.  The nonlinearity ``f(phi)`` is lagged, the cross-diffusion
weights use the old nutrient ``c``, and a stabilization term
``S / eps^2 (phi_new - phi_old)`` is added to the chemical potential.  With
``w = c_new - phi_old`` the weak equations are::

    <(phi_new - phi)/tau, xi>  = -<grad mu - c grad w, grad xi>
    <(c_new - c)/tau, eta>     =  <c grad mu - c^2 grad w, grad eta> - g <grad w, grad eta>
    <mu, sigma>                =  <grad phi_new, grad sigma>
                                  + eps^-2 <f(phi) + S (phi_new - phi), sigma> - <c_new, sigma>
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import ArgumentError, SolverError, StepError
from .fem import Operators, assemble_load, assemble_weighted_stiffness, operators
from .linalg import BlockSystem, solve
from .mesh import Mesh, NodalFunction
from .potential import Potential

__all__ = [
    "SchemeParams",
    "State",
    "ParamWarning",
    "initial_state",
    "validate_params",
    "build_step_system",
    "advance",
    "run",
    "step_count",
]

log = logging.getLogger(__name__)

MASS_RTOL = 1e-9


@dataclass(frozen=True)
class SchemeParams:
    mesh: Mesh
    tau: float
    eps: float
    S: float = 1.0
    potential: Potential = field(default_factory=Potential.untruncated)
    T: float = 0.128
    g: float = 1.0
    # optional coercivity constants F(s) >= K1 s^2 - K2, only used for warnings
    K1: Optional[float] = None
    K2: Optional[float] = None

    def __post_init__(self):
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise ArgumentError(f"tau must be positive, got {self.tau}")
        if not (np.isfinite(self.eps) and self.eps > 0):
            raise ArgumentError(f"eps must be positive, got {self.eps}")
        if not (np.isfinite(self.S) and self.S >= 0):
            raise ArgumentError(f"S must be non-negative, got {self.S}")
        if not (np.isfinite(self.g) and self.g >= 0):
            raise ArgumentError(f"mobility g must be non-negative, got {self.g}")
        if not (np.isfinite(self.T) and self.T >= 0):
            raise ArgumentError(f"final time must be non-negative, got {self.T}")

    @property
    def certified(self) -> bool:
        """True when the energy inequality is guaranteed (truncated and ``S > L/2``)."""
        return self.potential.is_truncated and self.S > 0.5 * self.potential.lipschitz_bound()


@dataclass(frozen=True, eq=False)
class State:
    phi: NodalFunction
    c: NodalFunction
    mu: NodalFunction
    t: float = 0.0
    step_index: int = 0

    def __post_init__(self):
        if not (self.phi.mesh is self.c.mesh is self.mu.mesh):
            raise ArgumentError("phi, c and mu must share one mesh")

    @property
    def mesh(self) -> Mesh:
        return self.phi.mesh


def initial_state(phi0: NodalFunction, c0: NodalFunction, t: float = 0.0) -> State:
    """State at ``t`` with ``mu`` set to zero (it is not an input of the scheme)."""
    return State(phi0, c0, NodalFunction(phi0.mesh, np.zeros(phi0.mesh.node_count)), t, 0)


class ParamWarning(NamedTuple):
    kind: str  # "stability", "solvability" or "info"
    message: str

    def __str__(self) -> str:
        return self.message

    @property
    def is_info(self) -> bool:
        return self.kind == "info"


def validate_params(p: SchemeParams) -> list[ParamWarning]:
    """Non-fatal configuration warnings plus an informational ``tau/h`` report.

    Invalid values already raise when :class:`SchemeParams` is constructed.
    """
    warns = []
    pot = p.potential
    if not pot.is_truncated:
        warns.append(ParamWarning(
            "stability", "stability not certified: untruncated potential has no Lipschitz bound"))
    else:
        L = pot.lipschitz_bound()
        if p.S <= 0.5 * L:
            warns.append(ParamWarning(
                "stability", f"stability not certified: S = {p.S:g} <= L/2 = {0.5 * L:g}"))
        if p.K1 is not None and p.K1 + 2 * p.S <= L + 2 * p.eps ** 2:
            warns.append(ParamWarning(
                "solvability",
                f"solvability condition K1 + 2S > L + 2 eps^2 fails "
                f"({p.K1 + 2 * p.S:g} <= {L + 2 * p.eps ** 2:g})",
            ))
    warns.append(ParamWarning("info", f"tau/h = {p.tau / p.mesh.h:.4g}"))
    return warns


def _check_mesh(state: State, p: SchemeParams) -> None:
    if state.mesh is not p.mesh:
        raise ArgumentError("state and parameters refer to different meshes")


def build_step_system(state: State, p: SchemeParams, ops: Optional[Operators] = None) -> BlockSystem:
    _check_mesh(state, p)
    ops = ops or operators(p.mesh)
    M, K = ops.mass, ops.stiffness
    phi, c = state.phi.values, state.c.values
    Kc = assemble_weighted_stiffness(p.mesh, c, 1)
    Kcc = assemble_weighted_stiffness(p.mesh, c, 2)
    inv_tau = 1.0 / p.tau
    inv_eps2 = 1.0 / p.eps ** 2

    diff_c = Kcc + p.g * K if p.g != 0.0 else Kcc
    blocks = [
        [inv_tau * M, -Kc, K],
        [None, inv_tau * M + diff_c, -Kc],
        [-(K + (p.S * inv_eps2) * M), M, M],
    ]
    load = assemble_load(p.mesh, p.potential.f, phi)
    rhs = np.concatenate([
        inv_tau * (M @ phi) - Kc @ phi,
        inv_tau * (M @ c) + diff_c @ phi,
        inv_eps2 * load - (p.S * inv_eps2) * (M @ phi),
    ])
    return BlockSystem(blocks, rhs, node_order=p.mesh.nested_dissection_order)


def advance(state: State, p: SchemeParams, ops: Optional[Operators] = None) -> State:
    """One time step; raises :class:`StepError` on solver failure or mass drift."""
    ops = ops or operators(p.mesh)
    system = build_step_system(state, p, ops)
    n = state.step_index
    try:
        x, res = solve(system, full_output=True)
    except SolverError as exc:
        raise StepError(f"step {n}: {exc}", n, exc.residual) from exc
    phi, c, mu = system.split(x)
    mesh = p.mesh
    w = ops.ones_mass
    for name, new, old in (("phi", phi, state.phi.values), ("c", c, state.c.values)):
        m_old, m_new = w @ old, w @ new
        if abs(m_new - m_old) > MASS_RTOL * (1.0 + abs(m_old)):
            raise StepError(f"step {n}: mass of {name} drifted by {m_new - m_old:.3e}", n, res)
    try:
        return State(
            NodalFunction(mesh, phi), NodalFunction(mesh, c), NodalFunction(mesh, mu),
            state.t + p.tau, n + 1,
        )
    except ValueError as exc:
        raise StepError(f"step {n}: {exc}", n, res) from exc


def step_count(T: float, tau: float) -> int:
    """``T / tau`` as an integer, refusing ratios that are not integral."""
    ratio = T / tau
    n = round(ratio)
    if abs(ratio - n) > 1e-9 * max(1.0, ratio):
        raise ArgumentError(f"T = {T:g} is not an integer multiple of tau = {tau:g}")
    return int(n)


def run(
    initial: State,
    p: SchemeParams,
    observer: Optional[Callable[[State, State], None]] = None,
    n_steps: Optional[int] = None,
) -> State:
    """Advance ``n_steps`` times (default ``T / tau``).

    ``observer(previous, current)`` is called after every step.
    """
    _check_mesh(initial, p)
    N = step_count(p.T, p.tau) if n_steps is None else int(n_steps)
    if N < 0:
        raise ArgumentError("number of steps must be non-negative")
    ops = operators(p.mesh)
    state = initial
    for _ in range(N):
        new = advance(state, p, ops)
        if observer is not None:
            observer(state, new)
        state = new
    log.debug("finished %d steps at t = %g", N, state.t)
    return state
