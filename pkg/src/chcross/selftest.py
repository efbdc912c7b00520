"""Fast invariant checks behind ``chcross selftest``."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .diagnostics import dissipation_residual, energy, inverse_laplacian, mass
from .fem import assemble_mass, assemble_stiffness, lp_norm, operators
from .initial_data import TWO_PI_SQUARE, exp1_c, exp1_phi
from .mesh import NodalFunction, build_rect_mesh, interpolate_nodal
from .potential import Potential
from .stepper import SchemeParams, advance, initial_state, run


def _certified_run(n: int = 16, steps: int = 5):
    mesh = build_rect_mesh(*TWO_PI_SQUARE, n, n)
    p = SchemeParams(mesh, 0.1, 0.3, 3.0, Potential.truncated(1.5), T=0.1 * steps)
    s0 = initial_state(interpolate_nodal(mesh, exp1_phi), interpolate_nodal(mesh, exp1_c))
    pairs = []
    run(s0, p, lambda a, b: pairs.append((a, b)))
    return p, s0, pairs


def check_mass() -> tuple[bool, str]:
    _, s0, pairs = _certified_run()
    drift = max(
        max(abs(mass(b.phi) - mass(a.phi)), abs(mass(b.c) - mass(a.c))) for a, b in pairs
    ) / (1.0 + abs(mass(s0.phi)))
    return drift <= 1e-9, f"max relative drift {drift:.2e}"


def check_energy() -> tuple[bool, str]:
    p, s0, pairs = _certified_run()
    tol = 1e-8 * (1.0 + abs(energy(s0, p)))
    worst = max(dissipation_residual(a, b, p) for a, b in pairs)
    return worst <= tol, f"max residual {worst:.3e} (tol {tol:.1e})"


def check_fixed_point() -> tuple[bool, str]:
    mesh = build_rect_mesh(0.0, 1.0, 0.0, 1.0, 4, 4)
    p = SchemeParams(mesh, 0.01, 0.3, 2.0, g=0.5)
    a, b = 0.4, 0.7
    s = initial_state(NodalFunction(mesh, np.full(mesh.node_count, a)), NodalFunction(mesh, np.full(mesh.node_count, b)))
    s1 = advance(s, p)
    err = max(np.abs(s1.phi.values - a).max(), np.abs(s1.c.values - b).max(),
              np.abs(s1.mu.values - ((a ** 3 - a) / p.eps ** 2 - b)).max())
    return err <= 1e-12, f"max deviation {err:.2e}"


def check_operators() -> tuple[bool, str]:
    mesh = build_rect_mesh(0.0, 2.0, 0.0, 1.0, 5, 3)
    M, K = assemble_mass(mesh), assemble_stiffness(mesh)
    one = np.ones(mesh.node_count)
    area_err = abs(one @ (M @ one) - 2.0)
    kernel = np.abs(K @ one).max()
    sym = max(abs(M - M.T).max(), abs(K - K.T).max())
    ok = area_err <= 1e-13 and kernel <= 1e-13 and sym <= 1e-14
    return ok, f"|1'M1 - area| {area_err:.1e}, |K1| {kernel:.1e}, asym {sym:.1e}"


def check_inverse_laplacian() -> tuple[bool, str]:
    errs = []
    for n in (8, 16):
        mesh = build_rect_mesh(*TWO_PI_SQUARE, n, n)
        xi = interpolate_nodal(mesh, lambda x, y: np.cos(x))
        u = inverse_laplacian(mesh, xi)
        errs.append(lp_norm(NodalFunction(mesh, u.values - xi.values), 2))
    ratio = errs[0] / errs[1]
    return 3.0 <= ratio <= 5.0, f"error ratio {ratio:.2f}"


def check_potential() -> tuple[bool, str]:
    pot = Potential.truncated(1.5)
    M = 1.5
    glue = max(abs(pot.F(M - 1e-15) - pot.F(M + 1e-15)), abs(pot.f(M - 1e-15) - pot.f(M + 1e-15)))
    s = np.linspace(-15, 15, 100001)
    bound = np.abs(pot.df(s)).max() <= pot.lipschitz_bound() + 1e-12
    return glue <= 1e-12 and bound, f"gluing gap {glue:.1e}"


CHECKS: dict[str, Callable[[], tuple[bool, str]]] = {
    "mass conservation": check_mass,
    "energy dissipation": check_energy,
    "constant fixed point": check_fixed_point,
    "operator identities": check_operators,
    "inverse laplacian": check_inverse_laplacian,
    "truncated potential": check_potential,
}


def run_selftest(emit: Callable[[str], None] = print) -> bool:
    ok = True
    for name, check in CHECKS.items():
        passed, detail = check()
        ok &= passed
        emit(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
    operators.cache_clear()
    return ok
