import numpy as np
import pytest
import sympy as sym
from hypothesis import given, settings
from hypothesis import strategies as st

from chcross.errors import ArgumentError
from chcross.potential import Potential, check_coercivity

POTENTIALS = [Potential.untruncated(), Potential.truncated(1.0), Potential.truncated(1.5), Potential.truncated(2.0)]


def _symbolic_truncated(M):
    """Piecewise F built from its defining C1 gluing conditions, solved symbolically."""
    s = sym.symbols("s", real=True)
    quartic = sym.Rational(1, 4) * (s ** 2 - 1) ** 2
    a, b, c = sym.symbols("a b c")
    ext = a * (s - M) ** 2 + b * (s - M) + c
    # match value, slope and curvature at s = M
    sol = sym.solve(
        [ext.subs(s, M) - quartic.subs(s, M),
         sym.diff(ext, s).subs(s, M) - sym.diff(quartic, s).subs(s, M),
         sym.diff(ext, s, 2).subs(s, M) - sym.diff(quartic, s, 2).subs(s, M)],
        [a, b, c],
    )
    hi = ext.subs(sol)
    lo = hi.subs(s, -s)
    F = sym.Piecewise((lo, s <= -M), (quartic, s < M), (hi, True))
    return sym.lambdify(s, F, "numpy"), sym.lambdify(s, sym.diff(F, s), "numpy")


def test_double_well_examples():
    for pot in POTENTIALS:
        np.testing.assert_allclose(pot.F([-1.0, 1.0]), 0.0, atol=1e-15)
        assert pot.F(0.0) == pytest.approx(0.25)
        np.testing.assert_allclose(pot.f([-1.0, 0.0, 1.0]), 0.0, atol=1e-15)


def test_truncated_examples():
    pot = Potential.truncated(2)
    assert pot.F(2.0) == pytest.approx(2.25, abs=1e-14)
    assert pot.F(3.0) == pytest.approx(13.75, abs=1e-13)
    assert pot.f(np.nextafter(2.0, 0)) == pytest.approx(6.0, abs=1e-12)
    assert pot.f(2.0) == pytest.approx(6.0, abs=1e-12)
    assert pot.f(10.0) == pytest.approx(94.0, abs=1e-12)
    assert pot.lipschitz_bound() == 11.0
    assert Potential.truncated(1).lipschitz_bound() == 2.0


@pytest.mark.parametrize("M", [1.0, 1.5, 2.0, 3.25])
def test_matches_symbolic_construction(M):
    F_ref, f_ref = _symbolic_truncated(sym.nsimplify(M))
    s = np.linspace(-4 * M, 4 * M, 2001)
    pot = Potential.truncated(M)
    np.testing.assert_allclose(pot.F(s), F_ref(s), rtol=1e-13, atol=1e-13)
    np.testing.assert_allclose(pot.f(s), f_ref(s), rtol=1e-13, atol=1e-13)


@pytest.mark.parametrize("M", [1.0, 1.5, 2.0])
def test_c1_gluing(M):
    pot = Potential.truncated(M)
    for edge in (M, -M):
        below, above = np.nextafter(edge, -np.inf), np.nextafter(edge, np.inf)
        assert abs(pot.F(below) - pot.F(above)) <= 1e-12
        assert abs(pot.f(below) - pot.f(above)) <= 1e-12


@pytest.mark.parametrize("pot", POTENTIALS)
def test_finite_difference_consistency(pot, rng):
    s = rng.uniform(-3, 3, 10_000)
    h = 1e-5
    fd = (pot.F(s + h) - pot.F(s - h)) / (2 * h)
    np.testing.assert_allclose(fd, pot.f(s), atol=1e-6, rtol=0)
    fd2 = (pot.f(s + h) - pot.f(s - h)) / (2 * h)
    away = np.abs(np.abs(s) - (pot.truncation or np.inf)) > 2 * h
    np.testing.assert_allclose(fd2[away], pot.df(s)[away], atol=1e-6, rtol=1e-8)


@pytest.mark.parametrize("M", [1.0, 1.5, 2.0])
def test_sampled_lipschitz_bound(M):
    pot = Potential.truncated(M)
    L = pot.lipschitz_bound()
    assert L == 3 * M * M - 1
    s = np.linspace(-10 * M, 10 * M, 1_000_000)
    assert np.abs(pot.df(s)).max() <= L + 1e-12
    slopes = np.abs(np.diff(pot.f(s)) / np.diff(s))
    assert slopes.max() <= L + 1e-6


def test_untruncated_has_no_lipschitz_bound():
    with pytest.raises(ArgumentError):
        Potential.untruncated().lipschitz_bound()
    with pytest.raises(ArgumentError):
        Potential.truncated(0.5)


@settings(max_examples=200, deadline=None)
@given(s=st.floats(-1e3, 1e3), idx=st.integers(0, len(POTENTIALS) - 1))
def test_symmetry(s, idx):
    pot = POTENTIALS[idx]
    assert pot.F(-s) == pot.F(s)
    assert pot.f(-s) == -pot.f(s)


def test_coercivity_examples():
    # minimum of F(s) - s^2/8 + 1, checked on a dense grid
    s = np.linspace(-10, 10, 200_001)
    assert (0.25 * (s ** 2 - 1) ** 2 - s ** 2 / 8 + 1).min() > 0
    assert check_coercivity(Potential.untruncated(), 1 / 8, 1.0, 10.0, 10_001)
    for pot in POTENTIALS:
        assert check_coercivity(pot, 3.0, float(pot.F(0.0)) + 1.0, 5.0, 1)
    assert not check_coercivity(Potential.truncated(2), 10.0, 0.0, 1.0, 3)
    with pytest.raises(ArgumentError):
        check_coercivity(Potential.untruncated(), 0.0, 1.0, 1.0, 5)
