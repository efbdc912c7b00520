"""Double-well potential, optionally truncated outside ``[-M, M]``.

Inside the truncation interval the potential is the quartic
``(s^2 - 1)^2 / 4``; outside it continues as the quadratic that matches value
and slope at ``+-M``, so its derivative becomes globally Lipschitz with
constant ``3 M^2 - 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError

__all__ = ["Potential", "check_coercivity"]


@dataclass(frozen=True)
class Potential:
    """``truncation=None`` selects the plain quartic double well."""

    truncation: float | None = None

    def __post_init__(self):
        M = self.truncation
        if M is not None and not (np.isfinite(M) and M >= 1.0):
            raise ArgumentError(f"truncation level must be >= 1, got {M}")

    @classmethod
    def truncated(cls, M: float) -> Potential:
        return cls(float(M))

    @classmethod
    def untruncated(cls) -> Potential:
        return cls(None)

    @property
    def is_truncated(self) -> bool:
        return self.truncation is not None

    def F(self, s):
        s = np.asarray(s, dtype=float)
        quartic = 0.25 * (s * s - 1.0) ** 2
        M = self.truncation
        if M is None:
            return quartic
        L = 3.0 * M * M - 1.0
        a = M ** 3 - M
        base = 0.25 * (M * M - 1.0) ** 2
        hi = 0.5 * L * (s - M) ** 2 + a * (s - M) + base
        lo = 0.5 * L * (s + M) ** 2 - a * (s + M) + base
        return np.where(s >= M, hi, np.where(s <= -M, lo, quartic))

    def f(self, s):
        """Derivative of :meth:`F`."""
        s = np.asarray(s, dtype=float)
        cubic = s * s * s - s  # bit-exact odd symmetry, unlike s ** 3
        M = self.truncation
        if M is None:
            return cubic
        L = 3.0 * M * M - 1.0
        a = M ** 3 - M
        return np.where(s >= M, L * (s - M) + a, np.where(s <= -M, L * (s + M) - a, cubic))

    def df(self, s):
        """Second derivative of :meth:`F`."""
        s = np.asarray(s, dtype=float)
        inner = 3.0 * s * s - 1.0
        M = self.truncation
        if M is None:
            return inner
        return np.where(np.abs(s) >= M, 3.0 * M * M - 1.0, inner)

    def lipschitz_bound(self) -> float:
        """Global bound ``L`` on ``|f'|``; only defined when truncated."""
        if self.truncation is None:
            raise ArgumentError("untruncated double well: f' is unbounded, no Lipschitz constant")
        return 3.0 * self.truncation ** 2 - 1.0


def check_coercivity(pot: Potential, K1: float, K2: float, s_max: float, n: int) -> bool:
    """Sample ``F(s) >= K1 s^2 - K2`` on ``n`` uniform points of ``[-s_max, s_max]``."""
    if not K1 > 0:
        raise ArgumentError("K1 must be positive")
    if n < 1:
        raise ArgumentError("need at least one sample")
    s = np.linspace(-s_max, s_max, n) if n > 1 else np.zeros(1)
    return bool(np.all(pot.F(s) >= K1 * s * s - K2))
