"""Named initial conditions."""

from __future__ import annotations

import numpy as np


def exp1_phi(x, y):
    return 0.05 * np.cos(x) * np.cos(y) + 0.3


def exp1_c(x, y):
    return 0.05 * np.cos(2 * x) * np.cos(2 * y) + 0.5


PRESETS = {
    "paper-exp1": (exp1_phi, exp1_c),
}

TWO_PI_SQUARE = (0.0, 2 * np.pi, 0.0, 2 * np.pi)


def random_perturbation(mean: float, amplitude: float, seed: int):
    """Nodal noise around ``mean``; deterministic for a given seed and mesh size."""

    def field(x, y):
        rng = np.random.default_rng(seed)
        return mean + amplitude * rng.uniform(-1.0, 1.0, size=np.shape(x))

    return field
