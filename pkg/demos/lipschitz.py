"""Sampled Lipschitz and norm ceilings for the double pendulum.

The gravity torque's Lipschitz ratio stays under 2 m g l and the mass matrix
norm under 3 m l^2 over the whole configuration torus.

    python3 demos/lipschitz.py
"""

from __future__ import annotations

import numpy as np

from kinoplan.dynamics import DoublePendulumModel, estimate_lipschitz, sample_matrix_norms

box = ([-np.pi] * 2, [np.pi] * 2)

# %% Global pairs and close pairs, for two link sizes
for m, l in ((1.0, 1.0), (2.0, 0.5)):
    model = DoublePendulumModel(length=l, mass=m)
    ceiling = 2 * m * model.g * l
    for sep in (None, 0.05):
        est = estimate_lipschitz(model.gravity, *box, 100_000, seed=9, max_separation=sep)
        kind = "global" if sep is None else f"within {sep}"
        print(f"m={m} l={l} {kind:<12} K = {est.K:7.3f}  ceiling {ceiling:7.3f}")
    norms = sample_matrix_norms(model.mass_matrix, *box, 100_000, seed=9)
    print(f"m={m} l={l} max |M(q)|_2 = {norms.max():.3f}  ceiling {3 * m * l ** 2:.3f}")

# %% The estimate only grows with more samples
model = DoublePendulumModel()
for n in (100, 1_000, 10_000, 100_000):
    print(f"n = {n:>7}: K = {estimate_lipschitz(model.gravity, *box, n, seed=1).K:.4f}")
