"""Numeric small-time local controllability check of the three interpolators.

For pairs of states at distance s the check measures how far the steered
segment strays (its growth exponent should be at least one) and how much
acceleration it needs beyond what the arc itself requires. SOC1 and the
quadratic family pass; fixed-duration Bezier keeps an acceleration residual
that does not shrink with s.

    python3 demos/soc_check.py
"""

from __future__ import annotations

from kinoplan.interp import make_interpolator
from kinoplan.soc import verify_soc

# %% Run the check for each interpolator
for name in ("soc1", "quad", "bezier"):
    report = verify_soc(make_interpolator(name))
    print(report.to_text())

# %% Residual by scale for Bezier: flat instead of decaying
bez = verify_soc(make_interpolator("bezier"))
for s, r in zip(bez.scales, bez.residual_by_scale):
    print(f"s = {s:8.1e}  residual {r:10.4f}")
