"""
What C2 buys
============

C2 prices the distance from each positive to the upper hyperplane.  As it
grows, the total slack sum(alpha) can only shrink and the slab tightens
around the positives.  Push C2 far past C1 and the cheapest answer is
w = 0: no slab at all, every point negative.  Keep the ratio modest.
"""

import numpy as np

from mlpsvm.solver import LabelSubproblem, SolverConfig, solve

rng = np.random.default_rng(4)
X = rng.standard_normal((30, 2))
y = np.where(X[:, 0] + 0.5 * rng.standard_normal(30) > 0, 1.0, -1.0)

for c2 in (0.0, 0.01, 0.1, 1.0, 10.0, 100.0):
    _, primal, report = solve(LabelSubproblem(y, 10.0, c2, features=X), SolverConfig(tolerance=1e-12))
    norm = np.linalg.norm(primal.w)
    # slab is -b1 <= w.x <= -b2
    width = (primal.b1 - primal.b2) / norm if norm > 1e-9 else float("nan")
    print(f"C2={c2:<6} sum(alpha)={primal.alpha.sum():8.4f}  |w|={norm:6.3f}  "
          f"width={width:6.3f}  gap {report.relative_gap:.1e}")
