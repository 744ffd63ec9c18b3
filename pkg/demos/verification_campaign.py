"""
Checking the solver against a generic QP
========================================

Random small problems go through the SMO dual and through a primal
solved by cvxopt.  Objectives, KKT residuals and training predictions
are compared per instance.
"""

from mlpsvm.bench import verify_campaign
from mlpsvm.solver import SolverConfig

loose = verify_campaign(200, seed=0, solver=SolverConfig())
tight = verify_campaign(200, seed=0)

for name, s in [("tol 1e-6", loose), ("tol 1e-12", tight)]:
    print(f"{name}: gap {s.worst_relative_gap:.1e}  KKT {s.worst_residual:.1e}  "
          f"objective {s.worst_objective_diff:.1e}  "
          f"prediction mismatches {s.prediction_mismatches}/200  ({s.seconds:.1f}s)")

# the loose mismatches are w = 0 optima where every decision value is rounding noise
