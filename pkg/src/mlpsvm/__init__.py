"""Multi-label classification with a pair of parallel hyperplanes per label."""

from .dataset import (ArffError, Dataset, FoldPlan, ScalerParams, apply_scaler, k_fold_split,
                      load_arff, standardize, write_arff)
from .kernel import GramMatrix, KernelSpec, cross_kernel, eval_kernel, within_label_gram
from .metrics import MetricsReport, aggregate, hamming_loss, one_error, precision, recall
from .model import (Hyperparams, TrainedModel, TrainingError, decision_values, fit,
                    fit_br_baseline, load_model, predict, ranking_scores, save_model)
from .solver import (ConvergenceError, DualSolution, KKTReport, LabelSubproblem,
                     PrimalSolution, SolverConfig, brute_force_primal, kkt_report,
                     recover_primal, solve, solve_dual)

__version__ = "0.1.0"
