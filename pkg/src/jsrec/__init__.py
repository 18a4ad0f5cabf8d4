"""Joint-sparse recovery from multiple measurement vectors.

Basis pursuit and row-norm minimization solvers with optimality
certificates, the boosted and ReMBo pipelines, and the combinatorial
tools (face counts, orthant counts, sign-pattern sampling) used to
predict their recovery rates.
"""

from .analysis import (MAX_ENUMERATION, FaceCount, NSPResult, SparkResult, check_nsp_uniform, face_count,
                       prob_boosted, prob_l1, prob_l11, prob_rembo, spark_bruteforce)
from .bpsolve import (DEFAULT_SETTINGS, Certificate, LPResult, RankDeficientWarning, SolveReport, SolverSettings,
                      Status, check_smv_certificate, restricted_least_squares, solve_bp, solve_lp)
from .combinatorics import (PatternStats, clustered_columns, cnd, estimate_pattern_probability, mean_pairwise_angle,
                            mutual_coherence, pattern_string, sample_sign_patterns)
from .core import (ProblemInstance, SignPattern, SupportSet, as_support, canonicalize, gaussian_matrix,
                   is_recovered, make_rng, max_abs_error, random_support, read_matrix, row_sparse_matrix,
                   sign_pattern_of, write_matrix)
from .errors import (AmbiguousSign, AmbiguousSupport, BudgetExceeded, ConfigError, DegenerateRow, JsrecError,
                     NumericFailureRate, SearchExhausted, SolverError)
from .experiments import ExperimentConfig, run_experiment, run_triangles
from .mmv import (L12Witness, MmvSolveReport, check_l12_certificate, construct_diag_counterexample,
                  construct_l12_succeeds_l11_fails, gamma_mixture, norm12, row_support, solve_l11, solve_l12)
from .plotting import emit_plot
from .recover import FaceCountOracle, PipelineReport, boosted_l1, rembo_l1, support_threshold

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
