"""Channel selection for PLS regression by continuous embedding.

The discrete problem of picking a channel subset is embedded into the
continuous space of per-channel predictor weights: cross-validation error
(or an information criterion with a smooth model-size surrogate) is
minimized over the weights with BFGS, driven by an analytic Jacobian of the
weighted PLS fit; the optimized weights are then unembedded into ranked
channel subsets and the best one is selected.
"""

from .bfgs import (BfgsOptions, OptimizerTrace, backtracking_line_search,
                   bfgs_minimize)
from .cv import (CvPlan, CvValue, load_plan, make_interleaved_plan,
                 make_mc_plan, make_msep_plan, plan_from_text, plan_to_text,
                 rmsecv_with_gradient, save_plan, weighted_rmsecv)
from .data_io import (ArtifConfig, ArtifTruth, autoscale_weights,
                      generate_artif, load_dataset_csv, read_report,
                      write_dataset_csv, write_report)
from .dataset import Dataset
from .estimators import SrcekSelector, WplsRegression
from .exceptions import (CsvFormatError, DataValidationError, LineSearchError,
                         NumericalError, PerfectFitError)
from .jacobian import (JacobianBundle, ResidualBundle, residual_with_jacobian,
                       wpls_with_jacobian)
from .objective import (CriterionValue, ObjectiveConfig, discrete_abic,
                        embedded_abic_objective, make_objective,
                        mrpq_value_and_gradient)
from .selection import (CandidateRow, ImportanceOrdering, SelectConfig,
                        SelectionReport, TrivialModel, Winner,
                        importance_orderings, score_model_sequence,
                        srcek_select, trivial_model_row)
from .wpls import WplsFactorization, WplsModel, wpls_implicit, wpls_vanilla

__version__ = "0.1.0"

__all__ = [
    "BfgsOptions", "OptimizerTrace", "backtracking_line_search", "bfgs_minimize",
    "CvPlan", "CvValue", "load_plan", "make_interleaved_plan", "make_mc_plan",
    "make_msep_plan", "plan_from_text", "plan_to_text", "rmsecv_with_gradient",
    "save_plan", "weighted_rmsecv",
    "ArtifConfig", "ArtifTruth", "autoscale_weights", "generate_artif",
    "load_dataset_csv", "read_report", "write_dataset_csv", "write_report",
    "Dataset",
    "SrcekSelector", "WplsRegression",
    "CsvFormatError", "DataValidationError", "LineSearchError",
    "NumericalError", "PerfectFitError",
    "JacobianBundle", "ResidualBundle", "residual_with_jacobian",
    "wpls_with_jacobian",
    "CriterionValue", "ObjectiveConfig", "discrete_abic",
    "embedded_abic_objective", "make_objective", "mrpq_value_and_gradient",
    "CandidateRow", "ImportanceOrdering", "SelectConfig", "SelectionReport",
    "TrivialModel", "Winner", "importance_orderings", "score_model_sequence",
    "srcek_select", "trivial_model_row",
    "WplsFactorization", "WplsModel", "wpls_implicit", "wpls_vanilla",
    "__version__",
]
