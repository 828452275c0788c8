"""Three-level random-effects meta-analysis and meta-regression of
proportions on the double-arcsine scale."""

__version__ = "0.1.0"

from .core import (FitResult, VarianceComponents, block_weight_solve, cochran_q, i_squared,
                   marginal_covariance, ml_fit, pooled_sampling_variance, reml_fit, study_shrinkage)
from .data import Dataset, FeatureMatrix, Study, Trial
from .dataset_io import SchemaConfig, SimFeature, load_dataset, load_schema, simulate_dataset, write_dataset
from .errors import ConvergenceError, DataError, MetaError, RankDeficiencyError
from .kernels import BACKEND
from .regression import (FeatureSpec, encode_features, forward_select, information_criteria,
                         permutation_importance, r_squared)
from .transforms import (ConfusionMatrix, ProportionOutcome, backtransform_ci, benchmark_accuracy,
                         class_metrics, da_inverse, da_transform, overall_accuracy)
