"""Estimation and inference on intersection bounds with precision-corrected estimators."""
__version__ = "0.1.0"

from .data import (ArgminSet, BoundCurve, CVMethod, CriticalValue, DataError, EstimatorKind,
                   EvaluationGrid, InfluenceWeights, NumericalError, Sample, Side, Target,
                   TransformSpec, build_grid, transform_outcome)
from .argmin import estimate_Veps, full_set
from .inference import (BoundInference, OneSidedResult, TwoSidedInterval, ci_identified_set,
                        ci_parameter, half_median_unbiased, precision_corrected_bound,
                        test_nonnegativity)
