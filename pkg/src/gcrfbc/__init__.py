"""Gaussian conditional random fields for structured binary classification.

Two variants share one latent GCRF layer:

* ``b``  -- latent variables marginalized; learned through a local variational
  bound, predicted by 1-D quadrature of the sigmoid against each marginal.
* ``nb`` -- latent variables replaced by their mean (MAP plug-in).
"""

from .core import (
    Dataset,
    GaussianCanonical,
    ModelParams,
    StructuredInstance,
    build_b,
    build_precision,
    canonical,
    log_density,
)
from .errors import (
    ConditioningError,
    DataError,
    DefinitenessError,
    GCRFError,
    ParseError,
    StructuralError,
    UndefinedMetricError,
)
from .inference import PredictionResult, QuadConfig, predict, predict_b, predict_nb, sigmoid
from .learning import (
    BoundParts,
    VariationalState,
    bound_parts,
    grad_b,
    grad_nb,
    lambda_xi,
    lower_bound,
    nb_log_likelihood,
    optimal_xi,
)
from .metrics import EvalReport, auc, evaluate
from .optimize import FitReport, OptimizerConfig, check_gradients, fit, fit_b, fit_nb
from .synthetic import GenConfig, generate, split
from .io import load_dataset, load_model, save_dataset, save_model
from .bench import BenchReport, benchmark

__version__ = "0.1.0"
