"""Multi-domain norm-referenced encoding for few-shot, cross-domain
classification of expression displacements over 2-D landmarks."""

from .core import (
    TuningBank,
    classify,
    difference,
    expression_activity,
    strength_readout,
    unit_activity,
)
from .data import NEUTRAL, Dataset, GroundTruth
from .estimator import CentroidBaseline, LinearBaseline, MDNREClassifier
from .exceptions import (
    CalibrationError,
    ConfigurationError,
    DimensionError,
    MDNREError,
    NumericalError,
    ParseError,
    PoseError,
)
from .frames import Pose, ReferenceFrame, align_reference, estimate_pose, infer_domain
from .training import FittedModel, fit_references, fit_tuning, optimize_templates, train

__version__ = "0.1.0"
