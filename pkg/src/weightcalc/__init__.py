"""Numerical toolkit for weight sequences, weight functions, weight matrices
and the stability of ultraholomorphic classes on sectors."""
from . import analytic, indices, matrices, reports, sequences, stability, weights
from .errors import WeightCalcError
from .reports import Thresholds, Verdict
from .sequences import WeightSequence, gevrey, gevrey_bar, make_sequence, qgevrey
from .weights import WeightFunction, closed_form, make_weight_function
from .matrices import WeightMatrix, make_matrix

__version__ = "0.1.0"
