"""q-Hahn orthogonal polynomials, Pearson weights and reduced multiboson models."""
from .errors import (ConfigError, DegenerateDataError, FixedPointError, MathDomainError,
                     ModelError, NoPositiveMeasure, NonConvergenceError, PoleError,
                     QHahnError, UnsupportedError)
from .pearson import PearsonData, WeightSpec, classify, from_roots
from .qhahn import StructuralSeq, structural_functions

__version__ = "0.1.0"
