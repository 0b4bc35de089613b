"""Two-dimensional vibron model: bending spectra, fits and phase-transition probes."""

from .basis import BasisState, enumerate_block, so3_labels, so3_transform
from .errors import (
    ConfigError,
    ConvergenceError,
    DataError,
    DegenerateSpectrumError,
    FlatCurveError,
    InvalidArgumentError,
    SingularNormalEquationsError,
    VibronError,
)
from .spectra import HamiltonianParams, ModelParams, build_h4b, build_model, eigensolve, split_lambda

__version__ = "0.1.0"
