"""Heralded temporal shaping of single photons through a four-mode metasurface splitter."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DimMismatch,
    DomainError,
    DuplicateInputMode,
    InconsistentInputs,
    MetashapeError,
    PatternMismatch,
    QuadratureNotConverged,
    SizeLimit,
    ZeroNorm,
)
from .shapes import (
    ShapeKind,
    ShapeSuperposition,
    WavepacketShape,
    exp_decay,
    exp_rise,
    gaussian,
    gram,
    overlap,
)
from .network import ModeUnitary, balanced_splitter, compose, embed, metasurface_unitary
from .interference import OutputComponent, PhotonInput, expand_output
from .postselect import DetectionEvent, DetectionPattern, ShapingResult, condition, split_and_condition
from .scheme import ShapingScheme
from .metrics import fidelity, run_scheme, sweep_resolution, sweep_splitting
from .optimize import ParameterSpec, optimize_scheme, reproduce_table1
from .config import load_config, load_preset

__all__ = [name for name in dir() if not name.startswith("_")]
