"""Dynamics of piecewise-smooth interval maps with critical points and discontinuities."""
from importlib.metadata import PackageNotFoundError, version as _version

try:
    __version__ = _version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .errors import (
    BadParam,
    CriticalPoint,
    DegenerateScale,
    DegenerateSide,
    ExceptionalPoint,
    HypothesisFailed,
    MapError,
    NotAGapMap,
    OutOfDomain,
    PartialOrbit,
    PreconditionFailed,
    RangeViolation,
    SearchExhausted,
    SpecFormatError,
    SubdivisionOverflow,
    UnboundedDerivative,
)
from .maps import Affine, BranchSpec, PiecewiseMap, Polynomial, PowerLaw, Scaled, load_map, validate
from .lateral import (
    LateralOrbit,
    LateralState,
    NotFound,
    OmegaCover,
    PeriodicLikeRecord,
    detect_periodic_like,
    lateral_orbit,
    lateral_step,
    omega_estimate,
    rotation_number,
)
from .returns import accelerated_induced_map, check_nice, dichotomy_probe, first_return_map
from .surgery import flatten_unimodal, lorenz_rescale, pit_surgery
from .classify import ClassifyParams, classification_report, mane_probe
from .zoo import construct_ewi, extract_gap_map, make_logistic, make_lorenz, make_rotation
