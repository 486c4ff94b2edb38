"""Coincidence detection of particle pairs by finite-width detectors.

Computes detection probabilities for distinguishable particles, bosons and
fermions over pairs of detector windows, and follows how their ratios
behave as the windows shrink and merge.
"""

__version__ = "0.1.0"

from .spwf import (  # noqa: E402
    BoxEigenstate,
    LocalNode,
    LocalRegular,
    OscillatorEigenstate,
    PlaneWaveReal,
    evaluate,
    find_nodes,
    overlap,
)
from .jointdensity import JointDensity, Statistics, evaluate_joint  # noqa: E402
from .detection import (  # noqa: E402
    CoincidenceEvent,
    DetectorPair,
    coincidence_probability,
    event_ratio,
    statistics_ratio,
)
from .limits import LimitProtocol, Observable, Probe, Schedule, estimate_limit, sweep_ratio_curve  # noqa: E402

__all__ = [
    "BoxEigenstate",
    "OscillatorEigenstate",
    "PlaneWaveReal",
    "LocalRegular",
    "LocalNode",
    "evaluate",
    "overlap",
    "find_nodes",
    "Statistics",
    "JointDensity",
    "evaluate_joint",
    "DetectorPair",
    "CoincidenceEvent",
    "coincidence_probability",
    "statistics_ratio",
    "event_ratio",
    "LimitProtocol",
    "Observable",
    "Probe",
    "Schedule",
    "estimate_limit",
    "sweep_ratio_curve",
]
