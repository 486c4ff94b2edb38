"""Coincidence probabilities for a pair of finite-width detectors.

Two windows of half-width ``delta`` sit at ``x0 - eta`` (left) and
``x0 + eta`` (right). All integrals run in window-local coordinates
``u = x - x0``, so windows of width 1e-8 centred at ``x0 ~ 1`` keep their
full relative precision.

Event conventions:

* ``LEFT_RIGHT`` counts one particle in each window with both labelings,
  i.e. twice the integral over ``left x right``.
* ``SAME_EITHER`` is ``left x left + right x right``.

With these conventions the distinguishable ratio LEFT_RIGHT / SAME_EITHER
is exactly one for the node-case local models, and the boson ratio equals
``delta**2 / (6 eta**2 + delta**2)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .jointdensity import JointDensity, Statistics, evaluate_joint, rounding_scale
from .quadrature import DEFAULT_REL_TOL, Interval, Rectangle, integrate_2d

__all__ = [
    "DetectorPair",
    "CoincidenceEvent",
    "CoincidenceProbability",
    "IllDefinedRatioError",
    "RatioResult",
    "coincidence_probability",
    "window_integral",
    "statistics_ratio",
    "event_ratio",
]


class IllDefinedRatioError(ZeroDivisionError):
    """The denominator probability is consistent with zero at this geometry."""


@dataclass(frozen=True)
class DetectorPair:
    x0: float
    eta: float
    delta: float

    def __post_init__(self):
        if not (math.isfinite(self.x0) and math.isfinite(self.eta) and math.isfinite(self.delta)):
            raise ValueError("detector geometry must be finite")
        if not self.delta > 0:
            raise ValueError(f"detector half-width must be positive, got {self.delta!r}")
        if self.eta < 0:
            raise ValueError(f"detector half-separation must be >= 0, got {self.eta!r}")

    @classmethod
    def from_ratio(cls, x0: float, a: float, delta: float) -> "DetectorPair":
        return cls(x0, a * delta, delta)

    @property
    def a(self) -> float:
        return self.eta / self.delta

    @property
    def left(self) -> Interval:
        """Left window in local coordinates."""
        return Interval(-self.eta - self.delta, -self.eta + self.delta)

    @property
    def right(self) -> Interval:
        return Interval(self.eta - self.delta, self.eta + self.delta)

    @property
    def overlapping(self) -> bool:
        return self.eta < self.delta


class CoincidenceEvent(str, enum.Enum):
    LEFT_RIGHT = "left_right"
    LEFT_LEFT = "left_left"
    RIGHT_RIGHT = "right_right"
    SAME_EITHER = "same_either"


@dataclass(frozen=True)
class CoincidenceProbability:
    value: float
    statistics: Statistics
    event: CoincidenceEvent
    geometry: DetectorPair
    quadrature_error: float
    converged: bool = True

    def row(self) -> dict:
        g = self.geometry
        return {
            "x0": g.x0,
            "eta": g.eta,
            "delta": g.delta,
            "a": g.a,
            "statistics": self.statistics.value,
            "event": self.event.value,
            "value": self.value,
            "error": self.quadrature_error,
            "converged": self.converged,
        }


@dataclass(frozen=True)
class RatioResult:
    """A probability ratio together with the two probabilities it came from."""

    value: float
    error: float
    numerator: CoincidenceProbability
    denominator: CoincidenceProbability

    @property
    def converged(self) -> bool:
        return self.numerator.converged and self.denominator.converged

    def __float__(self) -> float:
        return self.value


def window_integral(jd: JointDensity, g: DetectorPair, w1: str, w2: str, rel_tol: float = DEFAULT_REL_TOL):
    """Integral of the joint density over one ordered window pair (``"left"``/``"right"``)."""
    rect = Rectangle(getattr(g, w1), getattr(g, w2))
    return integrate_2d(
        lambda u1, u2: evaluate_joint(jd, u1, u2, g.x0),
        rect,
        rel_tol,
        noise=lambda u1, u2: rounding_scale(jd, u1, u2, g.x0),
    )


def coincidence_probability(
    jd: JointDensity,
    g: DetectorPair,
    ev: CoincidenceEvent,
    rel_tol: float = DEFAULT_REL_TOL,
) -> CoincidenceProbability:
    """Unnormalized probability of event ``ev`` for the density ``jd``."""
    ev = CoincidenceEvent(ev)
    if ev is CoincidenceEvent.LEFT_RIGHT:
        r = window_integral(jd, g, "left", "right", rel_tol)
        value, err, ok = 2.0 * r.value, 2.0 * r.abs_error_estimate, r.converged
    elif ev is CoincidenceEvent.LEFT_LEFT:
        r = window_integral(jd, g, "left", "left", rel_tol)
        value, err, ok = r.value, r.abs_error_estimate, r.converged
    elif ev is CoincidenceEvent.RIGHT_RIGHT:
        r = window_integral(jd, g, "right", "right", rel_tol)
        value, err, ok = r.value, r.abs_error_estimate, r.converged
    else:
        ll = window_integral(jd, g, "left", "left", rel_tol)
        rr = window_integral(jd, g, "right", "right", rel_tol)
        value = ll.value + rr.value
        err = ll.abs_error_estimate + rr.abs_error_estimate
        ok = ll.converged and rr.converged
    return CoincidenceProbability(max(value, 0.0), jd.statistics, ev, g, err, ok)


def _ratio(num: CoincidenceProbability, den: CoincidenceProbability) -> RatioResult:
    if not den.value > 10.0 * den.quadrature_error:
        raise IllDefinedRatioError(
            f"denominator consistent with zero: {den.value!r} vs quadrature error {den.quadrature_error!r}"
        )
    value = num.value / den.value
    rel = den.quadrature_error / den.value
    if num.value > 0:
        rel += num.quadrature_error / num.value
        err = abs(value) * rel
    else:
        err = num.quadrature_error / den.value
    return RatioResult(value, err, num, den)


def statistics_ratio(
    jd_num: JointDensity,
    jd_den: JointDensity,
    g: DetectorPair,
    ev: CoincidenceEvent = CoincidenceEvent.LEFT_RIGHT,
    rel_tol: float = DEFAULT_REL_TOL,
) -> RatioResult:
    """``P_num(ev) / P_den(ev)`` at the same geometry, e.g. the boson bunching ratio.

    Raises
    ------
    ValueError
        If the two densities are built from different wavefunctions.
    IllDefinedRatioError
        If the denominator does not exceed ten times its quadrature error.
    """
    if (jd_num.psi1, jd_num.psi2) != (jd_den.psi1, jd_den.psi2):
        raise ValueError("statistics_ratio needs both densities built from the same wavefunctions")
    num = coincidence_probability(jd_num, g, ev, rel_tol)
    den = coincidence_probability(jd_den, g, ev, rel_tol)
    return _ratio(num, den)


def event_ratio(jd: JointDensity, g: DetectorPair, rel_tol: float = DEFAULT_REL_TOL) -> RatioResult:
    """``P(LEFT_RIGHT) / P(SAME_EITHER)`` for the statistics of ``jd``."""
    num = coincidence_probability(jd, g, CoincidenceEvent.LEFT_RIGHT, rel_tol)
    den = coincidence_probability(jd, g, CoincidenceEvent.SAME_EITHER, rel_tol)
    return _ratio(num, den)
