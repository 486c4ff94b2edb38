"""Shrinking-detector limits of coincidence ratios.

Three ways of sending the detector geometry to a point are supported:

* ``eta_first``: merge the detectors (eta -> 0 at fixed delta), then shrink them;
* ``delta_first``: make them point-like (delta -> 0 at fixed eta), then bring them together;
* ``fixed_ratio``: shrink along ``eta = a * delta``.

Limits are never taken by evaluating at absurdly small sizes. Each one is a
geometric schedule of modest sizes followed by Richardson extrapolation;
the iterated protocols extrapolate the inner parameter at every outer
sample and then extrapolate the resulting outer sequence.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .detection import DetectorPair, IllDefinedRatioError, RatioResult, event_ratio, statistics_ratio
from .jointdensity import JointDensity, Statistics
from .quadrature import DEFAULT_REL_TOL
from .spwf import Spwf, pair_length_scale

__all__ = [
    "ProtocolKind",
    "LimitProtocol",
    "Schedule",
    "Observable",
    "Probe",
    "LimitEstimate",
    "SweepPoint",
    "FitResult",
    "CLOSED_FORMS",
    "richardson",
    "estimate_limit",
    "sweep_ratio_curve",
    "fit_asymptotic",
]

CONVERGENCE_TOL = 1e-6
MIN_SAMPLES = 6
# detector sizes above lambda/100 are outside the narrow-detector regime
MAX_SIZE_OVER_LAMBDA = 1e-2


class ProtocolKind(str, enum.Enum):
    ETA_FIRST = "eta_first"
    DELTA_FIRST = "delta_first"
    FIXED_RATIO = "fixed_ratio"


@dataclass(frozen=True)
class LimitProtocol:
    kind: ProtocolKind
    a: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ProtocolKind(self.kind))
        if self.kind is ProtocolKind.FIXED_RATIO:
            if self.a is None or not math.isfinite(self.a) or self.a < 0:
                raise ValueError(f"fixed-ratio protocol needs a finite a >= 0, got {self.a!r}")
        elif self.a is not None:
            raise ValueError(f"{self.kind.value} protocol takes no ratio parameter")

    @classmethod
    def eta_first(cls) -> "LimitProtocol":
        return cls(ProtocolKind.ETA_FIRST)

    @classmethod
    def delta_first(cls) -> "LimitProtocol":
        return cls(ProtocolKind.DELTA_FIRST)

    @classmethod
    def fixed_ratio(cls, a: float) -> "LimitProtocol":
        return cls(ProtocolKind.FIXED_RATIO, a)


@dataclass(frozen=True)
class Schedule:
    """Geometric sequence ``start * factor**k`` for ``k < count``."""

    start: float
    factor: float = 0.5
    count: int = 10

    def __post_init__(self):
        if not (math.isfinite(self.start) and self.start > 0):
            raise ValueError(f"schedule start must be positive, got {self.start!r}")
        if not 0 < self.factor < 1:
            raise ValueError(f"schedule factor must lie in (0, 1), got {self.factor!r}")
        if int(self.count) != self.count or self.count < 2:
            raise ValueError(f"schedule count must be an integer >= 2, got {self.count!r}")

    @property
    def values(self) -> list[float]:
        return [self.start * self.factor**k for k in range(int(self.count))]

    def scaled(self, start: float) -> "Schedule":
        return Schedule(start, self.factor, self.count)


@dataclass(frozen=True)
class Observable:
    """Which ratio to follow: ``statistics`` (``P_s / P_dis`` on left-right) or ``event`` (left-right / same)."""

    kind: str
    statistics: Statistics

    def __post_init__(self):
        if self.kind not in ("statistics", "event"):
            raise ValueError(f"observable kind must be 'statistics' or 'event', got {self.kind!r}")
        object.__setattr__(self, "statistics", Statistics(self.statistics))

    @property
    def label(self) -> str:
        s = self.statistics.value
        return f"ratio_{s}_dis" if self.kind == "statistics" else f"event_ratio_{s}"


@dataclass(frozen=True)
class Probe:
    """A wavefunction pair, a measuring point and the ratio observed there."""

    psi1: Spwf
    psi2: Spwf
    x0: float
    observable: Observable
    rel_tol: float = DEFAULT_REL_TOL

    @property
    def length_scale(self) -> float:
        return pair_length_scale(self.psi1, self.psi2)

    def ratio(self, g: DetectorPair) -> RatioResult:
        s = self.observable.statistics
        jd = JointDensity(self.psi1, self.psi2, s)
        if self.observable.kind == "event":
            return event_ratio(jd, g, self.rel_tol)
        return statistics_ratio(jd, jd.with_statistics(Statistics.DISTINGUISHABLE), g, rel_tol=self.rel_tol)


@dataclass
class LimitEstimate:
    value: float
    sequence: list[tuple[float, float]]
    extrapolation_error: float
    converged: bool
    observed_order: float | None = None
    inner: list["LimitEstimate"] = field(default_factory=list)
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "extrapolation_error": self.extrapolation_error,
            "converged": self.converged,
            "observed_order": self.observed_order,
            "sequence": [list(p) for p in self.sequence],
            "message": self.message,
        }


def richardson(values: Sequence[float], r: float, p: int = 1) -> list[float]:
    """Diagonal of the Richardson tableau for samples at steps ``h, h/r, h/r**2, ...``.

    The error is assumed to expand in powers ``h**p, h**(2p), ...``. Entry
    ``k`` of the result combines the first ``k + 1`` samples.
    """
    row = [float(v) for v in values]
    if not row:
        raise ValueError("richardson needs at least one value")
    diag = [row[0]]
    prev = [row[0]]
    for i in range(1, len(row)):
        cur = [row[i]]
        for j in range(1, i + 1):
            c = r ** (p * j) - 1.0
            cur.append(cur[j - 1] + (cur[j - 1] - prev[j - 1]) / c)
        diag.append(cur[-1])
        prev = cur
    return diag


def _observed_order(params, vals, r):
    diffs = np.abs(np.diff(np.asarray(vals, dtype=float)))
    scale = max(1.0, float(np.max(np.abs(vals)))) if len(vals) else 1.0
    usable = [i for i in range(len(diffs) - 1) if diffs[i] > 1e-12 * scale and diffs[i + 1] > 1e-12 * scale]
    if not usable:
        return None
    i = usable[-1]
    return float(math.log(diffs[i] / diffs[i + 1]) / math.log(r))


def _extrapolate(params, vals, factor, tol, message=""):
    r = 1.0 / factor
    seq = list(zip(params, vals))
    if len(vals) < 2:
        value = vals[-1] if vals else math.nan
        return LimitEstimate(value, seq, math.inf, False, None, message=message or "too few samples")
    diag = richardson(vals, r)
    err = abs(diag[-1] - diag[-2])
    return LimitEstimate(
        float(diag[-1]), seq, float(err), bool(err < tol) and not message, _observed_order(params, vals, r),
        message=message,
    )


def _run_sequence(params, evaluate: Callable[[float], float], factor, tol) -> LimitEstimate:
    done_p, done_v = [], []
    message = ""
    for p in params:
        try:
            v = evaluate(p)
        except IllDefinedRatioError as exc:
            message = f"stopped at parameter {p!r}: {exc}"
            break
        if not math.isfinite(v):
            message = f"non-finite ratio at parameter {p!r}"
            break
        done_p.append(p)
        done_v.append(v)
    return _extrapolate(done_p, done_v, factor, tol, message)


def _check_schedule(probe: Probe, schedule: Schedule):
    if schedule.count < MIN_SAMPLES:
        raise ValueError(f"limit schedules need at least {MIN_SAMPLES} samples, got {schedule.count}")
    lam = probe.length_scale
    if schedule.start > MAX_SIZE_OVER_LAMBDA * lam:
        raise ValueError(
            f"schedule start {schedule.start!r} exceeds lambda/100 = {MAX_SIZE_OVER_LAMBDA * lam!r}"
        )


def estimate_limit(
    probe: Probe,
    protocol: LimitProtocol,
    schedule: Schedule,
    inner_fraction: float = 0.25,
    inner_count: int | None = None,
    tol: float = CONVERGENCE_TOL,
) -> LimitEstimate:
    """Estimate the limit of ``probe``'s ratio under ``protocol``.

    ``schedule`` drives the outer parameter (``delta`` for ``eta_first`` and
    ``fixed_ratio``, ``eta`` for ``delta_first``). For the iterated
    protocols the inner parameter starts at ``inner_fraction`` times the
    current outer value and follows the same geometric factor; keeping it
    below the outer value keeps the inner sequence inside the radius where
    its expansion converges.

    Returns a :class:`LimitEstimate`; when a ratio becomes ill-defined the
    partial sequence is returned with ``converged=False``.
    """
    _check_schedule(probe, schedule)
    if not 0 < inner_fraction <= 1:
        raise ValueError(f"inner_fraction must lie in (0, 1], got {inner_fraction!r}")
    x0 = probe.x0
    inner_n = int(inner_count or schedule.count)
    kind = protocol.kind

    if kind is ProtocolKind.FIXED_RATIO:
        a = protocol.a
        return _run_sequence(
            schedule.values,
            lambda d: probe.ratio(DetectorPair(x0, a * d, d)).value,
            schedule.factor,
            tol,
        )

    inner_estimates: list[LimitEstimate] = []

    def outer_value(outer: float) -> float:
        inner_sched = Schedule(inner_fraction * outer, schedule.factor, inner_n)
        if kind is ProtocolKind.ETA_FIRST:
            est = _run_sequence(
                inner_sched.values, lambda e: probe.ratio(DetectorPair(x0, e, outer)).value, schedule.factor, tol
            )
        else:
            est = _run_sequence(
                inner_sched.values, lambda d: probe.ratio(DetectorPair(x0, outer, d)).value, schedule.factor, tol
            )
        inner_estimates.append(est)
        if not est.sequence:
            raise IllDefinedRatioError(est.message)
        return est.value

    result = _run_sequence(schedule.values, outer_value, schedule.factor, tol)
    result.inner = inner_estimates
    bad = [e for e in inner_estimates if not e.converged]
    if bad:
        result.converged = False
        result.message = (result.message + "; " if result.message else "") + f"{len(bad)} inner limit(s) not converged"
    return result


@dataclass(frozen=True)
class SweepPoint:
    a: float
    delta: float
    eta: float
    ratio: float
    error: float
    converged: bool


def sweep_ratio_curve(probe: Probe, a_values: Sequence[float], delta: float) -> list[SweepPoint]:
    """Ratio at fixed ``delta`` for each ``eta = a * delta``."""
    lam = probe.length_scale
    if not (math.isfinite(delta) and delta > 0):
        raise ValueError(f"delta must be positive, got {delta!r}")
    if delta > MAX_SIZE_OVER_LAMBDA * lam:
        raise ValueError(f"delta {delta!r} exceeds lambda/100 = {MAX_SIZE_OVER_LAMBDA * lam!r}")
    for a in a_values:
        if not (math.isfinite(a) and a >= 0):
            raise ValueError(f"a values must be finite and >= 0, got {a!r}")
    rows = []
    for a in a_values:
        g = DetectorPair.from_ratio(probe.x0, a, delta)
        try:
            res = probe.ratio(g)
            rows.append(SweepPoint(a, delta, g.eta, res.value, res.error, res.converged))
        except IllDefinedRatioError:
            rows.append(SweepPoint(a, delta, g.eta, math.nan, math.inf, False))
    return rows


CLOSED_FORMS: dict[str, Callable[[float], float]] = {
    "1/(1+3a^2)": lambda a: 1.0 / (1.0 + 3.0 * a * a),
    "2-1/(1+3a^2)": lambda a: 2.0 - 1.0 / (1.0 + 3.0 * a * a),
    "1/(1+6a^2)": lambda a: 1.0 / (1.0 + 6.0 * a * a),
    "1+6a^2": lambda a: 1.0 + 6.0 * a * a,
    "2": lambda a: 2.0,
    "0": lambda a: 0.0,
    "1": lambda a: 1.0,
}


@dataclass(frozen=True)
class FitResult:
    model: str
    max_abs_deviation: float
    max_rel_deviation: float
    n_points: int


def fit_asymptotic(table: Sequence[SweepPoint], model: str) -> FitResult:
    """Largest deviation of the converged sweep points from a named closed form."""
    if model not in CLOSED_FORMS:
        raise ValueError(f"unknown model {model!r}; known: {', '.join(CLOSED_FORMS)}")
    f = CLOSED_FORMS[model]
    pts = [p for p in table if p.converged and math.isfinite(p.ratio)]
    if len(pts) < 4:
        raise ValueError(f"insufficient converged points: {len(pts)} < 4")
    abs_dev = [abs(p.ratio - f(p.a)) for p in pts]
    rel_dev = [d / abs(f(p.a)) if f(p.a) != 0 else math.inf if d else 0.0 for d, p in zip(abs_dev, pts)]
    return FitResult(model, max(abs_dev), max(rel_dev), len(pts))
