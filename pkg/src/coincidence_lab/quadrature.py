"""Adaptive Gauss-Legendre integration on intervals and rectangles.

Each region carries a one-panel estimate; refining it evaluates its halves
(1D) or quadrants (2D) and the absolute difference between the refined sum
and the one-panel value is that region's error estimate. The region with
the largest estimate is refined next (global adaptivity). A roundoff floor
proportional to ``eps * integral(|f|)`` is added to every estimate, and a
region whose discrepancy is already below that floor is never refined.
When the integrand itself cancels internally, pass ``noise``: a pointwise
magnitude whose integral replaces ``integral(|f|)`` in that floor.

Integrands must accept numpy arrays and return arrays of the same shape.
Callers that integrate over detector windows should pass window-local
coordinates (``u = x - x0``) and shift inside the integrand.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "Interval",
    "Rectangle",
    "QuadratureResult",
    "integrate_1d",
    "integrate_2d",
    "mean_density",
    "mean_density_2d",
    "PANEL_ORDER",
    "MAX_DEPTH",
    "DEFAULT_REL_TOL",
]

PANEL_ORDER = 16
MAX_DEPTH = 60
MAX_REGIONS = 20_000
DEFAULT_REL_TOL = 1e-10
ABS_FLOOR = 1e-300
_ROUNDOFF = 50.0 * np.finfo(float).eps

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(PANEL_ORDER)


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or not self.lo < self.hi:
            raise ValueError(f"invalid interval [{self.lo!r}, {self.hi!r}]")

    @classmethod
    def around(cls, center: float, half_width: float) -> "Interval":
        return cls(center - half_width, center + half_width)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)


@dataclass(frozen=True)
class Rectangle:
    sx: Interval
    sy: Interval

    @property
    def area(self) -> float:
        return self.sx.width * self.sy.width


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    abs_error_estimate: float
    evaluations: int
    converged: bool = True

    def __post_init__(self):
        if self.abs_error_estimate < 0 or self.evaluations <= 0:
            raise ValueError("error estimate must be >= 0 and evaluations > 0")


def _check_tol(rel_tol):
    if not 1e-14 <= rel_tol <= 1e-2:
        raise ValueError(f"rel_tol must lie in [1e-14, 1e-2], got {rel_tol!r}")


def _sample(f, noise, *xs):
    fx = np.asarray(f(*xs))
    if fx.shape != xs[0].shape:
        fx = np.broadcast_to(fx, xs[0].shape)
    if noise is None:
        return fx, np.abs(fx)
    nx = np.asarray(noise(*xs))
    if nx.shape != xs[0].shape:
        nx = np.broadcast_to(nx, xs[0].shape)
    return fx, np.abs(fx) + np.abs(nx)


class _Adaptive:
    """Shared global-adaptive driver; subclasses define how a region splits."""

    n_children = 2

    def __init__(self, f, rel_tol, abs_tol, noise=None):
        self.f = f
        self.noise = noise
        self.rel_tol = rel_tol
        self.abs_tol = abs_tol
        self.evaluations = 0
        self.heap = []
        self.final_value = 0.0
        self.final_error = 0.0
        self.open_value = 0.0
        self.open_error = 0.0
        self._counter = 0

    def _children(self, regions):
        raise NotImplementedError

    def _eval(self, regions):
        raise NotImplementedError

    def _push(self, regions, coarse, depth):
        kids = self._children(regions)
        vals, absvals = self._eval(kids)
        m = self.n_children
        vals = vals.reshape(len(regions), m)
        absvals = absvals.reshape(len(regions), m)
        for i, region in enumerate(regions):
            fine = vals[i].sum()
            floor = _ROUNDOFF * absvals[i].sum()
            diff = abs(fine - coarse[i])
            err = diff + floor
            if diff <= floor:
                self.final_value += fine
                self.final_error += err
                continue
            self._counter += 1
            item = (-err, self._counter, depth, region, kids[i * m:(i + 1) * m], vals[i], fine)
            heapq.heappush(self.heap, item)
            self.open_value += fine
            self.open_error += err

    def run(self, root):
        coarse, _ = self._eval([root])
        self._push([root], coarse, 0)
        converged = True
        while self.heap:
            total = self.final_value + self.open_value
            err = self.final_error + self.open_error
            if err <= max(self.rel_tol * abs(total), self.abs_tol, ABS_FLOOR):
                break
            if self.heap[0][2] + 1 >= MAX_DEPTH or len(self.heap) > MAX_REGIONS:
                converged = False
                break
            neg_err, _, depth, region, kids, kid_vals, fine = heapq.heappop(self.heap)
            self.open_value -= fine
            self.open_error += neg_err
            self._push(kids, kid_vals, depth + 1)
        total = self.final_value + sum(item[6] for item in self.heap)
        err = self.final_error + sum(-item[0] for item in self.heap)
        return total, err, converged


class _Adaptive1D(_Adaptive):
    n_children = 2

    def _children(self, regions):
        out = []
        for lo, hi in regions:
            mid = 0.5 * (lo + hi)
            out += [(lo, mid), (mid, hi)]
        return out

    def _eval(self, regions):
        arr = np.asarray(regions, dtype=float)
        half = 0.5 * (arr[:, 1] - arr[:, 0])
        mid = 0.5 * (arr[:, 1] + arr[:, 0])
        x = mid[:, None] + half[:, None] * _NODES[None, :]
        fx, mag = _sample(self.f, self.noise, x)
        self.evaluations += fx.size
        return half * (fx @ _WEIGHTS), half * (mag @ _WEIGHTS)


class _Adaptive2D(_Adaptive):
    n_children = 4

    def _children(self, regions):
        out = []
        for x0, x1, y0, y1 in regions:
            xm = 0.5 * (x0 + x1)
            ym = 0.5 * (y0 + y1)
            out += [(x0, xm, y0, ym), (xm, x1, y0, ym), (x0, xm, ym, y1), (xm, x1, ym, y1)]
        return out

    def _eval(self, regions):
        arr = np.asarray(regions, dtype=float)
        hx = 0.5 * (arr[:, 1] - arr[:, 0])
        hy = 0.5 * (arr[:, 3] - arr[:, 2])
        mx = 0.5 * (arr[:, 1] + arr[:, 0])
        my = 0.5 * (arr[:, 3] + arr[:, 2])
        xs = mx[:, None] + hx[:, None] * _NODES[None, :]
        ys = my[:, None] + hy[:, None] * _NODES[None, :]
        X = np.broadcast_to(xs[:, :, None], (len(regions), PANEL_ORDER, PANEL_ORDER))
        Y = np.broadcast_to(ys[:, None, :], (len(regions), PANEL_ORDER, PANEL_ORDER))
        F, mag = _sample(self.f, self.noise, X, Y)
        self.evaluations += F.size
        w2 = np.outer(_WEIGHTS, _WEIGHTS)
        scale = hx * hy
        vals = scale * np.einsum("rij,ij->r", F, w2)
        absvals = scale * np.einsum("rij,ij->r", mag, w2)
        return vals, absvals


def integrate_1d(
    f: Callable[[np.ndarray], np.ndarray],
    s: Interval,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = 0.0,
    noise: Callable[[np.ndarray], np.ndarray] | None = None,
) -> QuadratureResult:
    """Integrate ``f`` over the interval ``s``.

    Parameters
    ----------
    f : callable
        Vectorized integrand; may return real or complex values.
    s : Interval
        Integration interval.
    rel_tol : float
        Target relative accuracy, in ``[1e-14, 1e-2]``.
    abs_tol : float
        Optional absolute target; useful when the integral may vanish.
    noise : callable, optional
        Pointwise rounding-error magnitude of ``f`` (up to a factor eps),
        for integrands that cancel internally.

    Returns
    -------
    QuadratureResult
        ``converged`` is False when the depth or region budget ran out; the
        value is still the best available estimate.
    """
    _check_tol(rel_tol)
    driver = _Adaptive1D(f, rel_tol, abs_tol, noise)
    value, err, ok = driver.run((s.lo, s.hi))
    if np.iscomplexobj(value) and np.imag(value) == 0:
        value = np.real(value)
    value = complex(value) if np.iscomplexobj(value) else float(value)
    return QuadratureResult(value, float(err), driver.evaluations, ok)


def integrate_2d(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    r: Rectangle,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = 0.0,
    noise: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None,
) -> QuadratureResult:
    """Integrate ``f(x, y)`` over the rectangle ``r`` (``x`` along ``r.sx``)."""
    _check_tol(rel_tol)
    driver = _Adaptive2D(f, rel_tol, abs_tol, noise)
    value, err, ok = driver.run((r.sx.lo, r.sx.hi, r.sy.lo, r.sy.hi))
    return QuadratureResult(float(np.real(value)), float(err), driver.evaluations, ok)


def mean_density(f, s: Interval, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Average of ``f`` over ``s``: integral divided by the width."""
    return integrate_1d(f, s, rel_tol).value / s.width


def mean_density_2d(f, r: Rectangle, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Average of ``f`` over ``r``: integral divided by the area."""
    return integrate_2d(f, r, rel_tol).value / r.area
