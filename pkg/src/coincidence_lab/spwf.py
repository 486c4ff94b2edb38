"""Single-particle wavefunctions.

Catalog families (box, oscillator, real plane wave) are normalized and
mutually orthogonal within a family. The two local models are truncated
Taylor expansions around a point ``x0`` and are not normalizable; they only
make sense inside detection-window integrals, where every ratio is free of
the normalization constant.

Every variant evaluates ``psi(origin + u)`` through its ``at`` method, so
callers working in window-local coordinates never form ``origin + u``
themselves. For the box and plane-wave families the phase is reduced around
``origin`` before ``u`` is added, which keeps full relative precision next to
a node even when ``u`` is many decades below ``origin``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Union

import numpy as np

__all__ = [
    "BoxEigenstate",
    "OscillatorEigenstate",
    "PlaneWaveReal",
    "LocalRegular",
    "LocalNode",
    "Spwf",
    "NonNormalizableError",
    "evaluate",
    "overlap",
    "find_nodes",
    "from_dict",
    "to_dict",
    "pair_length_scale",
    "FAMILIES",
]


class NonNormalizableError(ValueError):
    """Raised when a global integral is requested for a local model."""


def _sin_pi(t0, dt):
    """``sin(pi * (t0 + dt))`` with the half-integer parts of ``t0`` and ``dt`` removed exactly."""
    t0 = np.asarray(t0, dtype=float)
    dt = np.asarray(dt, dtype=float)
    k0 = np.rint(2.0 * t0)
    k1 = np.rint(2.0 * dt)
    r = (t0 - 0.5 * k0) + (dt - 0.5 * k1)
    q = np.mod(k0 + k1, 4.0)
    s = np.sin(np.pi * r)
    c = np.cos(np.pi * r)
    return np.select([q == 0, q == 1, q == 2], [s, c, -s], default=-c)


def _as_output(values, x):
    if np.ndim(x) == 0 and np.ndim(values) == 0:
        return complex(values)
    return np.asarray(values, dtype=complex)


@dataclass(frozen=True)
class BoxEigenstate:
    """Infinite-well eigenstate ``sqrt(2/L) sin(n pi x / L)`` on ``[0, L]``."""

    n: int
    L: float = 1.0

    family = "box"
    normalizable = True

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"box quantum number must be a positive integer, got {self.n!r}")
        if not self.L > 0:
            raise ValueError(f"box length must be positive, got {self.L!r}")

    @property
    def length_scale(self) -> float:
        return self.L / self.n

    @property
    def natural_domain(self) -> tuple[float, float]:
        return (0.0, float(self.L))

    def at(self, u, origin: float = 0.0):
        u = np.asarray(u, dtype=float)
        t0 = self.n * origin / self.L
        dt = self.n * u / self.L
        x = origin + u
        inside = (x >= 0.0) & (x <= self.L)
        val = np.where(inside, math.sqrt(2.0 / self.L) * _sin_pi(t0, dt), 0.0)
        return _as_output(val, u)


@dataclass(frozen=True)
class OscillatorEigenstate:
    """Harmonic-oscillator eigenstate with length scale ``sigma``.

    Built from the orthonormal Hermite-function recurrence
    ``h_{k+1} = sqrt(2/(k+1)) y h_k - sqrt(k/(k+1)) h_{k-1}``, which stays
    finite for quantum numbers where ``2**n n!`` would overflow.
    """

    n: int
    sigma: float = 1.0

    family = "oscillator"
    normalizable = True

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise ValueError(f"oscillator quantum number must be a nonnegative integer, got {self.n!r}")
        if not self.sigma > 0:
            raise ValueError(f"oscillator length scale must be positive, got {self.sigma!r}")

    @property
    def length_scale(self) -> float:
        return self.sigma / math.sqrt(2 * self.n + 1)

    @property
    def natural_domain(self) -> tuple[float, float]:
        half = (math.sqrt(2 * self.n + 1) + 12.0) * self.sigma
        return (-half, half)

    def at(self, u, origin: float = 0.0):
        u = np.asarray(u, dtype=float)
        y = (origin + u) / self.sigma
        h_prev = np.zeros_like(y)
        h = np.pi ** -0.25 * np.exp(-0.5 * y * y)
        for k in range(self.n):
            h_next = math.sqrt(2.0 / (k + 1)) * y * h - math.sqrt(k / (k + 1)) * h_prev
            h_prev, h = h, h_next
        return _as_output(h / math.sqrt(self.sigma), u)


@dataclass(frozen=True)
class PlaneWaveReal:
    """Real standing wave ``sqrt(2/L) cos(k x + phase)`` on a periodic box of length ``L``.

    ``k L`` must be a positive multiple of ``2 pi``. ``phase = -pi/2`` gives
    the sine partner, orthogonal to the ``phase = 0`` state of the same ``k``.
    """

    k: float
    phase: float = 0.0
    L: float = 1.0

    family = "plane"
    normalizable = True

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError(f"plane-wave box length must be positive, got {self.L!r}")
        m = self.k * self.L / (2.0 * math.pi)
        if not self.k > 0 or abs(m - round(m)) > 1e-9 * max(1.0, abs(m)) or round(m) < 1:
            raise ValueError(f"plane-wave k*L must be a positive multiple of 2*pi, got k={self.k!r}, L={self.L!r}")

    @property
    def length_scale(self) -> float:
        return 2.0 * math.pi / self.k

    @property
    def natural_domain(self) -> tuple[float, float]:
        return (0.0, float(self.L))

    def at(self, u, origin: float = 0.0):
        u = np.asarray(u, dtype=float)
        a = self.k * origin + self.phase
        b = self.k * u
        val = math.sqrt(2.0 / self.L) * (math.cos(a) * np.cos(b) - math.sin(a) * np.sin(b))
        return _as_output(val, u)


@dataclass(frozen=True)
class LocalRegular:
    """Linear model ``amplitude + slope (x - x0)`` with ``amplitude != 0``."""

    amplitude: complex
    slope: complex = 0.0
    x0: float = 0.0

    family = "local_regular"
    normalizable = False
    length_scale = math.inf

    def __post_init__(self):
        if self.amplitude == 0:
            raise ValueError("local regular model needs a nonzero amplitude at x0")

    def at(self, u, origin: float = 0.0):
        u = np.asarray(u, dtype=float)
        val = self.amplitude + self.slope * ((origin - self.x0) + u)
        return _as_output(val, u)


@dataclass(frozen=True)
class LocalNode:
    """Node model ``derivative (x - x0)`` with ``derivative != 0``."""

    derivative: complex
    x0: float = 0.0

    family = "local_node"
    normalizable = False
    length_scale = math.inf

    def __post_init__(self):
        if self.derivative == 0:
            raise ValueError("local node model needs a nonzero derivative at x0")

    def at(self, u, origin: float = 0.0):
        u = np.asarray(u, dtype=float)
        val = self.derivative * ((origin - self.x0) + u)
        return _as_output(val, u)


Spwf = Union[BoxEigenstate, OscillatorEigenstate, PlaneWaveReal, LocalRegular, LocalNode]

FAMILIES = {
    "box": (BoxEigenstate, "lambda = L / n"),
    "oscillator": (OscillatorEigenstate, "lambda = sigma / sqrt(2 n + 1)"),
    "plane": (PlaneWaveReal, "lambda = 2 pi / k"),
    "local_regular": (LocalRegular, "lambda = inf (local Taylor model)"),
    "local_node": (LocalNode, "lambda = inf (local Taylor model)"),
}


def evaluate(psi: Spwf, x):
    """Complex amplitude of ``psi`` at ``x`` (scalar or array)."""
    return psi.at(x)


def overlap(psi_a: Spwf, psi_b: Spwf, domain=None, rel_tol: float = 1e-10) -> complex:
    """``<psi_a|psi_b>`` over ``domain`` (defaults to the union of natural domains).

    Raises
    ------
    NonNormalizableError
        If either wavefunction is a local model.
    """
    from .quadrature import Interval, integrate_1d

    for psi in (psi_a, psi_b):
        if not psi.normalizable:
            raise NonNormalizableError(f"non-normalizable model: {psi.family}")
    if domain is None:
        lo = min(psi_a.natural_domain[0], psi_b.natural_domain[0])
        hi = max(psi_a.natural_domain[1], psi_b.natural_domain[1])
        domain = Interval(lo, hi)
    elif not isinstance(domain, Interval):
        domain = Interval(*domain)

    def integrand(x):
        return np.conj(psi_a.at(x)) * psi_b.at(x)

    # absolute floor so that orthogonal pairs (value ~ 0) terminate
    res = integrate_1d(integrand, domain, rel_tol=rel_tol, abs_tol=rel_tol * 1e-3)
    return complex(res.value)


def find_nodes(psi: Spwf, domain, tol: float = 1e-12) -> list[float]:
    """Sign-change zeros of a real-valued wavefunction in ``domain``, ascending."""
    lo, hi = (domain.lo, domain.hi) if hasattr(domain, "lo") else domain
    if isinstance(psi, LocalNode):
        return [float(psi.x0)] if lo <= psi.x0 <= hi else []
    if isinstance(psi, LocalRegular):
        if psi.slope == 0:
            return []
        root = complex(psi.x0) - complex(psi.amplitude) / complex(psi.slope)
        if abs(root.imag) > tol or not lo <= root.real <= hi:
            return []
        return [root.real]

    def f(x):
        return np.real(psi.at(x))

    n_grid = int(min(2_000_000, max(4096, 400 * math.ceil((hi - lo) / psi.length_scale))))
    xs = np.linspace(lo, hi, n_grid + 1)
    vals = f(xs)
    nodes = list(xs[vals == 0.0])
    nz = np.flatnonzero(vals != 0.0)
    signs = np.sign(vals[nz])
    for i in np.flatnonzero(signs[:-1] != signs[1:]):
        a, b = xs[nz[i]], xs[nz[i + 1]]
        if nz[i + 1] - nz[i] > 1:
            continue  # exact zero on the grid between them, already recorded
        fa = vals[nz[i]]
        while b - a > tol:
            m = 0.5 * (a + b)
            fm = f(m)
            if fm == 0.0:
                a = b = m
                break
            if (fm > 0) == (fa > 0):
                a, fa = m, fm
            else:
                b = m
        nodes.append(0.5 * (a + b))
    return sorted(float(x) for x in nodes)


def pair_length_scale(*psis: Spwf) -> float:
    """Smallest length scale among the given wavefunctions (``inf`` for local models)."""
    return min(p.length_scale for p in psis)


def _complex_field(value, name, errors):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        return complex(value[0], value[1])
    errors.append(f"{name}: expected a number or [re, im] pair, got {value!r}")
    return None


def _real_field(spec, key, errors, prefix, default=None, integer=False):
    if key not in spec:
        if default is None:
            errors.append(f"{prefix}.{key}: missing")
        return default
    v = spec[key]
    ok = isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)
    if integer:
        ok = ok and float(v).is_integer()
    if not ok:
        kind = "an integer" if integer else "a finite number"
        errors.append(f"{prefix}.{key}: expected {kind}, got {v!r}")
        return None
    return int(v) if integer else float(v)


_FIELDS = {
    "box": {"family", "n", "L"},
    "oscillator": {"family", "n", "sigma"},
    "plane": {"family", "k", "phase", "L"},
    "local_regular": {"family", "amplitude", "slope", "x0"},
    "local_node": {"family", "derivative", "x0"},
}


def from_dict(spec: dict[str, Any], prefix: str = "psi", errors: list[str] | None = None):
    """Build a wavefunction from its tagged-record form.

    When ``errors`` is given, problems are appended to it and ``None`` is
    returned instead of raising.
    """
    collect = errors is not None
    errs: list[str] = [] if errors is None else errors
    start = len(errs)
    if not isinstance(spec, dict):
        errs.append(f"{prefix}: expected an object, got {type(spec).__name__}")
    else:
        family = spec.get("family")
        if family not in FAMILIES:
            errs.append(f"{prefix}.family: unknown family {family!r} (known: {', '.join(FAMILIES)})")
        else:
            for key in sorted(set(spec) - _FIELDS[family]):
                errs.append(f"{prefix}.{key}: unexpected field for family {family!r}")
            psi = None
            if family == "box":
                n = _real_field(spec, "n", errs, prefix, integer=True)
                L = _real_field(spec, "L", errs, prefix, default=1.0)
                args = (n, L)
            elif family == "oscillator":
                n = _real_field(spec, "n", errs, prefix, integer=True)
                sigma = _real_field(spec, "sigma", errs, prefix, default=1.0)
                args = (n, sigma)
            elif family == "plane":
                k = _real_field(spec, "k", errs, prefix)
                phase = _real_field(spec, "phase", errs, prefix, default=0.0)
                L = _real_field(spec, "L", errs, prefix, default=1.0)
                args = (k, phase, L)
            elif family == "local_regular":
                amp = _complex_field(spec.get("amplitude"), f"{prefix}.amplitude", errs)
                slope = _complex_field(spec.get("slope", 0.0), f"{prefix}.slope", errs)
                x0 = _real_field(spec, "x0", errs, prefix, default=0.0)
                args = (amp, slope, x0)
            else:
                der = _complex_field(spec.get("derivative"), f"{prefix}.derivative", errs)
                x0 = _real_field(spec, "x0", errs, prefix, default=0.0)
                args = (der, x0)
            if len(errs) == start:
                try:
                    psi = FAMILIES[family][0](*args)
                except ValueError as exc:
                    errs.append(f"{prefix}: {exc}")
            if len(errs) == start:
                return psi
    if not collect:
        raise ValueError("; ".join(errs[start:]))
    return None


def _complex_out(z):
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


def to_dict(psi: Spwf) -> dict[str, Any]:
    if isinstance(psi, BoxEigenstate):
        return {"family": "box", "n": psi.n, "L": psi.L}
    if isinstance(psi, OscillatorEigenstate):
        return {"family": "oscillator", "n": psi.n, "sigma": psi.sigma}
    if isinstance(psi, PlaneWaveReal):
        return {"family": "plane", "k": psi.k, "phase": psi.phase, "L": psi.L}
    if isinstance(psi, LocalRegular):
        return {
            "family": "local_regular",
            "amplitude": _complex_out(psi.amplitude),
            "slope": _complex_out(psi.slope),
            "x0": psi.x0,
        }
    return {"family": "local_node", "derivative": _complex_out(psi.derivative), "x0": psi.x0}
