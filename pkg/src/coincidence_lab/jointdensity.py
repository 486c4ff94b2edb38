"""Two-particle joint probability densities.

With ``A = psi1(x1) psi2(x2)`` and ``B = psi1(x2) psi2(x1)``:

    dis = (|A|**2 + |B|**2) / 2
    bos = |A + B|**2 / 2 = dis + inter
    fer = |A - B|**2 / 2 = dis - inter,      inter = Re{A B*}

The symmetrized amplitudes are squared directly instead of forming
``dis -/+ inter``, so the fermion density keeps its relative accuracy next
to the diagonal (where ``dis - inter`` would cancel) and is never negative.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .spwf import Spwf

__all__ = [
    "Statistics",
    "JointDensity",
    "single_pdf",
    "interference_term",
    "evaluate_joint",
    "rounding_scale",
]


class Statistics(str, enum.Enum):
    DISTINGUISHABLE = "dis"
    BOSON = "bos"
    FERMION = "fer"

    @property
    def sign(self) -> int:
        return {"dis": 0, "bos": 1, "fer": -1}[self.value]


@dataclass(frozen=True)
class JointDensity:
    psi1: Spwf
    psi2: Spwf
    statistics: Statistics

    def __post_init__(self):
        object.__setattr__(self, "statistics", Statistics(self.statistics))

    def with_statistics(self, statistics) -> "JointDensity":
        return JointDensity(self.psi1, self.psi2, Statistics(statistics))

    def __call__(self, x1, x2, origin: float = 0.0):
        return evaluate_joint(self, x1, x2, origin)


def single_pdf(psi: Spwf, x, origin: float = 0.0):
    """``|psi(origin + x)|**2``."""
    return _scalar(_abs2(psi.at(x, origin)))


def _products(psi1, psi2, x1, x2, origin):
    a = psi1.at(x1, origin) * psi2.at(x2, origin)
    b = psi1.at(x2, origin) * psi2.at(x1, origin)
    return a, b


def _abs2(z):
    return z.real * z.real + z.imag * z.imag


def _scalar(out):
    return float(out) if np.ndim(out) == 0 else out


def interference_term(psi1: Spwf, psi2: Spwf, x1, x2, origin: float = 0.0):
    """Exchange cross term ``Re{psi1(x1) psi2(x2) psi1*(x2) psi2*(x1)}``."""
    a, b = _products(psi1, psi2, x1, x2, origin)
    return _scalar(np.real(a * np.conj(b)))


def evaluate_joint(jd: JointDensity, x1, x2, origin: float = 0.0):
    """Joint density of ``jd`` at ``(origin + x1, origin + x2)``."""
    a, b = _products(jd.psi1, jd.psi2, x1, x2, origin)
    sign = jd.statistics.sign
    if sign == 0:
        out = 0.5 * (_abs2(a) + _abs2(b))
    elif sign > 0:
        out = 0.5 * _abs2(a + b)
    else:
        out = 0.5 * _abs2(a - b)
    return _scalar(out)


def rounding_scale(jd: JointDensity, x1, x2, origin: float = 0.0):
    """Magnitude of the rounding error in :func:`evaluate_joint`, in units of eps.

    For bosons and fermions the symmetrized amplitude ``A +/- B`` carries an
    error of order ``eps (|A| + |B|)``, which dominates near the diagonal
    where ``A - B`` cancels.
    """
    a, b = _products(jd.psi1, jd.psi2, x1, x2, origin)
    sign = jd.statistics.sign
    if sign == 0:
        return _scalar(0.5 * (_abs2(a) + _abs2(b)))
    s = np.abs(a + sign * b)
    return _scalar(s * (np.abs(a) + np.abs(b)) + 0.5 * s * s)
