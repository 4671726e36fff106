"""Representation of time-dependent Hamiltonians as coefficient-weighted matrix sums.

Every driven Hamiltonian in this package has the shape

    H(t) = H_static + sum_j [ c_j(t) M_j + conj(c_j(t)) M_j^dag ]

with complex scalar coefficients ``c_j`` (rad/ns) carrying the full time
dependence and fixed matrices ``M_j``. The integrators exploit this: they
sample the coefficients on the half-step grid once and never call back into
Python inside the stepping loop.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .fockalg import SubsystemDims, max_abs

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class DriveTerm:
    """One non-Hermitian matrix with its complex coefficient c(t) in rad/ns.

    ``max_coeff`` bounds |c(t)| and ``carrier`` is the fastest oscillation
    frequency (GHz) inside c(t); both feed the step-size rule.
    """

    matrix: np.ndarray
    coefficient: Callable[[np.ndarray], np.ndarray]
    max_coeff: float
    carrier: float = 0.0

    def __post_init__(self) -> None:
        mat = np.ascontiguousarray(self.matrix, dtype=np.complex128)
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)


@dataclass(frozen=True)
class TimeDependentH:
    """H(t) = static + sum of coefficient-weighted terms plus their daggers."""

    static: np.ndarray
    terms: tuple[DriveTerm, ...] = ()
    dims: Optional[SubsystemDims] = None

    def __post_init__(self) -> None:
        mat = np.ascontiguousarray(self.static, dtype=np.complex128)
        mat.flags.writeable = False
        object.__setattr__(self, "static", mat)
        object.__setattr__(self, "terms", tuple(self.terms))

    @property
    def dim(self) -> int:
        return self.static.shape[0]

    @property
    def is_constant(self) -> bool:
        return not self.terms

    def f_max(self) -> float:
        """Largest frequency scale present, in GHz (ordinary frequency).

        Combines an infinity-norm bound on ||H(t)|| with the drive carriers;
        the step rule dt <= 1/(50 f_max) is evaluated against this number.
        """
        row = np.abs(self.static).sum(axis=1).max() if self.static.size else 0.0
        for term in self.terms:
            row += 2.0 * term.max_coeff * float(np.abs(term.matrix).sum(axis=1).max())
        scale = row / TWO_PI
        carriers = [abs(t.carrier) for t in self.terms]
        return float(max([scale, *carriers, 1e-12]))

    def __call__(self, t: float) -> np.ndarray:
        h = self.static.copy()
        for term in self.terms:
            c = complex(np.asarray(term.coefficient(np.asarray([float(t)])))[0])
            h += c * term.matrix + np.conj(c) * term.matrix.conj().T
        return h


def hermiticity_defect(h: TimeDependentH, t: float) -> float:
    m = h(t)
    return max_abs(m - m.conj().T)
