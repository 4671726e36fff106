"""Truncated bosonic operator algebra on a fixed (atom 1, atom 2, resonator) product.

Conventions used throughout the package:

* tensor-factor order is (atom 1, atom 2, resonator); the basis index of
  ``|n1, n2, nr>`` is ``(n1 * D2 + n2) * Dr + nr``,
* operator matrices are stored in angular units (rad/ns) with hbar = 1;
  configuration-facing numbers are ordinary frequencies in GHz
  (``omega = 2 pi f``) and times are in ns,
* everything is dense: the largest system here is 125-dimensional.

All container types are immutable after construction (arrays are marked
read-only), so they can be shared freely across concurrent sweep workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Iterable

import numpy as np

from .errors import ContractError, DomainError

ATOM1, ATOM2, RESONATOR = 0, 1, 2

_SLOT_NAMES = ("atom_1", "atom_2", "resonator")


def _frozen_array(values, dtype, ndim: int) -> np.ndarray:
    arr = np.ascontiguousarray(values, dtype=dtype)
    if arr.ndim != ndim:
        raise DomainError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class SubsystemDims:
    """Truncation dimensions in the fixed order (atom 1, atom 2, resonator)."""

    dims: tuple[int, int, int] = (5, 5, 5)

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 3:
            raise DomainError(f"exactly three subsystems expected, got {len(dims)}")
        if any(d < 2 for d in dims):
            raise DomainError(f"every subsystem needs dimension >= 2, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def total(self) -> int:
        return prod(self.dims)

    def occupations(self) -> np.ndarray:
        """(total, 3) integer array: occupation of each subsystem per basis state."""
        occ = np.stack(np.unravel_index(np.arange(self.total), self.dims), axis=1)
        occ.flags.writeable = False
        return occ


@dataclass(frozen=True)
class FockOperator:
    """Dense operator on the full product space, tagged with its dimensions."""

    matrix: np.ndarray
    dims: SubsystemDims

    def __post_init__(self) -> None:
        mat = _frozen_array(self.matrix, np.complex128, 2)
        if mat.shape[0] != mat.shape[1]:
            raise DomainError(f"operator must be square, got {mat.shape}")
        if mat.shape[0] != self.dims.total:
            raise DomainError(
                f"matrix side {mat.shape[0]} != product of dims {self.dims.total}"
            )
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dag(self) -> "FockOperator":
        return FockOperator(self.matrix.conj().T, self.dims)

    def hermiticity_defect(self) -> float:
        return max_abs(self.matrix - self.matrix.conj().T)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        scale = max(1.0, max_abs(self.matrix))
        return self.hermiticity_defect() < tol * scale

    def __add__(self, other: "FockOperator") -> "FockOperator":
        self._check_compatible(other)
        return FockOperator(self.matrix + other.matrix, self.dims)

    def __sub__(self, other: "FockOperator") -> "FockOperator":
        self._check_compatible(other)
        return FockOperator(self.matrix - other.matrix, self.dims)

    def __rmul__(self, scalar: complex) -> "FockOperator":
        return FockOperator(complex(scalar) * self.matrix, self.dims)

    def __matmul__(self, other: "FockOperator") -> "FockOperator":
        self._check_compatible(other)
        return FockOperator(self.matrix @ other.matrix, self.dims)

    def _check_compatible(self, other: "FockOperator") -> None:
        if self.dims != other.dims:
            raise DomainError("operators live on different subsystem dimensions")


@dataclass(frozen=True)
class StateVector:
    """Dense state on the full product space."""

    amplitudes: np.ndarray
    dims: SubsystemDims

    def __post_init__(self) -> None:
        amps = _frozen_array(self.amplitudes, np.complex128, 1)
        if amps.shape[0] != self.dims.total:
            raise DomainError(
                f"state length {amps.shape[0]} != product of dims {self.dims.total}"
            )
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n == 0.0:
            raise DomainError("cannot normalize the zero vector")
        return StateVector(self.amplitudes / n, self.dims)


def basis_state(dims: SubsystemDims, occupations: Iterable[int]) -> StateVector:
    """Product Fock state |n1, n2, nr>."""
    occ = tuple(int(n) for n in occupations)
    if len(occ) != 3:
        raise DomainError("three occupation numbers expected")
    for n, d in zip(occ, dims.dims):
        if not 0 <= n < d:
            raise DomainError(f"occupation {n} out of range for dimension {d}")
    amps = np.zeros(dims.total, dtype=np.complex128)
    amps[np.ravel_multi_index(occ, dims.dims)] = 1.0
    return StateVector(amps, dims)


def annihilation(dim: int) -> np.ndarray:
    """Truncated lowering operator: superdiagonal sqrt(1), ..., sqrt(dim-1)."""
    dim = int(dim)
    if dim < 2:
        raise DomainError(f"annihilation needs dimension >= 2, got {dim}")
    return np.diag(np.sqrt(np.arange(1, dim, dtype=np.float64)), 1).astype(np.complex128)


def number_operator(dim: int) -> np.ndarray:
    return np.diag(np.arange(int(dim), dtype=np.float64)).astype(np.complex128)


def embed(op: np.ndarray, slot: int, dims: SubsystemDims) -> FockOperator:
    """Place a single-subsystem operator at ``slot``, identity elsewhere.

    The Kronecker order follows the fixed (atom 1, atom 2, resonator)
    convention of :class:`SubsystemDims`.
    """
    if slot not in (ATOM1, ATOM2, RESONATOR):
        raise DomainError(f"slot must be 0, 1 or 2, got {slot}")
    op = np.asarray(op, dtype=np.complex128)
    if op.shape != (dims.dims[slot], dims.dims[slot]):
        raise DomainError(
            f"operator shape {op.shape} does not match subsystem "
            f"{_SLOT_NAMES[slot]} of dimension {dims.dims[slot]}"
        )
    out = np.eye(1, dtype=np.complex128)
    for k, d in enumerate(dims.dims):
        out = np.kron(out, op if k == slot else np.eye(d, dtype=np.complex128))
    return FockOperator(out, dims)


def expm_unitary(h: FockOperator, t_ns: float) -> FockOperator:
    """exp(-i H t) through a Hermitian eigendecomposition.

    Exactly unitary up to roundoff, unlike series methods; H carries rad/ns.
    """
    if not h.is_hermitian():
        raise ContractError(
            f"expm_unitary needs a Hermitian operator; defect {h.hermiticity_defect():.3e}"
        )
    evals, vecs = np.linalg.eigh(h.matrix)
    phases = np.exp(-1j * evals * float(t_ns))
    return FockOperator((vecs * phases) @ vecs.conj().T, h.dims)


def excited_population(state: StateVector, slot: int) -> float:
    """Probability that subsystem ``slot`` holds one or more excitations."""
    if slot not in (ATOM1, ATOM2, RESONATOR):
        raise DomainError(f"slot must be 0, 1 or 2, got {slot}")
    occ = state.dims.occupations()[:, slot]
    probs = np.abs(state.amplitudes) ** 2
    return float(probs[occ >= 1].sum())


def occupation_masks(dims: SubsystemDims) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Boolean masks selecting basis states with each subsystem excited."""
    occ = dims.occupations()
    return tuple(occ[:, slot] >= 1 for slot in (ATOM1, ATOM2, RESONATOR))


def truncation_safe_mask(dims: SubsystemDims) -> np.ndarray:
    """Basis states with every subsystem at least one level below its cutoff.

    Commutator identities of the untruncated algebra hold exactly on this
    subspace; rows touching any truncation boundary are excluded.
    """
    occ = dims.occupations()
    return np.all(occ <= np.array(dims.dims) - 2, axis=1)


def restrict(matrix: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Restrict a matrix to the rows and columns selected by ``mask``."""
    idx = np.flatnonzero(mask)
    return matrix[np.ix_(idx, idx)]


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def max_abs(matrix: np.ndarray) -> float:
    """Largest absolute entry; the elementwise norm used by the contracts here."""
    return float(np.abs(matrix).max()) if np.asarray(matrix).size else 0.0
