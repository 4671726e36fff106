"""Gate construction, process tomography, fidelity metrics, RB and leakage.

Two-qubit objects use the basis |00>, |01>, |10>, |11> with atom 1 as the
first label. The Pauli operator basis is ordered II, IX, IY, IZ, XI, ...,
ZZ (first letter acting on atom 1).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import DomainError
from .fockalg import FockOperator, max_abs
from .model import EffectiveParams, SystemParams, build_H0, build_Hcpg, effective_params
from .timedep import TWO_PI

_I = np.eye(2, dtype=np.complex128)
_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)

PAULI_LABELS: tuple[str, ...] = tuple(
    a + b for a in "IXYZ" for b in "IXYZ"
)


def pauli_basis() -> np.ndarray:
    """(16, 4, 4) array of two-qubit Paulis in the fixed II, IX, ... ordering."""
    singles = (_I, _X, _Y, _Z)
    return np.stack([np.kron(p, q) for p in singles for q in singles])


_PAULIS = pauli_basis()


def iswap_dagger_ideal() -> np.ndarray:
    """The target entangler: |01> <-> |10| swap with phase -i."""
    return np.array(
        [
            [1, 0, 0, 0],
            [0, 0, -1j, 0],
            [0, -1j, 0, 0],
            [0, 0, 0, 1],
        ],
        dtype=np.complex128,
    )


def swap_time(g_eff_ghz: float) -> float:
    """Gate duration tau = 1/(4 |f_eff|) ns, i.e. pi/(2 g_eff) in angular units."""
    if g_eff_ghz == 0.0:
        raise DomainError("no gate: the effective coupling vanishes")
    return 1.0 / (4.0 * abs(g_eff_ghz))


def phase_corrections(eff: EffectiveParams, tau: float) -> tuple[np.ndarray, np.ndarray]:
    """Local diagonal corrections S_k = diag(1, e^{-i omega_shift_k tau}).

    Undoing them on the propagator at the swap time leaves the bare
    entangler up to one global phase.
    """
    s1 = np.diag([1.0, np.exp(-1j * TWO_PI * eff.f_1_shift * tau)]).astype(np.complex128)
    s2 = np.diag([1.0, np.exp(-1j * TWO_PI * eff.f_2_shift * tau)]).astype(np.complex128)
    return s1, s2


def fix_global_phase(u: np.ndarray) -> np.ndarray:
    """Rotate a matrix so its anchor entry is real positive.

    The anchor is the |00><00| element when it carries significant weight
    (the case for near-identity-block gates here), otherwise the
    largest-magnitude entry.
    """
    u = np.asarray(u, dtype=np.complex128)
    mags = np.abs(u)
    anchor = u[0, 0] if mags[0, 0] >= 0.5 * mags.max() else u.flat[int(mags.argmax())]
    if abs(anchor) == 0.0:
        return u.copy()
    return u * (np.conj(anchor) / abs(anchor))


def corrected_propagator(u4: np.ndarray, eff: EffectiveParams, tau: float) -> np.ndarray:
    """Apply the inverse local phase corrections and fix the global phase."""
    s1, s2 = phase_corrections(eff, tau)
    return fix_global_phase(np.kron(s1, s2).conj().T @ u4)


def project_to_qubit_subspace(u_full: FockOperator) -> tuple[np.ndarray, float]:
    """4x4 block of a full propagator on {|n1 n2 0_r>} with the leakage defect.

    The defect max|U4^dag U4 - 1| is reported, never repaired; projected
    propagators are slightly sub-unitary whenever population leaks out.
    """
    d1, d2, dr = u_full.dims.dims
    idx = [(n1 * d2 + n2) * dr for n1 in (0, 1) for n2 in (0, 1)]
    u4 = u_full.matrix[np.ix_(idx, idx)]
    defect = max_abs(u4.conj().T @ u4 - np.eye(4))
    return u4, defect


def project_to_atom_block(u_full: FockOperator) -> np.ndarray:
    """(D1 D2) x (D1 D2) block on the resonator-vacuum sector |n1 n2 0_r>."""
    d1, d2, dr = u_full.dims.dims
    idx = [(n1 * d2 + n2) * dr for n1 in range(d1) for n2 in range(d2)]
    return u_full.matrix[np.ix_(idx, idx)]


def embed_qubit_gate(gate: np.ndarray, dim: int) -> np.ndarray:
    """Extend a 2x2 gate to a D-level atom: identity on the leakage levels."""
    out = np.eye(int(dim), dtype=np.complex128)
    out[:2, :2] = gate
    return out


# ---------------------------------------------------------------------------
# process tomography
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChiMatrix:
    """Process matrix over the fixed two-qubit Pauli ordering.

    ``nonphysical`` flags a reconstruction whose smallest eigenvalue fell
    below -1e-6; the matrix itself is reported unrepaired.
    """

    matrix: np.ndarray
    nonphysical: bool = False

    def __post_init__(self) -> None:
        mat = np.ascontiguousarray(self.matrix, dtype=np.complex128)
        if mat.shape != (16, 16):
            raise DomainError(f"chi matrix must be 16x16, got {mat.shape}")
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix).min())


def _tomography_input_states() -> np.ndarray:
    """16 product density matrices |s1 s2><s1 s2|, s in {0, 1, +, +i}."""
    zero = np.array([1.0, 0.0], dtype=np.complex128)
    one = np.array([0.0, 1.0], dtype=np.complex128)
    plus = (zero + one) / np.sqrt(2.0)
    plus_i = (zero + 1j * one) / np.sqrt(2.0)
    kets = (zero, one, plus, plus_i)
    rhos = []
    for k1 in kets:
        for k2 in kets:
            ket = np.kron(k1, k2)
            rhos.append(np.outer(ket, ket.conj()))
    return np.stack(rhos)


def chi_tomography(process: Callable[[np.ndarray], np.ndarray]) -> ChiMatrix:
    """Reconstruct chi from the action on 16 product input states.

    Linear inversion: the inputs span the operator space, so the process
    superoperator L (column-stacking convention) is solved exactly, then
    projected onto the Pauli double basis, chi_mn = tr[(E_n* (x) E_m)^dag L]/16.
    """
    inputs = _tomography_input_states()
    in_cols = np.stack([rho.flatten(order="F") for rho in inputs], axis=1)
    out_cols = np.stack(
        [np.asarray(process(rho), dtype=np.complex128).flatten(order="F") for rho in inputs],
        axis=1,
    )
    superop = out_cols @ np.linalg.inv(in_cols)
    chi = np.empty((16, 16), dtype=np.complex128)
    basis = [np.kron(_PAULIS[n].conj(), _PAULIS[m]) for m in range(16) for n in range(16)]
    for m in range(16):
        for n in range(16):
            chi[m, n] = np.trace(basis[m * 16 + n].conj().T @ superop) / 16.0
    chi = 0.5 * (chi + chi.conj().T)  # Hermitize roundoff
    nonphysical = bool(np.linalg.eigvalsh(chi).min() < -1e-6)
    return ChiMatrix(matrix=chi, nonphysical=nonphysical)


def chi_of_unitary(u4: np.ndarray) -> ChiMatrix:
    """Rank-1 chi of a unitary (or near-unitary) 4x4 map: chi = c c^dag."""
    c = np.array([np.trace(p.conj().T @ u4) / 4.0 for p in _PAULIS])
    return ChiMatrix(matrix=np.outer(c, c.conj()))


def channel_from_chi(chi: ChiMatrix) -> Callable[[np.ndarray], np.ndarray]:
    """Resynthesize rho -> sum_mn chi_mn E_m rho E_n^dag."""

    def apply(rho: np.ndarray) -> np.ndarray:
        out = np.zeros((4, 4), dtype=np.complex128)
        for m in range(16):
            for n in range(16):
                c = chi.matrix[m, n]
                if c != 0.0:
                    out += c * _PAULIS[m] @ rho @ _PAULIS[n].conj().T
        return out

    return apply


def process_fidelity(chi_a: ChiMatrix, chi_b: ChiMatrix) -> float:
    """tr(chi_a chi_b); invariant under global phases of the underlying maps."""
    return float(np.trace(chi_a.matrix @ chi_b.matrix).real)


def state_fidelity(psi: np.ndarray, phi: np.ndarray) -> float:
    """|<psi|phi>|^2 for pure states."""
    return float(np.abs(np.vdot(np.asarray(psi), np.asarray(phi))) ** 2)


# ---------------------------------------------------------------------------
# randomized benchmarking
# ---------------------------------------------------------------------------


def single_qubit_gate(theta: float, phi: float, lam: float) -> np.ndarray:
    """Generic local gate: rows (cos, -e^{i lam} sin; e^{i phi} sin, e^{i(lam+phi)} cos)."""
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return np.array(
        [
            [c, -np.exp(1j * lam) * s],
            [np.exp(1j * phi) * s, np.exp(1j * (lam + phi)) * c],
        ],
        dtype=np.complex128,
    )


def _random_angles(rng: np.random.Generator) -> tuple[float, float, float]:
    # theta ~ U[0, 2 pi], phi ~ U[0, pi], lam ~ U[0, pi]
    return (
        float(rng.uniform(0.0, 2.0 * np.pi)),
        float(rng.uniform(0.0, np.pi)),
        float(rng.uniform(0.0, np.pi)),
    )


def random_local_pair(rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    g1 = single_qubit_gate(*_random_angles(rng))
    g2 = single_qubit_gate(*_random_angles(rng))
    return g1, g2


def random_local_gate(rng: np.random.Generator) -> np.ndarray:
    """G_1 (x) G_2 with angles drawn uniformly from the stated intervals."""
    g1, g2 = random_local_pair(rng)
    return np.kron(g1, g2)


@dataclass(frozen=True)
class RBResult:
    """Fidelity decay data and the fitted per-gate average fidelity."""

    gate_counts: np.ndarray
    mean_fidelity: np.ndarray
    std_error: np.ndarray
    fbar: float
    fbar_err: float
    residuals: np.ndarray
    realizations: int
    seed: int

    def __post_init__(self) -> None:
        if np.any(self.mean_fidelity < 0.0) or np.any(self.mean_fidelity > 1.0 + 1e-12):
            raise DomainError("mean fidelities must lie in [0, 1]")


def fit_rb_decay(gate_counts: np.ndarray, mean_fidelity: np.ndarray) -> tuple[float, float, np.ndarray]:
    """Least squares of log F on N through the origin (model F = fbar^N)."""
    n = np.asarray(gate_counts, dtype=np.float64)
    logf = np.log(np.asarray(mean_fidelity, dtype=np.float64))
    slope = float(np.sum(n * logf) / np.sum(n * n))
    residuals = logf - slope * n
    dof = max(1, len(n) - 1)
    slope_var = float(np.sum(residuals**2) / dof / np.sum(n * n))
    fbar = float(np.exp(slope))
    return fbar, fbar * float(np.sqrt(slope_var)), residuals


def iswap_stage_propagator(p: SystemParams, g_p: float) -> tuple[np.ndarray, float, EffectiveParams, float]:
    """Full-model swap-stage propagator, projected and phase-corrected.

    Returns (corrected 4x4 propagator, tau, effective params, leakage defect);
    tau is derived from the effective coupling, never hardcoded.
    """
    from .fockalg import expm_unitary  # local import keeps module order simple

    pk = replace(p, g_p=g_p)
    eff = effective_params(pk)
    tau = swap_time(eff.g_eff)
    h = build_H0(pk) + build_Hcpg(pk)
    u_full = expm_unitary(h, tau)
    u4, defect = project_to_qubit_subspace(u_full)
    return corrected_propagator(u4, eff, tau), tau, eff, defect


def rb_run(
    p: SystemParams,
    g_p: float,
    n_max: int,
    realizations: int,
    seed: int,
    *,
    propagator: Optional[np.ndarray] = None,
) -> RBResult:
    """Randomized benchmarking of the swap stage against the ideal entangler.

    Each realization prepares a random product state (two random local gates
    on |00>), then alternates the simulated swap stage with exact random
    local gates, recording |<psi_ideal|psi_sim>|^2 after every pair. The
    simulated state is renormalized before every overlap: the pure-state
    fidelity is defined on unit vectors, and the projection's norm loss is
    already reported as the stage's leakage defect. The same precomputed
    corrected propagator is reused for every stage; the physics between
    segments is time-invariant. Realization seeds derive from
    (seed, realization index), so results do not depend on execution order.
    ``propagator`` overrides the simulated stage (used for self-checks with
    the ideal gate).
    """
    if n_max < 2:
        raise DomainError("randomized benchmarking needs n_max >= 2")
    if realizations < 10:
        raise DomainError("randomized benchmarking needs at least 10 realizations")
    u_sim = propagator if propagator is not None else iswap_stage_propagator(p, g_p)[0]
    u_ideal = iswap_dagger_ideal()

    counts = np.arange(1, n_max + 1)
    fidelities = np.empty((realizations, n_max), dtype=np.float64)
    for r in range(realizations):
        rng = np.random.default_rng(np.random.SeedSequence((seed, r)))
        init = random_local_gate(rng)
        psi_sim = init[:, 0].copy()  # init @ |00>
        psi_ideal = psi_sim.copy()
        for n in range(n_max):
            local = random_local_gate(rng)
            psi_sim = local @ (u_sim @ psi_sim)
            psi_ideal = local @ (u_ideal @ psi_ideal)
            fidelities[r, n] = state_fidelity(psi_ideal, psi_sim / np.linalg.norm(psi_sim))

    mean = fidelities.mean(axis=0)
    stderr = fidelities.std(axis=0, ddof=1) / np.sqrt(realizations)
    if n_max < 3 and np.all(np.abs(fidelities - 1.0) < 1e-12):
        raise DomainError("insufficient data: all fidelities are 1 and n_max < 3")
    fbar, fbar_err, residuals = fit_rb_decay(counts, mean)
    return RBResult(
        gate_counts=counts,
        mean_fidelity=mean,
        std_error=stderr,
        fbar=fbar,
        fbar_err=fbar_err,
        residuals=residuals,
        realizations=realizations,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# leakage
# ---------------------------------------------------------------------------


def qubit_subspace_mask(d1: int, d2: int) -> np.ndarray:
    """Boolean mask of the two-qubit computational block inside D1 x D2 levels."""
    occ1, occ2 = np.divmod(np.arange(d1 * d2), d2)
    return (occ1 <= 1) & (occ2 <= 1)


def leakage_population(state: np.ndarray, dims_atoms: tuple[int, int]) -> float:
    """tr[(1 - P_qu) rho] with P_qu the two-qubit computational projector.

    Accepts a pure-state vector or a density matrix over two D-level atoms
    (resonator already excluded). The formula is applied literally, so any
    doubly excited single-atom state |02>, |20>, ... counts as leakage.
    """
    d1, d2 = int(dims_atoms[0]), int(dims_atoms[1])
    mask = qubit_subspace_mask(d1, d2)
    state = np.asarray(state, dtype=np.complex128)
    if state.ndim == 1:
        if state.size != d1 * d2:
            raise DomainError("state length does not match the atom dimensions")
        probs = np.abs(state) ** 2
        return float(probs.sum() - probs[mask].sum())
    if state.shape != (d1 * d2, d1 * d2):
        raise DomainError("density matrix shape does not match the atom dimensions")
    diag = np.real(np.diag(state))
    return float(diag.sum() - diag[mask].sum())


def leakage_series(
    p: SystemParams,
    n_gates: int,
    realizations: int,
    seed: int,
) -> np.ndarray:
    """Mean leakage after 0..n_gates swap stages of the benchmarking circuit.

    The circuit runs on the full atom ladders (resonator-vacuum block of the
    exact propagator, local gates identity on leakage levels); the state is
    renormalized before evaluating the leakage projector, so the reported
    numbers are populations of the normalized two-atom state.
    """
    from .fockalg import expm_unitary

    d1, d2, _ = p.dims.dims
    if min(d1, d2) < 4:
        raise DomainError("leakage circuits need atoms with at least 4 levels")
    eff = effective_params(p)
    tau = swap_time(eff.g_eff)
    u_full = expm_unitary(build_H0(p) + build_Hcpg(p), tau)
    block = project_to_atom_block(u_full)
    s1, s2 = phase_corrections(eff, tau)
    correction = np.kron(embed_qubit_gate(s1, d1), embed_qubit_gate(s2, d2)).conj().T
    stage = correction @ block

    leak = np.zeros((realizations, n_gates + 1), dtype=np.float64)
    for r in range(realizations):
        rng = np.random.default_rng(np.random.SeedSequence((seed, r)))
        g1, g2 = random_local_pair(rng)
        psi = np.zeros(d1 * d2, dtype=np.complex128)
        psi[0] = 1.0
        psi = np.kron(embed_qubit_gate(g1, d1), embed_qubit_gate(g2, d2)) @ psi
        leak[r, 0] = leakage_population(psi / np.linalg.norm(psi), (d1, d2))
        for n in range(1, n_gates + 1):
            h1, h2 = random_local_pair(rng)
            local = np.kron(embed_qubit_gate(h1, d1), embed_qubit_gate(h2, d2))
            psi = local @ (stage @ psi)
            leak[r, n] = leakage_population(psi / np.linalg.norm(psi), (d1, d2))
    return leak.mean(axis=0)
