"""Device parameters, Hamiltonian builders and closed-form effective-theory results.

Two anharmonic atoms share a single resonator mode. The resonator mediates an
atom-atom interaction; a direct capacitive (parasitic) coupling ``g_p`` adds to
it. A second-order generator transformation removes the atom-resonator
coupling and yields shifted frequencies, the total effective coupling and the
idle (zero-coupling) resonator frequencies implemented below.

Units: public fields are ordinary frequencies in GHz, phases in radians,
times in ns. Operator matrices carry angular units (rad/ns, hbar = 1). The
dimensionless ratios (eta, couplings over detunings) are evaluated directly
in GHz; results are identical in angular units.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import bisect

from .errors import DomainError
from .fockalg import (
    ATOM1,
    ATOM2,
    RESONATOR,
    FockOperator,
    StateVector,
    SubsystemDims,
    annihilation,
    embed,
)
from .timedep import TWO_PI, DriveTerm, TimeDependentH

_DENOM_TOL = 1e-9  # GHz-scale guard for every effective-theory denominator


class DispersiveRegimeWarning(UserWarning):
    """Atom-resonator detuning is not large against the coupling."""


@dataclass(frozen=True)
class SystemParams:
    """All physical constants of the device.

    ``alpha_k`` is stored signed and applied as (alpha/2) n (n - 1), so the
    positive-anharmonicity convention used in the reference figures and the
    physically common negative transmon value are both expressible.
    """

    f_r: float
    f_1: float
    f_2: float
    alpha_1: float = 0.3
    alpha_2: float = 0.3
    g_1: float = 0.08
    g_2: float = 0.08
    g_p: float = 0.0
    dims: SubsystemDims = SubsystemDims()

    def __post_init__(self) -> None:
        for name in ("f_r", "f_1", "f_2"):
            if getattr(self, name) <= 0.0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")
        if self.g_1 < 0.0 or self.g_2 < 0.0:
            raise DomainError("atom-resonator couplings g_1, g_2 must be >= 0")
        for k, (f_k, g_k) in enumerate([(self.f_1, self.g_1), (self.f_2, self.g_2)], 1):
            if g_k > 0.0 and abs(self.f_r - f_k) < 5.0 * g_k:
                warnings.warn(
                    f"|f_r - f_{k}| = {abs(self.f_r - f_k):.4f} GHz < 5 g_{k}: "
                    "the dispersive description degrades here",
                    DispersiveRegimeWarning,
                    stacklevel=2,
                )

    def detunings(self) -> tuple[float, float]:
        """(f_r - f_1, f_r - f_2) in GHz."""
        return self.f_r - self.f_1, self.f_r - self.f_2


@dataclass(frozen=True)
class DriveTone:
    """One microwave tone fed to the resonator.

    The envelope is zero outside [t_start, t_stop] and rises/falls with
    cosine ramps of duration ``ramp`` inside the window (``ramp = 0`` gives a
    flat constant-amplitude pulse).
    """

    f_d: float
    amplitude: float
    phi_d: float = 0.0
    t_start: float = 0.0
    t_stop: float = np.inf
    ramp: float = 1.0

    def __post_init__(self) -> None:
        if self.amplitude < 0.0:
            raise DomainError("drive amplitude must be >= 0")
        if self.t_stop <= self.t_start:
            raise DomainError("drive window must have t_stop > t_start")
        if self.ramp < 0.0:
            raise DomainError("ramp time must be >= 0")
        window = self.t_stop - self.t_start
        if np.isfinite(window) and 2.0 * self.ramp > window:
            raise DomainError("two cosine ramps do not fit inside the drive window")

    @property
    def bandwidth(self) -> float:
        """Envelope frequency content (GHz): 1/ramp for ramped pulses."""
        return 0.0 if self.ramp == 0.0 else 1.0 / self.ramp

    def envelope(self, t) -> np.ndarray:
        """Amplitude in GHz at times ``t`` (ns), vectorized."""
        t = np.asarray(t, dtype=np.float64)
        out = np.zeros_like(t)
        inside = (t >= self.t_start) & (t <= self.t_stop)
        out[inside] = self.amplitude
        if self.ramp > 0.0:
            s = t - self.t_start
            rising = inside & (s < self.ramp)
            out[rising] = self.amplitude * 0.5 * (1.0 - np.cos(np.pi * s[rising] / self.ramp))
            if np.isfinite(self.t_stop):
                u = self.t_stop - t
                falling = inside & (u < self.ramp)
                out[falling] = self.amplitude * 0.5 * (
                    1.0 - np.cos(np.pi * u[falling] / self.ramp)
                )
        return out


DriveSet = Sequence[DriveTone]


@dataclass(frozen=True)
class EffectiveParams:
    """Derived quantities of the resonator-eliminated frame (all GHz / ns)."""

    eta_1: float
    eta_2: float
    f_r_shift: float
    f_1_shift: float
    f_2_shift: float
    g_eff: float
    g_res: float
    dt_leak: float


@dataclass(frozen=True)
class ResultantPhasor:
    """Resultant drive seen by one atom: signed amplitude, carrier, phase."""

    amplitude: Callable[[np.ndarray], np.ndarray]
    f: float
    phi: float

    def value(self, t) -> np.ndarray:
        """Complex phasor Omega(t) exp(-i omega t + i phi) in GHz units."""
        t = np.asarray(t, dtype=np.float64)
        return self.amplitude(t) * np.exp(1j * (self.phi - TWO_PI * self.f * t))


# ---------------------------------------------------------------------------
# closed-form effective theory
# ---------------------------------------------------------------------------


def eta_coefficients(p: SystemParams) -> tuple[float, float]:
    """Generator weights that cancel the atom-resonator coupling at second order.

    eta_1 = (g_p g_2 + Delta_2 g_1) / (g_p^2 - Delta_1 Delta_2), and 1 <-> 2.
    Reduces to -g_k / Delta_k when the parasitic coupling vanishes.
    """
    d1, d2 = p.detunings()
    denom = p.g_p**2 - d1 * d2
    if abs(denom) < _DENOM_TOL:
        raise DomainError(
            f"degenerate transformation: g_p^2 - Delta_1 Delta_2 = {denom:.3e} GHz^2"
        )
    eta1 = (p.g_p * p.g_2 + d2 * p.g_1) / denom
    eta2 = (p.g_p * p.g_1 + d1 * p.g_2) / denom
    return eta1, eta2


def g_eff(p: SystemParams) -> float:
    """Total effective atom-atom coupling (GHz), parasitic term included."""
    d1, d2 = p.detunings()
    denom = p.g_p**2 - d1 * d2
    if abs(denom) < _DENOM_TOL:
        raise DomainError(
            f"degenerate transformation: g_p^2 - Delta_1 Delta_2 = {denom:.3e} GHz^2"
        )
    return p.g_p + (p.g_p * (p.g_1**2 + p.g_2**2) + p.g_1 * p.g_2 * (d1 + d2)) / (2.0 * denom)


def g_res(p: SystemParams) -> tuple[float, float]:
    """Residual resonator-mediated coupling and the matching leakage time.

    Returns (g_res in GHz, dt_leak in ns); dt_leak = 1/(4 |g_res|) and is
    reported as inf when the residual coupling vanishes.
    """
    d1, d2 = p.detunings()
    if abs(d1) < _DENOM_TOL or abs(d2) < _DENOM_TOL:
        raise DomainError("resonant atom and resonator: residual coupling is singular")
    value = -p.g_1 * p.g_2 * (d1 + d2) / (2.0 * d1 * d2)
    dt_leak = np.inf if value == 0.0 else 1.0 / (4.0 * abs(value))
    return value, dt_leak


def effective_params(p: SystemParams) -> EffectiveParams:
    """All derived frame quantities in one pass."""
    eta1, eta2 = eta_coefficients(p)
    res, dt_leak = g_res(p)
    return EffectiveParams(
        eta_1=eta1,
        eta_2=eta2,
        f_r_shift=p.f_r - p.g_1 * eta1 - p.g_2 * eta2,
        f_1_shift=p.f_1 + p.g_1 * eta1,
        f_2_shift=p.f_2 + p.g_2 * eta2,
        g_eff=g_eff(p),
        g_res=res,
        dt_leak=dt_leak,
    )


def idle_frequency_degenerate(f_qubit: float, p: SystemParams) -> float:
    """Resonator frequency that cancels the total coupling for equal atoms.

    f_idle = f + [sqrt((2 g_p^2 + g_1^2)(2 g_p^2 + g_2^2)) + g_1 g_2] / (2 g_p);
    only defined for a nonzero parasitic coupling.
    """
    if p.g_p <= 0.0:
        raise DomainError("no idle point: expression diverges for g_p <= 0")
    top = np.sqrt((2.0 * p.g_p**2 + p.g_1**2) * (2.0 * p.g_p**2 + p.g_2**2))
    return float(f_qubit) + (top + p.g_1 * p.g_2) / (2.0 * p.g_p)


def idle_frequency_general(p: SystemParams) -> float:
    """Zero of g_eff(f_r) above both atoms, found by bisection.

    Bracket: [max(f_1, f_2) + 5 g_max, max(f_1, f_2) + 100 g_max]. Raises when
    the coupling does not change sign there (no reachable idle point).
    """
    if p.g_p <= 0.0:
        raise DomainError("no idle point: general idle frequency needs g_p > 0")
    g_max = max(p.g_1, p.g_2)
    if g_max <= 0.0:
        raise DomainError("no idle point: at least one atom-resonator coupling required")
    f_top = max(p.f_1, p.f_2)
    lo, hi = f_top + 5.0 * g_max, f_top + 100.0 * g_max

    def coupling(f_r: float) -> float:
        return g_eff(replace(p, f_r=f_r))

    c_lo, c_hi = coupling(lo), coupling(hi)
    if c_lo == 0.0:
        return lo
    if c_hi == 0.0:
        return hi
    if np.sign(c_lo) == np.sign(c_hi):
        raise DomainError(
            f"no idle point: g_eff keeps sign {np.sign(c_lo):+.0f} on "
            f"[{lo:.4f}, {hi:.4f}] GHz"
        )
    return float(bisect(coupling, lo, hi, xtol=1e-9))


# ---------------------------------------------------------------------------
# Hamiltonian builders (rad/ns matrices)
# ---------------------------------------------------------------------------


def _ladders(p: SystemParams) -> tuple[FockOperator, FockOperator, FockOperator]:
    a1 = embed(annihilation(p.dims.dims[ATOM1]), ATOM1, p.dims)
    a2 = embed(annihilation(p.dims.dims[ATOM2]), ATOM2, p.dims)
    r = embed(annihilation(p.dims.dims[RESONATOR]), RESONATOR, p.dims)
    return a1, a2, r


def build_H0(p: SystemParams) -> FockOperator:
    """Self-Hamiltonian: diagonal with f_r n_r + sum_k [f_k n_k + (alpha_k/2) n_k (n_k-1)]."""
    occ = p.dims.occupations().astype(np.float64)
    n1, n2, nr = occ[:, ATOM1], occ[:, ATOM2], occ[:, RESONATOR]
    diag = (
        p.f_r * nr
        + p.f_1 * n1
        + p.f_2 * n2
        + 0.5 * p.alpha_1 * n1 * (n1 - 1.0)
        + 0.5 * p.alpha_2 * n2 * (n2 - 1.0)
    )
    return FockOperator(np.diag(TWO_PI * diag).astype(np.complex128), p.dims)


def build_Hcpg(p: SystemParams) -> FockOperator:
    """Atom-resonator hopping plus the direct parasitic atom-atom hopping."""
    a1, a2, r = _ladders(p)
    hop = (
        p.g_1 * (a1.dag().matrix @ r.matrix + a1.matrix @ r.dag().matrix)
        + p.g_2 * (a2.dag().matrix @ r.matrix + a2.matrix @ r.dag().matrix)
        + p.g_p * (a1.dag().matrix @ a2.matrix + a1.matrix @ a2.dag().matrix)
    )
    return FockOperator(TWO_PI * hop, p.dims)


def build_Hdrive(p: SystemParams, tones: DriveSet, t: float) -> FockOperator:
    """Resonator drive at time t: sum_k eps_k(t) (r^dag e^{-i omega_k t + i phi_k} + h.c.)."""
    _, _, r = _ladders(p)
    rdag = r.dag().matrix
    out = np.zeros((p.dims.total, p.dims.total), dtype=np.complex128)
    for tone in tones:
        eps = float(tone.envelope(t))
        if eps == 0.0:
            continue
        c = TWO_PI * eps * np.exp(1j * (tone.phi_d - TWO_PI * tone.f_d * float(t)))
        out += c * rdag + np.conj(c) * r.matrix
    return FockOperator(out, p.dims)


def _rate_per_unit_drive(p: SystemParams, tone: DriveTone, atom: int) -> float:
    """-g_k / (f_r - f_d): Rabi rate per unit drive amplitude (dimensionless)."""
    detuning = p.f_r - tone.f_d
    if abs(detuning) < _DENOM_TOL:
        raise DomainError(
            f"singular detuning: drive at f_d = {tone.f_d} GHz hits the resonator"
        )
    g_k = p.g_1 if atom == ATOM1 else p.g_2
    return -g_k / detuning


def rabi_rate(p: SystemParams, tone: DriveTone, atom: int) -> float:
    """Peak semiclassical Rabi rate Omega = -g_k eps0 / (f_r - f_d), in GHz (signed)."""
    return _rate_per_unit_drive(p, tone, atom) * tone.amplitude


def build_semiclassical_drive(p: SystemParams, tones: DriveSet, t: float) -> FockOperator:
    """Displaced-frame drive acting on the atoms only, evaluated at time t."""
    a1, a2, _ = _ladders(p)
    out = np.zeros((p.dims.total, p.dims.total), dtype=np.complex128)
    for atom, a in ((ATOM1, a1), (ATOM2, a2)):
        adag = a.dag().matrix
        for tone in tones:
            scale = _rate_per_unit_drive(p, tone, atom)
            omega = TWO_PI * float(tone.envelope(t)) * scale
            if omega == 0.0:
                continue
            c = omega * np.exp(1j * (tone.phi_d - TWO_PI * tone.f_d * float(t)))
            out += c * adag + np.conj(c) * a.matrix
    return FockOperator(out, p.dims)


def effective_hamiltonian(p: SystemParams) -> FockOperator:
    """Resonator-eliminated Hamiltonian with shifted frequencies and g_eff hopping.

    The anharmonicity-induced correction term (atoms exchanging excitations
    with the resonator via double occupation) is deliberately not included;
    use :func:`anharmonic_correction_norm` to check that its neglect is
    justified for a given state.
    """
    eff = effective_params(p)
    shifted = replace(
        p, f_r=eff.f_r_shift, f_1=eff.f_1_shift, f_2=eff.f_2_shift, g_1=0.0, g_2=0.0, g_p=0.0
    )
    a1, a2, _ = _ladders(p)
    hop = eff.g_eff * (a1.dag().matrix @ a2.matrix + a1.matrix @ a2.dag().matrix)
    return FockOperator(build_H0(shifted).matrix + TWO_PI * hop, p.dims)


def bch_generator(p: SystemParams) -> FockOperator:
    """Anti-Hermitian generator S = eta_1 (a1^dag r - a1 r^dag) + eta_2 (...)."""
    eta1, eta2 = eta_coefficients(p)
    a1, a2, r = _ladders(p)
    s = eta1 * (a1.dag().matrix @ r.matrix - a1.matrix @ r.dag().matrix) + eta2 * (
        a2.dag().matrix @ r.matrix - a2.matrix @ r.dag().matrix
    )
    return FockOperator(s, p.dims)


def anharmonic_correction_norm(p: SystemParams, state: StateVector) -> float:
    """|| [S, H_alpha] |psi> ||: size of the neglected anharmonic correction.

    Small values certify the low-excitation condition under which
    :func:`effective_hamiltonian` drops the correction term.
    """
    eta1, eta2 = eta_coefficients(p)
    a1, a2, r = _ladders(p)
    out = np.zeros((p.dims.total, p.dims.total), dtype=np.complex128)
    for eta_k, alpha_k, a in ((eta1, p.alpha_1, a1), (eta2, p.alpha_2, a2)):
        ad = a.dag().matrix
        term = ad @ ad @ a.matrix @ r.matrix + ad @ a.matrix @ a.matrix @ r.dag().matrix
        out += -TWO_PI * alpha_k * eta_k * term
    return float(np.linalg.norm(out @ state.amplitudes))


# ---------------------------------------------------------------------------
# resultant drive phasor and two-level frames
# ---------------------------------------------------------------------------


def _common_carrier(tones: DriveSet) -> tuple[float, float]:
    if not tones:
        raise DomainError("resultant phasor needs at least one tone")
    f_d = tones[0].f_d
    if any(abs(t.f_d - f_d) > 1e-12 for t in tones):
        raise DomainError(
            "resultant phasor is defined for tones sharing one carrier frequency"
        )
    return f_d, tones[0].phi_d


def resultant_phasor(p: SystemParams, tones: DriveSet) -> tuple[ResultantPhasor, ResultantPhasor]:
    """Phasor sum of all tones as seen by each atom.

    For a single tone the resultant frequency and phase equal the tone's
    exactly; both atoms see the same carrier, which is the crosstalk
    mechanism this model captures.
    """
    f_d, _ = _common_carrier(tones)
    out = []
    for atom in (ATOM1, ATOM2):
        scales = [_rate_per_unit_drive(p, tone, atom) for tone in tones]
        if len(tones) == 1:
            tone, scale = tones[0], scales[0]
            amp = lambda t, _tone=tone, _s=scale: _s * _tone.envelope(t)
            out.append(ResultantPhasor(amplitude=amp, f=f_d, phi=tone.phi_d))
            continue

        def complex_sum(t, _tones=tuple(tones), _scales=tuple(scales)) -> np.ndarray:
            acc = np.zeros(np.shape(np.asarray(t)), dtype=np.complex128)
            for tone, scale in zip(_tones, _scales):
                acc = acc + scale * tone.envelope(t) * np.exp(1j * tone.phi_d)
            return acc

        t0 = min(t.t_start for t in tones)
        t1 = max(min(t.t_stop, t0 + 1e3) for t in tones)
        probe = np.linspace(t0, t1, 257)
        values = complex_sum(probe)
        peak = int(np.argmax(np.abs(values)))
        if abs(values[peak]) < 1e-300:
            out.append(ResultantPhasor(amplitude=lambda t: np.zeros_like(np.asarray(t, float)), f=f_d, phi=0.0))
            continue
        phi = float(np.angle(values[peak]))
        amp = lambda t, _phi=phi, _cs=complex_sum: np.real(_cs(t) * np.exp(-1j * _phi))
        out.append(ResultantPhasor(amplitude=amp, f=f_d, phi=phi))
    return out[0], out[1]


_SP = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=np.complex128)  # sigma^+ = |1><0|
_I2 = np.eye(2, dtype=np.complex128)


def _two_level_static(eff: EffectiveParams, f_ref: float) -> np.ndarray:
    """Diagonal + hopping part of the two-level model, frequencies relative to f_ref."""
    d1 = TWO_PI * (eff.f_1_shift - f_ref)
    d2 = TWO_PI * (eff.f_2_shift - f_ref)
    h = np.diag([0.0, d2, d1, d1 + d2]).astype(np.complex128)
    h[1, 2] = h[2, 1] = TWO_PI * eff.g_eff
    return h


def _single_tone(tones: DriveSet) -> DriveTone:
    if len(tones) != 1:
        raise DomainError(
            "the two-level frame is derived for a single drive tone; "
            f"got {len(tones)} tones"
        )
    return tones[0]


def qubit_rotating_frame(p: SystemParams, tones: DriveSet) -> TimeDependentH:
    """Two-level model in the frame rotating at the drive frequency.

    Basis |00>, |01>, |10>, |11> (atom 1 is the first label):
    detuning terms (f_shift_k - f_d) on the excited levels, the g_eff hopping,
    and the envelope-weighted drive on each qubit with the static drive phase.
    Time-independent whenever the envelope is constant.
    """
    tone = _single_tone(tones)
    eff = effective_params(p)
    static = _two_level_static(eff, tone.f_d)
    terms = []
    for atom, sp in ((ATOM1, np.kron(_SP, _I2)), (ATOM2, np.kron(_I2, _SP))):
        scale = TWO_PI * _rate_per_unit_drive(p, tone, atom)
        coeff = (
            lambda t, _s=scale, _tone=tone: _s * _tone.envelope(t) * np.exp(1j * _tone.phi_d)
        )
        terms.append(
            DriveTerm(
                matrix=sp,
                coefficient=coeff,
                max_coeff=abs(scale) * tone.amplitude,
                carrier=tone.bandwidth,
            )
        )
    return TimeDependentH(static=static, terms=tuple(terms))


def qubit_lab_frame(p: SystemParams, tones: DriveSet) -> TimeDependentH:
    """Two-level model before the frame rotation (oscillating drive terms).

    Evolving this and :func:`qubit_rotating_frame` from the same state gives
    identical populations; only phases differ.
    """
    tone = _single_tone(tones)
    eff = effective_params(p)
    static = _two_level_static(eff, 0.0)
    terms = []
    for atom, sp in ((ATOM1, np.kron(_SP, _I2)), (ATOM2, np.kron(_I2, _SP))):
        scale = TWO_PI * _rate_per_unit_drive(p, tone, atom)
        coeff = lambda t, _s=scale, _tone=tone: (
            _s * _tone.envelope(t) * np.exp(1j * (_tone.phi_d - TWO_PI * _tone.f_d * np.asarray(t, np.float64)))
        )
        terms.append(
            DriveTerm(
                matrix=sp,
                coefficient=coeff,
                max_coeff=abs(scale) * tone.amplitude,
                carrier=max(abs(tone.f_d), tone.bandwidth),
            )
        )
    return TimeDependentH(static=static, terms=tuple(terms))
