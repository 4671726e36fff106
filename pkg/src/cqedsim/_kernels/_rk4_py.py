"""Pure-numpy RK4 stepping kernels.

Reference implementation of the same contract as the compiled extension
``_rk4_cy``: fixed-step RK4 for i dpsi/dt = H(t) psi with

    H(t) = static + sum_j [ c_j(t) M_j + conj(c_j(t)) M_j^dag ],

where the complex coefficients are pre-sampled on the half-step grid
(index 2*i is step i's left edge, 2*i + 1 its midpoint). All arrays are
C-contiguous complex128; ``psi``/``u`` are updated in place.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def _apply_h(static, mats, dags, coeffs, h_idx, v):
    """H(t_h) @ v for a vector or matrix right-hand side."""
    y = static @ v
    for j in range(mats.shape[0]):
        c = coeffs[j, h_idx]
        y += c * (mats[j] @ v) + np.conj(c) * (dags[j] @ v)
    return y


def rk4_state(
    static,
    mats,
    dags,
    coeffs,
    psi,
    dt,
    n_steps,
    store_stride,
    out_states,
    renormalize,
    abort_drift,
):
    """Advance ``psi`` by ``n_steps`` steps of size ``dt``.

    Stores the state after every ``store_stride`` steps into ``out_states``.
    Returns (max per-step norm drift, status); status 1 means the drift
    guard tripped and integration stopped early.
    """
    a_half, a_full = -0.5j * dt, -1.0j * dt
    b_edge, b_mid = -1.0j * dt / 6.0, -1.0j * dt / 3.0
    max_drift = 0.0
    prev_norm = 1.0
    k_store = 0
    for i in range(int(n_steps)):
        h0 = 2 * i
        y1 = _apply_h(static, mats, dags, coeffs, h0, psi)
        y2 = _apply_h(static, mats, dags, coeffs, h0 + 1, psi + a_half * y1)
        y3 = _apply_h(static, mats, dags, coeffs, h0 + 1, psi + a_half * y2)
        y4 = _apply_h(static, mats, dags, coeffs, h0 + 2, psi + a_full * y3)
        psi += b_edge * (y1 + y4) + b_mid * (y2 + y3)
        norm = float(np.linalg.norm(psi))
        drift = abs(norm / prev_norm - 1.0)
        if drift > max_drift:
            max_drift = drift
        if drift > abort_drift:
            return max_drift, 1
        if renormalize:
            psi *= 1.0 / norm
        else:
            prev_norm = norm
        if (i + 1) % store_stride == 0:
            out_states[k_store] = psi
            k_store += 1
    return max_drift, 0


def rk4_propagator(static, mats, dags, coeffs, u, dt, n_steps):
    """Advance the propagator ``u`` (dU/dt = -i H(t) U) by ``n_steps`` steps."""
    a_half, a_full = -0.5j * dt, -1.0j * dt
    b_edge, b_mid = -1.0j * dt / 6.0, -1.0j * dt / 3.0
    for i in range(int(n_steps)):
        h0 = 2 * i
        y1 = _apply_h(static, mats, dags, coeffs, h0, u)
        y2 = _apply_h(static, mats, dags, coeffs, h0 + 1, u + a_half * y1)
        y3 = _apply_h(static, mats, dags, coeffs, h0 + 1, u + a_half * y2)
        y4 = _apply_h(static, mats, dags, coeffs, h0 + 2, u + a_full * y3)
        u += b_edge * (y1 + y4) + b_mid * (y2 + y3)
    return 0


def rk4_scalar(omega, drive, xi0, dt, n_steps, store_stride, out):
    """RK4 for the complex scalar ODE i dxi/dt = omega xi - s(t).

    ``drive`` holds s(t) on the half-step grid; stores xi after every
    ``store_stride`` steps into ``out`` and returns the final value.
    """
    xi = complex(xi0)
    k_store = 0
    for i in range(int(n_steps)):
        h0 = 2 * i
        k1 = -1j * (omega * xi - drive[h0])
        k2 = -1j * (omega * (xi + 0.5 * dt * k1) - drive[h0 + 1])
        k3 = -1j * (omega * (xi + 0.5 * dt * k2) - drive[h0 + 1])
        k4 = -1j * (omega * (xi + dt * k3) - drive[h0 + 2])
        xi += (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        if (i + 1) % store_stride == 0:
            out[k_store] = xi
            k_store += 1
    return xi
