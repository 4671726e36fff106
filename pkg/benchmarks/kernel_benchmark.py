"""Compare the compiled and pure-numpy RK4 kernels on representative workloads.

Run from the repository root:

    python benchmarks/kernel_benchmark.py

Workloads mirror the hot paths: a driven 125-dimensional lab-frame state
integration, a 4x4 rotating-frame propagator, and the displaced-frame scalar
solver. Both backends integrate the identical pre-sampled coefficients, so
the comparison is stepping cost only.
"""

import time

import numpy as np

from cqedsim._kernels import _rk4_py

try:
    from cqedsim._kernels import _rk4_cy
except ImportError:
    _rk4_cy = None


def _state_problem(dim: int, n_steps: int):
    rng = np.random.default_rng(7)
    h = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = 0.02 * (h + h.conj().T)
    mats = 0.01 * (rng.normal(size=(1, dim, dim)) + 1j * rng.normal(size=(1, dim, dim)))
    dags = np.ascontiguousarray(mats.conj().transpose(0, 2, 1))
    phases = np.linspace(0.0, 40.0, 2 * n_steps + 1)
    coeffs = np.ascontiguousarray(0.02 * np.exp(1j * phases))[None, :].copy()
    psi = np.zeros(dim, dtype=complex)
    psi[0] = 1.0
    return h, mats, dags, coeffs, psi


def bench_state(module, dim: int, n_steps: int) -> float:
    h, mats, dags, coeffs, psi = _state_problem(dim, n_steps)
    out = np.empty((1, dim), dtype=complex)
    start = time.perf_counter()
    module.rk4_state(h, mats, dags, coeffs, psi, 2.5e-4, n_steps, n_steps, out, True, 1e-4)
    return time.perf_counter() - start


def bench_propagator(module, dim: int, n_steps: int) -> float:
    h, mats, dags, coeffs, _ = _state_problem(dim, n_steps)
    u = np.eye(dim, dtype=complex)
    start = time.perf_counter()
    module.rk4_propagator(h, mats, dags, coeffs, u, 2.5e-4, n_steps)
    return time.perf_counter() - start


def bench_scalar(module, n_steps: int) -> float:
    drive = np.ascontiguousarray(0.3 * np.exp(1j * np.linspace(0.0, 50.0, 2 * n_steps + 1)))
    out = np.empty(1, dtype=complex)
    start = time.perf_counter()
    module.rk4_scalar(4.0, drive, 0.0, 1e-3, n_steps, n_steps, out)
    return time.perf_counter() - start


def main() -> None:
    if _rk4_cy is None:
        print("compiled kernel not built; only the numpy backend is available")
        return
    rows = [
        ("state D=125, 1 drive term", bench_state, {"dim": 125, "n_steps": 20000}),
        ("state D=4,   1 drive term", bench_state, {"dim": 4, "n_steps": 200000}),
        ("propagator D=125", bench_propagator, {"dim": 125, "n_steps": 600}),
        ("propagator D=4", bench_propagator, {"dim": 4, "n_steps": 200000}),
        ("scalar xi solver", bench_scalar, {"n_steps": 2000000}),
    ]
    print(f"{'workload':<28} {'cython':>10} {'python':>10} {'speedup':>9}")
    for label, fn, kwargs in rows:
        t_cy = fn(_rk4_cy, **kwargs)
        t_py = fn(_rk4_py, **kwargs)
        steps = kwargs["n_steps"]
        print(
            f"{label:<28} {t_cy:>8.3f} s {t_py:>8.3f} s {t_py / t_cy:>8.1f}x"
            f"   ({1e6 * t_cy / steps:.2f} us/step compiled)"
        )


if __name__ == "__main__":
    main()
