"""Benchmark the compiled propagation kernel against the numpy fallback.

Propagates a shaped pulse on the three-ion reference chain under the
multi-mode model with both backends, reports steps/second and the speedup,
and checks that the final states agree.

Usage: python benchmarks/compare_backends.py [--tau-us 500] [--n-max 4]
"""

import argparse
import time

import numpy as np

import modeshape as ms
from modeshape import _kernels
from modeshape._kernels import _propagate_py
from modeshape.dynamics import DEFAULT_DT, SimConfig, _drive_grid, _scatter_structure, _sim_modes


def run(tau_us: float, n_max: int, repeats: int) -> None:
    chain = ms.three_ion_chain()
    tau = tau_us * 1e-6
    sol = ms.solve_pulse(ms.ShapeRequest(spec=chain, target=2, tau=tau, alpha=1.0))
    cfg = SimConfig(model="multi_mode", n_max=n_max, target=2, ion=2)
    etas, omegas = _sim_modes(chain, cfg)
    src, dst, amp, nnz, dim = _scatter_structure(len(etas), cfg.n_max + 1)
    nsteps = int(np.ceil(tau / DEFAULT_DT))
    u = _drive_grid(sol.pulse, etas, omegas, nsteps)
    dt = tau / nsteps
    print(f"state dim {dim}, {nsteps} RK4 steps (dt = {dt * 1e9:.1f} ns)")

    backends = [("python", _propagate_py.rk4_propagate)]
    if _kernels.compiled is not None:
        backends.insert(0, ("cython", _kernels.compiled.rk4_propagate))
    else:
        print("compiled kernel unavailable; timing the fallback only")

    results = {}
    for name, kernel in backends:
        best = np.inf
        for _ in range(repeats):
            psi = np.zeros(dim, dtype=complex)
            psi[0] = 1.0
            start = time.perf_counter()
            kernel(psi, u, src, dst, amp, nnz, dt, nsteps)
            best = min(best, time.perf_counter() - start)
        results[name] = (best, psi)
        print(f"{name:>7s}: {best * 1e3:8.1f} ms  ({nsteps / best:,.0f} steps/s)")

    if len(results) == 2:
        t_c, psi_c = results["cython"]
        t_p, psi_p = results["python"]
        dev = float(np.max(np.abs(psi_c - psi_p)))
        print(f"speedup: {t_p / t_c:.1f}x, max state deviation {dev:.2e}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tau-us", type=float, default=500.0)
    ap.add_argument("--n-max", type=int, default=4)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    run(args.tau_us, args.n_max, args.repeats)
