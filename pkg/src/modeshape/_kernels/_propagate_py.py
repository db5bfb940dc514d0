"""Pure-Python (numpy) reference implementation of the RK4 propagation kernel.

Same contract as the compiled kernel: integrate

    dpsi/dt = sum_p [ u_p(t) B_p - conj(u_p(t)) B_p^H ] psi

where each coupling operator B_p is given in padded scatter form (entry i of
operator p maps ``out[dst[p, i]] += amp[p, i] * psi[src[p, i]]`` for
``i < nnz[p]``) and ``u[p, k]`` samples the complex drive coefficient of
operator p on the half-step grid t_k = k*dt/2.
"""

import numpy as np


def rk4_propagate(psi, u, src, dst, amp, nnz, dt, nsteps):
    """Advance ``psi`` in place over ``nsteps`` RK4 steps; returns ``psi``.

    Within one operator the source and destination index lists are
    duplicate-free, so fancy-indexed compound assignment is safe.
    """
    n_ops = u.shape[0]
    srcs = [src[p, : nnz[p]] for p in range(n_ops)]
    dsts = [dst[p, : nnz[p]] for p in range(n_ops)]
    amps = [amp[p, : nnz[p]] for p in range(n_ops)]

    def rhs(grid_idx, x, out):
        out[:] = 0.0
        for p in range(n_ops):
            c = u[p, grid_idx]
            out[dsts[p]] += (c * amps[p]) * x[srcs[p]]
            out[srcs[p]] -= (c.conjugate() * amps[p]) * x[dsts[p]]
        return out

    d = psi.shape[0]
    k1 = np.empty(d, dtype=complex)
    k2 = np.empty(d, dtype=complex)
    k3 = np.empty(d, dtype=complex)
    k4 = np.empty(d, dtype=complex)
    tmp = np.empty(d, dtype=complex)

    half = 0.5 * dt
    for step in range(nsteps):
        g = 2 * step
        rhs(g, psi, k1)
        np.multiply(k1, half, out=tmp)
        tmp += psi
        rhs(g + 1, tmp, k2)
        np.multiply(k2, half, out=tmp)
        tmp += psi
        rhs(g + 1, tmp, k3)
        np.multiply(k3, dt, out=tmp)
        tmp += psi
        rhs(g + 2, tmp, k4)
        k1 += k4
        k2 += k3
        psi += (dt / 6.0) * k1 + (dt / 3.0) * k2
    return psi
