"""Backend equivalence: compiled kernel against the numpy fallback."""

import numpy as np
import pytest

import modeshape as ms
from modeshape import _kernels
from modeshape._kernels import _propagate_py
from modeshape.dynamics import SimConfig, _drive_grid, _scatter_structure, _sim_modes


def _propagation_inputs(chain, nsteps=400):
    sol = ms.solve_pulse(ms.ShapeRequest(spec=chain, target=2, tau=80e-6, alpha=1.0))
    cfg = SimConfig(model="multi_mode", n_max=2, target=2, ion=2)
    etas, omegas = _sim_modes(chain, cfg)
    src, dst, amp, nnz, dim = _scatter_structure(len(etas), cfg.n_max + 1)
    u = _drive_grid(sol.pulse, etas, omegas, nsteps)
    psi = np.zeros(dim, dtype=complex)
    psi[0] = 1.0
    dt = sol.pulse.tau / nsteps
    return psi, u, src, dst, amp, nnz, dt, nsteps


def test_python_kernel_preserves_norm(chain):
    psi, u, src, dst, amp, nnz, dt, nsteps = _propagation_inputs(chain)
    _propagate_py.rk4_propagate(psi, u, src, dst, amp, nnz, dt, nsteps)
    assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.skipif(_kernels.compiled is None, reason="compiled kernel unavailable")
def test_backends_agree(chain):
    psi_c, u, src, dst, amp, nnz, dt, nsteps = _propagation_inputs(chain)
    psi_p = psi_c.copy()
    _kernels.compiled.rk4_propagate(psi_c, u, src, dst, amp, nnz, dt, nsteps)
    _propagate_py.rk4_propagate(psi_p, u, src, dst, amp, nnz, dt, nsteps)
    assert np.allclose(psi_c, psi_p, atol=1e-13)


@pytest.mark.skipif(_kernels.compiled is None, reason="compiled kernel unavailable")
def test_selected_backend_is_compiled():
    assert _kernels.BACKEND == "cython"
    assert _kernels.rk4_propagate is _kernels.compiled.rk4_propagate


def test_force_pure_python_env(chain, monkeypatch):
    # the selector honors MODESHAPE_PURE_PYTHON=1 on (re)import
    import importlib
    import sys

    monkeypatch.setenv("MODESHAPE_PURE_PYTHON", "1")
    saved = {k: sys.modules.pop(k) for k in list(sys.modules)
             if k.startswith("modeshape._kernels")}
    try:
        mod = importlib.import_module("modeshape._kernels")
        assert mod.BACKEND == "python"
    finally:
        for k in list(sys.modules):
            if k.startswith("modeshape._kernels"):
                del sys.modules[k]
        sys.modules.update(saved)
