"""Propagation-kernel backend selection.

The compiled Cython kernel is preferred; the numpy implementation is the
drop-in fallback when the extension is unavailable (or when the environment
variable ``MODESHAPE_PURE_PYTHON=1`` forces it, e.g. for benchmarking).
Both expose ``rk4_propagate`` with an identical contract.
"""

import os

from . import _propagate_py

compiled = None
if os.environ.get("MODESHAPE_PURE_PYTHON", "") != "1":
    try:
        from . import _propagate_cy as compiled
    except ImportError:
        compiled = None

if compiled is not None:
    rk4_propagate = compiled.rk4_propagate
    BACKEND = "cython"
else:
    rk4_propagate = _propagate_py.rk4_propagate
    BACKEND = "python"
