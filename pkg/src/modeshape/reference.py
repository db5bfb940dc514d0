"""Reference chain used across tests, benchmarks and documentation.

Mode frequencies and Lamb-Dicke parameters of a three-ion chain
(equidistantly spaced ions in a typical surface trap), probed throughout the
benchmark suite on ion 2 targeting the highest-frequency mode.
"""

import numpy as np

from .modes import TWO_PI, ModeSpec

THREE_ION_FREQS_MHZ = (2.9574, 3.0542, 3.1222)

THREE_ION_ETA = (
    (-0.0457, 0.0776, 0.0625),
    (0.0909, -2.77e-6, 0.0629),
    (-0.0457, -0.0776, 0.0625),
)


def three_ion_chain() -> ModeSpec:
    return ModeSpec(
        n_ions=3,
        n_modes=3,
        omega=TWO_PI * 1e6 * np.asarray(THREE_ION_FREQS_MHZ),
        eta=np.asarray(THREE_ION_ETA),
    )


def three_ion_chain_dict() -> dict:
    """The same chain as a JSON-ready config document."""
    return {
        "frequencies_mhz": list(THREE_ION_FREQS_MHZ),
        "eta": [list(row) for row in THREE_ION_ETA],
        "n_ions": 3,
        "n_modes": 3,
    }
