import numpy as np
import pytest

from modeshape import ModeSpec, three_ion_chain


@pytest.fixture(scope="session")
def chain() -> ModeSpec:
    """The three-ion reference chain probed on ion 2, target mode 2."""
    return three_ion_chain()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)


def random_pulse(rng, tau, n_coeffs=5, scale=2000.0, band=(2.90e6, 3.18e6)):
    """Random on-grid pulse with tones inside the mode band."""
    import modeshape as ms

    lo, hi = int(band[0] * tau), int(band[1] * tau)
    idx = np.sort(rng.choice(np.arange(lo, hi), size=n_coeffs, replace=False))
    coeffs = rng.normal(size=n_coeffs) + 1j * rng.normal(size=n_coeffs)
    coeffs *= scale / np.linalg.norm(coeffs)
    return ms.Pulse(tau=tau, coeffs=coeffs, indices=idx)
