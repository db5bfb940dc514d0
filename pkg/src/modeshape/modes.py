"""Motional-mode parameter sets.

A :class:`ModeSpec` collects the mode frequencies, the Lamb-Dicke matrix and
optional per-mode detunings for an N-ion chain.  Frequencies are stored as
angular values (rad/s); config files use ordinary MHz.  Detunings are kept
separate from the nominal frequencies because the error metric needs both the
assumed and the true frequencies at the same time.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

TWO_PI = 2.0 * np.pi

# Neighbor-mode frequency spacings (kHz) for equidistantly spaced chains in a
# typical surface trap, keyed by chain length.  Used by the solver-scaling
# benchmark to synthesize frequency ladders for N > 3.
CHAIN_SPACINGS_KHZ = {
    3: (96.8, 68.0),
    4: (80.3, 63.1, 43.9),
    5: (62.9, 53.2, 42.8, 29.2),
    6: (53.9, 48.2, 41.6, 34.4, 21.8),
    7: (43.6, 41.5, 38.4, 34.1, 29.2, 15.9),
}


def _as_readonly(a, dtype=float):
    arr = np.asarray(a, dtype=dtype).copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ModeSpec:
    """Immutable mode-parameter set for an ``n_ions``-ion, ``n_modes``-mode chain.

    Attributes
    ----------
    omega : array of angular mode frequencies (rad/s), strictly increasing.
    eta : Lamb-Dicke matrix, shape (n_ions, n_modes), all ``|eta| < 1``.
    delta : per-mode angular detunings (rad/s); zero unless set via
        :func:`with_detuning`.
    """

    n_ions: int
    n_modes: int
    omega: np.ndarray
    eta: np.ndarray
    delta: np.ndarray = field(default=None)

    def __post_init__(self):
        omega = _as_readonly(self.omega)
        eta = _as_readonly(self.eta)
        delta = (
            _as_readonly(np.zeros(self.n_modes))
            if self.delta is None
            else _as_readonly(self.delta)
        )
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "delta", delta)

        if self.n_ions < 1 or self.n_modes < 1:
            raise ValidationError("n_ions and n_modes must be positive")
        if omega.shape != (self.n_modes,):
            raise ValidationError(
                f"omega has length {omega.shape[0]}, expected n_modes={self.n_modes}"
            )
        if np.any(omega <= 0):
            raise ValidationError("omega: all mode frequencies must be positive")
        if self.n_modes > 1 and np.any(np.diff(omega) <= 0):
            raise ValidationError("omega: non-increasing frequencies")
        if eta.shape != (self.n_ions, self.n_modes):
            raise ValidationError(
                f"eta has shape {eta.shape}, expected "
                f"(n_ions, n_modes)=({self.n_ions}, {self.n_modes})"
            )
        if np.any(np.abs(eta) >= 1):
            raise ValidationError("eta: |eta| must be < 1 (Lamb-Dicke regime)")
        if not np.all(np.isfinite(eta)):
            raise ValidationError("eta: entries must be finite")
        if delta.shape != (self.n_modes,):
            raise ValidationError(
                f"delta has length {delta.shape[0]}, expected n_modes={self.n_modes}"
            )

    @property
    def detuned_omega(self) -> np.ndarray:
        """True frequencies ``omega + delta`` seen by the dynamics."""
        return self.omega + self.delta

    @property
    def min_spacing(self) -> float:
        if self.n_modes < 2:
            return np.inf
        return float(np.min(np.diff(self.omega)))

    def coupled_ion_row(self, ion: int) -> np.ndarray:
        """Lamb-Dicke row for ``ion``, refusing placeholder (all-zero) rows."""
        if not 0 <= ion < self.n_ions:
            raise ValidationError(f"ion index {ion} out of range [0, {self.n_ions})")
        row = self.eta[ion]
        if not np.any(row != 0.0):
            raise ValidationError(
                f"eta row for ion {ion} is identically zero (untrusted placeholder); "
                "simulation requires real Lamb-Dicke parameters"
            )
        return row


def load_mode_spec(source) -> ModeSpec:
    """Load a :class:`ModeSpec` from a JSON document.

    ``source`` may be a path, an open file, or an already-parsed dict with
    keys ``frequencies_mhz``, ``eta``, ``n_ions``, ``n_modes``.  Frequencies
    are converted to angular units (x 2*pi*1e6).
    """
    if isinstance(source, dict):
        doc = source
    elif hasattr(source, "read"):
        doc = json.load(source)
    else:
        with open(source, "r", encoding="utf-8") as fh:
            doc = json.load(fh)

    for key in ("frequencies_mhz", "eta", "n_ions", "n_modes"):
        if key not in doc:
            raise ValidationError(f"mode-spec document missing field '{key}'")

    freqs = np.asarray(doc["frequencies_mhz"], dtype=float)
    if freqs.ndim != 1:
        raise ValidationError("frequencies_mhz must be a flat list")
    omega = TWO_PI * 1e6 * freqs
    return ModeSpec(
        n_ions=int(doc["n_ions"]),
        n_modes=int(doc["n_modes"]),
        omega=omega,
        eta=np.asarray(doc["eta"], dtype=float),
    )


def mode_spec_to_dict(spec: ModeSpec) -> dict:
    """Serialize to the JSON document layout accepted by :func:`load_mode_spec`.

    Detunings are transient (applied downstream) and are not serialized.
    """
    return {
        "frequencies_mhz": (spec.omega / (TWO_PI * 1e6)).tolist(),
        "eta": spec.eta.tolist(),
        "n_ions": spec.n_ions,
        "n_modes": spec.n_modes,
    }


def save_mode_spec(spec: ModeSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(mode_spec_to_dict(spec), fh, indent=2)
        fh.write("\n")


def synthesize_chain(spacings, anchor: float) -> ModeSpec:
    """Build a frequency-only chain from neighbor spacings.

    ``omega[0] = anchor`` and ``omega[p+1] = omega[p] + spacings[p]`` (all in
    rad/s).  The Lamb-Dicke matrix is filled with placeholder zeros: the pulse
    solver never reads eta, while the simulator refuses such specs.
    """
    spacings = np.asarray(spacings, dtype=float)
    if anchor <= 0:
        raise ValidationError("anchor frequency must be positive")
    if spacings.ndim != 1:
        raise ValidationError("spacings must be a flat list")
    if np.any(spacings <= 0):
        raise ValidationError("spacings: all mode-frequency gaps must be positive")
    n = spacings.size + 1
    omega = anchor + np.concatenate([[0.0], np.cumsum(spacings)])
    return ModeSpec(n_ions=n, n_modes=n, omega=omega, eta=np.zeros((n, n)))


def with_detuning(spec: ModeSpec, delta) -> ModeSpec:
    """Return a copy with detunings added (composes additively).

    ``delta`` is either a single uniform angular detuning applied to every
    mode or a per-mode list.  Detunings large relative to the mode spacing
    put the perturbative error model in doubt, so those trigger a warning.
    """
    delta = np.asarray(delta, dtype=float)
    if delta.ndim == 0:
        delta = np.full(spec.n_modes, float(delta))
    if delta.shape != (spec.n_modes,):
        raise ValidationError(
            f"delta has length {delta.shape[0]}, expected n_modes={spec.n_modes}"
        )
    total = spec.delta + delta
    if np.any(np.abs(total) > 0.1 * spec.min_spacing):
        warnings.warn(
            "detuning exceeds 10% of the minimum mode spacing; "
            "results may leave the small-detuning regime",
            stacklevel=2,
        )
    return ModeSpec(
        n_ions=spec.n_ions,
        n_modes=spec.n_modes,
        omega=spec.omega,
        eta=spec.eta,
        delta=total,
    )
