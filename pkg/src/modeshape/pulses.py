"""Complex Fourier-series pulses on the 2*pi*n/tau grid.

A pulse is ``g(t) = sum_n A_n exp(-i w_n t)`` with complex coefficients
``A_n`` in rad/s (Rabi-frequency units).  Solved pulses always live on the
integer grid ``w_n = 2*pi*n/tau``; single-tone square pulses may sit off the
grid so that exactly resonant drives are representable at any duration.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleBasisError, ValidationError
from .modes import TWO_PI, ModeSpec

# Default margin around the mode band when selecting basis frequencies.
DEFAULT_WINDOW = TWO_PI * 50e3


def _freqs_from_indices(indices, tau):
    return TWO_PI * np.asarray(indices, dtype=float) / tau


@dataclass(frozen=True)
class Pulse:
    """Immutable pulse value.

    ``indices`` is the integer frequency grid for on-grid pulses and ``None``
    for off-grid tones; ``freqs`` always holds the actual angular tone
    frequencies (rad/s).
    """

    tau: float
    coeffs: np.ndarray
    indices: np.ndarray | None = None
    freqs: np.ndarray | None = None

    def __post_init__(self):
        if self.tau <= 0:
            raise ValidationError("tau must be positive")
        coeffs = np.asarray(self.coeffs, dtype=complex).copy()
        if coeffs.ndim != 1 or coeffs.size == 0:
            raise ValidationError("coeffs must be a nonempty flat list")
        if not np.all(np.isfinite(coeffs)):
            raise ValidationError("coeffs must be finite")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

        if self.indices is not None:
            idx = np.asarray(self.indices, dtype=np.int64).copy()
            if idx.shape != coeffs.shape:
                raise ValidationError("indices and coeffs must have equal length")
            if idx.size > 1 and np.any(np.diff(idx) <= 0):
                raise ValidationError("indices must be strictly increasing")
            idx.setflags(write=False)
            object.__setattr__(self, "indices", idx)
            freqs = _freqs_from_indices(idx, self.tau)
        else:
            if self.freqs is None:
                raise ValidationError("off-grid pulse needs explicit freqs")
            freqs = np.asarray(self.freqs, dtype=float).copy()
            if freqs.shape != coeffs.shape:
                raise ValidationError("freqs and coeffs must have equal length")
        freqs.setflags(write=False)
        object.__setattr__(self, "freqs", freqs)

    @property
    def on_grid(self) -> bool:
        return self.indices is not None


def square_pulse(amplitude: float, drive: float, phase: float, tau: float) -> Pulse:
    """Single-tone pulse ``g(t) = amplitude * exp(-i(drive*t + phase))``.

    Snaps to the integer grid when the drive frequency is commensurate with
    the duration; otherwise returns an off-grid tone that the Magnus kernels
    and the simulator evaluate exactly.
    """
    if drive <= 0:
        raise ValidationError("drive frequency must be positive")
    if tau <= 0:
        raise ValidationError("tau must be positive")
    coeff = amplitude * np.exp(-1j * phase)
    n_exact = drive * tau / TWO_PI
    n_round = np.round(n_exact)
    if abs(n_exact - n_round) <= 1e-9 * max(1.0, abs(n_exact)):
        return Pulse(tau=tau, coeffs=[coeff], indices=[int(n_round)])
    return Pulse(tau=tau, coeffs=[coeff], freqs=[drive])


def evaluate(pulse: Pulse, t):
    """Evaluate ``g(t)``; ``t`` may be a scalar or an array in ``[0, tau]``."""
    t_arr = np.asarray(t, dtype=float)
    slack = 1e-12 * pulse.tau
    if np.any(t_arr < -slack) or np.any(t_arr > pulse.tau + slack):
        raise ValidationError(f"t outside pulse domain [0, {pulse.tau}]")
    flat = t_arr.ravel()
    out = np.empty(flat.size, dtype=complex)
    # chunk the (times x tones) phase table so wide pulses on dense time
    # grids stay within a bounded working set
    step = max(1, 2_000_000 // max(1, pulse.freqs.size))
    for k in range(0, flat.size, step):
        block = flat[k : k + step]
        out[k : k + step] = (
            np.exp(-1j * np.outer(block, pulse.freqs)) @ pulse.coeffs
        )
    if t_arr.ndim == 0:
        return complex(out[0])
    return out.reshape(t_arr.shape)


def average_rabi(pulse: Pulse) -> float:
    """Root-sum-square of coefficient moduli, ``sqrt(sum |A_n|^2)``."""
    return float(np.linalg.norm(pulse.coeffs))


@dataclass(frozen=True)
class BasisGrid:
    """Integer frequency indices selected for pulse shaping at duration tau."""

    tau: float
    indices: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).copy()
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    @property
    def frequencies(self) -> np.ndarray:
        """Angular frequencies 2*pi*n/tau of the basis elements."""
        return _freqs_from_indices(self.indices, self.tau)

    @property
    def size(self) -> int:
        return int(self.indices.size)


def build_basis(
    tau: float,
    spec: ModeSpec,
    window: float = DEFAULT_WINDOW,
    min_size: int | None = None,
) -> BasisGrid:
    """All integer indices with ``2*pi*n/tau`` inside the mode band +- window.

    When ``min_size`` is given and the grid is too small for that many
    constraints, raises with an estimate of the minimum feasible duration.
    """
    if tau <= 0:
        raise ValidationError("tau must be positive")
    if window < 0:
        raise ValidationError("window must be non-negative")
    w_lo = spec.omega[0] - window
    w_hi = spec.omega[-1] + window
    n_lo = int(np.ceil(w_lo * tau / TWO_PI - 1e-9))
    n_hi = int(np.floor(w_hi * tau / TWO_PI + 1e-9))
    count = n_hi - n_lo + 1
    if min_size is not None and count < min_size:
        # count(tau) >= (w_hi - w_lo) * tau / (2 pi) - 1, so this tau is safe.
        min_tau = (min_size + 1) * TWO_PI / (w_hi - w_lo)
        raise InfeasibleBasisError(
            f"basis has {max(count, 0)} elements inside the window but "
            f"{min_size} are required; increase tau to >= {min_tau * 1e6:.1f} us "
            "or widen the window",
            min_tau=min_tau,
        )
    if count <= 0:
        raise InfeasibleBasisError(
            "no Fourier index falls inside the requested window", min_tau=None
        )
    return BasisGrid(tau=tau, indices=np.arange(n_lo, n_hi + 1, dtype=np.int64))


def save_pulse(pulse: Pulse, path) -> None:
    """Write the pulse JSON file: tau in microseconds, coefficients as [re, im]."""
    doc = {
        "tau_us": pulse.tau * 1e6,
        "coeffs": [[c.real, c.imag] for c in pulse.coeffs],
    }
    if pulse.on_grid:
        doc["indices"] = [int(n) for n in pulse.indices]
    else:
        doc["freqs_hz"] = (pulse.freqs / TWO_PI).tolist()
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_pulse(source) -> Pulse:
    if isinstance(source, dict):
        doc = source
    elif hasattr(source, "read"):
        doc = json.load(source)
    else:
        with open(source, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    for key in ("tau_us", "coeffs"):
        if key not in doc:
            raise ValidationError(f"pulse document missing field '{key}'")
    tau = float(doc["tau_us"]) * 1e-6
    coeffs = np.array([complex(re, im) for re, im in doc["coeffs"]])
    if "indices" in doc:
        return Pulse(tau=tau, coeffs=coeffs, indices=doc["indices"])
    if "freqs_hz" in doc:
        freqs = TWO_PI * np.asarray(doc["freqs_hz"], dtype=float)
        return Pulse(tau=tau, coeffs=coeffs, freqs=freqs)
    raise ValidationError("pulse document needs either 'indices' or 'freqs_hz'")


def time_series_csv(pulse: Pulse, path, n_samples: int = 2000) -> None:
    """CSV of g(t) samples with columns (t_us, re_g, im_g)."""
    t = np.linspace(0.0, pulse.tau, n_samples)
    g = evaluate(pulse, t)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t_us,re_g,im_g\n")
        for ti, gi in zip(t, g):
            fh.write(f"{ti * 1e6:.17g},{gi.real:.17g},{gi.imag:.17g}\n")


def spectrum_csv(pulse: Pulse, path) -> None:
    """CSV of the coefficient spectrum with columns (f_n_hz, abs_A, arg_A)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("f_n_hz,abs_A,arg_A\n")
        for f, c in zip(pulse.freqs / TWO_PI, pulse.coeffs):
            fh.write(f"{f:.17g},{abs(c):.17g},{np.angle(c):.17g}\n")
