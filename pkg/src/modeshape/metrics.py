"""Error metrics and analytic population predictors.

The central quantity is the fractional population error

    E(delta) = |P(delta) - P_model(0)| / P_model(0),

the mismatch between the bright-state population of the full multi-mode
model at the true (detuned) frequencies and the single-mode fitting model at
the assumed ones.  It proxies the relative error a characterization fit
would inherit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import populations_report
from .errors import DegenerateReferenceError, ValidationError
from .modes import ModeSpec, with_detuning
from .pulses import Pulse, average_rabi, square_pulse

_REFERENCE_FLOOR = 1e-12


@dataclass(frozen=True)
class ErrorPoint:
    """One sweep sample: coordinates, both populations, and the error."""

    tau: float
    alpha: float
    delta: float
    moment: int | str
    p_full: float
    p_model: float
    error: float


def fractional_error(p: float, p_ref: float) -> float:
    """|p - p_ref| / p_ref with a hard floor on the reference."""
    if p_ref <= _REFERENCE_FLOOR:
        raise DegenerateReferenceError(
            f"reference population {p_ref:.3e} is at or below the floor "
            f"{_REFERENCE_FLOOR}; the probe produced no usable signal"
        )
    return abs(p - p_ref) / p_ref


def predict_population(eta: float, theta1_abs: float,
                       theta2_diag: float | None = None) -> float:
    """Bright-state population predicted from Magnus integrals.

    First order: sin^2(eta * |theta1|).  When ``theta2_diag`` (the imaginary
    part of the diagonal second-order integral, in the convention where the
    evolution exponent is half the bare ordered double integral) is given,
    the corrected value ``B^2/(B^2+C^2) sin^2 sqrt(B^2+C^2)`` is returned
    with ``B = eta |theta1|`` and ``C = 2 eta^2 theta2_diag``.
    """
    b = eta * theta1_abs
    if abs(b) > np.pi:
        raise ValidationError(
            f"|eta * theta1| = {abs(b):.3f} exceeds pi; outside the "
            "predictor's validity window"
        )
    if theta2_diag is None:
        return float(np.sin(b) ** 2)
    c = 2.0 * eta**2 * theta2_diag
    r2 = b**2 + c**2
    if r2 == 0.0:
        return 0.0
    return float(b**2 / r2 * np.sin(np.sqrt(r2)) ** 2)


def shots_required(alpha: float, delta_eta: float) -> int:
    """Shot count needed to resolve a Lamb-Dicke uncertainty ``delta_eta``.

    Ceiling of (2 * alpha * delta_eta)^-2, with exact integer boundaries
    honored despite float rounding.
    """
    if alpha <= 0 or delta_eta <= 0:
        raise ValidationError("alpha and delta_eta must be positive")
    value = (2.0 * alpha * delta_eta) ** -2
    nearest = round(value)
    if abs(value - nearest) <= 1e-9 * max(1.0, value):
        return int(nearest)
    return int(math.ceil(value))


def square_probe(spec: ModeSpec, target: int, alpha: float, tau: float) -> Pulse:
    """The square-pulse baseline: resonant tone with |theta1| = alpha."""
    return square_pulse(alpha / tau, spec.omega[target], 0.0, tau)


def error_at(
    pulse: Pulse | str,
    spec: ModeSpec,
    delta: float,
    target: int,
    alpha: float | None = None,
    tau: float | None = None,
    moment: int | str = "square",
    n_max: int = 4,
    tolerance: float = 1e-6,
    ion: int | None = None,
) -> ErrorPoint:
    """Assemble one :class:`ErrorPoint` at uniform detuning ``delta``.

    ``pulse`` is either a built pulse or the string ``"square"`` for the
    baseline recipe (requires ``alpha`` and ``tau``).  The multi-mode run
    sees the detuned spec; the single-mode reference stays nominal.
    """
    if isinstance(pulse, str):
        if pulse != "square":
            raise ValidationError(f"unknown pulse recipe '{pulse}'")
        if alpha is None or tau is None:
            raise ValidationError("square recipe needs alpha and tau")
        pulse = square_probe(spec, target, alpha, tau)
        moment = "square"
    detuned = with_detuning(spec, delta) if delta else spec
    rep = populations_report(
        pulse, detuned, n_max=n_max, tolerance=tolerance, target=target, ion=ion
    )
    if alpha is None:
        alpha = average_rabi(pulse) * pulse.tau
    return ErrorPoint(
        tau=pulse.tau,
        alpha=float(alpha),
        delta=float(delta),
        moment=moment,
        p_full=rep.p_full,
        p_model=rep.p_model,
        error=fractional_error(rep.p_full, rep.p_model),
    )
