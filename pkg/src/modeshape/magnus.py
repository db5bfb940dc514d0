"""First- and second-order Magnus integrals of shaped pulses.

Closed forms are built from one primitive,

    phase_integral(w, kappa, tau) = d^kappa/dw^kappa int_0^tau e^{i w t} dt
                                  = i^kappa int_0^tau t^kappa e^{i w t} dt,

evaluated by an integration-by-parts recurrence with a power-series fallback
near w = 0 where the recurrence cancels catastrophically.  Independent
adaptive Gauss-Kronrod quadrature of the defining integrals serves as the
oracle for every closed form.

Convention: the second-order integral is the bare ordered double integral

    theta2 = int_0^tau dt1 int_0^t1 dt2 g(t1) g*(t2) e^{i w_p t1} e^{-i w_p' t2}

with detunings folded into the mode frequencies.  Any global prefactor
cancels in the scaling and nulling uses made of it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import QuadratureError, ValidationError
from .modes import ModeSpec
from .pulses import Pulse, average_rabi, evaluate

# Highest derivative order served by the public API.  The stabilization
# solver uses small orders; the ceiling just keeps recurrences bounded.
DERIVATIVE_ORDER_CEILING = 8

# Switch to the series when the recurrence would amplify cancellation.
_SERIES_THRESHOLD_BASE = 4.0

# Kernel denominators closer to degeneracy than this (in units of 1/tau) are
# evaluated by series expansion; beyond it the explicit form holds 1e-12.
_KERNEL_DEGENERACY_THRESHOLD = 1e-4


def _phase_integral_raw(omega, kappa: int, tau: float):
    """Vectorized phase integral without the public order ceiling."""
    w = np.asarray(omega, dtype=float)
    x = w * tau
    out = np.empty(w.shape, dtype=complex)

    small = np.abs(x) < max(_SERIES_THRESHOLD_BASE, float(kappa))
    if np.any(small):
        ix = 1j * x[small]
        term = np.ones_like(ix)
        acc = term / (kappa + 1)
        for m in range(1, 120):
            term = term * ix / m
            contrib = term / (kappa + m + 1)
            acc = acc + contrib
            if np.all(np.abs(contrib) <= 1e-17 * np.abs(acc)):
                break
        out[small] = acc
    if np.any(~small):
        ix = 1j * x[~small]
        eix = np.exp(ix)
        j = (eix - 1.0) / ix
        for k in range(1, kappa + 1):
            j = (eix - k * j) / ix
        out[~small] = j

    out *= (1j**kappa) * tau ** (kappa + 1)
    if w.ndim == 0:
        return complex(out)
    return out


def phase_integral(delta_omega, kappa: int, tau: float):
    """kappa-th frequency derivative of ``int_0^tau e^{i w t} dt`` at ``w``.

    Accepts a scalar or an array of frequencies; ``kappa`` must not exceed
    :data:`DERIVATIVE_ORDER_CEILING`.
    """
    if tau <= 0:
        raise ValidationError("tau must be positive")
    if kappa < 0:
        raise ValidationError("kappa must be >= 0")
    if kappa > DERIVATIVE_ORDER_CEILING:
        raise ValidationError(
            f"derivative order {kappa} above supported ceiling "
            f"{DERIVATIVE_ORDER_CEILING}"
        )
    return _phase_integral_raw(delta_omega, kappa, tau)


def _mode_offsets(pulse: Pulse, spec: ModeSpec, p: int) -> np.ndarray:
    if not 0 <= p < spec.n_modes:
        raise ValidationError(f"mode index {p} out of range [0, {spec.n_modes})")
    return spec.omega[p] + spec.delta[p] - pulse.freqs


def theta1(pulse: Pulse, spec: ModeSpec, p: int) -> complex:
    """First-order Magnus integral of mode ``p`` (detuning included)."""
    offs = _mode_offsets(pulse, spec, p)
    return complex(pulse.coeffs @ _phase_integral_raw(offs, 0, pulse.tau))


def theta1_derivative(pulse: Pulse, spec: ModeSpec, p: int, kappa: int) -> complex:
    """kappa-th derivative of theta1 with respect to the mode frequency."""
    if kappa < 1:
        raise ValidationError("kappa must be >= 1 for a derivative")
    offs = _mode_offsets(pulse, spec, p)
    return complex(pulse.coeffs @ phase_integral(offs, kappa, pulse.tau))


def _ordered_kernel(a: np.ndarray, b: np.ndarray, tau: float) -> np.ndarray:
    """Matrix T[n, n'] = int_0^tau dt1 e^{i a_n t1} int_0^t1 dt2 e^{-i b_n' t2}.

    Explicit form ``(E(a) - E(a-b)) / (i b)`` with ``E = phase_integral(., 0)``;
    near ``b = 0`` that difference cancels, so a series in ``b`` built from
    higher phase integrals takes over.
    """
    A, B = np.meshgrid(a, b, indexing="ij")
    out = np.empty(A.shape, dtype=complex)

    degenerate = np.abs(B * tau) < _KERNEL_DEGENERACY_THRESHOLD
    ok = ~degenerate
    if np.any(ok):
        ea = _phase_integral_raw(A[ok], 0, tau)
        eab = _phase_integral_raw(A[ok] - B[ok], 0, tau)
        out[ok] = (ea - eab) / (1j * B[ok])
    if np.any(degenerate):
        ad = A[degenerate]
        bd = B[degenerate]
        acc = np.zeros(ad.shape, dtype=complex)
        bpow = np.ones_like(bd)
        fact = 1.0
        for m in range(1, 7):
            fact *= m
            acc = acc + ((-1) ** (m + 1)) * _phase_integral_raw(ad, m, tau) * bpow / fact
            bpow = bpow * bd
        out[degenerate] = -1j * acc
    return out


def theta2(pulse: Pulse, spec: ModeSpec, p: int, p2: int) -> complex:
    """Second-order ordered Magnus integral for the mode pair ``(p, p2)``."""
    a = _mode_offsets(pulse, spec, p)
    b = _mode_offsets(pulse, spec, p2)
    kernel = _ordered_kernel(a, b, pulse.tau)
    return complex(pulse.coeffs @ kernel @ pulse.coeffs.conj())


def detuning_shift(pulse: Pulse, spec: ModeSpec, p: int, delta: float) -> float:
    """|theta1 at mode-p detuning ``delta`` minus theta1 at zero detuning|."""
    offs = spec.omega[p] - pulse.freqs
    base = pulse.coeffs @ _phase_integral_raw(offs, 0, pulse.tau)
    shifted = pulse.coeffs @ _phase_integral_raw(offs + delta, 0, pulse.tau)
    return float(abs(shifted - base))


# ---------------------------------------------------------------------------
# Adaptive Gauss-Kronrod quadrature (the oracle side of the dual route).

_KRONROD_NODES = np.array(
    [
        -0.991455371120813, -0.949107912342759, -0.864864423359769,
        -0.741531185599394, -0.586087235467691, -0.405845151377397,
        -0.207784955007898, 0.0, 0.207784955007898, 0.405845151377397,
        0.586087235467691, 0.741531185599394, 0.864864423359769,
        0.949107912342759, 0.991455371120813,
    ]
)
_KRONROD_WEIGHTS = np.array(
    [
        0.022935322010529, 0.063092092629979, 0.104790010322250,
        0.140653259715525, 0.169004726639267, 0.190350578064785,
        0.204432940075298, 0.209482141084728, 0.204432940075298,
        0.190350578064785, 0.169004726639267, 0.140653259715525,
        0.104790010322250, 0.063092092629979, 0.022935322010529,
    ]
)
_GAUSS_WEIGHTS = np.array(
    [
        0.129484966168870, 0.279705391489277, 0.381830050505119,
        0.417959183673469, 0.381830050505119, 0.279705391489277,
        0.129484966168870,
    ]
)
_GAUSS_SLICE = slice(1, 15, 2)

_MAX_PANELS = 1 << 17
_MAX_ROUNDS = 40


def _adaptive_quad(f, a: float, b: float, tol_rel: float, tol_abs: float,
                   initial_panels: int):
    """Globally adaptive G7/K15 rule for a complex vector-evaluated integrand."""
    edges = np.linspace(a, b, initial_panels + 1)
    lo, hi = edges[:-1], edges[1:]

    def panel_eval(lo_arr, hi_arr):
        mid = 0.5 * (lo_arr + hi_arr)
        half = 0.5 * (hi_arr - lo_arr)
        nodes = mid[:, None] + half[:, None] * _KRONROD_NODES[None, :]
        vals = f(nodes.ravel()).reshape(nodes.shape)
        i15 = half * (vals @ _KRONROD_WEIGHTS)
        i7 = half * (vals[:, _GAUSS_SLICE] @ _GAUSS_WEIGHTS)
        return i15, np.abs(i15 - i7)

    i15, err = panel_eval(lo, hi)
    for _ in range(_MAX_ROUNDS):
        total = np.sum(i15)
        total_err = float(np.sum(err))
        if total_err <= max(tol_rel * abs(total), tol_abs):
            return complex(total), total_err
        if lo.size >= _MAX_PANELS:
            break
        # Split the worst half of the panels (at least one).
        n_split = max(1, lo.size // 2)
        order = np.argsort(err)
        keep, split = order[:-n_split], order[-n_split:]
        mid = 0.5 * (lo[split] + hi[split])
        new_lo = np.concatenate([lo[keep], lo[split], mid])
        new_hi = np.concatenate([hi[keep], mid, hi[split]])
        i15_new, err_new = panel_eval(
            np.concatenate([lo[split], mid]), np.concatenate([mid, hi[split]])
        )
        i15 = np.concatenate([i15[keep], i15_new])
        err = np.concatenate([err[keep], err_new])
        lo, hi = new_lo, new_hi

    total = complex(np.sum(i15))
    raise QuadratureError(
        f"quadrature stalled at error {float(np.sum(err)):.3e} "
        f"(target {max(tol_rel * abs(total), tol_abs):.3e})",
        estimate=total,
        achieved=float(np.sum(err)),
    )


def _initial_panels(max_angular_rate: float, tau: float) -> int:
    return int(np.clip(np.ceil(max_angular_rate * tau / np.pi), 8, 4096))


def quadrature_theta1(pulse: Pulse, spec: ModeSpec, p: int,
                      tol: float = 1e-9) -> complex:
    """theta1 by adaptive quadrature of the defining integral."""
    w = spec.omega[p] + spec.delta[p]

    def f(t):
        return evaluate(pulse, t) * np.exp(1j * w * t)

    rate = float(np.max(np.abs(w - pulse.freqs)))
    scale = average_rabi(pulse) * pulse.tau
    value, _ = _adaptive_quad(
        f, 0.0, pulse.tau, tol, 1e-13 * scale, _initial_panels(rate, pulse.tau)
    )
    return value


def quadrature_theta1_derivative(pulse: Pulse, spec: ModeSpec, p: int,
                                 kappa: int, tol: float = 1e-9) -> complex:
    """Derivative oracle: same integrand weighted by (i t)^kappa."""
    w = spec.omega[p] + spec.delta[p]

    def f(t):
        return evaluate(pulse, t) * np.exp(1j * w * t) * (1j * t) ** kappa

    rate = float(np.max(np.abs(w - pulse.freqs)))
    scale = average_rabi(pulse) * pulse.tau ** (kappa + 1)
    value, _ = _adaptive_quad(
        f, 0.0, pulse.tau, tol, 1e-13 * scale, _initial_panels(rate, pulse.tau)
    )
    return value


def _segment_integral(w: np.ndarray, t: np.ndarray) -> np.ndarray:
    """int_0^t e^{i w s} ds for an array of upper limits and frequencies."""
    W, T = np.meshgrid(w, t, indexing="ij")
    x = W * T
    out = np.empty(x.shape, dtype=complex)
    small = np.abs(x) < 1e-6
    xs = x[small]
    out[small] = T[small] * (1.0 + 1j * xs / 2.0 - xs**2 / 6.0)
    out[~small] = (np.exp(1j * x[~small]) - 1.0) / (1j * W[~small])
    return out


def quadrature_theta2(pulse: Pulse, spec: ModeSpec, p: int, p2: int,
                      tol: float = 1e-9) -> complex:
    """theta2 oracle: inner integral by antiderivative, outer adaptive rule."""
    w1 = spec.omega[p] + spec.delta[p]
    b = spec.omega[p2] + spec.delta[p2] - pulse.freqs
    conj_coeffs = pulse.coeffs.conj()
    step = max(1, 2_000_000 // max(1, b.size))

    def f(t1):
        inner = np.empty(t1.size, dtype=complex)
        for k in range(0, t1.size, step):
            seg = _segment_integral(b, t1[k : k + step])
            inner[k : k + step] = conj_coeffs @ np.conj(seg)
        return evaluate(pulse, t1) * np.exp(1j * w1 * t1) * inner

    rate = float(np.max(np.abs(w1 - pulse.freqs)) + np.max(np.abs(b)))
    scale = (average_rabi(pulse) * pulse.tau) ** 2
    value, _ = _adaptive_quad(
        f, 0.0, pulse.tau, tol, 1e-13 * scale, _initial_panels(rate, pulse.tau)
    )
    return value


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MagnusReport:
    """Magnus integrals of one pulse against one mode set.

    ``theta1_derivs[p, k]`` holds the (k+1)-th frequency derivative of
    theta1 for mode p.  ``theta2`` is the full mode-pair matrix, or ``None``
    when the (quadratic-cost) second-order block was not requested.
    """

    theta1: np.ndarray
    theta1_derivs: np.ndarray
    theta2: np.ndarray | None = None

    @property
    def n_modes(self) -> int:
        return self.theta1.size


def magnus_report(pulse: Pulse, spec: ModeSpec, k_report: int = 0,
                  second_order: bool = False) -> MagnusReport:
    """Evaluate theta1, its first ``k_report`` derivatives, and optionally theta2."""
    n = spec.n_modes
    offsets = (spec.omega + spec.delta)[:, None] - pulse.freqs[None, :]
    t1 = _phase_integral_raw(offsets, 0, pulse.tau) @ pulse.coeffs
    derivs = np.empty((n, k_report), dtype=complex)
    for k in range(1, k_report + 1):
        derivs[:, k - 1] = phase_integral(offsets, k, pulse.tau) @ pulse.coeffs
    t2 = None
    if second_order:
        t2 = np.empty((n, n), dtype=complex)
        for p in range(n):
            for q in range(n):
                t2[p, q] = theta2(pulse, spec, p, q)
    return MagnusReport(theta1=t1, theta1_derivs=derivs, theta2=t2)


def report_theta1_csv(report: MagnusReport, path) -> None:
    """Rows (p, kappa, re, im): kappa = 0 for theta1, >= 1 for derivatives."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("p,kappa,re,im\n")
        for p in range(report.n_modes):
            v = report.theta1[p]
            fh.write(f"{p},0,{v.real:.17g},{v.imag:.17g}\n")
            for k in range(report.theta1_derivs.shape[1]):
                v = report.theta1_derivs[p, k]
                fh.write(f"{p},{k + 1},{v.real:.17g},{v.imag:.17g}\n")


def report_theta2_csv(report: MagnusReport, path) -> None:
    """Rows (p, p2, re, im, abs) over all mode pairs."""
    if report.theta2 is None:
        raise ValidationError("report carries no second-order block")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("p,p2,re,im,abs\n")
        for p in range(report.n_modes):
            for q in range(report.n_modes):
                v = report.theta2[p, q]
                fh.write(f"{p},{q},{v.real:.17g},{v.imag:.17g},{abs(v):.17g}\n")
