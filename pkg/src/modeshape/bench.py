"""Parameter-sweep benchmarks and file emission.

Sweeps evaluate the fractional population error of square and shaped pulses
over grids of Rabi scaling, pulse length and mode-frequency detuning, with
per-cell failures recorded in-row.  A separate solver-only study times pulse
synthesis against chain length.  All emitted files are deterministic:
fixed column order, fixed float formatting, no timestamps.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import ModeshapeError, ValidationError
from .metrics import fractional_error, square_probe
from .modes import TWO_PI, CHAIN_SPACINGS_KHZ, ModeSpec, synthesize_chain, with_detuning
from .pulses import DEFAULT_WINDOW, Pulse, average_rabi, build_basis
from .shaper import ShapeRequest, solve_pulse
from .dynamics import MULTI_MODE, SINGLE_MODE, model_population

_FAILURE_FRACTION_LIMIT = 0.10

KIND_SQUARE = "square"


def kind_moment(kind: str) -> int | None:
    """Stabilization order encoded in a pulse-kind label (None for square)."""
    if kind == KIND_SQUARE:
        return None
    if kind.startswith("moment-"):
        try:
            k = int(kind.split("-", 1)[1])
        except ValueError:
            raise ValidationError(f"malformed pulse kind '{kind}'") from None
        if k < 0:
            raise ValidationError(f"negative moment in pulse kind '{kind}'")
        return k
    raise ValidationError(f"unknown pulse kind '{kind}'")


# Tie-break preference: lower moment first, square last.
def _kind_preference(kind: str) -> tuple:
    k = kind_moment(kind)
    return (1, 0) if k is None else (0, k)


@dataclass(frozen=True)
class SweepPlan:
    """Grid description for :func:`run_sweep`.

    Units: ``tau_grid`` seconds, ``delta_grid`` angular rad/s, ``alpha_grid``
    dimensionless.  ``seed`` only feeds the provenance hash (the pipeline is
    deterministic); it is kept so randomized future elements stay reproducible.
    """

    spec: ModeSpec
    target: int
    kinds: tuple = ("square", "moment-0")
    alpha_grid: tuple = (1.0,)
    tau_grid: tuple = (150e-6,)
    delta_grid: tuple = (0.0,)
    window: float = DEFAULT_WINDOW
    n_max: int = 4
    tolerance: float = 1e-6
    ion: int | None = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kinds", tuple(self.kinds))
        object.__setattr__(self, "alpha_grid", tuple(float(a) for a in self.alpha_grid))
        object.__setattr__(self, "tau_grid", tuple(float(t) for t in self.tau_grid))
        object.__setattr__(self, "delta_grid", tuple(float(d) for d in self.delta_grid))
        if not (self.kinds and self.alpha_grid and self.tau_grid and self.delta_grid):
            raise ValidationError("sweep grids must be nonempty")
        for kind in self.kinds:
            kind_moment(kind)
        if not 0 <= self.target < self.spec.n_modes:
            raise ValidationError("target mode out of range")

    def validate_feasibility(self) -> None:
        """Check every (kind, tau) against shaper sizing before running."""
        for kind in self.kinds:
            k = kind_moment(kind)
            if k is None:
                continue
            n_constraints = (self.spec.n_modes - 1) + k * self.spec.n_modes
            for tau in self.tau_grid:
                build_basis(tau, self.spec, self.window, min_size=n_constraints + 4)


def plan_hash(plan: SweepPlan) -> str:
    doc = {
        "frequencies": plan.spec.omega.tolist(),
        "eta": plan.spec.eta.tolist(),
        "target": plan.target,
        "kinds": list(plan.kinds),
        "alpha_grid": list(plan.alpha_grid),
        "tau_grid": list(plan.tau_grid),
        "delta_grid": list(plan.delta_grid),
        "window": plan.window,
        "n_max": plan.n_max,
        "tolerance": plan.tolerance,
        "ion": plan.ion,
        "seed": plan.seed,
    }
    blob = json.dumps(doc, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class SweepRow:
    """One sweep cell; numeric fields are NaN when status != 'ok'."""

    kind: str
    moment: int | None
    alpha: float
    tau: float
    delta: float
    p_full: float
    p_model: float
    error: float
    a_bar: float
    cmc_residual: float
    deriv_residual: float
    status: str = "ok"


@dataclass(frozen=True)
class SweepTable:
    rows: tuple
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.rows)

    def select(self, **conditions):
        """Rows matching all field equalities, e.g. select(kind='square')."""
        out = self.rows
        for key, val in conditions.items():
            out = tuple(r for r in out if getattr(r, key) == val)
        return out


def _build_pulse(plan: SweepPlan, kind: str, alpha: float, tau: float):
    """(pulse, a_bar, cmc_residual, deriv_residual) for one grid line."""
    k = kind_moment(kind)
    if k is None:
        pulse = square_probe(plan.spec, plan.target, alpha, tau)
        return pulse, average_rabi(pulse), np.nan, np.nan
    sol = solve_pulse(
        ShapeRequest(
            spec=plan.spec, target=plan.target, tau=tau, alpha=alpha,
            moment=k, window=plan.window,
        )
    )
    return sol.pulse, average_rabi(sol.pulse), sol.cmc_residual, sol.deriv_residual


def _cell_task(args):
    """Worker body: one multi-mode run against a precomputed reference."""
    (index, pulse, spec, delta, target, n_max, tolerance, ion, p_model) = args
    detuned = with_detuning(spec, delta) if delta else spec
    p_full, _, _ = model_population(
        pulse, detuned, MULTI_MODE,
        n_max=n_max, tolerance=tolerance, target=target, ion=ion,
    )
    return index, p_full, p_model


def run_sweep(plan: SweepPlan, jobs: int = 1) -> SweepTable:
    """Evaluate the full (kind, alpha, tau, delta) grid.

    The single-mode reference is computed once per pulse (it does not depend
    on the detuning); multi-mode cells then run in a process pool when
    ``jobs > 1``, gathered back in grid order.
    """
    plan.validate_feasibility()

    cells = []
    rows: dict[int, SweepRow] = {}
    index = 0
    n_failed = 0
    for kind in plan.kinds:
        for alpha in plan.alpha_grid:
            for tau in plan.tau_grid:
                try:
                    pulse, a_bar, cmc, drv = _build_pulse(plan, kind, alpha, tau)
                    p_model, _, _ = model_population(
                        pulse, plan.spec, SINGLE_MODE, n_max=plan.n_max,
                        tolerance=plan.tolerance, target=plan.target, ion=plan.ion,
                    )
                    build_err = None
                except ModeshapeError as exc:
                    pulse, a_bar, cmc, drv = None, np.nan, np.nan, np.nan
                    p_model, build_err = np.nan, f"{type(exc).__name__}: {exc}"
                for delta in plan.delta_grid:
                    base = dict(
                        kind=kind, moment=kind_moment(kind), alpha=alpha,
                        tau=tau, delta=delta, a_bar=a_bar,
                        cmc_residual=cmc, deriv_residual=drv,
                    )
                    if build_err is not None:
                        rows[index] = SweepRow(
                            **base, p_full=np.nan, p_model=np.nan,
                            error=np.nan, status=build_err,
                        )
                        n_failed += 1
                    else:
                        cells.append(
                            (index, pulse, plan.spec, delta, plan.target,
                             plan.n_max, plan.tolerance, plan.ion, p_model)
                        )
                        rows[index] = SweepRow(
                            **base, p_full=np.nan, p_model=p_model,
                            error=np.nan, status="pending",
                        )
                    index += 1

    def finish(idx, p_full, p_model):
        row = rows[idx]
        try:
            err = fractional_error(p_full, p_model)
            rows[idx] = SweepRow(
                **{**row.__dict__, "p_full": p_full, "p_model": p_model,
                   "error": err, "status": "ok"}
            )
            return 0
        except ModeshapeError as exc:
            rows[idx] = SweepRow(
                **{**row.__dict__, "p_full": p_full, "p_model": p_model,
                   "status": f"{type(exc).__name__}: {exc}"}
            )
            return 1

    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for idx, p_full, p_model in pool.map(_cell_task, cells, chunksize=1):
                n_failed += finish(idx, p_full, p_model)
    else:
        for args in cells:
            try:
                idx, p_full, p_model = _cell_task(args)
            except ModeshapeError as exc:
                row = rows[args[0]]
                rows[args[0]] = SweepRow(
                    **{**row.__dict__, "status": f"{type(exc).__name__}: {exc}"}
                )
                n_failed += 1
                continue
            n_failed += finish(idx, p_full, p_model)

    total = index
    if n_failed > _FAILURE_FRACTION_LIMIT * total:
        raise ModeshapeError(
            f"{n_failed}/{total} sweep cells failed (> "
            f"{_FAILURE_FRACTION_LIMIT:.0%}); aborting"
        )
    ordered = tuple(rows[i] for i in range(total))
    return SweepTable(
        rows=ordered,
        metadata={"plan_hash": plan_hash(plan), "version": __version__},
    )


@dataclass(frozen=True)
class BestPulseMap:
    """Winner grid over (tau, delta) plus the underlying sweep table."""

    tau_grid: tuple
    delta_grid: tuple
    winners: tuple          # winners[i][j] = kind minimizing E at (tau_i, delta_j)
    errors: tuple           # matching minimal error values
    table: SweepTable


def best_pulse_map(
    tau_grid, delta_grid, kinds, spec: ModeSpec, alpha: float,
    target: int, window: float = DEFAULT_WINDOW, n_max: int = 4,
    tolerance: float = 1e-6, ion: int | None = None, jobs: int = 1,
) -> BestPulseMap:
    """Which pulse kind wins each (tau, delta) cell; ties prefer lower moment."""
    plan = SweepPlan(
        spec=spec, target=target, kinds=tuple(kinds), alpha_grid=(alpha,),
        tau_grid=tuple(tau_grid), delta_grid=tuple(delta_grid),
        window=window, n_max=n_max, tolerance=tolerance, ion=ion,
    )
    table = run_sweep(plan, jobs=jobs)
    winners, errors = [], []
    for tau in plan.tau_grid:
        wrow, erow = [], []
        for delta in plan.delta_grid:
            cands = [
                r for r in table.select(tau=tau, delta=delta) if r.status == "ok"
            ]
            if not cands:
                wrow.append("none")
                erow.append(np.nan)
                continue
            best = min(cands, key=lambda r: (r.error, _kind_preference(r.kind)))
            wrow.append(best.kind)
            erow.append(best.error)
        winners.append(tuple(wrow))
        errors.append(tuple(erow))
    return BestPulseMap(
        tau_grid=plan.tau_grid, delta_grid=plan.delta_grid,
        winners=tuple(winners), errors=tuple(errors), table=table,
    )


@dataclass(frozen=True)
class ScalingRow:
    n_modes: int
    tau: float
    wall_clock: float
    a_bar: float
    null_space_dim: int
    status: str = "ok"


def scaling_study(
    n_list, tau_list, spacing_table=None, alpha: float = 1.0, moment: int = 0,
    anchor: float = TWO_PI * 2.9574e6, window: float = DEFAULT_WINDOW,
    repeats: int = 3,
) -> tuple:
    """Solver wall-clock and pulse power versus chain length (no simulation).

    Chains are synthesized from neighbor-spacing tables; wall-clock is the
    median of ``repeats`` solve repetitions.  Infeasible combinations are
    recorded and excluded from any downstream fits.
    """
    if spacing_table is None:
        spacing_table = CHAIN_SPACINGS_KHZ
    rows = []
    for n in n_list:
        if n not in spacing_table:
            raise ValidationError(f"no spacing data for chain length {n}")
        spacings = TWO_PI * 1e3 * np.asarray(spacing_table[n], dtype=float)
        spec = synthesize_chain(spacings, anchor)
        for tau in tau_list:
            request = ShapeRequest(
                spec=spec, target=spec.n_modes - 1, tau=tau,
                alpha=alpha, moment=moment, window=window,
            )
            try:
                solve_pulse(request)  # warm-up, untimed
                times = []
                for _ in range(repeats):
                    start = time.perf_counter()
                    sol = solve_pulse(request)
                    times.append(time.perf_counter() - start)
                rows.append(
                    ScalingRow(
                        n_modes=spec.n_modes, tau=tau,
                        wall_clock=float(np.median(times)),
                        a_bar=average_rabi(sol.pulse),
                        null_space_dim=sol.null_space_dim,
                    )
                )
            except ModeshapeError as exc:
                rows.append(
                    ScalingRow(
                        n_modes=spec.n_modes, tau=tau, wall_clock=np.nan,
                        a_bar=np.nan, null_space_dim=-1,
                        status=f"{type(exc).__name__}: {exc}",
                    )
                )
    return tuple(rows)


# ---------------------------------------------------------------------------
# Emission

_CSV_HEADER = (
    "kind,K,alpha,tau_us,delta_hz,P,P_model,E,"
    "A_bar_radps,cmc_residual,deriv_residual,status\n"
)


def _fmt(x) -> str:
    return f"{x:.17g}"


def emit_csv(table: SweepTable, path) -> None:
    """Sweep table as CSV with the stable column order; K is blank for square."""
    if len(table) == 0:
        raise ValidationError("refusing to emit an empty sweep table")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_CSV_HEADER)
        for r in table.rows:
            k = "" if r.moment is None else str(r.moment)
            fh.write(
                ",".join(
                    [
                        r.kind, k, _fmt(r.alpha), _fmt(r.tau * 1e6),
                        _fmt(r.delta / TWO_PI), _fmt(r.p_full), _fmt(r.p_model),
                        _fmt(r.error), _fmt(r.a_bar), _fmt(r.cmc_residual),
                        _fmt(r.deriv_residual),
                        r.status.replace(",", ";").replace("\n", " "),
                    ]
                )
                + "\n"
            )


def emit_scaling_csv(rows, path) -> None:
    if not rows:
        raise ValidationError("refusing to emit an empty scaling table")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("n_modes,tau_us,wall_clock_s,A_bar_radps,null_space_dim,status\n")
        for r in rows:
            fh.write(
                f"{r.n_modes},{_fmt(r.tau * 1e6)},{_fmt(r.wall_clock)},"
                f"{_fmt(r.a_bar)},{r.null_space_dim},"
                f"{r.status.replace(',', ';')}\n"
            )


def _figure():
    from matplotlib.figure import Figure

    return Figure(figsize=(6.0, 4.5))


def _save(fig, path):
    import matplotlib

    with matplotlib.rc_context({"svg.hashsalt": "modeshape"}):
        fig.savefig(path, metadata=_scrubbed_metadata(path), bbox_inches="tight")


def _scrubbed_metadata(path):
    p = str(path)
    if p.endswith(".svg"):
        return {"Date": None, "Creator": "modeshape"}
    if p.endswith(".png"):
        return {"Software": "modeshape"}
    return None


def emit_plot(table_or_map, kind: str, path) -> None:
    """Render a sweep table (or best-pulse map) as a static figure.

    ``kind`` selects the x-axis: 'alpha', 'tau' or 'delta' for log-log error
    curves grouped by pulse kind, or 'map' for the winner heat map.
    """
    fig = _figure()
    ax = fig.add_subplot(111)

    if kind == "map":
        m = table_or_map
        if not isinstance(m, BestPulseMap):
            raise ValidationError("map plot needs a BestPulseMap")
        kinds = sorted({k for row in m.winners for k in row})
        lookup = {k: i for i, k in enumerate(kinds)}
        z = np.array([[lookup[k] for k in row] for row in m.winners])
        mesh = ax.pcolormesh(
            np.asarray(m.delta_grid) / TWO_PI,
            np.asarray(m.tau_grid) * 1e6,
            z, cmap="viridis", shading="nearest",
        )
        cbar = fig.colorbar(mesh, ax=ax, ticks=range(len(kinds)))
        cbar.ax.set_yticklabels(kinds)
        ax.set_xlabel("detuning (Hz)")
        ax.set_ylabel("pulse length (us)")
        _save(fig, path)
        return

    table = table_or_map
    if not isinstance(table, SweepTable) or len(table) == 0:
        raise ValidationError("line plot needs a nonempty SweepTable")
    axes = {"alpha": ("alpha", 1.0, "Rabi scaling alpha"),
            "tau": ("tau", 1e6, "pulse length (us)"),
            "delta": ("delta", 1.0 / TWO_PI, "detuning (Hz)")}
    if kind not in axes:
        raise ValidationError(f"unknown plot kind '{kind}'")
    attr, factor, label = axes[kind]
    for pulse_kind in sorted({r.kind for r in table.rows}, key=_kind_preference):
        pts = sorted(
            (getattr(r, attr) * factor, r.error)
            for r in table.rows
            if r.kind == pulse_kind and r.status == "ok" and r.error > 0
        )
        if pts:
            x, y = zip(*pts)
            ax.loglog(x, y, marker="o", label=pulse_kind)
    ax.set_xlabel(label)
    ax.set_ylabel("fractional population error")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    _save(fig, path)


def emit_error_landscape(table: SweepTable, pulse_kind: str, path) -> None:
    """Heat map of E over (tau, delta) for one pulse kind, log color scale.

    Contour lines mark errors from 1e-4 to 1e-1.
    """
    from matplotlib.colors import LogNorm

    rows = [r for r in table.rows if r.kind == pulse_kind and r.status == "ok"]
    if not rows:
        raise ValidationError(f"no rows for pulse kind '{pulse_kind}'")
    taus = sorted({r.tau for r in rows})
    deltas = sorted({r.delta for r in rows})
    z = np.full((len(taus), len(deltas)), np.nan)
    for r in rows:
        z[taus.index(r.tau), deltas.index(r.delta)] = r.error
    fig = _figure()
    ax = fig.add_subplot(111)
    x = np.asarray(deltas) / TWO_PI
    y = np.asarray(taus) * 1e6
    mesh = ax.pcolormesh(
        x, y, z, norm=LogNorm(vmin=max(np.nanmin(z), 1e-10), vmax=np.nanmax(z)),
        shading="nearest", cmap="magma",
    )
    levels = [1e-4, 1e-3, 1e-2, 1e-1]
    try:
        cs = ax.contour(x, y, z, levels=levels, colors="w", linewidths=0.8)
        ax.clabel(cs, fontsize=7)
    except (ValueError, TypeError):
        pass  # grid too small for contours
    fig.colorbar(mesh, ax=ax, label="fractional population error")
    ax.set_xlabel("detuning (Hz)")
    ax.set_ylabel("pulse length (us)")
    ax.set_title(pulse_kind)
    _save(fig, path)
