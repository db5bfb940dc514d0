import numpy as np
import pytest

import modeshape as ms
from modeshape import bench
from modeshape.errors import InfeasibleBasisError, ValidationError
from modeshape.modes import TWO_PI


@pytest.fixture(scope="module")
def small_table(request):
    chain = ms.three_ion_chain()
    plan = ms.SweepPlan(
        spec=chain, target=2, kinds=("square", "moment-0"),
        alpha_grid=(1.0,), tau_grid=(150e-6,),
        delta_grid=(0.0, TWO_PI * 50.0),
    )
    return ms.run_sweep(plan)


def test_kind_moment_parsing():
    assert bench.kind_moment("square") is None
    assert bench.kind_moment("moment-0") == 0
    assert bench.kind_moment("moment-3") == 3
    with pytest.raises(ValidationError):
        bench.kind_moment("triangle")
    with pytest.raises(ValidationError):
        bench.kind_moment("moment-x")


def test_plan_validation(chain):
    with pytest.raises(ValidationError):
        ms.SweepPlan(spec=chain, target=2, kinds=())
    with pytest.raises(ValidationError):
        ms.SweepPlan(spec=chain, target=7)


def test_plan_feasibility_check(chain):
    plan = ms.SweepPlan(
        spec=chain, target=2, kinds=("moment-3",), tau_grid=(5e-6,)
    )
    with pytest.raises(InfeasibleBasisError):
        plan.validate_feasibility()


def test_sweep_rows_complete(small_table):
    assert len(small_table) == 4
    assert all(r.status == "ok" for r in small_table.rows)
    kinds = [r.kind for r in small_table.rows]
    assert kinds == ["square", "square", "moment-0", "moment-0"]
    for r in small_table.rows:
        assert 0 <= r.p_full <= 1 and 0 <= r.p_model <= 1
        assert r.error >= 0


def test_sweep_metadata(small_table, chain):
    assert small_table.metadata["version"] == ms.__version__
    plan = ms.SweepPlan(
        spec=chain, target=2, kinds=("square", "moment-0"),
        alpha_grid=(1.0,), tau_grid=(150e-6,),
        delta_grid=(0.0, TWO_PI * 50.0),
    )
    assert small_table.metadata["plan_hash"] == bench.plan_hash(plan)
    other = ms.SweepPlan(
        spec=chain, target=2, kinds=("square",),
        alpha_grid=(1.0,), tau_grid=(150e-6,), delta_grid=(0.0,),
    )
    assert bench.plan_hash(other) != small_table.metadata["plan_hash"]


def test_sweep_deterministic(chain):
    plan = ms.SweepPlan(
        spec=chain, target=2, kinds=("moment-0",),
        alpha_grid=(1.0,), tau_grid=(120e-6,), delta_grid=(0.0,),
    )
    t1 = ms.run_sweep(plan)
    t2 = ms.run_sweep(plan)
    assert t1.rows == t2.rows


def test_sweep_parallel_matches_serial(chain):
    plan = ms.SweepPlan(
        spec=chain, target=2, kinds=("square",),
        alpha_grid=(0.5, 1.0), tau_grid=(120e-6,),
        delta_grid=(0.0, TWO_PI * 30.0),
    )
    serial = ms.run_sweep(plan, jobs=1)
    parallel = ms.run_sweep(plan, jobs=2)
    assert serial.rows == parallel.rows


def test_emit_csv_deterministic(tmp_path, small_table):
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    ms.emit_csv(small_table, p1)
    ms.emit_csv(small_table, p2)
    assert p1.read_bytes() == p2.read_bytes()
    lines = p1.read_text().splitlines()
    assert lines[0] == (
        "kind,K,alpha,tau_us,delta_hz,P,P_model,E,"
        "A_bar_radps,cmc_residual,deriv_residual,status"
    )
    assert len(lines) == 5
    assert lines[1].startswith("square,,1,150,0,")
    assert lines[3].startswith("moment-0,0,")


def test_emit_csv_empty_rejected(tmp_path):
    with pytest.raises(ValidationError):
        ms.emit_csv(bench.SweepTable(rows=()), tmp_path / "x.csv")


def test_emit_plot_deterministic(tmp_path, small_table):
    p1, p2 = tmp_path / "a.svg", tmp_path / "b.svg"
    ms.emit_plot(small_table, "delta", p1)
    ms.emit_plot(small_table, "delta", p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert p1.stat().st_size > 0


def test_emit_plot_unknown_kind(tmp_path, small_table):
    with pytest.raises(ValidationError):
        ms.emit_plot(small_table, "spiral", tmp_path / "x.svg")


def test_best_pulse_map_consistency(chain):
    taus = (150e-6, 300e-6)
    deltas = (0.0, TWO_PI * 60.0)
    result = ms.best_pulse_map(
        taus, deltas, ("square", "moment-0"), chain, alpha=1.0, target=2
    )
    assert len(result.winners) == 2 and len(result.winners[0]) == 2
    for i, tau in enumerate(taus):
        for j, delta in enumerate(deltas):
            cell = [
                r for r in result.table.select(tau=tau, delta=delta)
                if r.status == "ok"
            ]
            best = min(r.error for r in cell)
            winner_rows = [r for r in cell if r.kind == result.winners[i][j]]
            assert winner_rows[0].error == best
            assert result.errors[i][j] == best


def test_best_pulse_map_single_cell(chain):
    result = ms.best_pulse_map(
        (150e-6,), (0.0,), ("square", "moment-0"), chain, alpha=1.0, target=2
    )
    cell = result.table.select(tau=150e-6, delta=0.0)
    argmin = min((r for r in cell if r.status == "ok"), key=lambda r: r.error)
    assert result.winners[0][0] == argmin.kind


def test_map_plot(tmp_path, chain):
    result = ms.best_pulse_map(
        (150e-6,), (0.0, TWO_PI * 40.0), ("square", "moment-0"),
        chain, alpha=1.0, target=2,
    )
    out = tmp_path / "map.svg"
    ms.emit_plot(result, "map", out)
    assert out.stat().st_size > 0


def test_error_landscape_plot(tmp_path, chain):
    plan = ms.SweepPlan(
        spec=chain, target=2, kinds=("moment-0",), alpha_grid=(1.0,),
        tau_grid=(150e-6, 300e-6), delta_grid=(0.0, TWO_PI * 50.0),
    )
    table = ms.run_sweep(plan)
    out = tmp_path / "land.svg"
    ms.emit_error_landscape(table, "moment-0", out)
    assert out.stat().st_size > 0
    with pytest.raises(ValidationError):
        ms.emit_error_landscape(table, "moment-2", tmp_path / "x.svg")


def test_scaling_study_small(tmp_path):
    rows = ms.scaling_study(
        n_list=(3, 4), tau_list=(400e-6,), repeats=1
    )
    assert len(rows) == 2
    by_n = {r.n_modes: r for r in rows}
    assert by_n[3].status == "ok" and by_n[4].status == "ok"
    assert by_n[3].wall_clock > 0
    # square-pulse-like power for moment-0
    assert by_n[3].a_bar == pytest.approx(1.0 / 400e-6, rel=0.2)
    assert by_n[4].a_bar == pytest.approx(by_n[3].a_bar, rel=0.25)
    out = tmp_path / "scaling.csv"
    ms.emit_scaling_csv(rows, out)
    header = out.read_text().splitlines()[0]
    assert header == "n_modes,tau_us,wall_clock_s,A_bar_radps,null_space_dim,status"


def test_scaling_study_unknown_chain():
    with pytest.raises(ValidationError):
        ms.scaling_study(n_list=(12,), tau_list=(400e-6,), repeats=1)


def test_shaped_error_monotone_in_alpha(chain):
    # quadratic-regime sanity: at fixed tau and zero detuning, the shaped
    # family's error is non-decreasing in alpha over [0.2, 2]
    plan = ms.SweepPlan(
        spec=chain, target=2, kinds=("moment-0",),
        alpha_grid=(0.25, 0.7, 2.0), tau_grid=(150e-6,), delta_grid=(0.0,),
    )
    table = ms.run_sweep(plan)
    errors = [r.error for r in table.rows]
    assert errors == sorted(errors)


def test_sweep_infeasible_plan_aborts_upfront(chain):
    plan = ms.SweepPlan(
        spec=chain, target=2, kinds=("square", "moment-3"),
        alpha_grid=(1.0,), tau_grid=(40e-6,), delta_grid=(0.0,),
    )
    with pytest.raises(InfeasibleBasisError):
        ms.run_sweep(plan)


def test_sweep_failed_cell_recorded_in_row(chain):
    # alpha = 1e-5 drives the reference population under the degeneracy
    # floor: that cell fails in-row while the other ten survive
    alphas = (1e-5,) + tuple(1.0 + 0.001 * i for i in range(10))
    plan = ms.SweepPlan(
        spec=chain, target=2, kinds=("square",),
        alpha_grid=alphas, tau_grid=(150e-6,), delta_grid=(0.0,),
    )
    table = ms.run_sweep(plan)
    statuses = [r.status for r in table.rows]
    assert statuses[0].startswith("DegenerateReferenceError")
    assert all(s == "ok" for s in statuses[1:])
    assert np.isnan(table.rows[0].error)


def test_sweep_aborts_when_too_many_cells_fail(chain):
    plan = ms.SweepPlan(
        spec=chain, target=2, kinds=("square",),
        alpha_grid=(1e-5, 1.0), tau_grid=(150e-6,), delta_grid=(0.0,),
    )
    with pytest.raises(ms.ModeshapeError, match="aborting"):
        ms.run_sweep(plan)
