import numpy as np
import pytest
from pydantic import ValidationError

from fields.densities import estimate_gM, uniform_gM
from fields.targets import TargetSpec
from mesh_core.generators import SPHERE_TAG, sphere_in_box_mesh, unit_square_mesh
from mesh_core.surface import extract_surface
from metric.elasticity import MetricConfig
from optimizer.descent import OptimizerConfig, RunContext, RunStatus, run, step
from optimizer.records import CSV_COLUMNS, CsvRecordSink, IterationRecord, MemoryRecordSink, read_log
from preshape.state import HoldAllDomain, PreShapeState
from utils.errors import StagnationError


@pytest.fixture
def metric_cfg():
    return MetricConfig(alpha_LE=0.02, alpha_L2=1.0)


@pytest.fixture
def short_run():
    return OptimizerConfig(max_iters=5, grad_tol_rel=1e-12, residual_tol_rel=None)


def test_stopping_criteria_are_required():
    with pytest.raises(ValidationError):
        OptimizerConfig(grad_tol_rel=None, residual_tol_rel=None)
    with pytest.raises(ValidationError):
        OptimizerConfig(normal_form="other")
    with pytest.raises(ValidationError):
        OptimizerConfig(stop_rule="first")


def test_all_rule_waits_for_every_criterion():
    either = RunContext(mu=None, grad_tol=1.0, residual_tol=0.1)
    both = RunContext(mu=None, grad_tol=1.0, residual_tol=0.1, stop_rule="all")
    assert either.converged_by(0.5, 0.2) == "grad_tol"
    assert both.converged_by(0.5, 0.2) is None
    assert both.converged_by(2.0, 0.05) is None
    assert both.converged_by(0.5, 0.05) == "grad_tol+residual_tol"
    assert RunContext(mu=None, residual_tol=0.1, stop_rule="all").converged_by(9.0, 0.05) == "residual_tol"


def test_exact_solution_converges_immediately(metric_cfg):
    mesh = unit_square_mesh(6)
    state = PreShapeState(mesh, estimate_gM(mesh))
    sink = MemoryRecordSink()
    result = run(state, TargetSpec(), metric_cfg, OptimizerConfig(), sink)
    assert result.status == RunStatus.CONVERGED
    assert result.iterations == 1
    assert result.records[0].iter == 0
    assert result.records[0].step_scale == 0.0
    assert result.state is state
    assert sink.final_state is state


def test_zero_max_iters(jittered_square_state, analytic_target, metric_cfg):
    sink = MemoryRecordSink()
    result = run(jittered_square_state, analytic_target, metric_cfg, OptimizerConfig(max_iters=0), sink)
    assert result.status == RunStatus.MAX_ITERS
    assert result.records == []
    assert sink.final_state is jittered_square_state


def test_objective_decreases_monotonically(jittered_square_state, analytic_target, metric_cfg, short_run):
    sink = MemoryRecordSink()
    result = run(jittered_square_state, analytic_target, metric_cfg, short_run, sink)
    assert result.status == RunStatus.MAX_ITERS
    objectives = [r.objective for r in result.records]
    assert len(objectives) == 5
    assert all(b < a for a, b in zip(objectives, objectives[1:]))
    assert all(r.step_scale > 0 for r in result.records)
    assert [r.iter for r in sink.records] == [0, 1, 2, 3, 4]
    assert all(r.wall_time >= 0 for r in sink.records)


def test_boundary_stays_fixed(jittered_square_state, analytic_target, metric_cfg, short_run):
    result = run(jittered_square_state, analytic_target, metric_cfg, short_run, MemoryRecordSink())
    boundary = ~jittered_square_state.interior_mask
    assert np.array_equal(result.state.positions[boundary], jittered_square_state.positions[boundary])
    assert not np.array_equal(result.state.positions, jittered_square_state.positions)


def test_step_record_describes_start_state(jittered_square_state, analytic_target, metric_cfg, short_run):
    new_state, record = step(jittered_square_state, analytic_target, metric_cfg, short_run)
    assert record.iter == 0
    assert record.objective > 0
    assert record.grad_l2 > 0
    assert 0 < record.step_scale <= short_run.initial_scale
    assert record.step_scale == pytest.approx(short_run.initial_scale * 0.5 ** record.backtracks)
    assert new_state is not jittered_square_state


def test_stagnation_after_exhausted_backtracks(jittered_square_state, analytic_target, metric_cfg):
    cfg = OptimizerConfig(initial_scale=1e3, max_backtracks=0, grad_tol_rel=1e-12, residual_tol_rel=None)
    with pytest.raises(StagnationError) as info:
        step(jittered_square_state, analytic_target, metric_cfg, cfg)
    assert info.value.record.backtracks == 1
    assert info.value.record.step_scale == 0.0

    result = run(jittered_square_state, analytic_target, metric_cfg, cfg, MemoryRecordSink())
    assert result.status == RunStatus.STAGNATED
    assert len(result.records) == 1
    assert result.state is jittered_square_state


def test_snapshots_follow_schedule(jittered_square_state, analytic_target, metric_cfg):
    cfg = OptimizerConfig(max_iters=5, grad_tol_rel=1e-12, residual_tol_rel=None, snapshot_every=2)
    sink = MemoryRecordSink()
    run(jittered_square_state, analytic_target, metric_cfg, cfg, sink)
    assert sink.snapshots == [0, 2, 4]
    frame = sink.to_frame()
    assert list(frame.columns) == CSV_COLUMNS
    assert len(frame) == 5


def test_tolerances_resolve_once(jittered_square_state, analytic_target, metric_cfg):
    cfg = OptimizerConfig(max_iters=3, grad_tol_rel=0.5, residual_tol_rel=None)
    ctx = RunContext.prepare(jittered_square_state, metric_cfg, cfg)
    state, first = step(jittered_square_state, analytic_target, metric_cfg, cfg, ctx)
    assert ctx.grad_tol == pytest.approx(0.5 * first.grad_l2)
    assert ctx.residual_tol is None
    step(state, analytic_target, metric_cfg, cfg, ctx)
    assert ctx.grad_tol == pytest.approx(0.5 * first.grad_l2)
    assert ctx.iteration == 2


def test_csv_logs_are_reproducible(tmp_path, jittered_square_state, analytic_target, metric_cfg, short_run):
    logs = []
    for name in ("a", "b"):
        sink = CsvRecordSink(tmp_path / name)
        run(jittered_square_state, analytic_target, metric_cfg, short_run, sink)
        logs.append(sink.log_path.read_bytes())
        assert (tmp_path / name / "final.vtk").is_file()
    assert logs[0] == logs[1]

    frame = read_log(tmp_path / "a" / "log.csv")
    assert len(frame) == 5
    assert (frame["wall_time"] == 0.0).all()
    assert frame["iter"].tolist() == [0, 1, 2, 3, 4]


def test_wall_time_is_logged_on_request(tmp_path, jittered_square_state, analytic_target, metric_cfg):
    cfg = OptimizerConfig(max_iters=2, grad_tol_rel=1e-12, residual_tol_rel=None)
    sink = CsvRecordSink(tmp_path, log_wall_time=True)
    run(jittered_square_state, analytic_target, metric_cfg, cfg, sink)
    frame = read_log(sink.log_path)
    assert frame["wall_time"].iloc[-1] > 0.0


def test_read_log_checks_header(tmp_path):
    path = tmp_path / "log.csv"
    path.write_text("iter,objective\n0,1.0\n", encoding="utf-8")
    with pytest.raises(ValueError):
        read_log(path)


def test_records_reject_non_finite_objective():
    with pytest.raises(ValueError):
        IterationRecord(iter=0, objective=float("nan"), grad_l2=1.0, residual_max=0.0,
                        step_scale=0.1, backtracks=0)


def test_conforming_step_keeps_box_fixed():
    mesh = sphere_in_box_mesh(1)
    shape, vertex_map = extract_surface(mesh, SPHERE_TAG)
    domain = HoldAllDomain.conforming(mesh, vertex_map, shape.boundary_vertices)
    state = PreShapeState(shape, uniform_gM(shape), domain)
    spec = TargetSpec(kind="Analytic", expression="1 + 0.5*sin(10*2*pi*x)")
    metric_cfg = MetricConfig(mu_max=30.0, mu_min=5.0)
    cfg = OptimizerConfig(initial_scale=0.001, grad_tol_rel=1e-12, residual_tol_rel=None, component="Tangential")
    new_state, record = step(state, spec, metric_cfg, cfg)
    fixed = domain.dirichlet
    assert np.array_equal(new_state.domain.positions[fixed], mesh.vertices[fixed])
    assert np.array_equal(new_state.positions, new_state.domain.positions[vertex_map])
    assert record.step_scale > 0
    assert not np.array_equal(new_state.positions, state.positions)
    displacement = new_state.positions - state.positions
    normal_move = np.abs(np.einsum("ia,ia->i", displacement, state.vertex_normals)).max()
    assert normal_move < 1e-10 * np.abs(displacement).max()


def test_unit_square_without_mass_term(jittered_square_state, analytic_target):
    cfg = OptimizerConfig(max_iters=2, grad_tol_rel=1e-12, residual_tol_rel=None)
    result = run(jittered_square_state, analytic_target, MetricConfig(alpha_L2=0.0), cfg, MemoryRecordSink())
    assert result.records[1].objective < result.records[0].objective
