"""
Optimizer - Descent Module
Descenso de gradiente con búsqueda lineal por retroceso

Considera:
- Paso phi_t = phi + s·U con s = c, c/2, c/4, ... hasta que J baje estrictamente
- Candidatos con celdas invertidas cuentan como retrocesos fallidos
- Criterios de parada: norma L2 de U y norma máxima de rho - f (uno o ambos)
- Componente tangencial: U proyectado con P = I - nn^T en los vértices de la forma
- Tolerancias relativas resueltas con la primera iteración
- Reproyección opcional sobre la superficie inicial
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from fields.containers import NodalField
from fields.targets import TargetSpec, build_target, target_terms
from mesh_core.surface import SurfaceProjector
from metric.elasticity import GradientField, MetricConfig, l2_norm, represent_gradient, solve_mu
from optimizer.records import IterationRecord, RecordSink, Stopwatch
from preshape.derivative import Component, DerivativeCovector, assemble_derivative, objective, vertex_projectors
from preshape.state import PreShapeState
from utils.errors import ConfigError, InvertedCellError, SolverError, StagnationError
from utils.logger import setup_logger

logger = setup_logger(__name__)


class OptimizerConfig(BaseModel):
    """Parámetros del descenso y criterios de parada"""
    initial_scale: float = Field(default=0.01, gt=0, description="Escala inicial c del paso")
    backtrack_factor: float = Field(default=0.5, gt=0, lt=1, description="Factor de reducción del paso")
    max_backtracks: int = Field(default=30, ge=0, description="Retrocesos máximos por iteración")
    max_iters: int = Field(default=200, ge=0, description="Iteraciones máximas")
    grad_tol: Optional[float] = Field(default=None, gt=0, description="Tolerancia absoluta para ||U||_L2")
    grad_tol_rel: Optional[float] = Field(default=1e-3, gt=0, description="Tolerancia relativa a la ||U||_L2 inicial")
    residual_tol: Optional[float] = Field(default=None, gt=0, description="Tolerancia absoluta para max|rho - f|")
    residual_tol_rel: Optional[float] = Field(default=0.01, gt=0, description="Tolerancia relativa al valor medio del objetivo")
    stop_rule: str = Field(default="any", description="'any': basta un criterio activo; 'all': deben cumplirse todos")
    component: Component = Field(default=Component.FULL, description="Full, Tangential o Normal")
    normal_form: str = Field(default="projected", description="'projected' o 'curvature'")
    snapshot_every: int = Field(default=0, ge=0, description="Captura VTK cada n iteraciones (0 desactiva)")
    armijo: float = Field(default=0.0, ge=0, lt=1, description="Constante de decrecimiento suficiente")
    reproject: bool = Field(default=False, description="Reproyectar sobre la superficie inicial")
    q_drift_warning: float = Field(default=1e-2, gt=0, description="Cambio relativo de ∫q por paso que genera aviso")

    @model_validator(mode="after")
    def _check_stopping(self):
        if not any(v is not None for v in (self.grad_tol, self.grad_tol_rel, self.residual_tol, self.residual_tol_rel)):
            raise ValueError("at least one stopping criterion must be active")
        if self.normal_form not in ("projected", "curvature"):
            raise ValueError(f"unknown normal_form {self.normal_form!r}")
        if self.stop_rule not in ("any", "all"):
            raise ValueError(f"unknown stop_rule {self.stop_rule!r}")
        return self


class RunStatus(str, Enum):
    CONVERGED = "Converged"
    MAX_ITERS = "MaxIters"
    STAGNATED = "Stagnated"


@dataclass
class Evaluation:
    """Cantidades del estado al inicio de una iteración"""
    objective: float
    residual_max: float
    target_mean: float
    covector: DerivativeCovector
    gradient: GradientField
    grad_l2: float


@dataclass
class RunContext:
    """
    Datos que viven toda la corrida: campo mu, tolerancias resueltas y
    proyector de la superficie inicial
    """
    mu: NodalField
    grad_tol: Optional[float] = None
    residual_tol: Optional[float] = None
    projector: Optional[SurfaceProjector] = None
    stop_rule: str = "any"
    iteration: int = 0
    stopwatch: Stopwatch = field(default_factory=Stopwatch)
    resolved: bool = False

    @classmethod
    def prepare(cls, state: PreShapeState, metric_cfg: MetricConfig, opt_cfg: OptimizerConfig) -> "RunContext":
        """
        Resuelve mu una sola vez para la corrida

        Raises:
            ConfigError: alpha_L2 = 0 sin vértices de Dirichlet
        """
        domain = state.domain
        if metric_cfg.alpha_L2 == 0 and domain.dirichlet.size == 0:
            raise ConfigError("alpha_L2 = 0 with an empty Dirichlet set leaves rigid motions in the kernel")
        if domain.standalone:
            mu = NodalField(np.full(domain.mesh.n_vertices, metric_cfg.mu_max), domain.mesh, name="mu")
        else:
            mu = solve_mu(domain.mesh, domain.shape_map, metric_cfg, positions=domain.positions)
        projector = None
        if opt_cfg.reproject:
            if state.codim == 1 and state.dim_ambient == 3:
                ref = state.reference_mesh
                projector = SurfaceProjector(ref.vertices, ref.cells)
            else:
                logger.warning("⚠️ reprojection only applies to triangle surfaces; disabled")
        return cls(mu=mu, projector=projector, stop_rule=opt_cfg.stop_rule)

    def resolve_tolerances(self, ev: Evaluation, opt_cfg: OptimizerConfig) -> None:
        if self.resolved:
            return
        if opt_cfg.grad_tol is not None:
            self.grad_tol = opt_cfg.grad_tol
        elif opt_cfg.grad_tol_rel is not None:
            self.grad_tol = opt_cfg.grad_tol_rel * ev.grad_l2
        if opt_cfg.residual_tol is not None:
            self.residual_tol = opt_cfg.residual_tol
        elif opt_cfg.residual_tol_rel is not None:
            self.residual_tol = opt_cfg.residual_tol_rel * ev.target_mean
        self.resolved = True
        logger.info(f"stopping tolerances ({self.stop_rule}): grad_l2 <= {self.grad_tol}, residual_max <= {self.residual_tol}")

    def converged_by(self, grad_l2: float, residual_max: float) -> Optional[str]:
        """Nombre del criterio cumplido ('grad_tol+residual_tol' si se exigen todos), o None."""
        checks = []
        if self.grad_tol is not None:
            checks.append(("grad_tol", grad_l2 <= self.grad_tol))
        if self.residual_tol is not None:
            checks.append(("residual_tol", residual_max <= self.residual_tol))
        if self.stop_rule == "all":
            if checks and all(met for _, met in checks):
                return "+".join(name for name, _ in checks)
            return None
        return next((name for name, met in checks if met), None)


@dataclass
class RunResult:
    state: PreShapeState
    status: RunStatus
    records: List[IterationRecord]
    criterion: Optional[str] = None

    @property
    def iterations(self) -> int:
        return len(self.records)


def evaluate(state: PreShapeState, spec: TargetSpec, metric_cfg: MetricConfig,
             opt_cfg: OptimizerConfig, ctx: RunContext) -> Evaluation:
    """
    Objetivo, residuo, covector y gradiente de la métrica en el estado actual

    El gradiente U resuelve a(U, V) = -DJ[V], es decir, ya es dirección de descenso.
    Con la componente tangencial sobre una superficie, U se proyecta en los
    vértices de la forma; el covector es tangencial, así DJ[PU] = DJ[U].
    """
    target = build_target(spec, state)
    J = objective(state, target)
    residual = state.density() - target.values
    target_mean = float(np.sum(target.values * state.current_volumes) / state.total_volume)
    covector = assemble_derivative(state, spec, opt_cfg.component, opt_cfg.normal_form)
    domain = state.domain
    gradient = represent_gradient(domain.mesh, ctx.mu, metric_cfg, covector.negated(),
                                  dirichlet=domain.dirichlet, positions=domain.positions,
                                  vertex_map=domain.shape_map)
    if opt_cfg.component == Component.TANGENTIAL and state.codim == 1:
        gradient = project_tangential(gradient, state)
    grad_l2 = l2_norm(gradient, domain.mesh, domain.positions)
    return Evaluation(J, float(np.abs(residual).max()), target_mean, covector, gradient, grad_l2)


def project_tangential(gradient: GradientField, state: PreShapeState) -> GradientField:
    """Quita la parte normal de U en los vértices de la forma embebida."""
    values = np.array(gradient.values)
    shape = state.domain.shape_map
    P = vertex_projectors(state.vertex_normals)
    values[shape] = np.einsum('iab,ib->ia', P, values[shape])
    return GradientField(values, gradient.mesh, gradient.dirichlet, gradient.residual)


def _total_q(spec: TargetSpec, state: PreShapeState) -> float:
    return target_terms(spec, state).total_q


def _reproject(state: PreShapeState, ctx: RunContext) -> PreShapeState:
    interior = state.interior_mask
    projected = np.array(state.positions)
    projected[interior] = ctx.projector.project(state.positions[interior])
    try:
        return state.with_positions(projected)
    except InvertedCellError as e:
        logger.warning(f"⚠️ reprojection rejected: {e}")
        return state


def step(state: PreShapeState, spec: TargetSpec, metric_cfg: MetricConfig,
         opt_cfg: OptimizerConfig, context: Optional[RunContext] = None):
    """
    Una iteración de descenso con búsqueda lineal

    Args:
        state: estado válido
        spec: densidad objetivo
        metric_cfg: configuración de la métrica
        opt_cfg: configuración del optimizador
        context: contexto de la corrida (se prepara uno si falta)

    Returns:
        (nuevo estado, IterationRecord); con step_scale = 0 si ya hay convergencia

    Raises:
        SolverError: U no es dirección de descenso
        StagnationError: J no baja tras max_backtracks retrocesos
    """
    ctx = context if context is not None else RunContext.prepare(state, metric_cfg, opt_cfg)
    iteration = ctx.iteration
    ctx.iteration += 1
    ev = evaluate(state, spec, metric_cfg, opt_cfg, ctx)
    ctx.resolve_tolerances(ev, opt_cfg)

    def make_record(scale: float, backtracks: int) -> IterationRecord:
        return IterationRecord(iter=iteration, objective=ev.objective, grad_l2=ev.grad_l2,
                               residual_max=ev.residual_max, step_scale=scale, backtracks=backtracks,
                               wall_time=ctx.stopwatch.elapsed())

    if ctx.converged_by(ev.grad_l2, ev.residual_max):
        return state, make_record(0.0, 0)

    domain = state.domain
    U = ev.gradient.values
    slope = ev.covector.pair(U[domain.shape_map])
    if not slope < 0.0:
        raise SolverError(f"metric gradient is not a descent direction (DJ[U] = {slope:.3e})")

    scale = opt_cfg.initial_scale
    accepted = None
    backtracks = 0
    for backtracks in range(opt_cfg.max_backtracks + 1):
        try:
            candidate = state.with_domain_positions(domain.positions + scale * U)
        except InvertedCellError as e:
            logger.debug(f"iteration {iteration}: s={scale:.3e} rejected ({e})")
            scale *= opt_cfg.backtrack_factor
            continue
        J_new = objective(candidate, build_target(spec, candidate))
        if J_new < ev.objective + opt_cfg.armijo * scale * slope:
            accepted = candidate
            break
        logger.debug(f"iteration {iteration}: s={scale:.3e} gives J={J_new:.6e} >= {ev.objective:.6e}")
        scale *= opt_cfg.backtrack_factor

    if accepted is None:
        record = make_record(0.0, opt_cfg.max_backtracks + 1)
        raise StagnationError(
            f"no decrease of J after {opt_cfg.max_backtracks} backtracks at iteration {iteration}", record)

    if state.codim == 1:
        displacement = accepted.positions - state.positions
        normal_move = np.abs(np.einsum('ia,ia->i', displacement, state.vertex_normals)).max()
        logger.debug(f"iteration {iteration}: max normal displacement {normal_move / state.mean_edge_length():.3e} h")
        if opt_cfg.component == Component.TANGENTIAL and not spec.is_uniform and spec.normalize:
            q_old, q_new = _total_q(spec, state), _total_q(spec, accepted)
            drift = abs(q_new - q_old) / abs(q_old)
            if drift > opt_cfg.q_drift_warning:
                logger.warning(f"⚠️ iteration {iteration}: ∫q changed by {drift:.2e} under a tangential step")

    if ctx.projector is not None:
        accepted = _reproject(accepted, ctx)
    return accepted, make_record(scale, backtracks)


def run(state: PreShapeState, spec: TargetSpec, metric_cfg: MetricConfig,
        opt_cfg: OptimizerConfig, sink: RecordSink) -> RunResult:
    """
    Itera hasta convergencia, max_iters o estancamiento

    Args:
        state: estado inicial
        spec: densidad objetivo
        metric_cfg: configuración de la métrica
        opt_cfg: configuración del optimizador
        sink: consumidor de registros y capturas

    Returns:
        RunResult con el estado final, el estado de salida y los registros
    """
    ctx = RunContext.prepare(state, metric_cfg, opt_cfg)
    records: List[IterationRecord] = []
    status = RunStatus.MAX_ITERS
    criterion = None
    logger.info(f"🚀 optimizing {state.reference_mesh!r} with component {opt_cfg.component.value}")

    for it in range(opt_cfg.max_iters):
        if opt_cfg.snapshot_every and it % opt_cfg.snapshot_every == 0:
            sink.snapshot(state, spec, it)
        try:
            state, record = step(state, spec, metric_cfg, opt_cfg, ctx)
        except StagnationError as e:
            logger.warning(f"⚠️ {e}")
            if e.record is not None:
                records.append(e.record)
                sink.record(e.record)
            status = RunStatus.STAGNATED
            break
        records.append(record)
        sink.record(record)
        logger.info(
            f"iter {record.iter:4d}  J={record.objective:.6e}  grad_l2={record.grad_l2:.3e}  "
            f"residual={record.residual_max:.3e}  s={record.step_scale:.3e}  backtracks={record.backtracks}  "
            f"t={record.wall_time:.2f}s"
        )
        if record.step_scale == 0.0:
            criterion = ctx.converged_by(record.grad_l2, record.residual_max)
            status = RunStatus.CONVERGED
            break

    if status == RunStatus.CONVERGED:
        logger.info(f"✅ converged at iteration {records[-1].iter} ({criterion})")
    else:
        logger.info(f"run finished with status {status.value} after {len(records)} iterations")
    sink.finalize(state, spec)
    return RunResult(state=state, status=status, records=records, criterion=criterion)
