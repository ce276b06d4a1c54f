"""
PreShape Tracker - Main Entry Point
Optimización de la calidad de mallas por seguimiento de parametrización

Comandos disponibles:
- optimize [CONFIG]: Descenso de gradiente con log.csv y capturas VTK
- check [CONFIG]: Diferencias finitas y auditorías (o --circle para los oráculos)
- quality MESH: Histograma de volúmenes, densidad y calidad de celdas
- decompose [CONFIG]: Exporta las componentes Full/Tangential/Normal y sus gradientes

Códigos de salida: 0 convergencia/chequeo correcto, 2 MaxIters/Stagnated, 1 error.
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

from fields.containers import NodalVectorField
from mesh_core.vtk_io import write_vtk
from metric.elasticity import represent_gradient
from optimizer.descent import RunContext, RunStatus, run
from optimizer.records import CsvRecordSink, state_fields
from preshape.derivative import Component, assemble_derivative
from utils.config import RunConfig, load_run_config, preset_path, prepare_state
from utils.errors import PreShapeError
from utils.logger import app_logger as logger
from utils.logger import set_global_level
from verify.audit import area_nullity_study, audit
from verify.circle_oracle import DEFAULT_SEGMENTS, circle_suite
from verify.fd_check import fd_check, negate_derivative
from verify.quality import compare_reports, quality_report

# Cargar variables de entorno
load_dotenv()

DEFAULT_CONFIG = Path(__file__).resolve().parent / "config.json"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2


def resolve_config(args) -> RunConfig:
    """--preset tiene prioridad; luego el archivo posicional; luego config.json."""
    if getattr(args, "preset", None):
        path = preset_path(args.preset)
    elif getattr(args, "config", None):
        path = Path(args.config)
    else:
        path = DEFAULT_CONFIG
    print(f"📄 Cargando {path}...")
    cfg = load_run_config(path)
    if getattr(args, "output_dir", None):
        cfg.output.output_dir = args.output_dir
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    set_global_level(args.log_level or cfg.logging.level)
    return cfg


def cmd_optimize(args) -> int:
    """Ejecuta el optimizador y escribe log.csv, iter_%04d.vtk y final.vtk."""
    cfg = resolve_config(args)
    state, spec = prepare_state(cfg)
    sink = CsvRecordSink(cfg.output.output_dir, log_wall_time=cfg.output.log_wall_time)
    print(f"🚀 Optimizando '{cfg.name}' ({state.reference_mesh.n_cells} celdas)")
    result = run(state, spec, cfg.metric, cfg.optimizer, sink)
    print(f"📄 Resultados en {sink.output_dir}")
    if result.status == RunStatus.CONVERGED:
        print(f"✅ Converged en {result.iterations} iteraciones ({result.criterion})")
        return EXIT_OK
    print(f"⚠️ {result.status.value} tras {result.iterations} iteraciones")
    return EXIT_NOT_CONVERGED


def cmd_check(args) -> int:
    """Chequeo de diferencias finitas + auditoría, o suite de oráculos de la circunferencia."""
    if args.circle:
        segments = args.segments or list(DEFAULT_SEGMENTS)
        report = circle_suite(segments)
        print(report.summary())
        if report.passed:
            print("✅ Oráculos de la circunferencia: convergencia de orden 2")
            return EXIT_OK
        print("❌ Oráculos de la circunferencia fuera de tolerancia")
        return EXIT_ERROR

    cfg = resolve_config(args)
    state, spec = prepare_state(cfg)
    hook = negate_derivative if args.negate_derivative else None
    fd = fd_check(state, spec, directions=args.directions, seed=cfg.seed, derivative_hook=hook)
    report = audit(state, spec, seed=cfg.seed)
    nullity = area_nullity_study() if state.codim == 1 else None

    output_dir = Path(cfg.output.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    fd.table.to_csv(output_dir / "fd_check.csv", index=False)
    with open(output_dir / "audit.txt", 'w', encoding='utf-8') as f:
        for key, value in report.as_dict().items():
            f.write(f"{key}: {value}\n")
    print(fd.summary())
    for key, value in report.as_dict().items():
        print(f"   {key}: {value}")
    if nullity is not None:
        print(nullity.table.to_string(index=False, float_format=lambda v: f"{v:.3e}"))
        print(f"   area_nullity_order: {nullity.order:.2f}")

    nullity_ok = nullity is None or nullity.passed
    if fd.passed and report.passed and nullity_ok:
        print("✅ Chequeos correctos")
        return EXIT_OK
    if not fd.passed:
        print(f"❌ Diferencias finitas: {len(fd.table) - fd.n_passed} direcciones fuera de tolerancia")
    if not report.passed:
        print(f"❌ Auditoría: {report.failures()}")
    if not nullity_ok:
        print(f"❌ Orden de la nulidad del área: {nullity.order:.2f}")
    return EXIT_ERROR


def cmd_quality(args) -> int:
    """Reporte de calidad de una malla (y comparación opcional con otra)."""
    if args.log_level:
        set_global_level(args.log_level)
    first = quality_report(args.mesh, geometry_only=args.geometry_only, bins=args.bins)
    print(first.to_text())
    if args.compare:
        second = quality_report(args.compare, geometry_only=args.geometry_only, bins=args.bins)
        print()
        print(second.to_text())
        print()
        print(compare_reports(first, second).to_string(float_format=lambda v: f"{v:.6e}"))
    return EXIT_OK


def cmd_decompose(args) -> int:
    """Exporta las componentes del covector y sus representaciones en la métrica."""
    cfg = resolve_config(args)
    state, spec = prepare_state(cfg)
    ctx = RunContext.prepare(state, cfg.metric, cfg.optimizer)
    domain = state.domain
    components = [Component.FULL, Component.TANGENTIAL]
    if state.codim == 1:
        components.append(Component.NORMAL)

    fields = list(state_fields(state, spec))
    for component in components:
        covector = assemble_derivative(state, spec, component, cfg.optimizer.normal_form)
        gradient = represent_gradient(domain.mesh, ctx.mu, cfg.metric, covector, dirichlet=domain.dirichlet,
                                      positions=domain.positions, vertex_map=domain.shape_map)
        name = component.value.lower()
        fields.append(NodalVectorField(covector.interior_values(), state.reference_mesh, name=f"covector_{name}"))
        fields.append(NodalVectorField(gradient.values[domain.shape_map], state.reference_mesh,
                                       name=f"gradient_{name}"))

    output_dir = Path(cfg.output.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    path = output_dir / "decomposition.vtk"
    write_vtk(state.reference_mesh, fields, path, positions=state.positions)
    print(f"📄 Descomposición escrita en {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--preset", choices=["exp1", "exp2", "exp3"], help="Configuración de experimento incluida")
    common.add_argument("--output-dir", dest="output_dir", help="Carpeta de resultados")
    common.add_argument("--seed", type=int, help="Semilla de los chequeos aleatorios")
    common.add_argument("--log-level", dest="log_level", help="DEBUG, INFO, WARNING o ERROR")

    parser = argparse.ArgumentParser(prog="preshape-tracker", description=__doc__.splitlines()[2])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", parents=[common], help="Ejecuta el descenso de gradiente")
    p.add_argument("config", nargs="?", help="Archivo de configuración JSON")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("check", parents=[common], help="Diferencias finitas, auditorías y oráculos")
    p.add_argument("config", nargs="?", help="Archivo de configuración JSON")
    p.add_argument("--circle", action="store_true", help="Suite de oráculos de la circunferencia")
    p.add_argument("--segments", type=int, nargs="+", help="Resoluciones del polígono para --circle")
    p.add_argument("--directions", type=int, default=20, help="Direcciones aleatorias del chequeo")
    p.add_argument("--negate-derivative", dest="negate_derivative", action="store_true",
                   help="Invierte el signo del covector (control negativo)")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("quality", help="Estadísticas de calidad de una malla")
    p.add_argument("mesh", help="Archivo .msh o .vtk")
    p.add_argument("--compare", help="Segunda malla para comparar")
    p.add_argument("--geometry-only", dest="geometry_only", action="store_true", help="Ignorar campos del archivo")
    p.add_argument("--bins", type=int, default=10, help="Intervalos del histograma")
    p.add_argument("--log-level", dest="log_level", help="DEBUG, INFO, WARNING o ERROR")
    p.set_defaults(func=cmd_quality)

    p = sub.add_parser("decompose", parents=[common], help="Exporta la descomposición del covector")
    p.add_argument("config", nargs="?", help="Archivo de configuración JSON")
    p.set_defaults(func=cmd_decompose)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PreShapeError as e:
        print(f"❌ {e}")
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_ERROR
    except Exception:
        logger.exception("❌ Unexpected error")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
