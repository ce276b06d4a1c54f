"""
Optimizer - Records Module
Registro de iteraciones y capturas de estado de una corrida

Funciones:
- Acumular registros en memoria (modo volátil, usado por tests y check)
- Escribir log.csv en modo append con pandas
- Exportar iter_%04d.vtk periódicos y final.vtk con densidad y objetivo
"""

import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import List, Protocol

import numpy as np
import pandas as pd

from fields.containers import CellField
from fields.targets import TargetSpec, build_target
from mesh_core.vtk_io import write_vtk
from utils.logger import setup_logger

logger = setup_logger(__name__)

CSV_COLUMNS = ["iter", "objective", "grad_l2", "residual_max", "step_scale", "backtracks", "wall_time"]


@dataclass
class IterationRecord:
    """Valores registrados en una iteración (estado al inicio del paso)"""
    iter: int
    objective: float
    grad_l2: float
    residual_max: float
    step_scale: float
    backtracks: int
    wall_time: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.objective):
            raise ValueError(f"iteration {self.iter}: objective is not finite")
        if not self.grad_l2 >= 0:
            raise ValueError(f"iteration {self.iter}: grad_l2 must be >= 0")

    def as_row(self) -> dict:
        return asdict(self)


class RecordSink(Protocol):
    def record(self, rec: IterationRecord) -> None: ...

    def snapshot(self, state, spec: TargetSpec, iteration: int) -> None: ...

    def finalize(self, state, spec: TargetSpec) -> None: ...


def state_fields(state, spec: TargetSpec) -> list:
    """Campos de celda adjuntos a las capturas VTK."""
    target = build_target(spec, state)
    density = state.density()
    mesh = state.reference_mesh
    return [
        CellField(density, mesh, name="density"),
        target,
        CellField(density - target.values, mesh, name="residual"),
        state.gM,
    ]


class MemoryRecordSink:
    """Sink volátil: guarda registros y cuenta capturas sin escribir archivos"""

    def __init__(self):
        self.records: List[IterationRecord] = []
        self.snapshots: List[int] = []
        self.final_state = None

    def record(self, rec: IterationRecord) -> None:
        self.records.append(rec)

    def snapshot(self, state, spec: TargetSpec, iteration: int) -> None:
        self.snapshots.append(iteration)

    def finalize(self, state, spec: TargetSpec) -> None:
        self.final_state = state

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.as_row() for r in self.records], columns=CSV_COLUMNS)


class CsvRecordSink(MemoryRecordSink):
    """
    Sink persistente en output_dir

    Cada registro se agrega a log.csv en cuanto llega, de modo que una
    corrida interrumpida conserva las iteraciones hechas.
    """

    def __init__(self, output_dir, log_wall_time: bool = False):
        """
        Args:
            output_dir: carpeta de salida (se crea si no existe)
            log_wall_time: escribir el tiempo medido; si es False se escribe 0.0
                para que configuraciones idénticas den logs idénticos
        """
        super().__init__()
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.log_path = self.output_dir / "log.csv"
        self.log_wall_time = log_wall_time
        self.written: List[Path] = []
        pd.DataFrame(columns=CSV_COLUMNS).to_csv(self.log_path, index=False)

    def record(self, rec: IterationRecord) -> None:
        super().record(rec)
        row = rec.as_row()
        if not self.log_wall_time:
            row["wall_time"] = 0.0
        frame = pd.DataFrame([row], columns=CSV_COLUMNS)
        frame.to_csv(self.log_path, mode="a", header=False, index=False, float_format="%.12e")

    def _write(self, state, spec: TargetSpec, name: str) -> Path:
        path = self.output_dir / name
        domain = state.domain
        write_vtk(state.reference_mesh, state_fields(state, spec), path, positions=state.positions)
        if not domain.standalone:
            write_vtk(domain.mesh, (), path.with_name(path.stem + "_domain.vtk"), positions=domain.positions)
        self.written.append(path)
        return path

    def snapshot(self, state, spec: TargetSpec, iteration: int) -> None:
        super().snapshot(state, spec, iteration)
        path = self._write(state, spec, f"iter_{iteration:04d}.vtk")
        logger.debug(f"snapshot {path}")

    def finalize(self, state, spec: TargetSpec) -> None:
        super().finalize(state, spec)
        path = self._write(state, spec, "final.vtk")
        logger.info(f"📄 final state written to {path}")


class Stopwatch:
    """Tiempo de pared desde el inicio de la corrida"""

    def __init__(self):
        self._start = time.perf_counter()

    def elapsed(self) -> float:
        return time.perf_counter() - self._start


def read_log(path) -> pd.DataFrame:
    """Lee un log.csv verificando la cabecera."""
    frame = pd.read_csv(path)
    if list(frame.columns) != CSV_COLUMNS:
        raise ValueError(f"{path}: unexpected header {list(frame.columns)}")
    return frame
