"""
Verify - Finite Difference Module
Diferencias centrales del funcional de seguimiento contra el covector ensamblado

Considera:
- Direcciones P1 aleatorias nulas en el borde y normalizadas en L2
- Perturbación phi ± hV de los vértices de la forma
- El objetivo (y su normalización) se reconstruye en cada evaluación
- Error mínimo sobre el barrido de h y pendiente log-log en el rango previo al redondeo
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
import pandas as pd

from fields.targets import TargetSpec, build_target
from mesh_core.fem import p1_mass
from preshape.derivative import Component, DerivativeCovector, assemble_derivative, objective
from preshape.state import PreShapeState
from utils.errors import InvertedCellError
from utils.logger import setup_logger

logger = setup_logger(__name__)

DEFAULT_H_SWEEP = tuple(10.0 ** (-k / 2.0) for k in range(4, 17))


@dataclass
class FDReport:
    """Resultado por dirección del chequeo de diferencias finitas"""
    table: pd.DataFrame
    seed: int
    rtol: float = 1e-5
    atol: float = 1e-9
    sweep: List[pd.DataFrame] = field(default_factory=list)

    @property
    def passed_mask(self) -> np.ndarray:
        t = self.table
        return ((t["rel_error"] < self.rtol) | (t["abs_error"] < self.atol)).to_numpy()

    @property
    def n_passed(self) -> int:
        return int(self.passed_mask.sum())

    @property
    def passed(self) -> bool:
        return bool(self.passed_mask.all())

    @property
    def median_slope(self) -> float:
        slopes = self.table["slope"].dropna()
        return float(slopes.median()) if len(slopes) else float("nan")

    def summary(self) -> str:
        return (f"FD check (seed {self.seed}): {self.n_passed}/{len(self.table)} directions within "
                f"rtol={self.rtol:.0e}, median slope {self.median_slope:.2f}")


def random_directions(state: PreShapeState, count: int, seed: int) -> List[np.ndarray]:
    """Campos P1 aleatorios, nulos en el borde, con ||V||_L2 = 1."""
    rng = np.random.default_rng(seed)
    M = p1_mass(state.positions, state.cells)
    interior = state.interior_mask
    directions = []
    for _ in range(count):
        V = rng.standard_normal((state.n_vertices, state.dim_ambient))
        V[~interior] = 0.0
        norm = np.sqrt(float(np.einsum('ia,ia->', V, M @ V)))
        directions.append(V / norm if norm > 0 else V)
    return directions


def _objective_at(state: PreShapeState, spec: TargetSpec, positions: np.ndarray) -> Optional[float]:
    try:
        moved = state.with_positions(positions)
    except InvertedCellError:
        return None
    return objective(moved, build_target(spec, moved))


def fd_check(
    state: PreShapeState,
    spec: TargetSpec,
    directions: int = 20,
    h_sweep: Sequence[float] = DEFAULT_H_SWEEP,
    seed: int = 0,
    component: Component = Component.FULL,
    derivative_hook: Optional[Callable[[DerivativeCovector], DerivativeCovector]] = None,
) -> FDReport:
    """
    Compara (J(phi+hV) - J(phi-hV)) / 2h con DJ[V]

    Args:
        state: estado válido
        spec: densidad objetivo
        directions: número de direcciones aleatorias
        h_sweep: pasos h, de mayor a menor
        seed: semilla de las direcciones
        component: componente del covector a emparejar
        derivative_hook: transforma el covector antes de emparejar (control negativo)

    Returns:
        FDReport con una fila por dirección
    """
    covector = assemble_derivative(state, spec, component)
    if derivative_hook is not None:
        covector = derivative_hook(covector)
    rows, sweeps = [], []
    for k, V in enumerate(random_directions(state, directions, seed)):
        pairing = covector.pair(V)
        sweep = []
        for h in h_sweep:
            plus = _objective_at(state, spec, state.positions + h * V)
            minus = _objective_at(state, spec, state.positions - h * V)
            if plus is None or minus is None:
                continue
            fd = (plus - minus) / (2.0 * h)
            sweep.append({"direction": k, "h": h, "fd": fd, "abs_error": abs(fd - pairing)})
        frame = pd.DataFrame(sweep, columns=["direction", "h", "fd", "abs_error"])
        sweeps.append(frame)
        if frame.empty:
            rows.append({"direction": k, "pairing": pairing, "fd": np.nan, "h": np.nan,
                         "abs_error": np.inf, "rel_error": np.inf, "slope": np.nan})
            continue
        best = frame.loc[frame["abs_error"].idxmin()]
        slope = np.nan
        if len(frame) >= 2 and frame["abs_error"].iloc[0] > 0 and frame["abs_error"].iloc[1] > 0:
            e0, e1 = frame["abs_error"].iloc[0], frame["abs_error"].iloc[1]
            h0, h1 = frame["h"].iloc[0], frame["h"].iloc[1]
            slope = float(np.log(e0 / e1) / np.log(h0 / h1))
        rel = best["abs_error"] / abs(pairing) if pairing != 0.0 else np.inf
        rows.append({"direction": k, "pairing": pairing, "fd": best["fd"], "h": best["h"],
                     "abs_error": best["abs_error"], "rel_error": rel, "slope": slope})
    report = FDReport(table=pd.DataFrame(rows), seed=seed, sweep=sweeps)
    logger.info(report.summary())
    return report


def negate_derivative(covector: DerivativeCovector) -> DerivativeCovector:
    """Hook de prueba: invierte el signo del covector."""
    return covector.negated()
