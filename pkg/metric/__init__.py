"""Init files para convertir directorios en módulos Python"""

from metric.elasticity import GradientField, MetricConfig, l2_norm, represent_gradient, solve_mu

__all__ = ["GradientField", "MetricConfig", "l2_norm", "represent_gradient", "solve_mu"]
