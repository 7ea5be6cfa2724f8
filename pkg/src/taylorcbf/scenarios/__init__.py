"""Ready-to-run benchmark scenarios."""

from .spring_mass import SpringMassParams, spring_mass_system, spring_mass_nominal
from .corridor import CorridorParams, corridor_barriers, corridor_clf_rows, corridor_nominal

__all__ = [
    "SpringMassParams", "spring_mass_system", "spring_mass_nominal",
    "CorridorParams", "corridor_barriers", "corridor_clf_rows", "corridor_nominal",
]
