"""crossing_lab: numerical checks of sharp crossing bounds for geodesic drawings.

Submodules
----------
sphere, planar   geometry and exact crossing predicates
drawing          finite drawings, generators and JSON files
counting         exact crossing counts (brute and grid engines)
density          edge densities w(x, y) on the sphere and convex domains
functionals      Monte-Carlo and quadrature estimates of e(w), Cr(w) and fluxes
busemann         one-dimensional Busemann inequalities on the circle and line
cli              the ``crossing-lab`` command
"""

from .counting import CrossingReport, count_crossings
from .density import parse_density
from .drawing import Drawing, generate_planar_threshold, generate_sphere_threshold, load_drawing, save_drawing
from .functionals import (
    McEstimate,
    mc_crossing_functional,
    mc_edge_density,
    theoretical_planar_bound,
    theoretical_sphere_bound,
)
from .planar import parse_domain
from .sphere import SPHERE

__version__ = "0.1.0"

__all__ = [
    "SPHERE", "Drawing", "CrossingReport", "McEstimate", "count_crossings", "generate_sphere_threshold",
    "generate_planar_threshold", "load_drawing", "save_drawing", "parse_density", "parse_domain",
    "mc_edge_density", "mc_crossing_functional", "theoretical_sphere_bound", "theoretical_planar_bound",
]
