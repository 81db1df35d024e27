"""Predict and check the birth of interior vortices in heat-coupled planar flow.

The package builds the first-order Taylor field of a scaled velocity, locates
the time and point where a degenerate stagnation point appears, certifies it
topologically, and cross-checks against a finite-difference integration.
"""

__version__ = "0.1.0"

from .fields import VectorFieldSpec, parse_expr
from .model import ConfigError, Constants, DimensionlessScenario, Scenario, Window, load_scenario, nondimensionalize
from .predictor import canonical_scenario, closed_form_theorem46, locate_separation
from .taylor import first_order_field

__all__ = [
    "__version__",
    "ConfigError",
    "Constants",
    "DimensionlessScenario",
    "Scenario",
    "VectorFieldSpec",
    "Window",
    "canonical_scenario",
    "closed_form_theorem46",
    "first_order_field",
    "load_scenario",
    "locate_separation",
    "nondimensionalize",
    "parse_expr",
]
