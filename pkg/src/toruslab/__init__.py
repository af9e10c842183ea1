"""Toral dynamics lab: spectral splittings, Schmidt games, equidistribution,
entropy and dimension diagnostics, and a finite-horizon constructor of points
that equidistribute under one toral map while avoiding targets under another."""

__version__ = "0.1.0"

from .errors import (BudgetError, CertificationError, ClassificationError, ConfigurationError,  # noqa: E402
                     ConstructionError, EstimationError, IntegrityError, LabError, RejectedCertificate,
                     RejectedInput, UnsupportedStructure)
from .torus import (IntMatrix, OrbitSegment, TorusPoint, apply, orbit, point, random_point,  # noqa: E402
                    reduce_mod1, torus_distance)

__all__ = [
    "BudgetError", "CertificationError", "ClassificationError", "ConfigurationError", "ConstructionError",
    "EstimationError", "IntegrityError", "LabError", "RejectedCertificate", "RejectedInput",
    "UnsupportedStructure", "IntMatrix", "OrbitSegment", "TorusPoint", "apply", "orbit", "point",
    "random_point", "reduce_mod1", "torus_distance",
]
