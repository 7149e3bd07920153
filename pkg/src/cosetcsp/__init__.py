"""Constraint satisfaction over coset templates.

Finite groups and cosets, coset templates and instances, a complete
solver, anomaly detection and almost-direct-product extraction, the
(k,l)-consistency algorithm, and the torus instances that defeat it.
"""

from .errors import CosetCSPError
from .groups import (
    ADPKind,
    CosetKind,
    CosetSet,
    FiniteGroup,
    ProductGroup,
    build_group,
    classify_almost_direct,
    classify_subset,
    cyclic,
    klein4,
    product,
    quotient_adp,
    symmetric,
    translate,
)
from .csp import CosetTemplate, Constraint, Instance, is_solution, validate_template
from .solver import all_solutions, solve
from .consistency import run_kl_consistency, check_equivariance
from .io import load_instance, load_template

__version__ = "0.1.0"

__all__ = [
    "ADPKind", "CosetKind", "CosetSet", "CosetCSPError", "CosetTemplate", "Constraint",
    "FiniteGroup", "Instance", "ProductGroup", "all_solutions", "build_group",
    "check_equivariance", "classify_almost_direct", "classify_subset", "cyclic", "is_solution",
    "klein4", "load_instance", "load_template", "product", "quotient_adp", "run_kl_consistency",
    "solve", "symmetric", "translate", "validate_template",
]
