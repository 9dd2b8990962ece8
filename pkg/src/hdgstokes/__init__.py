"""Hybrid discontinuous Galerkin discretisation of the Stokes problem with
tangential-velocity / normal-flux boundary conditions, with and without
pressure-projection stabilisation."""
from .assembly import GlobalSystem, SolutionFields, SolverError, apply_operator, assemble, solve
from .forms import MethodParams
from .manufactured import ErrorReport, ExactSolution, compute_errors, eoc, exact_fields
from .mesh import Mesh, affine_map, generate_structured, refinement_sequence
from .quadrature import edge_rule, triangle_rule
from .spaces import make_spaces

__all__ = [
    "ErrorReport", "ExactSolution", "GlobalSystem", "Mesh", "MethodParams", "SolutionFields", "SolverError",
    "affine_map", "apply_operator", "assemble", "compute_errors", "edge_rule", "eoc", "exact_fields",
    "generate_structured", "make_spaces", "refinement_sequence", "solve", "triangle_rule",
]
