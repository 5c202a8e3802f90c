"""Hybrid mixed domain decomposition finite elements on curved quadrilateral meshes."""
from .analysis import (ConvergenceTable, ErrorReport, ReferenceSolution, annulus_reference, compute_errors,
                       fit_rates, fit_slope, l2_project, manufactured_square_reference, trace_projection_error)
from .assembly import BlockSystem, ProblemData, assemble, dump_triplets, load_triplets
from .errors import ConfigurationError, HMDDError, InvalidGeometryError, SolverError
from .mesh import Mesh, build_annulus_mesh, build_square_mesh, read_mesh, refine, write_mesh
from .quadrature import gauss_rule, legendre_eval, tensor_rule
from .solver import LinearSolveReport, condense_skeleton, solve, solve_condensed, solve_full
from .spaces import DofMap, Solution, build_dofmap
from .trace import build_trace_projector, project_trace

__version__ = "0.1.0"
