"""Unconditionally energy-stable high-order RK-DG schemes for fourth-order
gradient flows of Swift-Hohenberg type on structured meshes."""

from .dg import (DGField, DGSpace, QuadField, QuadRule, error_norms, eval_at_quad,
                 norm_L2, norm_Linf, project, trace_avg_jump)
from .diagnostics import EnergyRecord, EocTable, discrete_energy, eoc, eoc_table
from .mesh import Face, Mesh, build_mesh
from .operators import (DGOperator, SeparableG, SolverError, StageSolver, StageSystem,
                        apply_Lh, assemble_G, assemble_stage_system, solve)
from .potential import (ManufacturedSolution, Potential, manufactured_source, sh_minima,
                        swift_hohenberg)
from .rk import (ButcherTableau, builtin, certify_algebraically_stable, parse_tableau,
                 stability_matrix)
from .stepper import LEQRKStepper, StageResult, StepState

__version__ = "0.1.0"
