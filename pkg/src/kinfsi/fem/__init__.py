from .assembly import (
    assemble_boundary_load,
    assemble_divergence,
    assemble_fluid_stiffness,
    assemble_mass,
    assemble_string_operator,
    assemble_thick_elasticity,
    pressure_pulse,
    prolongation_matrix,
    string_coefficients,
    to_coordinate_text,
    trace_matrix,
)
from .quadrature import QuadratureRule, edge_rule, triangle_rule
from .spaces import (
    DofMap,
    SpaceKind,
    boundary_constraints,
    interface_space,
    interpolate,
    mini_space,
    p1_iso_p2_space,
    p1_space,
)
