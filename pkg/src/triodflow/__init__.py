"""Finite element curvature flow of planar triods with a mobile triple junction."""

__version__ = "0.1.0"

from .errors import (
    CgDidNotConvergeError,
    ConfigError,
    DegenerateElementError,
    GridMismatchError,
    InvalidSequenceError,
    NonpositiveDiagonalError,
    TriodflowError,
)
from .mesh import (
    CurveChain,
    ElementGeometry,
    SimParams,
    TriodState,
    element_geometry,
    energy,
    interpolate_curve,
    junction_sector_angles,
    min_segment_length,
    rotate,
    translate,
)
from .assembly import (
    BlockTridiag,
    ConstrainedOperator,
    apply_fixed_end_mask,
    apply_junction_average,
    assemble_mass,
    assemble_stiffness,
    build_step_system,
)
from .stepper import StepReport, StoppingRule, Trajectory, cg_solve, evolve, time_step
from .spectral import (
    SpectrumReport,
    conditioning_eoc,
    constrained_basis,
    equilibrated_mass_spectrum,
    jacobi_eigenvalues,
    system_condition,
)
from .metrics import (
    NestedErrorAccumulator,
    NestedGridMap,
    angle_error_sup,
    derivative_error_sup,
    eoc,
    equilibrium_errors,
    junction_coefficients,
    position_error_sup,
    steiner_point,
    velocity_error_l2,
)
from .initial_data import (
    convergence_initial,
    epsilon_study_initial,
    equilateral_initial,
    self_intersect_initial,
    spiral_initial,
)
