"""Intrinsic graphs in the first Heisenberg group.

Group arithmetic, finite-difference calculus on intrinsic graphs, a zoo of
energy- and area-minimizing surfaces, calibrations, contact variations and
mesh export.
"""

from .calibration import (
    Diagnostic,
    TauField,
    bar_M,
    box_surface_area,
    div_residual,
    flux_box,
    flux_graph,
    jump_residual,
    smooth_sample_points,
    tau_field,
    tau_K,
)
from .expressions import Bump, Constant, ExprFunction, Zero
from .graph_calculus import (
    GraphGrid,
    PiecewiseGraph,
    area,
    characteristic_curve,
    domain_measure,
    energy,
    excess,
    intrinsic_gradient,
    lipschitz_check,
    m_gamma,
    nabla_f,
    nabla_f_power,
    psi_f,
)
from .heis_core import GraphAutomorphism, LipschitzCone, ballbox_dist, inverse, mul
from .mesh_io import Mesh, mesh_from_grid, mesh_from_rayfan, read_obj, write_cross_section, write_obj
from .surface_zoo import (
    FanLayout,
    FlexSurface,
    IntervalComplement,
    RayFan,
    make_broken_herringbone,
    make_cantor,
    make_flex,
    make_herringbone,
    make_lambda_K,
    make_parabola,
    make_plane,
    make_sigma_K,
    rayfan_apply_stretch,
    rayfan_to_graph,
    scale_angles,
)
from .variation import (
    A1,
    A2,
    B1,
    B2,
    ContactPotential,
    VariationReport,
    flow_energy,
    harmonic_residual,
    herringbone_A2,
    indicator_L1_distance,
    near_sing_fit,
    stretch_energy_fit,
    variation_report,
)

__all__ = [name for name in dir() if not name.startswith("_")]
