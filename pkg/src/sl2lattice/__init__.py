"""Discrete SL2 connections, operator factorizations and Laplace chains
on triangulated surfaces, with the star-triangle calculus for electric
networks."""

from .complexes import (
    Complex2D,
    ComplexN,
    Edge,
    FramedPath,
    ThickPath,
    build_surface,
    connected_sum,
    disk_patch,
    double_simplex,
    doubled_triangle,
    from_triangles,
    icosahedron,
    octahedron,
    torus_lattice,
)
from .connections import (
    Connection,
    CurvatureResult,
    EdgeWeights,
    GaugePair,
    HolonomyMatrix,
    RhoData,
    SL2Report,
    build_from_edge_weights,
    canonical_connection,
    extract_rho_data,
    framed_holonomy,
    gauge_transform,
    is_sl2,
    loop_framed_holonomy,
    mu_gauge_distance,
    mu_ratio,
    random_connection,
    random_edge_weights,
    reconstruct_connection_from_invariants,
    reconstruct_edge_weights,
    rho_edge,
    rho_triangle,
    sl_n_face_balance,
    thick_holonomy,
    vertex_curvature,
    vertex_mu,
)
from .electric import (
    BlackTriangleFactorization,
    ElectricNetwork,
    LaplaceImageResult,
    black_factorization,
    dirichlet_solve,
    free_vertex_value,
    laplace_image,
    network_from_complex,
    require_k_structure,
    star_triangle_network,
    star_triangle_single,
    total_current,
)
from .laplace_chains import (
    FirstOrderTreeOperator,
    HyperbolicOperator,
    TodaStack,
    TrivalentOperator,
    TrivalentTree,
    assemble_trivalent,
    cyclic2_residual,
    evolve_chain,
    expand,
    hirota_residual,
    hyperbolic_factorize,
    invariants_Hw,
    laplace_invariant_update,
    laplace_transform_square,
    toda_residual,
    toda_to_hirota_form,
    trivalent_factorize,
    trivalent_laplace,
    trivalent_tree,
)
from .operators import (
    EquilateralOperator,
    SelfAdjointOperator,
    TriangleOperator,
    apply_operator,
    combined_connection,
    equilateral_connection,
    equilateral_factorize,
    equilateral_laplace,
    factorize_bw,
)

__version__ = "0.1.0"
