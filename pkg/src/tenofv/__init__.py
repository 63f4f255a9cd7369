"""High-order finite-volume solver for 2D hyperbolic conservation laws.

Linear, WENO, CWENO and TENO reconstructions on unstructured triangular /
quad meshes, HLL fluxes with Roe-averaged wave speeds, SSP-RK3 time stepping.
"""

__version__ = "0.1.0"

from .mesh import (  # noqa: F401
    Mesh,
    MeshError,
    apply_periodic,
    compute_geometry,
    generate_disk_mesh,
    generate_uniform_quad_mesh,
    generate_uniform_tri_mesh,
    load_mesh,
    save_mesh,
    split_patch,
)
