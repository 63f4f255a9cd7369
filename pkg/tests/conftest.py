from __future__ import annotations

import numpy as np
import pytest

from tenofv.mesh import (
    apply_periodic,
    compute_geometry,
    generate_uniform_quad_mesh,
    generate_uniform_tri_mesh,
)


@pytest.fixture(scope="session")
def tri13_periodic():
    m = generate_uniform_tri_mesh(13, 13)
    apply_periodic(m, "left", "right", (1.0, 0.0))
    apply_periodic(m, "bottom", "top", (0.0, 1.0))
    compute_geometry(m, 4)
    return m


@pytest.fixture(scope="session")
def quad10_periodic():
    m = generate_uniform_quad_mesh(10, 10)
    apply_periodic(m, "left", "right", (1.0, 0.0))
    apply_periodic(m, "bottom", "top", (0.0, 1.0))
    compute_geometry(m, 4)
    return m


@pytest.fixture(scope="session")
def tri8_walls():
    m = generate_uniform_tri_mesh(8, 8)
    compute_geometry(m, 4)
    return m


@pytest.fixture()
def rng():
    return np.random.default_rng(20260822)
