import numpy as np
import pytest

from reggefem import (TorusGeometry, assemble_mass, assemble_stiffness,
                      build_torus_mesh)

TAU = 2.0 * np.pi


@pytest.fixture(scope="session")
def geometry():
    return TorusGeometry(TAU, TAU, TAU)


@pytest.fixture(scope="session")
def mesh2(geometry):
    return build_torus_mesh(geometry, (2, 2, 2))


@pytest.fixture(scope="session")
def mesh3(geometry):
    return build_torus_mesh(geometry, (3, 3, 3))


@pytest.fixture(scope="session")
def mesh4(geometry):
    return build_torus_mesh(geometry, (4, 4, 4))


@pytest.fixture(scope="session")
def pencil2(mesh2):
    return assemble_stiffness(mesh2), assemble_mass(mesh2)


@pytest.fixture(scope="session")
def pencil3(mesh3):
    return assemble_stiffness(mesh3), assemble_mass(mesh3)


@pytest.fixture(scope="session")
def pencil4(mesh4):
    return assemble_stiffness(mesh4), assemble_mass(mesh4)
