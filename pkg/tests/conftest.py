import numpy as np
import pytest

from glpattern import FarField, GLParams, Grid2D, Inhomogeneity


@pytest.fixture(scope="session")
def grid20():
    return Grid2D(half_width=20.0, npts=101)


@pytest.fixture(scope="session")
def grid40():
    return Grid2D(half_width=40.0, npts=161)


@pytest.fixture(scope="session")
def params03():
    return GLParams(k=0.3, eps=0.0, phi0=0.0)


@pytest.fixture(scope="session")
def gaussian():
    return Inhomogeneity()


@pytest.fixture(scope="session")
def solver_ff():
    # wide cutoff band that the coarse test grids resolve
    return FarField(r_inner=4.0, r_outer=12.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
