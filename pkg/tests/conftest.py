import numpy as np
import pytest

from wpconv import model as M


@pytest.fixture(scope="session")
def gaussian_point():
    """Quadratic well, nu = delta_0: the convolution is mu itself."""
    return M.ConvolutionModel(M.quadratic_potential(), M.point_mass())


@pytest.fixture(scope="session")
def gaussian_pair():
    """Quadratic well, nu = (delta_-1 + delta_1)/2."""
    return M.ConvolutionModel(M.quadratic_potential(), M.symmetric_pair(1.0))


@pytest.fixture(scope="session")
def lattice_well():
    """Sub-linear smooth well with the integer-lattice source (p=1, q=1/2)."""
    return M.ConvolutionModel(M.smooth_well_potential(0.5), M.integer_lattice(1.0))


@pytest.fixture(scope="session")
def power_uniform():
    """|x|^0.6 potential with uniform(-1,1) source."""
    return M.ConvolutionModel(M.power_potential(0.6), M.uniform_density(1.0))


@pytest.fixture(scope="session")
def log_uniform():
    """(1+p) log(1+|x|) potential, p=2, with uniform(-1,1) source."""
    return M.ConvolutionModel(M.log_potential(2.0), M.uniform_density(1.0))


@pytest.fixture(scope="session")
def loglog_uniform():
    """log(1+|x|) + 2 loglog(e+|x|) potential with uniform(-1,1) source."""
    return M.ConvolutionModel(M.loglog_potential(2.0), M.uniform_density(1.0))


@pytest.fixture(scope="session")
def well_power_density():
    """Sub-linear smooth well with the continuous power-tail source (p=1)."""
    return M.ConvolutionModel(M.smooth_well_potential(0.5), M.power_tail_density(1.0))
