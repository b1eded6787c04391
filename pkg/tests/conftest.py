import numpy as np
import pytest

from hamest import hamiltonians as hml


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def qubit_angle_family():
    return hml.qubit_angle(1.0)


@pytest.fixture(scope="session")
def qubit_component_family():
    return hml.qubit_component(1.0)


@pytest.fixture(scope="session")
def nv_family():
    return hml.nv_center(mu=1.0, zero_field=1.0, strain=0.05)


@pytest.fixture(scope="session")
def phase_family():
    return hml.phase_parameter(hml.SIGMA_Z)


@pytest.fixture(scope="session")
def all_builtin_families(qubit_angle_family, qubit_component_family, nv_family):
    return (qubit_angle_family, qubit_component_family, nv_family)


def interior_xi(fam, rng, margin=0.08):
    """Random parameter comfortably inside the family's admissible range."""
    lo, hi = fam.param_range
    span = hi - lo
    return float(rng.uniform(lo + margin * span, hi - margin * span))
