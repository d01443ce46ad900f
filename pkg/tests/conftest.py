import pytest

from qaction import make_units

CODATA_ALPHA = 0.0072973525693


@pytest.fixture(scope="session")
def u10():
    # exaggerated alpha: fine-structure effects visible at desk scale
    return make_units(0.1)


@pytest.fixture(scope="session")
def u_codata():
    return make_units(CODATA_ALPHA)


@pytest.fixture(scope="session")
def u_half():
    # mc = 2, keeps m^2 c^2 terms O(1) so roundoff stays far below tolerances
    return make_units(0.5)
