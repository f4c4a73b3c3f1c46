import warnings

import numpy as np
import pytest

from spincluster.hamiltonian import SecularApproximationWarning, SpinSystemParams


@pytest.fixture(autouse=True)
def _quiet_secular():
    # the SiV working point intentionally sits past the soft validity bound
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SecularApproximationWarning)
        yield


@pytest.fixture(scope="session")
def siv() -> SpinSystemParams:
    return SpinSystemParams(a_par=70e6, a_perp=70e6, b_field=(0.6, 0.0, 0.6))


@pytest.fixture(scope="session")
def packaged():
    """(gate library, spin params, stored unitary fidelities)."""
    from spincluster.protocol import packaged_gate_library

    return packaged_gate_library()


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)
