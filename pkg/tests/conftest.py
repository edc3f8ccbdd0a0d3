import numpy as np
import pytest

from app.model import LaserConfig, PulseProfile, RelaxationConfig, StrainDriveConfig


@pytest.fixture
def device() -> StrainDriveConfig:
    """Measured statics, canonical sign, undriven."""
    return StrainDriveConfig(V_E1=3.13, V_E2=0.72, f_m=1.296, n=5)


@pytest.fixture
def driven(device) -> StrainDriveConfig:
    return device.with_drive(4.16, -0.7)


@pytest.fixture
def cw_laser() -> LaserConfig:
    return LaserConfig(omega_lx=0.05, omega_ly=0.05)


@pytest.fixture
def pulsed_laser() -> LaserConfig:
    return LaserConfig(omega_lx=0.22, omega_ly=0.022, pulse=PulseProfile())


@pytest.fixture
def relax() -> RelaxationConfig:
    return RelaxationConfig()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture(autouse=True)
def _single_thread(monkeypatch):
    monkeypatch.delenv("OF_THREADS", raising=False)
