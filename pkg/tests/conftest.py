import math

import pytest

from spraylink.channel import TransmitterSpec
from spraylink.sensor import MQ3_SENSITIVITY, SensorSpec


@pytest.fixture
def bench_tx() -> TransmitterSpec:
    """Transmitter with the bench parameter set (gamma 1)."""
    return TransmitterSpec(
        q=2.204e-6, te=0.5, rho_d=789.0, theta=math.radians(38.0), gamma=1.0
    )


@pytest.fixture
def bench_sensor() -> SensorSpec:
    """Sensor with the bench circuit constants and fitted MQ-3 curve."""
    return SensorSpec(ein=5.0, rl=1000.0, ro=24000.0, sens=MQ3_SENSITIVITY)
