"""Deterministic ground truth and sensor simulation."""

from .helicopter import (
    GRAVITY,
    FlightPath,
    HelicopterData,
    dirty_derivative,
    helicopter_scenario,
    lowpass,
    steady_circle_h1_amplitude,
)
from .kinematics import (
    NumericalError,
    Trajectory,
    integrate_attitude,
    integrate_rates,
    time_grid,
    transition_matrix,
    transitions_from_zero,
)
from .sensors import (
    MeasurementStream,
    SensorConfig,
    degrade_stream,
    gyro_stream,
    measure_compatible,
    measure_complementary,
    read_stream_csv,
    vector_stream,
    write_stream_csv,
)
from .signals import EXAMPLE1_OMEGA, EXAMPLE1_R0, OmegaSignal, ReferenceSignal, example1_reference

__all__ = [
    "EXAMPLE1_OMEGA",
    "EXAMPLE1_R0",
    "FlightPath",
    "GRAVITY",
    "HelicopterData",
    "MeasurementStream",
    "NumericalError",
    "OmegaSignal",
    "ReferenceSignal",
    "SensorConfig",
    "Trajectory",
    "degrade_stream",
    "dirty_derivative",
    "example1_reference",
    "gyro_stream",
    "helicopter_scenario",
    "integrate_attitude",
    "integrate_rates",
    "lowpass",
    "measure_compatible",
    "measure_complementary",
    "read_stream_csv",
    "steady_circle_h1_amplitude",
    "time_grid",
    "transition_matrix",
    "transitions_from_zero",
    "vector_stream",
    "write_stream_csv",
]
