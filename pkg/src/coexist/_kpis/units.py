"""Conversions between the SI linear units used internally and dB/MHz at I/O"""
import numpy as np

from coexist._kpis.common.typing import FloatArray

__all__ = [
    "dbm_to_watts",
    "watts_to_dbm",
    "db_to_linear",
    "linear_to_db",
    "hz_to_mhz",
    "mhz_to_hz",
]


def dbm_to_watts(x: FloatArray) -> FloatArray:
    """Power in dBm to watts, i.e. ``10^((x - 30) / 10)``"""
    return db_to_linear(np.subtract(x, 30))


def watts_to_dbm(x: FloatArray) -> FloatArray:
    return linear_to_db(x) + 30


def db_to_linear(x: FloatArray) -> FloatArray:
    return np.power(10.0, np.divide(x, 10))


def linear_to_db(x: FloatArray) -> FloatArray:
    return 10 * np.log10(x)


def hz_to_mhz(x: FloatArray) -> FloatArray:
    return np.divide(x, 1e6)


def mhz_to_hz(x: FloatArray) -> FloatArray:
    return np.multiply(x, 1e6)
