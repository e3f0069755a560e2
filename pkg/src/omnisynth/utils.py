"""Small shared helpers: dB conversion and angle wrapping conventions."""

import numpy as np


def to_db(x):
    """Linear power ratio -> dB."""
    return 10.0 * np.log10(x)


def from_db(x_db):
    """dB -> linear power ratio."""
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def wrap_azimuth_deg(angle_deg):
    """Wrap an azimuth offset into (-180, 180] degrees.

    Works elementwise on arrays; scalars come back as floats.
    """
    a = np.asarray(angle_deg, dtype=float)
    wrapped = np.mod(a + 180.0, 360.0) - 180.0
    wrapped = np.where(wrapped == -180.0, 180.0, wrapped)
    if np.isscalar(angle_deg) or np.ndim(angle_deg) == 0:
        return float(wrapped)
    return wrapped


def wrap_azimuth_positive_deg(angle_deg):
    """Wrap an absolute azimuth into [0, 360) degrees."""
    a = np.asarray(angle_deg, dtype=float)
    wrapped = np.mod(a, 360.0)
    # np.mod can round tiny negatives up to exactly 360.0
    wrapped = np.where(wrapped >= 360.0, 0.0, wrapped)
    if np.isscalar(angle_deg) or np.ndim(angle_deg) == 0:
        return float(wrapped)
    return wrapped


def reflect_coelevation_deg(angle_deg):
    """Reflect a co-elevation angle into [0, 180] degrees.

    Equivalent to repeated mirroring at the 0/180 poles; preserves the
    direction on the sphere instead of resampling out-of-range draws.
    """
    a = np.mod(np.asarray(angle_deg, dtype=float), 360.0)
    reflected = np.where(a > 180.0, 360.0 - a, a)
    if np.isscalar(angle_deg) or np.ndim(angle_deg) == 0:
        return float(reflected)
    return reflected
