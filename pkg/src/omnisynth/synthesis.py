"""Isotropic-equivalent channel parameters from a measured power tensor.

Given the 5-D power tensor of a scanning measurement and the accumulation
factors of its configuration, this module recovers the omni-equivalent
channel power (and path loss), the angle-collapsed power delay profile,
and the RMS delay spread.  All operations are plain reductions: linear in
the tensor, so any global scaling (including the choice of correction
mode) cancels out of the delay-spread estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .accumulation import CorrectionFactors
from .utils import to_db

__all__ = [
    "CONFIG_LABELS",
    "SynthesisResult",
    "estimate_channel_power",
    "collapse_pdp",
    "rms_delay_spread",
    "path_loss",
    "synthesize_result",
]

# Which correction factors each measurement label divides out of the power
# sum.  The delay factor rides along in all of them (it is 1 for matched
# delay grids).
CONFIG_LABELS = {
    "omni": (),
    "o2h": ("zeta_phi_r",),
    "h2h": ("zeta_phi_t", "zeta_phi_r"),
    "dd": ("zeta_theta_t", "zeta_phi_t", "zeta_theta_r", "zeta_phi_r"),
}


@dataclass(frozen=True)
class SynthesisResult:
    channel_power: float
    path_loss_db: float
    pdp_tau_ns: np.ndarray
    pdp_power: np.ndarray
    rms_delay_spread_ns: float
    correction: CorrectionFactors

    def to_dict(self):
        return {
            "channel_power_linear": self.channel_power,
            "path_loss_db": self.path_loss_db,
            "pdp": [
                {"tau_ns": float(t), "power": float(p)}
                for t, p in zip(self.pdp_tau_ns, self.pdp_power)
            ],
            "rms_delay_spread_ns": self.rms_delay_spread_ns,
            "correction": self.correction.to_dict(),
        }


def _thresholded(values, threshold_db):
    """Zero cells more than threshold_db below the peak (optional denoising)."""
    if threshold_db is None:
        return values
    floor = values.max() * 10.0 ** (-threshold_db / 10.0)
    return np.where(values >= floor, values, 0.0)


def estimate_channel_power(tensor, correction, threshold_db=None):
    """Omni-equivalent channel power: (1/zeta_total) * sum of all cells."""
    total = correction.total
    if not total > 0.0:
        raise ValueError(f"correction total must be > 0, got {total}")
    values = _thresholded(tensor.values, threshold_db)
    return float(values.sum()) / total


def collapse_pdp(tensor, correction, threshold_db=None):
    """Angle-collapsed power delay profile.

    Sums the tensor over all four angular axes per delay bin and divides by
    the composite angular factor; returns (tau_ns, power) arrays of length
    n_delay.
    """
    zeta_angular = (correction.zeta_theta_t * correction.zeta_phi_t
                    * correction.zeta_theta_r * correction.zeta_phi_r)
    if not zeta_angular > 0.0:
        raise ValueError("angular correction factors must be > 0")
    values = _thresholded(tensor.values, threshold_db)
    power = values.sum(axis=(1, 2, 3, 4)) / zeta_angular
    return tensor.config.delay_grid_ns(), power


def rms_delay_spread(tau_ns, power):
    """Second central moment of the normalized power delay profile, in ns."""
    tau = np.asarray(tau_ns, dtype=float)
    p = np.asarray(power, dtype=float)
    if tau.shape != p.shape:
        raise ValueError("tau and power must have matching shapes")
    total = p.sum()
    if not total > 0.0:
        raise ValueError("power delay profile has no positive power")
    mean = (tau * p).sum() / total
    second = (tau**2 * p).sum() / total
    return float(np.sqrt(max(second - mean**2, 0.0)))


def path_loss(tensor, correction, config_label, threshold_db=None):
    """Path loss in dB for a labeled measurement configuration.

    The label picks which angular factors are divided out (see
    CONFIG_LABELS); factors outside the label must be neutral (1), which
    guards against pairing a correction with the wrong measurement.
    """
    if config_label not in CONFIG_LABELS:
        raise ValueError(
            f"unknown config label {config_label!r}; "
            f"expected one of {sorted(CONFIG_LABELS)}"
        )
    used = CONFIG_LABELS[config_label]
    all_factors = ("zeta_theta_t", "zeta_phi_t", "zeta_theta_r", "zeta_phi_r")
    for name in all_factors:
        if name not in used and getattr(correction, name) != 1.0:
            raise ValueError(
                f"correction carries {name} = {getattr(correction, name)!r} "
                f"but configuration {config_label!r} does not scan it"
            )
    zeta = correction.zeta_tau
    for name in used:
        zeta *= getattr(correction, name)
    if not zeta > 0.0:
        raise ValueError("composite correction must be > 0")
    values = _thresholded(tensor.values, threshold_db)
    power = float(values.sum()) / zeta
    return float(-to_db(power))


def synthesize_result(tensor, correction, config_label="dd",
                      threshold_db=None):
    """Full extraction bundle: power, path loss, PDP, and delay spread."""
    power = estimate_channel_power(tensor, correction, threshold_db)
    tau_ns, pdp = collapse_pdp(tensor, correction, threshold_db)
    return SynthesisResult(
        channel_power=power,
        path_loss_db=path_loss(tensor, correction, config_label, threshold_db),
        pdp_tau_ns=tau_ns,
        pdp_power=pdp,
        rms_delay_spread_ns=rms_delay_spread(tau_ns, pdp),
        correction=correction,
    )
