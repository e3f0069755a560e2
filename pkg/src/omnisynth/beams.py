"""Beam-pattern abstraction: analytic Gaussian beams built from von Mises
kernels, tabulated (measured) patterns, and the isotropic limit.

All patterns are peak-normalized amplitude responses evaluated at angular
offsets from boresight; the boresight power gain is carried as separate
metadata and never enters the response.  Responses are amplitude-only
(real, nonnegative): power synthesis needs magnitudes, and measured-phase
retention is deliberately out of scope.

Conventions
-----------
* Azimuth offsets are wrapped into (-180, 180] degrees everywhere.
* Co-elevation offsets are used as-is (the co-elevation domain spans
  [0, 180] degrees and is not periodic).
* Tabulated patterns are interpolated bilinearly in linear *power*, then
  square-rooted; dB interpolation would bias nulls.

Patterns are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .specfun import bessel_i_scaled
from .utils import wrap_azimuth_deg

__all__ = [
    "THETA_SPAN_DEG",
    "PHI_SPAN_DEG",
    "PatternSupportError",
    "Isotropic",
    "VonMisesBeam",
    "TabulatedPattern",
    "kappa_from_hpbw",
    "axis_power_gain",
    "make_vonmises",
    "evaluate",
    "axis_cut",
    "import_pattern",
    "export_pattern_csv",
    "horn_like_fixture",
    "pattern_to_dict",
    "pattern_from_dict",
]

THETA_SPAN_DEG = 180.0
PHI_SPAN_DEG = 360.0

_LN_SQRT2 = 0.5 * math.log(2.0)


class PatternSupportError(ValueError):
    """Requested offset lies outside a tabulated pattern's angular support."""


@dataclass(frozen=True)
class Isotropic:
    """Flat unit response in both angular dimensions."""

    boresight_gain: float = 1.0


@dataclass(frozen=True)
class VonMisesBeam:
    """Separable Gaussian-type beam, exp(kappa*(cos(offset) - 1)) per axis.

    The concentration is tied to the half-power beamwidth so that the
    squared amplitude is exactly 1/2 at hpbw/2 off boresight; a beamwidth
    covering the whole axis domain collapses to kappa = 0 (flat response).
    """

    kappa_theta: float
    kappa_phi: float
    hpbw_theta_deg: float
    hpbw_phi_deg: float
    boresight_gain: float


def kappa_from_hpbw(hpbw_deg, span_deg):
    """Concentration for a prescribed half-power beamwidth on one axis.

    kappa = ln(sqrt(2)) / (1 - cos(hpbw/2)); 0 when the beamwidth reaches
    the axis span (flat/omnidirectional axis).
    """
    hpbw_deg = float(hpbw_deg)
    if not hpbw_deg > 0.0:
        raise ValueError(f"hpbw must be > 0 deg, got {hpbw_deg}")
    if hpbw_deg >= span_deg:
        return 0.0
    return _LN_SQRT2 / (1.0 - math.cos(math.radians(0.5 * hpbw_deg)))


def axis_power_gain(kappa):
    """Boresight power gain of one von Mises axis, e^kappa / I_0(kappa)."""
    if kappa < 0.0:
        raise ValueError("kappa must be >= 0")
    return 1.0 / bessel_i_scaled(0, kappa)


def make_vonmises(hpbw_theta_deg, hpbw_phi_deg):
    """Build a separable von Mises beam from per-axis half-power widths."""
    kt = kappa_from_hpbw(hpbw_theta_deg, THETA_SPAN_DEG)
    kp = kappa_from_hpbw(hpbw_phi_deg, PHI_SPAN_DEG)
    gain = axis_power_gain(kt) * axis_power_gain(kp)
    return VonMisesBeam(
        kappa_theta=kt,
        kappa_phi=kp,
        hpbw_theta_deg=float(hpbw_theta_deg),
        hpbw_phi_deg=float(hpbw_phi_deg),
        boresight_gain=gain,
    )


class TabulatedPattern:
    """Peak-normalized amplitude table on a rectangular angular grid.

    Parameters
    ----------
    theta_grid_deg, phi_grid_deg : array_like
        Strictly increasing node coordinates (offsets from boresight).
        A single-node axis marks a 1-D cut; evaluation then ignores the
        offset on that axis (the cut is treated as constant along it).
    amplitude : array_like, shape (n_theta, n_phi)
        Nonnegative linear amplitudes; renormalized to unit peak.
    boresight_gain : float
        Linear power gain metadata (not applied to the response).
    separability_threshold : float
        Maximum absolute power deviation from the outer product of the
        principal cuts below which the table is flagged separable.
    """

    def __init__(self, theta_grid_deg, phi_grid_deg, amplitude,
                 boresight_gain=1.0, separability_threshold=1e-3):
        tg = np.atleast_1d(np.asarray(theta_grid_deg, dtype=float))
        pg = np.atleast_1d(np.asarray(phi_grid_deg, dtype=float))
        amp = np.asarray(amplitude, dtype=float)
        if tg.ndim != 1 or pg.ndim != 1:
            raise ValueError("grids must be 1-D")
        for name, g in (("theta", tg), ("phi", pg)):
            if g.size > 1 and not np.all(np.diff(g) > 0.0):
                raise ValueError(f"{name} grid must be strictly increasing")
        if amp.shape != (tg.size, pg.size):
            raise ValueError(
                f"amplitude shape {amp.shape} does not match grids "
                f"({tg.size}, {pg.size})"
            )
        if not np.all(np.isfinite(amp)):
            raise ValueError("amplitudes must be finite")
        if np.any(amp < 0.0):
            raise ValueError("amplitudes must be nonnegative")
        peak = amp.max()
        if peak <= 0.0:
            raise ValueError("pattern has no positive sample")

        self.theta_grid_deg = tg
        self.phi_grid_deg = pg
        self.amplitude = amp / peak
        self.boresight_gain = float(boresight_gain)

        power = self.amplitude**2
        if tg.size > 1 and pg.size > 1:
            it, ip = np.unravel_index(np.argmax(power), power.shape)
            outer = np.outer(power[:, ip], power[it, :]) / power[it, ip]
            self.separability_deviation = float(np.abs(power - outer).max())
        else:
            self.separability_deviation = 0.0
        self.separable = self.separability_deviation <= separability_threshold

    def _axis_weights(self, grid, offsets, axis_name):
        """Bracketing indices and weights for 1-D linear interpolation."""
        if grid.size == 1:
            idx = np.zeros(offsets.shape, dtype=np.intp)
            return idx, idx, np.zeros(offsets.shape)
        out_of_support = (offsets < grid[0]) | (offsets > grid[-1])
        if np.any(out_of_support):
            bad = np.asarray(offsets)[out_of_support].ravel()[0]
            raise PatternSupportError(
                f"{axis_name} offset {bad:.6g} deg outside tabulated support "
                f"[{grid[0]:.6g}, {grid[-1]:.6g}]"
            )
        hi = np.clip(np.searchsorted(grid, offsets, side="right"), 1, grid.size - 1)
        lo = hi - 1
        frac = (offsets - grid[lo]) / (grid[hi] - grid[lo])
        return lo, hi, frac

    def response(self, dtheta_deg, dphi_deg):
        dt = np.asarray(dtheta_deg, dtype=float)
        dp = wrap_azimuth_deg(np.asarray(dphi_deg, dtype=float))
        dt, dp = np.broadcast_arrays(dt, dp)
        t_lo, t_hi, t_frac = self._axis_weights(self.theta_grid_deg, dt, "co-elevation")
        p_lo, p_hi, p_frac = self._axis_weights(self.phi_grid_deg, dp, "azimuth")
        power = self.amplitude**2
        p00 = power[t_lo, p_lo]
        p01 = power[t_lo, p_hi]
        p10 = power[t_hi, p_lo]
        p11 = power[t_hi, p_hi]
        interp = (
            p00 * (1.0 - t_frac) * (1.0 - p_frac)
            + p01 * (1.0 - t_frac) * p_frac
            + p10 * t_frac * (1.0 - p_frac)
            + p11 * t_frac * p_frac
        )
        return np.sqrt(np.maximum(interp, 0.0))


def evaluate(pattern, dtheta_deg, dphi_deg):
    """Peak-normalized amplitude at an angular offset from boresight.

    Azimuth offsets are wrapped into (-180, 180]; co-elevation offsets are
    taken literally.  Accepts scalars or broadcastable arrays.

    Raises
    ------
    PatternSupportError
        For offsets outside a tabulated pattern's support (no
        extrapolation is ever performed).
    """
    scalar = np.isscalar(dtheta_deg) and np.isscalar(dphi_deg)
    if isinstance(pattern, Isotropic):
        out = np.ones(np.broadcast(np.asarray(dtheta_deg), np.asarray(dphi_deg)).shape)
    elif isinstance(pattern, VonMisesBeam):
        dt = np.radians(np.asarray(dtheta_deg, dtype=float))
        dp = np.radians(np.asarray(dphi_deg, dtype=float))
        out = np.exp(
            pattern.kappa_theta * (np.cos(dt) - 1.0)
            + pattern.kappa_phi * (np.cos(dp) - 1.0)
        )
    elif isinstance(pattern, TabulatedPattern):
        out = pattern.response(dtheta_deg, dphi_deg)
    else:
        raise TypeError(f"not a beam pattern: {pattern!r}")
    if scalar:
        return float(out)
    return out


def axis_cut(pattern, axis):
    """Principal-plane 1-D cut of a pattern as a callable on offsets.

    ``axis`` is "theta" or "phi"; the other coordinate is held at
    boresight.  The returned callable accepts scalars or arrays in degrees.
    """
    if axis == "theta":
        return lambda offsets_deg: evaluate(pattern, offsets_deg, 0.0)
    if axis == "phi":
        return lambda offsets_deg: evaluate(pattern, 0.0, offsets_deg)
    raise ValueError(f"axis must be 'theta' or 'phi', got {axis!r}")


def import_pattern(path, separability_threshold=1e-3):
    """Load a tabulated pattern from the CSV interchange format.

    The file must have a ``theta_deg,phi_deg,amplitude_linear`` header and
    one row per grid node; every (theta, phi) combination must appear
    exactly once.  1-D cuts use a fixed dummy coordinate on the unused
    axis.  Amplitudes are renormalized to unit peak.  If a JSON sidecar
    ``<stem>.json`` exists next to the CSV, its ``gain_dbi`` field is kept
    as the boresight gain.
    """
    path = Path(path)
    thetas, phis, amps = [], [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"theta_deg", "phi_deg", "amplitude_linear"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(
                f"{path}: expected columns {sorted(required)}, "
                f"got {reader.fieldnames}"
            )
        for row in reader:
            thetas.append(float(row["theta_deg"]))
            phis.append(float(row["phi_deg"]))
            amps.append(float(row["amplitude_linear"]))
    if not amps:
        raise ValueError(f"{path}: no data rows")
    thetas = np.asarray(thetas)
    phis = np.asarray(phis)
    amps = np.asarray(amps)
    if np.any(amps < 0.0):
        raise ValueError(f"{path}: negative amplitudes")

    t_nodes = np.unique(thetas)
    p_nodes = np.unique(phis)
    table = np.full((t_nodes.size, p_nodes.size), np.nan)
    ti = np.searchsorted(t_nodes, thetas)
    pi = np.searchsorted(p_nodes, phis)
    for i, j, a in zip(ti, pi, amps):
        if not np.isnan(table[i, j]):
            raise ValueError(f"{path}: duplicate grid node "
                             f"({t_nodes[i]}, {p_nodes[j]})")
        table[i, j] = a
    if np.isnan(table).any():
        raise ValueError(f"{path}: incomplete grid (missing cells)")

    gain = 1.0
    sidecar = path.with_suffix(".json")
    if sidecar.exists():
        meta = json.loads(sidecar.read_text())
        if "gain_dbi" in meta and meta["gain_dbi"] is not None:
            gain = 10.0 ** (float(meta["gain_dbi"]) / 10.0)
    return TabulatedPattern(
        t_nodes, p_nodes, table,
        boresight_gain=gain,
        separability_threshold=separability_threshold,
    )


def export_pattern_csv(pattern, theta_grid_deg, phi_grid_deg, path):
    """Sample a pattern on a grid and write it in the CSV interchange format."""
    tg = np.atleast_1d(np.asarray(theta_grid_deg, dtype=float))
    pg = np.atleast_1d(np.asarray(phi_grid_deg, dtype=float))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta_deg", "phi_deg", "amplitude_linear"])
        for t in tg:
            amp_row = evaluate(pattern, np.full(pg.shape, t), pg)
            for p, a in zip(pg, np.atleast_1d(amp_row)):
                writer.writerow([f"{t:.10g}", f"{p:.10g}", repr(float(a))])


def horn_like_fixture(step_deg=1.0):
    """Synthetic stand-in for a measured pyramidal-horn pattern.

    An 8 deg (co-elevation) x 9 deg (azimuth) von Mises main lobe plus two
    symmetric -20 dB sidelobes 20 deg off axis in the co-elevation cut.
    The sidelobes get a wider azimuth profile than the main lobe, which
    makes the table genuinely non-separable.  All numbers derived from this
    fixture are synthetic; it only mimics the qualitative look of a real
    horn (narrow main lobe, visible E-plane sidelobes).
    """
    kt = kappa_from_hpbw(8.0, THETA_SPAN_DEG)
    kp = kappa_from_hpbw(9.0, PHI_SPAN_DEG)
    kp_side = kappa_from_hpbw(40.0, PHI_SPAN_DEG)
    theta = np.arange(-180.0, 180.0 + 0.5 * step_deg, step_deg)
    phi = np.arange(-180.0, 180.0 + 0.5 * step_deg, step_deg)

    def lobe_power(kappa, offsets_deg):
        return np.exp(2.0 * kappa * (np.cos(np.radians(offsets_deg)) - 1.0))

    main = np.outer(lobe_power(kt, theta), lobe_power(kp, phi))
    side_theta = lobe_power(kt, theta - 20.0) + lobe_power(kt, theta + 20.0)
    side = 10.0 ** (-20.0 / 10.0) * np.outer(side_theta, lobe_power(kp_side, phi))
    power = main + side
    gain = axis_power_gain(kt) * axis_power_gain(kp)
    return TabulatedPattern(theta, phi, np.sqrt(power), boresight_gain=gain)


def pattern_to_dict(pattern):
    """JSON-ready description of a pattern (tabulated tables are embedded)."""
    if isinstance(pattern, Isotropic):
        return {"type": "isotropic", "boresight_gain": pattern.boresight_gain}
    if isinstance(pattern, VonMisesBeam):
        return {
            "type": "vonmises",
            "hpbw_theta_deg": pattern.hpbw_theta_deg,
            "hpbw_phi_deg": pattern.hpbw_phi_deg,
        }
    if isinstance(pattern, TabulatedPattern):
        return {
            "type": "tabulated",
            "theta_grid_deg": pattern.theta_grid_deg.tolist(),
            "phi_grid_deg": pattern.phi_grid_deg.tolist(),
            "amplitude": pattern.amplitude.tolist(),
            "boresight_gain": pattern.boresight_gain,
        }
    raise TypeError(f"not a beam pattern: {pattern!r}")


def pattern_from_dict(spec):
    kind = spec.get("type")
    if kind == "isotropic":
        return Isotropic(boresight_gain=spec.get("boresight_gain", 1.0))
    if kind == "vonmises":
        return make_vonmises(spec["hpbw_theta_deg"], spec["hpbw_phi_deg"])
    if kind == "tabulated":
        return TabulatedPattern(
            spec["theta_grid_deg"],
            spec["phi_grid_deg"],
            spec["amplitude"],
            boresight_gain=spec.get("boresight_gain", 1.0),
        )
    raise ValueError(f"unknown pattern type {kind!r}")
