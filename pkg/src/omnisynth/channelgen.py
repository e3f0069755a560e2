"""Clustered multipath channel generator.

Classic clustered model: cluster arrivals form a Poisson process, rays
inside each cluster form another Poisson process, and mean ray power decays
exponentially at both levels with a lognormal cluster shadowing term.
Cluster azimuths are uniform on the circle, cluster zeniths concentrate
around broadside, and per-ray angles add independent Laplacian offsets to
the cluster means.

Determinism contract: a realization is a pure function of (params, seed).
All randomness comes from one ``numpy.random.default_rng(seed)`` consumed
in a fixed, documented order:

1. cluster arrival times (Poisson count, then sorted uniforms),
2. per-cluster ray offsets, cluster by cluster (count, then uniforms),
3. cluster shadowing factors,
4. angles: Tx azimuth means, Tx zenith means, Rx azimuth means, Rx zenith
   means (Rx draws skipped in "mirrored" coupling), then per cluster the
   per-ray offsets in axis order (Tx az, Tx zen, Rx az, Rx zen),
5. complex gain innovations for all rays in cluster order.

Generation is single-threaded per seed; run many seeds for parallelism.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .utils import reflect_coelevation_deg, wrap_azimuth_positive_deg

__all__ = [
    "SVParams",
    "Mpc",
    "MultipathRealization",
    "ChannelGenerationError",
    "generate",
    "randomize_phases",
    "mean_ray_power",
    "save_realization",
    "load_realization",
]

# Rays beyond this many ray-decay constants after their cluster carry
# < 1e-4 of the cluster power and are not drawn.
_RAY_WINDOW_DECAYS = 10.0
_MAX_EMPTY_RETRIES = 8


class ChannelGenerationError(RuntimeError):
    """Generator failed to produce any multipath component."""


@dataclass(frozen=True)
class SVParams:
    """Clustered-channel parameters.

    Decay constants are in ns; rates default to the reciprocal decay
    constants.  Angular spreads are the standard deviations of the
    Laplacian offsets in degrees (scale b = sigma / sqrt(2)).
    ``max_delay_window_ns`` bounds the *total* MPC delay (defaults to ten
    cluster decay constants) so realizations stay inside a sounder's
    unambiguous delay range.
    """

    cluster_decay_ns: float = 10.0
    ray_decay_ns: float = 5.0
    cluster_rate_per_ns: Optional[float] = None
    ray_rate_per_ns: Optional[float] = None
    cluster_shadow_sigma_db: float = 3.0
    az_spread_deg: float = 100.0
    zen_spread_deg: float = 100.0
    zen_cluster_mean_deg: float = 90.0
    zen_cluster_spread_deg: float = 10.0
    max_delay_window_ns: Optional[float] = None
    angle_coupling: str = "independent"  # or "mirrored"
    seed: int = 0

    def __post_init__(self):
        if self.cluster_decay_ns <= 0 or self.ray_decay_ns <= 0:
            raise ValueError("decay constants must be > 0")
        if self.cluster_rate is not None and self.cluster_rate <= 0:
            raise ValueError("cluster rate must be > 0")
        if self.ray_rate is not None and self.ray_rate <= 0:
            raise ValueError("ray rate must be > 0")
        if self.cluster_shadow_sigma_db < 0:
            raise ValueError("shadowing sigma must be >= 0")
        if min(self.az_spread_deg, self.zen_spread_deg,
               self.zen_cluster_spread_deg) < 0:
            raise ValueError("angular spreads must be >= 0")
        if self.window_ns < 5.0 * self.cluster_decay_ns:
            raise ValueError(
                "max_delay_window_ns must be >= 5 cluster decay constants"
            )
        if self.angle_coupling not in ("independent", "mirrored"):
            raise ValueError("angle_coupling must be 'independent' or 'mirrored'")

    @property
    def cluster_rate(self):
        return self.cluster_rate_per_ns

    @property
    def ray_rate(self):
        return self.ray_rate_per_ns

    @property
    def resolved_cluster_rate(self):
        return self.cluster_rate_per_ns or 1.0 / self.cluster_decay_ns

    @property
    def resolved_ray_rate(self):
        return self.ray_rate_per_ns or 1.0 / self.ray_decay_ns

    @property
    def window_ns(self):
        if self.max_delay_window_ns is not None:
            return self.max_delay_window_ns
        return 10.0 * self.cluster_decay_ns

    def to_dict(self):
        return {
            "cluster_decay_ns": self.cluster_decay_ns,
            "ray_decay_ns": self.ray_decay_ns,
            "cluster_rate_per_ns": self.cluster_rate_per_ns,
            "ray_rate_per_ns": self.ray_rate_per_ns,
            "cluster_shadow_sigma_db": self.cluster_shadow_sigma_db,
            "az_spread_deg": self.az_spread_deg,
            "zen_spread_deg": self.zen_spread_deg,
            "zen_cluster_mean_deg": self.zen_cluster_mean_deg,
            "zen_cluster_spread_deg": self.zen_cluster_spread_deg,
            "max_delay_window_ns": self.max_delay_window_ns,
            "angle_coupling": self.angle_coupling,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, spec):
        return cls(**spec)


@dataclass(frozen=True)
class Mpc:
    """One multipath component.

    Delay in ns, departure/arrival angles in degrees (zenith in [0, 180],
    azimuth in [0, 360)), complex amplitude ``gain``.
    """

    tau_ns: float
    theta_t: float
    phi_t: float
    theta_r: float
    phi_r: float
    gain: complex


@dataclass(frozen=True)
class MultipathRealization:
    """MPC list plus generator metadata.

    ``cluster_times_ns`` and the per-MPC ``cluster_indices`` are generator
    byproducts kept for diagnostics; they do not take part in equality and
    are not serialized.
    """

    mpcs: tuple
    params: SVParams
    seed: int
    total_power: float = field(default=None)
    cluster_times_ns: tuple = field(default=(), compare=False, repr=False)
    cluster_indices: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if not self.mpcs:
            raise ValueError("realization must contain at least one MPC")
        recomputed = float(sum(abs(m.gain) ** 2 for m in self.mpcs))
        if self.total_power is None:
            object.__setattr__(self, "total_power", recomputed)
        elif not math.isclose(self.total_power, recomputed, rel_tol=1e-12):
            raise ValueError("total_power inconsistent with the MPC gains")

    def __len__(self):
        return len(self.mpcs)

    def delays_ns(self):
        return np.array([m.tau_ns for m in self.mpcs])

    def gains(self):
        return np.array([m.gain for m in self.mpcs], dtype=complex)

    def angles_deg(self):
        """(L, 4) array of (theta_t, phi_t, theta_r, phi_r)."""
        return np.array([[m.theta_t, m.phi_t, m.theta_r, m.phi_r]
                         for m in self.mpcs])


def mean_ray_power(cluster_time_ns, ray_offset_ns, params, shadow_linear=1.0):
    """Mean power of a ray: dual-exponential decay times cluster shadowing."""
    return (shadow_linear
            * math.exp(-cluster_time_ns / params.cluster_decay_ns)
            * math.exp(-ray_offset_ns / params.ray_decay_ns))


def _poisson_arrivals(rng, rate, window):
    """Arrival times of a homogeneous Poisson process on [0, window)."""
    count = rng.poisson(rate * window)
    return np.sort(rng.uniform(0.0, window, count))


def _laplace(rng, loc, sigma, size):
    """Laplacian draws parameterized by standard deviation."""
    if sigma == 0.0:
        return np.full(size, loc)
    return rng.laplace(loc, sigma / math.sqrt(2.0), size)


def generate(params):
    """Draw one multipath realization.

    Cluster times come from a Poisson process on [0, window); each cluster
    gets ray offsets from a Poisson process truncated at ten ray-decay
    constants and at the window end, so every MPC delay stays below the
    window.  If no ray lands at all (an e^-10-rare event at the default
    rates), the whole draw is retried a bounded number of times from the
    same stream.
    """
    rng = np.random.default_rng(params.seed)
    lam_c = params.resolved_cluster_rate
    lam_r = params.resolved_ray_rate
    window = params.window_ns

    for _ in range(_MAX_EMPTY_RETRIES):
        cluster_times = _poisson_arrivals(rng, lam_c, window)
        ray_offsets = []
        for t_k in cluster_times:
            w_k = min(_RAY_WINDOW_DECAYS * params.ray_decay_ns, window - t_k)
            ray_offsets.append(_poisson_arrivals(rng, lam_r, w_k))
        counts = [o.size for o in ray_offsets]
        if sum(counts) > 0:
            break
    else:
        raise ChannelGenerationError(
            f"no multipath component drawn in {_MAX_EMPTY_RETRIES} attempts"
        )

    n_clusters = cluster_times.size
    shadow_db = params.cluster_shadow_sigma_db * rng.standard_normal(n_clusters)
    shadow_lin = 10.0 ** (shadow_db / 10.0)

    tx_az_mean = rng.uniform(0.0, 360.0, n_clusters)
    tx_zen_mean = reflect_coelevation_deg(
        _laplace(rng, params.zen_cluster_mean_deg,
                 params.zen_cluster_spread_deg, n_clusters))
    if params.angle_coupling == "mirrored":
        rx_az_mean = tx_az_mean.copy()
        rx_zen_mean = np.array(tx_zen_mean, copy=True)
    else:
        rx_az_mean = rng.uniform(0.0, 360.0, n_clusters)
        rx_zen_mean = reflect_coelevation_deg(
            _laplace(rng, params.zen_cluster_mean_deg,
                     params.zen_cluster_spread_deg, n_clusters))

    per_cluster_angles = []
    for k in range(n_clusters):
        n_k = counts[k]
        phi_t = wrap_azimuth_positive_deg(
            _laplace(rng, tx_az_mean[k], params.az_spread_deg, n_k))
        theta_t = reflect_coelevation_deg(
            _laplace(rng, tx_zen_mean[k], params.zen_spread_deg, n_k))
        phi_r = wrap_azimuth_positive_deg(
            _laplace(rng, rx_az_mean[k], params.az_spread_deg, n_k))
        theta_r = reflect_coelevation_deg(
            _laplace(rng, rx_zen_mean[k], params.zen_spread_deg, n_k))
        per_cluster_angles.append((theta_t, phi_t, theta_r, phi_r))

    total_rays = sum(counts)
    nu = (rng.standard_normal(total_rays)
          + 1j * rng.standard_normal(total_rays)) / math.sqrt(2.0)

    mpcs = []
    cluster_indices = []
    ray_index = 0
    for k in range(n_clusters):
        theta_t, phi_t, theta_r, phi_r = per_cluster_angles[k]
        for i, offset in enumerate(ray_offsets[k]):
            power = mean_ray_power(cluster_times[k], offset, params,
                                   shadow_lin[k])
            gain = math.sqrt(power) * nu[ray_index]
            mpcs.append(Mpc(
                tau_ns=float(cluster_times[k] + offset),
                theta_t=float(theta_t[i]),
                phi_t=float(phi_t[i]),
                theta_r=float(theta_r[i]),
                phi_r=float(phi_r[i]),
                gain=complex(gain),
            ))
            cluster_indices.append(k)
            ray_index += 1

    return MultipathRealization(mpcs=tuple(mpcs), params=params,
                                seed=params.seed,
                                cluster_times_ns=tuple(float(t) for t in cluster_times),
                                cluster_indices=tuple(cluster_indices))


def randomize_phases(realization, seed):
    """Apply i.i.d. uniform phase rotations to every MPC gain.

    Magnitudes and the stored total power are untouched; this is the
    per-trial phase re-draw that enforces uncorrelated scattering in
    Monte-Carlo averaging.
    """
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, 2.0 * math.pi, len(realization.mpcs))
    rotated = tuple(
        replace(m, gain=complex(m.gain * np.exp(1j * u)))
        for m, u in zip(realization.mpcs, phases)
    )
    return MultipathRealization(
        mpcs=rotated,
        params=realization.params,
        seed=realization.seed,
        total_power=realization.total_power,
        cluster_times_ns=realization.cluster_times_ns,
        cluster_indices=realization.cluster_indices,
    )


def save_realization(realization, path):
    """Write a realization as JSON: {seed, params, mpcs:[...]}."""
    payload = {
        "seed": realization.seed,
        "params": realization.params.to_dict(),
        "mpcs": [
            {
                "tau_ns": m.tau_ns,
                "theta_t": m.theta_t,
                "phi_t": m.phi_t,
                "theta_r": m.theta_r,
                "phi_r": m.phi_r,
                "gain_re": m.gain.real,
                "gain_im": m.gain.imag,
            }
            for m in realization.mpcs
        ],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)


def load_realization(path):
    with open(path) as fh:
        payload = json.load(fh)
    params = SVParams.from_dict(payload["params"])
    mpcs = tuple(
        Mpc(
            tau_ns=m["tau_ns"],
            theta_t=m["theta_t"],
            phi_t=m["phi_t"],
            theta_r=m["theta_r"],
            phi_r=m["phi_r"],
            gain=complex(m["gain_re"], m["gain_im"]),
        )
        for m in payload["mpcs"]
    )
    return MultipathRealization(mpcs=mpcs, params=params,
                                seed=payload["seed"])
