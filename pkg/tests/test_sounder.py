"""Tests for the measurement synthesizer and its fast total-power paths."""

import math
import random
from dataclasses import replace

import numpy as np
import pytest

from omnisynth import beams
from omnisynth.accumulation import AxisGrid
from omnisynth.channelgen import (Mpc, MultipathRealization, SVParams,
                                  generate, randomize_phases)
from omnisynth.sounder import (DIM_ORDER, AliasingError, PowerTensor,
                               SounderConfig, TensorSizeError,
                               coherent_power_totals, incoherent_total_power,
                               load_tensor, mpc_factor_blocks, response_gram,
                               save_tensor, synthesize_coherent,
                               synthesize_incoherent)


def azimuth_dd_config(n_freq=64, asi_deg=45.0, hpbw_deg=30.0, **kwargs):
    """Small azimuth-only double-directional scan, flat in co-elevation."""
    beam = beams.make_vonmises(180.0, hpbw_deg)
    return SounderConfig(
        center_frequency_ghz=154.0, bandwidth_ghz=4.0,
        n_freq=n_freq, n_delay=n_freq,
        tx_beam=beam, rx_beam=beam,
        tx_theta_grid=AxisGrid.single_point(90.0, 180.0),
        tx_phi_grid=AxisGrid.full_circle(asi_deg),
        rx_theta_grid=AxisGrid.single_point(90.0, 180.0),
        rx_phi_grid=AxisGrid.full_circle(asi_deg),
        **kwargs,
    )


def single_path(tau_ns=0.0, phi_t=0.0, phi_r=0.0, gain=1.0 + 0.0j):
    mpc = Mpc(tau_ns=tau_ns, theta_t=90.0, phi_t=phi_t, theta_r=90.0,
              phi_r=phi_r, gain=gain)
    return MultipathRealization(mpcs=(mpc,), params=SVParams(), seed=0)


class TestConfig:
    def test_delay_grid(self):
        cfg = azimuth_dd_config(n_freq=64)
        assert cfg.delta_tau_ns == pytest.approx(0.25)
        assert cfg.delta_f_ghz == pytest.approx(4.0 / 64)
        assert cfg.dims == (64, 1, 8, 1, 8)
        np.testing.assert_allclose(np.diff(cfg.delay_grid_ns()), 0.25)

    def test_delay_window_invariant(self):
        # n_delay beyond the unambiguous window is rejected
        base = azimuth_dd_config(n_freq=64)
        with pytest.raises(ValueError):
            replace(base, n_delay=65)
        with pytest.raises(ValueError):
            replace(base, n_delay=0)

    def test_memory_guard(self):
        with pytest.raises(TensorSizeError):
            azimuth_dd_config(n_freq=64, max_cells=100)

    def test_dict_roundtrip(self):
        cfg = azimuth_dd_config()
        clone = SounderConfig.from_dict(cfg.to_dict())
        assert clone.dims == cfg.dims
        assert clone.tx_beam == cfg.tx_beam
        assert clone.rx_phi_grid == cfg.rx_phi_grid


class TestCoherent:
    def test_single_ongrid_path_peak(self):
        cfg = azimuth_dd_config()
        real = single_path(tau_ns=4 * cfg.delta_tau_ns, phi_t=90.0, phi_r=45.0)
        tensor = synthesize_coherent(real, cfg)
        assert tensor.values[4, 0, 2, 0, 1] == pytest.approx(1.0, abs=1e-12)
        # the delay slice through the path's bin follows |a_T|^2 |a_R|^2
        t_amp = beams.evaluate(cfg.tx_beam, 0.0,
                               cfg.tx_phi_grid.angles_deg() - 90.0)
        r_amp = beams.evaluate(cfg.rx_beam, 0.0,
                               cfg.rx_phi_grid.angles_deg() - 45.0)
        expected = np.outer(t_amp**2, r_amp**2)
        np.testing.assert_allclose(tensor.values[4, 0, :, 0, :], expected,
                                   atol=1e-12)
        # on-grid delay: exactly one nonzero delay bin
        collapsed = tensor.values.sum(axis=(1, 2, 3, 4))
        assert np.count_nonzero(collapsed) == 1

    def test_opposite_phases_cancel(self):
        cfg = azimuth_dd_config()
        mpc = Mpc(tau_ns=1.0, theta_t=90.0, phi_t=10.0, theta_r=90.0,
                  phi_r=250.0, gain=0.7 + 0.1j)
        twin = replace(mpc, gain=-mpc.gain)
        real = MultipathRealization(mpcs=(mpc, twin), params=SVParams(), seed=0)
        tensor = synthesize_coherent(real, cfg)
        assert tensor.total() == pytest.approx(0.0, abs=1e-20)

    def test_mpc_permutation_bit_identical(self):
        params = SVParams(seed=8, max_delay_window_ns=50.0)
        real = generate(replace(params, seed=8))
        shuffled_mpcs = list(real.mpcs)
        random.Random(3).shuffle(shuffled_mpcs)
        shuffled = MultipathRealization(mpcs=tuple(shuffled_mpcs),
                                        params=params, seed=8)
        cfg = azimuth_dd_config(n_freq=256)
        a = synthesize_coherent(real, cfg)
        b = synthesize_coherent(shuffled, cfg)
        assert np.array_equal(a.values, b.values)

    def test_noise_injection(self):
        cfg = azimuth_dd_config(noise_power=0.01)
        real = single_path()
        with pytest.raises(ValueError):
            synthesize_coherent(real, cfg)  # rng required
        rng = np.random.default_rng(0)
        tensor = synthesize_coherent(real, cfg, rng=rng)
        noise_only = tensor.values[32:, :, :, :, :]  # far from the path bin
        assert noise_only.mean() == pytest.approx(0.01, rel=0.05)

    def test_aliasing_guard(self):
        cfg = azimuth_dd_config(n_freq=64)  # 16 ns window, guard at 12.8
        with pytest.raises(AliasingError):
            synthesize_coherent(single_path(tau_ns=13.0), cfg)


class TestIncoherent:
    def test_single_path_equals_coherent(self):
        cfg = azimuth_dd_config()
        real = single_path(tau_ns=1.3, phi_t=100.0, phi_r=200.0,
                           gain=0.3 - 0.4j)
        a = synthesize_coherent(real, cfg)
        b = synthesize_incoherent(real, cfg)
        np.testing.assert_allclose(a.values, b.values, atol=1e-14)

    def test_matches_mean_of_coherent_trials(self):
        params = SVParams(seed=15, max_delay_window_ns=50.0)
        real = generate(params)
        cfg = azimuth_dd_config(n_freq=256)
        incoherent = synthesize_incoherent(real, cfg)
        acc = np.zeros(cfg.dims)
        n_trials = 500
        for t in range(n_trials):
            acc += synthesize_coherent(randomize_phases(real, t), cfg).values
        mean = acc / n_trials
        ratio_db = 10 * math.log10(mean.sum() / incoherent.values.sum())
        assert abs(ratio_db) < 0.1

    def test_isotropic_on_grid_total_is_exact(self):
        cfg = SounderConfig(
            center_frequency_ghz=154.0, bandwidth_ghz=4.0, n_freq=64,
            n_delay=64, tx_beam=beams.Isotropic(), rx_beam=beams.Isotropic(),
            tx_theta_grid=AxisGrid.single_point(90.0, 180.0),
            tx_phi_grid=AxisGrid.full_circle(90.0),
            rx_theta_grid=AxisGrid.single_point(90.0, 180.0),
            rx_phi_grid=AxisGrid.full_circle(90.0),
        )
        mpcs = tuple(
            Mpc(tau_ns=k * cfg.delta_tau_ns, theta_t=90.0, phi_t=30.0 * k,
                theta_r=90.0, phi_r=10.0 * k, gain=complex(0.5, 0.1 * k))
            for k in range(5)
        )
        real = MultipathRealization(mpcs=mpcs, params=SVParams(), seed=0)
        tensor = synthesize_incoherent(real, cfg)
        # isotropic beams: zeta = N_phi_T * N_phi_R per path, delay sums to 1
        expected = real.total_power * 4 * 4
        assert tensor.total() == pytest.approx(expected, rel=1e-12)

    def test_grid_alignment_limit(self):
        # all parameters snapped to grid centers: total = zeta_total * P_c
        params = SVParams(seed=31, max_delay_window_ns=50.0)
        raw = generate(params)
        cfg = azimuth_dd_config(n_freq=256, asi_deg=15.0, hpbw_deg=15.0)

        def snap_az(x):
            return float((round(x / 15.0) % 24) * 15.0)

        mpcs = tuple(
            replace(m,
                    tau_ns=float(round(m.tau_ns / cfg.delta_tau_ns)
                                 * cfg.delta_tau_ns),
                    phi_t=snap_az(m.phi_t), phi_r=snap_az(m.phi_r))
            for m in raw.mpcs)
        real = MultipathRealization(mpcs=mpcs, params=params, seed=31)
        tensor = synthesize_incoherent(real, cfg)
        cut = beams.axis_cut(cfg.tx_beam, "phi")
        zeta_phi = float(np.sum(np.asarray(
            cut(15.0 * np.arange(24))) ** 2))
        expected = real.total_power * zeta_phi**2
        assert tensor.total() == pytest.approx(expected, rel=1e-9)

    def test_nonnegative_and_finite(self):
        real = generate(SVParams(seed=2, max_delay_window_ns=50.0))
        tensor = synthesize_incoherent(real, azimuth_dd_config(n_freq=256))
        assert np.all(tensor.values >= 0.0)
        assert np.all(np.isfinite(tensor.values))


class TestFastPaths:
    def test_gram_matches_tensor_totals(self):
        real = generate(SVParams(seed=5, max_delay_window_ns=50.0))
        cfg = azimuth_dd_config(n_freq=256)
        gram, gains = response_gram(real, cfg)
        rng = np.random.default_rng(1)
        phases = rng.uniform(0.0, 2.0 * np.pi, (4, gains.size))
        fast = coherent_power_totals(gram, gains, phases)
        delay, tx, rx, g = mpc_factor_blocks(real, cfg)
        for t in range(4):
            rotated = g * np.exp(1j * phases[t])
            field = np.zeros(cfg.dims, dtype=complex)
            for l in range(g.size):
                field += rotated[l] * (delay[l][:, None, None, None, None]
                                       * tx[l][None, :, :, None, None]
                                       * rx[l][None, None, None, :, :])
            direct = float(np.sum(np.abs(field) ** 2))
            assert fast[t] == pytest.approx(direct, rel=1e-10)

    def test_zero_phases_match_plain_coherent(self):
        real = generate(SVParams(seed=6, max_delay_window_ns=50.0))
        cfg = azimuth_dd_config(n_freq=256)
        gram, gains = response_gram(real, cfg)
        totals = coherent_power_totals(gram, gains,
                                       np.zeros((1, gains.size)))
        tensor = synthesize_coherent(real, cfg)
        assert totals[0] == pytest.approx(tensor.total(), rel=1e-10)

    def test_incoherent_total_matches_tensor(self):
        real = generate(SVParams(seed=7, max_delay_window_ns=50.0))
        cfg = azimuth_dd_config(n_freq=256)
        fast = incoherent_total_power(real, cfg)
        tensor = synthesize_incoherent(real, cfg)
        assert fast == pytest.approx(tensor.total(), rel=1e-12)

    def test_gram_requires_noise_free(self):
        real = single_path()
        cfg = azimuth_dd_config(noise_power=0.1)
        with pytest.raises(ValueError):
            response_gram(real, cfg)


class TestSerialization:
    def test_roundtrip(self, tmp_path):
        real = single_path(tau_ns=0.75, phi_t=45.0, phi_r=90.0)
        cfg = azimuth_dd_config()
        tensor = synthesize_incoherent(real, cfg)
        path = tmp_path / "power.mdp"
        save_tensor(tensor, path)
        clone = load_tensor(path)
        np.testing.assert_array_equal(clone.values, tensor.values)
        assert clone.config.dims == cfg.dims
        assert clone.config.tx_beam == cfg.tx_beam

    def test_header_is_json_line(self, tmp_path):
        tensor = synthesize_incoherent(single_path(), azimuth_dd_config())
        path = tmp_path / "power.mdp"
        save_tensor(tensor, path)
        import json
        with open(path, "rb") as fh:
            header = json.loads(fh.readline())
        assert header["units"] == "linear_power"
        assert tuple(header["dim_order"]) == DIM_ORDER
        assert header["dims"] == list(tensor.dims)

    def test_rejects_foreign_file(self, tmp_path):
        path = tmp_path / "bogus.mdp"
        path.write_bytes(b'{"format": "something-else"}\n')
        with pytest.raises(ValueError):
            load_tensor(path)

    def test_tensor_shape_validation(self):
        cfg = azimuth_dd_config()
        with pytest.raises(ValueError):
            PowerTensor(values=np.zeros((2, 2)), config=cfg)
