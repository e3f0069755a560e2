"""Tests for beam patterns: analytic, tabulated, and the isotropic limit."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from omnisynth import beams
from omnisynth.beams import (Isotropic, PatternSupportError, TabulatedPattern,
                             evaluate, horn_like_fixture, import_pattern,
                             make_vonmises)


def kappa_oracle(hpbw_deg):
    return math.log(math.sqrt(2.0)) / (1.0 - math.cos(math.radians(0.5 * hpbw_deg)))


class TestVonMises:
    def test_isotropic_limit(self):
        beam = make_vonmises(180.0, 360.0)
        assert beam.kappa_theta == 0.0
        assert beam.kappa_phi == 0.0
        assert beam.boresight_gain == pytest.approx(1.0, rel=1e-14)
        assert evaluate(beam, 71.0, -150.0) == pytest.approx(1.0)

    def test_kappa_matches_oracle(self):
        beam = make_vonmises(9.0, 9.0)
        expected = kappa_oracle(9.0)
        assert beam.kappa_theta == pytest.approx(expected, rel=1e-14)
        assert beam.kappa_phi == pytest.approx(expected, rel=1e-14)
        # concentration for a 9 deg width sits near 112.4
        assert abs(beam.kappa_phi - 112.42656852103516) < 1e-9

    def test_half_power_at_half_beamwidth(self):
        for hpbw in (5.0, 9.0, 30.0, 120.0):
            beam = make_vonmises(hpbw, hpbw)
            assert evaluate(beam, hpbw / 2.0, 0.0) ** 2 == pytest.approx(0.5, abs=1e-12)
            assert evaluate(beam, 0.0, hpbw / 2.0) ** 2 == pytest.approx(0.5, abs=1e-12)

    def test_gain_is_product_of_axis_gains(self):
        beam = make_vonmises(9.0, 12.0)
        gt = beams.axis_power_gain(beam.kappa_theta)
        gp = beams.axis_power_gain(beam.kappa_phi)
        assert beam.boresight_gain == pytest.approx(gt * gp, rel=1e-14)
        assert gt > 1.0 and gp > 1.0

    def test_gain_unity_iff_flat(self):
        assert beams.axis_power_gain(0.0) == pytest.approx(1.0, rel=1e-14)
        for kappa in (0.5, 10.0, 112.4):
            assert beams.axis_power_gain(kappa) > 1.0

    def test_invalid_hpbw(self):
        with pytest.raises(ValueError):
            make_vonmises(0.0, 9.0)
        with pytest.raises(ValueError):
            make_vonmises(9.0, -5.0)

    def test_hpbw_recovery_by_bisection(self):
        beam = make_vonmises(17.0, 41.0)

        def solve(axis_eval, hint):
            lo, hi = 1e-9, hint * 2.0
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if axis_eval(mid) ** 2 > 0.5:
                    lo = mid
                else:
                    hi = mid
            return 0.5 * (lo + hi)

        half_theta = solve(lambda x: evaluate(beam, x, 0.0), 17.0)
        half_phi = solve(lambda x: evaluate(beam, 0.0, x), 41.0)
        assert half_theta == pytest.approx(17.0 / 2.0, abs=1e-6)
        assert half_phi == pytest.approx(41.0 / 2.0, abs=1e-6)


class TestEvaluate:
    def test_peak_normalization(self):
        for pattern in (Isotropic(), make_vonmises(9.0, 9.0), horn_like_fixture()):
            assert evaluate(pattern, 0.0, 0.0) == pytest.approx(1.0, abs=1e-12)

    def test_vonmises_offaxis_power(self):
        beam = make_vonmises(180.0, 9.0)
        # e^{2 kappa (cos 9deg - 1)}, frozen from high-precision evaluation
        assert evaluate(beam, 0.0, 9.0) ** 2 == pytest.approx(
            0.0627676642008, rel=1e-10)

    def test_isotropic_everywhere(self):
        assert evaluate(Isotropic(), 37.0, -101.0) == 1.0

    def test_azimuth_wrap(self):
        beam = make_vonmises(180.0, 25.0)
        assert evaluate(beam, 0.0, 350.0) == pytest.approx(
            evaluate(beam, 0.0, -10.0), rel=1e-14)
        fixture = horn_like_fixture()
        assert evaluate(fixture, 0.0, 361.0) == pytest.approx(
            evaluate(fixture, 0.0, 1.0), rel=1e-12)

    def test_symmetry(self):
        beam = make_vonmises(11.0, 23.0)
        for dt, dp in [(3.0, 7.0), (40.0, 170.0), (0.5, 0.25)]:
            base = evaluate(beam, dt, dp)
            assert evaluate(beam, -dt, dp) == pytest.approx(base, rel=1e-14)
            assert evaluate(beam, dt, -dp) == pytest.approx(base, rel=1e-14)

    @given(st.floats(min_value=0.1, max_value=179.0),
           st.floats(min_value=0.0, max_value=179.0))
    @settings(max_examples=60, deadline=None)
    def test_main_lobe_monotone(self, a, b):
        beam = make_vonmises(20.0, 20.0)
        lo, hi = sorted((a, b))
        assert evaluate(beam, hi, 0.0) <= evaluate(beam, lo, 0.0) + 1e-15

    def test_vectorized(self):
        beam = make_vonmises(9.0, 9.0)
        out = evaluate(beam, np.zeros(5), np.linspace(0, 20, 5))
        assert out.shape == (5,)
        assert np.all((out >= 0.0) & (out <= 1.0))


class TestTabulatedPattern:
    def test_bilinear_nodes_exact(self):
        beam = make_vonmises(8.0, 9.0)
        tg = np.arange(-30.0, 31.0, 2.0)
        pg = np.arange(-30.0, 31.0, 3.0)
        amp = evaluate(beam, tg[:, None], pg[None, :])
        table = TabulatedPattern(tg, pg, amp)
        assert table.separable
        np.testing.assert_allclose(
            table.response(tg[:, None], pg[None, :]), amp, atol=1e-12)

    def test_support_error(self):
        table = TabulatedPattern(np.arange(-10.0, 11.0), np.arange(-10.0, 11.0),
                                 np.ones((21, 21)))
        with pytest.raises(PatternSupportError):
            evaluate(table, 15.0, 0.0)
        with pytest.raises(PatternSupportError):
            evaluate(table, 0.0, 12.0)

    def test_peak_renormalization(self):
        table = TabulatedPattern([0.0], np.arange(5.0), 0.5 * np.ones((1, 5)))
        assert table.amplitude.max() == 1.0

    def test_validation(self):
        with pytest.raises(ValueError):
            TabulatedPattern([0.0, 0.0], [0.0, 1.0], np.ones((2, 2)))
        with pytest.raises(ValueError):
            TabulatedPattern([0.0, 1.0], [0.0, 1.0], -np.ones((2, 2)))
        with pytest.raises(ValueError):
            TabulatedPattern([0.0, 1.0], [0.0, 1.0], np.ones((3, 2)))


class TestImportPattern:
    def _write_csv(self, path, rows):
        with open(path, "w") as fh:
            fh.write("theta_deg,phi_deg,amplitude_linear\n")
            for row in rows:
                fh.write(",".join(str(v) for v in row) + "\n")

    def test_flat_cut_is_isotropic_equivalent(self, tmp_path):
        path = tmp_path / "flat.csv"
        self._write_csv(path, [(0.0, p, 1.0) for p in range(-180, 181, 5)])
        pattern = import_pattern(path)
        for dt, dp in [(0.0, 0.0), (45.0, 12.5), (90.0, -170.0)]:
            assert evaluate(pattern, dt, dp) == pytest.approx(1.0, abs=1e-12)

    def test_roundtrip_vonmises(self, tmp_path):
        beam = make_vonmises(8.0, 9.0)
        tg = np.arange(-40.0, 41.0, 1.0)
        pg = np.arange(-40.0, 41.0, 1.0)
        path = tmp_path / "vm.csv"
        beams.export_pattern_csv(beam, tg, pg, path)
        pattern = import_pattern(path)
        got = pattern.response(tg[:, None], pg[None, :])
        want = evaluate(beam, tg[:, None], pg[None, :])
        np.testing.assert_allclose(got, want, atol=1e-9)

    def test_peak_rescaled(self, tmp_path):
        path = tmp_path / "half.csv"
        self._write_csv(path, [(0.0, p, 0.5 if p else 0.25) for p in range(-5, 6)])
        pattern = import_pattern(path)
        assert pattern.amplitude.max() == 1.0

    def test_sidecar_gain(self, tmp_path):
        path = tmp_path / "gain.csv"
        self._write_csv(path, [(0.0, p, 1.0) for p in range(-5, 6)])
        (tmp_path / "gain.json").write_text(json.dumps({"gain_dbi": 26.0}))
        pattern = import_pattern(path)
        assert pattern.boresight_gain == pytest.approx(10 ** 2.6, rel=1e-12)

    def test_missing_cells_rejected(self, tmp_path):
        path = tmp_path / "holes.csv"
        rows = [(t, p, 1.0) for t in (0.0, 1.0) for p in (0.0, 1.0)]
        self._write_csv(path, rows[:-1])
        with pytest.raises(ValueError, match="incomplete"):
            import_pattern(path)

    def test_duplicates_rejected(self, tmp_path):
        path = tmp_path / "dup.csv"
        self._write_csv(path, [(0.0, 0.0, 1.0), (0.0, 1.0, 1.0),
                               (0.0, 1.0, 0.9)])
        with pytest.raises(ValueError, match="duplicate"):
            import_pattern(path)

    def test_negative_amplitude_rejected(self, tmp_path):
        path = tmp_path / "neg.csv"
        self._write_csv(path, [(0.0, 0.0, 1.0), (0.0, 1.0, -0.1)])
        with pytest.raises(ValueError, match="negative"):
            import_pattern(path)

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ValueError, match="columns"):
            import_pattern(path)


class TestHornFixture:
    def test_not_separable(self):
        fixture = horn_like_fixture()
        assert not fixture.separable
        assert fixture.separability_deviation > 1e-3

    def test_sidelobe_level(self):
        fixture = horn_like_fixture()
        # -20 dB lobes at +/-20 deg in the co-elevation cut
        for sign in (+1, -1):
            level = evaluate(fixture, sign * 20.0, 0.0) ** 2
            assert level == pytest.approx(1e-2, rel=0.05)

    def test_main_lobe_widths(self):
        fixture = horn_like_fixture()
        assert evaluate(fixture, 4.0, 0.0) ** 2 == pytest.approx(0.5, abs=0.01)
        assert evaluate(fixture, 0.0, 4.5) ** 2 == pytest.approx(0.5, abs=0.01)

    def test_azimuth_cut_is_clean_main_lobe(self):
        # sidelobes live in the co-elevation plane; the azimuth principal
        # cut stays indistinguishable from the analytic main lobe
        fixture = horn_like_fixture()
        vm = make_vonmises(8.0, 9.0)
        phis = np.arange(0.0, 180.0, 9.0)
        np.testing.assert_allclose(
            evaluate(fixture, np.zeros_like(phis), phis),
            evaluate(vm, np.zeros_like(phis), phis),
            atol=1e-4)

    def test_serialization_roundtrip(self):
        fixture = horn_like_fixture()
        clone = beams.pattern_from_dict(beams.pattern_to_dict(fixture))
        assert isinstance(clone, TabulatedPattern)
        np.testing.assert_allclose(clone.amplitude, fixture.amplitude)

    def test_vonmises_serialization_roundtrip(self):
        beam = make_vonmises(9.0, 12.0)
        clone = beams.pattern_from_dict(beams.pattern_to_dict(beam))
        assert clone == beam
        iso = beams.pattern_from_dict(beams.pattern_to_dict(Isotropic()))
        assert isinstance(iso, Isotropic)
