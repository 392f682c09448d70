import numpy as np
import pytest

from wxpulse import scene as S
from wxpulse import signal_model as sm
from wxpulse.design import matched_filter
from wxpulse.errors import DomainError, OrthogonalFilterError

import oracles

RADAR = S.RadarParams(wavelength=0.1, pri=1e-3, n_pulses=64)


class TestGenerateScene:
    def test_zero_power(self):
        sc = S.generate_scene(np.zeros(5), np.ones(5), RADAR, seed=1)
        assert not np.any(sc.alpha)

    def test_mean_power_converges(self):
        radar = S.RadarParams(n_pulses=100_000)
        sc = S.generate_scene([4.0], [3.0], radar, seed=2)
        assert 3.9 <= np.mean(np.abs(sc.alpha) ** 2) <= 4.1

    def test_zero_velocity_lag_one_phase(self):
        radar = S.RadarParams(n_pulses=20_000)
        sc = S.generate_scene([1.0], [0.0], radar, seed=3)
        a = sc.alpha[0]
        prods = np.conj(a[:-1]) * a[1:]
        r1 = prods.mean()
        # AR(1) products are correlated; blocks of 200 pulses are ~independent
        block = prods[: prods.size // 200 * 200].reshape(-1, 200).mean(1)
        se_phase = np.std(np.angle(block)) / np.sqrt(block.size)
        assert abs(np.angle(r1)) < 3 * se_phase + 1e-3

    def test_doppler_rate(self):
        sc = S.generate_scene([1.0, 2.0], [5.0, -7.0], RADAR, seed=4, amplitude="rotation")
        step = np.angle(sc.alpha[:, 1:] / sc.alpha[:, :-1])
        expect = -4 * np.pi * RADAR.pri * np.array([5.0, -7.0]) / RADAR.wavelength
        np.testing.assert_allclose(step, expect[:, None] * np.ones((1, 63)), atol=1e-12)
        np.testing.assert_allclose(np.abs(sc.alpha) ** 2, [[1.0], [2.0]] * np.ones((1, 64)), rtol=1e-12)

    def test_seeded_determinism(self):
        a = S.generate_scene(np.ones(4), np.zeros(4), RADAR, seed=7)
        b = S.generate_scene(np.ones(4), np.zeros(4), RADAR, seed=7)
        assert a.alpha.tobytes() == b.alpha.tobytes()

    def test_validation(self):
        with pytest.raises(DomainError):
            S.generate_scene([1.0, -1.0], [0.0, 0.0], RADAR)
        with pytest.raises(DomainError):
            S.generate_scene([1.0], [0.0, 0.0], RADAR)
        with pytest.raises(DomainError):
            S.generate_scene([1.0], [0.0], RADAR, amplitude="rayleigh")
        with pytest.raises(DomainError):
            S.RadarParams(n_pulses=1)


def scene_from_alpha(alpha):
    g = alpha.shape[0]
    return S.RangeScene(alpha, np.ones(g), np.zeros(g))


class TestEcho:
    def test_impulse_response(self, rng):
        xp = sm.zero_pad(sm.random_code(5, rng), 2)
        alpha = np.zeros((10, 3), complex)
        alpha[4] = 1.0
        echo = S.synthesize_echo(scene_from_alpha(alpha), xp)
        assert echo.shape == (10 + xp.size - 1, 3)
        expect = np.zeros(echo.shape[0], complex)
        expect[4 : 4 + xp.size] = xp
        for m in range(3):
            np.testing.assert_array_equal(echo[:, m], expect)

    def test_superposition_against_dense(self, rng):
        xp = sm.zero_pad(sm.random_code(4, rng), 1)
        length, gates = xp.size, 9
        alpha = np.zeros((gates, 2), complex)
        alpha[2] = [1 + 1j, 0.5]
        alpha[6] = [-0.3j, 2.0]
        echo = S.synthesize_echo(scene_from_alpha(alpha), xp)
        total = gates + length - 1
        big = np.r_[xp, np.zeros(total - length)]
        for m in range(2):
            expect = alpha[2, m] * oracles.shift_matrix(total, 2) @ big + \
                     alpha[6, m] * oracles.shift_matrix(total, 6) @ big
            np.testing.assert_allclose(echo[:, m], expect, atol=1e-14)

    def test_zero_scene(self, rng):
        xp = sm.random_code(6, rng)
        assert not np.any(S.synthesize_echo(scene_from_alpha(np.zeros((5, 4), complex)), xp))

    def test_linearity(self, rng):
        xp = sm.zero_pad(sm.random_code(6, rng), 3)
        a = S.generate_scene(rng.random(12), rng.uniform(-5, 5, 12), RADAR, seed=1)
        b = S.generate_scene(rng.random(12), rng.uniform(-5, 5, 12), RADAR, seed=2)
        lhs = S.synthesize_echo(a + b, xp)
        rhs = S.synthesize_echo(a, xp) + S.synthesize_echo(b, xp)
        assert np.max(np.abs(lhs - rhs)) < 1e-12


class TestCompress:
    def test_unit_scatterer_matched(self, rng):
        code = sm.random_code(8, rng)
        xp = sm.zero_pad(code, 2)
        alpha = np.zeros((6, 1), complex)
        alpha[3] = 1.0
        out = S.compress(S.synthesize_echo(scene_from_alpha(alpha), xp), xp, xp)
        assert abs(out[3, 0] - 1) < 1e-14
        assert out.shape == (6, 1)

    def test_zero_echo(self, rng):
        xp = sm.random_code(5, rng)
        assert not np.any(S.compress(np.zeros((9, 2), complex), xp, xp))

    def test_gate_output_agrees_with_signal_model(self, rng):
        code = sm.random_code(5, rng)
        pad = 2
        xp = sm.zero_pad(code, pad)
        w = rng.standard_normal(xp.size) + 1j * rng.standard_normal(xp.size)
        echo = rng.standard_normal((14 + xp.size - 1, 1)) + 0j
        out = S.compress(echo, w, xp)
        for g in range(14):
            ref = sm.estimate_alpha0(sm.filter_gate_output(echo[:, 0], w, g), w, xp)
            assert abs(out[g, 0] - ref) < 1e-12

    def test_white_noise_variance(self, rng):
        code = sm.random_code(8, rng)
        xp = sm.zero_pad(code, 3)
        w = xp + 0.3 * (rng.standard_normal(xp.size) + 1j * rng.standard_normal(xp.size))
        noise = 0.7
        echo = S.add_noise(np.zeros((50 + xp.size - 1, 4000)), noise, rng)
        out = S.compress(echo, w, xp)
        expect = noise * np.vdot(w, w).real / abs(np.vdot(w, xp)) ** 2
        assert abs(np.mean(np.abs(out) ** 2) / expect - 1) < 0.05

    def test_orthogonal(self):
        with pytest.raises(OrthogonalFilterError):
            S.compress(np.zeros((4, 1)), np.array([1, -1]), np.array([1, 1]))


class TestMoments:
    def test_pure_rotation_velocity(self):
        s = np.exp(1j * np.pi / 2 * np.arange(32))[None, :]
        est = S.estimate_moments(s, S.RadarParams(wavelength=0.1, pri=1e-3))
        assert est.velocity[0] == pytest.approx(-12.5, abs=1e-12)
        assert est.reflectivity_dbz[0] == pytest.approx(0.0, abs=1e-12)

    def test_calibration_offset(self):
        s = 2 * np.ones((1, 8))
        est = S.estimate_moments(s, S.RadarParams(calibration_db=5.0))
        assert est.reflectivity_dbz[0] == pytest.approx(10 * np.log10(4) + 5)

    def test_zero_gate_sentinel(self):
        est = S.estimate_moments(np.zeros((2, 4)), RADAR)
        assert np.all(est.reflectivity_dbz == -np.inf)
        assert np.all(np.isnan(est.velocity))

    @pytest.mark.parametrize("v", [-24.0, -3.3, 0.0, 11.1, 24.9])
    def test_velocity_exact_inside_nyquist(self, v):
        sc = S.generate_scene([2.0], [v], RADAR, seed=0, amplitude="rotation")
        est = S.estimate_moments(sc.alpha, RADAR)
        assert abs(est.velocity[0] - v) < 1e-9

    def test_needs_two_pulses(self):
        with pytest.raises(DomainError):
            S.estimate_moments(np.ones((3, 1)), RADAR)


class TestCompare:
    def make(self):
        sc = S.RangeScene(np.zeros((3, 2)), np.array([1.0, 10.0, 100.0]), np.array([1.0, 2.0, 3.0]))
        return sc

    def test_exact(self):
        sc = self.make()
        est = S.MomentEstimates(sc.truth_dbz(), sc.truth_velocity.copy())
        e = S.compare_profiles(sc, est)
        assert e.dbz_bias == e.dbz_rmse == e.vel_bias == e.vel_rmse == 0

    def test_constant_offset(self):
        sc = self.make()
        est = S.MomentEstimates(sc.truth_dbz() + 3, sc.truth_velocity.copy())
        e = S.compare_profiles(sc, est)
        assert e.dbz_bias == pytest.approx(3.0)
        assert e.dbz_rmse == pytest.approx(3.0)

    def test_excludes_undefined(self):
        sc = S.RangeScene(np.zeros((2, 2)), np.array([0.0, 1.0]), np.zeros(2))
        est = S.MomentEstimates(np.array([-np.inf, 1.0]), np.array([np.nan, 0.5]))
        e = S.compare_profiles(sc, est)
        assert e.dbz_bias == pytest.approx(1.0) and e.vel_rmse == pytest.approx(0.5)

    def test_length_mismatch(self):
        sc = self.make()
        with pytest.raises(DomainError):
            S.compare_profiles(sc, S.MomentEstimates(np.zeros(2), np.zeros(2)))

    def test_wrapped_velocity(self):
        assert S.velocity_residual(24.0, -24.0, nyquist=25.0) == pytest.approx(-2.0)


class TestPipeline:
    def test_noise_free_isolated_scatterer(self, rng):
        code = sm.random_code(16, rng)
        zeta = np.zeros(40)
        zeta[20] = 10.0
        sc, est = S.simulate(code, matched_filter(code, 0), 0, zeta, np.full(40, 4.0), RADAR,
                             trials=2, seed=5, amplitude="rotation")
        e = S.compare_profiles(sc, est)
        assert abs(e.dbz_bias) < 1e-6 and e.vel_rmse < 1e-9

    def test_isolated_gate_power_calibration(self):
        # a single nonzero gate sees no leakage at its own range, so the
        # mean linear power is unbiased for the truth
        rng = np.random.default_rng(8)
        code = sm.random_code(8, rng)
        zeta = np.zeros(20)
        zeta[10] = 3.0
        radar = S.RadarParams(n_pulses=256)
        sc, est = S.simulate(code, matched_filter(code, 0), 0, zeta, np.zeros(20), radar,
                             trials=400, seed=1, correlation=0.0)
        p = np.array([10 ** (e.reflectivity_dbz[10] / 10) for e in est])
        assert abs(p.mean() - 3.0) < 3 * p.std(ddof=1) / np.sqrt(p.size)

    def test_paired_seeds_share_scenes(self, rng):
        code = sm.random_code(8, rng)
        zeta = S.step_profile(16, step_db=10)
        a, _ = S.simulate(code, matched_filter(code, 0), 0, zeta, np.zeros(16), RADAR, trials=2, seed=3)
        b, _ = S.simulate(code, matched_filter(code, 2), 2, zeta, np.zeros(16), RADAR, trials=2, seed=3)
        for x, y in zip(a, b):
            assert x.alpha.tobytes() == y.alpha.tobytes()
