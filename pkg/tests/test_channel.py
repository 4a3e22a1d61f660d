from __future__ import annotations

import math

import numpy as np
import pytest

from risisac.channel import (
    arrival_angle,
    generate_scenario,
    path_loss,
    rician_channel,
    steering_bs,
    steering_ris,
)
from risisac.config import SystemConfig, db_to_linear, dbm_to_watts, watts_to_dbm
from risisac.metrics import composite_pe_channel, composite_user_channels


class TestUnits:
    def test_dbm(self):
        assert dbm_to_watts(30.0) == pytest.approx(1.0)
        assert dbm_to_watts(45.0) == pytest.approx(31.6227766016838)
        assert watts_to_dbm(dbm_to_watts(7.0)) == pytest.approx(7.0)

    def test_db(self):
        assert db_to_linear(3.0) == pytest.approx(1.9952623149688795)
        assert db_to_linear(-30.0) == pytest.approx(1e-3)

    def test_table_defaults(self):
        cfg = SystemConfig()
        assert (cfg.K, cfg.N, cfg.M) == (3, 6, 80)
        assert cfg.P == pytest.approx(10 ** 1.5)
        assert cfg.sigma_k2 == pytest.approx(1e-9)
        assert cfg.kappa == pytest.approx(1.99526, rel=1e-5)
        assert cfg.delta == 1e-3
        assert cfg.element_spacing_ratio == 0.5

    @pytest.mark.parametrize("field,value", [("K", 0), ("N", 0), ("M", -1), ("P", 0.0), ("sigma_s2", -1.0),
                                             ("kappa", -0.1), ("delta", 0.0)])
    def test_rejects_invalid(self, field, value):
        with pytest.raises(ValueError):
            SystemConfig(**{field: value})

    def test_zero_ris_allowed(self):
        assert SystemConfig(M=0).M == 0


class TestSteering:
    def test_broadside(self):
        np.testing.assert_allclose(steering_bs(0.0, 4), np.ones(4))
        np.testing.assert_allclose(steering_ris(0.0, 8), np.ones(8))

    def test_endfire(self):
        np.testing.assert_allclose(steering_bs(np.pi / 2, 2), [1, -1], atol=1e-12)
        np.testing.assert_allclose(steering_ris(np.pi / 2, 3), [1, -1, 1], atol=1e-12)
        np.testing.assert_allclose(steering_ris(-np.pi / 2, 2), [1, -1], atol=1e-12)

    def test_thirty_degrees(self):
        np.testing.assert_allclose(steering_bs(np.pi / 6, 3), [1, 1j, -1], atol=1e-12)

    def test_unit_modulus(self):
        a = steering_bs(0.37, 16)
        np.testing.assert_allclose(np.abs(a), 1.0)
        assert np.vdot(a, a).real == pytest.approx(16.0)


class TestPathLoss:
    def test_reference_distance(self):
        assert path_loss(1.0, 2.0) == pytest.approx(1e-3)
        for eps in (2.0, 2.6, 3.7):
            assert path_loss(1.0, eps) == pytest.approx(1e-3)

    def test_ten_meters(self):
        assert path_loss(10.0, 2.0) == pytest.approx(1e-5)

    def test_nonpositive_distance(self):
        with pytest.raises(ValueError):
            path_loss(0.0, 2.0)


class TestRician:
    def test_los_limit(self):
        los = steering_ris(0.3, 8)
        h = rician_channel(los, 1e12, np.random.default_rng(0))
        np.testing.assert_allclose(h, los, rtol=1e-5, atol=1e-5)

    def test_pure_nlos_zero_mean(self):
        rng = np.random.default_rng(1)
        draws = rician_channel(np.ones(10_000), 0.0, rng)
        # standard error of the mean of a unit-variance complex draw is 1/sqrt(n)
        assert abs(draws.mean()) < 3 / np.sqrt(10_000)

    def test_variance_unit_kappa(self):
        rng = np.random.default_rng(2)
        draws = rician_channel(np.zeros(10_000), 1.0, rng)
        # LOS part is zero so the variance is the NLOS weight 1/(kappa+1), here 0.5;
        # with a unit-modulus LOS the total second moment is 1
        full = rician_channel(np.ones(10_000), 1.0, np.random.default_rng(3))
        assert np.mean(np.abs(full) ** 2) == pytest.approx(1.0, rel=0.05)
        assert np.var(draws) == pytest.approx(0.5, rel=0.05)

    def test_negative_kappa(self):
        with pytest.raises(ValueError):
            rician_channel(np.ones(2), -1.0, np.random.default_rng(0))


class TestScenario:
    def test_shapes(self):
        ch = generate_scenario(SystemConfig(K=2, N=4, M=16))
        assert ch.H_br.shape == (16, 4) and ch.g_b.shape == (2, 4) and ch.g_r.shape == (2, 16)
        assert ch.h_bp.shape == (4,) and ch.h_rp.shape == (16,) and ch.h_bt.shape == (4,)
        assert ch.h_ae.shape == (2,)

    def test_deterministic(self):
        a = generate_scenario(SystemConfig(seed=11))
        b = generate_scenario(SystemConfig(seed=11))
        for name in ("H_br", "g_b", "g_r", "h_bp", "h_rp", "h_bt", "h_ae", "user_positions"):
            assert np.array_equal(getattr(a, name), getattr(b, name))

    def test_seed_changes_draws(self):
        a = generate_scenario(SystemConfig(seed=1))
        b = generate_scenario(SystemConfig(seed=2))
        assert not np.array_equal(a.g_b, b.g_b)

    def test_target_channel_norm(self):
        cfg = SystemConfig(N=6)
        ch = generate_scenario(cfg)
        expected = 6 * 1e-3 * (1.0 / math.sqrt(325.0)) ** 2
        assert np.vdot(ch.h_bt, ch.h_bt).real == pytest.approx(expected, rel=1e-12)

    def test_target_matrix_rank_one(self):
        ch = generate_scenario(SystemConfig(N=4, M=4))
        H = ch.H_bt
        np.testing.assert_allclose(H, H.conj().T, atol=1e-12 * np.abs(H).max())
        np.testing.assert_allclose(H, np.outer(ch.h_bt, ch.h_bt.conj()), atol=1e-12 * np.abs(H).max())
        assert np.linalg.matrix_rank(H, tol=1e-9 * np.abs(H).max()) == 1

    def test_no_ris_reduces_to_direct(self):
        ch = generate_scenario(SystemConfig(K=2, N=3, M=0))
        assert ch.H_br.shape == (0, 3) and ch.g_r.shape == (2, 0)
        np.testing.assert_array_equal(composite_user_channels(ch, np.zeros(0)), ch.g_b.conj())
        np.testing.assert_array_equal(composite_pe_channel(ch, np.zeros(0)), ch.h_bp.conj())

    def test_ris_size_leaves_direct_links(self):
        a = generate_scenario(SystemConfig(M=8, seed=4))
        b = generate_scenario(SystemConfig(M=32, seed=4))
        assert np.array_equal(a.g_b, b.g_b) and np.array_equal(a.h_ae, b.h_ae)

    def test_users_on_circle(self):
        cfg = SystemConfig(K=3)
        ch = generate_scenario(cfg)
        d = np.hypot(*(ch.user_positions - np.array(cfg.ris_pos)).T)
        np.testing.assert_allclose(d, 20.0)

    def test_fixed_placement(self):
        a = generate_scenario(SystemConfig(seed=1, resample_users=False, placement_seed=9))
        b = generate_scenario(SystemConfig(seed=2, resample_users=False, placement_seed=9))
        np.testing.assert_array_equal(a.user_positions, b.user_positions)

    def test_angle_convention(self):
        assert arrival_angle((0, 0), (0, 5)) == pytest.approx(0.0)
        assert arrival_angle((0, 0), (5, 0)) == pytest.approx(np.pi / 2)

    def test_without_ris(self):
        ch = generate_scenario(SystemConfig(K=2, N=3, M=5))
        bare = ch.without_ris()
        assert bare.M == 0 and np.array_equal(bare.g_b, ch.g_b)
