from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from risisac.channel import generate_scenario
from risisac.config import SystemConfig, dbm_to_watts
from risisac.jbrd import (
    JbrdConfig,
    aligned_phases,
    default_rho,
    init_state,
    run_benchmark,
    run_jbrd,
    variation_rate,
)
from risisac.metrics import composite_user_channels, secrecy_rate

SMALL = SystemConfig(K=2, N=3, M=8)


def small(seed=0, **kw):
    return generate_scenario(SMALL.replace(seed=seed, **kw))


class TestVariationRate:
    def test_examples(self):
        assert variation_rate(5.0, 5.0) == 0.0
        assert variation_rate(11.0, 10.0) == pytest.approx(0.1)
        v = variation_rate(1e-15, 0.0)
        assert np.isfinite(v) and v == pytest.approx(1e-3)

    def test_nonnegative(self):
        assert variation_rate(-3.0, 2.0) > 0


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(delta=0.0), dict(max_outer=0), dict(max_inner_w=0),
                                    dict(init="other"), dict(rho=-1.0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            JbrdConfig(**kw)


class TestInit:
    @pytest.mark.parametrize("policy", ["mrt_aligned", "random"])
    def test_power_and_modulus(self, policy):
        ch = small(1)
        st = init_state(ch, JbrdConfig(init=policy))
        assert np.linalg.norm(st.W) ** 2 == pytest.approx(0.9 * ch.P, rel=1e-12)
        np.testing.assert_allclose(np.abs(st.phi), 1.0, atol=1e-12)
        np.testing.assert_allclose(st.u, ch.h_bt / np.linalg.norm(ch.h_bt))

    def test_matched_filter_columns(self):
        ch = small(2)
        st = init_state(ch)
        G = composite_user_channels(ch, st.phi)
        for k in range(ch.K):
            cos = abs(np.vdot(G[k].conj(), st.W[:, k])) / (np.linalg.norm(G[k]) * np.linalg.norm(st.W[:, k]))
            assert cos == pytest.approx(1.0, abs=1e-12)

    def test_radar_columns_target(self):
        ch = small(3)
        st = init_state(ch)
        hb = ch.h_bt / np.linalg.norm(ch.h_bt)
        for col in st.W[:, ch.K:].T:
            assert abs(np.vdot(hb, col)) == pytest.approx(np.linalg.norm(col), rel=1e-12)

    def test_aligned_phases_cophase(self):
        ch = small(4)
        phi = aligned_phases(ch)
        v = ch.g_b[0] / np.linalg.norm(ch.g_b[0])
        terms = ch.g_r[0].conj() * phi * (ch.H_br @ v)
        direct = np.vdot(ch.g_b[0], v)
        np.testing.assert_allclose(np.angle(terms * np.conj(direct)), 0.0, atol=1e-9)

    def test_feasible_or_flagged(self):
        ch = small(5)
        rep = secrecy_rate(ch, init_state(ch))
        assert rep.feasible or rep.scnr_slack < 0

    def test_no_ris(self):
        ch = small(6).without_ris()
        assert init_state(ch).phi.size == 0
        assert default_rho(ch, init_state(ch)) == 0.0


class TestRun:
    @pytest.mark.parametrize("seed", range(4))
    def test_monotone_and_feasible(self, seed):
        ch = small(seed)
        st, tr = run_jbrd(ch, JbrdConfig(seed=seed, max_outer=15))
        assert np.all(np.diff(tr.unclamped) >= -1e-6)
        assert tr.unclamped[0] >= tr.init_unclamped - 1e-6
        assert all(x >= 0 for x in tr.sr)
        rep = secrecy_rate(ch, st)
        assert rep.power_slack >= -1e-6 * ch.P
        assert rep.scnr >= ch.gamma_echo * (1 - 1e-3)
        assert rep.modulus_deviation == 0.0 or rep.modulus_deviation < 1e-15
        assert rep.sr == pytest.approx(tr.final_sr)

    def test_trace_lengths(self):
        _, tr = run_jbrd(small(7), JbrdConfig(max_outer=3))
        n = tr.outer_iterations
        assert 1 <= n <= 3
        for name in ("sr", "unclamped", "surrogate", "scnr_residual", "power", "modulus_deviation",
                     "inner_w", "inner_phi", "wall_time"):
            assert len(getattr(tr, name)) == n
        assert tr.reason in ("converged", "max_outer")

    def test_far_passive_eve_without_jamming(self):
        cfg = SystemConfig(K=1, N=3, M=8, pe_pos=(1e6, 0.0), seed=3)
        ch = replace(generate_scenario(cfg), P_e=0.0)
        _, tr = run_jbrd(ch, JbrdConfig(seed=3))
        assert tr.final_sr >= tr.init_sr - 1e-9

    def test_infeasible_sensing(self):
        ch = small(8, gamma_echo=dbm_to_watts(80.0))
        _, tr = run_jbrd(ch, JbrdConfig(max_outer=3))
        assert tr.infeasible

    def test_deterministic(self):
        a = run_jbrd(small(9), JbrdConfig(seed=9, max_outer=5))[1]
        b = run_jbrd(small(9), JbrdConfig(seed=9, max_outer=5))[1]
        assert a.unclamped == b.unclamped and a.final_sr == b.final_sr


class TestBenchmarks:
    def test_no_ris_ignores_ris_size(self):
        a = run_benchmark(small(1, M=4), JbrdConfig(seed=1, max_outer=5), "no_ris")[1]
        b = run_benchmark(small(1, M=16), JbrdConfig(seed=1, max_outer=5), "no_ris")[1]
        assert a.final_sr == b.final_sr

    def test_no_ris_is_jbrd_without_surface(self):
        ch = small(2)
        a = run_benchmark(ch, JbrdConfig(seed=2, max_outer=5), "no_ris")[1]
        b = run_jbrd(ch.without_ris(), JbrdConfig(seed=2, max_outer=5))[1]
        assert a.unclamped == b.unclamped and a.sr == b.sr

    def test_random_phase_fixed(self):
        ch = small(3)
        st, tr = run_benchmark(ch, JbrdConfig(seed=3, max_outer=5), "ris_random_phase")
        st2, tr2 = run_benchmark(ch, JbrdConfig(seed=3, max_outer=5), "ris_random_phase")
        np.testing.assert_array_equal(st.phi, st2.phi)
        assert tr.sr == tr2.sr
        assert not np.allclose(st.phi, aligned_phases(ch))

    def test_random_receive_fixed(self):
        ch = small(4)
        st, _ = run_benchmark(ch, JbrdConfig(seed=4, max_outer=5), "u_random")
        hb = ch.h_bt / np.linalg.norm(ch.h_bt)
        assert abs(np.vdot(hb, st.u)) < 1 - 1e-6
        assert np.linalg.norm(st.u) == pytest.approx(1.0)

    def test_unknown(self):
        with pytest.raises(ValueError):
            run_benchmark(small(0), JbrdConfig(), "magic")
