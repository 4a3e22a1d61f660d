from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from risisac.channel import generate_scenario
from risisac.config import SystemConfig
from risisac.metrics import secrecy_rate
from risisac.oracle import _beam_directions, grid_oracle

MICRO = SystemConfig(K=1, N=2, M=2, P=1.0, P_e=1e-3, gamma_echo=1e-3)


def micro(seed):
    return generate_scenario(MICRO.replace(seed=seed))


def test_directions_unit_norm():
    d = _beam_directions(10, 10)
    assert d.shape == (100, 2)
    np.testing.assert_allclose(np.linalg.norm(d, axis=1), 1.0)


@pytest.mark.parametrize("seed", range(3))
def test_reported_value_matches_metrics(seed):
    ch = micro(seed)
    res = grid_oracle(ch, n_phase=8, n_angle=5, n_beam_phase=5, n_power=5)
    rep = secrecy_rate(ch, res.state)
    assert rep.sr == pytest.approx(res.sr, rel=1e-9, abs=1e-12)
    assert rep.feasible
    assert np.linalg.norm(res.state.W) ** 2 == pytest.approx(ch.P)
    np.testing.assert_allclose(np.abs(res.state.phi), 1.0)


def test_finer_grid_not_worse():
    ch = micro(5)
    coarse = grid_oracle(ch, n_phase=4, n_angle=4, n_beam_phase=4, n_power=4)
    fine = grid_oracle(ch, n_phase=8, n_angle=4, n_beam_phase=4, n_power=4)
    assert fine.sr >= coarse.sr - 1e-12


def test_dominates_random_feasible_states():
    ch = micro(1)
    res = grid_oracle(ch, n_phase=16, n_angle=8, n_beam_phase=8, n_power=8)
    rng = np.random.default_rng(0)
    from risisac.metrics import BeamformingState
    u = ch.h_bt / np.linalg.norm(ch.h_bt)
    for _ in range(200):
        W = np.zeros((2, 3), complex)
        W[:, :2] = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        W *= np.sqrt(ch.P) / np.linalg.norm(W)
        phi = np.exp(1j * 2 * np.pi * rng.integers(0, 16, 2) / 16)
        rep = secrecy_rate(ch, BeamformingState(W=W, phi=phi, u=u))
        if rep.feasible:
            assert rep.sr <= res.sr * 1.25 + 1e-9


def test_rejects_other_sizes():
    with pytest.raises(ValueError):
        grid_oracle(generate_scenario(MICRO.replace(K=2)))


def test_infeasible_raises():
    with pytest.raises(ValueError):
        grid_oracle(replace(micro(0), gamma_echo=1e12), n_phase=2)
