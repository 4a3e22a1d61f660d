"""Exhaustive grid search for single-user micro instances.

Independent of the optimizer: it enumerates RIS phases and a structured grid
of transmit beams and evaluates the secrecy rate in closed scalar form.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .channel import ChannelSet
from .metrics import BeamformingState


@dataclass
class OracleResult:
    sr: float
    state: BeamformingState
    feasible_points: int


def _beam_directions(n_angle: int, n_phase: int) -> NDArray[np.complex128]:
    a = np.linspace(0.0, np.pi / 2, n_angle)
    b = np.linspace(0.0, 2 * np.pi, n_phase, endpoint=False)
    A, B = np.meshgrid(a, b, indexing="ij")
    return np.stack([np.cos(A).ravel(), (np.sin(A) * np.exp(1j * B)).ravel()], axis=1)


def grid_oracle(ch: ChannelSet, n_phase: int = 64, n_angle: int = 10, n_beam_phase: int = 10,
                n_power: int = 10, chunk: int = 16) -> OracleResult:
    """Best secrecy rate over an RIS-phase x beam-direction x power-split grid.

    Only ``K = 1``, ``N = 2`` is supported.  The data beam sweeps
    ``n_angle * n_beam_phase`` unit directions (100 by default) and
    ``n_power`` power splits; the remaining power goes to one radar beam that
    sweeps the same direction grid plus the target-matched and user-nulling
    directions.  The receive beamformer is matched to the target channel,
    which is optimal because the echo covariance is rank one.
    """
    if ch.K != 1 or ch.N != 2:
        raise ValueError("grid oracle supports K=1, N=2 only")
    M = ch.M
    phases = np.exp(1j * 2 * np.pi * np.arange(n_phase) / n_phase)
    phi_grid = np.array(list(itertools.product(phases, repeat=M)), dtype=complex).reshape(-1, M)
    dirs = _beam_directions(n_angle, n_beam_phase)  # (D, 2)
    fracs = np.linspace(0.0, 1.0, n_power)
    P = ch.P
    h = ch.h_bt
    hn = h / np.linalg.norm(h)
    jam = ch.P_e * abs(ch.h_ae[0]) ** 2
    hh = abs(np.vdot(hn, h)) ** 2
    scnr_gain = ch.zeta2 * hh / (ch.sigma_s2 + ch.P_e * hh)
    ae_d = np.abs(dirs @ h.conj()) ** 2  # (D,)

    best_sr, best_state = -np.inf, None
    feasible_total = 0
    for start in range(0, phi_grid.shape[0], chunk):
        phis = phi_grid[start:start + chunk]  # (C, M)
        g = ch.g_b[0].conj()[None, :] + (ch.g_r[0].conj()[None, :] * phis) @ ch.H_br  # (C, 2)
        hp = ch.h_bp.conj()[None, :] + (ch.h_rp.conj()[None, :] * phis) @ ch.H_br
        gn = g / np.linalg.norm(g, axis=1, keepdims=True)
        zf = hn[None, :] - np.sum(gn.conj() * hn[None, :], axis=1, keepdims=True) * gn
        zf_norm = np.linalg.norm(zf, axis=1, keepdims=True)
        zf = np.where(zf_norm > 1e-12, zf / np.where(zf_norm > 0, zf_norm, 1.0), hn[None, :])
        C = phis.shape[0]
        radars = np.concatenate([np.broadcast_to(dirs, (C,) + dirs.shape),
                                 np.broadcast_to(hn, (C, 1, 2)), zf[:, None, :]], axis=1)  # (C, R, 2)

        u_d = np.abs(g @ dirs.T) ** 2  # (C, D)
        p_d = np.abs(hp @ dirs.T) ** 2
        u_r = np.abs(np.einsum("cn,crn->cr", g, radars)) ** 2  # (C, R)
        p_r = np.abs(np.einsum("cn,crn->cr", hp, radars)) ** 2
        a_r = np.abs(radars @ h.conj()) ** 2
        for f in fracs:
            pc, pr = f * P, (1 - f) * P
            sinr_u = pc * u_d[:, :, None] / (pr * u_r[:, None, :] + jam + ch.sigma_k2)
            sinr_a = pc * ae_d[None, :, None] / (pr * a_r[:, None, :] + ch.sigma_ae2)
            sinr_p = pc * p_d[:, :, None] / (pr * p_r[:, None, :] + ch.sigma_pe2)
            sr = np.log2(1 + sinr_u) - np.log2(1 + np.maximum(sinr_a, sinr_p))
            scnr = scnr_gain * (pc * ae_d[None, :, None] + pr * a_r[:, None, :])
            ok = scnr >= ch.gamma_echo
            feasible_total += int(ok.sum())
            sr = np.where(ok, np.maximum(sr, 0.0), -np.inf)
            flat = int(np.argmax(sr))
            if sr.flat[flat] > best_sr:
                c, d, r = np.unravel_index(flat, sr.shape)
                W = np.zeros((2, 3), dtype=complex)
                W[:, 0] = np.sqrt(pc) * dirs[d]
                W[:, 1] = np.sqrt(pr) * radars[c, r]
                best_sr = float(sr.flat[flat])
                best_state = BeamformingState(W=W, phi=phis[c].copy(), u=hn.copy())
    if best_state is None:
        raise ValueError("no grid point satisfies the sensing constraint")
    return OracleResult(sr=best_sr, state=best_state, feasible_points=feasible_total)
