"""Rates, SINRs, echo SCNR and the system secrecy rate."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .channel import ChannelSet


@dataclass
class BeamformingState:
    """Decision variables.

    ``W`` is N x (K+N): the first K columns carry user data, the last N are
    radar beams.  ``phi`` holds the M RIS reflection coefficients and ``u``
    the receive beamformer.
    """

    W: NDArray[np.complex128]
    phi: NDArray[np.complex128]
    u: NDArray[np.complex128]

    def copy(self) -> BeamformingState:
        return BeamformingState(self.W.copy(), self.phi.copy(), self.u.copy())


@dataclass
class SecrecyReport:
    rate_user: NDArray[np.float64]
    rate_ae: NDArray[np.float64]
    rate_pe: NDArray[np.float64]
    secrecy_terms: NDArray[np.float64]
    sr: float
    unclamped: float
    scnr: float
    power_slack: float
    scnr_slack: float
    modulus_deviation: float

    @property
    def feasible(self) -> bool:
        return self.power_slack >= 0 and self.scnr_slack >= 0


def _others_mask(K: int, L: int) -> NDArray[np.bool_]:
    """Row k is True on every column except k."""
    mask = np.ones((K, L), dtype=bool)
    mask[np.arange(K), np.arange(K)] = False
    return mask


def composite_user_channels(ch: ChannelSet, phi: NDArray) -> NDArray[np.complex128]:
    """All g_k(Phi) stacked as a (K, N) array."""
    return ch.g_b.conj() + (ch.g_r.conj() * phi) @ ch.H_br


def composite_user_channel(ch: ChannelSet, phi: NDArray, k: int) -> NDArray[np.complex128]:
    if not 0 <= k < ch.K:
        raise IndexError(f"user index {k} out of range for K={ch.K}")
    return ch.g_b[k].conj() + (ch.g_r[k].conj() * phi) @ ch.H_br


def composite_pe_channel(ch: ChannelSet, phi: NDArray) -> NDArray[np.complex128]:
    return ch.h_bp.conj() + (ch.h_rp.conj() * phi) @ ch.H_br


def _sinr_rows(gains: NDArray, K: int, extra: NDArray | float, noise: float) -> NDArray:
    # gains: (K, K+N) |channel_k w_i|^2 as seen by the receiver listening to user k
    useful = gains[np.arange(K), np.arange(K)]
    interf = np.where(_others_mask(K, gains.shape[1]), gains, 0.0).sum(axis=1)
    return useful / (interf + extra + noise)


def sinr_users(ch: ChannelSet, state: BeamformingState) -> NDArray[np.float64]:
    gains = np.abs(composite_user_channels(ch, state.phi) @ state.W) ** 2
    return _sinr_rows(gains, ch.K, ch.P_e * np.abs(ch.h_ae) ** 2, ch.sigma_k2)


def sinr_user(ch: ChannelSet, state: BeamformingState, k: int) -> float:
    return float(sinr_users(ch, state)[k])


def rate_user(ch: ChannelSet, state: BeamformingState, k: int) -> float:
    return float(np.log2(1.0 + sinr_user(ch, state, k)))


def sinr_ae_all(ch: ChannelSet, state: BeamformingState) -> NDArray[np.float64]:
    row = np.abs(ch.h_bt.conj() @ state.W) ** 2
    gains = np.broadcast_to(row, (ch.K, row.size))
    return _sinr_rows(gains, ch.K, 0.0, ch.sigma_ae2)


def sinr_ae(ch: ChannelSet, state: BeamformingState, k: int) -> float:
    return float(sinr_ae_all(ch, state)[k])


def rate_ae(ch: ChannelSet, state: BeamformingState, k: int) -> float:
    return float(np.log2(1.0 + sinr_ae(ch, state, k)))


def sinr_pe_all(ch: ChannelSet, state: BeamformingState) -> NDArray[np.float64]:
    row = np.abs(composite_pe_channel(ch, state.phi) @ state.W) ** 2
    gains = np.broadcast_to(row, (ch.K, row.size))
    return _sinr_rows(gains, ch.K, 0.0, ch.sigma_pe2)


def sinr_pe(ch: ChannelSet, state: BeamformingState, k: int) -> float:
    return float(sinr_pe_all(ch, state)[k])


def rate_pe(ch: ChannelSet, state: BeamformingState, k: int) -> float:
    return float(np.log2(1.0 + sinr_pe(ch, state, k)))


def scnr_echo(ch: ChannelSet, state: BeamformingState) -> float:
    u = state.u
    if not np.any(u):
        raise ValueError("receive beamformer u must be non-zero")
    proj = u.conj() @ ch.h_bt  # u^H h_bt
    hw = ch.h_bt.conj() @ state.W  # h_bt^H w_i
    num = ch.zeta2 * np.abs(proj) ** 2 * np.sum(np.abs(hw) ** 2)
    den = ch.sigma_s2 * np.vdot(u, u).real + ch.P_e * np.abs(proj) ** 2
    return float(num / den)


def unclamped_secrecy(ch: ChannelSet, state: BeamformingState) -> float:
    r = np.log2(1.0 + sinr_users(ch, state))
    leak = np.maximum(np.log2(1.0 + sinr_ae_all(ch, state)), np.log2(1.0 + sinr_pe_all(ch, state)))
    return float(np.sum(r - leak))


def secrecy_rate(ch: ChannelSet, state: BeamformingState) -> SecrecyReport:
    """Sum over users of ``max(0, R_k - max(R_ae,k, R_pe,k))`` plus diagnostics."""
    r = np.log2(1.0 + sinr_users(ch, state))
    r_ae = np.log2(1.0 + sinr_ae_all(ch, state))
    r_pe = np.log2(1.0 + sinr_pe_all(ch, state))
    diff = r - np.maximum(r_ae, r_pe)
    terms = np.maximum(diff, 0.0)
    scnr = scnr_echo(ch, state)
    mod_dev = float(np.max(np.abs(np.abs(state.phi) - 1.0))) if state.phi.size else 0.0
    return SecrecyReport(
        rate_user=r,
        rate_ae=r_ae,
        rate_pe=r_pe,
        secrecy_terms=terms,
        sr=float(terms.sum()),
        unclamped=float(diff.sum()),
        scnr=scnr,
        power_slack=float(ch.P - np.linalg.norm(state.W) ** 2),
        scnr_slack=scnr - ch.gamma_echo,
        modulus_deviation=mod_dev,
    )


def clamped_secrecy_sum(rates, rates_ae, rates_pe) -> float:
    """Secrecy sum from precomputed per-user rates."""
    rates = np.asarray(rates, dtype=float)
    leak = np.maximum(np.asarray(rates_ae, dtype=float), np.asarray(rates_pe, dtype=float))
    return float(np.maximum(rates - leak, 0.0).sum())
