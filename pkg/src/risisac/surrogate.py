"""Log-ratio transform and first-order minorizers for the SCA subproblems.

Each rate ``ln(1 + a / b)`` is written as ``ln(a + b) - ln(b)`` and the
``-ln(b)`` (or ``+ln(b)``) part is replaced by its variational form
``max_r [-r b + ln r + 1]``, whose maximizer is ``r = 1/b``.  Quadratics that
appear inside a concave ``ln`` are then replaced by their tangent planes,
which are global lower bounds because ``|a w|^2`` is convex.

All ``phi_*`` helpers return nats.  Complex gradients follow the convention
``df/dRe(z) + 1j * df/dIm(z)``, so ``z + t * grad`` is an ascent step.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .channel import ChannelSet
from .metrics import (
    BeamformingState,
    _others_mask,
    composite_pe_channel,
    composite_user_channels,
)

LN2 = np.log(2.0)


@dataclass(frozen=True)
class NoiseScale:
    m_k: float
    m_a: float
    m_p: float
    m_s: float

    @classmethod
    def from_channels(cls, ch: ChannelSet) -> NoiseScale:
        return cls(1.0 / ch.sigma_k2, 1.0 / ch.sigma_ae2, 1.0 / ch.sigma_pe2, 1.0 / ch.sigma_s2)


@dataclass(frozen=True)
class AuxiliaryVars:
    r: NDArray[np.float64]
    r_a: NDArray[np.float64]
    r_p: NDArray[np.float64]


def _scales(ch: ChannelSet, scales: NoiseScale | None) -> NoiseScale:
    return NoiseScale.from_channels(ch) if scales is None else scales


def _jam(ch: ChannelSet, m_k: float) -> NDArray[np.float64]:
    return m_k * ch.P_e * np.abs(ch.h_ae) ** 2


def optimal_aux(ch: ChannelSet, W: NDArray, phi: NDArray, scales: NoiseScale | None = None) -> AuxiliaryVars:
    """Closed-form ``r``, ``r_a``, ``r_p`` for every user at ``(W, phi)``."""
    s = _scales(ch, scales)
    K, L = ch.K, W.shape[1]
    mask = _others_mask(K, L)
    gu = np.abs(composite_user_channels(ch, phi) @ W) ** 2
    interf = np.where(mask, gu, 0.0).sum(axis=1)
    r = 1.0 / (s.m_k * interf + _jam(ch, s.m_k) + 1.0)
    ae_total = np.sum(np.abs(ch.h_bt.conj() @ W) ** 2)
    pe_total = np.sum(np.abs(composite_pe_channel(ch, phi) @ W) ** 2)
    r_a = np.full(K, 1.0 / (s.m_a * ae_total + 1.0))
    r_p = np.full(K, 1.0 / (s.m_p * pe_total + 1.0))
    return AuxiliaryVars(r=r, r_a=r_a, r_p=r_p)


def opt_r_user(ch: ChannelSet, state: BeamformingState, k: int, scales: NoiseScale | None = None) -> float:
    return float(optimal_aux(ch, state.W, state.phi, scales).r[k])


def opt_r_ae(ch: ChannelSet, state: BeamformingState, k: int, scales: NoiseScale | None = None) -> float:
    return float(optimal_aux(ch, state.W, state.phi, scales).r_a[k])


def opt_r_pe(ch: ChannelSet, state: BeamformingState, k: int, scales: NoiseScale | None = None) -> float:
    return float(optimal_aux(ch, state.W, state.phi, scales).r_p[k])


def _check_r(r: float) -> None:
    if not r > 0:
        raise ValueError(f"auxiliary variable must be positive, got {r}")


def phi_user(ch: ChannelSet, state: BeamformingState, r_k: float, k: int,
             scales: NoiseScale | None = None) -> float:
    _check_r(r_k)
    s = _scales(ch, scales)
    g = composite_user_channels(ch, state.phi)[k]
    gains = np.abs(g @ state.W) ** 2
    jam = s.m_k * ch.P_e * abs(ch.h_ae[k]) ** 2
    total = s.m_k * gains.sum() + jam + 1.0
    others = s.m_k * (gains.sum() - gains[k]) + jam + 1.0
    return float(np.log(total) - r_k * others + np.log(r_k) + 1.0)


def _phi_eve(row: NDArray, W: NDArray, r: float, k: int, m: float) -> float:
    _check_r(r)
    gains = np.abs(row @ W) ** 2
    others = np.delete(gains, k).sum()
    return float(r * (m * gains.sum() + 1.0) - np.log(r) - 1.0 - np.log(m * others + 1.0))


def phi_ae(ch: ChannelSet, state: BeamformingState, r_ak: float, k: int,
           scales: NoiseScale | None = None) -> float:
    return _phi_eve(ch.h_bt.conj(), state.W, r_ak, k, _scales(ch, scales).m_a)


def phi_pe(ch: ChannelSet, state: BeamformingState, r_pk: float, k: int,
           scales: NoiseScale | None = None) -> float:
    row = composite_pe_channel(ch, state.phi)
    return _phi_eve(row, state.W, r_pk, k, _scales(ch, scales).m_p)


def log_ratio_objective(r: float, x: float) -> float:
    """``-r x + ln r + 1``; maximized at ``r = 1/x`` where it equals ``-ln x``."""
    return -r * x + np.log(r) + 1.0


# ---------------------------------------------------------------- minorizers

def taylor_eta(row: NDArray, w: NDArray, anchor: NDArray) -> float:
    """Tangent-plane lower bound of ``|row @ w|^2`` taken at ``anchor``."""
    z0 = row @ anchor
    z = row @ w
    return float(2.0 * np.real(np.conj(z0) * z) - abs(z0) ** 2)


def taylor_eta_user(ch: ChannelSet, phi: NDArray, w_i: NDArray, anchor: NDArray, k: int) -> float:
    return taylor_eta(composite_user_channels(ch, phi)[k], w_i, anchor)


def taylor_eta_ae(ch: ChannelSet, w_i: NDArray, anchor: NDArray) -> float:
    return taylor_eta(ch.h_bt.conj(), w_i, anchor)


def taylor_eta_pe(ch: ChannelSet, phi: NDArray, w_i: NDArray, anchor: NDArray) -> float:
    return taylor_eta(composite_pe_channel(ch, phi), w_i, anchor)


def echo_row(ch: ChannelSet, u: NDArray) -> NDArray[np.complex128]:
    """``u^H H_bt`` as a row vector."""
    return (u.conj() @ ch.h_bt) * ch.h_bt.conj()


def taylor_eta_echo(ch: ChannelSet, u: NDArray, w_i: NDArray, anchor: NDArray) -> float:
    return taylor_eta(echo_row(ch, u), w_i, anchor)


@dataclass(frozen=True)
class RisDecomposition:
    """Affine-in-phi pieces: ``g_k w_i = phi^T s[k, i] + t[k, i]``, ``h_pe w_i = phi^T a[i] + b[i]``."""

    s: NDArray[np.complex128]  # (K, K+N, M)
    t: NDArray[np.complex128]  # (K, K+N)
    a: NDArray[np.complex128]  # (K+N, M)
    b: NDArray[np.complex128]  # (K+N,)


def ris_decompose(ch: ChannelSet, W: NDArray) -> RisDecomposition:
    HW = ch.H_br @ W  # (M, L)
    s = ch.g_r.conj()[:, None, :] * HW.T[None, :, :]
    t = ch.g_b.conj() @ W
    a = ch.h_rp.conj()[None, :] * HW.T
    b = ch.h_bp.conj() @ W
    return RisDecomposition(s=s, t=t, a=a, b=b)


def _eta_affine(s: NDArray, t: complex, phi: NDArray, anchor: NDArray) -> float:
    p0 = anchor @ s
    q = phi @ s
    return float(2.0 * np.real((p0 + t) * np.conj(q)) - abs(p0) ** 2 + abs(t) ** 2)


def taylor_eta_phi_user(decomp: RisDecomposition, phi: NDArray, phi_anchor: NDArray, k: int, i: int) -> float:
    """Lower bound of ``|phi^T s_ki + t_ki|^2`` linearized at ``phi_anchor``."""
    return _eta_affine(decomp.s[k, i], decomp.t[k, i], phi, phi_anchor)


def taylor_eta_phi_pe(decomp: RisDecomposition, phi: NDArray, phi_anchor: NDArray, i: int) -> float:
    return _eta_affine(decomp.a[i], decomp.b[i], phi, phi_anchor)


def norm_sq_minorizer(phi: NDArray, phi_anchor: NDArray) -> float:
    return float(2.0 * np.real(np.vdot(phi, phi_anchor)) - np.vdot(phi_anchor, phi_anchor).real)


# ------------------------------------------------------ subproblem objectives

def _safe_log(x: NDArray) -> NDArray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0, np.log(np.where(x > 0, x, 1.0)), -np.inf)


class WSurrogate:
    """Concave surrogate of the secrecy sum in the transmit beamformer.

    The epigraph variables of the max-of-eavesdroppers terms are eliminated,
    so the objective is ``sum_k [phi_k - max(phi_ak, phi_pk)] / ln 2`` with
    every ``phi`` already linearized at ``anchor``.
    """

    def __init__(self, ch: ChannelSet, phi: NDArray, aux: AuxiliaryVars, anchor: NDArray,
                 scales: NoiseScale | None = None):
        s = _scales(ch, scales)
        self.scales = s
        self.aux = aux
        self.anchor = anchor
        K, L = ch.K, anchor.shape[1]
        self.K = K
        self.mask = _others_mask(K, L)
        self.G = composite_user_channels(ch, phi)  # (K, N)
        self.h_ae = ch.h_bt.conj()  # AE row
        self.h_pe = composite_pe_channel(ch, phi)
        self.jam = _jam(ch, s.m_k)
        self.Z0 = self.G @ anchor
        self.y0 = self.h_ae @ anchor
        self.v0 = self.h_pe @ anchor

    def _parts(self, W: NDArray):
        s, aux, mask = self.scales, self.aux, self.mask
        Z = self.G @ W
        y = self.h_ae @ W
        v = self.h_pe @ W
        eta_u = 2.0 * np.real(np.conj(self.Z0) * Z) - np.abs(self.Z0) ** 2
        lin_u = s.m_k * eta_u.sum(axis=1) + self.jam + 1.0
        quad_u = s.m_k * np.where(mask, np.abs(Z) ** 2, 0.0).sum(axis=1) + self.jam + 1.0
        f_u = _safe_log(lin_u) - aux.r * quad_u + np.log(aux.r) + 1.0

        eta_a = 2.0 * np.real(np.conj(self.y0) * y) - np.abs(self.y0) ** 2
        lin_a = s.m_a * np.where(mask, eta_a, 0.0).sum(axis=1) + 1.0
        f_a = aux.r_a * (s.m_a * np.sum(np.abs(y) ** 2) + 1.0) - np.log(aux.r_a) - 1.0 - _safe_log(lin_a)

        eta_p = 2.0 * np.real(np.conj(self.v0) * v) - np.abs(self.v0) ** 2
        lin_p = s.m_p * np.where(mask, eta_p, 0.0).sum(axis=1) + 1.0
        f_p = aux.r_p * (s.m_p * np.sum(np.abs(v) ** 2) + 1.0) - np.log(aux.r_p) - 1.0 - _safe_log(lin_p)
        return Z, y, v, lin_u, lin_a, lin_p, f_u, f_a, f_p

    def terms(self, W: NDArray):
        """Per-user (phi_hat_k, phi_hat_ak, phi_hat_pk) in nats."""
        *_, f_u, f_a, f_p = self._parts(W)
        return f_u, f_a, f_p

    def value(self, W: NDArray) -> float:
        *_, f_u, f_a, f_p = self._parts(W)
        return float(np.sum(f_u - np.maximum(f_a, f_p)) / LN2)

    def _branch_parts(self, W: NDArray):
        s, aux, mask = self.scales, self.aux, self.mask
        Z, y, v, lin_u, lin_a, lin_p, f_u, f_a, f_p = self._parts(W)
        G = self.G
        # user terms: d ln(lin) and -r * quad
        coef_lin = s.m_k / lin_u  # (K,)
        base = 2.0 * G.conj().T @ (coef_lin[:, None] * self.Z0)
        base -= 2.0 * G.conj().T @ ((aux.r * s.m_k)[:, None] * np.where(mask, Z, 0.0))
        g_ae, g_pe = [], []
        for k in range(self.K):
            for row, z, z0, r, m, lin, out in (
                (self.h_ae, y, self.y0, aux.r_a[k], s.m_a, lin_a[k], g_ae),
                (self.h_pe, v, self.v0, aux.r_p[k], s.m_p, lin_p[k], g_pe),
            ):
                g_e = 2.0 * r * m * np.outer(row.conj(), z)
                g_e -= 2.0 * (m / lin) * np.outer(row.conj(), np.where(mask[k], z0, 0.0))
                out.append(g_e)
        return base, g_ae, g_pe, f_a - f_p

    def gradient(self, W: NDArray) -> NDArray[np.complex128]:
        base, g_ae, g_pe, gap = self._branch_parts(W)
        # eavesdropper branch, ties go to the AE
        for k in range(self.K):
            base = base - (g_ae[k] if gap[k] >= 0 else g_pe[k])
        return base / LN2

    def ascent_direction(self, W: NDArray, tie_tol: float = 1e-3) -> NDArray[np.complex128]:
        """Steepest-ascent direction treating near-tied eavesdropper branches as both active."""
        base, g_ae, g_pe, gap = self._branch_parts(W)
        return min_norm_direction(base, g_ae, g_pe, gap, tie_tol) / LN2


class PhiSurrogate:
    """Penalized concave surrogate of the secrecy sum in the RIS vector.

    The AE leakage does not depend on ``phi`` and enters as the constant
    ``c_ae`` (bits) inside ``max(c_ae, phi_hat_pk / ln 2)``.
    """

    def __init__(self, ch: ChannelSet, W: NDArray, aux: AuxiliaryVars, anchor: NDArray,
                 rho: float, c_ae: NDArray, scales: NoiseScale | None = None,
                 decomp: RisDecomposition | None = None):
        s = _scales(ch, scales)
        self.scales = s
        self.aux = aux
        self.anchor = anchor
        self.rho = float(rho)
        self.c_ae = np.asarray(c_ae, dtype=float)
        self.d = ris_decompose(ch, W) if decomp is None else decomp
        K, L = self.d.t.shape
        self.K = K
        self.mask = _others_mask(K, L)
        self.jam = _jam(ch, s.m_k)
        self.p0 = self.d.s @ anchor  # (K, L)
        self.q0 = self.d.a @ anchor  # (L,)
        self.anchor_sq = float(np.vdot(anchor, anchor).real)

    def _parts(self, phi: NDArray):
        s, aux, d, mask = self.scales, self.aux, self.d, self.mask
        q = d.s @ phi
        Z = q + d.t
        eta_u = 2.0 * np.real((self.p0 + d.t) * np.conj(q)) - np.abs(self.p0) ** 2 + np.abs(d.t) ** 2
        lin_u = s.m_k * eta_u.sum(axis=1) + self.jam + 1.0
        quad_u = s.m_k * np.where(mask, np.abs(Z) ** 2, 0.0).sum(axis=1) + self.jam + 1.0
        f_u = _safe_log(lin_u) - aux.r * quad_u + np.log(aux.r) + 1.0

        qa = d.a @ phi
        V = qa + d.b
        eta_p = 2.0 * np.real((self.q0 + d.b) * np.conj(qa)) - np.abs(self.q0) ** 2 + np.abs(d.b) ** 2
        lin_p = s.m_p * np.where(mask, eta_p, 0.0).sum(axis=1) + 1.0
        f_p = aux.r_p * (s.m_p * np.sum(np.abs(V) ** 2) + 1.0) - np.log(aux.r_p) - 1.0 - _safe_log(lin_p)
        return Z, V, lin_u, lin_p, f_u, f_p

    def penalty(self, phi: NDArray) -> float:
        return self.rho * (2.0 * np.real(np.vdot(phi, self.anchor)) - self.anchor_sq)

    def secrecy_value(self, phi: NDArray) -> float:
        """Surrogate secrecy sum without the penalty term (bits)."""
        *_, f_u, f_p = self._parts(phi)
        return float(np.sum(f_u / LN2 - np.maximum(self.c_ae, f_p / LN2)))

    def value(self, phi: NDArray) -> float:
        return self.secrecy_value(phi) + float(self.penalty(phi))

    def _branch_parts(self, phi: NDArray):
        s, aux, d, mask = self.scales, self.aux, self.d, self.mask
        Z, V, lin_u, lin_p, f_u, f_p = self._parts(phi)
        base = np.zeros(phi.size, dtype=complex)
        g_ae, g_pe = [], []
        A_conj = d.a.conj()
        for k in range(self.K):
            Sk_conj = d.s[k].conj()  # (L, M)
            g = 2.0 * (s.m_k / lin_u[k]) * ((self.p0[k] + d.t[k]) @ Sk_conj)
            g -= 2.0 * aux.r[k] * s.m_k * (np.where(mask[k], Z[k], 0.0) @ Sk_conj)
            base += g
            g_p = 2.0 * aux.r_p[k] * s.m_p * (V @ A_conj)
            g_p -= 2.0 * (s.m_p / lin_p[k]) * (np.where(mask[k], self.q0 + d.b, 0.0) @ A_conj)
            g_ae.append(np.zeros_like(base))
            g_pe.append(g_p)
        # compare branches in nats, matching the W side
        gap = self.c_ae * LN2 - f_p
        return base, g_ae, g_pe, gap

    def gradient(self, phi: NDArray) -> NDArray[np.complex128]:
        base, _, g_pe, gap = self._branch_parts(phi)
        # PE branch is active only when strictly above the AE constant
        for k in range(self.K):
            if gap[k] < 0:
                base = base - g_pe[k]
        return base / LN2 + 2.0 * self.rho * self.anchor

    def ascent_direction(self, phi: NDArray, tie_tol: float = 1e-3) -> NDArray[np.complex128]:
        base, g_ae, g_pe, gap = self._branch_parts(phi)
        return min_norm_direction(base, g_ae, g_pe, gap, tie_tol) / LN2 + 2.0 * self.rho * self.anchor


def min_norm_direction(base: NDArray, g_a: list[NDArray], g_b: list[NDArray], gap: NDArray,
                       tie_tol: float, sweeps: int = 50) -> NDArray:
    """Shortest element of ``base - sum_k conv{g_a[k], g_b[k]}`` over near-tied ``k``.

    Terms with ``gap[k] = a_k - b_k`` beyond ``tie_tol`` use their active
    branch only (ties inside the band mix both).  With no ties this is the
    ordinary gradient of ``base - sum_k max(a_k, b_k)``.
    """
    c = base.copy()
    tied = []
    for k in range(len(g_a)):
        if abs(gap[k]) <= tie_tol:
            c = c - g_b[k]
            tied.append(g_a[k] - g_b[k])
        else:
            c = c - (g_a[k] if gap[k] > 0 else g_b[k])
    if not tied:
        return c
    lam = np.zeros(len(tied))
    nrm = [np.vdot(D, D).real for D in tied]
    d = c.copy()
    for _ in range(sweeps):
        moved = 0.0
        for j, D in enumerate(tied):
            if nrm[j] == 0:
                continue
            rest = d + lam[j] * D
            new = float(np.clip(np.real(np.vdot(D, rest)) / nrm[j], 0.0, 1.0))
            moved = max(moved, abs(new - lam[j]))
            d = rest - new * D
            lam[j] = new
        if moved < 1e-12:
            break
    return d
