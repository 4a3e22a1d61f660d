"""Block solvers for the alternating optimization.

The receive beamformer has a closed form (dominant generalized eigenvector).
The transmit-beamformer and RIS blocks maximize concave surrogates by
projected gradient ascent with Armijo backtracking; the feasible set of the
transmit block is the power ball intersected with the linearized sensing
halfspace, projected onto by Dykstra's alternating scheme.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from .channel import ChannelSet
from .metrics import BeamformingState, sinr_ae_all
from .surrogate import (
    AuxiliaryVars,
    NoiseScale,
    PhiSurrogate,
    WSurrogate,
    echo_row,
)


class InfeasibleError(RuntimeError):
    """The constraint set of a subproblem is empty (or was not reached)."""


@dataclass
class SolverParams:
    max_inner_steps: int = 40
    step_init: float = 1.0
    backtrack: float = 0.5
    armijo: float = 1e-4
    inner_tol: float = 1e-9
    max_backtracks: int = 40
    power_iters: int = 10_000
    power_tol: float = 1e-10
    tie_tol: float = 1e-3  # nats; eavesdropper branches this close are both active

    def __post_init__(self) -> None:
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack factor must lie in (0, 1)")
        for name in ("max_inner_steps", "step_init", "armijo", "inner_tol",
                     "max_backtracks", "power_iters", "power_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class SubproblemReport:
    objective: list[float] = field(default_factory=list)
    residuals: dict[str, float] = field(default_factory=dict)
    steps: int = 0
    reason: str = "max_steps"


# ---------------------------------------------------------- receive beamformer

def rank_one_inverse(c: float, h: NDArray) -> NDArray[np.complex128]:
    """Inverse of ``I + c h h^H`` by the Sherman-Morrison identity."""
    n = h.size
    return np.eye(n, dtype=complex) - (c / (1.0 + c * np.vdot(h, h).real)) * np.outer(h, h.conj())


def dominant_eigvec(C: NDArray, max_iter: int = 10_000, tol: float = 1e-10) -> NDArray[np.complex128]:
    """Unit eigenvector of the largest eigenvalue of ``C`` by power iteration.

    ``C`` is assumed to have real non-negative spectrum (as ``B^-1 A`` does
    for Hermitian PSD ``A`` and Hermitian PD ``B``).
    """
    cols = np.linalg.norm(C, axis=0)
    if not np.any(cols > 0):
        v = np.zeros(C.shape[0], dtype=complex)
        v[0] = 1.0
        return v
    v = C[:, int(np.argmax(cols))].astype(complex)
    v /= np.linalg.norm(v)
    for _ in range(max_iter):
        x = C @ v
        nx = np.linalg.norm(x)
        if nx == 0:
            break
        x /= nx
        # align phase before comparing
        x *= np.exp(-1j * np.angle(np.vdot(v, x)))
        done = np.linalg.norm(x - v) <= tol
        v = x
        if done:
            break
    return v


def receive_beamformer_matrices(ch: ChannelSet, W: NDArray, scales: NoiseScale | None = None):
    s = NoiseScale.from_channels(ch) if scales is None else scales
    H = ch.H_bt
    A = s.m_s * ch.zeta2 * H @ (W @ W.conj().T) @ H.conj().T
    B = np.eye(ch.N) + s.m_s * ch.P_e * np.outer(ch.h_bt, ch.h_bt.conj())
    return A, B


def rayleigh_quotient(A: NDArray, B: NDArray, u: NDArray) -> float:
    return float(np.vdot(u, A @ u).real / np.vdot(u, B @ u).real)


def solve_receive_beamformer(ch: ChannelSet, W: NDArray, scales: NoiseScale | None = None,
                             params: SolverParams | None = None) -> tuple[NDArray[np.complex128], bool]:
    """Maximize the echo SCNR over ``u``.

    Returns ``(u, degenerate)``; ``degenerate`` is True when ``W`` sends no
    energy toward the target, in which case ``u = h_bt / ||h_bt||``.
    """
    p = SolverParams() if params is None else params
    s = NoiseScale.from_channels(ch) if scales is None else scales
    nh = np.linalg.norm(ch.h_bt)
    if nh == 0:
        raise ValueError("target channel h_bt is zero")
    A, _ = receive_beamformer_matrices(ch, W, s)
    if not np.any(np.abs(A) > 0):
        return ch.h_bt / nh, True
    B_inv = rank_one_inverse(s.m_s * ch.P_e, ch.h_bt)
    u = dominant_eigvec(B_inv @ A, p.power_iters, p.power_tol)
    return u / np.linalg.norm(u), False


# ---------------------------------------------------------------- projections

def _fro2(X: NDArray) -> float:
    return float(np.vdot(X, X).real)


def project_power_ball(W: NDArray, P: float) -> NDArray:
    n2 = _fro2(W)
    if n2 <= P:
        return W.copy()
    return W * np.sqrt(P / n2)


def project_unit_disks(phi: NDArray) -> NDArray:
    return phi / np.maximum(1.0, np.abs(phi))


def project_unit_circle(phi: NDArray) -> NDArray:
    """Hard projection to unit modulus; zeros map to 1."""
    mag = np.abs(phi)
    out = np.ones_like(phi, dtype=complex)
    nz = mag > 0
    out[nz] = phi[nz] / mag[nz]
    return out


@dataclass(frozen=True)
class Halfspace:
    """``{X : Re<C, X> >= beta}`` with ``<C, X> = sum(conj(C) * X)``."""

    C: NDArray[np.complex128]
    beta: float

    def margin(self, X: NDArray) -> float:
        return float(np.real(np.vdot(self.C, X)) - self.beta)

    def project(self, X: NDArray) -> NDArray:
        gap = self.margin(X)
        if gap >= 0:
            return X.copy()
        nc = np.vdot(self.C, self.C).real
        if nc == 0:
            raise InfeasibleError("sensing constraint has zero gradient and is violated")
        return X - (gap / nc) * self.C


def sensing_rhs(ch: ChannelSet, u: NDArray, gamma_echo: float) -> float:
    """Right-hand side of the sensing constraint, in received-power units."""
    return gamma_echo * (ch.sigma_s2 * np.vdot(u, u).real + ch.P_e * abs(np.vdot(u, ch.h_bt)) ** 2) / ch.zeta2


def sensing_halfspace(ch: ChannelSet, anchor_W: NDArray, u: NDArray, gamma_echo: float) -> Halfspace:
    """Linearize ``sum_i |u^H H_bt w_i|^2 >= rhs`` at ``anchor_W``."""
    h_s = echo_row(ch, u)
    q0 = h_s @ anchor_W
    C = np.outer(h_s.conj(), q0)
    beta = 0.5 * (sensing_rhs(ch, u, gamma_echo) + np.sum(np.abs(q0) ** 2))
    return Halfspace(C=C, beta=float(beta))


def project_sensing_halfspace(W: NDArray, anchor_W: NDArray, u: NDArray, ch: ChannelSet,
                              gamma_echo: float, scales: NoiseScale | None = None) -> NDArray:
    return sensing_halfspace(ch, anchor_W, u, gamma_echo).project(W)


def dykstra(x: NDArray, projections: list[Callable[[NDArray], NDArray]],
            max_iter: int = 500, tol: float = 1e-12) -> tuple[NDArray, bool]:
    """Dykstra's alternating projections onto an intersection of convex sets."""
    incs = [np.zeros_like(x) for _ in projections]
    y = x.copy()
    tol2 = (tol * max(np.sqrt(_fro2(x)), 1.0)) ** 2
    for _ in range(max_iter):
        prev = y
        for j, proj in enumerate(projections):
            z = proj(y + incs[j])
            incs[j] = y + incs[j] - z
            y = z
        if _fro2(y - prev) <= tol2:
            return y, True
    return y, False


def project_ball_halfspace(W: NDArray, P: float, hs: Halfspace) -> NDArray:
    """Euclidean projection onto ``{||W||_F^2 <= P} & hs``.

    Exact: when neither single-set projection lands in the other set, both
    constraints are active and the answer lies on the great circle of the
    sphere through the halfspace boundary, closest to ``W``.  :func:`dykstra`
    reaches the same point iteratively and serves as its reference.
    """
    nc2 = np.vdot(hs.C, hs.C).real
    r = np.sqrt(P)
    if nc2 == 0:
        if hs.beta > 0:
            raise InfeasibleError("sensing constraint has zero gradient and is violated")
        return project_power_ball(W, P)
    nc = np.sqrt(nc2)
    alpha = hs.beta / nc  # signed offset of the boundary along C
    if alpha > r * (1 + 1e-12):
        raise InfeasibleError("power ball and sensing halfspace do not intersect")
    y = hs.project(W)
    if _fro2(y) <= P:
        return y
    y = project_power_ball(W, P)
    if hs.margin(y) >= 0:
        return y
    c_hat = hs.C / nc
    perp = W - np.real(np.vdot(c_hat, W)) * c_hat
    pn = np.sqrt(_fro2(perp))
    if pn == 0:
        # W is collinear with C: any orthogonal direction is optimal
        perp = np.zeros_like(W)
        perp.flat[0] = 1.0
        perp = perp - np.real(np.vdot(c_hat, perp)) * c_hat
        if _fro2(perp) == 0:
            perp = np.zeros_like(W)
            perp.flat[0] = 1j
            perp = perp - np.real(np.vdot(c_hat, perp)) * c_hat
        pn = np.sqrt(_fro2(perp))
    alpha = min(alpha, r)
    return alpha * c_hat + np.sqrt(max(P - alpha * alpha, 0.0)) * perp / pn


# ------------------------------------------------------------ projected ascent

def projected_ascent(f: Callable[[NDArray], float], grad: Callable[[NDArray], NDArray],
                     project: Callable[[NDArray], NDArray], x0: NDArray, scale: float,
                     params: SolverParams) -> tuple[NDArray, SubproblemReport]:
    """Monotone projected gradient ascent with Armijo backtracking.

    ``scale`` is the typical magnitude of ``x`` and sets the first trial step.
    """
    report = SubproblemReport()
    x = x0
    fx = f(x)
    report.objective.append(fx)
    t = None
    for _ in range(params.max_inner_steps):
        g = grad(x)
        gn = np.linalg.norm(g)
        if gn == 0 or not np.isfinite(gn):
            report.reason = "converged"
            break
        if t is None:
            t = params.step_init * scale / gn
        accepted = False
        for _ in range(params.max_backtracks):
            x_new = project(x + t * g)
            f_new = f(x_new)
            dec = np.real(np.vdot(g, x_new - x))
            if np.isfinite(f_new) and f_new >= fx + params.armijo * dec and f_new >= fx:
                accepted = True
                break
            t *= params.backtrack
        if not accepted:
            report.reason = "converged"
            break
        gain = f_new - fx
        step = np.linalg.norm(x_new - x)
        x, fx = x_new, f_new
        report.objective.append(fx)
        report.steps += 1
        if gain <= params.inner_tol * max(abs(fx), 1.0) or step <= 1e-14 * scale:
            report.reason = "converged"
            break
        t /= params.backtrack  # let the step grow again
    return x, report


def solve_w_subproblem(ch: ChannelSet, state: BeamformingState, aux: AuxiliaryVars, anchor_W: NDArray,
                       params: SolverParams | None = None, scales: NoiseScale | None = None,
                       gamma_echo: float | None = None) -> tuple[NDArray, SubproblemReport]:
    """One SCA step on the transmit beamformer.

    Raises :class:`InfeasibleError` when the power ball and the linearized
    sensing halfspace do not intersect.
    """
    p = SolverParams() if params is None else params
    gamma = ch.gamma_echo if gamma_echo is None else gamma_echo
    sur = WSurrogate(ch, state.phi, aux, anchor_W, scales)
    hs = sensing_halfspace(ch, anchor_W, state.u, gamma)

    def project(X):
        return project_ball_halfspace(X, ch.P, hs)

    start = anchor_W
    if np.linalg.norm(anchor_W) ** 2 > ch.P * (1 + 1e-12) or hs.margin(anchor_W) < 0:
        start = project(anchor_W)
    W, report = projected_ascent(sur.value, lambda X: sur.ascent_direction(X, p.tie_tol), project, start,
                                 np.sqrt(ch.P), p)
    report.residuals = {
        "power": float(ch.P - np.linalg.norm(W) ** 2),
        "sensing_linearized": hs.margin(W),
    }
    return W, report


def solve_phi_subproblem(ch: ChannelSet, state: BeamformingState, aux: AuxiliaryVars, anchor_phi: NDArray,
                         rho: float, params: SolverParams | None = None,
                         scales: NoiseScale | None = None) -> tuple[NDArray, SubproblemReport]:
    """One SCA step on the RIS vector under the relaxed ``|phi_m| <= 1``."""
    p = SolverParams() if params is None else params
    if anchor_phi.size == 0:
        report = SubproblemReport(objective=[0.0], reason="converged")
        return anchor_phi.copy(), report
    c_ae = np.log2(1.0 + sinr_ae_all(ch, state))
    sur = PhiSurrogate(ch, state.W, aux, anchor_phi, rho, c_ae, scales)
    start = project_unit_disks(anchor_phi)
    phi, report = projected_ascent(sur.value, lambda x: sur.ascent_direction(x, p.tie_tol), project_unit_disks, start,
                                   np.sqrt(anchor_phi.size), p)
    report.residuals = {"modulus": float(np.max(np.abs(phi)) - 1.0)}
    return phi, report


def surrogate_gradient_w(ch: ChannelSet, state: BeamformingState, aux: AuxiliaryVars, anchor_W: NDArray,
                         W: NDArray | None = None, scales: NoiseScale | None = None) -> NDArray:
    sur = WSurrogate(ch, state.phi, aux, anchor_W, scales)
    return sur.gradient(state.W if W is None else W)


def surrogate_gradient_phi(ch: ChannelSet, state: BeamformingState, aux: AuxiliaryVars, anchor_phi: NDArray,
                           rho: float, phi: NDArray | None = None, scales: NoiseScale | None = None) -> NDArray:
    c_ae = np.log2(1.0 + sinr_ae_all(ch, state))
    sur = PhiSurrogate(ch, state.W, aux, anchor_phi, rho, c_ae, scales)
    return sur.gradient(state.phi if phi is None else phi)
