"""Alternating optimization over receive beamformer, transmit beamformer and RIS."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .channel import ChannelSet
from .metrics import BeamformingState, composite_user_channels, secrecy_rate, unclamped_secrecy
from .solvers import (
    InfeasibleError,
    SolverParams,
    project_unit_circle,
    solve_phi_subproblem,
    solve_receive_beamformer,
    solve_w_subproblem,
)
from .surrogate import optimal_aux

SCHEMES = ("jbrd", "ris_random_phase", "u_random", "no_ris")
INIT_POLICIES = ("mrt_aligned", "random")


@dataclass
class JbrdConfig:
    delta: float = 1e-3
    max_outer: int = 50
    max_inner_w: int = 5
    max_inner_phi: int = 5
    rho: float | None = None
    rho_scale: float = 0.1
    init: str = "mrt_aligned"
    init_power_fraction: float = 0.9
    seed: int = 0
    solver: SolverParams = field(default_factory=SolverParams)

    def __post_init__(self) -> None:
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        for name in ("max_outer", "max_inner_w", "max_inner_phi"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.init not in INIT_POLICIES:
            raise ValueError(f"unknown init policy {self.init!r}")
        if self.rho is not None and self.rho < 0:
            raise ValueError("rho must be non-negative")


@dataclass
class IterationTrace:
    sr: list[float] = field(default_factory=list)
    unclamped: list[float] = field(default_factory=list)
    surrogate: list[float] = field(default_factory=list)
    scnr_residual: list[float] = field(default_factory=list)
    power: list[float] = field(default_factory=list)
    modulus_deviation: list[float] = field(default_factory=list)
    inner_w: list[int] = field(default_factory=list)
    inner_phi: list[int] = field(default_factory=list)
    wall_time: list[float] = field(default_factory=list)
    reason: str = "max_outer"
    rho: float = 0.0
    init_sr: float = 0.0
    init_unclamped: float = 0.0
    init_feasible: bool = True
    sr_relaxed: float = 0.0
    final_sr: float = 0.0

    @property
    def outer_iterations(self) -> int:
        return len(self.sr)

    @property
    def infeasible(self) -> bool:
        return self.reason == "infeasible"


def variation_rate(obj_new: float, obj_old: float, eps_div: float = 1e-12) -> float:
    return abs(obj_new - obj_old) / max(abs(obj_old), eps_div)


def random_unit_modulus(M: int, rng: np.random.Generator) -> NDArray[np.complex128]:
    return np.exp(1j * rng.uniform(0.0, 2 * np.pi, size=M))


def random_unit_vector(N: int, rng: np.random.Generator) -> NDArray[np.complex128]:
    v = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    return v / np.linalg.norm(v)


def aligned_phases(ch: ChannelSet) -> NDArray[np.complex128]:
    """Co-phase every reflected path of user 0 with its direct MRT path."""
    if ch.M == 0:
        return np.zeros(0, dtype=complex)
    g_b = ch.g_b[0]
    v = g_b / np.linalg.norm(g_b)
    direct = np.vdot(g_b, v)
    cascade = ch.g_r[0].conj() * (ch.H_br @ v)
    return np.exp(1j * (np.angle(direct) - np.angle(cascade)))


def _radar_power(ch: ChannelSet, budget: float) -> float:
    # power along h_bt that meets the echo threshold when u is matched to h_bt;
    # a tenth of the budget always stays with the data beams, since zero data
    # columns are a stationary point the ascent cannot leave
    h2 = np.vdot(ch.h_bt, ch.h_bt).real
    need = ch.gamma_echo * (ch.sigma_s2 + ch.P_e * h2) / (ch.zeta2 * h2 * h2)
    return float(min(0.9 * budget, max(0.3 * budget, 2.0 * need)))


def init_state(ch: ChannelSet, config: JbrdConfig | None = None,
               rng: np.random.Generator | None = None, phi: NDArray | None = None) -> BeamformingState:
    """Starting point: matched filters toward users, radar beams at the target.

    Passing ``phi`` fixes the RIS vector the matched filters are built for.
    """
    cfg = JbrdConfig() if config is None else config
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    K, N, M = ch.K, ch.N, ch.M
    budget = cfg.init_power_fraction * ch.P
    hb = ch.h_bt / np.linalg.norm(ch.h_bt)
    p_radar = _radar_power(ch, budget)
    p_comm = budget - p_radar

    if cfg.init == "mrt_aligned":
        phi = aligned_phases(ch) if phi is None else np.asarray(phi, dtype=complex)
        Wc = composite_user_channels(ch, phi).conj().T  # columns g_k(Phi)^H
        Wr = hb[:, None] * np.exp(1j * rng.uniform(0.0, 2 * np.pi, size=N))[None, :]
    else:
        random_phi = random_unit_modulus(M, rng)
        phi = random_phi if phi is None else np.asarray(phi, dtype=complex)
        Wc = np.column_stack([random_unit_vector(N, rng) for _ in range(K)])
        Wr = np.column_stack([random_unit_vector(N, rng) for _ in range(N)])
    Wc = Wc / np.linalg.norm(Wc) * np.sqrt(p_comm) if p_comm > 0 else np.zeros_like(Wc)
    Wr = Wr / np.linalg.norm(Wr) * np.sqrt(p_radar)
    W = np.hstack([Wc, Wr]).astype(complex)
    return BeamformingState(W=W, phi=phi.astype(complex), u=hb.astype(complex))


def default_rho(ch: ChannelSet, state: BeamformingState, scale: float = 0.1) -> float:
    if ch.M == 0:
        return 0.0
    return scale * max(abs(unclamped_secrecy(ch, state)), 1.0) / ch.M


def run_jbrd(ch: ChannelSet, config: JbrdConfig | None = None, *, fix_phi: bool = False,
             fixed_u: NDArray | None = None, state0: BeamformingState | None = None
             ) -> tuple[BeamformingState, IterationTrace]:
    """Maximize the secrecy sum by alternating u, W (SCA) and phi (penalized SCA).

    ``fix_phi`` keeps the RIS at its initial value; ``fixed_u`` pins the
    receive beamformer.  Both exist for the benchmark schemes.
    """
    cfg = JbrdConfig() if config is None else config
    rng = np.random.default_rng(cfg.seed)
    state = init_state(ch, cfg, rng) if state0 is None else state0.copy()
    if fixed_u is not None:
        state.u = np.asarray(fixed_u, dtype=complex) / np.linalg.norm(fixed_u)
    trace = IterationTrace()
    rep0 = secrecy_rate(ch, state)
    trace.init_sr, trace.init_unclamped, trace.init_feasible = rep0.sr, rep0.unclamped, rep0.feasible
    rho = cfg.rho if cfg.rho is not None else default_rho(ch, state, cfg.rho_scale)
    trace.rho = rho
    optimize_phi = ch.M > 0 and not fix_phi
    params = cfg.solver

    obj_old = rep0.unclamped
    for _ in range(cfg.max_outer):
        t0 = time.perf_counter()
        if fixed_u is None:
            state.u, _ = solve_receive_beamformer(ch, state.W, params=params)

        n_w = 0
        sur_val = obj_old
        try:
            for n_w in range(1, cfg.max_inner_w + 1):
                aux = optimal_aux(ch, state.W, state.phi)
                W_new, rep = solve_w_subproblem(ch, state, aux, state.W, params)
                state.W = W_new
                sur_val = rep.objective[-1]
                if variation_rate(rep.objective[-1], rep.objective[0]) <= cfg.delta:
                    break
        except InfeasibleError:
            trace.reason = "infeasible"

        n_p = 0
        if optimize_phi and trace.reason != "infeasible":
            for n_p in range(1, cfg.max_inner_phi + 1):
                aux = optimal_aux(ch, state.W, state.phi)
                phi_new, rep = solve_phi_subproblem(ch, state, aux, state.phi, rho, params)
                state.phi = phi_new
                sur_val = rep.objective[-1]
                if variation_rate(rep.objective[-1], rep.objective[0]) <= cfg.delta:
                    break

        rep_true = secrecy_rate(ch, state)
        trace.sr.append(rep_true.sr)
        trace.unclamped.append(rep_true.unclamped)
        trace.surrogate.append(float(sur_val))
        trace.scnr_residual.append(rep_true.scnr_slack)
        trace.power.append(float(np.linalg.norm(state.W) ** 2))
        trace.modulus_deviation.append(rep_true.modulus_deviation)
        trace.inner_w.append(n_w)
        trace.inner_phi.append(n_p)
        trace.wall_time.append(time.perf_counter() - t0)
        if trace.reason == "infeasible":
            break
        converged = variation_rate(rep_true.unclamped, obj_old) <= cfg.delta
        obj_old = rep_true.unclamped
        if converged:
            trace.reason = "converged"
            break

    trace.sr_relaxed = secrecy_rate(ch, state).sr
    state.phi = project_unit_circle(state.phi)
    if fixed_u is None:
        state.u, _ = solve_receive_beamformer(ch, state.W, params=params)
    trace.final_sr = secrecy_rate(ch, state).sr
    return state, trace


def run_benchmark(ch: ChannelSet, config: JbrdConfig | None = None, scheme: str = "jbrd"
                  ) -> tuple[BeamformingState, IterationTrace]:
    """Run JBRD or one of its ablations on the same scenario."""
    cfg = JbrdConfig() if config is None else config
    if scheme == "jbrd":
        return run_jbrd(ch, cfg)
    if scheme == "no_ris":
        return run_jbrd(ch.without_ris(), cfg)
    # independent stream so the init draws match plain JBRD
    bench_rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(1)[0])
    if scheme == "ris_random_phase":
        phi = random_unit_modulus(ch.M, bench_rng)
        state0 = init_state(ch, cfg, np.random.default_rng(cfg.seed), phi=phi)
        return run_jbrd(ch, cfg, fix_phi=True, state0=state0)
    if scheme == "u_random":
        return run_jbrd(ch, cfg, fixed_u=random_unit_vector(ch.N, bench_rng))
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
