"""Scenario geometry and channel realizations.

Randomness comes from numpy's PCG64 bit generator.  Each link draws from its
own child stream of ``SeedSequence(config.seed)``, so changing ``M`` leaves
the direct-link draws untouched and two calls with one seed are bit-identical.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .config import SystemConfig

# child-stream order inside SeedSequence(seed).spawn(); append only
_STREAMS = ("placement", "H_br", "g_r", "h_rp", "g_b", "h_bp", "h_ae")


def steering_bs(theta: float, N: int, spacing_ratio: float = 0.5) -> NDArray[np.complex128]:
    """Uniform linear array response ``exp(j 2 pi n d/lambda sin theta)``."""
    if N < 0:
        raise ValueError("N must be non-negative")
    n = np.arange(N)
    return np.exp(1j * 2 * np.pi * n * spacing_ratio * np.sin(theta))


def steering_ris(theta: float, M: int, spacing_ratio: float = 0.5) -> NDArray[np.complex128]:
    return steering_bs(theta, M, spacing_ratio)


def path_loss(d: float, epsilon: float, C0: float = 1e-3, d0: float = 1.0) -> float:
    if not d > 0:
        raise ValueError(f"distance must be positive, got {d}")
    return C0 * (d0 / d) ** epsilon


def cscg(rng: np.random.Generator, shape) -> NDArray[np.complex128]:
    """Zero-mean, unit-variance circularly symmetric complex Gaussian draws."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def rician_channel(los: NDArray, kappa: float, rng: np.random.Generator) -> NDArray[np.complex128]:
    if kappa < 0:
        raise ValueError(f"kappa must be non-negative, got {kappa}")
    los = np.asarray(los, dtype=complex)
    nlos = cscg(rng, los.shape)
    return np.sqrt(kappa / (kappa + 1.0)) * los + np.sqrt(1.0 / (kappa + 1.0)) * nlos


def arrival_angle(src, dst) -> float:
    """Angle of ``dst`` seen from an array at ``src`` with broadside along +y."""
    dx = dst[0] - src[0]
    dy = dst[1] - src[1]
    return float(np.arctan2(dx, dy))


def distance(a, b) -> float:
    return float(np.hypot(b[0] - a[0], b[1] - a[1]))


@dataclass(frozen=True)
class ChannelSet:
    """One realization of every link.

    Shapes: ``H_br`` (M, N); ``g_b`` (K, N); ``g_r`` (K, M); ``h_bp`` (N,);
    ``h_rp`` (M,); ``h_bt`` (N,); ``h_ae`` (K,).  Row ``k`` of ``g_b`` is the
    column vector g_{b,k} of the model, used conjugated.
    """

    H_br: NDArray[np.complex128]
    g_b: NDArray[np.complex128]
    g_r: NDArray[np.complex128]
    h_bp: NDArray[np.complex128]
    h_rp: NDArray[np.complex128]
    h_bt: NDArray[np.complex128]
    h_ae: NDArray[np.complex128]
    user_positions: NDArray[np.float64]
    P: float
    P_e: float
    gamma_echo: float
    sigma_k2: float
    sigma_ae2: float
    sigma_pe2: float
    sigma_s2: float
    zeta2: float

    @property
    def K(self) -> int:
        return self.g_b.shape[0]

    @property
    def N(self) -> int:
        return self.g_b.shape[1]

    @property
    def M(self) -> int:
        return self.H_br.shape[0]

    @property
    def H_bt(self) -> NDArray[np.complex128]:
        return np.outer(self.h_bt, self.h_bt.conj())

    def without_ris(self) -> ChannelSet:
        from dataclasses import replace

        N, K = self.N, self.K
        return replace(
            self,
            H_br=np.zeros((0, N), dtype=complex),
            g_r=np.zeros((K, 0), dtype=complex),
            h_rp=np.zeros(0, dtype=complex),
        )


def place_users(config: SystemConfig, rng: np.random.Generator) -> NDArray[np.float64]:
    angles = rng.uniform(0.0, 2 * np.pi, size=config.K)
    cx, cy = config.user_circle_center
    r = config.user_circle_radius
    return np.column_stack([cx + r * np.cos(angles), cy + r * np.sin(angles)])


def generate_scenario(config: SystemConfig) -> ChannelSet:
    """Draw a full channel realization for ``config``."""
    K, N, M = config.K, config.N, config.M
    sp = config.element_spacing_ratio
    ex = config.exponents
    streams = dict(zip(_STREAMS, np.random.SeedSequence(config.seed).spawn(len(_STREAMS))))
    rngs = {name: np.random.Generator(np.random.PCG64(ss)) for name, ss in streams.items()}

    if config.resample_users:
        users = place_users(config, rngs["placement"])
    else:
        users = place_users(config, np.random.Generator(np.random.PCG64(config.placement_seed)))

    bs, ris, tgt, pe = config.bs_pos, config.ris_pos, config.target_pos, config.pe_pos

    def pl(a, b, eps):
        return path_loss(distance(a, b), eps, config.C0, config.d0)

    # BS -> target, deterministic LOS
    h_bt = np.sqrt(pl(bs, tgt, ex.bs_target)) * steering_bs(arrival_angle(bs, tgt), N, sp)

    if M > 0:
        los_br = np.outer(
            steering_ris(arrival_angle(ris, bs), M, sp),
            steering_bs(arrival_angle(bs, ris), N, sp).conj(),
        )
        H_br = np.sqrt(pl(bs, ris, ex.bs_ris)) * rician_channel(los_br, config.kappa, rngs["H_br"])
        g_r = np.empty((K, M), dtype=complex)
        for k in range(K):
            los = steering_ris(arrival_angle(ris, users[k]), M, sp)
            g_r[k] = np.sqrt(pl(ris, users[k], ex.ris_user)) * rician_channel(los, config.kappa, rngs["g_r"])
        los_rp = steering_ris(arrival_angle(ris, pe), M, sp)
        h_rp = np.sqrt(pl(ris, pe, ex.ris_user)) * rician_channel(los_rp, config.kappa, rngs["h_rp"])
    else:
        H_br = np.zeros((0, N), dtype=complex)
        g_r = np.zeros((K, 0), dtype=complex)
        h_rp = np.zeros(0, dtype=complex)

    g_b = np.empty((K, N), dtype=complex)
    h_ae = np.empty(K, dtype=complex)
    for k in range(K):
        g_b[k] = np.sqrt(pl(bs, users[k], ex.bs_user)) * cscg(rngs["g_b"], N)
        h_ae[k] = np.sqrt(pl(tgt, users[k], ex.ae_user)) * cscg(rngs["h_ae"], ())
    h_bp = np.sqrt(pl(bs, pe, ex.bs_user)) * cscg(rngs["h_bp"], N)

    return ChannelSet(
        H_br=H_br, g_b=g_b, g_r=g_r, h_bp=h_bp, h_rp=h_rp, h_bt=h_bt, h_ae=h_ae,
        user_positions=users,
        P=config.P, P_e=config.P_e, gamma_echo=config.gamma_echo,
        sigma_k2=config.sigma_k2, sigma_ae2=config.sigma_ae2,
        sigma_pe2=config.sigma_pe2, sigma_s2=config.sigma_s2, zeta2=config.zeta2,
    )
