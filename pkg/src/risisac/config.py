"""Scenario parameters and unit conversions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Any


def dbm_to_watts(x: float) -> float:
    return 10.0 ** ((x - 30.0) / 10.0)


def db_to_linear(x: float) -> float:
    return 10.0 ** (x / 10.0)


def watts_to_dbm(p: float) -> float:
    return 10.0 * math.log10(p) + 30.0


@dataclass(frozen=True)
class PathLossExponents:
    bs_target: float = 2.0
    bs_ris: float = 2.2
    ris_user: float = 2.4  # also RIS -> PE
    bs_user: float = 3.7  # also BS -> PE
    ae_user: float = 2.6


@dataclass(frozen=True)
class SystemConfig:
    """Every scalar needed to build one scenario.

    Powers and noise variances are linear watts, ``gamma_echo`` and ``kappa``
    are linear ratios, positions are 2-D coordinates in meters.  ``M = 0``
    removes the RIS entirely.
    """

    K: int = 3
    N: int = 6
    M: int = 80
    P: float = dbm_to_watts(45.0)
    P_e: float = dbm_to_watts(7.0)
    gamma_echo: float = dbm_to_watts(15.0)
    sigma_k2: float = dbm_to_watts(-60.0)
    sigma_ae2: float = dbm_to_watts(-60.0)
    sigma_pe2: float = dbm_to_watts(-60.0)
    sigma_s2: float = dbm_to_watts(-60.0)
    zeta2: float = 1.0
    kappa: float = db_to_linear(3.0)
    rho: float | None = None
    delta: float = 1e-3
    bs_pos: tuple[float, float] = (0.0, 0.0)
    ris_pos: tuple[float, float] = (30.0, 10.0)
    target_pos: tuple[float, float] = (10.0, 15.0)
    pe_pos: tuple[float, float] = (20.0, -5.0)
    user_circle_radius: float = 20.0
    # None: users circle the RIS; set to pin the user circle when the RIS moves
    user_center: tuple[float, float] | None = None
    C0: float = 1e-3
    d0: float = 1.0
    exponents: PathLossExponents = field(default_factory=PathLossExponents)
    element_spacing_ratio: float = 0.5
    seed: int = 0
    resample_users: bool = True
    placement_seed: int = 0

    def __post_init__(self) -> None:
        for name in ("K", "N"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if int(self.M) < 0:
            raise ValueError(f"M must be >= 0, got {self.M}")
        for name in ("P", "P_e", "sigma_k2", "sigma_ae2", "sigma_pe2", "sigma_s2",
                     "zeta2", "C0", "d0", "user_circle_radius", "delta"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.gamma_echo < 0:
            raise ValueError(f"gamma_echo must be >= 0, got {self.gamma_echo}")
        if self.kappa < 0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")
        if self.rho is not None and self.rho < 0:
            raise ValueError(f"rho must be >= 0, got {self.rho}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")

    @property
    def user_circle_center(self) -> tuple[float, float]:
        return self.ris_pos if self.user_center is None else self.user_center

    def replace(self, **changes: Any) -> SystemConfig:
        from dataclasses import replace

        return replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, PathLossExponents):
                v = {g.name: getattr(v, g.name) for g in fields(v)}
            elif isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        return out
