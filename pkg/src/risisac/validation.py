"""Input checks shared by the estimator and the public entry points."""
from __future__ import annotations

import numpy as np

from .channel import ChannelSet
from .metrics import BeamformingState


def check_channel_set(ch: ChannelSet) -> ChannelSet:
    if not isinstance(ch, ChannelSet):
        raise TypeError(f"expected a ChannelSet, got {type(ch).__name__}")
    K, N, M = ch.K, ch.N, ch.M
    expected = {
        "H_br": (M, N), "g_b": (K, N), "g_r": (K, M), "h_bp": (N,),
        "h_rp": (M,), "h_bt": (N,), "h_ae": (K,),
    }
    for name, shape in expected.items():
        arr = getattr(ch, name)
        if arr.shape != shape:
            raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"{name} contains non-finite entries")
    for name in ("P", "P_e", "sigma_k2", "sigma_ae2", "sigma_pe2", "sigma_s2", "zeta2"):
        if not getattr(ch, name) > 0:
            raise ValueError(f"{name} must be positive")
    if not np.any(ch.h_bt):
        raise ValueError("target channel h_bt is identically zero")
    return ch


def check_state(state: BeamformingState, ch: ChannelSet) -> BeamformingState:
    K, N, M = ch.K, ch.N, ch.M
    if state.W.shape != (N, K + N):
        raise ValueError(f"W has shape {state.W.shape}, expected {(N, K + N)}")
    if state.phi.shape != (M,):
        raise ValueError(f"phi has shape {state.phi.shape}, expected {(M,)}")
    if state.u.shape != (N,):
        raise ValueError(f"u has shape {state.u.shape}, expected {(N,)}")
    if np.any(np.abs(state.phi) > 1 + 1e-9):
        raise ValueError("RIS coefficients must satisfy |phi_m| <= 1")
    return state
