"""scikit-learn style wrapper around the alternating optimizer."""
from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .channel import ChannelSet
from .jbrd import SCHEMES, JbrdConfig, run_benchmark
from .metrics import BeamformingState, secrecy_rate
from .solvers import SolverParams
from .validation import check_channel_set, check_state


class SecureBeamformer(BaseEstimator):
    """Fit transmit/receive beamformers and RIS phases to one channel set.

    ``fit`` runs the chosen scheme (``"jbrd"`` or one of the ablations in
    :data:`risisac.jbrd.SCHEMES`); ``transform`` returns the fitted
    :class:`BeamformingState`; ``score`` evaluates its secrecy rate on a
    (possibly different) channel set of the same dimensions.

    Example::

        est = SecureBeamformer(max_outer=30).fit(generate_scenario(cfg))
        est.score(channels)
    """

    def __init__(self, scheme: str = "jbrd", delta: float = 1e-3, max_outer: int = 50,
                 max_inner_w: int = 5, max_inner_phi: int = 5, rho: float | None = None,
                 rho_scale: float = 0.1, init: str = "mrt_aligned", random_state: int = 0,
                 max_inner_steps: int = 40):
        self.scheme = scheme
        self.delta = delta
        self.max_outer = max_outer
        self.max_inner_w = max_inner_w
        self.max_inner_phi = max_inner_phi
        self.rho = rho
        self.rho_scale = rho_scale
        self.init = init
        self.random_state = random_state
        self.max_inner_steps = max_inner_steps

    def _config(self) -> JbrdConfig:
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        return JbrdConfig(
            delta=self.delta, max_outer=self.max_outer, max_inner_w=self.max_inner_w,
            max_inner_phi=self.max_inner_phi, rho=self.rho, rho_scale=self.rho_scale,
            init=self.init, seed=self.random_state,
            solver=SolverParams(max_inner_steps=self.max_inner_steps),
        )

    def fit(self, X: ChannelSet, y=None) -> SecureBeamformer:
        ch = check_channel_set(X)
        self.state_, self.trace_ = run_benchmark(ch, self._config(), self.scheme)
        self.report_ = secrecy_rate(ch if self.scheme != "no_ris" else ch.without_ris(), self.state_)
        self.n_iter_ = self.trace_.outer_iterations
        return self

    def transform(self, X: ChannelSet | None = None) -> BeamformingState:
        check_is_fitted(self, "state_")
        return self.state_.copy()

    def fit_transform(self, X: ChannelSet, y=None) -> BeamformingState:
        return self.fit(X).transform()

    def score(self, X: ChannelSet, y=None) -> float:
        check_is_fitted(self, "state_")
        ch = check_channel_set(X)
        if self.scheme == "no_ris":
            ch = ch.without_ris()
        return secrecy_rate(ch, check_state(self.state_, ch)).sr
