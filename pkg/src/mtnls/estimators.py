"""scikit-learn style wrappers over the module functions.

The numerical core stays function-based; these classes only hold
configuration (``get_params``/``set_params``) and fitted state.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_coeff_array, check_grid_array
from .dynamics import NoiseSpec, StepperConfig, deterministic_evolve
from .functionals import ModelParams
from .spectral import SpectralField, make_basis


class SpectralProjector(TransformerMixin, BaseEstimator):
    """Grid samples ``(n, M, M)`` to Galerkin coefficients ``(n, n_modes)``."""

    def __init__(self, kind="torus-fourier", K=8, q=2):
        self.kind = kind
        self.K = K
        self.q = q

    def fit(self, X=None, y=None):
        self.basis_ = make_basis(self.kind, self.K, self.q)
        self.n_modes_ = self.basis_.n_modes
        if X is not None:
            check_grid_array(X, self.basis_)
        return self

    def transform(self, X):
        check_is_fitted(self, "basis_")
        return self.basis_.analyze(check_grid_array(X, self.basis_))

    def inverse_transform(self, X):
        check_is_fitted(self, "basis_")
        return self.basis_.synthesize(check_coeff_array(X, self.basis_))


class GalerkinFlow(TransformerMixin, BaseEstimator):
    """Deterministic flow map ``u0 -> u(T)`` on coefficient rows."""

    def __init__(self, kind="torus-fourier", K=8, q=2, beta=1.0, gamma=4.4, T=1.0, h=1e-3, scheme="strang-split"):
        self.kind = kind
        self.K = K
        self.q = q
        self.beta = beta
        self.gamma = gamma
        self.T = T
        self.h = h
        self.scheme = scheme

    def fit(self, X=None, y=None):
        self.basis_ = make_basis(self.kind, self.K, self.q)
        self.params_ = ModelParams(beta=self.beta, gamma=self.gamma)
        self.stepper_ = StepperConfig(self.scheme, self.h)
        return self

    def transform(self, X):
        check_is_fitted(self, "basis_")
        X = check_coeff_array(X, self.basis_)
        u, _ = deterministic_evolve(SpectralField(self.basis_, X), self.T, self.stepper_, self.params_, observer=None)
        return u.coeffs


class StationaryMeasureEstimator(BaseEstimator):
    """Runs the stationary identity experiment; ``score`` returns the ratio to ``A0/2``."""

    def __init__(self, K=2, q=2, a0=0.1, r=1.5, n_traj=200, T=0.5, burn_in=0.2, h=2.5e-4, stride=10, sigma_scale=0.1, seed=0, alpha=0.5):
        self.K = K
        self.q = q
        self.a0 = a0
        self.r = r
        self.n_traj = n_traj
        self.T = T
        self.burn_in = burn_in
        self.h = h
        self.stride = stride
        self.sigma_scale = sigma_scale
        self.seed = seed
        self.alpha = alpha

    def fit(self, X=None, y=None):
        from .measure import EnsembleSpec, stationary_identity

        basis = make_basis("torus-fourier", self.K, self.q)
        noise = NoiseSpec.from_profile(basis, self.a0, self.r)
        spec = EnsembleSpec(self.n_traj, self.T, self.burn_in, self.stride, sigma=self.sigma_scale * noise.coeffs)
        cfg = StepperConfig("exp-euler-maruyama", self.h, self.seed)
        self.report_ = stationary_identity(spec, ModelParams(alpha=self.alpha), noise, cfg)
        self.ratio_ = self.report_.ratio
        self.A0_ = noise.A0
        return self

    def score(self, X=None, y=None):
        check_is_fitted(self, "report_")
        return float(self.ratio_)
