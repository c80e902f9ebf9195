import warnings

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from mtnls.dynamics import StepperConfig, deterministic_evolve
from mtnls.estimators import GalerkinFlow, SpectralProjector, StationaryMeasureEstimator
from mtnls.functionals import ModelParams
from mtnls.spectral import SpectralField, make_basis, random_field


def test_projector_roundtrip(rng):
    p = SpectralProjector("dirichlet-sine", 5, 2).fit()
    c = random_field(p.basis_, rng, batch=(4,)).coeffs
    grid = p.inverse_transform(c)
    assert grid.shape == (4,) + p.basis_.grid_shape
    assert np.allclose(p.transform(grid), c, atol=1e-13)


def test_projector_params_and_clone():
    p = SpectralProjector(K=3)
    assert p.get_params() == {"kind": "torus-fourier", "K": 3, "q": 2}
    q = clone(p).set_params(K=4).fit()
    assert q.n_modes_ == 81
    with pytest.raises(NotFittedError):
        SpectralProjector().transform(np.zeros((1, 16, 16)))


def test_projector_rejects_bad_shapes(rng):
    p = SpectralProjector(K=2).fit()
    with pytest.raises(ValueError):
        p.transform(np.zeros((3, 7, 7)))
    with pytest.raises(ValueError):
        p.inverse_transform(np.zeros((3, 5)))


def test_flow_matches_module_function(rng):
    f = GalerkinFlow(K=4, T=0.05).fit()
    c = random_field(f.basis_, rng, batch=(2,), amplitude=0.5).coeffs
    ref, _ = deterministic_evolve(SpectralField(f.basis_, c), 0.05, StepperConfig(h=1e-3), ModelParams(), observer=None)
    assert np.array_equal(f.transform(c), ref.coeffs)


def test_pipeline_grid_to_flow(rng):
    pipe = make_pipeline(SpectralProjector(K=3), GalerkinFlow(K=3, T=0.01))
    b = make_basis("torus-fourier", 3)
    grid = b.synthesize(random_field(b, rng, batch=(2,)).coeffs)
    out = pipe.fit(grid).transform(grid)
    assert out.shape == (2, b.n_modes)


def test_stationary_estimator_small_run():
    est = StationaryMeasureEstimator(n_traj=40, T=0.05, burn_in=0.02, h=1e-3, stride=5)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        est.fit()
    assert est.score() == est.report_.ratio
    assert est.A0_ > 0
    with pytest.raises(NotFittedError):
        StationaryMeasureEstimator().score()
