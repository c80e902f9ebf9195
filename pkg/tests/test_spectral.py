import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtnls.exceptions import ConfigurationError, UsageError
from mtnls.spectral import (
    GridField,
    SpectralField,
    apply_laplacian_power,
    grid_inner,
    homogeneous_seminorm,
    inner,
    l2_norm,
    lp_norm,
    make_basis,
    mode_index,
    project,
    random_field,
    sobolev_norm,
    to_grid,
    to_spectral,
)


def test_torus_eigenvalues_sorted_and_start_at_zero():
    b = make_basis("torus-fourier", 3, 2)
    assert b.n_modes == 49
    assert b.eigenvalues[0] == 0
    assert np.all(np.diff(b.eigenvalues) >= 0)
    k = b.modes
    assert np.array_equal(b.eigenvalues, k[:, 0] ** 2 + k[:, 1] ** 2)
    # ties ordered lexicographically in k
    for lam in np.unique(b.eigenvalues):
        ks = [tuple(x) for x in k[b.eigenvalues == lam]]
        assert ks == sorted(ks)


def test_sine_eigenvalues_at_least_two():
    b = make_basis("dirichlet-sine", 4, 2)
    assert b.n_modes == 16
    assert b.eigenvalues.min() == 2
    assert not b.has_zero_mode
    assert b.area == pytest.approx(math.pi**2)


def test_grid_size_covers_oversampling():
    b = make_basis("torus-fourier", 8, 2)
    assert b.n_grid >= 2 * (2 * 8 + 1)


@pytest.mark.parametrize("kind,K,q", [("torus-fourier", 0, 2), ("dirichlet-sine", 1, 2), ("torus-fourier", 4, 1.5)])
def test_make_basis_validation(kind, K, q):
    if kind == "torus-fourier" and K == 0:
        assert make_basis(kind, K, q).n_modes == 1
        return
    if kind == "dirichlet-sine":
        assert make_basis(kind, K, q).n_modes == 1
        return
    with pytest.raises(ConfigurationError):
        make_basis(kind, K, q)


def test_make_basis_rejects_bad_kind_and_q():
    with pytest.raises(ConfigurationError):
        make_basis("sphere", 4, 2)
    with pytest.raises(ConfigurationError):
        make_basis("torus-fourier", 4, 1)
    with pytest.raises(ConfigurationError):
        make_basis("dirichlet-sine", 0, 2)


def test_torus_single_mode_grid_values():
    b = make_basis("torus-fourier", 4, 2)
    u = SpectralField.single_mode(b, (1, -2), 2.0)
    x, y = b.nodes()
    expect = 2.0 * np.exp(1j * (x - 2 * y)) / (2 * np.pi)
    assert np.max(np.abs(to_grid(u).values - expect)) < 1e-14


def test_sine_single_mode_grid_values():
    b = make_basis("dirichlet-sine", 4, 2)
    u = SpectralField.single_mode(b, (2, 3), 1.0)
    x, y = b.nodes()
    expect = (2 / np.pi) * np.sin(2 * x) * np.sin(3 * y)
    assert np.max(np.abs(to_grid(u).values - expect)) < 1e-14


def test_plane_wave_analyses_to_single_coefficient():
    b = make_basis("torus-fourier", 4, 2)
    x, y = b.nodes()
    c = to_spectral(GridField(b, np.exp(1j * (x + y))))
    expect = np.zeros(b.n_modes, dtype=complex)
    expect[mode_index(b, (1, 1))] = 2 * np.pi
    assert np.max(np.abs(c.coeffs - expect)) < 1e-13


@pytest.mark.parametrize("K", [1, 4, 16])
def test_roundtrip_and_parseval(basis, K, rng):
    b = make_basis(basis.kind, K, 2)
    u = random_field(b, rng, decay=0.0, batch=(3,))
    back = b.analyze(b.synthesize(u.coeffs))
    assert np.max(np.abs(back - u.coeffs)) <= 1e-12 * np.max(np.abs(u.coeffs))
    g = b.synthesize(u.coeffs)
    assert np.allclose(b.integrate(np.abs(g) ** 2), np.sum(np.abs(u.coeffs) ** 2, axis=-1), rtol=1e-12)


def test_grid_pairing_equals_coefficient_pairing(basis, rng):
    u = random_field(basis, rng)
    v = random_field(basis, rng)
    lhs = grid_inner(basis.synthesize(u.coeffs), basis.synthesize(v.coeffs), basis)
    assert lhs == pytest.approx(float(inner(u, v)), rel=1e-12)


def test_gradient_matches_analytic_sine():
    b = make_basis("dirichlet-sine", 5, 2)
    u = SpectralField.single_mode(b, (2, 1), 1.0)
    gx, gy = b.gradient(u.coeffs)
    x, y = b.nodes()
    assert np.max(np.abs(gx - (2 / np.pi) * 2 * np.cos(2 * x) * np.sin(y))) < 1e-13
    assert np.max(np.abs(gy - (2 / np.pi) * np.sin(2 * x) * np.cos(y))) < 1e-13


def test_gradient_seminorm_matches_dirichlet_energy(basis, rng):
    u = random_field(basis, rng)
    gx, gy = basis.gradient(u.coeffs, closed=True)
    grid = basis.integrate(np.abs(gx) ** 2 + np.abs(gy) ** 2, closed=True)
    assert float(grid) == pytest.approx(float(homogeneous_seminorm(u, 1)) ** 2, rel=1e-12)


def test_laplacian_powers(basis, rng):
    u = random_field(basis, rng)
    lap = apply_laplacian_power(u, 1)
    assert np.allclose(lap.coeffs, basis.eigenvalues * u.coeffs)
    back = apply_laplacian_power(apply_laplacian_power(u, 0.5), -0.5)
    nz = basis.eigenvalues > 0
    assert np.allclose(back.coeffs[nz], u.coeffs[nz])
    assert np.all(back.coeffs[~nz] == 0)


def test_norms(basis, rng):
    u = random_field(basis, rng)
    assert float(sobolev_norm(u, 0)) == pytest.approx(float(l2_norm(u)))
    h1 = np.sum((1 + basis.eigenvalues) * np.abs(u.coeffs) ** 2)
    assert float(sobolev_norm(u, 1)) ** 2 == pytest.approx(h1)
    g = to_grid(u)
    assert float(lp_norm(g, 2)) == pytest.approx(float(l2_norm(u)), rel=1e-12)
    assert float(lp_norm(g, np.inf)) == pytest.approx(np.max(np.abs(g.values)))


def test_constant_field_lp_norm():
    b = make_basis("torus-fourier", 2, 2)
    u = SpectralField.single_mode(b, (0, 0), 2 * np.pi * 0.7)
    assert float(lp_norm(to_grid(u), 4)) == pytest.approx(0.7 * (4 * np.pi**2) ** 0.25, rel=1e-13)


def test_project():
    b = make_basis("torus-fourier", 4, 2)
    u = SpectralField(b, np.ones(b.n_modes))
    p = project(u, 2)
    kmax = np.max(np.abs(b.modes), axis=1)
    assert np.all(p.coeffs[kmax > 2] == 0)
    assert np.all(p.coeffs[kmax <= 2] == 1)
    with pytest.raises(UsageError):
        project(u, 5)


def test_conjugate_is_pointwise(basis, rng):
    u = random_field(basis, rng)
    assert np.allclose(basis.synthesize(u.conj().coeffs), np.conj(basis.synthesize(u.coeffs)), atol=1e-14)


def test_field_validation():
    b = make_basis("torus-fourier", 2, 2)
    with pytest.raises(UsageError):
        SpectralField(b, np.ones(3))
    with pytest.raises(UsageError):
        SpectralField(b, np.full(b.n_modes, np.nan))
    with pytest.raises(UsageError):
        SpectralField(b, np.ones(b.n_modes)) + SpectralField(make_basis("torus-fourier", 3, 2), np.ones(49))


def test_real_random_field_is_real_on_grid(rng):
    b = make_basis("torus-fourier", 5, 2)
    u = random_field(b, rng, real=True)
    assert np.max(np.abs(b.synthesize(u.coeffs).imag)) < 1e-14


@settings(max_examples=25, deadline=None)
@given(
    kind=st.sampled_from(["torus-fourier", "dirichlet-sine"]),
    K=st.integers(1, 6),
    q=st.integers(2, 4),
    seed=st.integers(0, 2**32 - 1),
)
def test_roundtrip_property(kind, K, q, seed):
    b = make_basis(kind, K, q)
    u = random_field(b, np.random.default_rng(seed), decay=0.0)
    back = b.analyze(b.synthesize(u.coeffs))
    assert np.max(np.abs(back - u.coeffs)) <= 1e-12 * max(1.0, np.max(np.abs(u.coeffs)))


def test_closed_gradient_restricts_to_interior(rng):
    b = make_basis("dirichlet-sine", 5, 2)
    u = random_field(b, rng)
    open_g = b.gradient(u.coeffs)
    closed_g = b.gradient(u.coeffs, closed=True)
    for o, c in zip(open_g, closed_g):
        assert c.shape == (b.n_grid + 1, b.n_grid + 1)
        assert np.allclose(c[1:-1, 1:-1], o, atol=1e-13)


def test_interior_rule_misses_boundary_flux(rng):
    # cosine-type gradient data is not zero on the boundary, so the interior rule is inexact
    b = make_basis("dirichlet-sine", 6, 2)
    u = random_field(b, rng)
    gx, gy = b.gradient(u.coeffs)
    interior = float(b.integrate(np.abs(gx) ** 2 + np.abs(gy) ** 2))
    assert interior < float(homogeneous_seminorm(u, 1)) ** 2 * (1 - 1e-3)
