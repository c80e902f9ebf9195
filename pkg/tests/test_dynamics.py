import math

import numpy as np
import pytest

from mtnls.dynamics import (
    NoiseSpec,
    StepperConfig,
    constant_field_solution,
    deterministic_evolve,
    deterministic_step,
    fd_step,
    ou_convolution_step,
    single_mode_solution,
    split_consistency,
    stability_heuristic,
    twin_evolve,
)
from mtnls.exceptions import AmplitudeOverflowError, ConfigurationError, UsageError
from mtnls.functionals import ModelParams, energy, mass
from mtnls.spectral import SpectralField, l2_norm, make_basis, random_field


def smooth(basis, seed=0, amp=0.5):
    u = random_field(basis, np.random.default_rng(seed), decay=3.0)
    return u * (amp / float(l2_norm(u)))


@pytest.mark.parametrize("substep", ["projected-rk4", "grid-rotation"])
@pytest.mark.parametrize("k,c", [((2, -1), 1.5 + 0.5j), ((0, 3), 0.3j), ((0, 0), 2.0)])
def test_single_mode_exact(torus8, params, substep, k, c):
    u0 = single_mode_solution(torus8, k, c, params.beta, 0.0)
    uT, _ = deterministic_evolve(u0, 1.0, StepperConfig(h=1e-3, substep=substep), params, observer=None)
    assert float(l2_norm(uT - single_mode_solution(torus8, k, c, params.beta, 1.0))) < 1e-10


def test_constant_field_solution_is_single_zero_mode(torus8, params):
    u = constant_field_solution(torus8, 0.4, params.beta, 0.3)
    assert np.allclose(torus8.synthesize(u.coeffs), u.coeffs[0] / (2 * math.pi))
    assert abs(torus8.synthesize(u.coeffs)[0, 0]) == pytest.approx(0.4)
    with pytest.raises(UsageError):
        constant_field_solution(make_basis("dirichlet-sine", 4), 1.0, 1.0, 0.0)


@pytest.mark.parametrize("kind", ["torus-fourier", "dirichlet-sine"])
def test_mass_conservation(kind, params):
    b = make_basis(kind, 8, 2)
    u0 = smooth(b)
    uT, rec = deterministic_evolve(u0, 1.0, StepperConfig(h=1e-3, stride=100), params)
    m0 = float(mass(u0))
    assert abs(float(mass(uT)) - m0) / m0 < 1e-10
    assert len(rec) == 11
    assert rec[-1].t == pytest.approx(1.0)


def _energy_drift(u0, h, params, substep):
    uT, _ = deterministic_evolve(u0, 1.0, StepperConfig(h=h, substep=substep), params, observer=None)
    return abs(float(energy(uT, params)) - float(energy(u0, params)))


def test_energy_drift_second_order(torus8, params):
    u0 = smooth(torus8, amp=2.0)
    ratio = _energy_drift(u0, 2e-3, params, "projected-rk4") / _energy_drift(u0, 1e-3, params, "projected-rk4")
    assert 3.5 <= ratio <= 4.5


def test_grid_rotation_substep_is_first_order(torus8, params):
    # documented behaviour of the literal pointwise rotation
    u0 = smooth(torus8, amp=2.0)
    ratio = _energy_drift(u0, 2e-3, params, "grid-rotation") / _energy_drift(u0, 1e-3, params, "grid-rotation")
    assert 1.5 <= ratio <= 2.5


def test_backward_is_conjugate_forward(torus8, params):
    u0 = smooth(torus8)
    back, _ = deterministic_evolve(u0, -0.3, StepperConfig(h=1e-3), params, observer=None)
    fwd, _ = deterministic_evolve(u0.conj(), 0.3, StepperConfig(h=1e-3), params, observer=None)
    assert np.array_equal(back.coeffs, fwd.conj().coeffs)
    there, _ = deterministic_evolve(back, 0.3, StepperConfig(h=1e-3), params, observer=None)
    assert float(l2_norm(there - u0)) < 1e-8


def test_step_shrinks_to_land_on_T(torus8, params):
    _, rec = deterministic_evolve(smooth(torus8), 0.01005, StepperConfig(h=1e-3), params)
    assert rec[-1].t == pytest.approx(0.01005, rel=1e-14)
    assert len(rec) == 12
    assert set(rec[0].to_json()) == {"t", "M", "E", "H1"}


def test_overflow_reports_time(torus8, params):
    u0 = SpectralField.single_mode(torus8, (0, 0), 200.0)
    with pytest.raises(AmplitudeOverflowError) as ei:
        deterministic_evolve(u0, 1.0, StepperConfig(h=1e-3), params)
    assert ei.value.time == 0.0
    with pytest.raises(AmplitudeOverflowError) as ei:
        deterministic_evolve(u0, 1.0, StepperConfig(h=1e-3), params, observer=None)
    assert ei.value.time == pytest.approx(1e-3)


def test_zero_T_and_bad_substep(torus8, params):
    with pytest.raises(ConfigurationError):
        deterministic_evolve(smooth(torus8), 0.0, StepperConfig(), params)
    with pytest.raises(ConfigurationError):
        deterministic_step(smooth(torus8), 1e-3, params, substep="midpoint")


@pytest.mark.parametrize(
    "kw",
    [{"scheme": "rk4"}, {"h": 0.0}, {"h": math.inf}, {"stride": 0}, {"drift": "none"}, {"seed": -1}],
)
def test_stepper_validation(kw):
    with pytest.raises(ConfigurationError):
        StepperConfig(**kw)


def test_noise_profile_and_moments():
    b = make_basis("torus-fourier", 2, 2)
    n = NoiseSpec.from_profile(b, 0.1, 1.5, overrides={(1, 0): 0.0})
    lam = b.eigenvalues
    a = 0.1 * (1 + lam) ** -1.5
    a[np.flatnonzero((b.modes == (1, 0)).all(axis=1))] = 0.0
    assert np.array_equal(n.coeffs, a)
    assert n.A0 == pytest.approx(np.sum(a**2))
    assert n.A1 == pytest.approx(np.sum(lam * a**2))
    assert n.A_half == pytest.approx(np.sum(np.sqrt(lam) * a**2))
    with pytest.raises(ConfigurationError):
        NoiseSpec(b, -a)
    with pytest.raises(UsageError):
        NoiseSpec(b, a[:-1])
    with pytest.raises(ConfigurationError):
        n.scaled(0.0)


@pytest.mark.parametrize("lam", [0.5, 2.0, 4.0])
def test_noise_scaling_bit_exact(lam):
    n = NoiseSpec.from_profile(make_basis("torus-fourier", 3, 2), 0.1, 1.5)
    assert n.scaled(lam).A0 == lam**2 * n.A0
    assert n.scaled(lam).digest() != n.digest()


def test_ou_convolution_law():
    b = make_basis("torus-fourier", 2, 2)
    noise = NoiseSpec.from_profile(b)
    rng = np.random.Generator(np.random.Philox(11))
    paths, steps, h, alpha = 4000, 40, 0.01, 0.5
    z = SpectralField(b, np.zeros((paths, b.n_modes), dtype=complex))
    for _ in range(steps):
        z = ou_convolution_step(z, h, alpha, noise, rng)
    m2 = np.abs(z.coeffs) ** 2
    mean, se = m2.mean(axis=0), m2.std(axis=0, ddof=1) / math.sqrt(paths)
    expect = alpha * noise.coeffs**2 * steps * h
    assert np.all(np.abs(mean - expect) <= 4 * se)
    tot = m2.sum(axis=1)
    assert abs(tot.mean() - alpha * noise.A0 * steps * h) <= 3 * tot.std(ddof=1) / math.sqrt(paths)


def test_em_ou_drift_discrete_variance():
    # c' = (1 - alpha h) c e^{-i lam h} + xi has an exact discrete second moment
    b = make_basis("torus-fourier", 2, 2)
    noise = NoiseSpec.from_profile(b, 0.5, 1.0)
    p = ModelParams()
    rng = np.random.Generator(np.random.Philox(5))
    h, n, paths = 0.02, 50, 4000
    u = SpectralField(b, np.zeros((paths, b.n_modes), dtype=complex))
    for _ in range(n):
        u = fd_step(u, h, p, noise, rng, drift="ou")
    q = (1 - p.alpha * h) ** 2
    expect = p.alpha * h * noise.coeffs**2 * (1 - q**n) / (1 - q)
    m2 = np.abs(u.coeffs) ** 2
    se = m2.std(axis=0, ddof=1) / math.sqrt(paths)
    assert np.all(np.abs(m2.mean(axis=0) - expect) <= 4 * se)


def test_em_small_alpha_reduces_to_exponential_euler(torus8):
    p = ModelParams(alpha=1e-14)
    u0 = smooth(torus8, amp=0.05)
    zero = NoiseSpec(torus8, np.zeros(torus8.n_modes))
    rng = np.random.Generator(np.random.Philox(0))
    u = u0
    for _ in range(20):
        u = fd_step(u, 1e-3, p, zero, rng)
    ref, _ = deterministic_evolve(u0, 0.02, StepperConfig("exp-euler-maruyama", 1e-3), p, observer=None)
    assert float(l2_norm(u - ref)) < 1e-10 * float(l2_norm(u0))


def test_fd_step_reproducible_and_basis_checked(torus8, params):
    noise = NoiseSpec.from_profile(torus8, 0.1)
    u0 = smooth(torus8, amp=0.01)
    a = fd_step(u0, 1e-4, params, noise, np.random.Generator(np.random.Philox(3)))
    b = fd_step(u0, 1e-4, params, noise, np.random.Generator(np.random.Philox(3)))
    assert np.array_equal(a.coeffs, b.coeffs)
    other = NoiseSpec.from_profile(make_basis("torus-fourier", 8, 2), 0.1)
    with pytest.raises(UsageError):
        fd_step(u0, 1e-4, params, other, np.random.default_rng(0))


def test_fd_step_overflow(torus8, params):
    u0 = SpectralField.single_mode(torus8, (0, 0), 100.0)
    with pytest.raises(AmplitudeOverflowError):
        fd_step(u0, 1e-4, params, NoiseSpec.from_profile(torus8), np.random.default_rng(0))


def test_stability_heuristic_scales_with_h(torus8, params):
    u0 = smooth(torus8, amp=0.01)
    a = stability_heuristic(u0, 1e-4, params)
    assert a > 0
    assert stability_heuristic(u0, 2e-4, params) == pytest.approx(2 * a)


def test_split_consistency_is_first_order():
    b = make_basis("torus-fourier", 2, 2)
    p = ModelParams()
    noise = NoiseSpec.from_profile(b, 0.1)
    u0 = smooth(b, amp=0.01)
    errs = [split_consistency(u0, 0.05, h, p, noise, seed=1) for h in (1e-3, 5e-4, 2.5e-4)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.5 * errs[0]


def test_twin_evolve_identical_data(torus8, params):
    u0 = smooth(torus8)
    _, _, rec = twin_evolve(u0, u0, 0.01, StepperConfig(h=1e-3, stride=5), params)
    for r in rec:
        assert float(r.values["diff_l2"]) == 0.0
        assert float(r.values["diff_h1"]) == 0.0
        assert float(r.values["u_exp"]) == float(r.values["v_exp"])
    with pytest.raises(UsageError):
        twin_evolve(u0, smooth(make_basis("torus-fourier", 8, 2)), 0.01, StepperConfig(), params)
