"""The four-term dissipation operator, its mass/energy dissipation rates and
the modified energies."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ConsistencyError, DomainError
from .functionals import (
    DEFAULT_POLICY,
    ModelParams,
    SeriesPolicy,
    check_amplitude,
    lp_power_integrals,
    sum_series,
)
from .spectral import SpectralField, grid_inner, inner, laplacian_symbol, make_basis


def _grid(u):
    g = u.basis.synthesize(u.coeffs)
    return g, g.real**2 + g.imag**2


def exp_drift(u: SpectralField, lam: float) -> SpectralField:
    """``P_N(e^{lam |u|^2} u)`` via the oversampled grid."""
    g, a2 = _grid(u)
    check_amplitude(a2, lam)
    return SpectralField(u.basis, u.basis.analyze(np.exp(lam * a2) * g))


def nonlinear_F(u: SpectralField, beta: float) -> SpectralField:
    """``P_N((e^{beta |u|^2} - 1) u)``; uses expm1 so small amplitudes keep precision."""
    g, a2 = _grid(u)
    check_amplitude(a2, beta)
    return SpectralField(u.basis, u.basis.analyze(np.expm1(beta * a2) * g))


def _g_delta_coeffs(basis, coeffs, delta):
    v = basis.synthesize(coeffs * laplacian_symbol(basis, 0.5))
    w = np.abs(v) ** delta * v
    return basis.analyze(w) * laplacian_symbol(basis, -0.5), v


def g_delta(u: SpectralField, delta: float) -> SpectralField:
    """``P_N((-Lap)^{-1/2}(|(-Lap)^{1/2} u|^delta (-Lap)^{1/2} u))``."""
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    c, _ = _g_delta_coeffs(u.basis, u.coeffs, delta)
    return SpectralField(u.basis, c)


@dataclass
class DissipationBreakdown:
    term1: SpectralField
    term2: SpectralField
    term3: SpectralField
    prefactor: np.ndarray

    def total(self) -> SpectralField:
        return self.term1 + self.term2 + self.term3

    def to_record(self) -> dict:
        def l2(f):
            return np.sqrt(np.sum(np.abs(f.coeffs) ** 2, axis=-1)).tolist()

        return {
            "prefactor": np.asarray(self.prefactor).tolist(),
            "term1_l2": l2(self.term1),
            "term2_l2": l2(self.term2),
            "term3_l2": l2(self.term3),
        }


def prefactor(F_beta: SpectralField, params: ModelParams) -> np.ndarray:
    """``exp(gamma C1 ||P_N(e^{beta|u|^2} u)||^2)`` with an overflow guard."""
    n2 = np.sum(np.abs(F_beta.coeffs) ** 2, axis=-1)
    expo = params.gamma * params.C1 * n2
    if np.any(expo >= 700):
        from .exceptions import AmplitudeOverflowError

        raise AmplitudeOverflowError(
            f"dissipation prefactor exponent {float(np.max(expo)):.6g} >= 700",
            max_amplitude=float(np.sqrt(np.max(n2))),
        )
    return np.exp(expo)


def dissipation_L(u: SpectralField, params: ModelParams) -> tuple[SpectralField, DissipationBreakdown]:
    """Evaluate the dissipation operator and its three-part breakdown."""
    basis = u.basis
    g, a2 = _grid(u)
    check_amplitude(a2, max(params.beta, params.gamma))
    fb = basis.analyze(np.exp(params.beta * a2) * g)
    fg = basis.analyze(np.exp(params.gamma * a2) * g)
    pref = prefactor(SpectralField(basis, fb), params)
    t3, _ = _g_delta_coeffs(basis, u.coeffs, params.delta)
    term1 = (params.C * pref)[..., None] * (u.coeffs + fb)
    term2 = params.C2 * fg
    total = SpectralField(basis, term1 + term2 + t3)
    bd = DissipationBreakdown(
        SpectralField(basis, term1), SpectralField(basis, term2), SpectralField(basis, t3), pref
    )
    return total, bd


def dissipation_coeffs(basis, coeffs, params: ModelParams):
    """Array kernel of :func:`dissipation_L` for batched integrators.

    Returns the dissipation coefficients and ``nonlinear_F(u, beta)`` which
    shares the same grid evaluation.
    """
    g = basis.synthesize(coeffs)
    a2 = g.real**2 + g.imag**2
    check_amplitude(a2, max(params.beta, params.gamma))
    eb = np.exp(params.beta * a2)
    fb = basis.analyze(eb * g)
    fg = basis.analyze(np.exp(params.gamma * a2) * g)
    n2 = np.sum(np.abs(fb) ** 2, axis=-1)
    expo = params.gamma * params.C1 * n2
    if np.any(expo >= 700):
        from .exceptions import AmplitudeOverflowError

        raise AmplitudeOverflowError(
            f"dissipation prefactor exponent {float(np.max(expo)):.6g} >= 700",
            max_amplitude=float(np.sqrt(np.max(a2))),
        )
    pref = np.exp(expo)
    t3, _ = _g_delta_coeffs(basis, coeffs, params.delta)
    L = (params.C * pref)[..., None] * (coeffs + fb) + params.C2 * fg + t3
    nl = basis.analyze(np.expm1(params.beta * a2) * g)
    return L, nl


@dataclass
class ModifiedEnergyReport:
    """Modified potential/kinetic energies and their sum (the mass dissipation rate)."""

    V: np.ndarray
    K: np.ndarray
    M_total: np.ndarray
    pairing: np.ndarray

    def to_record(self) -> dict:
        return {
            "V": np.asarray(self.V).tolist(),
            "K": np.asarray(self.K).tolist(),
            "Mtot": np.asarray(self.M_total).tolist(),
            "pairing": np.asarray(self.pairing).tolist(),
        }


def modified_potential(u: SpectralField, params: ModelParams, policy: SeriesPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Series form of the modified potential energy."""
    basis = u.basis
    _, a2 = _grid(u)
    check_amplitude(a2, max(params.beta, params.gamma))
    peak = np.max(a2, axis=(-2, -1))
    pref = prefactor(exp_drift(u, params.beta), params)
    ints = lp_power_integrals(a2, basis, policy.p_max)

    def series(lam):
        return sum_series(
            lambda p: lam**p / math.factorial(p) * ints[p],
            lambda p: lam * peak / (p + 1),
            policy,
        ).value

    l2sq = np.sum(np.abs(u.coeffs) ** 2, axis=-1)
    return params.C * pref * (l2sq + series(params.beta)) + params.C2 * series(params.gamma)


def modified_kinetic(u: SpectralField, params: ModelParams) -> np.ndarray:
    return inner(u, g_delta(u, params.delta))


def mass_dissipation_rate(
    u: SpectralField,
    params: ModelParams,
    policy: SeriesPolicy = DEFAULT_POLICY,
    rtol: float = 1e-8,
) -> ModifiedEnergyReport:
    """Modified energies, cross-checked against ``<u, L(u)>``.

    Raises :class:`ConsistencyError` when the series expansion and the direct
    pairing disagree beyond ``rtol``.
    """
    V = modified_potential(u, params, policy)
    K = modified_kinetic(u, params)
    L, _ = dissipation_L(u, params)
    pairing = inner(u, L)
    total = V + K
    err = np.abs(total - pairing)
    if np.any(err > rtol * np.maximum(np.abs(pairing), 1e-300)) and np.any(err > 1e-300):
        raise ConsistencyError(
            f"V + K = {np.asarray(total).tolist()} disagrees with <u, L(u)> = "
            f"{np.asarray(pairing).tolist()}"
        )
    return ModifiedEnergyReport(V, K, total, pairing)


def energy_dissipation_rate(u: SpectralField, params: ModelParams) -> np.ndarray:
    """``<-Lap u + (e^{beta|u|^2}-1) u, L(u)>``.

    The Laplacian part is paired in coefficient space, the nonlinearity on the
    grid without projection.
    """
    basis = u.basis
    L, _ = dissipation_L(u, params)
    lin = inner(SpectralField(basis, basis.eigenvalues * u.coeffs), L)
    g, a2 = _grid(u)
    nl = grid_inner(np.expm1(params.beta * a2) * g, basis.synthesize(L.coeffs), basis)
    return lin + nl


def energy_dissipation_gap(u: SpectralField, params: ModelParams) -> np.ndarray:
    """Unprojected minus projected nonlinear pairing in the energy dissipation rate."""
    basis = u.basis
    L, _ = dissipation_L(u, params)
    g, a2 = _grid(u)
    unproj = grid_inner(np.expm1(params.beta * a2) * g, basis.synthesize(L.coeffs), basis)
    proj = inner(nonlinear_F(u, params.beta), L)
    return unproj - proj


def energy_dissipation_diagnostic(u: SpectralField, params: ModelParams, policy: SeriesPolicy = DEFAULT_POLICY) -> dict:
    """Recorded (never asserted) lower-bound margin ``E_rate + M_rate - E_0``.

    The analysis bounds this margin below by an unspecified constant, so the
    value is informative only.
    """
    from .functionals import h_functional

    basis = u.basis
    F_b = exp_drift(u, params.beta)
    pref = prefactor(F_b, params)
    g, a2 = _grid(u)
    gx, gy = basis.gradient(u.coeffs, closed=True)
    h1sq = np.sum((1 + basis.eigenvalues) * np.abs(u.coeffs) ** 2, axis=-1)
    grad_b = h_functional(u, params.beta, policy, seminorm=True).value
    grad_g = h_functional(u, params.gamma, policy, seminorm=True).value
    ints = lp_power_integrals(a2, basis, policy.p_max)
    pw_b = sum(params.beta**p / math.factorial(p) * ints[p] for p in range(policy.p_max + 1))
    w1 = basis.integrate(a2 ** (1 + params.delta / 2)) + basis.integrate(
        (np.abs(gx) ** 2 + np.abs(gy) ** 2) ** (1 + params.delta / 2), closed=True
    )
    fb2 = np.sum(np.abs(F_b.coeffs) ** 2, axis=-1)
    e0 = 0.5 * (params.C * pref * (h1sq + grad_b + pw_b + fb2) + params.C2 * grad_g + w1)
    e_rate = energy_dissipation_rate(u, params)
    m_rate = inner(u, dissipation_L(u, params)[0])
    return {"E_rate": e_rate, "M_rate": m_rate, "E0": e0, "margin": e_rate + m_rate - e0}


def laplacian_pairing_inequality(u: SpectralField, p: int, refine: int = 2) -> tuple[float, float, float]:
    """``lhs = <-Lap u, |u|^{2p} u>`` and ``rhs = <|grad u|^2, |u|^{2p}>``.

    The third value estimates quadrature aliasing by re-evaluating both sides
    on a grid oversampled ``refine`` times more.
    """
    if p < 0:
        raise DomainError(f"p must be >= 0, got {p}")

    def sides(basis, coeffs):
        g = basis.synthesize(coeffs)
        a2p = (g.real**2 + g.imag**2) ** p
        lap = basis.synthesize(basis.eigenvalues * coeffs)
        gx, gy = basis.gradient(coeffs, closed=True)
        lhs = grid_inner(lap, a2p * g, basis)
        # pad before the power: |u|^0 = 1 on the boundary
        a2p_closed = basis.pad_closed(g.real**2 + g.imag**2) ** p
        rhs = np.real(basis.integrate((np.abs(gx) ** 2 + np.abs(gy) ** 2) * a2p_closed, closed=True))
        return lhs, rhs

    lhs, rhs = sides(u.basis, u.coeffs)
    fine = make_basis(u.basis.kind, u.basis.cutoff, u.basis.oversample * refine)
    lf, rf = sides(fine, u.coeffs)
    alias = np.abs(lf - lhs) + np.abs(rf - rhs)
    return lhs, rhs, alias
