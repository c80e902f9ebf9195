"""Built-in property suite behind ``mtnls check``.

Every check is deterministic (fixed seeds) and small enough to finish in a few
seconds; the test suite runs the same properties at full size.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .dissipation import laplacian_pairing_inequality, mass_dissipation_rate
from .dynamics import (
    NoiseSpec,
    StepperConfig,
    constant_field_solution,
    deterministic_evolve,
    ou_convolution_step,
    single_mode_solution,
)
from .functionals import (
    ModelParams,
    legendre_f,
    legendre_phi,
    legendre_phi_star,
    series_constant,
)
from .spectral import SpectralField, inner, l2_norm, make_basis, random_field


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""
    seconds: float = 0.0

    def to_record(self) -> dict:
        return {
            "check": self.name,
            "pass": self.passed,
            "value": self.value,
            "tolerance": self.tolerance,
            "detail": self.detail,
            "seconds": round(self.seconds, 3),
        }


def check_roundtrip(seed=0, tol=1e-12):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for kind in ("torus-fourier", "dirichlet-sine"):
        b = make_basis(kind, 8, 2)
        u = random_field(b, rng, decay=0.0)
        back = b.analyze(b.synthesize(u.coeffs))
        worst = max(worst, float(np.max(np.abs(back - u.coeffs)) / np.max(np.abs(u.coeffs))))
    return CheckResult("roundtrip", worst <= tol, worst, tol, "grid -> coefficients identity, both bases")


def check_parseval(seed=1, tol=1e-12):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for kind in ("torus-fourier", "dirichlet-sine"):
        b = make_basis(kind, 8, 2)
        u = random_field(b, rng, decay=0.0)
        g = b.synthesize(u.coeffs)
        lhs = float(b.integrate(np.abs(g) ** 2))
        rhs = float(np.sum(np.abs(u.coeffs) ** 2))
        worst = max(worst, abs(lhs - rhs) / rhs)
    return CheckResult("parseval", worst <= tol, worst, tol, "grid L2 norm vs coefficient norm")


def check_legendre(lam=1.0, tol=1e-10):
    x = np.linspace(0.0, 10.0, 201)
    lhs = legendre_phi(lam, legendre_f(lam, x))
    rhs = x**2 * np.exp(lam * x**2)
    err = float(np.max(np.abs(lhs - rhs) / np.maximum(rhs, 1e-300)))
    return CheckResult("legendre-functional-equation", err <= tol, err, tol, f"Phi(f(x)) = x^2 e^(lam x^2), lam={lam}")


def check_young(seed=2, n=100):
    rng = np.random.default_rng(seed)
    worst = -math.inf
    for _ in range(n):
        lam = rng.uniform(0.1, 3.0)
        c = rng.uniform(0.1, 2.0)
        x = rng.uniform(0.0, 5.0)
        y = rng.uniform(0.0, 5.0)
        gap = x * y - (c * float(legendre_phi(lam, x)) + legendre_phi_star(lam, c, y))
        worst = max(worst, gap / (1 + x * y))
    return CheckResult("generalized-young", worst <= 1e-12, worst, 1e-12, "x y <= c Phi(x) + (c Phi)*(y)")


def check_laplacian_pairing(seed=3, n=20, p_max=6):
    rng = np.random.default_rng(seed)
    b = make_basis("torus-fourier", 8, 4)
    worst = -math.inf
    for _ in range(n):
        u = random_field(b, rng, decay=3.0, amplitude=2.0)
        for p in range(p_max + 1):
            lhs, rhs, _ = laplacian_pairing_inequality(u, p)
            worst = max(worst, float((rhs - lhs) - 1e-8 * (1 + abs(lhs))))
    return CheckResult("laplacian-pairing", worst <= 0, worst, 0.0, "<-Lap u, |u|^2p u> >= <|grad u|^2, |u|^2p>")


def check_single_mode(tol=1e-10):
    b = make_basis("torus-fourier", 8, 2)
    c = 1.5 + 0.5j
    params = ModelParams()
    u0 = single_mode_solution(b, (2, -1), c, params.beta, 0.0)
    uT, _ = deterministic_evolve(u0, 1.0, StepperConfig(h=1e-3), params, observer=None)
    err = float(l2_norm(uT - single_mode_solution(b, (2, -1), c, params.beta, 1.0)))
    v0 = constant_field_solution(b, 0.4, params.beta, 0.0)
    vT, _ = deterministic_evolve(v0, 1.0, StepperConfig(h=1e-3), params, observer=None)
    err = max(err, float(l2_norm(vT - constant_field_solution(b, 0.4, params.beta, 1.0))))
    return CheckResult("single-mode-exact", err <= tol, err, tol, "rotating single mode and constant field, T=1")


def check_ou_statistics(seed=4, paths=2000, steps=50, h=0.01, alpha=0.5):
    b = make_basis("torus-fourier", 2, 2)
    noise = NoiseSpec.from_profile(b)
    rng = np.random.Generator(np.random.Philox(seed))
    z = SpectralField(b, np.zeros((paths, b.n_modes), dtype=complex))
    for _ in range(steps):
        z = ou_convolution_step(z, h, alpha, noise, rng)
    t = steps * h
    m2 = np.sum(np.abs(z.coeffs) ** 2, axis=-1)
    expect = alpha * noise.A0 * t
    se = float(np.std(m2, ddof=1) / math.sqrt(paths))
    z_score = abs(float(np.mean(m2)) - expect) / se
    return CheckResult("ou-statistics", z_score <= 3.0, z_score, 3.0, f"E||z(t)||^2 = alpha A0 t, {paths} paths")


def check_modified_energy(seed=5, n=20, tol=1e-10):
    rng = np.random.default_rng(seed)
    b = make_basis("torus-fourier", 6, 2)
    params = ModelParams()
    worst = 0.0
    for _ in range(n):
        u = random_field(b, rng, decay=3.0, amplitude=0.02)
        rep = mass_dissipation_rate(u, params, rtol=1.0)
        worst = max(worst, float(abs(rep.M_total - rep.pairing) / abs(rep.pairing)))
    return CheckResult("modified-energy-identity", worst <= tol, worst, tol, "V + K = <u, L(u)>")


def check_lemma_chain():
    from .yudovich import default_datum, lemma_integrability_check, record_trajectory

    S, conv = series_constant(1.05, 4.4)
    b = make_basis("torus-fourier", 6, 2)
    traj = record_trajectory(default_datum(b), 0.2, StepperConfig(h=1e-3, stride=20), ModelParams())
    rep = lemma_integrability_check(traj, 1.05, 4.4)
    ok = conv and rep.holds
    return CheckResult("uniqueness-lemma-chain", ok, rep.worst_ratio, 1.0, f"series constant {S:.6g}, converged={conv}")


def check_mass_conservation(seed=6, tol=1e-8):
    b = make_basis("torus-fourier", 8, 2)
    u0 = random_field(b, np.random.default_rng(seed), decay=3.0)
    u0 = u0 * (0.5 / float(l2_norm(u0)))
    uT, _ = deterministic_evolve(u0, 1.0, StepperConfig(h=1e-3), ModelParams(), observer=None)
    m0 = float(inner(u0, u0))
    drift = abs(float(inner(uT, uT)) - m0) / m0
    return CheckResult("mass-conservation", drift <= tol, drift, tol, "Strang splitting, T=1")


CHECKS = (
    check_roundtrip,
    check_parseval,
    check_legendre,
    check_young,
    check_laplacian_pairing,
    check_single_mode,
    check_ou_statistics,
    check_modified_energy,
    check_lemma_chain,
    check_mass_conservation,
)


def run_checks(checks=CHECKS) -> list[CheckResult]:
    out = []
    for fn in checks:
        t0 = time.perf_counter()
        try:
            res = fn()
        except Exception as exc:  # a crashing check is a failed check
            res = CheckResult(fn.__name__.removeprefix("check_"), False, math.nan, math.nan, f"{type(exc).__name__}: {exc}")
        res.seconds = time.perf_counter() - t0
        out.append(res)
    return out
