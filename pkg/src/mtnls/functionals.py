"""Mass, energy, exponential power series and related scalar functionals."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import (
    AmplitudeOverflowError,
    ConfigurationError,
    ConvergenceError,
    DomainError,
    NumericalError,
)
from .spectral import SpectralField

EXP_LIMIT = 700.0


@dataclass(frozen=True)
class ModelParams:
    """Nonlinearity and dissipation constants.

    ``C1 = 4 C3**2`` with ``C3 <= C / (8 C2)``; the defaults take ``C3 = 8``.
    """

    beta: float = 1.0
    gamma: float = 4.4
    delta: float = 0.5
    alpha: float = 0.5
    C: float = 128.0
    C1: float = 256.0
    C2: float = 1.0

    def __post_init__(self):
        for name in ("beta", "gamma", "C", "C1", "C2"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ConfigurationError(f"{name} must be a positive finite number, got {v!r}")
        if not 0 < self.delta < 1:
            raise ConfigurationError(f"delta must lie in (0, 1), got {self.delta!r}")
        if not 0 < self.alpha <= 1:
            raise ConfigurationError(f"alpha must lie in (0, 1], got {self.alpha!r}")
        if self.gamma <= 2 * self.beta:
            raise ConfigurationError(
                f"gamma={self.gamma} must exceed 2*beta={2 * self.beta} "
                "(the uniqueness series diverges otherwise)"
            )
        if self.gamma <= 4 * self.beta:
            warnings.warn(
                f"gamma={self.gamma} <= 4*beta={4 * self.beta}: outside the regime where continuity of the flow is established",
                stacklevel=3,
            )

    def replace(self, **changes) -> "ModelParams":
        return ModelParams(**{**asdict(self), **changes})

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SeriesPolicy:
    """Truncation of exponential power series.

    Summation stops once a rigorous bound on the remaining tail drops below
    ``tail_tol`` times the partial sum, or at ``p_max``.
    """

    p_max: int = 64
    tail_tol: float = 1e-14

    def __post_init__(self):
        if self.p_max < 1:
            raise ConfigurationError(f"p_max must be >= 1, got {self.p_max}")
        if not self.tail_tol > 0:
            raise ConfigurationError(f"tail_tol must be > 0, got {self.tail_tol}")


DEFAULT_POLICY = SeriesPolicy()


class SeriesValue(NamedTuple):
    value: np.ndarray
    tail: np.ndarray
    n_terms: int


def check_amplitude(abs2: np.ndarray, lam: float, time=None) -> None:
    """Raise if ``lam * |u|^2`` reaches the double-precision exponent limit."""
    peak = float(np.max(abs2)) if np.size(abs2) else 0.0
    if lam * peak >= EXP_LIMIT:
        amp = math.sqrt(peak)
        at = "" if time is None else f" at t={time:.6g}"
        raise AmplitudeOverflowError(
            f"exponential overflow{at}: max |u| = {amp:.6g} gives "
            f"{lam:g}*|u|^2 = {lam * peak:.6g} >= {EXP_LIMIT:g}",
            max_amplitude=amp,
            time=time,
        )


def sum_series(term, ratio_bound, policy: SeriesPolicy = DEFAULT_POLICY, start: int = 0) -> SeriesValue:
    """Sum ``term(p)`` for ``p = start..p_max`` with a geometric tail bound.

    ``ratio_bound(p)`` must bound ``term(q+1)/term(q)`` for every ``q >= p``.
    """
    total = 0.0
    tail = np.inf
    p = start
    for p in range(start, policy.p_max + 1):
        t = term(p)
        total = total + t
        rho = ratio_bound(p)
        if np.all(rho < 1):
            tail = t * rho / (1 - rho)
            if np.all(tail <= policy.tail_tol * np.abs(total)):
                return SeriesValue(total, tail, p - start + 1)
        else:
            tail = np.inf
    if not np.all(np.isfinite(tail)):
        raise ConvergenceError(
            f"series tail still growing at p_max={policy.p_max} (term ratio bound >= 1)"
        )
    return SeriesValue(total, tail, p - start + 1)


def _expm1_minus_x(x):
    """``exp(x) - 1 - x`` without cancellation for small ``x``."""
    x = np.asarray(x, dtype=float)
    out = np.expm1(x) - x
    small = np.abs(x) < 0.1
    if np.any(small):
        xs = x[small]
        acc = np.zeros_like(xs)
        term = xs * xs / 2
        for n in range(3, 14):
            acc += term
            term = term * xs / n
        out[small] = acc
    return out


def _grid_abs2(u: SpectralField):
    g = u.basis.synthesize(u.coeffs)
    return g, (g.real**2 + g.imag**2)


def mass(u: SpectralField) -> np.ndarray:
    return 0.5 * np.sum(np.abs(u.coeffs) ** 2, axis=-1)


def kinetic_energy(u: SpectralField) -> np.ndarray:
    return 0.5 * np.sum(u.basis.eigenvalues * np.abs(u.coeffs) ** 2, axis=-1)


def potential_energy(u: SpectralField, beta: float) -> np.ndarray:
    _, a2 = _grid_abs2(u)
    check_amplitude(a2, beta)
    return u.basis.integrate(_expm1_minus_x(beta * a2)) / (2 * beta)


def energy(u: SpectralField, params: ModelParams | float, policy: SeriesPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Hamiltonian ``1/2 |grad u|^2 + (1/2 beta) int (e^{beta|u|^2} - 1 - beta|u|^2)``.

    The potential is integrated in closed form on the grid.  ``policy`` is
    accepted for symmetry with :func:`energy_series`.
    """
    beta = params.beta if isinstance(params, ModelParams) else float(params)
    return kinetic_energy(u) + potential_energy(u, beta)


def lp_power_integrals(a2: np.ndarray, basis, p_max: int) -> np.ndarray:
    """``int |u|^{2p+2}`` for ``p = 0..p_max`` stacked on a new leading axis."""
    out = []
    pw = a2
    for _ in range(p_max + 1):
        out.append(basis.integrate(pw))
        pw = pw * a2
    return np.stack(out)


def energy_series(u: SpectralField, params: ModelParams | float, policy: SeriesPolicy = DEFAULT_POLICY) -> SeriesValue:
    """Energy with the potential expanded as ``sum_{p>=1} beta^p/(p+1)! ||u||_{2p+2}^{2p+2} / 2``."""
    beta = params.beta if isinstance(params, ModelParams) else float(params)
    _, a2 = _grid_abs2(u)
    check_amplitude(a2, beta)
    peak = np.max(a2, axis=(-2, -1))
    basis = u.basis
    pw = {"p": 1, "val": a2 * a2}

    def term(p):
        while pw["p"] < p:
            pw["val"] = pw["val"] * a2
            pw["p"] += 1
        return beta**p / math.factorial(p + 1) * basis.integrate(pw["val"]) / 2

    s = sum_series(term, lambda p: beta * peak / (p + 2), policy, start=1)
    return SeriesValue(kinetic_energy(u) + s.value, s.tail, s.n_terms)


def h_functional(u: SpectralField, gamma: float, policy: SeriesPolicy = DEFAULT_POLICY, seminorm: bool = False) -> SeriesValue:
    """``sum_p gamma^p / p! ||u^{p+1}||_{H^1}^2`` evaluated on the quadrature grid.

    ``grad(u^{p+1}) = (p+1) u^p grad(u)`` is formed pointwise from spectral
    gradients.  ``seminorm=True`` keeps only the gradient part.
    """
    g, a2 = _grid_abs2(u)
    check_amplitude(a2, gamma)
    basis = u.basis
    gx, gy = basis.gradient(u.coeffs, closed=True)
    grad2 = np.abs(gx) ** 2 + np.abs(gy) ** 2
    peak = np.max(a2, axis=(-2, -1))
    a2 = basis.pad_closed(a2)
    state = {"p": 0, "pw": np.ones_like(a2)}

    def term(p):
        while state["p"] < p:
            state["pw"] = state["pw"] * a2
            state["p"] += 1
        w = (p + 1) ** 2 * basis.integrate(state["pw"] * grad2, closed=True)
        if not seminorm:
            w = w + basis.integrate(state["pw"] * a2, closed=True)
        return gamma**p / math.factorial(p) * w

    def ratio(p):
        return gamma * peak / (p + 1) * ((p + 2) / (p + 1)) ** 2

    return sum_series(term, ratio, policy)


def exp_h1_seminorm(u: SpectralField, beta_plus: float) -> np.ndarray:
    """``||grad(e^{beta+|u|^2} - 1)||_{L2}`` using spectral gradients of ``u``."""
    g, a2 = _grid_abs2(u)
    check_amplitude(a2, beta_plus)
    gx, gy = u.basis.gradient(u.coeffs)
    fac = 2 * beta_plus * np.exp(beta_plus * a2)
    dx = fac * np.real(np.conj(g) * gx)
    dy = fac * np.real(np.conj(g) * gy)
    return np.sqrt(u.basis.integrate(dx**2 + dy**2))


def series_constant(beta: float, gamma: float, tol: float = 1e-13) -> tuple[float, bool]:
    """``sum_{k>=1} (beta/gamma)^k sqrt((2k-1)!) / k!`` and whether it converges.

    Consecutive-term ratios increase monotonically to ``2 beta / gamma``, so
    the geometric tail bound with that limit is rigorous.
    """
    if not (beta > 0 and gamma > 0):
        raise DomainError("beta and gamma must be positive")
    rho = 2 * beta / gamma
    if rho >= 1:
        return math.inf, False
    log_r = math.log(beta / gamma)
    total = 0.0
    k = 1
    while True:
        t = math.exp(k * log_r + 0.5 * math.lgamma(2 * k) - math.lgamma(k + 1))
        total += t
        if t * rho / (1 - rho) < tol or k > 100_000:
            return total, True
        k += 1


# -- Legendre pair for the generalized Young inequality ----------------------


def legendre_f(lam: float, x):
    """``f(x) = x exp(lam x^2)``."""
    x = np.asarray(x, dtype=float)
    return x * np.exp(lam * x * x)


def _f_inv_scalar(lam, y, max_iter=100):
    if y < 0 or lam <= 0:
        raise DomainError("legendre_f_inv needs y >= 0 and lam > 0")
    if y == 0:
        return 0.0
    if math.isinf(y):
        return math.inf
    log_y = math.log(y)
    # f(x) >= x and f(sqrt(log y / lam)) >= y once that root is >= 1
    hi = min(y, max(1.0, math.sqrt(max(log_y, 0.0) / lam)))
    lo = 0.0
    x = hi
    for _ in range(max_iter):
        # residual in log space: log x + lam x^2 - log y, increasing in x
        r = math.log(x) + lam * x * x - log_y if x > 0 else -math.inf
        if r > 0:
            hi = x
        else:
            lo = x
        dr = 1.0 / x + 2 * lam * x if x > 0 else math.inf
        step = x - r / dr if math.isfinite(r) else 0.5 * (lo + hi)
        if not (lo < step < hi):
            step = 0.5 * (lo + hi)
        if abs(step - x) <= 4e-16 * max(step, 1e-300) or hi - lo <= 4e-16 * hi:
            return step
        x = step
    raise NumericalError(f"legendre_f_inv did not converge for lam={lam}, y={y}")


def legendre_f_inv(lam: float, y):
    """Inverse of :func:`legendre_f` on ``[0, inf)`` (safeguarded Newton)."""
    if np.ndim(y) == 0:
        return _f_inv_scalar(lam, float(y))
    return np.vectorize(lambda v: _f_inv_scalar(lam, float(v)), otypes=[float])(y)


def legendre_phi(lam: float, x):
    """``Phi(x) = x f^{-1}(x)``, the convex solution of ``Phi(f(x)) = x^2 e^{lam x^2}``."""
    return np.asarray(x, dtype=float) * legendre_f_inv(lam, x)


def _phi_star_scalar(lam, c, y):
    if y < 0 or c <= 0:
        raise DomainError("legendre_phi_star needs y >= 0 and c > 0")
    if y == 0:
        return 0.0

    # parametrise x = f(s): the objective x y - c x f^{-1}(x) becomes f(s) (y - c s).
    # c Phi'(f(s)) = c s (2 + 2 lam s^2) / (1 + 2 lam s^2) lies in [c s, 2 c s],
    # so the maximiser sits in s in [y / 2c, y / c]
    def obj(s):
        with np.errstate(over="ignore"):
            return float(legendre_f(lam, s)) * (y - c * s)

    a, b = y / (2 * c), y / c
    if not math.isfinite(obj(a)):
        return math.inf  # the supremum exceeds the double range
    invphi = (math.sqrt(5) - 1) / 2
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = obj(x1), obj(x2)
    for _ in range(200):
        if b - a <= 1e-15 * b:
            break
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = obj(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = obj(x1)
    return max(f1, f2, obj(a), obj(b))


def legendre_phi_star(lam: float, c: float, y):
    """Convex conjugate of ``c * Phi``: ``sup_x (x y - c Phi(x))``."""
    if np.ndim(y) == 0:
        return _phi_star_scalar(lam, c, float(y))
    return np.vectorize(lambda v: _phi_star_scalar(lam, c, float(v)), otypes=[float])(y)


def theta_interpolation(eps: float, delta: float) -> float:
    """Interpolation exponent of ``L^{2+eps}`` between ``L^2`` and ``L^{2+delta}``."""
    if not (0 < eps < delta < 1):
        raise DomainError(f"need 0 < eps < delta < 1, got eps={eps}, delta={delta}")
    return eps * (4 + 2 * delta) / (delta * (4 + 2 * eps))


def theta_admissible(eps: float, delta: float) -> bool:
    """Whether ``1 + theta <= 1 + delta/2`` (true once ``eps`` is small enough)."""
    return theta_interpolation(eps, delta) <= delta / 2
