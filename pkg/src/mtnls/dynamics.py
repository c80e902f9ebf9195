"""Time integration of the Galerkin flow and the fluctuation-dissipation SDE.

Schemes
-------
``strang-split``
    Deterministic Strang splitting: exact linear phase, exact pointwise
    nonlinear phase rotation on the grid, projection.
``exp-euler-maruyama``
    ``v = u + h (-i F(u) - alpha L(u))``, rotate by ``exp(-i lambda h)``, then add
    the Gaussian increment ``sqrt(alpha) a_n (N(0, h/2) + i N(0, h/2))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dissipation import _g_delta_coeffs
from .exceptions import AmplitudeOverflowError, ConfigurationError, UsageError
from .functionals import EXP_LIMIT, ModelParams, check_amplitude
from .spectral import SpectralBasis, SpectralField, laplacian_symbol

SCHEMES = ("strang-split", "exp-euler-maruyama")
DRIFTS = ("full", "ou")


@dataclass(frozen=True, eq=False)
class NoiseSpec:
    """Per-mode noise amplitudes ``a_n`` aligned with the basis mode table."""

    basis: SpectralBasis
    coeffs: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.coeffs, dtype=float)
        if a.shape != (self.basis.n_modes,):
            raise UsageError(f"noise vector has shape {a.shape}, expected ({self.basis.n_modes},)")
        if np.any(a < 0) or not np.all(np.isfinite(a)):
            raise ConfigurationError("noise coefficients must be finite and >= 0")
        a.setflags(write=False)
        object.__setattr__(self, "coeffs", a)

    @classmethod
    def from_profile(cls, basis, a0=1.0, r=1.5, scale=1.0, overrides=None):
        """``a_n = scale * a0 * (1 + lambda_n)^(-r)``, with optional ``{(k1, k2): a}`` overrides."""
        a = a0 * (1.0 + basis.eigenvalues) ** (-r)
        if overrides:
            from .spectral import mode_index

            for k, v in overrides.items():
                a[mode_index(basis, k)] = v
        return cls(basis, scale * a)

    def scaled(self, lam: float) -> "NoiseSpec":
        if not lam > 0:
            raise ConfigurationError(f"noise scale must be > 0, got {lam}")
        return NoiseSpec(self.basis, lam * self.coeffs)

    def A(self, s: float) -> float:
        """Spectral moment ``sum_n lambda_n^s a_n^2``."""
        lam = self.basis.eigenvalues
        w = np.ones_like(lam) if s == 0 else lam**s
        return float(np.sum(w * self.coeffs**2))

    @property
    def A0(self) -> float:
        return self.A(0)

    @property
    def A_half(self) -> float:
        return self.A(0.5)

    @property
    def A1(self) -> float:
        return self.A(1)

    def digest(self) -> str:
        import hashlib

        return hashlib.sha256(np.ascontiguousarray(self.coeffs).tobytes()).hexdigest()[:16]


@dataclass(frozen=True)
class StepperConfig:
    scheme: str = "strang-split"
    h: float = 1e-3
    seed: int = 0
    stride: int = 1
    drift: str = "full"
    substep: str = "projected-rk4"

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ConfigurationError(f"step size h must be > 0, got {self.h}")
        if self.stride < 1:
            raise ConfigurationError(f"stride must be >= 1, got {self.stride}")
        if self.drift not in DRIFTS:
            raise ConfigurationError(f"drift must be one of {DRIFTS}, got {self.drift!r}")
        if self.substep not in _STRANG:
            raise ConfigurationError(f"substep must be one of {tuple(_STRANG)}, got {self.substep!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError("seed must fit in an unsigned 64-bit integer")


@dataclass
class ObservableRecord:
    t: float
    values: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"t": float(self.t)}
        for k, v in self.values.items():
            out[k] = np.asarray(v).tolist()
        return out


# -- deterministic flow ----------------------------------------------------------


def _strang_rotation(basis, c, h, beta):
    half = np.exp(-0.5j * h * basis.eigenvalues)
    c = c * half
    g = basis.synthesize(c)
    a2 = g.real**2 + g.imag**2
    check_amplitude(a2, beta)
    g = g * np.exp(-1j * h * np.expm1(beta * a2))
    return basis.analyze(g) * half


def _nl_rhs(basis, c, beta):
    g = basis.synthesize(c)
    a2 = g.real**2 + g.imag**2
    check_amplitude(a2, beta)
    return -1j * basis.analyze(np.expm1(beta * a2) * g)


def _strang_rk4(basis, c, h, beta):
    # nonlinear substep: one RK4 step of u' = -i P_N((e^{beta|u|^2}-1) u)
    half = np.exp(-0.5j * h * basis.eigenvalues)
    c = c * half
    k1 = _nl_rhs(basis, c, beta)
    k2 = _nl_rhs(basis, c + 0.5 * h * k1, beta)
    k3 = _nl_rhs(basis, c + 0.5 * h * k2, beta)
    k4 = _nl_rhs(basis, c + h * k3, beta)
    c = c + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    return c * half


_STRANG = {"projected-rk4": _strang_rk4, "grid-rotation": _strang_rotation}


def deterministic_step(u: SpectralField, h: float, params: ModelParams | float, substep: str = "projected-rk4") -> SpectralField:
    """One Strang step of ``du/dt = i(Lap u - P_N((e^{beta|u|^2}-1) u))``.

    The linear half-steps are exact phases.  The nonlinear substep is either
    one RK4 step of the projected nonlinear ODE (``projected-rk4``, keeps the
    scheme second order) or the pointwise phase rotation on the grid followed
    by projection (``grid-rotation``).  The rotation is modulus-preserving but
    ``P(e^{-ihV} u)`` differs from the projected flow at ``O(h^2)`` per step, so
    that variant is only first order once out-of-band content appears.  Both are
    exact on single modes and constant fields.
    """
    if substep not in _STRANG:
        raise ConfigurationError(f"substep must be one of {tuple(_STRANG)}, got {substep!r}")
    beta = params.beta if isinstance(params, ModelParams) else float(params)
    return SpectralField(u.basis, _STRANG[substep](u.basis, u.coeffs, h, beta))


def _euler_coeffs(basis, c, h, beta):
    g = basis.synthesize(c)
    a2 = g.real**2 + g.imag**2
    check_amplitude(a2, beta)
    nl = basis.analyze(np.expm1(beta * a2) * g)
    return (c - 1j * h * nl) * np.exp(-1j * h * basis.eigenvalues)


def default_observer(u: SpectralField, params: ModelParams) -> dict:
    from .functionals import energy, mass
    from .spectral import sobolev_norm

    return {"M": mass(u), "E": energy(u, params), "H1": sobolev_norm(u, 1)}


def _n_steps(T, h):
    n = max(1, int(math.ceil(abs(T) / h - 1e-9)))
    return n, abs(T) / n


def deterministic_evolve(u0: SpectralField, T: float, config: StepperConfig, params: ModelParams, observer=default_observer):
    """Iterate the deterministic scheme to time ``T`` (negative ``T`` allowed).

    The step is shrunk so that an integer number of steps lands on ``T``.
    Backward evolution uses ``phi_{-T}(u) = conj(phi_T(conj u))``.

    Returns the final field and the list of :class:`ObservableRecord`.
    """
    if T == 0:
        raise ConfigurationError("T must be nonzero")
    backward = T < 0
    n, h = _n_steps(T, config.h)
    sign = -1.0 if backward else 1.0
    u = u0.conj() if backward else u0
    step = _STRANG[config.substep] if config.scheme == "strang-split" else _euler_coeffs
    c = u.coeffs
    records = []

    def emit(i, c):
        if observer is None:
            return
        f = SpectralField(u0.basis, c)
        t = sign * i * h
        try:
            values = observer(f.conj() if backward else f, params)
        except AmplitudeOverflowError as exc:
            if exc.time is not None:
                raise
            raise AmplitudeOverflowError(f"blow-up at t={t:.6g}: {exc}", max_amplitude=exc.max_amplitude, time=t) from exc
        records.append(ObservableRecord(t, values))

    emit(0, c)
    for i in range(1, n + 1):
        try:
            c = step(u0.basis, c, h, params.beta)
        except AmplitudeOverflowError as exc:
            t = sign * i * h
            raise AmplitudeOverflowError(
                f"blow-up at t={t:.6g}: {exc}", max_amplitude=exc.max_amplitude, time=t
            ) from exc
        if i % config.stride == 0 or i == n:
            emit(i, c)
    final = SpectralField(u0.basis, c)
    return (final.conj() if backward else final), records


# -- stochastic convolution and fluctuation-dissipation step ------------------------


def complex_normals(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard circular complex normals, ``E|z|^2 = 1``."""
    x = rng.standard_normal(tuple(shape) + (2,))
    return (x[..., 0] + 1j * x[..., 1]) * math.sqrt(0.5)


def ou_convolution_step(z: SpectralField, h: float, alpha: float, noise: NoiseSpec, rng) -> SpectralField:
    """Exact update of ``dz = i(Lap + 1) z dt + sqrt(alpha) dW_N``."""
    rot = np.exp(1j * (1.0 - z.basis.eigenvalues) * h)
    xi = math.sqrt(alpha * h) * noise.coeffs * complex_normals(rng, z.coeffs.shape)
    return SpectralField(z.basis, z.coeffs * rot + xi)


def drift_coeffs(basis, c, params: ModelParams, drift: str = "full"):
    """``-i F(u) - alpha L(u)`` in coefficient space, batched.

    Returns ``(D, parts, bad)`` where ``bad`` flags rows whose exponentials
    would overflow (their drift is set to zero).
    """
    if drift == "ou":
        return -params.alpha * c, {"L": c}, np.zeros(c.shape[:-1], dtype=bool)
    g = basis.synthesize(c)
    a2 = g.real**2 + g.imag**2
    lam_max = max(params.beta, params.gamma)
    bad = np.max(a2, axis=(-2, -1)) * lam_max >= EXP_LIMIT
    if np.any(bad):
        a2 = np.where(bad[..., None, None], 0.0, a2)
        g = np.where(bad[..., None, None], 0.0, g)
    eb = np.exp(params.beta * a2)
    fb = basis.analyze(eb * g)
    fg = basis.analyze(np.exp(params.gamma * a2) * g)
    expo = params.gamma * params.C1 * np.sum(np.abs(fb) ** 2, axis=-1)
    bad = bad | (expo >= EXP_LIMIT)
    pref = np.exp(np.where(bad, 0.0, expo))
    gd, _ = _g_delta_coeffs(basis, c, params.delta)
    L = (params.C * pref)[..., None] * (c + fb) + params.C2 * fg + gd
    nl = basis.analyze(np.expm1(params.beta * a2) * g)
    D = -1j * nl - params.alpha * L
    if np.any(bad):
        D = np.where(bad[..., None], 0.0, D)
    return D, {"L": L, "gdelta": gd, "prefactor": pref, "a2": a2, "F": nl}, bad


def fd_step(u: SpectralField, h: float, params: ModelParams, noise: NoiseSpec, rng, drift: str = "full") -> SpectralField:
    """One exponential Euler-Maruyama step of the fluctuation-dissipation SDE."""
    if noise.basis is not u.basis:
        raise UsageError("noise and field live on different bases")
    D, _, bad = drift_coeffs(u.basis, u.coeffs, params, drift)
    if np.any(bad):
        check_amplitude(np.abs(u.basis.synthesize(u.coeffs)) ** 2, max(params.beta, params.gamma))
        raise AmplitudeOverflowError("dissipation prefactor overflow")
    xi = math.sqrt(params.alpha * h) * noise.coeffs * complex_normals(rng, u.coeffs.shape)
    return SpectralField(u.basis, fd_update(u.basis, u.coeffs, D, h, xi))


def fd_update(basis, c, D, h, xi):
    return (c + h * D) * np.exp(-1j * h * basis.eigenvalues) + xi


def stability_heuristic(u: SpectralField, h: float, params: ModelParams) -> float:
    """``h * alpha * ||L(u)|| / ||u||``: an effective damping-rate times step size."""
    D, parts, _ = drift_coeffs(u.basis, u.coeffs, params)
    nu = np.sqrt(np.sum(np.abs(u.coeffs) ** 2, axis=-1))
    nl = np.sqrt(np.sum(np.abs(parts["L"]) ** 2, axis=-1))
    return float(np.max(h * params.alpha * nl / np.maximum(nu, 1e-300)))


# -- twin trajectories ---------------------------------------------------------


def twin_observer(beta_plus: float, delta: float):
    """Observer emitting difference norms and the quantities entering the Yudovich bound."""
    from .functionals import exp_h1_seminorm
    from .spectral import homogeneous_seminorm, l2_norm, sobolev_norm

    def observe(pair: SpectralField, params):
        u = SpectralField(pair.basis, pair.coeffs[0])
        v = SpectralField(pair.basis, pair.coeffs[1])
        d = u - v
        gx, gy = d.basis.gradient(d.coeffs, closed=True)
        grad_mod = np.sqrt(np.abs(gx) ** 2 + np.abs(gy) ** 2)
        gd = d.basis.pad_closed(d.basis.synthesize(d.coeffs))
        w1 = d.basis.integrate(np.abs(gd) ** (2 + delta) + grad_mod ** (2 + delta), closed=True) ** (1 / (2 + delta))
        return {
            "diff_l2": l2_norm(d),
            "diff_grad": homogeneous_seminorm(d, 1),
            "diff_h1": sobolev_norm(d, 1),
            "diff_w1": w1,
            "u_h1": sobolev_norm(u, 1),
            "v_h1": sobolev_norm(v, 1),
            "u_hdot1": homogeneous_seminorm(u, 1),
            "v_hdot1": homogeneous_seminorm(v, 1),
            "u_exp": exp_h1_seminorm(u, beta_plus),
            "v_exp": exp_h1_seminorm(v, beta_plus),
        }

    return observe


def twin_evolve(u0: SpectralField, v0: SpectralField, T: float, config: StepperConfig, params: ModelParams, beta_plus=None):
    """Co-evolve two deterministic trajectories with identical steps.

    Returns ``(u_T, v_T, records)``; the records carry difference norms and
    the exponential seminorms at ``beta_plus`` (default ``1.05 beta``).
    """
    if u0.basis is not v0.basis:
        raise UsageError("twin trajectories must share a basis")
    beta_plus = 1.05 * params.beta if beta_plus is None else beta_plus
    pair = SpectralField(u0.basis, np.stack([u0.coeffs, v0.coeffs]))
    final, records = deterministic_evolve(pair, T, config, params, twin_observer(beta_plus, params.delta))
    return (
        SpectralField(u0.basis, final.coeffs[0]),
        SpectralField(u0.basis, final.coeffs[1]),
        records,
    )


def single_mode_solution(basis: SpectralBasis, k, c: complex, beta: float, t: float) -> SpectralField:
    """Exact torus solution ``c exp(-i(lambda_k + e^{beta rho} - 1) t) e_k`` with ``rho = |c|^2 / 4 pi^2``."""
    from .spectral import TORUS, mode_index

    if basis.kind != TORUS:
        raise UsageError("the rotating single-mode solution needs the torus basis")
    n = mode_index(basis, k)
    rho = abs(c) ** 2 / basis.area
    out = np.zeros(basis.n_modes, dtype=complex)
    if t == 0:
        out[n] = c
        return SpectralField(basis, out)
    check_amplitude(np.array([rho]), beta)
    out[n] = c * np.exp(-1j * (basis.eigenvalues[n] + math.expm1(beta * rho)) * t)
    return SpectralField(basis, out)


def constant_field_solution(basis: SpectralBasis, c: complex, beta: float, t: float) -> SpectralField:
    """Exact torus solution for the constant field of value ``c``."""
    from .spectral import TORUS

    if basis.kind != TORUS:
        raise UsageError("constant fields exist only on the torus")
    return single_mode_solution(basis, (0, 0), c * 2 * math.pi, beta, t)


def split_consistency(u0: SpectralField, T: float, h: float, params: ModelParams, noise: NoiseSpec, seed: int = 0) -> float:
    """Debug mode: integrate ``u`` directly and as ``v + z`` with the same normals.

    ``z`` follows the exact stochastic convolution ``dz = i(Lap + 1) z dt + sqrt(alpha) dW``
    and ``v = u - z`` obeys ``dv = (i Lap v - i z + D(v + z)) dt``, stepped with
    exponential Euler.  Returns ``max_t ||u - (v + z)||_{L2}``, which is ``O(h)``.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    basis = u0.basis
    n, h = _n_steps(T, h)
    rot = np.exp(-1j * h * basis.eigenvalues)
    zrot = np.exp(1j * (1.0 - basis.eigenvalues) * h)
    amp = math.sqrt(params.alpha * h) * noise.coeffs
    u = np.array(u0.coeffs, dtype=complex)
    z = np.zeros_like(u)
    v = u.copy()
    worst = 0.0
    for _ in range(n):
        xi = amp * complex_normals(rng, u.shape)
        Du, _, bad_u = drift_coeffs(basis, u, params)
        Dv, _, bad_v = drift_coeffs(basis, v + z, params)
        if np.any(bad_u) or np.any(bad_v):
            raise AmplitudeOverflowError("overflow in split consistency run")
        u = (u + h * Du) * rot + xi
        v = (v + h * (Dv - 1j * z)) * rot
        z = z * zrot + xi
        worst = max(worst, float(np.sqrt(np.sum(np.abs(u - v - z) ** 2))))
    return worst
