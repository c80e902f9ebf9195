"""Twin-trajectory divergence, Yudovich-type envelope bounds and the
integrability lemma chain."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import StepperConfig, deterministic_evolve, twin_evolve
from .exceptions import ConfigurationError, DomainError, UsageError
from .functionals import (
    DEFAULT_POLICY,
    ModelParams,
    exp_h1_seminorm,
    h_functional,
    series_constant,
    theta_interpolation,
)
from .spectral import SpectralField, l2_norm, random_field

LAMBDA_GRID = (0.5, 0.9, 0.99, 0.999)
BETA_PLUS_FACTOR = 1.05


@dataclass(frozen=True)
class LemmaRow:
    lemma: str
    estimate: str
    condition: str
    conclusion: str


class LemmaTable:
    """Gronwall / Osgood / Yudovich comparison, rendered by the CLI."""

    ROWS = (
        LemmaRow("gronwall", "y' <= f(t) y", "f in L^1", "y(t) <= y(0) exp(int f)"),
        LemmaRow(
            "osgood",
            "y' <= f(t) w(y)",
            "int_0 dr / w(r) = infinity",
            "y(0) = 0 implies y = 0",
        ),
        LemmaRow(
            "yudovich",
            "y' <= C(lambda) f(t) y^lambda, lambda -> 1-",
            "C(lambda) sqrt(1 - lambda) int f bounded",
            "y(t) <= (y(0)^(1-lambda) + C sqrt(1-lambda) int f)^(1/(1-lambda))",
        ),
    )

    def __init__(self):
        self.rows = list(self.ROWS)

    def __len__(self):
        return len(self.rows)

    def render(self) -> str:
        cols = ("lemma", "estimate", "condition", "conclusion")
        table = [cols] + [tuple(getattr(r, c) for c in cols) for r in self.rows]
        widths = [max(len(row[i]) for row in table) for i in range(4)]
        lines = [" | ".join(cell.ljust(w) for cell, w in zip(row, widths)) for row in table]
        lines.insert(1, "-+-".join("-" * w for w in widths))
        return "\n".join(lines)


def _cumtrapz(y, t):
    out = np.zeros_like(y, dtype=float)
    out[1:] = np.cumsum(0.5 * np.diff(t) * (y[1:] + y[:-1]))
    return out


@dataclass
class YudovichReport:
    eps: float
    times: np.ndarray
    z: np.ndarray
    gradz: np.ndarray
    h1diff: np.ndarray
    w1diff: np.ndarray
    g: np.ndarray
    G: np.ndarray
    gw: np.ndarray
    Gw: np.ndarray
    u_hdot1: np.ndarray
    v_hdot1: np.ndarray
    u_exp: np.ndarray
    v_exp: np.ndarray
    beta_plus: float
    delta: float
    bounds: dict = field(default_factory=dict)

    @property
    def sup_l2(self) -> float:
        return float(np.max(self.z))

    @property
    def sup_grad(self) -> float:
        return float(np.max(self.gradz))

    @property
    def sup_h1(self) -> float:
        return float(np.max(self.h1diff))

    def summary(self) -> dict:
        out = {
            "eps": self.eps,
            "z0": float(self.z[0]),
            "sup_l2": self.sup_l2,
            "sup_grad": self.sup_grad,
            "sup_h1": self.sup_h1,
            "G_T": float(self.G[-1]),
        }
        for lam, b in sorted(self.bounds.items()):
            out[f"C3_{lam}"] = b.C3
            out[f"fraction_{lam}"] = b.fraction
        return out

    def rows(self):
        """CSV header and rows ``t, z, gradz, g, G, bound_<lambda>...``."""
        lams = sorted(self.bounds)
        header = ["t", "z", "gradz", "h1diff", "g", "G"] + [f"bound_{lam}" for lam in lams]
        rows = []
        for i, t in enumerate(self.times):
            rows.append(
                [t, self.z[i], self.gradz[i], self.h1diff[i], self.g[i], self.G[i]]
                + [self.bounds[lam].bound[i] for lam in lams]
            )
        return header, rows


def _assemble(eps, records, beta_plus, delta) -> YudovichReport:
    t = np.array([r.t for r in records])
    col = {k: np.array([float(r.values[k]) for r in records]) for k in records[0].values}
    g = (1 + col["u_hdot1"] + col["v_hdot1"]) * (col["u_exp"] + col["v_exp"])
    gw = (1 + col["diff_w1"] ** (1 + delta / 2)) * (col["u_exp"] + col["v_exp"])
    return YudovichReport(
        eps,
        t,
        col["diff_l2"],
        col["diff_grad"],
        col["diff_h1"],
        col["diff_w1"],
        g,
        _cumtrapz(g, t),
        gw,
        _cumtrapz(gw, t),
        col["u_hdot1"],
        col["v_hdot1"],
        col["u_exp"],
        col["v_exp"],
        beta_plus,
        delta,
    )


def default_datum(basis, amplitude: float = 0.3, seed: int = 0) -> SpectralField:
    """Smooth reproducible datum: random modes with ``(1+lambda)^{-3/2}`` decay, ``L2`` norm ``amplitude``."""
    u = random_field(basis, np.random.default_rng(seed), decay=3.0)
    return u * (amplitude / float(l2_norm(u)))


def default_direction(basis, seed: int = 1) -> SpectralField:
    phi = random_field(basis, np.random.default_rng(seed), decay=3.0)
    return phi / float(l2_norm(phi))


def divergence_experiment(
    u0: SpectralField,
    phi: SpectralField,
    eps_list,
    T: float,
    config: StepperConfig,
    params: ModelParams,
    beta_plus: float | None = None,
    lambdas=LAMBDA_GRID,
) -> list[YudovichReport]:
    """Run ``twin_evolve(u0, u0 + eps phi)`` for each ``eps`` and attach fitted bounds."""
    if abs(float(l2_norm(phi)) - 1.0) > 1e-10:
        raise UsageError(f"perturbation direction must have unit L2 norm, got {float(l2_norm(phi))}")
    if T <= 0:
        raise ConfigurationError("T must be > 0")
    beta_plus = BETA_PLUS_FACTOR * params.beta if beta_plus is None else beta_plus
    reports = []
    for eps in eps_list:
        v0 = u0 + phi * eps
        _, _, rec = twin_evolve(u0, v0, T, config, params, beta_plus)
        rep = _assemble(float(eps), rec, beta_plus, params.delta)
        for lam in lambdas:
            rep.bounds[lam] = yudovich_bound(rep, lam)
        reports.append(rep)
    return reports


@dataclass
class BoundCurve:
    lam: float
    C3: float
    bound: np.ndarray
    fraction: float
    theta: float
    C_grad: float
    grad_bound: np.ndarray
    grad_fraction: float


def fit_c3(report: YudovichReport, lam: float, factor: float = 2.0) -> float:
    """``factor * max (z^2)' / (z^{2 lam} g)`` with forward differences and left-point values."""
    y = report.z**2
    dt = np.diff(report.times)
    dy = np.diff(y)
    den = y[:-1] ** lam * report.g[:-1]
    ok = (den > 0) & (dy > 0)
    if not ok.any():
        return 0.0
    return float(factor * np.max(dy[ok] / (dt[ok] * den[ok])))


def _fit_grad(report, theta, f_eps, factor=2.0):
    w = report.gradz**theta
    dw = np.diff(w)
    den = theta * math.sqrt(f_eps) * report.gw[:-1] * np.diff(report.times)
    ok = (den > 0) & (dw > 0)
    if not ok.any():
        return 0.0
    return float(factor * np.max(dw[ok] / den[ok]))


def yudovich_bound(
    report: YudovichReport,
    lam: float,
    C3_fit: float | None = None,
    eps_theta: float | None = None,
    C_grad: float | None = None,
    rtol: float = 1e-12,
) -> BoundCurve:
    """Evaluate ``B(t) = (z0^{2(1-lam)} + C3 sqrt(1-lam) G(t))^{1/(1-lam)}``.

    Also evaluates the gradient-level envelope
    ``(w0^theta + C theta sqrt(f(eps)) Gw(t))^{1/theta}`` with
    ``f(eps) = (4 + 2 eps) / eps`` and ``theta = theta_interpolation(eps, delta)``.
    Missing constants are self-calibrated at twice the largest observed ratio.
    ``fraction`` is the share of samples with ``z^2 <= B`` (resp. ``w <= B_grad``).
    """
    if not 0 < lam < 1:
        raise DomainError(f"lambda must lie in (0, 1), got {lam}")
    C3 = fit_c3(report, lam) if C3_fit is None else float(C3_fit)
    p = 1.0 - lam
    base = report.z[0] ** (2 * p) + C3 * math.sqrt(p) * report.G
    with np.errstate(over="ignore"):
        bound = base ** (1.0 / p)
    y = report.z**2
    frac = float(np.mean(y <= bound * (1 + rtol)))
    eps_theta = report.delta / 5 if eps_theta is None else eps_theta
    theta = theta_interpolation(eps_theta, report.delta)
    f_eps = (4 + 2 * eps_theta) / eps_theta
    Cg = _fit_grad(report, theta, f_eps) if C_grad is None else float(C_grad)
    gb = (report.gradz[0] ** theta + Cg * theta * math.sqrt(f_eps) * report.Gw) ** (1.0 / theta)
    gfrac = float(np.mean(report.gradz <= gb * (1 + rtol)))
    return BoundCurve(lam, C3, bound, frac, theta, Cg, gb, gfrac)


# -- integrability lemma --------------------------------------------------------


@dataclass
class LemmaReport:
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    integral: float
    integral_rhs: float
    worst_ratio: float
    constant: float
    holds: bool

    def to_record(self) -> dict:
        return {
            "t": self.times.tolist(),
            "lhs": self.lhs.tolist(),
            "rhs": self.rhs.tolist(),
            "integral": self.integral,
            "integral_rhs": self.integral_rhs,
            "worst_ratio": self.worst_ratio,
            "series_constant": self.constant,
            "holds": self.holds,
        }


def record_trajectory(u0: SpectralField, T: float, config: StepperConfig, params: ModelParams):
    """Deterministic trajectory sampled at the configured stride as ``(times, fields)``."""
    _, rec = deterministic_evolve(u0, T, config, params, observer=lambda u, p: {"u": u})
    return np.array([r.t for r in rec]), [r.values["u"] for r in rec]


def lemma_integrability_check(trajectory, beta_plus: float, gamma: float, T: float | None = None, rtol: float = 1e-10) -> LemmaReport:
    """Check ``||e^{b+|u|^2}-1||_{H1dot} <= S(b+, gamma) sqrt(gamma) sqrt(h_H1dot(u))`` sample by sample.

    ``trajectory`` is ``(times, fields)``.  Also integrates the squared left
    side over ``[0, T]``.
    """
    if not gamma > 2 * beta_plus:
        raise DomainError(f"need gamma > 2 beta+ for a convergent series, got gamma={gamma}, beta+={beta_plus}")
    times, fields = trajectory
    times = np.asarray(times, dtype=float)
    if T is not None:
        keep = times <= T + 1e-12
        times = times[keep]
        fields = [f for f, k in zip(fields, keep) if k]
    S, conv = series_constant(beta_plus, gamma)
    if not conv:
        raise DomainError("series constant did not converge")
    lhs = np.array([float(exp_h1_seminorm(u, beta_plus)) for u in fields])
    hv = np.array([float(h_functional(u, gamma, DEFAULT_POLICY, seminorm=True).value) for u in fields])
    rhs = S * math.sqrt(gamma) * np.sqrt(hv)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rhs > 0, lhs / rhs, np.where(lhs > 0, np.inf, 0.0))
    holds = bool(np.all(lhs <= rhs * (1 + rtol) + 1e-300))
    return LemmaReport(
        times,
        lhs,
        rhs,
        float(_cumtrapz(lhs**2, times)[-1]) if times.size > 1 else 0.0,
        float(_cumtrapz(rhs**2, times)[-1]) if times.size > 1 else 0.0,
        float(np.max(ratio)) if ratio.size else 0.0,
        S,
        holds,
    )
