"""Laplacian eigenbases on flat 2-D domains, transforms and norms.

Two bases are provided:

``torus-fourier``
    ``e_k(x) = exp(i k.x) / (2 pi)`` on ``[0, 2 pi)^2`` with ``max|k_i| <= K``.
``dirichlet-sine``
    ``e_k(x) = (2 / pi) sin(k1 x1) sin(k2 x2)`` on ``[0, pi]^2`` with
    ``1 <= k_i <= K``.

Both are L2-orthonormal, so coefficient l2 norms equal L2 norms.  Fields may
carry leading batch axes; the mode axis is always the last one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import fft as sfft

from .exceptions import ConfigurationError, UsageError

TORUS = "torus-fourier"
SINE = "dirichlet-sine"
KINDS = (TORUS, SINE)
KIND_CODES = {TORUS: 0, SINE: 1}


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Eigenpairs of ``-Laplacian`` and the quadrature grid used for nonlinearities.

    Build with :func:`make_basis`; the constructor does no validation.
    """

    kind: str
    cutoff: int
    oversample: int
    modes: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    n_grid: int

    @property
    def n_modes(self) -> int:
        return len(self.eigenvalues)

    @property
    def area(self) -> float:
        return 4 * np.pi**2 if self.kind == TORUS else np.pi**2

    @property
    def grid_shape(self) -> tuple[int, int]:
        if self.kind == TORUS:
            return (self.n_grid, self.n_grid)
        return (self.n_grid - 1, self.n_grid - 1)

    @property
    def quadrature_weight(self) -> float:
        """Uniform cell weight; the sine grid omits the (zero) boundary nodes."""
        if self.kind == TORUS:
            return (2 * np.pi / self.n_grid) ** 2
        return (np.pi / self.n_grid) ** 2

    @property
    def has_zero_mode(self) -> bool:
        return self.kind == TORUS

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid of quadrature nodes, ``indexing="ij"``."""
        m = self.n_grid
        if self.kind == TORUS:
            x = 2 * np.pi * np.arange(m) / m
        else:
            x = np.pi * np.arange(1, m) / m
        return np.meshgrid(x, x, indexing="ij")

    def descriptor(self) -> dict:
        return {
            "kind": self.kind,
            "K": self.cutoff,
            "q": self.oversample,
            "n_modes": self.n_modes,
            "n_grid": self.n_grid,
        }

    # -- raw array transforms (batched over leading axes) --------------------

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        """Evaluate ``sum_n c_n e_n`` at the quadrature nodes."""
        coeffs = np.asarray(coeffs)
        if self.kind == TORUS:
            buf = self._scatter_torus(coeffs)
            return sfft.ifft2(buf, axes=(-2, -1)) * (self.n_grid**2 / (2 * np.pi))
        return _sine_synth2(self._scatter_sine(coeffs), self.n_grid) * (2 / np.pi)

    def analyze(self, values: np.ndarray) -> np.ndarray:
        """Quadrature inner products with every ``e_n`` in the mode table."""
        values = np.asarray(values)
        if values.shape[-2:] != self.grid_shape:
            raise UsageError(
                f"grid shape {values.shape[-2:]} does not match basis grid {self.grid_shape}"
            )
        m = self.n_grid
        if self.kind == TORUS:
            spec = sfft.fft2(values, axes=(-2, -1)) * (2 * np.pi / m**2)
            return spec[..., self._i1, self._i2]
        spec = sfft.dstn(values.astype(complex, copy=False), type=1, axes=(-2, -1))
        spec = spec * (np.pi / (2 * m**2))
        return spec[..., self._i1, self._i2]

    def gradient(self, coeffs: np.ndarray, closed: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """Grid values of the two partial derivatives, computed spectrally.

        With ``closed=True`` the sine basis evaluates on the closed grid
        ``j = 0..m``.  Derivatives of sine modes are cosine series that do not
        vanish on the boundary, so integrals of gradient data need the closed
        trapezoid rule to stay exact.
        """
        coeffs = np.asarray(coeffs)
        k1 = self.modes[:, 0]
        k2 = self.modes[:, 1]
        if self.kind == TORUS:
            return self.synthesize(1j * k1 * coeffs), self.synthesize(1j * k2 * coeffs)
        m = self.n_grid
        d1 = _synth_axis(self._scatter_sine(k1 * coeffs), m, axis=-2, cosine=True, closed=closed)
        d1 = _synth_axis(d1, m, axis=-1, cosine=False, closed=closed)
        d2 = _synth_axis(self._scatter_sine(k2 * coeffs), m, axis=-2, cosine=False, closed=closed)
        d2 = _synth_axis(d2, m, axis=-1, cosine=True, closed=closed)
        return d1 * (2 / np.pi), d2 * (2 / np.pi)

    def pad_closed(self, values: np.ndarray) -> np.ndarray:
        """Extend interior sine-grid values by the zero boundary; identity on the torus."""
        if self.kind == TORUS:
            return values
        pad = [(0, 0)] * (np.ndim(values) - 2) + [(1, 1), (1, 1)]
        return np.pad(values, pad)

    def integrate(self, values: np.ndarray, closed: bool = False) -> np.ndarray:
        """Quadrature of a grid function over the domain.

        ``closed=True`` takes sine-basis data on the closed grid and applies the
        trapezoid rule; on the torus it changes nothing.
        """
        if closed and self.kind != TORUS:
            w = np.ones(self.n_grid + 1)
            w[0] = w[-1] = 0.5
            return np.einsum("...ij,i,j->...", values, w, w) * self.quadrature_weight
        return np.sum(values, axis=(-2, -1)) * self.quadrature_weight

    @cached_property
    def negative_modes(self) -> np.ndarray:
        """Index of ``-k`` for each mode (torus only); used for conjugation."""
        lookup = {tuple(k): n for n, k in enumerate(self.modes)}
        return np.array([lookup[(-a, -b)] for a, b in self.modes])

    def mode_mask(self, cutoff: int) -> np.ndarray:
        return np.max(np.abs(self.modes), axis=1) <= cutoff

    def _scatter_torus(self, coeffs):
        m = self.n_grid
        buf = np.zeros(coeffs.shape[:-1] + (m, m), dtype=complex)
        buf[..., self._i1, self._i2] = coeffs
        return buf

    def _scatter_sine(self, coeffs):
        k = self.cutoff
        buf = np.zeros(coeffs.shape[:-1] + (k, k), dtype=complex)
        buf[..., self.modes[:, 0] - 1, self.modes[:, 1] - 1] = coeffs
        return buf

    @property
    def _i1(self):
        if self.kind == TORUS:
            return self.modes[:, 0] % self.n_grid
        return self.modes[:, 0] - 1

    @property
    def _i2(self):
        if self.kind == TORUS:
            return self.modes[:, 1] % self.n_grid
        return self.modes[:, 1] - 1


def _synth_axis(a, m, axis, cosine, closed=False):
    """Evaluate sum_{k=1..K} a_k s(pi k j / m) along one axis.

    ``s`` is sin or cos; nodes are j = 1..m-1, or j = 0..m when ``closed``.
    DST-I/DCT-I include the factor 2 on interior terms.
    """
    a = np.moveaxis(a, axis, -1)
    n_k = a.shape[-1]
    if cosine:
        buf = np.zeros(a.shape[:-1] + (m + 1,), dtype=complex)
        buf[..., 1 : n_k + 1] = a
        out = sfft.dct(buf, type=1, axis=-1) / 2
        if not closed:
            out = out[..., 1:m]
    else:
        buf = np.zeros(a.shape[:-1] + (m - 1,), dtype=complex)
        buf[..., :n_k] = a
        out = sfft.dst(buf, type=1, axis=-1) / 2
        if closed:
            out = np.pad(out, [(0, 0)] * (out.ndim - 1) + [(1, 1)])
    return np.moveaxis(out, -1, axis)


def _sine_synth2(a, m):
    return _synth_axis(_synth_axis(a, m, -2, False), m, -1, False)


def make_basis(kind: str = TORUS, K: int = 8, q: int = 2) -> SpectralBasis:
    """Build a basis with per-axis cutoff ``K`` and oversampling factor ``q``.

    Examples
    --------
    >>> make_basis("torus-fourier", 1).eigenvalues.tolist()
    [0.0, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0]
    """
    if kind not in KINDS:
        raise ConfigurationError(f"unknown basis kind {kind!r}; expected one of {KINDS}")
    if isinstance(K, bool) or int(K) != K:
        raise ConfigurationError(f"cutoff K must be an integer, got {K!r}")
    if isinstance(q, bool) or int(q) != q:
        raise ConfigurationError(f"oversample q must be an integer, got {q!r}")
    K, q = int(K), int(q)
    if q < 2:
        raise ConfigurationError(f"oversample q must be >= 2, got {q}")
    if kind == TORUS:
        # K = 0 (constant mode only) is accepted on the torus
        if K < 0:
            raise ConfigurationError(f"cutoff K must be >= 0, got {K}")
        r = np.arange(-K, K + 1)
    else:
        if K < 1:
            raise ConfigurationError(f"cutoff K must be >= 1 for the sine basis, got {K}")
        r = np.arange(1, K + 1)
    k1, k2 = (a.ravel() for a in np.meshgrid(r, r, indexing="ij"))
    lam = (k1**2 + k2**2).astype(float)
    order = np.lexsort((k2, k1, lam))
    modes = np.stack([k1[order], k2[order]], axis=1)
    modes.setflags(write=False)
    lam = lam[order]
    lam.setflags(write=False)
    n_grid = sfft.next_fast_len(q * (2 * K + 1))
    return SpectralBasis(kind, K, q, modes, lam, n_grid)


# -- fields -----------------------------------------------------------------


@dataclass(eq=False)
class SpectralField:
    """Coefficients ``u_n`` of a field in a basis (last axis = modes)."""

    basis: SpectralBasis
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim == 0 or c.shape[-1] != self.basis.n_modes:
            raise UsageError(
                f"coefficient length {c.shape[-1:] or 0} != basis mode count {self.basis.n_modes}"
            )
        if not np.all(np.isfinite(c)):
            raise UsageError("coefficients must be finite")
        self.coeffs = c

    @classmethod
    def zeros(cls, basis, batch=()):
        return cls(basis, np.zeros(tuple(batch) + (basis.n_modes,), dtype=complex))

    @classmethod
    def single_mode(cls, basis, k, value=1.0):
        idx = mode_index(basis, k)
        c = np.zeros(basis.n_modes, dtype=complex)
        c[idx] = value
        return cls(basis, c)

    def copy(self):
        return SpectralField(self.basis, self.coeffs.copy())

    def conj(self):
        """Coefficients of the pointwise complex conjugate field."""
        if self.basis.kind == TORUS:
            return SpectralField(self.basis, np.conj(self.coeffs[..., self.basis.negative_modes]))
        return SpectralField(self.basis, np.conj(self.coeffs))

    def to_grid(self):
        return to_grid(self)

    def _other(self, other):
        if isinstance(other, SpectralField):
            _check_same_basis(self, other)
            return other.coeffs
        return other

    def __add__(self, other):
        return SpectralField(self.basis, self.coeffs + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return SpectralField(self.basis, self.coeffs - self._other(other))

    def __neg__(self):
        return SpectralField(self.basis, -self.coeffs)

    def __mul__(self, scalar):
        if isinstance(scalar, SpectralField):
            raise UsageError("pointwise products must be formed on the grid")
        return SpectralField(self.basis, self.coeffs * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return SpectralField(self.basis, self.coeffs / scalar)


@dataclass(eq=False)
class GridField:
    """Complex values at the quadrature nodes of a basis."""

    basis: SpectralBasis
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim < 2 or v.shape[-2:] != self.basis.grid_shape:
            raise UsageError(f"grid shape {v.shape} does not match basis grid {self.basis.grid_shape}")
        if not np.all(np.isfinite(v)):
            raise UsageError("grid values must be finite")
        self.values = v


def _check_same_basis(a, b):
    if a.basis is not b.basis:
        raise UsageError("fields live on different bases")


def mode_index(basis: SpectralBasis, k) -> int:
    hit = np.flatnonzero((basis.modes[:, 0] == k[0]) & (basis.modes[:, 1] == k[1]))
    if hit.size == 0:
        raise UsageError(f"mode {tuple(k)} is not in the mode table")
    return int(hit[0])


def to_grid(u: SpectralField) -> GridField:
    return GridField(u.basis, u.basis.synthesize(u.coeffs))


def to_spectral(g: GridField, basis: SpectralBasis | None = None) -> SpectralField:
    if basis is not None and basis is not g.basis:
        raise UsageError("grid field lives on a different basis")
    return SpectralField(g.basis, g.basis.analyze(g.values))


def apply_laplacian_power(u: SpectralField, s: float) -> SpectralField:
    """Multiply coefficient ``n`` by ``lambda_n ** s``.

    For ``s < 0`` the kernel of the Laplacian (torus constants) is mapped to 0.
    """
    return SpectralField(u.basis, u.coeffs * laplacian_symbol(u.basis, s))


def laplacian_symbol(basis: SpectralBasis, s: float) -> np.ndarray:
    lam = basis.eigenvalues
    if s == 0:
        return np.ones_like(lam)
    if s > 0:
        return lam**s
    out = np.zeros_like(lam)
    pos = lam > 0
    out[pos] = lam[pos] ** s
    return out


def inner(u: SpectralField, v: SpectralField) -> np.ndarray:
    """Real L2 inner product ``Re int u conj(v)``."""
    _check_same_basis(u, v)
    return np.real(np.sum(u.coeffs * np.conj(v.coeffs), axis=-1))


def grid_inner(f: np.ndarray, g: np.ndarray, basis: SpectralBasis) -> np.ndarray:
    """Real L2 inner product of two grid arrays by quadrature."""
    return np.real(basis.integrate(f * np.conj(g)))


def sobolev_norm(u: SpectralField, s: float) -> np.ndarray:
    w = (1.0 + u.basis.eigenvalues) ** s
    return np.sqrt(np.sum(w * np.abs(u.coeffs) ** 2, axis=-1))


def homogeneous_seminorm(u: SpectralField, s: float) -> np.ndarray:
    w = laplacian_symbol(u.basis, s)
    return np.sqrt(np.sum(w * np.abs(u.coeffs) ** 2, axis=-1))


def l2_norm(u: SpectralField) -> np.ndarray:
    return np.sqrt(np.sum(np.abs(u.coeffs) ** 2, axis=-1))


def lp_norm(g: GridField | np.ndarray, p: float, basis: SpectralBasis | None = None) -> np.ndarray:
    """L^p norm by quadrature on the oversampled grid; ``p=inf`` is the max modulus."""
    if isinstance(g, GridField):
        basis, values = g.basis, g.values
    else:
        values = np.asarray(g)
    if p < 1:
        raise ConfigurationError(f"p must be >= 1, got {p}")
    a = np.abs(values)
    if np.isinf(p):
        return np.max(a, axis=(-2, -1))
    return basis.integrate(a**p) ** (1.0 / p)


def project(u: SpectralField, cutoff: int) -> SpectralField:
    """Zero every coefficient whose largest per-axis index exceeds ``cutoff``."""
    if cutoff > u.basis.cutoff:
        raise UsageError(f"projection cutoff {cutoff} exceeds basis cutoff {u.basis.cutoff}")
    if cutoff < 0:
        raise UsageError(f"projection cutoff must be >= 0, got {cutoff}")
    return SpectralField(u.basis, np.where(u.basis.mode_mask(cutoff), u.coeffs, 0.0))


def random_field(basis, rng, scale=None, decay=2.0, amplitude=1.0, batch=(), real=False):
    """Complex Gaussian coefficients with standard deviation ``amplitude * (1+lambda)^(-decay/2)``.

    ``scale`` overrides the per-mode standard deviation.  With ``real=True`` on the
    torus the result is Hermitian-symmetric (a real-valued field).
    """
    if scale is None:
        scale = amplitude * (1.0 + basis.eigenvalues) ** (-decay / 2)
    shape = tuple(batch) + (basis.n_modes,)
    c = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(0.5) * scale
    if real:
        if basis.kind == TORUS:
            c = 0.5 * (c + np.conj(c[..., basis.negative_modes]))
        else:
            c = c.real.astype(complex)
    return SpectralField(basis, c)
