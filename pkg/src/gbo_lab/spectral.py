"""Periodic grid, Fourier multipliers, dealiased products and quadrature.

Coefficients are stored in DFT index order with the normalization

    coeff(xi) = (1/L) * integral_0^L f(x) exp(-i xi x) dx,

so that ``integrate(f) == L * coeff(0)`` and ``f(x_m) = sum_xi coeff(xi) exp(i xi x_m)``.
"""

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np


class AliasingWarning(UserWarning):
    """A product was evaluated with less padding than exactness requires."""


@dataclass(frozen=True, eq=False)
class TorusGrid:
    N: int
    L: float
    pad_factor: int = 4

    def __post_init__(self):
        N = self.N
        if not isinstance(N, (int, np.integer)) or N < 16 or N & (N - 1):
            raise ValueError(f"N must be a power of two >= 16, got {N!r}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L!r}")
        if int(self.pad_factor) < 1:
            raise ValueError(f"pad_factor must be >= 1, got {self.pad_factor!r}")
        object.__setattr__(self, "N", int(N))
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "pad_factor", int(self.pad_factor))

    @property
    def dx(self):
        return self.L / self.N

    @cached_property
    def xs(self):
        return np.arange(self.N) * self.dx

    @cached_property
    def index(self):
        """Signed integer mode numbers m in DFT order (Nyquist is -N/2)."""
        return np.fft.fftfreq(self.N, d=1.0 / self.N).astype(np.int64)

    @cached_property
    def freqs(self):
        return self.index * (2.0 * np.pi / self.L)

    @property
    def spacing(self):
        return 2.0 * np.pi / self.L

    @property
    def nyquist(self):
        return self.N // 2

    @property
    def xi_max(self):
        return np.pi * self.N / self.L

    def same_as(self, other):
        return (
            self.N == other.N and self.L == other.L and self.pad_factor == other.pad_factor
        )

    def __repr__(self):
        return f"TorusGrid(N={self.N}, L={self.L!r}, pad_factor={self.pad_factor})"


def make_grid(N, L, pad_factor=4):
    return TorusGrid(N, L, pad_factor)


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: TorusGrid
    coeffs: np.ndarray
    real: bool = True

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != (self.grid.N,):
            raise ValueError(f"expected {self.grid.N} coefficients, got shape {c.shape}")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_values(cls, grid, values):
        values = np.asarray(values)
        field = cls(grid, np.fft.fft(values) / grid.N, real=not np.iscomplexobj(values))
        return field

    @classmethod
    def from_function(cls, grid, func):
        return cls.from_values(grid, func(grid.xs))

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.N, dtype=np.complex128))

    @cached_property
    def values(self):
        v = np.fft.ifft(self.coeffs) * self.grid.N
        return v.real.copy() if self.real else v

    def mean(self):
        return self.coeffs[0].real

    def _check(self, other):
        if not self.grid.same_as(other.grid):
            raise ValueError("grid mismatch")

    def __add__(self, other):
        if isinstance(other, SpectralField):
            self._check(other)
            return SpectralField(self.grid, self.coeffs + other.coeffs, self.real and other.real)
        c = self.coeffs.copy()
        c[0] += other
        return SpectralField(self.grid, c, self.real and np.isrealobj(other))

    __radd__ = __add__

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs, self.real)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        if isinstance(scalar, SpectralField):
            return product(self, scalar)
        return SpectralField(self.grid, self.coeffs * scalar, self.real and np.isrealobj(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return SpectralField(self.grid, self.coeffs / scalar, self.real)

    def __repr__(self):
        return f"SpectralField({self.grid!r}, |c|_max={np.abs(self.coeffs).max():.3e})"


# ---------------------------------------------------------------------------
# multipliers
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Multiplier:
    symbol: np.ndarray
    parity: str = "none"

    def __call__(self, f):
        sym = self.symbol
        if self.parity == "odd":
            sym = sym.copy()
            sym[f.grid.nyquist] = 0.0
        return SpectralField(f.grid, f.coeffs * sym, f.real)


def hilbert_symbol(grid):
    return -1j * np.sign(grid.freqs)


def frac_symbol(grid, s):
    xi = np.abs(grid.freqs)
    out = np.zeros(grid.N)
    nz = xi > 0
    out[nz] = xi[nz] ** s
    return out


def propagator_symbol(grid, t):
    xi = grid.freqs
    sym = np.exp(-1j * xi * np.abs(xi) * t)
    # the Nyquist mode has no sign of frequency; the flow leaves it fixed
    sym[grid.nyquist] = 1.0
    return sym


def hilbert(f):
    return Multiplier(hilbert_symbol(f.grid), "odd")(f)


def frac_deriv(f, s):
    if s < -0.5:
        raise ValueError(f"frac_deriv requires s >= -1/2, got {s}")
    return Multiplier(frac_symbol(f.grid, s), "even")(f)


def deriv(f, order=1):
    sym = (1j * f.grid.freqs) ** order
    return Multiplier(sym, "odd" if order % 2 else "even")(f)


def linear_propagate(f, t):
    """Linear Benjamin-Ono flow V(t): u_t + H u_xx = 0."""
    return SpectralField(f.grid, f.coeffs * propagator_symbol(f.grid, t), f.real)


def fourier_multiplier(f, symbol, parity="none"):
    return Multiplier(np.asarray(symbol), parity)(f)


# ---------------------------------------------------------------------------
# padded evaluation, products, quadrature
# ---------------------------------------------------------------------------

def padded_values(f, M):
    """Band-limited interpolant of ``f`` sampled on ``M >= N`` equispaced points."""
    N = f.grid.N
    if M < N:
        raise ValueError("padded size must be >= N")
    big = np.zeros(M, dtype=np.complex128)
    half = N // 2
    big[:half] = f.coeffs[:half]
    big[M - half + 1:] = f.coeffs[half + 1:]
    ny = f.coeffs[half]
    if ny != 0:
        # split the Nyquist coefficient symmetrically so the interpolant stays real
        big[half] += 0.5 * ny
        big[M - half] += 0.5 * ny
    v = np.fft.ifft(big) * M
    return v.real if f.real else v


def truncate(grid, big_coeffs):
    """Restrict normalized coefficients on a padded grid to the band |m| < N/2."""
    N = grid.N
    M = big_coeffs.shape[0]
    half = N // 2
    c = np.zeros(N, dtype=np.complex128)
    c[:half] = big_coeffs[:half]
    c[half + 1:] = big_coeffs[M - half + 1:]
    return c


def _from_padded_values(grid, values, real=True):
    big = np.fft.fft(values) / values.shape[0]
    return SpectralField(grid, truncate(grid, big), real)


def required_pad(degree):
    """Smallest integer padding making a degree-``degree`` product exact on the band."""
    return max(1, -(-(degree + 1) // 2))


def pad_size(grid, degree):
    """Power-of-two padded length that makes quadrature of a degree-``degree`` product exact."""
    M = grid.N
    while 2 * M <= degree * grid.N:
        M *= 2
    return M


def dealiased_power(f, p, pad_factor=None):
    if p < 1:
        raise ValueError("p must be >= 1")
    if p == 1:
        return f
    pad = f.grid.pad_factor if pad_factor is None else int(pad_factor)
    if pad < required_pad(p):
        warnings.warn(
            f"pad_factor {pad} < {required_pad(p)} needed for exact power {p}; "
            "coefficients will alias",
            AliasingWarning,
            stacklevel=2,
        )
    M = pad * f.grid.N
    return _from_padded_values(f.grid, padded_values(f, M) ** p, f.real)


def product(*fields, pad_factor=None):
    """Dealiased pointwise product of fields on a common grid."""
    g = fields[0].grid
    for f in fields[1:]:
        fields[0]._check(f)
    pad = required_pad(len(fields)) if pad_factor is None else int(pad_factor)
    M = pad * g.N
    v = padded_values(fields[0], M)
    for f in fields[1:]:
        v = v * padded_values(f, M)
    return _from_padded_values(g, v, all(f.real for f in fields))


def integrate(f):
    return f.grid.L * f.coeffs[0].real


def pairing(f, g):
    """L^2 inner product  integral f * conj(g)  via Parseval (real part)."""
    return f.grid.L * float(np.real(np.vdot(g.coeffs, f.coeffs)))


def integrate_monomial(factors, powers, M=None):
    """Exact integral of prod_i factors[i]**powers[i] for band-limited factors."""
    grid = factors[0].grid
    degree = int(sum(powers))
    if M is None:
        M = pad_size(grid, degree)
    v = np.ones(M)
    for f, p in zip(factors, powers):
        if p:
            v = v * padded_values(f, M) ** p
    return grid.L * float(np.mean(v.real))


def sobolev_norm(f, s, homogeneous=True):
    xi = f.grid.freqs
    if homogeneous:
        w = frac_symbol(f.grid, 2.0 * s)
    else:
        w = (1.0 + xi * xi) ** s
    return float(np.sqrt(f.grid.L * np.sum(w * np.abs(f.coeffs) ** 2)))


def sup_norm(f, M=None):
    M = 4 * f.grid.N if M is None else M
    return float(np.max(np.abs(padded_values(f, M))))


def lp_norm(f, p, M=None):
    M = 4 * f.grid.N if M is None else M
    v = np.abs(padded_values(f, M))
    if np.isinf(p):
        return float(v.max())
    return float((f.grid.L * np.mean(v ** p)) ** (1.0 / p))


def zero_nyquist(f):
    c = f.coeffs.copy()
    c[f.grid.nyquist] = 0.0
    return SpectralField(f.grid, c, f.real)


def resample(f, grid):
    """Move a field to another grid of the same length by zero padding/truncation."""
    if grid.L != f.grid.L:
        raise ValueError("resampling requires equal domain length")
    c = np.zeros(grid.N, dtype=np.complex128)
    n = min(grid.N, f.grid.N) // 2
    c[:n] = f.coeffs[:n]
    c[grid.N - n + 1:] = f.coeffs[f.grid.N - n + 1:]
    return SpectralField(grid, c, f.real)
