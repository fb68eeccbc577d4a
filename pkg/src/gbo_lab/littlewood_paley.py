"""Sharp dyadic projections, Besov-type space-time norms and the paraproduct split.

Bands are the annuli ``2**j <= |xi| < 2**(j+1)`` of the grid lattice.  The
"below" projections ``Q_{<j}`` include the mean mode (frequency zero sits
below every band), while ``Q_j`` itself never does, so
``sum_j Q_j = Id - mean``.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .spectral import SpectralField, deriv, required_pad, dealiased_power, product


def default_ck(k):
    return math.ceil(math.log2(k + 2)) + 1


@dataclass(frozen=True, eq=False)
class DyadicDecomposition:
    grid: object
    J: int = 5
    C_k: int = None
    k: int = 6

    def __post_init__(self):
        if self.C_k is None:
            object.__setattr__(self, "C_k", default_ck(self.k))

    @cached_property
    def band_of_mode(self):
        """Band index per DFT slot; the mean slot holds a sentinel below every band."""
        xi = np.abs(self.grid.freqs)
        out = np.full(self.grid.N, np.iinfo(np.int64).min // 2, dtype=np.int64)
        nz = xi > 0
        _, e = np.frexp(xi[nz])
        out[nz] = e - 1
        return out

    @cached_property
    def bands(self):
        b = self.band_of_mode[1:]
        return list(range(int(b.min()), int(b.max()) + 1))

    def mask(self, j, mode="at"):
        b = self.band_of_mode
        if mode == "at":
            m = b == j
            m[0] = False
        elif mode == "below":
            m = b < j
        elif mode == "well_below":
            m = b < j - self.J
        elif mode == "near":
            m = np.abs(b - j) <= self.J
            m[0] = False
        else:
            raise ValueError(f"unknown projection mode {mode!r}")
        return m


def dyadic_project(f, j, decomp, mode="at"):
    m = decomp.mask(j, mode)
    return SpectralField(f.grid, np.where(m, f.coeffs, 0.0), f.real)


# ---------------------------------------------------------------------------
# space-time arrays and norms
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SpaceTimeArray:
    grid: object
    coeffs: np.ndarray
    dt_out: float = 1.0
    t0: float = 0.0

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coeffs, dtype=np.complex128))
        if c.shape[0] == 0:
            raise ValueError("space-time array needs at least one snapshot")
        if c.shape[1] != self.grid.N:
            raise ValueError("snapshot length does not match grid")
        if not self.dt_out > 0:
            raise ValueError("dt_out must be positive")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_fields(cls, fields, dt_out=1.0, t0=0.0):
        fields = list(fields)
        if not fields:
            raise ValueError("space-time array needs at least one snapshot")
        g = fields[0].grid
        for f in fields[1:]:
            if not f.grid.same_as(g):
                raise ValueError("all snapshots must share one grid")
        return cls(g, np.stack([f.coeffs for f in fields]), dt_out, t0)

    def __len__(self):
        return self.coeffs.shape[0]

    @property
    def times(self):
        return self.t0 + self.dt_out * np.arange(len(self))

    def snapshot(self, i):
        return SpectralField(self.grid, self.coeffs[i])

    def fields(self):
        return [self.snapshot(i) for i in range(len(self))]

    def window(self, start, stop):
        if not 0 <= start < stop <= len(self):
            raise ValueError("empty or out-of-range window")
        return SpaceTimeArray(self.grid, self.coeffs[start:stop], self.dt_out,
                              self.t0 + start * self.dt_out)

    def values(self, mask=None):
        c = self.coeffs if mask is None else np.where(mask[None, :], self.coeffs, 0.0)
        return (np.fft.ifft(c, axis=1) * self.grid.N).real

    def map(self, func):
        return SpaceTimeArray.from_fields([func(f) for f in self.fields()], self.dt_out, self.t0)


def mixed_norm(vals, p, q, dx, dt):
    """L^p_x L^q_t of samples ``vals[t, x]`` (rectangle rule in both variables)."""
    a = np.abs(vals)
    if np.isinf(q):
        inner = a.max(axis=0)
    else:
        inner = (dt * np.sum(a ** q, axis=0)) ** (1.0 / q)
    if np.isinf(p):
        return float(inner.max())
    return float((dx * np.sum(inner ** p)) ** (1.0 / p))


def besov_spacetime_norm(a, s, p, q, r, decomp=None):
    """Besov-type norm  || 2^{js} ||Q_j f||_{L^p_x L^q_t} ||_{l^r_j}."""
    if not (1 <= p <= np.inf and 1 <= q <= np.inf and 1 <= r <= np.inf):
        raise ValueError("exponents must lie in [1, inf]")
    decomp = DyadicDecomposition(a.grid) if decomp is None else decomp
    terms = []
    for j in decomp.bands:
        m = decomp.mask(j, "at")
        if not m.any() or not np.any(a.coeffs[:, m]):
            continue
        terms.append(2.0 ** (j * s) * mixed_norm(a.values(m), p, q, a.grid.dx, a.dt_out))
    if not terms:
        return 0.0
    terms = np.asarray(terms)
    if np.isinf(r):
        return float(terms.max())
    return float(np.sum(terms ** r) ** (1.0 / r))


def strichartz_exponents(s, theta):
    """(regularity, p, q) of the smoothing space S^{s,theta}."""
    p = np.inf if theta == 1 else 4.0 / (1.0 - theta)
    q = np.inf if theta == 0 else 2.0 / theta
    return s + (3.0 * theta - 1.0) / 4.0, p, q


def s_norm(a, s, theta, decomp=None):
    reg, p, q = strichartz_exponents(s, theta)
    return besov_spacetime_norm(a, reg, p, q, 2, decomp)


def n_norm(a, s, decomp=None):
    return besov_spacetime_norm(a, s - 0.5, 1, 2, 2, decomp)


def x_norm(a, s, eps=0.1, decomp=None):
    return s_norm(a, s, eps, decomp) + s_norm(a, s, 1.0, decomp)


def lk_linf(a, k):
    """L^k_x L^inf_t on grid samples."""
    return mixed_norm(a.values(), k, np.inf, a.grid.dx, a.dt_out)


def z_norm(a, s, k, decomp=None):
    from .spectral import sobolev_norm

    sup_h = max(sobolev_norm(f, s) for f in a.fields())
    return sup_h + lk_linf(a, k) + s_norm(a, s, 0.0, decomp) + s_norm(a, s, 1.0, decomp)


def linear_estimate_ratio(phi, s, times, decomp=None):
    """||V(t)phi||_{S^{s,0} + S^{s,1}} / ||phi||_{H^s_dot} over uniform ``times``."""
    from .spectral import linear_propagate, sobolev_norm

    times = np.asarray(times, dtype=float)
    dt = times[1] - times[0] if len(times) > 1 else 1.0
    a = SpaceTimeArray.from_fields([linear_propagate(phi, t) for t in times], dt, times[0])
    den = sobolev_norm(phi, s)
    num = s_norm(a, s, 0.0, decomp) + s_norm(a, s, 1.0, decomp)
    return num / den


# ---------------------------------------------------------------------------
# paraproduct
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Paraproduct:
    pi: SpectralField
    g: SpectralField
    F: SpectralField
    aliased: bool = False


def nonlinearity(u, k, pad_factor=None):
    """F(u) = -d/dx (u^{k+1}) with dealiased power."""
    return -deriv(dealiased_power(u, k + 1, pad_factor))


def pi_term(psi, phi, decomp, k):
    """pi(psi, phi) = sum_j d/dx Q_j (psi_{<<j}^k phi_{~j})."""
    g = psi.grid
    total = np.zeros(g.N, dtype=np.complex128)
    pad = required_pad(k + 1)
    for j in decomp.bands:
        at = decomp.mask(j, "at")
        low = decomp.mask(j, "well_below")
        near = decomp.mask(j, "near")
        if not (np.any(psi.coeffs[low]) and np.any(phi.coeffs[near])):
            continue
        lo = SpectralField(g, np.where(low, psi.coeffs, 0.0))
        hi = SpectralField(g, np.where(near, phi.coeffs, 0.0))
        prod = product(*([lo] * k + [hi]), pad_factor=pad)
        total += np.where(at, prod.coeffs, 0.0)
    return deriv(SpectralField(g, total, psi.real and phi.real))


def paraproduct_decompose(u, decomp, k, pad_factor=None):
    """Split F(u) = -pi(u, u) + g(u); g is the exact remainder F + pi."""
    pad = u.grid.pad_factor if pad_factor is None else pad_factor
    aliased = pad < required_pad(k + 1)
    F = nonlinearity(u, k, pad)
    pi = pi_term(u, u, decomp, k)
    return Paraproduct(pi=pi, g=F + pi, F=F, aliased=aliased)


def grouped_remainder(u, decomp, k):
    """g rebuilt from the telescoped frequency pieces with r >= j - C_k.

    Agrees with the exact remainder when C_k is wide enough that lower
    telescoping pieces cannot reach band j.
    """
    g = u.grid
    pad = required_pad(k + 1)
    bands = decomp.bands
    powers = {}
    for r in bands + [bands[-1] + 1]:
        low = SpectralField(g, np.where(decomp.mask(r, "below"), u.coeffs, 0.0))
        powers[r] = dealiased_power(low, k + 1, pad).coeffs
    pieces = {r: powers[r + 1] - powers[r] for r in bands}
    total = np.zeros(g.N, dtype=np.complex128)
    for j in bands:
        at = decomp.mask(j, "at")
        acc = np.zeros(g.N, dtype=np.complex128)
        for r in bands:
            if r >= j - decomp.C_k:
                acc += pieces[r]
        total += np.where(at, acc, 0.0)
    F_tel = -deriv(SpectralField(g, total, u.real))
    return F_tel + pi_term(u, u, decomp, k)


def nonlinear_estimate_ratios(ensemble, k, s=None, decomp=None, eps=0.1):
    """Empirical constants for the pi and g estimates over an ensemble of space-time arrays."""
    s = 0.5 - 1.0 / k if s is None else s
    samples = []
    skipped = 0
    for idx, a in enumerate(ensemble):
        dec = DyadicDecomposition(a.grid, k=k) if decomp is None else decomp
        lk = lk_linf(a, k)
        xn = x_norm(a, s, eps, dec)
        rhs_pi = lk ** k * xn
        rhs_g = lk ** (k - 1) * xn ** 2
        if rhs_pi == 0.0 or rhs_g == 0.0:
            skipped += 1
            continue
        parts = [paraproduct_decompose(f, dec, k) for f in a.fields()]
        pi_a = SpaceTimeArray.from_fields([p.pi for p in parts], a.dt_out, a.t0)
        g_a = SpaceTimeArray.from_fields([p.g for p in parts], a.dt_out, a.t0)
        samples.append({
            "index": idx,
            "pi_ratio": n_norm(pi_a, s, dec) / rhs_pi,
            "g_ratio": n_norm(g_a, s, dec) / rhs_g,
        })
    report = {
        "k": k,
        "s": s,
        "eps": eps,
        "eps_is_configured_default": eps == 0.1,
        "samples": samples,
        "skipped": skipped,
    }
    for key in ("pi_ratio", "g_ratio"):
        vals = np.array([smp[key] for smp in samples])
        report[key + "_max"] = float(vals.max()) if vals.size else None
        report[key + "_median"] = float(np.median(vals)) if vals.size else None
    return report
