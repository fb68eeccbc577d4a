"""Truncated weights, the localized interaction functional and its error terms.

Spatial integrals that involve the non-periodic weight ``Phi`` are taken in
line coordinates: samples are reordered so that they run from the antipode
of the field's center once around the torus, and ``y - x`` is then an
integer multiple of the spacing.  Weight tables are indexed by integer
offsets ``m`` in ``[-n, n]`` with the zero offset at position ``n``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import commutator_sums, offset_bilinear
from .spectral import (
    SpectralField,
    deriv,
    frac_deriv,
    hilbert,
    padded_values,
    pad_size,
    sobolev_norm,
)
from .diagnostics import circular_center, densities, _uniform_spacing

DEFAULT_EPS = 0.1
_GL_X, _GL_W = np.polynomial.legendre.leggauss(48)
_PANELS = 4


# ---------------------------------------------------------------------------
# cutoff template
# ---------------------------------------------------------------------------

def _bump(tau):
    """exp(-1/(1 - v^2)) with v = 2 tau - 1, zero outside (0, 1)."""
    tau = np.asarray(tau, dtype=float)
    v = 2.0 * tau - 1.0
    out = np.zeros_like(v)
    inside = np.abs(v) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - v[inside] ** 2))
    return out


def _bump_derivs(tau):
    """b, db/dtau, d2b/dtau2 on (0, 1); zero elsewhere."""
    tau = np.asarray(tau, dtype=float)
    v = 2.0 * tau - 1.0
    b = np.zeros_like(v)
    b1 = np.zeros_like(v)
    b2 = np.zeros_like(v)
    m = np.abs(v) < 1.0
    vm = v[m]
    w = 1.0 - vm * vm
    g1 = -2.0 * vm / w ** 2
    g2 = -2.0 / w ** 2 - 8.0 * vm * vm / w ** 3
    bm = np.exp(-1.0 / w)
    b[m] = bm
    b1[m] = 2.0 * g1 * bm
    b2[m] = 4.0 * (g2 + g1 * g1) * bm
    return b, b1, b2


def _bump_integral(tau):
    """int_0^tau b, by composite Gauss-Legendre."""
    tau = np.clip(np.asarray(tau, dtype=float), 0.0, 1.0)
    flat = tau.ravel()
    total = np.zeros_like(flat)
    for p in range(_PANELS):
        a = flat * p / _PANELS
        c = flat * (p + 1) / _PANELS
        nodes = 0.5 * (c - a)[:, None] * (_GL_X[None, :] + 1.0) + a[:, None]
        total += 0.5 * (c - a) * (_bump(nodes) @ _GL_W)
    return total.reshape(tau.shape)


_BUMP_MASS = float(_bump_integral(np.array([1.0]))[0])


def smoothstep(tau):
    """C-infinity step rising from 0 at tau <= 0 to 1 at tau >= 1."""
    tau = np.asarray(tau, dtype=float)
    out = _bump_integral(tau) / _BUMP_MASS
    out = np.where(tau >= 1.0, 1.0, out)
    return np.where(tau <= 0.0, 0.0, out)


def cutoff(x, R, R1, order=0):
    """chi_R and its first three derivatives; 1 on |x| <= R, 0 on |x| >= R + R1."""
    x = np.asarray(x, dtype=float)
    tau = (R + R1 - np.abs(x)) / R1
    if order == 0:
        return smoothstep(tau)
    b, b1, b2 = _bump_derivs(tau)
    sgn = np.sign(x)
    if order == 1:
        return -sgn * b / (_BUMP_MASS * R1)
    if order == 2:
        return b1 / (_BUMP_MASS * R1 ** 2)
    if order == 3:
        return -sgn * b2 / (_BUMP_MASS * R1 ** 3)
    raise ValueError("order must be 0..3")


# ---------------------------------------------------------------------------
# weight family
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LineTables:
    """Weights sampled at offsets m*h for m in [-n, n]."""
    h: float
    n: int
    chi: np.ndarray
    dchi: np.ndarray
    d2chi: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    d2phi: np.ndarray
    d3phi: np.ndarray

    @property
    def offsets(self):
        return np.arange(-self.n, self.n + 1) * self.h

    def stride(self, s):
        """Tables at spacing s*h, keeping every s-th offset."""
        n = self.n // s
        sl = slice(self.n - n * s, self.n + n * s + 1, s)
        return LineTables(self.h * s, n, *(getattr(self, f)[sl] for f in
                                           ("chi", "dchi", "d2chi", "phi", "dphi",
                                            "d2phi", "d3phi")))


def _line_convolve(a, b, h):
    """Linear convolution of two arrays on [-n, n], restricted back to [-n, n]."""
    n = (a.shape[0] - 1) // 2
    size = 1 << int(math.ceil(math.log2(4 * n + 2)))
    c = np.fft.irfft(np.fft.rfft(a, size) * np.fft.rfft(b, size), size)
    return h * c[n: 3 * n + 1]


def _even(t):
    return 0.5 * (t + t[::-1])


def _odd(t):
    return 0.5 * (t - t[::-1])


def line_tables(R, R1, h, n):
    x = np.arange(-n, n + 1) * h
    chi = cutoff(x, R, R1)
    dchi = cutoff(x, R, R1, 1)
    d2chi = cutoff(x, R, R1, 2)
    chi2 = chi * chi
    dchi2 = 2.0 * chi * dchi
    dphi = _even(_line_convolve(chi2, chi2, h) / R)
    d2phi = _odd(_line_convolve(chi2, dchi2, h) / R)
    d3phi = _even(_line_convolve(dchi2, dchi2, h) / R)
    # antiderivative: linear part plus the periodic antiderivative of the rest
    per = dphi[:-1]
    mean = per.mean()
    k = np.fft.rfftfreq(2 * n, d=h) * 2.0 * np.pi
    spec = np.fft.rfft(per - mean)
    spec[1:] /= 1j * k[1:]
    spec[0] = 0.0
    if n > 0:
        spec[-1] = 0.0
    P = np.fft.irfft(spec, 2 * n)         # index i <-> offset i - n
    P = P - P[n]
    phi = np.empty(2 * n + 1)
    phi[:-1] = mean * x[:-1] + P
    phi[-1] = -phi[0]
    phi = _odd(phi)
    return LineTables(h, n, chi, dchi, d2chi, phi, dphi, d2phi, d3phi)


class WeightError(ValueError):
    pass


@dataclass(eq=False)
class WeightFamily:
    R: float
    R1: float
    grid: object
    tables: LineTables
    sup_norms: dict
    constants: dict
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def chi(self):
        return self.tables.chi

    @property
    def phi(self):
        return self.tables.phi

    @property
    def offsets(self):
        return self.tables.offsets

    def at(self, M):
        """Tables at spacing L/M over offsets [-M, M]."""
        if M not in self._cache:
            if M == self.grid.N:
                self._cache[M] = self.tables
            else:
                self._cache[M] = line_tables(self.R, self.R1, self.grid.L / M, M)
        return self._cache[M]


def default_r1(R, eps=DEFAULT_EPS):
    return R ** (1.0 - eps)


def build_weights(R, R1=None, grid=None, eps=DEFAULT_EPS):
    if grid is None:
        raise WeightError("a grid is required")
    R = float(R)
    R1 = default_r1(R, eps) if R1 is None else float(R1)
    if not (R > 0 and R1 > 0):
        raise WeightError("R and R1 must be positive")
    if not R1 < R:
        raise WeightError(f"need R1 < R, got R={R}, R1={R1}")
    if not R + R1 < grid.L / 4:
        raise WeightError(f"weights too large for domain: R + R1 = {R + R1:.4g} "
                          f">= L/4 = {grid.L / 4:.4g}")
    tab = line_tables(R, R1, grid.dx, grid.N)
    # derivative sup-norms from the analytic template on a dense transition grid
    xs = np.linspace(R, R + R1, 20001)
    c0 = cutoff(xs, R, R1)
    c1 = cutoff(xs, R, R1, 1)
    c2 = cutoff(xs, R, R1, 2)
    c3 = cutoff(xs, R, R1, 3)
    chi2_dd = 2.0 * c1 * c1 + 2.0 * c0 * c2
    sup = {
        "chi_1": float(np.abs(c1).max()),
        "chi_2": float(np.abs(c2).max()),
        "chi_3": float(np.abs(c3).max()),
        "chi2_2": float(np.abs(chi2_dd).max()),
        "phi_3": float(np.abs(tab.d3phi).max()),
    }
    inner = np.abs(tab.offsets) <= R
    kappa = float(tab.dphi[tab.n])
    consts = {
        "C_chi_1": sup["chi_1"] * R1,
        "C_chi_2": sup["chi_2"] * R1 ** 2,
        "C_chi_3": sup["chi_3"] * R1 ** 3,
        "C_phi_3": sup["phi_3"] * R1 ** 2,
        "kappa": kappa,
        "C_linear": float(np.abs(tab.phi[inner] - kappa * tab.offsets[inner]).max() / R1),
    }
    return WeightFamily(R, R1, grid, tab, sup, consts)


def _periodic_table(t, M):
    """Wrap a table over offsets [-M, M] onto the M-point torus (DFT order)."""
    out = t[M: 2 * M].copy()
    out[1:] += t[1:M]
    return out


# ---------------------------------------------------------------------------
# line-coordinate helpers
# ---------------------------------------------------------------------------

def _line_roll(rho, L):
    """Index at which the line ordering (starting at the antipode) begins."""
    M = rho.shape[0]
    x = np.arange(M) * (L / M)
    c = circular_center(rho, x, L)
    start = (c + 0.5 * L) % L
    return int(math.ceil(start / (L / M) - 1e-12)) % M


def _line_pairing(a, b, table, n, h):
    """h^2 sum_i sum_j a_i b_j table[j - i + n] via FFT correlation."""
    m = a.shape[0]
    size = 1 << int(math.ceil(math.log2(2 * m)))
    c = np.fft.irfft(np.conj(np.fft.rfft(a, size)) * np.fft.rfft(b, size), size)
    d = np.arange(m)
    pos = np.dot(table[n + d], c[d])
    neg = np.dot(table[n - d[1:]], c[size - d[1:]])
    return h * h * (pos + neg)


def _periodic_correlation(kernel, f, h):
    """I(s_j) = h sum_i kernel[(i - j) mod M] f_i."""
    return h * np.fft.irfft(np.fft.rfft(f) * np.conj(np.fft.rfft(kernel)), f.shape[0])


def _rolled(d, L):
    """Density samples reordered into line coordinates, plus the roll index."""
    i0 = _line_roll(d["rho"], L)
    out = {key: (np.roll(v, -i0) if isinstance(v, np.ndarray) else v) for key, v in d.items()}
    return out, i0


# ---------------------------------------------------------------------------
# interaction functional
# ---------------------------------------------------------------------------

def interaction_M(u, w, k, backend=None, oracle=False):
    """int int Phi(y - x) rho(x) e(y) dx dy.

    ``oracle=True`` evaluates the O(N^2) double sum instead of the FFT
    correlation.
    """
    d = densities(u, k)
    if not np.any(d["rho"]):
        return 0.0
    M = d["rho"].shape[0]
    tab = w.at(M)
    h = d["weight"]
    r, i0 = _rolled(d, u.grid.L)
    if oracle:
        return h * h * offset_bilinear(r["rho"], r["e"], tab.phi, M, backend=backend)
    return float(_line_pairing(r["rho"], r["e"], tab.phi, M, h))


def interaction_bound_ratio(traj, w, k):
    """sup_t |M(t)| / R over a trajectory."""
    vals = np.array([interaction_M(u, w, k) for u in traj.snapshots])
    return float(np.abs(vals).max() / w.R) if vals.size else 0.0


# ---------------------------------------------------------------------------
# derivative report
# ---------------------------------------------------------------------------

def main_term(u, w, k, form="literal"):
    """k^2/(2(k+2)^2) int_s [(int (chi_s u)^2)^2] (int (chi_s u)^{k+2})^2 ds/R.

    ``form="homogeneous"`` drops the bracketed factor, giving the bound that
    stays consistent under u -> c u.
    """
    if form not in ("homogeneous", "literal"):
        raise ValueError(f"unknown form {form!r}")
    M = pad_size(u.grid, 2 * k + 2)
    h = u.grid.L / M
    uu = padded_values(u, M)
    if not np.any(uu):
        return 0.0
    chi = _periodic_table(w.at(M).chi, M)
    P = _periodic_correlation(chi ** (k + 2), uu ** (k + 2), h)
    integrand = P * P
    if form == "literal":
        Q = _periodic_correlation(chi ** 2, uu ** 2, h)
        integrand = integrand * Q * Q
    c = k * k / (2.0 * (k + 2) ** 2)
    return float(c * h * integrand.sum() / w.R)


@dataclass
class DMReport:
    R: float
    R1: float
    form: str
    times: np.ndarray
    M: np.ndarray
    dM_fd: np.ndarray
    main_term: np.ndarray
    residual: np.ndarray
    fd_error: np.ndarray

    @property
    def min_residual(self):
        return float(self.residual.min())

    @property
    def negative_part(self):
        return float(max(0.0, -self.residual.min()))

    def to_dict(self):
        entries = [
            {"t": float(t), "M": float(m), "dM_fd": float(dm), "main_term": float(mt),
             "residual": float(r)}
            for t, m, dm, mt, r in zip(self.times, self.M, self.dM_fd, self.main_term,
                                       self.residual)
        ]
        return {"R": self.R, "R1": self.R1, "form": self.form, "entries": entries,
                "min_residual": self.min_residual, "negative_part": self.negative_part}


def _fd_derivative(y, h):
    d = np.empty_like(y)
    d[1:-1] = (y[2:] - y[:-2]) / (2 * h)
    d[0] = (-3 * y[0] + 4 * y[1] - y[2]) / (2 * h)
    d[-1] = (3 * y[-1] - 4 * y[-2] + y[-3]) / (2 * h)
    return d


def dM_report(traj, w, k, form="literal"):
    t = traj.times
    h = _uniform_spacing(t, 3)
    Ms = np.array([interaction_M(u, w, k) for u in traj.snapshots])
    mains = np.array([main_term(u, w, k, form) for u in traj.snapshots])
    dM = _fd_derivative(Ms, h)
    err = np.zeros_like(dM)
    if len(t) >= 5:
        coarse = np.full_like(dM, np.nan)
        coarse[2:-2] = (Ms[4:] - Ms[:-4]) / (4 * h)
        err = np.where(np.isnan(coarse), 0.0, np.abs(coarse - dM) / 3.0)
    return DMReport(w.R, w.R1, form, t, Ms, dM, mains, dM - mains, err)


# ---------------------------------------------------------------------------
# error budget
# ---------------------------------------------------------------------------

FORMULAS = {
    "E1": "int_x rho(x) int_y Phi'''(y-x) u^2(y)",
    "E2": "int_x rho(x) int_y u [H, Phi(.-x)] (u^{k+1})_yy",
    "E3": "int_x rho(x) int_y Phi''(y-x) u^{k+1} H u",
    "T1": "|| int_y chi_s u [H, chi_s'] u ||_{L^2(ds/R)}",
    "T2": "|| int_y chi_s u [H, chi_s] u_y ||_{L^2(ds/R)}",
    "T3": "|| int_y chi_s chi_s' u H u ||_{L^2(ds/R)}",
    "T4": "|| int_y (chi_s^2 - chi_s^{k+2}) u^{k+2} ||_{L^2(ds/R)}",
}


@dataclass
class ErrorBudget:
    R: float
    R1: float
    E1: float
    E2: float
    E3: float
    T1: float
    T2: float
    T3: float
    T4: float
    quadrature_error: dict
    coarsen: int

    def magnitudes(self):
        return {name: abs(getattr(self, name)) for name in FORMULAS}

    def to_dict(self):
        out = {"R": self.R, "R1": self.R1, "coarsen": self.coarsen,
               "formulas": dict(FORMULAS), "quadrature_error": dict(self.quadrature_error)}
        out.update({name: float(getattr(self, name)) for name in FORMULAS})
        return out


SUPPORT_THRESHOLD = 1e-15
QUAD_RTOL = 1e-6


def _coarse_samples(u, k, n):
    """Pointwise u, u_x and (u^{k+1})_xx at n equispaced points, in line order."""
    N = u.grid.N
    if n >= N:
        pick = lambda f: padded_values(f, n)
    else:
        pick = lambda f: f.values[:: N // n]
    uu, ux, uxx = pick(u), pick(deriv(u)), pick(deriv(u, 2))
    vzz = (k + 1) * k * uu ** (k - 1) * ux ** 2 + (k + 1) * uu ** k * uxx
    i0 = _line_roll(uu ** 2, u.grid.L)
    return {name: np.roll(arr, -i0) for name, arr in
            (("u", uu), ("ux", ux), ("vzz", vzz))}


def _commutator_terms(u, w, k, n, backend=None):
    """E2 and the L^2(ds/R) norms of the two commutator mass-side terms at n points.

    Sums run only over the window where |u| exceeds SUPPORT_THRESHOLD times
    its maximum, in line coordinates.
    """
    h = u.grid.L / n
    s = _coarse_samples(u, k, n)
    Mfine = pad_size(u.grid, 2 * k + 2)
    tab = w.at(Mfine).stride(Mfine // n)
    a = s["u"]
    big = np.nonzero(np.abs(a) > SUPPORT_THRESHOLD * np.abs(a).max())[0]
    lo, hi = int(big[0]), int(big[-1])
    win = slice(lo, hi + 1)
    aw, uxw, vw = a[win], s["ux"][win], s["vzz"][win]
    xs = np.arange(lo, hi + 1)
    S2 = commutator_sums(aw, vw, tab.phi, tab.dphi, n + lo - xs, h, backend=backend)
    E2 = float(h ** 3 / np.pi * np.dot(aw * aw, S2))
    reach = int(math.ceil((w.R + w.R1) / h)) + 1
    ss = np.arange(max(0, lo - reach), min(n, hi + reach + 1))
    sh = n + lo - ss
    I1 = commutator_sums(aw, aw, tab.dchi, tab.d2chi, sh, h, w=tab.chi, backend=backend)
    I2 = commutator_sums(aw, uxw, tab.chi, tab.dchi, sh, h, w=tab.chi, backend=backend)
    scale = h * h / np.pi
    T1 = float(scale * np.sqrt(h / w.R * np.sum(I1 ** 2)))
    T2 = float(scale * np.sqrt(h / w.R * np.sum(I2 ** 2)))
    return E2, T1, T2


def _converged(new, old, rtol):
    return all(abs(a - b) <= rtol * max(abs(a), 1e-300) for a, b in zip(new, old))


def error_budget(u, w, k, coarsen=4, backend=None, rtol=QUAD_RTOL, max_points=None):
    """Error integrals of the localized derivative identity at one field.

    The commutator terms start at N/coarsen points and are refined by
    doubling (up to ``max_points``, default 2N) until two successive
    resolutions agree to ``rtol``; the last difference is reported as the
    quadrature error.
    """
    if not np.any(u.coeffs):
        return ErrorBudget(w.R, w.R1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
                           {"E2": 0.0, "T1": 0.0, "T2": 0.0}, coarsen)
    N = u.grid.N
    d = densities(u, k)
    M = d["rho"].shape[0]
    h = d["weight"]
    tab = w.at(M)
    r, i0 = _rolled(d, u.grid.L)
    # fine-grid line pairings
    Hu = padded_values(hilbert(u), M)
    r_Hu = np.roll(Hu, -i0)
    E1 = _line_pairing(r["rho"], r["u"] ** 2, tab.d3phi, M, h)
    E3 = _line_pairing(r["rho"], r["u"] ** (k + 1) * r_Hu, tab.d2phi, M, h)
    # periodic s-correlations for the local (non-commutator) mass-side terms
    chi = _periodic_table(tab.chi, M)
    dchi = _periodic_table(tab.dchi, M)
    uu = d["u"]
    I3 = _periodic_correlation(chi * dchi, uu * Hu, h)
    I4 = _periodic_correlation(chi ** 2 - chi ** (k + 2), uu ** (k + 2), h)
    T3 = float(np.sqrt(h / w.R * np.sum(I3 ** 2)))
    T4 = float(np.sqrt(h / w.R * np.sum(I4 ** 2)))
    # commutator terms: reduced resolution, refined until stable
    max_points = min(2 * N, M) if max_points is None else max_points
    n = max(16, N // coarsen)
    prev = _commutator_terms(u, w, k, n // 2, backend)
    cur = _commutator_terms(u, w, k, n, backend)
    while not _converged(cur, prev, rtol) and 2 * n <= max_points:
        n *= 2
        prev, cur = cur, _commutator_terms(u, w, k, n, backend)
    qerr = {name: abs(a - b) for name, a, b in zip(("E2", "T1", "T2"), cur, prev)}
    qerr["points"] = n
    E2, T1, T2 = cur
    return ErrorBudget(w.R, w.R1, float(E1), E2, float(E3), T1, T2, T3, T4, qerr,
                       N // n if n <= N else 1.0 / (n // N))


def error_integral_oracle(u, w, k, name, backend=None):
    """O(N^2) double sums for E1 and E3 (validation)."""
    d = densities(u, k)
    M = d["rho"].shape[0]
    h = d["weight"]
    tab = w.at(M)
    r, i0 = _rolled(d, u.grid.L)
    if name == "E1":
        return h * h * offset_bilinear(r["rho"], r["u"] ** 2, tab.d3phi, M, backend=backend)
    if name == "E3":
        Hu = np.roll(padded_values(hilbert(u), M), -i0)
        return h * h * offset_bilinear(r["rho"], r["u"] ** (k + 1) * Hu, tab.d2phi, M,
                                       backend=backend)
    raise ValueError(f"no oracle for {name!r}")


# ---------------------------------------------------------------------------
# localization lemma and Schur's test
# ---------------------------------------------------------------------------

def localization_ratio(f, g, k, dg=None):
    """(|int g f H f_x| + |int g f^{k+2}|) / (H (||f||^2 + ||f||^{k+2})), norms in H^{1/2}.

    ``g`` is a SpectralField or an array of grid samples; ``dg`` supplies the
    derivative samples when ``g`` is not band-limited.  H = sup|g| + sup|g'|.
    """
    if not np.any(f.coeffs):
        raise ValueError("localization ratio undefined for f = 0")
    grid = f.grid
    if isinstance(g, SpectralField):
        gv = g.values
        dgv = deriv(g).values if dg is None else np.asarray(dg, dtype=float)
    else:
        gv = np.asarray(g, dtype=float)
        if dg is None:
            dgv = deriv(SpectralField.from_values(grid, gv)).values
        else:
            dgv = np.asarray(dg, dtype=float)
    height = float(np.abs(gv).max() + np.abs(dgv).max())
    fv = f.values
    Dfv = frac_deriv(f, 1.0).values
    dx = grid.dx
    num = abs(dx * np.sum(gv * fv * Dfv)) + abs(dx * np.sum(gv * fv ** (k + 2)))
    nrm = sobolev_norm(f, 0.5, homogeneous=False)
    return float(num / (height * (nrm ** 2 + nrm ** (k + 2))))


class SchurValidationError(ValueError):
    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


@dataclass
class SchurResult:
    ratio: float
    lhs: float
    bound: float
    height: float
    y_support: float
    z_support: float


def schur_check(K, u, v, H, R1, R2, h=1.0):
    """|int int K u v| / (H sqrt(R1 R2) ||u|| ||v||) for a kernel sampled on a grid.

    ``K[i, j]`` is K(y_i, z_j); ``u`` lives on the y grid and ``v`` on the z
    grid, both with spacing ``h``.  The declared bounds are validated first.
    """
    K = np.asarray(K, dtype=float)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    nz = K != 0
    report = {
        "height": float(np.abs(K).max()) if K.size else 0.0,
        "y_support": float(nz.sum(axis=0).max() * h) if K.size else 0.0,
        "z_support": float(nz.sum(axis=1).max() * h) if K.size else 0.0,
    }
    problems = []
    if report["height"] > H:
        problems.append(f"height {report['height']} > {H}")
    if report["y_support"] > R1:
        problems.append(f"y-support {report['y_support']} > {R1}")
    if report["z_support"] > R2:
        problems.append(f"z-support {report['z_support']} > {R2}")
    if problems:
        raise SchurValidationError("kernel violates declared bounds: " + "; ".join(problems),
                                   report)
    lhs = abs(h * h * float(u @ K @ v))
    nu = math.sqrt(h * float(u @ u))
    nv = math.sqrt(h * float(v @ v))
    bound = H * math.sqrt(R1 * R2) * nu * nv
    ratio = 0.0 if lhs == 0.0 else lhs / bound
    return SchurResult(ratio, lhs, bound, report["height"], report["y_support"],
                       report["z_support"])
