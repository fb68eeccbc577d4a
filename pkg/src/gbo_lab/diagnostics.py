"""Densities, currents, conserved quantities and centers for gBO fields.

All integrals of polynomial densities are evaluated exactly for the
band-limited field by sampling on a padded grid fine enough for degree
2k+2 products.  Position-weighted integrals use the same fine grid with
coordinates unwrapped around the field's circular-mean position.
"""

import csv
import io
from dataclasses import dataclass, field, asdict

import numpy as np

from .spectral import (
    SpectralField,
    frac_deriv,
    deriv,
    linear_propagate,
    pad_size,
    padded_values,
    sobolev_norm,
)
from .littlewood_paley import SpaceTimeArray, lk_linf

CSV_COLUMNS = ("t", "mass", "energy", "mean", "xM", "xE", "Jint", "Kint", "Pint",
               "sup", "H12", "Hsk")

BOUNDARY_FRACTION = 1e-6


class GuardViolation(RuntimeError):
    """Field mass reached the region near the antipode of its center."""


def critical_index(k):
    return 0.5 - 1.0 / k


@dataclass
class Observables:
    t: float
    mass: float
    energy: float
    mean: float
    xM: float
    xE: float
    Jint: float
    Kint: float
    Pint: float
    sup: float
    H12: float
    Hsk: float
    centers_valid: bool = True
    boundary_fraction: float = 0.0

    def row(self):
        return [getattr(self, c) for c in CSV_COLUMNS]


@dataclass
class _Samples:
    """Fine-grid samples shared by every observable of one field."""
    u: np.ndarray
    du: np.ndarray      # |D| u = H u_x
    ux: np.ndarray
    x: np.ndarray
    weight: float       # quadrature weight L / M


def _samples(u, k):
    M = pad_size(u.grid, 2 * k + 2)
    uu = padded_values(u, M)
    du = padded_values(frac_deriv(u, 1.0), M)
    ux = padded_values(deriv(u), M)
    x = np.arange(M) * (u.grid.L / M)
    return _Samples(uu, du, ux, x, u.grid.L / M)


def circular_center(rho, x, L):
    z = np.sum(rho * np.exp(2j * np.pi * x / L))
    if abs(z) == 0.0:
        return 0.5 * L
    return (np.angle(z) * L / (2 * np.pi)) % L


def unwrapped_positions(x, center, L):
    return center + (x - center + 0.5 * L) % L - 0.5 * L


def boundary_mass_fraction(rho, x, center, L):
    total = rho.sum()
    if total == 0:
        return 0.0
    off = np.abs(unwrapped_positions(x, center, L) - center)
    return float(rho[off > 3.0 * L / 8.0].sum() / total)


def densities(u, k):
    """Pointwise rho, e, j, kappa on the fine grid (positions in ``x``)."""
    s = _samples(u, k)
    rho = s.u ** 2
    e = 0.5 * s.u * s.du + s.u ** (k + 2) / (k + 2)
    j = 2.0 * s.u * s.du + 2.0 * (k + 1) / (k + 2) * s.u ** (k + 2)
    kappa = s.ux ** 2 + 1.5 * s.u ** (k + 1) * s.du + 0.5 * s.u ** (2 * k + 2)
    return {"x": s.x, "u": s.u, "rho": rho, "e": e, "j": j, "kappa": kappa,
            "weight": s.weight}


def observables(u, k, t=0.0, guard=BOUNDARY_FRACTION):
    d = densities(u, k)
    w = d["weight"]
    L = u.grid.L
    M = w * d["rho"].sum()
    E = w * d["e"].sum()
    P = w * float(np.sum(d["u"] ** (k + 2)))
    if M > 0:
        c = circular_center(d["rho"], d["x"], L)
        xt = unwrapped_positions(d["x"], c, L)
        frac = boundary_mass_fraction(d["rho"], d["x"], c, L)
        xM = w * np.sum(xt * d["rho"]) / M
        xE = w * np.sum(xt * d["e"]) / E if E != 0 else 0.0
    else:
        frac, xM, xE = 0.0, 0.0, 0.0
    return Observables(
        t=float(t),
        mass=float(M),
        energy=float(E),
        mean=float(L * u.coeffs[0].real),
        xM=float(xM),
        xE=float(xE),
        Jint=float(w * d["j"].sum()),
        Kint=float(w * d["kappa"].sum()),
        Pint=float(P),
        sup=float(np.abs(d["u"]).max()),
        H12=sobolev_norm(u, 0.5, homogeneous=False),
        Hsk=sobolev_norm(u, critical_index(k)),
        centers_valid=frac <= guard,
        boundary_fraction=frac,
    )


def check_guard(u, k, guard=BOUNDARY_FRACTION):
    obs = observables(u, k)
    if not obs.centers_valid:
        raise GuardViolation(
            f"{obs.boundary_fraction:.3e} of the mass lies within L/8 of the antipode "
            f"(threshold {guard:.1e})"
        )
    return obs


def monotonicity_gap(u, k, form="literal"):
    """int rho int kappa - int j int e - k^2/(2(k+2)^2) * [M^2] * (int u^{k+2})^2.

    ``form="literal"`` keeps the M^2 factor.  ``form="homogeneous"`` omits it;
    both sides then scale alike under u -> c u, and the literal bound follows
    from it whenever M <= 1.
    """
    obs = observables(u, k)
    c = k * k / (2.0 * (k + 2) ** 2)
    lower = c * obs.Pint ** 2
    if form == "literal":
        lower *= obs.mass ** 2
    elif form != "homogeneous":
        raise ValueError(f"unknown form {form!r}")
    return obs.mass * obs.Kint - obs.Jint * obs.energy - lower


def gap_scale(u, k):
    obs = observables(u, k)
    return abs(obs.mass * obs.Kint) + abs(obs.Jint * obs.energy)


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

@dataclass
class Trajectory:
    config: object
    records: list
    snapshots: list = field(default_factory=list)
    snapshot_offsets: list = field(default_factory=list)

    @property
    def times(self):
        return np.array([r.t for r in self.records])

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])

    def spacetime(self, start=0, stop=None):
        stop = len(self.snapshots) if stop is None else stop
        t = self.times
        dt = t[1] - t[0] if len(t) > 1 else 1.0
        return SpaceTimeArray.from_fields(self.snapshots[start:stop], dt, t[start])

    def to_csv(self):
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(CSV_COLUMNS)
        for r in self.records:
            wr.writerow([_fmt(v) for v in r.row()])
        return buf.getvalue()


def _fmt(v):
    return repr(float(v))


def read_observables_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    if tuple(rows[0]) != CSV_COLUMNS:
        raise ValueError("unexpected CSV header")
    return [dict(zip(CSV_COLUMNS, map(float, r))) for r in rows[1:]]


def _uniform_spacing(t, minimum):
    if len(t) < minimum:
        raise ValueError(f"need at least {minimum} records")
    d = np.diff(t)
    if not np.allclose(d, d[0], rtol=1e-9, atol=1e-12):
        raise ValueError("records are not uniformly spaced")
    return float(d[0])


def unwrap_positions(x, L):
    return np.unwrap(np.asarray(x), period=L)


@dataclass
class CenterResidual:
    times: np.ndarray
    mass_rate: np.ndarray
    Jint: np.ndarray
    mass_residual: np.ndarray
    energy_rate: np.ndarray
    Kint: np.ndarray
    energy_residual: np.ndarray


def center_current_residual(traj):
    """Central differences of int x rho and int x e against int j and int kappa."""
    t = traj.times
    h = _uniform_spacing(t, 3)
    L = traj.snapshots[0].grid.L if traj.snapshots else np.inf
    M = traj.column("mass")
    E = traj.column("energy")
    XM = M * unwrap_positions(traj.column("xM"), L)
    XE = E * unwrap_positions(traj.column("xE"), L)
    rate_m = (XM[2:] - XM[:-2]) / (2 * h)
    rate_e = (XE[2:] - XE[:-2]) / (2 * h)
    J = traj.column("Jint")[1:-1]
    K = traj.column("Kint")[1:-1]
    return CenterResidual(t[1:-1], rate_m, J, rate_m - J, rate_e, K, rate_e - K)


def center_gap_series(traj):
    L = traj.snapshots[0].grid.L if traj.snapshots else np.inf
    return unwrap_positions(traj.column("xE"), L) - unwrap_positions(traj.column("xM"), L)


def scattering_cauchy(traj, s):
    """Norms ||w(t_{i+1}) - w(t_i)||_{H^s_dot} with w(t) = V(-t) u(t)."""
    if len(traj.snapshots) < 2:
        raise ValueError("need at least 2 records")
    t = traj.times
    w = [linear_propagate(u, -ti) for u, ti in zip(traj.snapshots, t)]
    return np.array([sobolev_norm(w[i + 1] - w[i], s) for i in range(len(w) - 1)])


def packet_velocity(traj):
    """Least-squares slope of the mass center over the trajectory."""
    for r in traj.records:
        if not r.centers_valid:
            raise GuardViolation(f"packet reached the boundary region at t={r.t}")
    L = traj.snapshots[0].grid.L if traj.snapshots else np.inf
    t = traj.times
    x = unwrap_positions(traj.column("xM"), L)
    slope, _ = np.polyfit(t, x, 1)
    return float(slope)


def lk_linf_norm(a, k):
    return lk_linf(a, k)
