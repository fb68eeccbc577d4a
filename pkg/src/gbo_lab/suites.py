"""Verification suites run by the command line.

Each suite returns a ``SuiteResult``: a pass flag, a JSON-ready report and
a mapping of extra artifact names to file contents.  Runtime aborts
(blow-up, step-size or guard violations) propagate to the caller.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import local, positivity
from .diagnostics import (center_gap_series, critical_index, gap_scale,
                          monotonicity_gap, scattering_cauchy)
from .littlewood_paley import (DyadicDecomposition, grouped_remainder, linear_estimate_ratio,
                               paraproduct_decompose, pi_term)
from .solver import simulate, encode_state, SimState
from .spectral import (SpectralField, TorusGrid, frac_deriv, hilbert, linear_propagate,
                       sobolev_norm)


@dataclass
class SuiteResult:
    name: str
    passed: bool
    report: dict
    artifacts: dict = field(default_factory=dict)


def random_band_limited(grid, rng, max_mode, radius, s=1.0):
    """Real trigonometric polynomial with modes |n| <= max_mode, scaled to H^s norm ``radius``."""
    N = grid.N
    m = int(max_mode)
    c = np.zeros(N, dtype=np.complex128)
    idx = np.arange(-m, m + 1)
    c[idx % N] = rng.standard_normal(2 * m + 1) + 1j * rng.standard_normal(2 * m + 1)
    c = 0.5 * (c + np.conj(c[(-np.arange(N)) % N]))
    c[N // 2] = 0.0
    f = SpectralField(grid, c)
    return f * (radius / sobolev_norm(f, s, homogeneous=False))


def _rel(a, b):
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


# ---------------------------------------------------------------------------
# conservation
# ---------------------------------------------------------------------------

def _drifts(traj):
    M = traj.column("mass")
    E = traj.column("energy")
    mean = traj.column("mean")
    return (float(np.max(np.abs(M - M[0])) / M[0]),
            float(np.max(np.abs(E - E[0])) / abs(E[0])),
            float(np.max(np.abs(mean - mean[0]))))


def drift_order(sim, dts, t_end, amp=None):
    """Fitted log-log slope of final mass and energy drift against dt."""
    data = dict(sim.data)
    if amp is not None:
        data["amp"] = amp
    rows = []
    for dt in dts:
        cfg = replace(sim, dt=dt, t_end=t_end, snapshot_every=t_end, checkpoint_every=None,
                      data=data)
        tr = simulate(cfg)
        M = tr.column("mass")
        E = tr.column("energy")
        rows.append({"dt": dt, "mass_drift": abs(M[-1] - M[0]) / M[0],
                     "energy_drift": abs(E[-1] - E[0]) / abs(E[0])})
    logdt = np.log([r["dt"] for r in rows])
    slope_m = float(np.polyfit(logdt, np.log([r["mass_drift"] for r in rows]), 1)[0])
    slope_e = float(np.polyfit(logdt, np.log([r["energy_drift"] for r in rows]), 1)[0])
    return {"rows": rows, "mass_order": slope_m, "energy_order": slope_e}


def conservation_suite(cfg, drift_tol=1e-8, mean_tol=1e-10, order_range=(3.5, 4.5)):
    sim = cfg.sim
    checkpoints = bytearray()

    def keep(state):
        checkpoints.extend(encode_state(state))

    traj = simulate(sim, on_checkpoint=keep)
    dm, de, dmean = _drifts(traj)
    report = {"mass_drift": dm, "energy_drift": de, "mean_drift": dmean,
              "records": len(traj.records)}
    passed = dm <= drift_tol and de <= drift_tol and dmean <= mean_tol
    if cfg.order.dts:
        order = drift_order(sim, cfg.order.dts, cfg.order.t_end, cfg.order.amp)
        ok = all(order_range[0] <= order[key] <= order_range[1]
                 for key in ("mass_order", "energy_order"))
        order["passed"] = ok
        report["order"] = order
        passed = passed and ok
    final = traj.snapshots[-1]
    artifacts = {
        "series.csv": traj.to_csv(),
        "final.gbo": encode_state(SimState(traj.times[-1], final, sim.k,
                                           sim.n_steps)),
    }
    if checkpoints:
        artifacts["checkpoints.gbo"] = bytes(checkpoints)
    return SuiteResult("conservation", passed, report, artifacts)


# ---------------------------------------------------------------------------
# monotonicity
# ---------------------------------------------------------------------------

def monotonicity_ensemble(k, count, rng, N=128, max_mode=20, radius=(1.0, 1.0)):
    """Minimum of gap/scale over random torus fields, for both gap forms.

    H^1 norms are drawn uniformly from ``radius``; the default is the unit sphere.
    """
    grid = TorusGrid(N, 2 * np.pi)
    worst = {"literal": np.inf, "homogeneous": np.inf}
    for _ in range(count):
        f = random_band_limited(grid, rng, rng.integers(1, max_mode), rng.uniform(*radius))
        scale = gap_scale(f, k)
        for form in worst:
            worst[form] = min(worst[form], monotonicity_gap(f, k, form) / scale)
    return {key: float(v) for key, v in worst.items()}


def sample_trajectory_configs(sim, count, t_end):
    """Gaussian data of graded amplitude and width for the gap-series check."""
    amps = np.linspace(0.3, 0.7, count)
    widths = np.linspace(3.0, 7.0, count)
    out = []
    for a, w in zip(amps, widths):
        data = {"family": "gaussian", "amp": float(a), "width": float(w)}
        out.append(replace(sim, t_end=t_end, data=data, checkpoint_every=None))
    return out


def gap_series_check(traj, rtol=1e-9):
    """Smallest increment of x_E - x_M and the tolerance it is held to."""
    gap = center_gap_series(traj)
    steps = np.diff(gap)
    tol = rtol * max(1.0, float(np.max(np.abs(gap))))
    return float(steps.min()), tol


def monotonicity_suite(cfg, tol=1e-10):
    opts = cfg.monotonicity
    rng = np.random.default_rng(cfg.seed)
    report = {"ensemble": {}, "trajectories": []}
    passed = True
    for k in opts.k_values:
        worst = monotonicity_ensemble(k, opts.fields, rng, opts.grid_N, opts.max_mode)
        ok = worst["literal"] >= -tol
        # larger fields, where the M^2 factor matters; reported but not asserted
        off = monotonicity_ensemble(k, max(1, opts.fields // 5), rng, opts.grid_N,
                                    opts.max_mode, radius=(0.05, 3.0))
        report["ensemble"][str(k)] = {"min_relative_gap": worst["literal"],
                                      "min_relative_gap_homogeneous": worst["homogeneous"],
                                      "off_sphere": off, "fields": opts.fields, "passed": ok}
        passed = passed and ok
    for sim in sample_trajectory_configs(cfg.sim, opts.trajectories, opts.t_end):
        tr = simulate(sim)
        step_min, step_tol = gap_series_check(tr)
        ok = step_min >= -step_tol
        report["trajectories"].append({"data": sim.data, "min_increment": step_min,
                                       "tolerance": step_tol, "passed": ok})
        passed = passed and ok
    return SuiteResult("monotonicity", passed, report)


# ---------------------------------------------------------------------------
# localized functional
# ---------------------------------------------------------------------------

def _oracle_scale(u, w, k):
    """h^2 sum|rho| sum|e| sup|Phi|, an upper bound for |M| used as the error scale."""
    from .diagnostics import densities

    d = densities(u, k)
    mass = float(np.sum(d["weight"] * np.abs(d["rho"])))
    energy = float(np.sum(d["weight"] * np.abs(d["e"])))
    return mass * energy * float(np.abs(w.tables.phi).max())


def random_schur_kernels(count, rng, n=64, h=1.0):
    """Random banded kernels with declared height and supports, plus test vectors."""
    for _ in range(count):
        H = float(rng.uniform(0.5, 2.0))
        b1 = int(rng.integers(1, n // 4))
        b2 = int(rng.integers(1, n // 4))
        K = rng.uniform(-H, H, (n, n))
        i, j = np.indices((n, n))
        K[(j - i > b2) | (i - j > b1)] = 0.0
        # row i spans columns i-b1..i+b2; column j spans rows j-b2..j+b1
        R1 = (b1 + b2 + 1) * h
        R2 = (b1 + b2 + 1) * h
        yield K, rng.standard_normal(n), rng.standard_normal(n), H, R1, R2


def local_suite(cfg, grow=0.1):
    sim = cfg.sim
    traj = simulate(replace(sim, checkpoint_every=None))
    u0 = traj.snapshots[0]
    rows = []
    for R in cfg.radii:
        w = local.build_weights(R, grid=u0.grid)
        m_fft = local.interaction_M(u0, w, sim.k)
        m_direct = local.interaction_M(u0, w, sim.k, oracle=True)
        scale = _oracle_scale(u0, w, sim.k)
        dm = local.dM_report(traj, w, sim.k)
        budget = local.error_budget(u0, w, sim.k)
        rows.append({
            "R": R,
            "R1": w.R1,
            "constants": w.constants,
            "oracle_error": abs(m_fft - m_direct) / max(scale, 1e-300),
            "sup_M_over_R": float(np.max(np.abs(dm.M)) / R),
            "negative_part": dm.negative_part,
            "min_residual": dm.min_residual,
            "budget": budget.to_dict(),
            "magnitudes": budget.magnitudes(),
        })
    checks = {"oracle": all(r["oracle_error"] <= 1e-10 for r in rows)}
    ratios = [r["sup_M_over_R"] for r in rows]
    checks["bounded"] = all(b <= (1 + grow) * a for a, b in zip(ratios, ratios[1:]))
    mags = [r["magnitudes"] for r in rows]
    checks["budget_decreasing"] = all(
        all(nxt[key] < cur[key] for key in cur) for cur, nxt in zip(mags, mags[1:]))
    neg = [r["negative_part"] for r in rows]
    checks["negative_part_shrinking"] = all(b <= a for a, b in zip(neg, neg[1:]))
    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    for K, u, v, H, R1, R2 in random_schur_kernels(100, rng):
        worst = max(worst, local.schur_check(K, u, v, H, R1, R2).ratio)
    checks["schur"] = worst <= 1 + 1e-10
    report = {"radii": rows, "checks": checks, "schur_max_ratio": worst}
    return SuiteResult("local", all(checks.values()), report)


# ---------------------------------------------------------------------------
# positivity
# ---------------------------------------------------------------------------

def gradient_fd_error(p, rng, directions=20, eps=1e-6):
    c = positivity.colored_start(p, rng)
    _, grad = positivity.eval_f_grad(c, p)
    worst = 0.0
    for _ in range(directions):
        d = rng.standard_normal(p.dim)
        fd = (positivity.f_value(c + eps * d, p) - positivity.f_value(c - eps * d, p)) / (2 * eps)
        exact = float(grad @ d)
        worst = max(worst, abs(fd - exact) / max(abs(exact), 1e-300))
    return worst


def positivity_case(k, N_modes, opts, seed, workers=1):
    p = positivity.build_problem(N_modes, k, positivity.make_chi(opts.chi))
    rep = positivity.minimize_sphere(p, restarts=opts.restarts, tol=opts.tol, seed=seed,
                                     workers=workers)
    fals = positivity.random_falsifier(p, opts.samples, seed=seed)
    out = positivity.report_json(p, rep, fals)
    fd = gradient_fd_error(p, np.random.default_rng(seed), opts.fd_directions)
    out["gradient_fd_error"] = fd
    ok = out["f_min"] >= -1e-6 and fd <= 1e-6 and rep.converged
    if rep.converged:
        ok = (ok and rep.pohozaev1_residual <= 1e-6 * abs(rep.lam)
              and rep.pohozaev2_residual <= 1e-6 * rep.pohozaev2_scale)
    out["passed"] = bool(ok)
    return out


def positivity_suite(cfg, workers=1):
    opts = cfg.positivity
    cases = []
    for k in opts.k_values:
        for n in opts.N_modes:
            cases.append(positivity_case(k, n, opts, cfg.seed, workers))
    return SuiteResult("positivity", all(c["passed"] for c in cases), {"cases": cases})


# ---------------------------------------------------------------------------
# operators and norms
# ---------------------------------------------------------------------------

def operator_identities(N=1024, L=2 * np.pi, t=0.37, seed=0):
    grid = TorusGrid(N, L)
    x = grid.xs
    q = 2 * np.pi / L
    cos = SpectralField.from_values(grid, np.cos(q * x))
    sin = np.sin(q * x)
    out = {"hilbert_cos": _rel(hilbert(cos).values, sin)}
    rng = np.random.default_rng(seed)
    f = random_band_limited(grid, rng, N // 4, 1.0)
    f = f + 0.3
    hh = hilbert(hilbert(f)).values
    out["hilbert_square"] = _rel(hh, -(f.values - f.mean()))
    c4 = np.cos(4 * q * x)
    half = frac_deriv(SpectralField.from_values(grid, c4), 0.5).values
    out["half_derivative"] = _rel(half, 2.0 * math.sqrt(q) * c4)
    iso = []
    for s in (0.0, 0.5, 1.0 / 3.0, 1.0):
        a = sobolev_norm(f, s)
        iso.append(abs(sobolev_norm(linear_propagate(f, t), s) - a) / a)
    out["propagator_isometry"] = max(iso)
    return out


def _centered(f):
    N = f.grid.N
    return np.concatenate([f.coeffs[N // 2:], f.coeffs[:N // 2]])   # modes -N/2 .. N/2-1


def _from_centered(grid, c):
    N = grid.N
    return SpectralField(grid, np.concatenate([c[N // 2:], c[:N // 2]]))


def direct_product_coeffs(fields):
    """Coefficients of a product by repeated linear convolution, truncated to the grid."""
    N = fields[0].grid.N
    acc = _centered(fields[0])
    lo = -(N // 2)
    for f in fields[1:]:
        acc = np.convolve(acc, _centered(f))
        lo -= N // 2
    n = np.arange(lo, lo + acc.size)
    keep = (n >= -(N // 2)) & (n < N // 2)
    return acc[keep]


def pi_term_direct(psi, phi, decomp, k):
    """pi(psi, phi) built from direct coefficient convolutions."""
    g = psi.grid
    total = np.zeros(g.N, dtype=np.complex128)
    for j in decomp.bands:
        low = SpectralField(g, np.where(decomp.mask(j, "well_below"), psi.coeffs, 0.0))
        hi = SpectralField(g, np.where(decomp.mask(j, "near"), phi.coeffs, 0.0))
        prod = _from_centered(g, direct_product_coeffs([low] * k + [hi]))
        total += np.where(decomp.mask(j, "at"), prod.coeffs, 0.0)
    return SpectralField(g, 1j * g.freqs * total)


def two_band_field(grid, rng, low=(1, 2), high=(32, 48), amp=0.5):
    """Real field with energy only in two separated frequency bands."""
    N = grid.N
    c = np.zeros(N, dtype=np.complex128)
    for a, b in (low, high):
        n = np.arange(a, b + 1)
        z = amp * (rng.standard_normal(n.size) + 1j * rng.standard_normal(n.size)) / n.size
        c[n] = z
        c[N - n] = np.conj(z)
    return SpectralField(grid, c)


def paraproduct_checks(count, rng, N=256, k=6):
    grid = TorusGrid(N, 2 * np.pi)
    dec = DyadicDecomposition(grid, k=k)
    wide = DyadicDecomposition(grid, k=k, C_k=len(dec.bands) + 2)
    worst_id = 0.0
    for _ in range(count):
        u = random_band_limited(grid, rng, rng.integers(2, N // 4), rng.uniform(0.1, 1.0), 0.5)
        parts = paraproduct_decompose(u, wide, k)
        g = grouped_remainder(u, wide, k)
        err = np.linalg.norm((parts.F + parts.pi - g).coeffs)
        worst_id = max(worst_id, float(err / np.linalg.norm(parts.F.coeffs)))
    # a narrow gap so that the low band sits well below the high one at this size
    gap2 = DyadicDecomposition(grid, J=2, k=k)
    worst_pi = 0.0
    for _ in range(3):
        u = two_band_field(grid, rng)
        a = pi_term(u, u, gap2, k).coeffs
        b = pi_term_direct(u, u, gap2, k).coeffs
        worst_pi = max(worst_pi, float(np.linalg.norm(a - b) / np.linalg.norm(b)))
    return worst_id, worst_pi


def norms_suite(cfg):
    opts = cfg.norms
    rng = np.random.default_rng(cfg.seed)
    ident = operator_identities(seed=cfg.seed)
    worst_id, worst_pi = paraproduct_checks(opts.fields, rng, opts.grid_N, opts.k)
    grid = TorusGrid(opts.grid_N, 2 * np.pi)
    s = critical_index(opts.k)
    phi = random_band_limited(grid, rng, 16, 1.0, s)
    lin = linear_estimate_ratio(phi, s, np.linspace(0.0, 2 * np.pi, 65))
    checks = {
        "operator_identities": all(v <= 1e-12 for v in ident.values()),
        "paraproduct_identity": worst_id <= 1e-10,
        "pi_oracle": worst_pi <= 1e-8,
    }
    report = {"operator_identities": ident, "paraproduct_identity_error": worst_id,
              "pi_oracle_error": worst_pi, "linear_estimate_ratio": float(lin),
              "checks": checks}
    return SuiteResult("norms", all(checks.values()), report)


# ---------------------------------------------------------------------------
# scattering diagnostic (used by tests; not a CLI suite)
# ---------------------------------------------------------------------------

def cauchy_decay(traj, k, split):
    d = scattering_cauchy(traj, critical_index(k))
    t = traj.times[1:]
    early = float(d[t <= split].sum())
    late = float(d[t > split].sum())
    return early, late, d


SUITE_FUNCS = {
    "conservation": conservation_suite,
    "monotonicity": monotonicity_suite,
    "local": local_suite,
    "positivity": positivity_suite,
    "norms": norms_suite,
}
