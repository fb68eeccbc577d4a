"""Sphere-constrained minimization of  f(u) = int chi^2 u^{k+1} |D| u  on the 2pi-torus.

A feasible point is a real, mean-zero trigonometric polynomial of degree N,

    u(x) = sum_{n=1}^{N} a_n cos(n x) + b_n sin(n x),

stored as the parameter vector c = (a_1..a_N, b_1..b_N).  All integrals are
computed by FFT quadrature on enough points to be exact for the polynomial
integrands involved.  Inner products and gradients are taken in L^2(T):
the function represented by a parameter vector g has L^2 pairing
pi * <g, h> with another.
"""

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

TWO_PI = 2.0 * np.pi


class InfeasibleError(ValueError):
    pass


class NotConvergedError(ValueError):
    pass


# ---------------------------------------------------------------------------
# weight chi as a cosine polynomial
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CosineWeight:
    """chi(x) = sum_j coeffs[j] cos(j x)."""
    coeffs: tuple = (1.0,)
    label: str = "one"

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def values(self, x):
        x = np.asarray(x, dtype=float)
        return sum(c * np.cos(j * x) for j, c in enumerate(self.coeffs))

    def spec(self):
        return {"label": self.label, "cos_coeffs": list(self.coeffs)}


def make_chi(spec=None):
    """``None``/"one" -> chi = 1; {"family": "cosine", "eps": e} -> 1 - e (1 - cos x)/2;
    {"cos_coeffs": [...]} -> explicit cosine polynomial."""
    if spec is None or spec == "one" or spec == 1 or spec == 1.0:
        return CosineWeight((1.0,), "one")
    if isinstance(spec, CosineWeight):
        return spec
    if isinstance(spec, dict):
        if spec.get("family") == "cosine":
            e = float(spec.get("eps", 0.0))
            return CosineWeight((1.0 - 0.5 * e, 0.5 * e), f"cosine(eps={e!r})")
        if "cos_coeffs" in spec:
            return CosineWeight(tuple(float(c) for c in spec["cos_coeffs"]),
                                spec.get("label", "custom"))
    raise ValueError(f"unrecognized chi spec {spec!r}")


# ---------------------------------------------------------------------------
# problem
# ---------------------------------------------------------------------------

def _check_k(k):
    if not isinstance(k, (int, np.integer)) or k < 4 or k % 2:
        raise ValueError(f"k must be even >= 4, got {k!r}")


@dataclass(eq=False)
class SphereProblem:
    N_modes: int
    k: int
    alpha: float
    chi: CosineWeight
    M: int                      # quadrature points
    metric: str = "l2"

    @property
    def dim(self):
        return 2 * self.N_modes

    @property
    def n(self):
        return np.arange(1, self.N_modes + 1, dtype=float)

    @property
    def weights(self):
        """n^{2 alpha} for each parameter (a and b blocks)."""
        w = self.n ** (2.0 * self.alpha)
        return np.concatenate([w, w])

    @property
    def nn(self):
        return np.concatenate([self.n, self.n])

    @property
    def x(self):
        return np.arange(self.M) * (TWO_PI / self.M)

    @property
    def chi2(self):
        return self.chi.values(self.x) ** 2

    @property
    def chi2_dd(self):
        """(chi^2)'' sampled on the quadrature grid (exact spectral derivative)."""
        c = np.fft.rfft(self.chi2)
        m = np.arange(c.shape[0])
        return np.fft.irfft(-(m ** 2) * c, self.M)

    def chi2_dd_sup(self):
        xs = np.linspace(0.0, TWO_PI, 8 * self.M, endpoint=False)
        c = np.fft.rfft(self.chi2)
        m = np.arange(c.shape[0])
        vals = np.real(np.exp(1j * np.outer(xs, m)) @ (-(m ** 2) * c * _rfft_weights(self.M)))
        return float(np.abs(vals).max())


def _rfft_weights(M):
    w = np.full(M // 2 + 1, 2.0 / M)
    w[0] = 1.0 / M
    if M % 2 == 0:
        w[-1] = 1.0 / M
    return w


def build_problem(N_modes, k, chi=None, metric="l2"):
    _check_k(k)
    if N_modes < 1:
        raise ValueError("N_modes must be >= 1")
    if metric not in ("l2", "h_alpha"):
        raise ValueError("metric must be 'l2' or 'h_alpha'")
    chi = make_chi(chi)
    degree = (k + 2) * N_modes + 2 * chi.degree
    M = 16
    while M <= degree:
        M *= 2
    return SphereProblem(int(N_modes), int(k), 0.5 - 2.0 / (k + 2), chi, M, metric)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _spectrum(c, p):
    """rfft-normalized half spectrum for parameter vectors (..., 2N)."""
    N = p.N_modes
    a, b = c[..., :N], c[..., N:]
    spec = np.zeros(c.shape[:-1] + (p.M // 2 + 1,), dtype=np.complex128)
    spec[..., 1:N + 1] = 0.5 * (a - 1j * b)
    return spec


def synthesize(c, p, order=0):
    """Samples of u, |D| u (order="D") or u_x (order="x")."""
    spec = _spectrum(np.asarray(c, dtype=float), p)
    m = np.arange(p.M // 2 + 1)
    if order == "D":
        spec = spec * m
    elif order == "x":
        spec = spec * (1j * m)
    return np.fft.irfft(spec, p.M) * p.M


def analyze(F, p):
    """(int F cos(n x), int F sin(n x)) for n = 1..N as a parameter vector."""
    Fh = np.fft.rfft(F, axis=-1) / p.M
    N = p.N_modes
    return np.concatenate([TWO_PI * Fh[..., 1:N + 1].real, -TWO_PI * Fh[..., 1:N + 1].imag],
                          axis=-1)


def check_feasible(c, p):
    c = np.asarray(c, dtype=float)
    if c.shape[-1] != p.dim:
        raise InfeasibleError(f"expected {p.dim} parameters, got {c.shape[-1]}")
    if not np.all(np.isfinite(c)):
        raise InfeasibleError("non-finite parameters")
    if not np.any(c):
        raise InfeasibleError("u = 0 is not on the sphere")
    return c


def f_value(c, p):
    u = synthesize(c, p)
    Du = synthesize(c, p, "D")
    return float(TWO_PI / p.M * np.sum(p.chi2 * u ** (p.k + 1) * Du))


def eval_f_grad(c, p):
    """Value and parameter gradient df/dc.

    The L^2 gradient function Q_{<=N}[(k+1) chi^2 u^k |D|u + |D|(chi^2 u^{k+1})]
    has parameter vector ``grad / pi``.
    """
    c = check_feasible(c, p)
    k = p.k
    u = synthesize(c, p)
    Du = synthesize(c, p, "D")
    chi2 = p.chi2
    uk = u ** k
    val = float(TWO_PI / p.M * np.sum(chi2 * uk * u * Du))
    A = (k + 1) * chi2 * uk * Du
    B = chi2 * uk * u
    grad = analyze(A, p) + p.nn * analyze(B, p)
    return val, grad


def h_alpha_norm_sq(c, p, s=None):
    s = p.alpha if s is None else s
    w = np.concatenate([p.n, p.n]) ** (2.0 * s)
    return float(np.pi * np.sum(w * np.asarray(c) ** 2))


def normalize(c, p):
    return np.asarray(c, dtype=float) / math.sqrt(h_alpha_norm_sq(c, p))


# ---------------------------------------------------------------------------
# Lagrange multiplier and residuals
# ---------------------------------------------------------------------------

def _l2(x, y):
    return float(np.pi * np.dot(x, y))


def lagrange_multiplier(c, p, grad=None):
    """Least-squares lambda in grad f = lambda D^{2 alpha} u, and the residual norm."""
    if grad is None:
        _, grad = eval_f_grad(c, p)
    G = grad / np.pi
    Da = p.weights * c
    lam = _l2(G, Da) / _l2(Da, Da)
    res = G - lam * Da
    return lam, math.sqrt(max(_l2(res, res), 0.0)), res


@dataclass
class ExtremizerReport:
    u0: list
    f_value: float
    lam: float
    lagrange_residual: float
    pohozaev1_residual: float
    pohozaev2_residual: float
    pohozaev2_scale: float
    restarts: int
    converged: bool
    best_restart: int
    iterations: int
    tol: float

    def to_dict(self):
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d


def pohozaev_terms(c, p, lam):
    """Both sides of the second identity and its scale."""
    k = p.k
    u = synthesize(c, p)
    Du = synthesize(c, p, "D")
    ux = synthesize(c, p, "x")
    chi2 = p.chi2
    wq = TWO_PI / p.M
    lhs = lam * _l2(p.weights * c, p.nn * c)
    t1 = (k + 1) * wq * np.sum(chi2 * u ** k * (Du ** 2 + ux ** 2))
    t2 = wq * np.sum(p.chi2_dd * u ** (k + 2)) / (k + 2)
    rhs = t1 - t2
    return float(lhs), float(rhs), float(abs(lhs) + abs(t1) + abs(t2))


def lagrange_pohozaev_residuals(rep, p, require_converged=True):
    if require_converged and not rep.converged:
        raise NotConvergedError("residuals require a converged extremizer")
    c = np.asarray(rep.u0, dtype=float)
    val, grad = eval_f_grad(c, p)
    lam, lres, _ = lagrange_multiplier(c, p, grad)
    lhs, rhs, scale = pohozaev_terms(c, p, lam)
    return {
        "lambda": lam,
        "lagrange": lres,
        "pohozaev1": abs(lam - (p.k + 2) * val),
        "pohozaev2": abs(lhs - rhs),
        "pohozaev2_scale": scale,
    }


# ---------------------------------------------------------------------------
# optimizer
# ---------------------------------------------------------------------------

def _direction(c, grad, p):
    """Tangential descent direction (parameter vector) and its L^2 norm."""
    G = grad / np.pi
    Da = p.weights * c
    if p.metric == "h_alpha":
        # Riesz representative in the H^alpha_dot metric
        G = G / p.weights
        tang = G - (np.dot(G, p.weights * c) / np.dot(c, p.weights * c)) * c
    else:
        tang = G - (_l2(G, Da) / _l2(Da, Da)) * Da
    _, lres, _ = lagrange_multiplier(c, p, grad)
    return tang, lres


@dataclass
class _Run:
    c: np.ndarray
    f: float
    converged: bool
    iterations: int
    gnorm: float


def _descend(c0, p, tol, max_iter):
    c = normalize(c0, p)
    f, g = eval_f_grad(c, p)
    d, gn = _direction(c, g, p)
    step = 1.0 / max(1.0, float(np.linalg.norm(d)))
    prev = None
    it = 0
    while gn > tol and it < max_iter:
        it += 1
        if prev is not None:
            s_vec = c - prev[0]
            y_vec = d - prev[1]
            sy = float(np.dot(s_vec, y_vec))
            if sy > 0:
                step = float(np.dot(s_vec, s_vec)) / sy
        t = step
        slope = float(np.dot(d, g))        # directional derivative along -d is -slope
        accepted = False
        for _ in range(60):
            trial = normalize(c - t * d, p)
            ft = f_value(trial, p)
            if ft <= f - 1e-4 * t * slope or t < 1e-18:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        prev = (c, d)
        c = trial
        f, g = eval_f_grad(c, p)
        d, gn = _direction(c, g, p)
        step = t
    return _Run(c, f, gn <= tol, it, gn)


def colored_start(p, rng):
    """Random start with coefficient amplitudes proportional to |xi|^{-1}."""
    amp = 1.0 / p.nn
    return normalize(rng.standard_normal(p.dim) * amp, p)


def _restart_task(args):
    p, seed, tol, max_iter = args
    rng = np.random.default_rng(seed)
    return _descend(colored_start(p, rng), p, tol, max_iter)


def minimize_sphere(p, restarts=32, tol=1e-8, seed=0, max_iter=20000, workers=1,
                    starts=None):
    """Best point over ``restarts`` projected-gradient descents on the sphere.

    Restart ``i`` uses the seed sequence child ``i`` of ``seed`` so results do
    not depend on ``workers``.  Ties in f are broken by the lowest restart id.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    children = np.random.SeedSequence(seed).spawn(restarts)
    if starts is not None:
        runs = [_descend(np.asarray(s0, dtype=float), p, tol, max_iter) for s0 in starts]
    elif workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            runs = list(ex.map(_restart_task, [(p, ch, tol, max_iter) for ch in children]))
    else:
        runs = [_restart_task((p, ch, tol, max_iter)) for ch in children]
    conv = [i for i, r in enumerate(runs) if r.converged]
    pool = conv if conv else list(range(len(runs)))
    best = min(pool, key=lambda i: (runs[i].f, i))
    r = runs[best]
    val, grad = eval_f_grad(r.c, p)
    lam, lres, _ = lagrange_multiplier(r.c, p, grad)
    lhs, rhs, scale = pohozaev_terms(r.c, p, lam)
    return ExtremizerReport(
        u0=[float(v) for v in r.c],
        f_value=val,
        lam=lam,
        lagrange_residual=lres,
        pohozaev1_residual=abs(lam - (p.k + 2) * val),
        pohozaev2_residual=abs(lhs - rhs),
        pohozaev2_scale=scale,
        restarts=len(runs),
        converged=bool(conv),
        best_restart=best,
        iterations=r.iterations,
        tol=tol,
    )


# ---------------------------------------------------------------------------
# random search and embedding
# ---------------------------------------------------------------------------

def sphere_samples(p, count, rng):
    """Uniform samples of the H^alpha_dot unit sphere (uniform in whitened coordinates)."""
    z = rng.standard_normal((count, p.dim))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return z / np.sqrt(np.pi * p.weights)[None, :]


def batch_f(cs, p):
    u = synthesize(cs, p)
    Du = synthesize(cs, p, "D")
    return TWO_PI / p.M * np.sum(p.chi2[None, :] * u ** (p.k + 1) * Du, axis=1)


@dataclass
class FalsifierReport:
    f_min: float
    sample_min: float
    polished_min: float
    samples: int
    polished: int
    argmin: list


def random_falsifier(p, samples, seed=0, polish=10, chunk=10000, tol=1e-8, max_iter=5000):
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    best_vals = np.empty(0)
    best_pts = np.empty((0, p.dim))
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        cs = sphere_samples(p, m, rng)
        vals = batch_f(cs, p)
        best_vals = np.concatenate([best_vals, vals])
        best_pts = np.concatenate([best_pts, cs])
        keep = np.argsort(best_vals, kind="stable")[:max(polish, 1)]
        best_vals, best_pts = best_vals[keep], best_pts[keep]
        done += m
    sample_min = float(best_vals[0])
    polished = [_descend(c, p, tol, max_iter) for c in best_pts[:polish]]
    pol_min = min((r.f for r in polished), default=np.inf)
    if polished and pol_min < sample_min:
        arg = min(polished, key=lambda r: r.f).c
    else:
        arg = best_pts[0]
    return FalsifierReport(float(min(sample_min, pol_min)), sample_min, float(pol_min),
                           samples, len(polished), [float(v) for v in arg])


def embedding_ratio(ensemble, p):
    """max ||u||_{L^{k+2}}^{k+2} / (||u||^2_{H^{alpha+1/2}} ||u||^k_{H^alpha}); zero vectors skipped."""
    best = None
    for c in ensemble:
        c = np.asarray(c, dtype=float)
        if not np.any(c):
            continue
        u = synthesize(c, p)
        num = TWO_PI / p.M * np.sum(u ** (p.k + 2))
        den = h_alpha_norm_sq(c, p, p.alpha + 0.5) * h_alpha_norm_sq(c, p) ** (p.k / 2)
        r = float(num / den)
        best = r if best is None else max(best, r)
    if best is None:
        raise ValueError("ensemble has no nonzero vectors")
    return best


def closed_form_single_mode(k):
    """f on the N_modes = 1 sphere with chi = 1 (constant there): pi^{-(k+2)/2} int cos^{k+2}."""
    m = k + 2
    integral = TWO_PI * math.comb(m, m // 2) / 2 ** m
    return integral / math.pi ** (m / 2)


def report_json(p, rep, falsifier=None, residuals=None):
    out = {
        "k": p.k,
        "alpha": p.alpha,
        "N_modes": p.N_modes,
        "chi_spec": p.chi.spec(),
        "f_min": rep.f_value if falsifier is None else min(rep.f_value, falsifier.f_min),
        "lambda": rep.lam,
        "residuals": residuals if residuals is not None else {
            "lagrange": rep.lagrange_residual,
            "pohozaev1": rep.pohozaev1_residual,
            "pohozaev2": rep.pohozaev2_residual,
            "pohozaev2_scale": rep.pohozaev2_scale,
        },
        "restarts": rep.restarts,
        "converged": rep.converged,
        "samples": 0 if falsifier is None else falsifier.samples,
    }
    if falsifier is not None:
        out["falsifier"] = {"sample_min": falsifier.sample_min,
                            "polished_min": falsifier.polished_min}
    return out
