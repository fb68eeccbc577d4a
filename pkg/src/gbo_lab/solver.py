"""Time integration of  u_t + H u_xx + (u^{k+1})_x = 0  on the torus.

The state is advanced in Fourier space as a half spectrum (non-negative
modes of a real field).  The linear symbol -i xi|xi| is treated exactly,
either by exponential time differencing (ETDRK4, Cox-Matthews with
Kassam-Trefethen contour averaging) or by an integrating factor RK4.
"""

import math
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .spectral import SpectralField, TorusGrid, required_pad, sobolev_norm, linear_propagate
from .diagnostics import Trajectory, observables, GuardViolation, BOUNDARY_FRACTION

INTEGRATORS = ("etd_rk4", "if_rk4")
CONTOUR_POINTS = 32
DEFAULT_CFL_LIMIT = 2.5


class SimulationAbort(RuntimeError):
    """A run stopped before t_end; ``state`` holds the last valid state."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class BlowUpError(SimulationAbort):
    pass


class StepSizeError(SimulationAbort):
    pass


@dataclass(frozen=True, eq=False)
class SimState:
    t: float
    u: SpectralField
    k: int
    step_count: int = 0

    def __post_init__(self):
        _check_k(self.k)


def _check_k(k):
    if not isinstance(k, (int, np.integer)) or k < 4 or k % 2:
        raise ValueError(f"k must be even >= 4, got {k!r}")


# ---------------------------------------------------------------------------
# right-hand side
# ---------------------------------------------------------------------------

class GBORightHandSide:
    """Linear symbol and dealiased nonlinear term on the half spectrum."""

    def __init__(self, grid, k, sign=1.0):
        self.grid = grid
        self.k = k
        self.sign = sign
        N = grid.N
        self.nh = N // 2 + 1
        self.M = max(grid.pad_factor, required_pad(k + 1)) * N
        xi = grid.spacing * np.arange(self.nh)
        self.xi = xi
        lin = -1j * xi * xi
        lin[-1] = 0.0                  # Nyquist mode is left fixed
        self.lin = lin
        dx = 1j * xi
        dx[-1] = 0.0
        self.dx_sym = -sign * dx
        self._big = np.zeros(self.M // 2 + 1, dtype=np.complex128)

    def nonlinear(self, v):
        N, M = self.grid.N, self.M
        big = self._big
        big[:] = 0.0
        big[: N // 2] = v[: N // 2]
        big[N // 2] = 0.5 * v[N // 2]
        u = np.fft.irfft(big, n=M) * M
        p = np.fft.rfft(u ** (self.k + 1)) / M
        out = p[: self.nh].copy()
        return self.dx_sym * out


def to_half(f):
    N = f.grid.N
    h = f.coeffs[: N // 2 + 1].copy()
    h[N // 2] = f.coeffs[N // 2].real
    return h


def from_half(grid, h):
    N = grid.N
    c = np.empty(N, dtype=np.complex128)
    c[: N // 2 + 1] = h
    c[N // 2] = h[N // 2].real
    c[N // 2 + 1:] = np.conj(h[1: N // 2][::-1])
    c[0] = c[0].real
    return SpectralField(grid, c)


class ETDRK4:
    def __init__(self, rhs, dt, contour=CONTOUR_POINTS):
        self.rhs = rhs
        self.dt = dt
        z0 = dt * rhs.lin
        self.E = np.exp(z0)
        self.E2 = np.exp(z0 / 2)
        r = np.exp(2j * np.pi * (np.arange(contour) + 0.5) / contour)
        z = z0[:, None] + r[None, :]
        ez = np.exp(z)
        self.Q = dt * np.mean((np.exp(z / 2) - 1) / z, axis=1)
        self.f1 = dt * np.mean((-4 - z + ez * (4 - 3 * z + z * z)) / z ** 3, axis=1)
        self.f2 = dt * np.mean((2 + z + ez * (z - 2)) / z ** 3, axis=1)
        self.f3 = dt * np.mean((-4 - 3 * z - z * z + ez * (4 - z)) / z ** 3, axis=1)

    def step(self, v):
        N = self.rhs.nonlinear
        Nv = N(v)
        a = self.E2 * v + self.Q * Nv
        Na = N(a)
        b = self.E2 * v + self.Q * Na
        Nb = N(b)
        c = self.E2 * a + self.Q * (2 * Nb - Nv)
        Nc = N(c)
        return self.E * v + self.f1 * Nv + 2 * self.f2 * (Na + Nb) + self.f3 * Nc


class IFRK4:
    def __init__(self, rhs, dt):
        self.rhs = rhs
        self.dt = dt
        self.E = np.exp(dt * rhs.lin)
        self.E2 = np.exp(0.5 * dt * rhs.lin)

    def step(self, v):
        N, h, E, E2 = self.rhs.nonlinear, self.dt, self.E, self.E2
        k1 = N(v)
        k2 = N(E2 * (v + 0.5 * h * k1))
        k3 = N(E2 * v + 0.5 * h * k2)
        k4 = N(E * v + h * E2 * k3)
        return E * v + h / 6.0 * (E * k1 + 2.0 * E2 * (k2 + k3) + k4)


def make_stepper(grid, k, dt, method="etd_rk4", focusing=False):
    rhs = GBORightHandSide(grid, k, sign=-1.0 if focusing else 1.0)
    if method == "etd_rk4":
        return ETDRK4(rhs, dt)
    if method == "if_rk4":
        return IFRK4(rhs, dt)
    raise ValueError(f"unknown integrator {method!r}; expected one of {INTEGRATORS}")


def nonlinear_cfl(u, k, dt):
    """dt * max|xi| * (k+1) * sup|u|^k, the explicit-stage stiffness of the nonlinearity."""
    sup = np.abs(u.values).max()
    return abs(dt) * u.grid.xi_max * (k + 1) * sup ** k


def _finite(v):
    return bool(np.all(np.isfinite(v)))


def advance(state, dt, method="etd_rk4", steps=1, focusing=False, stepper=None):
    """Advance ``steps`` steps of size ``dt``; raises BlowUpError on non-finite output."""
    grid = state.u.grid
    stepper = stepper or make_stepper(grid, state.k, dt, method, focusing)
    v = to_half(state.u)
    t0, n0 = state.t, state.step_count
    for i in range(steps):
        with np.errstate(over="ignore", invalid="ignore"):
            w = stepper.step(v)
        if not _finite(w):
            last = SimState(t0 + i * dt, from_half(grid, v), state.k, n0 + i)
            raise BlowUpError(f"non-finite state at step {n0 + i + 1}", last)
        v = w
    return SimState(t0 + steps * dt, from_half(grid, v), state.k, n0 + steps)


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------

DATA_FAMILIES = ("gaussian", "modulated", "random", "zero")


def initial_data(grid, spec, seed=0):
    """Build initial data from a family spec dict.

    gaussian:  amp * exp(-((x - x0)/width)^2)
    modulated: gaussian envelope times cos(carrier * (x - x0))
    random:    gaussian envelope times a random trigonometric polynomial with
               modes |xi| <= cutoff, rescaled to H^{1/2} norm ``amp``
    """
    fam = spec.get("family", "gaussian")
    x = grid.xs
    amp = float(spec.get("amp", 0.5))
    width = float(spec.get("width", 5.0))
    x0 = float(spec.get("x0", 0.5 * grid.L))
    env = np.exp(-(((x - x0) / width) ** 2))
    if fam == "zero" or amp == 0.0:
        return SpectralField.zeros(grid)
    if fam == "gaussian":
        vals = amp * env
    elif fam == "modulated":
        xi0 = float(spec.get("carrier", 8.0))
        vals = amp * env * np.cos(xi0 * (x - x0))
    elif fam == "random":
        rng = np.random.default_rng(int(spec.get("seed", seed)))
        cutoff = float(spec.get("cutoff", 2.0))
        m = int(cutoff / grid.spacing)
        n = np.arange(1, m + 1)
        phases = rng.uniform(0, 2 * np.pi, m)
        amps = rng.standard_normal(m) / np.sqrt(n)
        vals = env * (amps[None, :] * np.cos(np.outer(x - x0, n * grid.spacing)
                                              + phases[None, :])).sum(axis=1)
        f = SpectralField.from_values(grid, vals)
        c = f.coeffs.copy()
        c[grid.nyquist] = 0.0
        f = SpectralField(grid, c)
        return f * (amp / sobolev_norm(f, 0.5, homogeneous=False))
    else:
        raise ValueError(f"unknown data family {fam!r}; expected one of {DATA_FAMILIES}")
    f = SpectralField.from_values(grid, vals)
    c = f.coeffs.copy()
    c[grid.nyquist] = 0.0
    return SpectralField(grid, c)


# ---------------------------------------------------------------------------
# configuration and simulation
# ---------------------------------------------------------------------------

@dataclass
class SimConfig:
    N: int = 1024
    L: float = 200.0
    pad_factor: int = 4
    k: int = 6
    dt: float = 1e-3
    t_end: float = 10.0
    integrator: str = "etd_rk4"
    data: dict = field(default_factory=lambda: {"family": "gaussian", "amp": 0.5, "width": 5.0})
    snapshot_every: float = 0.1
    checkpoint_every: float = None
    R: float = 32.0
    R1: float = None
    focusing: bool = False
    cfl_limit: float = DEFAULT_CFL_LIMIT
    seed: int = 0

    def __post_init__(self):
        _check_k(self.k)
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}")
        for name in ("snapshot_every", "checkpoint_every"):
            val = getattr(self, name)
            if val is None:
                continue
            ratio = val / self.dt
            if val <= 0 or abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio) or round(ratio) < 1:
                raise ValueError(f"{name} must be a positive multiple of dt")

    @property
    def grid(self):
        return TorusGrid(self.N, self.L, self.pad_factor)

    @property
    def n_steps(self):
        return int(round(self.t_end / self.dt))

    @property
    def snapshot_stride(self):
        return int(round(self.snapshot_every / self.dt))

    @property
    def checkpoint_stride(self):
        if self.checkpoint_every is None:
            return None
        return int(round(self.checkpoint_every / self.dt))


def simulate(config, u0=None, guard=BOUNDARY_FRACTION, on_checkpoint=None):
    """Run a simulation, recording observables and snapshots at the snapshot cadence.

    ``on_checkpoint(state)`` is called at the checkpoint cadence.
    """
    grid = config.grid
    k = config.k
    u = initial_data(grid, config.data, config.seed) if u0 is None else u0
    obs = observables(u, k, 0.0, guard)
    if not obs.centers_valid:
        raise GuardViolation(f"initial data violates the boundary-mass guard "
                             f"({obs.boundary_fraction:.3e})")
    cfl = nonlinear_cfl(u, k, config.dt)
    if cfl > config.cfl_limit:
        raise StepSizeError(
            f"nonlinear step-size guard exceeded: dt*max|xi|*(k+1)*sup|u|^k = {cfl:.3g} "
            f"> {config.cfl_limit}", SimState(0.0, u, k))
    stepper = make_stepper(grid, k, config.dt, config.integrator, config.focusing)
    traj = Trajectory(config=config, records=[obs], snapshots=[u])
    state = SimState(0.0, u, k, 0)
    ck = config.checkpoint_stride
    stride = config.snapshot_stride
    n = config.n_steps
    mass0 = obs.mass
    v = to_half(u)
    for step in range(1, n + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            w = stepper.step(v)
        if not _finite(w):
            raise BlowUpError(f"non-finite state at step {step} (t={step * config.dt:.6g})",
                              state)
        v = w
        record = step % stride == 0 or step == n
        checkpoint = ck is not None and step % ck == 0
        if record or checkpoint:
            t = step * config.dt
            state = SimState(t, from_half(grid, v), k, step)
        if record:
            obs = observables(state.u, k, t, guard)
            if mass0 > 0 and abs(obs.mass - mass0) > 0.5 * mass0:
                raise BlowUpError(f"mass changed by more than 50% at t={t:.6g}", state)
            if not obs.centers_valid:
                raise GuardViolation(f"boundary-mass guard violated at t={t:.6g} "
                                     f"({obs.boundary_fraction:.3e})")
            traj.records.append(obs)
            traj.snapshots.append(state.u)
        if checkpoint and on_checkpoint is not None:
            on_checkpoint(state)
    return traj


def linear_trajectory(u0, k, times, guard=BOUNDARY_FRACTION):
    """Exact linear flow V(t) u0 sampled at ``times``, with the usual records."""
    snaps = [linear_propagate(u0, float(t)) for t in times]
    recs = [observables(u, k, float(t), guard) for u, t in zip(snaps, times)]
    return Trajectory(config=None, records=recs, snapshots=snaps)


# ---------------------------------------------------------------------------
# checkpoint I/O
# ---------------------------------------------------------------------------

MAGIC = b"GBO1"
_HEADER = struct.Struct("<4sIddII")


class CheckpointError(ValueError):
    pass


def encode_state(state):
    g = state.u.grid
    head = _HEADER.pack(MAGIC, g.N, g.L, state.t, state.k, g.pad_factor)
    return head + np.ascontiguousarray(state.u.coeffs, dtype="<c16").tobytes()


def decode_state(buf, offset=0):
    """Decode one checkpoint record; returns (state, bytes consumed)."""
    if len(buf) - offset < _HEADER.size:
        raise CheckpointError("checkpoint truncated: header incomplete")
    magic, N, L, t, k, pad = _HEADER.unpack_from(buf, offset)
    if magic != MAGIC:
        raise CheckpointError(f"bad magic {magic!r}; expected {MAGIC!r} (\"GBO1\")")
    nbytes = 16 * N
    start = offset + _HEADER.size
    if len(buf) - start < nbytes:
        raise CheckpointError(f"checkpoint truncated: expected {nbytes} coefficient bytes, "
                              f"found {len(buf) - start}")
    coeffs = np.frombuffer(buf, dtype="<c16", count=N, offset=start).astype(np.complex128)
    grid = TorusGrid(N, L, pad)
    return SimState(t, SpectralField(grid, coeffs), k, 0), _HEADER.size + nbytes


def write_checkpoint(state, path):
    with open(path, "wb") as fh:
        fh.write(encode_state(state))


def read_checkpoint(path):
    with open(path, "rb") as fh:
        buf = fh.read()
    state, used = decode_state(buf)
    if used != len(buf):
        raise CheckpointError(f"trailing bytes after checkpoint record ({len(buf) - used})")
    return state


def checkpoint_io(state, path):
    """Write ``state`` to ``path`` and read it back."""
    write_checkpoint(state, path)
    return read_checkpoint(path)
