"""Mesoscopic kinetic equations on a periodic grid.

For i = 0, 1 (with j = 1 - i) the densities evolve by

    d/dt rho_i = (a_i * rho_i) exp(-phi_i * rho_j) - rho_i (a_i * exp(-phi_i * rho_j)),

with ``*`` the periodic grid convolution. Two solvers are provided: a plain
RK4 integrator and the windowed fixed-point (Picard) construction used to
prove global existence, which doubles as an independent cross-check.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .kernels import Field, GridKernel, GridSpec
from .model import ModelParams

log = logging.getLogger(__name__)

NEGATIVE_CLAMP = 1e-12
POSITIVITY_TOL = 1e-9
ENVELOPE_SLACK = 1e-6


class EnvelopeViolation(RuntimeError):
    """A produced trajectory left the a-priori envelope."""


class PicardDivergence(RuntimeError):
    """Picard iteration did not reach tolerance within the iteration cap."""


@dataclass(frozen=True, eq=False)
class DensityPair:
    grid: GridSpec
    rho0: np.ndarray
    rho1: np.ndarray

    def __post_init__(self):
        r0 = np.asarray(self.rho0, dtype=float).reshape(self.grid.shape)
        r1 = np.asarray(self.rho1, dtype=float).reshape(self.grid.shape)
        object.__setattr__(self, "rho0", r0)
        object.__setattr__(self, "rho1", r1)

    @classmethod
    def constant(cls, grid: GridSpec, c0: float, c1: float) -> "DensityPair":
        return cls(grid, np.full(grid.shape, float(c0)), np.full(grid.shape, float(c1)))

    @classmethod
    def from_array(cls, grid: GridSpec, arr: np.ndarray) -> "DensityPair":
        return cls(grid, arr[0], arr[1])

    def as_array(self) -> np.ndarray:
        return np.stack([self.rho0, self.rho1])

    def field(self, i: int) -> Field:
        return Field(self.grid, (self.rho0, self.rho1)[i])

    def sup(self) -> tuple:
        return float(np.max(np.abs(self.rho0))), float(np.max(np.abs(self.rho1)))


@dataclass(frozen=True)
class KineticRunConfig:
    t_end: float
    dt: float
    method: str = "rk4"
    picard_tol: float = 1e-10
    picard_max_iter: int = 200
    snapshot_every: float | None = None

    def __post_init__(self):
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.method not in ("rk4", "picard"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.picard_tol <= 0 or self.picard_max_iter <= 0:
            raise ValueError("picard_tol and picard_max_iter must be positive")
        snap = self.t_end if self.snapshot_every is None else self.snapshot_every
        if self.t_end > 0 and not (self.dt <= snap + 1e-15 and snap <= self.t_end + 1e-15):
            raise ValueError("need dt <= snapshot_every <= t_end")

    @property
    def snapshot_interval(self) -> float:
        return self.t_end if self.snapshot_every is None else self.snapshot_every

    def to_dict(self) -> dict:
        return {
            "t_end": self.t_end, "dt": self.dt, "method": self.method,
            "picard_tol": self.picard_tol, "picard_max_iter": self.picard_max_iter,
            "snapshot_every": self.snapshot_interval,
        }


@dataclass(eq=False)
class Trajectory:
    """Snapshots ``states[k]`` (shape ``(2, *grid.shape)``) at ``times[k]``."""

    grid: GridSpec
    times: np.ndarray
    states: np.ndarray

    def __len__(self):
        return len(self.times)

    def snapshot(self, k: int) -> DensityPair:
        return DensityPair.from_array(self.grid, self.states[k])

    def index_of(self, t: float, tol: float = 1e-9) -> int:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > tol:
            raise KeyError(f"no snapshot at t={t}")
        return k

    def at(self, times) -> "Trajectory":
        idx = [self.index_of(t) for t in times]
        return Trajectory(self.grid, self.times[idx].copy(), self.states[idx].copy())

    @property
    def final(self) -> DensityPair:
        return self.snapshot(len(self) - 1)


@dataclass
class EnvelopeReport:
    passed: bool
    min_value: float
    worst_margin: float
    worst_snapshot: int
    worst_species: int
    worst_cell: tuple
    margins: np.ndarray

    def to_dict(self) -> dict:
        return {
            "passed": self.passed, "min_value": self.min_value,
            "worst_margin": self.worst_margin, "worst_snapshot": self.worst_snapshot,
            "worst_species": self.worst_species, "worst_cell": list(self.worst_cell),
            "margins": self.margins.tolist(),
        }


@dataclass
class Diagnostics:
    masses: np.ndarray
    min_values: np.ndarray
    clamped: int
    envelope: EnvelopeReport
    method: str = "rk4"
    picard: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "method": self.method, "masses": self.masses.tolist(),
            "min_values": self.min_values.tolist(), "clamped": self.clamped,
            "envelope": self.envelope.to_dict(), **({"picard": self.picard} if self.picard else {}),
        }


class KineticOperator:
    """Grid kernels for one (model, grid) pair and the right-hand side."""

    def __init__(self, model: ModelParams, grid: GridSpec):
        if model.dimension != grid.dimension:
            raise ValueError("model and grid dimensions differ")
        self.model = model
        self.grid = grid
        self.a = (GridKernel(model.a0, grid), GridKernel(model.a1, grid))
        self.phi = (GridKernel(model.phi0, grid), GridKernel(model.phi1, grid))
        # a_i * 1 on the grid; the damping rate that makes the Picard
        # map consistent with the semi-discrete ODE
        self.discrete_alphas = (self.a[0].discrete_mass, self.a[1].discrete_mass)

    def pieces(self, u: np.ndarray, i: int):
        """Return ``(a_i * rho_i) E_i`` and ``a_i * E_i`` with ``E_i = exp(-phi_i * rho_j)``."""
        j = 1 - i
        E = np.exp(-self.phi[i].convolve(u[j]))
        return self.a[i].convolve(u[i]) * E, self.a[i].convolve(E), E

    def rhs(self, u: np.ndarray) -> np.ndarray:
        out = np.empty_like(u)
        for i in (0, 1):
            gain, loss_rate, _ = self.pieces(u, i)
            out[i] = gain - u[i] * loss_rate
        return out

    def picard_integrand(self, u: np.ndarray) -> np.ndarray:
        """Integrand of the fixed-point map: ``(a*rho)E + rho (a*(1-E))``."""
        out = np.empty_like(u)
        for i in (0, 1):
            gain, a_E, _ = self.pieces(u, i)
            out[i] = gain + u[i] * (self.discrete_alphas[i] - a_E)
        return out


@lru_cache(maxsize=32)
def operator_for(model: ModelParams, grid: GridSpec) -> KineticOperator:
    return KineticOperator(model, grid)


def _check_pair(rho: DensityPair, model: ModelParams) -> None:
    if rho.grid.dimension != model.dimension:
        raise ValueError("density grid does not match model dimension")


def kinetic_rhs(rho: DensityPair, model: ModelParams) -> DensityPair:
    _check_pair(rho, model)
    op = operator_for(model, rho.grid)
    return DensityPair.from_array(rho.grid, op.rhs(rho.as_array()))


def mass_totals(rho: DensityPair) -> tuple:
    h = rho.grid.cell_volume
    return float(rho.rho0.sum() * h), float(rho.rho1.sum() * h)


def _snapshot_times(t_end: float, every: float) -> np.ndarray:
    if t_end == 0:
        return np.array([0.0])
    n = int(math.floor(t_end / every + 1e-9))
    times = [k * every for k in range(n + 1)]
    if t_end - times[-1] > 1e-12 * max(1.0, t_end):
        times.append(t_end)
    else:
        times[-1] = t_end
    return np.array(times)


def apriori_check(traj: Trajectory, model: ModelParams, rho0: DensityPair) -> EnvelopeReport:
    """Check positivity and ``rho_{i,t} <= ||rho_{i,0}||_inf exp(alpha_i t)``."""
    alphas = model.alphas
    sups = rho0.sup()
    margins = np.empty((len(traj), 2))
    worst = (math.inf, 0, 0, ())
    for k, t in enumerate(traj.times):
        for i in (0, 1):
            bound = sups[i] * math.exp(alphas[i] * t)
            vals = traj.states[k, i]
            cell = np.unravel_index(int(np.argmax(vals)), vals.shape)
            top = float(vals[cell])
            margin = (bound - top) / bound if bound > 0 else (0.0 if top <= 0 else -math.inf)
            margins[k, i] = margin
            if margin < worst[0]:
                worst = (margin, k, i, tuple(int(c) for c in cell))
    min_value = float(traj.states.min()) if traj.states.size else 0.0
    passed = bool(min_value >= -POSITIVITY_TOL and worst[0] >= -ENVELOPE_SLACK)
    return EnvelopeReport(passed, min_value, float(worst[0]), worst[1], worst[2], worst[3], margins)


def _diagnostics(traj, model, rho0, clamped, method, picard=None) -> Diagnostics:
    h = traj.grid.cell_volume
    masses = traj.states.reshape(len(traj), 2, -1).sum(axis=2) * h
    mins = traj.states.reshape(len(traj), 2, -1).min(axis=2)
    env = apriori_check(traj, model, rho0)
    return Diagnostics(masses, mins, clamped, env, method, picard or {})


def integrate_rk4(rho0: DensityPair, model: ModelParams, cfg: KineticRunConfig,
                  check_envelope: bool = True) -> tuple:
    """Classical RK4 on the semi-discrete system.

    Returns ``(Trajectory, Diagnostics)``. Raises ``EnvelopeViolation`` if the
    result leaves the a-priori envelope and ``FloatingPointError`` on NaN.
    """
    _check_pair(rho0, model)
    alpha = model.alpha
    if alpha > 0 and cfg.dt > 0.1 / alpha * (1 + 1e-12):
        raise ValueError(f"dt={cfg.dt} exceeds the stability heuristic 0.1/alpha={0.1 / alpha}")
    op = operator_for(model, rho0.grid)
    times = _snapshot_times(cfg.t_end, cfg.snapshot_interval)
    states = np.empty((len(times), 2) + rho0.grid.shape)
    u = rho0.as_array().copy()
    states[0] = u
    clamped = 0
    for k in range(1, len(times)):
        span = times[k] - times[k - 1]
        n = max(1, int(math.ceil(span / cfg.dt - 1e-9)))
        h = span / n
        for _ in range(n):
            k1 = op.rhs(u)
            k2 = op.rhs(u + 0.5 * h * k1)
            k3 = op.rhs(u + 0.5 * h * k2)
            k4 = op.rhs(u + h * k3)
            u = u + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(np.isfinite(u)):
                raise FloatingPointError(f"non-finite density near t={times[k - 1]}")
            neg = u < 0
            if neg.any():
                clamped += int(np.count_nonzero(u < -NEGATIVE_CLAMP))
                u[neg] = 0.0
        states[k] = u
    traj = Trajectory(rho0.grid, times, states)
    diag = _diagnostics(traj, model, rho0, clamped, "rk4")
    if check_envelope and not diag.envelope.passed:
        raise EnvelopeViolation(
            f"envelope violated: margin {diag.envelope.worst_margin:.3e} at snapshot "
            f"{diag.envelope.worst_snapshot}, species {diag.envelope.worst_species}"
        )
    return traj, diag


# --- fixed-point construction -------------------------------------------


def _exp_trapezoid_weights(rate: float, step: float) -> tuple:
    """Weights for ``int_0^step exp(-rate (step - s)) g(s) ds`` with g linear.

    Returns ``(decay, w_left, w_right)``. Exact for piecewise-linear g, so
    constants are reproduced without quadrature error.
    """
    z = rate * step
    decay = math.exp(-z)
    if z < 0.5:
        # (1 - e^{-z}(1 + z)) / z^2 = sum_{k>=2} (-z)^{k-2} (k-1)/k!
        s, term = 0.0, 1.0
        for k in range(2, 24):
            term = 1.0 / math.factorial(k) if k == 2 else term * (-z) / k
            s += (k - 1) * term
        w_left = step * s
        total = step if z == 0 else -math.expm1(-z) / rate
        return decay, w_left, total - w_left
    total = -math.expm1(-z) / rate
    w_left = (1.0 - decay * (1.0 + z)) / (rate * z)
    return decay, w_left, total - w_left


def weighted_norm(states: np.ndarray, times: np.ndarray, alphas) -> float:
    """``max_i sup_t ||rho_{i,t}||_inf exp(-alpha_i t)``, t from window start."""
    t = times - times[0]
    best = 0.0
    for i in (0, 1):
        sup_t = np.abs(states[:, i]).reshape(len(times), -1).max(axis=1)
        best = max(best, float(np.max(sup_t * np.exp(-alphas[i] * t))))
    return best


def picard_apply(candidate: Trajectory, model: ModelParams, rho0: DensityPair) -> Trajectory:
    """Apply the fixed-point map to a candidate on a uniform time mesh.

    ``F_{i,t} = rho_{i,0} e^{-alpha_i t} + int_0^t e^{-alpha_i (t-s)}
    [(a_i * rho_{i,s}) E_{i,s} + rho_{i,s} (a_i * (1 - E_{i,s}))] ds``,
    with time measured from ``candidate.times[0]``.
    """
    _check_pair(rho0, model)
    if candidate.grid != rho0.grid:
        raise ValueError("candidate and initial data live on different grids")
    times = candidate.times
    steps = np.diff(times)
    if len(times) > 1 and not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-14):
        raise ValueError("candidate must be given on a uniform time mesh")
    op = operator_for(model, rho0.grid)
    alphas = op.discrete_alphas
    out = np.empty_like(candidate.states)
    init = rho0.as_array()
    out[0] = init
    if len(times) == 1:
        return Trajectory(candidate.grid, times.copy(), out)
    dt = steps[0]
    g_prev = op.picard_integrand(candidate.states[0])
    acc = np.zeros_like(init)
    coeffs = [_exp_trapezoid_weights(alphas[i], dt) for i in (0, 1)]
    for k in range(1, len(times)):
        g = op.picard_integrand(candidate.states[k])
        for i in (0, 1):
            decay, wl, wr = coeffs[i]
            acc[i] = decay * acc[i] + wl * g_prev[i] + wr * g[i]
            out[k, i] = init[i] * math.exp(-alphas[i] * (times[k] - times[0])) + acc[i]
        g_prev = g
    return Trajectory(candidate.grid, times.copy(), out)


def contraction_window(C: float, alpha: float) -> float:
    """Window with ``exp(3 alpha T) = 1 + 3/(4C)``, half the contraction bound."""
    if alpha <= 0:
        return math.inf
    return math.log1p(3.0 / (4.0 * C)) / (3.0 * alpha)


def contraction_bound(C: float, alpha: float) -> float:
    """Strict upper limit on the window: ``exp(3 alpha T) < 1 + 3/(2C)``."""
    if alpha <= 0:
        return math.inf
    return math.log1p(3.0 / (2.0 * C)) / (3.0 * alpha)


def window_schedule(C: float, alpha: float, t_end: float) -> list:
    """Window lengths covering [0, t_end]: the first from ``contraction_window``,
    then ``exp(3 alpha T_n) = 1 + exp(-alpha (T + ... + T_{n-1})) / C``."""
    if alpha <= 0:
        return [t_end]
    windows = [contraction_window(C, alpha)]
    elapsed = windows[0]
    while elapsed < t_end:
        T_n = math.log1p(math.exp(-alpha * elapsed) / C) / (3.0 * alpha)
        windows.append(T_n)
        elapsed += T_n
    return windows


def picard_solve(rho0: DensityPair, model: ModelParams, t_end: float, cfg: KineticRunConfig) -> tuple:
    """Windowed Picard iteration on the mesh ``cfg.dt``.

    Windows follow ``window_schedule`` rounded down to whole mesh steps (at
    least one). Returns ``(Trajectory on the full mesh, Diagnostics)``.
    """
    _check_pair(rho0, model)
    if np.any(rho0.as_array() < 0):
        raise ValueError("initial densities must be nonnegative")
    op = operator_for(model, rho0.grid)
    alpha = max(op.discrete_alphas)
    C = max(max(rho0.sup()), 1e-300)
    n_total = max(0, int(round(t_end / cfg.dt)))
    if n_total and abs(n_total * cfg.dt - t_end) > 1e-9 * max(1.0, t_end):
        raise ValueError("t_end must be a whole number of mesh steps")
    dt = cfg.dt
    times_all = [0.0]
    states_all = [rho0.as_array()]
    windows, iterations, residuals = [], [], []
    start = 0
    while start < n_total:
        elapsed = start * dt
        C_n = C * math.exp(alpha * elapsed) if windows else C
        if not windows:
            T = contraction_window(C, alpha)
        else:
            T = math.log1p(math.exp(-alpha * elapsed) / C) / (3.0 * alpha) if alpha > 0 else math.inf
        steps = max(1, min(n_total - start, int(math.floor(T / dt + 1e-9))))
        times = elapsed + dt * np.arange(steps + 1)
        init = DensityPair.from_array(rho0.grid, states_all[-1])
        cand = Trajectory(rho0.grid, times, np.repeat(init.as_array()[None], steps + 1, axis=0))
        alphas = op.discrete_alphas
        for it in range(1, cfg.picard_max_iter + 1):
            new = picard_apply(cand, model, init)
            diff = weighted_norm(new.states - cand.states, times, alphas)
            cand = new
            if diff < cfg.picard_tol:
                break
        else:
            raise PicardDivergence(
                f"no convergence in window starting at t={elapsed}: last diff {diff:.3e}"
            )
        residual = weighted_norm(picard_apply(cand, model, init).states - cand.states, times, alphas)
        windows.append(steps * dt)
        iterations.append(it)
        residuals.append(residual)
        log.debug("picard window t0=%.4g T=%.4g C_n=%.4g iters=%d", elapsed, steps * dt, C_n, it)
        times_all.extend(times[1:].tolist())
        states_all.extend(list(cand.states[1:]))
        start += steps
    traj = Trajectory(rho0.grid, np.array(times_all), np.array(states_all))
    picard = {"windows": windows, "iterations": iterations, "residuals": residuals}
    diag = _diagnostics(traj, model, rho0, 0, "picard", picard)
    return traj, diag


def solve(rho0: DensityPair, model: ModelParams, cfg: KineticRunConfig) -> tuple:
    """Dispatch on ``cfg.method``; Picard output is thinned to the snapshot cadence."""
    if cfg.method == "rk4":
        return integrate_rk4(rho0, model, cfg)
    traj, diag = picard_solve(rho0, model, cfg.t_end, cfg)
    times = _snapshot_times(cfg.t_end, cfg.snapshot_interval)
    sub = traj.at(times)
    return sub, _diagnostics(sub, model, rho0, 0, "picard", diag.picard)
