"""Scaling experiment connecting the particle system to the kinetic equations.

For each eps the potentials are multiplied by eps and the initial Poisson
intensity is ``rho_0 / eps``. The first correlation function rescaled by
``eps`` is then ``eps`` times the physical density, which is compared with
the kinetic solution of the unscaled model.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import GridSpec
from .kinetic import DensityPair, KineticRunConfig, integrate_rk4
from .model import ModelParams
from .particles import cell_counts, init_poisson_field, make_rng, simulate_ensemble

log = logging.getLogger(__name__)

DEFAULT_EPSILONS = (1.0, 0.5, 0.25, 0.125)
PARTICLE_BUDGET = 1_000_000


class ParticleBudgetExceeded(ValueError):
    pass


def scale_model(model: ModelParams, eps: float) -> ModelParams:
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    if eps == 1:
        return model
    return model.with_potentials(model.phi0.scaled(eps), model.phi1.scaled(eps))


@dataclass
class ScalingReport:
    epsilons: list
    errors: list
    standard_errors: list
    replicas: list
    times: list = field(default_factory=list)
    per_time_errors: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "epsilons": self.epsilons, "errors": self.errors,
            "standard_errors": self.standard_errors, "replicas": self.replicas,
            "times": self.times, "per_time_errors": self.per_time_errors,
        }

    def to_csv(self) -> str:
        lines = ["epsilon,error,se,replicas"]
        for e, err, se, r in zip(self.epsilons, self.errors, self.standard_errors, self.replicas):
            lines.append(f"{e!r},{err!r},{se!r},{r}")
        return "\n".join(lines) + "\n"

    def monotone_within(self, sigmas: float = 3.0) -> bool:
        """Errors non-increasing along the ladder up to ``sigmas`` combined SE."""
        for k in range(len(self.errors) - 1):
            tol = sigmas * math.hypot(self.standard_errors[k], self.standard_errors[k + 1])
            if self.errors[k + 1] > self.errors[k] + tol:
                return False
        return True


def block_average(values: np.ndarray, fine: GridSpec, coarse: GridSpec) -> np.ndarray:
    """Average a fine-grid field over the cells of a coarser aligned grid."""
    factors = []
    for nf, nc, Lf, Lc in zip(fine.points, coarse.points, fine.box_length, coarse.box_length):
        if nf % nc or abs(Lf - Lc) > 1e-12:
            raise ValueError("coarse grid must divide the fine grid over the same box")
        factors.append(nf // nc)
    shape = []
    for nc, f in zip(coarse.points, factors):
        shape += [nc, f]
    v = values.reshape(shape)
    return v.mean(axis=tuple(range(1, 2 * coarse.dimension, 2)))


def _sup_error(counts: np.ndarray, eps: float, vol: float, target: np.ndarray) -> tuple:
    """counts: (R, S, 2, *shape); target: (S, 2, *shape). Returns (sup, per-time sups)."""
    est = eps * counts.mean(axis=0) / vol
    diff = np.abs(est - target).reshape(target.shape[0], -1)
    per_time = diff.max(axis=1)
    return float(per_time.max()), per_time


def meso_experiment(model: ModelParams, rho0: DensityPair, eps_list=DEFAULT_EPSILONS,
                    replicas: int = 50, t_end: float = 0.5, snapshot_every: float = 0.1,
                    density_grid: GridSpec | None = None, seed: int = 0, kinetic_dt: float = 1e-3,
                    workers: int = 1, budget: int = PARTICLE_BUDGET, bootstrap: int = 200) -> ScalingReport:
    """Run the eps ladder and report sup-norm errors with bootstrap SEs.

    ``rho0`` lives on the (fine) kinetic grid; ``density_grid`` is the coarser
    histogram grid over the same box (defaults to the kinetic grid).
    """
    fine = rho0.grid
    coarse = density_grid or fine
    if coarse.dimension != model.dimension or fine.dimension != model.dimension:
        raise ValueError("grid/model dimension mismatch")
    if any(abs(a - b) > 1e-12 for a, b in zip(coarse.box_length, fine.box_length)):
        raise ValueError("density grid and kinetic grid cover different boxes")
    eps_list = [float(e) for e in eps_list]
    mass = rho0.as_array().reshape(2, -1).sum(axis=1) * fine.cell_volume
    for eps in eps_list:
        if float(mass.max()) / eps > budget:
            raise ParticleBudgetExceeded(
                f"eps={eps}: expected {mass.max() / eps:.3g} particles exceeds budget {budget}"
            )
    alpha = model.alpha
    dt = min(kinetic_dt, 0.1 / alpha) if alpha > 0 else kinetic_dt
    cfg = KineticRunConfig(t_end, dt, snapshot_every=snapshot_every)
    traj, _ = integrate_rk4(rho0, model, cfg)
    target = np.stack([
        np.stack([block_average(traj.states[k, i], fine, coarse) for i in (0, 1)])
        for k in range(len(traj))
    ])
    report = ScalingReport([], [], [], [], traj.times.tolist(), [])
    vol = coarse.cell_volume
    boot_rng = make_rng(np.random.SeedSequence(int(seed), spawn_key=(1 << 20,)))
    for e_idx, eps in enumerate(eps_list):
        scaled = scale_model(model, eps)
        results = simulate_ensemble(
            lambda rng, eps=eps: init_poisson_field(rho0, eps, rng), scaled, t_end, snapshot_every,
            seed, replicas, workers=workers, key=(e_idx,),
        )
        counts = np.stack([
            np.stack([cell_counts(s, coarse) for s in res.snapshots]) for res in results
        ])
        if counts.shape[1] != target.shape[0]:
            raise RuntimeError("particle and kinetic snapshot schedules differ")
        err, per_time = _sup_error(counts, eps, vol, target)
        boot = []
        for _ in range(bootstrap):
            pick = boot_rng.integers(0, replicas, replicas)
            boot.append(_sup_error(counts[pick], eps, vol, target)[0])
        se = float(np.std(boot, ddof=1))
        log.info("eps=%g error=%.4g se=%.3g", eps, err, se)
        report.epsilons.append(eps)
        report.errors.append(err)
        report.standard_errors.append(se)
        report.replicas.append(replicas)
        report.per_time_errors.append(per_time.tolist())
    return report
