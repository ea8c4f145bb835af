"""Constant stationary states, their bifurcation and linear stability.

Constant pairs ``(C0, C1)`` solve the birth-and-death form
``rho_i = Ct_i exp(-phi_i * rho_j)`` iff ``Ct0 = C0 exp(<phi0> C1)`` and
``Ct1 = C1 exp(<phi1> C0)``. A constant state is classified stable when
``C0 C1 <phi0> <phi1> < 1`` and unstable when it exceeds 1.

Mode matrix
-----------
Linearising the kinetic equations about ``(C0, C1)`` with perturbations
``(u, v) ~ cos(p.x)`` gives ``d/dt (u, v) = M(p) (u, v)`` where

    M(p) = [[A0,            C0 phi0^(p) A0],
            [C1 phi1^(p) A1, A1          ]],
    A_i  = exp(-<phi_i> C_j) (a_i^(p) - alpha_i)  (<= 0).

``det M = A0 A1 (1 - C0 C1 phi0^ phi1^)``, so a zero eigenvalue appears
exactly where the product of transforms crosses 1 (or where
``a_i^(p) = alpha_i``). The gain term ``(a*rho) E`` contributes
``C0 phi0^ alpha0`` and the loss term ``-rho (a*E)`` contributes
``-C0 phi0^ a0^`` to the off-diagonal entry, hence its sign.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .kernels import kernel_fourier
from .kinetic import DensityPair, KineticOperator, operator_for
from .model import ModelParams

MARGINAL_TOL = 1e-9
SCAN_POINTS = 10_000
ROOT_TOL = 1e-12


def bisect(f, lo: float, hi: float, tol: float = ROOT_TOL, max_iter: int = 200) -> float:
    """Root of ``f`` on a sign-changing bracket ``[lo, hi]``."""
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ValueError(f"no sign change on [{lo}, {hi}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0 or (hi - lo) <= tol * abs(mid):
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class StationaryPoint:
    C0: float
    C1: float
    Ctilde0: float
    Ctilde1: float
    product: float
    classification: str

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DispersionPoint:
    p: float
    product_hat: float
    growth_rates: tuple


def classify_product(product: float, tol: float = MARGINAL_TOL) -> str:
    if product < 1 - tol:
        return "stable"
    if product > 1 + tol:
        return "unstable"
    return "marginal"


def classify_stability(C0: float, C1: float, model: ModelParams) -> tuple:
    m0, m1 = model.phi_masses
    product = C0 * C1 * m0 * m1
    return classify_product(product), product


def symmetric_roots(a: float) -> list:
    """Solutions of ``x e^y = a, y e^x = a``.

    The symmetric root comes first; for ``a > e`` the asymmetric pair
    ``(x1, x3)`` and its mirror follow.
    """
    if not a > 0:
        raise ValueError("a must be positive")
    xs = bisect(lambda x: x * math.exp(x) - a, 0.0, max(1.0, math.log(a) + 2.0))
    roots = [(xs, xs)]
    if a > math.e:
        # y e^{a e^{-y}} = a; its minimum right of xs sits where y e^{-y} = 1/a
        h = lambda y: y * math.exp(-y) - 1.0 / a
        hi = 2.0
        while h(hi) > 0:
            hi *= 2.0
        y_min = bisect(h, 1.0, hi)
        g = lambda y: math.log(y) + a * math.exp(-y) - math.log(a)
        if g(y_min) < 0:
            y3 = bisect(g, y_min, a + 1.0)
            x1 = a * math.exp(-y3)
            roots += [(x1, y3), (y3, x1)]
    return roots


def _constant_residual(C1, Ct0, Ct1, m0, m1):
    return C1 - Ct1 * math.exp(-m1 * Ct0 * math.exp(-m0 * C1))


def constant_solutions(Ctilde0: float, Ctilde1: float, model: ModelParams,
                       scan_points: int = SCAN_POINTS, tol: float = ROOT_TOL) -> list:
    """All constant stationary pairs for the given ``(Ct0, Ct1)``, ordered by C1."""
    if not (Ctilde0 > 0 and Ctilde1 > 0):
        raise ValueError("Ctilde parameters must be positive")
    m0, m1 = model.phi_masses
    f = lambda c1: _constant_residual(c1, Ctilde0, Ctilde1, m0, m1)
    grid = np.linspace(0.0, Ctilde1, scan_points + 1)
    vals = Ctilde1 * np.exp(-m1 * Ctilde0 * np.exp(-m0 * grid))
    res = grid - vals
    roots = []
    for k in range(len(grid)):
        if res[k] == 0:
            roots.append(float(grid[k]))
        elif k + 1 < len(grid) and res[k] * res[k + 1] < 0:
            roots.append(bisect(f, float(grid[k]), float(grid[k + 1]), tol))
    points = []
    for C1 in roots:
        C0 = Ctilde0 * math.exp(-m0 * C1)
        cls, product = classify_stability(C0, C1, model)
        points.append(StationaryPoint(C0, C1, Ctilde0, Ctilde1, product, cls))
    return points


def ctilde_for(C0: float, C1: float, model: ModelParams) -> tuple:
    m0, m1 = model.phi_masses
    return C0 * math.exp(m0 * C1), C1 * math.exp(m1 * C0)


def product_hat(p, C0: float, C1: float, model: ModelParams):
    d = model.dimension
    return C0 * C1 * kernel_fourier(model.phi0, p, d) * kernel_fourier(model.phi1, p, d)


def critical_wavenumber(C0: float, C1: float, model: ModelParams,
                        scan_points: int = SCAN_POINTS, tol: float = 1e-12) -> float | None:
    """Smallest ``p > 0`` with ``C0 C1 phi0^(p) phi1^(p) = 1``, or None."""
    f = lambda p: product_hat(p, C0, C1, model) - 1.0
    if f(0.0) <= 0:
        return None
    scale = min(model.phi0.range, model.phi1.range)
    p_max = 1.0 / scale
    while f(p_max) >= 0:
        p_max *= 2.0
        if p_max > 1e12:
            return None
    ps = np.linspace(0.0, p_max, scan_points + 1)
    vals = product_hat(ps, C0, C1, model) - 1.0
    crossing = np.nonzero(vals[1:] <= 0)[0]
    k = int(crossing[0])
    return bisect(f, float(ps[k]), float(ps[k + 1]), tol)


def mode_matrix(p: float, C0: float, C1: float, model: ModelParams) -> np.ndarray:
    d = model.dimension
    m0, m1 = model.phi_masses
    al0, al1 = model.alphas
    A0 = math.exp(-m0 * C1) * (kernel_fourier(model.a0, p, d) - al0)
    A1 = math.exp(-m1 * C0) * (kernel_fourier(model.a1, p, d) - al1)
    f0 = kernel_fourier(model.phi0, p, d)
    f1 = kernel_fourier(model.phi1, p, d)
    return np.array([[A0, C0 * f0 * A0], [C1 * f1 * A1, A1]])


def dispersion_growth(p: float, C0: float, C1: float, model: ModelParams) -> DispersionPoint:
    if p < 0:
        raise ValueError("wavenumber must be nonnegative")
    M = mode_matrix(p, C0, C1, model)
    tr = M[0, 0] + M[1, 1]
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    disc = tr * tr - 4 * det
    if disc >= 0:
        s = math.sqrt(disc)
        if tr == 0:
            rates = (0.5 * s, -0.5 * s)
        else:
            # larger-magnitude root first, the other from det to avoid cancellation
            big = 0.5 * (tr + math.copysign(s, tr))
            rates = tuple(sorted((big, det / big), reverse=True))
    else:
        rates = (0.5 * tr, 0.5 * tr)
    return DispersionPoint(float(p), float(product_hat(p, C0, C1, model)), tuple(float(r) + 0.0 for r in rates))


def dispersion_table(C0: float, C1: float, model: ModelParams, p_max: float, points: int = 401) -> list:
    return [dispersion_growth(float(p), C0, C1, model) for p in np.linspace(0.0, p_max, points)]


def stationary_residual(rho: DensityPair, model: ModelParams, which: str = "full_Ch",
                        Ctilde: tuple | None = None) -> tuple:
    """Sup-norm residuals of the full stationary system or the birth-and-death form."""
    op: KineticOperator = operator_for(model, rho.grid)
    u = rho.as_array()
    if which == "full_Ch":
        r = op.rhs(u)
        return float(np.abs(r[0]).max()), float(np.abs(r[1]).max())
    if which == "birth_death_Ch1":
        if Ctilde is None:
            raise ValueError("birth-and-death residual needs Ctilde = (Ct0, Ct1)")
        out = []
        for i in (0, 1):
            target = Ctilde[i] * np.exp(-op.phi[i].convolve(u[1 - i]))
            out.append(float(np.abs(u[i] - target).max()))
        return tuple(out)
    raise ValueError(f"unknown residual kind {which!r}")


def birth_death_map(rho: DensityPair, model: ModelParams, Ctilde: tuple) -> DensityPair:
    """One sweep of ``rho_i <- Ct_i exp(-phi_i * rho_j)`` (Jacobi form)."""
    op = operator_for(model, rho.grid)
    u = rho.as_array()
    new = np.stack([Ctilde[i] * np.exp(-op.phi[i].convolve(u[1 - i])) for i in (0, 1)])
    return DensityPair.from_array(rho.grid, new)


def perturbation_map(eps: DensityPair, C0: float, C1: float, model: ModelParams) -> DensityPair:
    """``(C0 [exp(-phi0 * e1) - 1], C1 [exp(-phi1 * e0) - 1])``."""
    op = operator_for(model, eps.grid)
    e = eps.as_array()
    out0 = C0 * np.expm1(-op.phi[0].convolve(e[1]))
    out1 = C1 * np.expm1(-op.phi[1].convolve(e[0]))
    return DensityPair(eps.grid, out0, out1)


def frechet_apply(eps: DensityPair, C0: float, C1: float, model: ModelParams) -> DensityPair:
    """Derivative of ``perturbation_map`` at zero: ``(-C0 phi0*e1, -C1 phi1*e0)``."""
    op = operator_for(model, eps.grid)
    e = eps.as_array()
    return DensityPair(eps.grid, -C0 * op.phi[0].convolve(e[1]), -C1 * op.phi[1].convolve(e[0]))
