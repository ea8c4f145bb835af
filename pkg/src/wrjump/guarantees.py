"""Quantitative well-posedness constants of the correlation-function evolution.

With ``alpha = max_i alpha_i`` and ``c = max_i <phi_i>``:

* ``horizon_T(th', th) = (th' - th) / (4 alpha) * exp(-c e^{th'})``
* ``delta_theta(th)`` solves ``delta e^delta = exp(-th - log c)``
* ``tau_theta(th) = delta / (4 alpha) * exp(-1/delta) = sup_{th'>th} horizon_T``
* ``operator_norm_bound(th, th'') = 4 / (e (th - th'')) * max_i alpha_i exp(<phi_i> e^{th''})``
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .model import ModelParams


class UnboundedHorizon(ValueError):
    """Raised when c = 0: without interaction the horizon has no finite supremum."""


@dataclass(frozen=True)
class BanachScaleParams:
    alpha: float
    c: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.c < 0:
            raise ValueError("c must be nonnegative")

    @classmethod
    def from_model(cls, model: ModelParams) -> "BanachScaleParams":
        return cls(model.alpha, model.c)


def horizon_T(theta_prime: float, theta: float, params: BanachScaleParams) -> float:
    if not theta < theta_prime:
        raise ValueError("need theta < theta_prime")
    return (theta_prime - theta) / (4.0 * params.alpha) * math.exp(-params.c * math.exp(theta_prime))


def delta_theta(theta: float, params: BanachScaleParams, tol: float = 1e-15) -> float:
    """Positive root of ``delta e^delta = exp(-theta - log c)``."""
    if params.c == 0:
        raise UnboundedHorizon("delta is undefined for c = 0 (unbounded horizon)")
    log_rhs = -theta - math.log(params.c)
    # work with log(delta) + delta = log_rhs; monotone in delta
    f = lambda x: math.log(x) + x - log_rhs
    lo, hi = 1.0, 1.0
    while f(lo) > 0:
        lo *= 0.5
    while f(hi) < 0:
        hi *= 2.0
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= tol * hi:
            break
    x = 0.5 * (lo + hi)
    # one Newton polish on the log form
    return x - f(x) / (1.0 / x + 1.0)


def tau_theta(theta: float, params: BanachScaleParams) -> float:
    delta = delta_theta(theta, params)
    return delta / (4.0 * params.alpha) * math.exp(-1.0 / delta)


def operator_norm_bound(theta: float, theta_dd: float, model_or_constants) -> float:
    """Bound on the norm of the correlation generator from scale theta'' to theta.

    ``model_or_constants`` is a ModelParams or a sequence of ``(alpha_i, <phi_i>)`` pairs.
    """
    if not theta_dd < theta:
        raise ValueError("need theta_dd < theta")
    if isinstance(model_or_constants, ModelParams):
        pairs = list(zip(model_or_constants.alphas, model_or_constants.phi_masses))
    else:
        pairs = list(model_or_constants)
    worst = max(a * math.exp(m * math.exp(theta_dd)) for a, m in pairs)
    return 4.0 / (math.e * (theta - theta_dd)) * worst


def bounds_report(params: BanachScaleParams, theta: float, theta_prime: float | None = None,
                  theta_dd: float | None = None, pairs=None) -> dict:
    """Everything the ``bounds`` subcommand prints."""
    out: dict = {"alpha": params.alpha, "c": params.c, "theta": theta}
    try:
        delta = delta_theta(theta, params)
        out["delta"] = delta
        out["tau"] = tau_theta(theta, params)
        out["argmax_theta_prime"] = theta + delta
    except UnboundedHorizon:
        out["delta"] = "unbounded horizon"
        out["tau"] = "unbounded horizon"
    if theta_prime is not None:
        out["theta_prime"] = theta_prime
        out["T"] = horizon_T(theta_prime, theta, params)
    if theta_dd is not None:
        out["theta_dd"] = theta_dd
        pairs = pairs if pairs is not None else [(params.alpha, params.c)]
        out["norm_bound"] = operator_norm_bound(theta, theta_dd, pairs)
    return out
