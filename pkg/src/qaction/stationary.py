"""Stationary points of the reduced action over (d, lambda, S, kappa).

For a level E_n the reduced action of the constant-control problem is

    Lambda(d, lambda, S, kappa) =
        (d^2 - lambda d - m^2 c^2 - lambda^2 E_n / (2 m c^2)) S
        + kappa (lambda S - x10)

with kappa the multiplier pinning the coordinate-time displacement x10.
Its stationary point is known in closed form,

    lambda = 2 d = 2 m c / sqrt(1 + 2 E_n / m c^2),   S = x10 / lambda,
    kappa c = sqrt(m^2 c^4 + 2 m c^2 E_n) = m c^2 sqrt(1 - alpha^2 / n^2),

and kappa c plays the role of the electron energy: it agrees with the
Sommerfeld fine-structure level exactly at (p = 0, k = +-n) and to order
alpha^4 otherwise. The solver is a damped Newton iteration on the exact
gradient, run in scaled variables so one tolerance covers all components.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectrum import QuantumNumbers, SommerfeldNumbers, bohr_energy, sommerfeld_energy
from .units import UnitSystem

__all__ = [
    "ActionValue", "StationaryPoint", "LevelComparison", "SommerfeldComparison",
    "action_value", "solve_stationary", "stationary_closed_form",
    "level_comparison", "free_particle_duration",
]


@dataclass(frozen=True)
class ActionValue:
    """Reduced action and its exact gradient at one parameter point."""

    value: float
    grad_d: float
    grad_lam: float
    grad_S: float
    grad_kappa: float


@dataclass(frozen=True)
class StationaryPoint:
    """Solution of the four stationarity conditions for one level."""

    d: float
    lam: float
    S: float
    kappa: float
    kappa_c: float
    x10: float


@dataclass(frozen=True)
class SommerfeldComparison:
    p: int
    k: int
    nstar_sq: float
    energy: float
    difference: float  # stationary-action level minus Sommerfeld level


@dataclass(frozen=True)
class LevelComparison:
    """Stationary-action level energy against every Sommerfeld (p, k) partner."""

    n: int
    energy: float
    comparisons: tuple[SommerfeldComparison, ...]


def action_value(d: float, lam: float, S: float, kappa: float,
                 n: QuantumNumbers | int, x10: float, u: UnitSystem) -> ActionValue:
    """Evaluate the reduced action and its gradient, no approximations.

    S must be positive; the remaining parameters are unconstrained (the
    lambda > 0 branch is selected by the solver, not by this evaluation).
    """
    if S <= 0.0:
        raise ValueError("S must be positive")
    if x10 <= 0.0:
        raise ValueError("x10 must be positive")
    e_n = bohr_energy(n, u)
    m2c2 = u.mass * u.mass * u.c * u.c
    ratio = e_n / u.rest_energy
    bracket = d * d - lam * d - m2c2 - 0.5 * lam * lam * ratio
    value = bracket * S + kappa * (lam * S - x10)
    return ActionValue(
        value=value,
        grad_d=(2.0 * d - lam) * S,
        grad_lam=(-d - lam * ratio + kappa) * S,
        grad_S=bracket + kappa * lam,
        grad_kappa=lam * S - x10,
    )


def stationary_closed_form(n: QuantumNumbers | int, x10: float,
                           u: UnitSystem) -> StationaryPoint:
    """Closed-form stationary point; the oracle the solver is tested against."""
    if x10 <= 0.0:
        raise ValueError("x10 must be positive")
    e_n = bohr_energy(n, u)
    shrink = 1.0 + 2.0 * e_n / u.rest_energy  # equals 1 - (alpha/n)^2
    if shrink <= 0.0:
        raise ValueError("level too deep: 1 + 2 E_n / m c^2 must stay positive")
    lam = 2.0 * u.mc / math.sqrt(shrink)
    kappa_c = math.sqrt(u.rest_energy * u.rest_energy + 2.0 * u.rest_energy * e_n)
    return StationaryPoint(
        d=0.5 * lam,
        lam=lam,
        S=x10 / lam,
        kappa=kappa_c / u.c,
        kappa_c=kappa_c,
        x10=x10,
    )


def _scaled_residual(params: np.ndarray, e_n: float, x10: float,
                     u: UnitSystem) -> np.ndarray:
    d, lam, S, kappa = params
    m2c2 = u.mass * u.mass * u.c * u.c
    ratio = e_n / u.rest_energy
    S0 = x10 / (2.0 * u.mc)
    bracket = d * d - lam * d - m2c2 - 0.5 * lam * lam * ratio
    return np.array([
        (2.0 * d - lam) * S / (u.mc * S0),
        (-d - lam * ratio + kappa) * S / (u.mc * S0),
        (bracket + kappa * lam) / m2c2,
        (lam * S - x10) / x10,
    ])


def _jacobian(params: np.ndarray, e_n: float, u: UnitSystem) -> np.ndarray:
    d, lam, S, kappa = params
    m2c2 = u.mass * u.mass * u.c * u.c
    ratio = e_n / u.rest_energy
    g2 = -d - lam * ratio + kappa
    return np.array([
        [2.0 * S, -S, 2.0 * d - lam, 0.0],
        [-S, -ratio * S, g2, S],
        [2.0 * d - lam, g2, 0.0, lam],
        [0.0, S, lam, 0.0],
    ])


def solve_stationary(n: QuantumNumbers | int, x10: float, u: UnitSystem,
                     tol: float = 1e-12, max_iters: int = 60) -> StationaryPoint:
    """Damped Newton solve of the four stationarity conditions.

    Starts from the non-relativistic guess (d, lambda, S, kappa) =
    (m c, 2 m c, x10 / 2 m c, m c), stays on the lambda > 0 branch, and
    declares convergence when every residual component is below tol in its
    natural scale (momenta against m c S and m^2 c^2, the constraint against
    x10). Quadratic convergence makes 1e-12 a cheap default.
    """
    if x10 <= 0.0:
        raise ValueError("x10 must be positive")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    e_n = bohr_energy(n, u)
    S0 = x10 / (2.0 * u.mc)
    scale = np.array([u.mc, u.mc, S0, u.mc])
    resid_scale = np.array([u.mc * S0, u.mc * S0,
                            u.mass * u.mass * u.c * u.c, x10])
    params = np.array([u.mc, 2.0 * u.mc, S0, u.mc])

    res = _scaled_residual(params, e_n, x10, u)
    best = float(np.max(np.abs(res)))
    for _ in range(max_iters):
        if best <= tol:
            lam = float(params[1])
            kappa = float(params[3])
            return StationaryPoint(d=float(params[0]), lam=lam, S=float(params[2]),
                                   kappa=kappa, kappa_c=kappa * u.c, x10=x10)
        jac = _jacobian(params, e_n, u)
        # scale rows/columns so the linear solve sees O(1) numbers
        jac_scaled = jac * scale[None, :] / resid_scale[:, None]
        try:
            step = np.linalg.solve(jac_scaled, -res)
        except np.linalg.LinAlgError:
            step, *_ = np.linalg.lstsq(jac_scaled, -res, rcond=None)
        t = 1.0
        while t >= 1.0 / 1024.0:
            trial = params + t * step * scale
            if trial[1] > 0.0 and trial[2] > 0.0:  # lambda > 0 branch, S > 0
                trial_res = _scaled_residual(trial, e_n, x10, u)
                trial_norm = float(np.max(np.abs(trial_res)))
                if trial_norm < best:
                    params, res, best = trial, trial_res, trial_norm
                    break
            t *= 0.5
        else:
            break  # no descent step found
    if best <= tol:
        lam = float(params[1])
        kappa = float(params[3])
        return StationaryPoint(d=float(params[0]), lam=lam, S=float(params[2]),
                               kappa=kappa, kappa_c=kappa * u.c, x10=x10)
    raise RuntimeError(
        f"stationarity iteration stalled at scaled residual {best:.3e} (tol {tol:.3e})")


def level_comparison(n: QuantumNumbers | int, u: UnitSystem) -> LevelComparison:
    """kappa c for level n next to every Sommerfeld level with p + |k| = n.

    The difference column is stationary minus Sommerfeld; it vanishes
    identically at p = 0 and grows like alpha^4 m c^2 / 32 at (p, |k|) = (1, 1).
    """
    n = n if isinstance(n, QuantumNumbers) else QuantumNumbers(int(n))
    e_n = bohr_energy(n, u)
    energy = math.sqrt(u.rest_energy * u.rest_energy + 2.0 * u.rest_energy * e_n)
    rows = []
    for abs_k in range(n.n, 0, -1):
        for k in (-abs_k, abs_k):
            p = n.n - abs_k
            pk = SommerfeldNumbers(p=p, k=k)
            e_somm = sommerfeld_energy(pk, u)
            rows.append(SommerfeldComparison(
                p=p, k=k,
                nstar_sq=float(p * p + 2.0 * p * math.sqrt(k * k - u.alpha ** 2) + k * k),
                energy=e_somm,
                difference=energy - e_somm,
            ))
    return LevelComparison(n=n.n, energy=energy, comparisons=tuple(rows))


def free_particle_duration(x0, x1, u: UnitSystem) -> float:
    """Free internal-time duration sqrt((x1 - x0)^2) / (2 m c).

    Four-vectors in length units with x^0 = c t first and metric (+, -, -, -).
    The displacement must be timelike.
    """
    a = np.asarray(x0, dtype=float)
    b = np.asarray(x1, dtype=float)
    if a.shape != (4,) or b.shape != (4,):
        raise ValueError("endpoints must be 4-vectors")
    delta = b - a
    interval_sq = delta[0] ** 2 - float(np.dot(delta[1:], delta[1:]))
    if interval_sq <= 0.0:
        raise ValueError("displacement must be timelike (positive interval)")
    return math.sqrt(interval_sq) / (2.0 * u.mc)
