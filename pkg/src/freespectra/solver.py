"""Certified Newton iteration and the lilypad continuation across spectral parameters.

A start is accepted only with a Kantorovich certificate (h = delta*kappa*lambda < 1/2),
which guarantees Newton converges to the unique root within t* of the start.  The
global strategy chains certified basins: double Im z upward until the cold start
certifies, then walk back down to the requested z by certified half-steps, warm
starting each solve from the previous solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .transform_algebra import RationalMasterEq, eval_phi, second_derivative_bound

__all__ = [
    "SolverConfig",
    "DEFAULT_CONFIG",
    "BasinCertificate",
    "SolveStats",
    "SolverError",
    "is_in_basin",
    "newton_raphson",
    "newton_lilypads",
]

_ULP = 2.0**-52


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float = 1e-12
    max_newton_iters: int = 100
    max_doublings: int = 60
    min_step_fraction: float = 2.0**-60

    def __post_init__(self) -> None:
        if not (1e-15 <= self.epsilon < 1.0):
            raise ValueError(f"epsilon must lie in [1e-15, 1), got {self.epsilon}")
        if self.max_newton_iters < 1:
            raise ValueError("max_newton_iters must be a positive integer")
        if self.max_doublings < 1:
            raise ValueError("max_doublings must be a positive integer")
        if not (0.0 < self.min_step_fraction < 1.0):
            raise ValueError("min_step_fraction must lie in (0, 1)")


DEFAULT_CONFIG = SolverConfig()


@dataclass(frozen=True)
class BasinCertificate:
    """delta = |phi/phi'|, kappa = 1/|phi'|, lambda_bound >= sup |phi''|, h = delta*kappa*lambda."""

    delta: float
    kappa: float
    lambda_bound: float
    h: float
    t_star: float


@dataclass
class SolveStats:
    """Mutable counters accumulated across a solve or a whole grid."""

    newton_iterations: int = 0
    basins: int = 0
    doublings: int = 0
    restarts: int = 0

    def merge(self, other: "SolveStats") -> None:
        self.newton_iterations += other.newton_iterations
        self.basins += other.basins
        self.doublings += other.doublings
        self.restarts += other.restarts


class SolverError(RuntimeError):
    """Solve failure; carries the objective z and the last certified (z, m) if any."""

    def __init__(self, message: str, z: Optional[complex] = None,
                 last_certified: Optional[tuple[complex, complex]] = None):
        super().__init__(message)
        self.z = z
        self.last_certified = last_certified


def _require_off_axis(z: complex) -> None:
    if z.imag == 0.0:
        raise ValueError(f"z must have nonzero imaginary part, got {z}")


def _noise_floor(meq: RationalMasterEq, z: complex, m: complex) -> float:
    # Double-precision evaluation noise of P(m)/z - Q(m); residuals below this
    # are not representable whatever the iteration does.
    r = abs(m)
    return 4.0 * _ULP * (meq.P.eval_abs(r) / abs(z) + meq.Q.eval_abs(r))


def is_in_basin(
    meq: RationalMasterEq,
    z: complex,
    m0: complex,
    config: SolverConfig = DEFAULT_CONFIG,
) -> Optional[BasinCertificate]:
    """Kantorovich test at m0; None means "not certified", never "divergent"."""
    _require_off_axis(z)
    value, deriv = eval_phi(meq, z, m0)
    denom = abs(deriv)
    if denom == 0.0 or not math.isfinite(denom):
        return None
    delta = abs(value) / denom
    kappa = 1.0 / denom
    if not (math.isfinite(delta) and math.isfinite(kappa)):
        return None
    # The solution lies within t* < 2*delta of the start, so bounding phi''
    # on the radius-2*delta disc is sufficient and breaks the circularity.
    lam = second_derivative_bound(meq, z, m0, 2.0 * delta)
    h = delta * kappa * lam
    if not (math.isfinite(h) and h < 0.5):
        return None
    t_star = 2.0 * delta / (1.0 + math.sqrt(1.0 - 2.0 * h)) if delta > 0 else 0.0
    return BasinCertificate(delta=delta, kappa=kappa, lambda_bound=lam, h=h, t_star=t_star)


def newton_raphson(
    meq: RationalMasterEq,
    z: complex,
    m0: complex,
    config: SolverConfig = DEFAULT_CONFIG,
    stats: Optional[SolveStats] = None,
) -> complex:
    """Newton iteration on phi_z from m0; the residual test runs before each step,
    so an exact root is returned unchanged.

    Stops when |phi_z(m)| < epsilon, or when the residual falls below its own
    floating-point evaluation floor (converged to working precision).
    """
    _require_off_axis(z)
    m = m0
    for iteration in range(config.max_newton_iters + 1):
        value, deriv = eval_phi(meq, z, m)
        resid = abs(value)
        if resid < config.epsilon or resid < _noise_floor(meq, z, m):
            if stats is not None:
                stats.newton_iterations += iteration
            return m
        if iteration == config.max_newton_iters:
            break
        if deriv == 0 or not (math.isfinite(deriv.real) and math.isfinite(deriv.imag)):
            raise SolverError(f"derivative underflow at m={m} (z={z})", z=z)
        m = m - value / deriv
        if not (math.isfinite(m.real) and math.isfinite(m.imag)):
            raise SolverError(f"iterate diverged to {m} (z={z})", z=z)
    raise SolverError(
        f"no convergence within {config.max_newton_iters} iterations at z={z} "
        f"(residual {resid:.3e})",
        z=z,
    )


def newton_lilypads(
    meq: RationalMasterEq,
    z_objective: complex,
    proxy: Optional[tuple[complex, complex]] = None,
    config: SolverConfig = DEFAULT_CONFIG,
    stats: Optional[SolveStats] = None,
) -> complex:
    """Solve phi_{z_objective}(m) = 0 on the decaying branch (m -> 0 as z -> infinity).

    Without a proxy, start at m=0 and double Im z until certified; with a proxy
    (z, m) from a neighboring solve, skip straight to the descent.  The descent
    halves the step toward z_objective until the current solution certifies at
    the shifted point, then advances and re-solves.
    """
    _require_off_axis(z_objective)
    if stats is None:
        stats = SolveStats()

    if proxy is None:
        z = z_objective
        m = 0j
        doublings = 0
        while is_in_basin(meq, z, m, config) is None:
            if doublings >= config.max_doublings:
                raise SolverError(
                    f"no certified start after {doublings} doublings of Im z "
                    f"(reached z={z})",
                    z=z_objective,
                )
            z = complex(z.real, 2.0 * z.imag)
            doublings += 1
        stats.doublings += doublings
        m = newton_raphson(meq, z, m, config, stats)
        stats.basins += 1
    else:
        z, m = proxy

    try:
        return _descend(meq, z, m, z_objective, config, stats)
    except SolverError as err:
        fallback = _restart_from_roots(meq, z_objective, config, stats)
        if fallback is None:
            raise err
        return fallback


def _descend(
    meq: RationalMasterEq,
    z: complex,
    m: complex,
    z_objective: complex,
    config: SolverConfig,
    stats: SolveStats,
) -> complex:
    if z == z_objective:
        m = newton_raphson(meq, z_objective, m, config, stats)
        stats.basins += 1
        return m
    full_step = abs(z_objective - z)
    floor = config.min_step_fraction * full_step
    while True:
        dz = z_objective - z
        target = z_objective
        while is_in_basin(meq, target, m, config) is None:
            dz *= 0.5
            target = z + dz
            if abs(dz) < floor:
                raise SolverError(
                    f"continuation stalled at z={z} (step below "
                    f"{config.min_step_fraction:.3g} of the initial gap)",
                    z=z_objective,
                    last_certified=(z, m),
                )
        z = target
        m = newton_raphson(meq, z, m, config, stats)
        stats.basins += 1
        if z == z_objective:
            return m
        if abs(z_objective - z) <= 1e-15 * abs(z_objective):
            # Remaining gap is at rounding scale; finish at the objective itself.
            m = newton_raphson(meq, z_objective, m, config, stats)
            stats.basins += 1
            return m


def _restart_from_roots(
    meq: RationalMasterEq,
    z_objective: complex,
    config: SolverConfig,
    stats: SolveStats,
) -> Optional[complex]:
    """One recovery attempt: seed Newton with the physical root of the full root set."""
    from .oracles import all_roots  # local import; oracles depends on this module's types

    try:
        roots = all_roots(meq, z_objective).roots
    except (RuntimeError, ValueError):
        return None
    if not roots:
        return None
    sign = 1.0 if z_objective.imag > 0 else -1.0
    best = max(roots, key=lambda r: sign * (-((r + 1.0) / z_objective).imag))
    try:
        m = newton_raphson(meq, z_objective, best, config, stats)
    except SolverError:
        return None
    stats.restarts += 1
    stats.basins += 1
    return m
