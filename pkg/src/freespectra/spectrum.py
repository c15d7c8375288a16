"""Density curves, quantiles and moment checks for limiting squared-singular-value laws.

The density at x is recovered from the decaying-branch solution m(x + iy) of the
master equation through rho = -Im((m+1)/z)/pi, evaluated at a small smoothing
offset y > 0.  Grids warm-start neighboring points from each other; chunks of the
grid are independent, so they can run on separate threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .network_model import NetworkSpec, summarize
from .solver import DEFAULT_CONFIG, SolverConfig, SolverError, SolveStats, newton_lilypads
from .transform_algebra import master_from_spec

__all__ = [
    "DensityCurve",
    "QuantileTable",
    "Moments",
    "GridMoments",
    "atom_lower_bound",
    "support_upper_bound",
    "default_grid",
    "density_grid",
    "uniform_density_curve",
    "quantiles",
    "closed_form_moments",
    "grid_moments",
]

_trapz = getattr(np, "trapezoid", None) or np.trapz

# Mild mass renormalization is only trustworthy when the captured mass matches
# the expected continuous mass to this *relative* band; the comparison must not
# be absolute, because for atom-dominated laws the smoothed atom leaks
# O(y / x_min) of spurious mass into the window, which is small on the scale of
# 1 but large on the scale of the continuous part.
_RENORM_BAND = 0.005

_NEGATIVE_DENSITY_TOL = 1e-10


@dataclass(eq=False)
class DensityCurve:
    """Smoothed density sampled on a grid; treat the arrays as read-only."""

    xs: np.ndarray
    rhos: np.ndarray
    y: float
    total_mass: float
    atom_lower_bound: float = 0.0
    stats: Optional[SolveStats] = None

    def __post_init__(self) -> None:
        self.xs = np.asarray(self.xs, dtype=float)
        self.rhos = np.asarray(self.rhos, dtype=float)
        if self.xs.shape != self.rhos.shape or self.xs.ndim != 1:
            raise ValueError("xs and rhos must be 1-D arrays of equal length")
        if self.xs.size < 2:
            raise ValueError("a density curve needs at least two grid points")
        if self.xs[0] < 0 or np.any(np.diff(self.xs) <= 0):
            raise ValueError("xs must be strictly increasing and nonnegative")
        if np.any(self.rhos < 0):
            raise ValueError("rhos must be nonnegative (clamp before constructing)")
        if self.total_mass > 1.02:
            raise ValueError(f"total_mass {self.total_mass} exceeds 1.02; not a probability law")


@dataclass(frozen=True)
class QuantileTable:
    """Quantiles of the absolutely continuous part (the atom at 0 is separate)."""

    probs: tuple
    values: tuple
    atom_lower_bound: float
    total_mass: float


class Moments(NamedTuple):
    m1: float
    variance: float


class GridMoments(NamedTuple):
    m1: float
    m2: float
    coverage_ok: bool


def atom_lower_bound(spec: NetworkSpec) -> float:
    """Mass forced onto {0} by rank counting.

    Through layer ell the Jacobian factors through a matrix whose rank fraction
    (relative to the input width) is at most c_ell / Lambda_ell: the width shrinks
    by Lambda_ell and only a c_ell-fraction of derivative entries is nonzero.
    """
    frac = min(s.c / s.Lambda for s in summarize(spec))
    return max(0.0, 1.0 - min(1.0, frac))


def support_upper_bound(spec: NetworkSpec) -> float:
    """Upper edge bound: product of per-layer operator-norm limits.

    Each weight factor has squared norm at most sigma_w^2 (1 + sqrt(lambda))^2 in
    the limit, and every activation derivative is bounded by 1.
    """
    return float(
        np.prod([l.sigma_w_sq * (1.0 + math.sqrt(l.width_ratio)) ** 2 for l in spec.layers])
    )


def default_grid(
    spec: NetworkSpec,
    points: int = 200,
    x_min: Optional[float] = None,
    x_max: Optional[float] = None,
    log_spaced: bool = True,
) -> np.ndarray:
    """Grid bracketing the bulk via closed-form moments; log-spaced by default."""
    if points < 2:
        raise ValueError("grid needs at least 2 points")
    m1, var = closed_form_moments(spec)
    if x_min is None:
        x_min = m1 * 1e-4
    if x_max is None:
        x_max = m1 + 10.0 * math.sqrt(var)
    if not (0.0 < x_min < x_max):
        raise ValueError(f"invalid grid bracket [{x_min}, {x_max}]")
    if log_spaced:
        return np.logspace(math.log10(x_min), math.log10(x_max), points)
    return np.linspace(x_min, x_max, points)


def _thread_count(threads: Optional[int]) -> int:
    from_env = threads is None
    if from_env:
        raw = os.environ.get("FREESPECTRA_THREADS", "1")
        try:
            threads = int(raw)
        except ValueError:
            raise ValueError(f"FREESPECTRA_THREADS must be a positive integer, got {raw!r}")
    if threads < 1:
        source = "FREESPECTRA_THREADS" if from_env else "thread count"
        raise ValueError(f"{source} must be >= 1, got {threads}")
    return threads


def density_grid(
    spec: NetworkSpec,
    xs: Optional[Sequence[float]] = None,
    y: float = 1e-6,
    points: int = 200,
    solver_config: SolverConfig = DEFAULT_CONFIG,
    threads: Optional[int] = None,
    reverse: bool = False,
) -> DensityCurve:
    """Solve the master equation at z = x + iy over the grid and return the curve.

    The grid is split into contiguous chunks (one per thread); each chunk is
    traversed from its largest x downward (smallest upward when reverse=True),
    warm-starting every solve from the previous point.  Assembly is by grid
    index, so the output does not depend on thread scheduling.
    """
    if y <= 0:
        raise ValueError("y must be positive")
    if xs is None:
        xs = default_grid(spec, points)
    xs = np.asarray(xs, dtype=float)
    if np.any(xs <= 0):
        raise ValueError("grid points must be positive (the atom at 0 is handled separately)")
    meq = master_from_spec(spec)
    n_threads = _thread_count(threads)
    n_chunks = max(1, min(n_threads, xs.size // 2)) if xs.size >= 2 else 1
    chunks = np.array_split(np.arange(xs.size), n_chunks)

    def solve_chunk(indices: np.ndarray):
        order = indices if reverse else indices[::-1]
        stats = SolveStats()
        proxy = None
        out = []
        for i in order:
            x = float(xs[i])
            z = complex(x, y)
            try:
                m = newton_lilypads(meq, z, proxy=proxy, config=solver_config, stats=stats)
            except SolverError as err:
                raise SolverError(
                    f"density solve failed at x={x!r}: {err}",
                    z=z,
                    last_certified=err.last_certified,
                ) from err
            proxy = (z, m)
            out.append((int(i), m))
        return out, stats

    results: list = [None] * xs.size
    total = SolveStats()
    if n_chunks == 1:
        pairs, stats = solve_chunk(chunks[0])
        total.merge(stats)
        for i, m in pairs:
            results[i] = m
    else:
        with ThreadPoolExecutor(max_workers=n_chunks) as pool:
            for pairs, stats in pool.map(solve_chunk, chunks):
                total.merge(stats)
                for i, m in pairs:
                    results[i] = m

    rhos = np.empty(xs.size, dtype=float)
    for i, m in enumerate(results):
        z = complex(float(xs[i]), y)
        rho = -((m + 1.0) / z).imag / math.pi
        if rho < 0.0:
            if rho < -_NEGATIVE_DENSITY_TOL:
                raise SolverError(f"negative density {rho!r} at x={float(xs[i])!r}", z=z)
            rho = 0.0
        rhos[i] = rho

    mass = float(_trapz(rhos, xs))
    return DensityCurve(
        xs=xs,
        rhos=rhos,
        y=y,
        total_mass=mass,
        atom_lower_bound=atom_lower_bound(spec),
        stats=total,
    )


def uniform_density_curve(x_lo: float, x_hi: float, points: int = 201) -> DensityCurve:
    """Synthetic flat curve (mass 1, no atom); used for test modes, not solving."""
    if not (0.0 <= x_lo < x_hi):
        raise ValueError("need 0 <= x_lo < x_hi")
    xs = np.linspace(x_lo, x_hi, points)
    rhos = np.full(points, 1.0 / (x_hi - x_lo))
    return DensityCurve(xs=xs, rhos=rhos, y=0.0, total_mass=1.0)


def _cumulative_mass(curve: DensityCurve) -> np.ndarray:
    steps = 0.5 * (curve.rhos[1:] + curve.rhos[:-1]) * np.diff(curve.xs)
    out = np.empty(curve.xs.size, dtype=float)
    out[0] = 0.0
    np.cumsum(steps, out=out[1:])
    return out


def quantiles(curve: DensityCurve, probs: Sequence[float]) -> QuantileTable:
    """Invert the curve's trapezoid CDF, conditional on the absolutely continuous part.

    The returned values satisfy G(v) = p with G renormalized to [0, 1] over the
    grid window; the atom at zero is reported alongside, never folded in.
    """
    probs = tuple(float(p) for p in probs)
    if not probs:
        raise ValueError("probs must be nonempty")
    for p in probs:
        if not (0.0 < p < 1.0):
            raise ValueError(f"probs must lie strictly inside (0, 1), got {p}")
    if curve.total_mass + curve.atom_lower_bound < 0.5:
        raise ValueError("grid window misses the bulk")
    cum = _cumulative_mass(curve)
    mass = cum[-1]
    if not (mass > 0.0):
        raise ValueError("curve carries no mass on its grid window")
    # Exact inversion of the trapezoid CDF: within a cell the density is linear,
    # so the cumulative is quadratic in t = v - x0 and the stable root is
    # t = 2T / (rho0 + sqrt(rho0^2 + 2sT)); the discriminant telescopes to
    # rho1^2 at the far node, so it never goes negative beyond roundoff.
    xs, rhos = curve.xs, curve.rhos
    targets = np.asarray(probs) * mass
    idx = np.clip(np.searchsorted(cum, targets, side="left"), 1, cum.size - 1)
    widths = xs[idx] - xs[idx - 1]
    excess = targets - cum[idx - 1]
    slope = (rhos[idx] - rhos[idx - 1]) / widths
    disc = np.maximum(rhos[idx - 1] ** 2 + 2.0 * slope * excess, 0.0)
    denom = rhos[idx - 1] + np.sqrt(disc)
    offset = np.where(denom > 0.0, 2.0 * excess / np.where(denom > 0.0, denom, 1.0), 0.0)
    values = xs[idx - 1] + np.minimum(offset, widths)
    return QuantileTable(
        probs=probs,
        values=tuple(float(v) for v in values),
        atom_lower_bound=curve.atom_lower_bound,
        total_mass=curve.total_mass,
    )


def closed_form_moments(spec: NetworkSpec) -> Moments:
    """First moment and variance of the limiting law from the layer summaries.

    m1 = prod_ell c_ell sigma_w_ell^2, and expanding the master equation at
    z -> infinity gives m2 = m1^2 (1 + sum_ell Lambda_ell / c_ell), i.e.
    variance = m1^2 * sum_ell Lambda_ell / c_ell.
    """
    summaries = summarize(spec)
    m1 = 1.0
    for s in summaries:
        m1 *= s.c * s.sigma_w_sq
    variance = m1 * m1 * sum(s.Lambda / s.c for s in summaries)
    return Moments(m1=m1, variance=variance)


def grid_moments(curve: DensityCurve) -> GridMoments:
    """Trapezoid moments of the curve over its window.

    Renormalizes the absolutely continuous mass to (1 - atom) only when the
    captured mass already agrees with it in relative terms (fully covered
    window, no significant leak from the smoothed atom); otherwise the raw
    integrals are returned and coverage_ok reports the problem.
    """
    xs, rhos = curve.xs, curve.rhos
    mass = float(_trapz(rhos, xs))
    raw_m1 = float(_trapz(xs * rhos, xs))
    raw_m2 = float(_trapz(xs * xs * rhos, xs))

    coverage_ok = curve.y <= 1e-6 * (1.0 + 1e-9)
    hot = np.nonzero(rhos > 1e-6)[0]
    if hot.size:
        coverage_ok = bool(coverage_ok and xs[-1] >= 1.2 * xs[hot[-1]])

    atom = curve.atom_lower_bound
    scale = 1.0
    expected = 1.0 - atom
    if mass > 0.0 and abs(mass - expected) <= _RENORM_BAND * expected:
        scale = expected / mass
    return GridMoments(m1=raw_m1 * scale, m2=raw_m2 * scale, coverage_ok=coverage_ok)
