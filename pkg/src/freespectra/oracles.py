"""Independent validators for the analytic pipeline.

Three cross-checks that share no code with the solver path: finite-size
Monte-Carlo sampling of the Jacobian Gram spectrum, an all-roots polynomial
baseline (simultaneous Aberth iteration plus Newton polish), and a
Kolmogorov-Smirnov distance that accounts for the point mass at zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .network_model import NetworkSpec, activation, activation_derivative, summarize
from .spectrum import DensityCurve, _cumulative_mass
from .transform_algebra import ComplexPolynomial, RationalMasterEq

__all__ = [
    "EmpiricalSpectrum",
    "RootSet",
    "monte_carlo_spectrum",
    "all_roots",
    "ks_distance",
]

# Per-(seed, layer) substreams; keeps every draw independent of matrix
# assembly order and thread count.
_STREAM_WEIGHT = 0
_STREAM_GAIN = 1
_STREAM_BIAS = 2
_STREAM_INPUT = 3

_ZERO_SNAP = 1e-9
_ABERTH_MAX_SWEEPS = 200
_ABERTH_TOL = 1e-14
# Near-coincident roots (z close to a support edge) make the steps plateau at
# amplified rounding noise; accept the plateau once it is already tiny and let
# the per-root polish and the residual gate finish the job.
_ABERTH_PLATEAU = 1e-6
_ABERTH_STALL_SWEEPS = 8
_POLISH_MAX_ITERS = 50
_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class EmpiricalSpectrum:
    """Sorted squared singular values of one sampled Jacobian."""

    values: np.ndarray
    n0: int
    seed: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", np.sort(np.asarray(self.values, dtype=float)))
        if self.values.size != self.n0:
            raise ValueError("values must have length n0")
        if self.values.size and self.values[0] < 0:
            raise ValueError("squared singular values cannot be negative")


@dataclass(frozen=True)
class RootSet:
    """All roots of P(m) - z Q(m), with multiplicity."""

    roots: tuple


def _generator(seed: int, layer: int, stream: int) -> np.random.Generator:
    key = ((int(seed) % 2**64) << 64) | (4 * layer + stream)
    return np.random.Generator(np.random.Philox(key=key))


def monte_carlo_spectrum(
    spec: NetworkSpec,
    n0: int,
    seed: int,
    mode: str = "swapped",
) -> EmpiricalSpectrum:
    """Sample one Jacobian at base width n0 and return eigenvalues of J^T J.

    Layer widths are N_ell = round(n0 / Lambda_ell); weights have i.i.d.
    N(0, sigma_w^2 / N_ell) entries.  In "swapped" mode each derivative matrix
    D_ell is diagonal with i.i.d. entries phi'(sqrt(q_ell) g), g standard normal,
    independent of the weights.  "forward" mode instead differentiates an actual
    forward pass of a Gaussian input (sanity check only; for width ratios != 1
    its preactivation scale drifts from the infinite-width recurrence).
    """
    if n0 < 4:
        raise ValueError("n0 must be at least 4")
    if mode not in ("swapped", "forward"):
        raise ValueError(f"mode must be 'swapped' or 'forward', got {mode!r}")
    summaries = summarize(spec)
    widths = [n0]
    for ell, s in enumerate(summaries, start=1):
        w = int(round(n0 / s.Lambda))
        if w < 1:
            raise ValueError(f"layer {ell} width rounds to zero (n0={n0}, Lambda={s.Lambda})")
        widths.append(w)

    jac = None
    signal = None
    if mode == "forward":
        rng = _generator(seed, 0, _STREAM_INPUT)
        signal = math.sqrt(spec.input_mean_square) * rng.standard_normal(n0)

    for ell, (s, layer) in enumerate(zip(summaries, spec.layers), start=1):
        n_out, n_in = widths[ell], widths[ell - 1]
        weight = _generator(seed, ell, _STREAM_WEIGHT).standard_normal((n_out, n_in))
        weight *= math.sqrt(layer.sigma_w_sq / n_out)
        if mode == "swapped":
            pre = math.sqrt(s.q) * _generator(seed, ell, _STREAM_GAIN).standard_normal(n_out)
        else:
            pre = weight @ signal
            if layer.sigma_b_sq > 0.0:
                bias = _generator(seed, ell, _STREAM_BIAS).standard_normal(n_out)
                pre = pre + math.sqrt(layer.sigma_b_sq) * bias
            signal = activation(layer.nonlinearity, pre)
        diag = activation_derivative(layer.nonlinearity, pre)
        jac = diag[:, None] * (weight if jac is None else weight @ jac)

    gram = jac.T @ jac
    values = np.linalg.eigvalsh(gram)
    values = np.clip(values, 0.0, None)
    # Rank-deficiency eigenvalues come out as rounding noise; pin them to the atom.
    values[values < _ZERO_SNAP] = 0.0
    return EmpiricalSpectrum(values=values, n0=n0, seed=seed)


def _aberth(poly: ComplexPolynomial) -> np.ndarray:
    n = poly.degree
    coeffs = poly.coeffs
    lead = coeffs[-1]
    radius = 1.0 + max(abs(c / lead) for c in coeffs[:-1])
    angles = 2.0 * math.pi * np.arange(n) / n + 0.4
    roots = radius * np.exp(1j * angles)
    best = math.inf
    stall = 0
    for _ in range(_ABERTH_MAX_SWEEPS):
        max_move = 0.0
        for i in range(n):
            value, deriv = poly.eval_with_derivative(roots[i])
            if value == 0:
                continue
            if deriv == 0:
                roots[i] *= 1.0 + 1e-8
                max_move = math.inf
                continue
            w = value / deriv
            repulsion = sum(1.0 / (roots[i] - roots[j]) for j in range(n) if j != i)
            denom = 1.0 - w * repulsion
            step = w if denom == 0 else w / denom
            roots[i] -= step
            max_move = max(max_move, abs(step) / (1.0 + abs(roots[i])))
        if max_move < _ABERTH_TOL:
            return roots
        if max_move < 0.7 * best:
            best = max_move
            stall = 0
        else:
            stall += 1
            if stall >= _ABERTH_STALL_SWEEPS and max_move < _ABERTH_PLATEAU:
                return roots
    raise RuntimeError(f"all-roots iteration did not settle within {_ABERTH_MAX_SWEEPS} sweeps")


def _polish(poly: ComplexPolynomial, root: complex) -> complex:
    prev = math.inf
    for _ in range(_POLISH_MAX_ITERS):
        value, deriv = poly.eval_with_derivative(root)
        if value == 0 or deriv == 0:
            break
        step = value / deriv
        if abs(step) >= prev:
            break
        root -= step
        prev = abs(step)
    return root


def all_roots(meq: RationalMasterEq, z: complex) -> RootSet:
    """Every root of P(m) - z Q(m), each polished until the Newton step stagnates.

    Residuals are checked relative to sum_k |c_k| max(1, |root|)^k, the natural
    attainable scale for coefficients spanning many orders of magnitude.
    """
    if z.imag == 0.0:
        raise ValueError(f"z must be off the real axis, got {z}")
    spread = max(meq.P.degree, meq.Q.degree) + 1
    coeffs = [0j] * spread
    for k, c in enumerate(meq.P.coeffs):
        coeffs[k] += c
    for k, c in enumerate(meq.Q.coeffs):
        coeffs[k] -= z * c
    poly = ComplexPolynomial(coeffs)
    if poly.degree < 1:
        raise ValueError("P - zQ is constant; no roots to find")
    if poly.degree == 1:
        c0, c1 = poly.coeffs
        return RootSet(roots=(-c0 / c1,))
    roots = [_polish(poly, r) for r in _aberth(poly)]
    for root in roots:
        scale = poly.eval_abs(max(1.0, abs(root)))
        if abs(poly(root)) > _RESIDUAL_TOL * scale:
            raise RuntimeError(f"root {root} kept relative residual above {_RESIDUAL_TOL}")
    return RootSet(roots=tuple(roots))


def ks_distance(emp: EmpiricalSpectrum, curve: DensityCurve) -> float:
    """sup_x |F_emp(x) - F_curve(x)| over the sample points.

    F_curve places atom_lower_bound at zero and renormalizes the trapezoid CDF
    of the grid to the remaining mass.  Sample points exactly at zero are
    compared against the atom alone; at positive points both one-sided limits
    of the empirical CDF are used, which keeps ties at zero from inflating the
    distance.
    """
    if not curve.total_mass + curve.atom_lower_bound > 0.5:
        raise ValueError("curve mass (including the atom) too low for a meaningful comparison")
    values = emp.values
    n = values.size
    cum = _cumulative_mass(curve)
    grid_cdf = cum / cum[-1]
    atom = curve.atom_lower_bound

    zeros = int(np.count_nonzero(values == 0.0))
    dist = abs(zeros / n - atom)
    positive = values[values > 0.0]
    if positive.size:
        model = atom + (1.0 - atom) * np.interp(positive, curve.xs, grid_cdf, left=0.0, right=1.0)
        upper = (zeros + 1 + np.arange(positive.size)) / n
        lower = (zeros + np.arange(positive.size)) / n
        dist = max(
            dist,
            float(np.max(np.abs(upper - model))),
            float(np.max(np.abs(model - lower))),
        )
    return float(dist)
