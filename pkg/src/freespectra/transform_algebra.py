"""Rational transform algebra: S-transforms with width ratios and the master equation.

The squared-singular-value law of the layered product is encoded by a rational
inverse moment transform M^{-1}(m) = P(m)/Q(m); its defining equation at a
spectral parameter z is phi_z(m) = P(m)/z - Q(m) = 0.  Per-layer S-transforms
compose under a rectangular free convolution that rescales the argument of the
left factor by the right factor's ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .network_model import LayerSummary, NetworkSpec, summarize

__all__ = [
    "ComplexPolynomial",
    "RationalSTransform",
    "RationalMasterEq",
    "identity_transform",
    "d_squared_s_transform",
    "weight_s_transform",
    "layer_s_transforms",
    "rect_convolve",
    "compose_layers",
    "master_from_summary",
    "master_from_spec",
    "master_from_s_transform",
    "eval_phi",
    "second_derivative_bound",
]

# Reject master equations whose coefficients leave the comfortably representable
# range; evaluation noise at that scale would dwarf any residual target.
_COEFF_MAGNITUDE_CAP = 1e300


class ComplexPolynomial:
    """Dense complex polynomial, ascending coefficients, exact trailing zeros trimmed."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence[complex]):
        c = [complex(v) for v in coeffs]
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        if not c:
            c = [0j]
        self.coeffs = tuple(c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x: complex) -> complex:
        p = self.coeffs[-1]
        for k in range(len(self.coeffs) - 2, -1, -1):
            p = p * x + self.coeffs[k]
        return p

    def eval_with_derivative(self, x: complex) -> tuple[complex, complex]:
        """One Horner pass for (value, derivative)."""
        c = self.coeffs
        p = c[-1]
        dp = 0j
        for k in range(len(c) - 2, -1, -1):
            dp = dp * x + p
            p = p * x + c[k]
        return p, dp

    def eval_abs(self, r: float) -> float:
        """Horner majorant sum_k |c_k| r^k, the rounding-noise scale of __call__."""
        p = abs(self.coeffs[-1])
        for k in range(len(self.coeffs) - 2, -1, -1):
            p = p * r + abs(self.coeffs[k])
        return p

    def derivative(self) -> "ComplexPolynomial":
        if len(self.coeffs) == 1:
            return ComplexPolynomial([0j])
        return ComplexPolynomial([k * c for k, c in enumerate(self.coeffs)][1:])

    def scale(self, s: complex) -> "ComplexPolynomial":
        return ComplexPolynomial([s * c for c in self.coeffs])

    def compose_scaled(self, alpha: complex) -> "ComplexPolynomial":
        """P(alpha * x)."""
        out = []
        power = 1.0 + 0j
        for c in self.coeffs:
            out.append(c * power)
            power *= alpha
        return ComplexPolynomial(out)

    def __mul__(self, other: "ComplexPolynomial") -> "ComplexPolynomial":
        a, b = self.coeffs, other.coeffs
        out = [0j] * (len(a) + len(b) - 1)
        for i, ai in enumerate(a):
            if ai == 0:
                continue
            for j, bj in enumerate(b):
                out[i + j] += ai * bj
        return ComplexPolynomial(out)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ComplexPolynomial) and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __repr__(self) -> str:
        return f"ComplexPolynomial({list(self.coeffs)!r})"


@dataclass(frozen=True)
class RationalSTransform:
    """S(m) = numerator(m)/denominator(m) together with the factor's width ratio."""

    numerator: ComplexPolynomial
    denominator: ComplexPolynomial
    ratio: float

    def __call__(self, m: complex) -> complex:
        return self.numerator(m) / self.denominator(m)


@dataclass(frozen=True)
class RationalMasterEq:
    """The pair (P, Q) with z = P(m)/Q(m) defining the moment transform branch."""

    P: ComplexPolynomial
    Q: ComplexPolynomial
    spec: Optional[NetworkSpec] = None

    def __post_init__(self) -> None:
        for poly, name in ((self.P, "P"), (self.Q, "Q")):
            worst = max(abs(c) for c in poly.coeffs)
            if not math.isfinite(worst) or worst > _COEFF_MAGNITUDE_CAP:
                raise ValueError(
                    f"master equation {name} coefficients overflow (max magnitude {worst:.3g}); "
                    "the network's gains are too large to represent"
                )

    @property
    def degree(self) -> int:
        return max(self.P.degree, self.Q.degree)


def identity_transform() -> RationalSTransform:
    """Neutral element: S = 1, ratio 1 (the law of the identity factor)."""
    return RationalSTransform(ComplexPolynomial([1.0]), ComplexPolynomial([1.0]), 1.0)


def d_squared_s_transform(c: float) -> RationalSTransform:
    """S-transform of the Bernoulli(c) law of a squared activation-derivative diagonal."""
    if not (0.0 < c <= 1.0):
        raise ValueError(f"c must lie in (0, 1], got {c}")
    return RationalSTransform(ComplexPolynomial([1.0, 1.0]), ComplexPolynomial([c, 1.0]), 1.0)


def weight_s_transform(sigma_w_sq: float, lam: float) -> RationalSTransform:
    """S-transform of the squared-singular law of one Gaussian weight factor."""
    if sigma_w_sq <= 0 or lam <= 0:
        raise ValueError("sigma_w_sq and lam must be positive")
    return RationalSTransform(
        ComplexPolynomial([1.0]),
        ComplexPolynomial([sigma_w_sq, sigma_w_sq * lam]),
        lam,
    )


def layer_s_transforms(layers: Sequence[LayerSummary]) -> list[RationalSTransform]:
    """Reduced per-layer transforms S_l(m) = 1/(sigma^2 (c_l + lambda_l m)), ratio lambda_l."""
    out = []
    prev = 1.0
    for layer in layers:
        lam = layer.Lambda / prev
        prev = layer.Lambda
        out.append(
            RationalSTransform(
                ComplexPolynomial([1.0]),
                ComplexPolynomial([layer.sigma_w_sq * layer.c, layer.sigma_w_sq * lam]),
                lam,
            )
        )
    return out


def rect_convolve(a: RationalSTransform, b: RationalSTransform) -> RationalSTransform:
    """Free multiplicative convolution of ratio-carrying factors.

    The product law's S-transform is S_a(b.ratio * m) * S_b(m) and the ratios
    multiply; the argument rescaling is what keeps rectangular factors honest.
    """
    return RationalSTransform(
        a.numerator.compose_scaled(b.ratio) * b.numerator,
        a.denominator.compose_scaled(b.ratio) * b.denominator,
        a.ratio * b.ratio,
    )


def compose_layers(transforms: Sequence[RationalSTransform]) -> RationalSTransform:
    """Fold layer transforms (given in layer order 1..L) into the product law."""
    acc = identity_transform()
    for t in reversed(transforms):
        acc = rect_convolve(acc, t)
    return acc


def master_from_summary(layers: Sequence[LayerSummary]) -> RationalMasterEq:
    """P(m) = (m+1) * prod_l sigma_l^2 (c_l + Lambda_l m), Q(m) = m."""
    if not layers:
        raise ValueError("need at least one layer summary")
    P = ComplexPolynomial([1.0, 1.0])
    for layer in layers:
        P = P * ComplexPolynomial(
            [layer.sigma_w_sq * layer.c, layer.sigma_w_sq * layer.Lambda]
        )
    return RationalMasterEq(P=P, Q=ComplexPolynomial([0.0, 1.0]))


def master_from_spec(spec: NetworkSpec) -> RationalMasterEq:
    meq = master_from_summary(summarize(spec))
    return RationalMasterEq(P=meq.P, Q=meq.Q, spec=spec)


def master_from_s_transform(s: RationalSTransform) -> RationalMasterEq:
    """M^{-1}(m) = (1+m)/(m S(m)) as a rational pair."""
    return RationalMasterEq(
        P=s.denominator * ComplexPolynomial([1.0, 1.0]),
        Q=s.numerator * ComplexPolynomial([0.0, 1.0]),
    )


def eval_phi(meq: RationalMasterEq, z: complex, m: complex) -> tuple[complex, complex]:
    """(phi_z(m), phi_z'(m)) with phi_z(m) = P(m)/z - Q(m), both by Horner."""
    if z == 0:
        raise ValueError("z must be nonzero")
    p, dp = meq.P.eval_with_derivative(m)
    q, dq = meq.Q.eval_with_derivative(m)
    return p / z - q, dp / z - dq


def second_derivative_bound(
    meq: RationalMasterEq, z: complex, center: complex, radius: float
) -> float:
    """Upper bound on sup |phi_z''| over the closed disc |m - center| <= radius.

    Coefficient bound: sum_k k(k-1) |P_k/z - Q_k| (|center| + radius)^{k-2}.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    pc, qc = meq.P.coeffs, meq.Q.coeffs
    r = abs(center) + radius
    total = 0.0
    rpow = 1.0
    for k in range(2, max(len(pc), len(qc))):
        ck = (pc[k] if k < len(pc) else 0j) / z - (qc[k] if k < len(qc) else 0j)
        total += k * (k - 1) * abs(ck) * rpow
        rpow *= r
    return total
