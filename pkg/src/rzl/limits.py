"""Scaling-limit calculus.

The moment function F_m(t) = int_0^1 e^{ty} y^m dy, the 2x2 covariance
matrices G_m and Q_m built from it, and the closed-form limit density D_inf
and pair correlations K_inf / K_tilde_inf. Everything here is a pure function
of its arguments.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .errors import (
    AccuracyError,
    DegenerateDirectionError,
    PreconditionError,
    SingularityError,
)

# Directions with |beta(u)| below this are treated as tangential: the pair
# formulas degenerate there (det G -> 0 quadratically).
TOL_BETA = 1e-8

# Practical order bound; the recurrences below are validated only this far.
M_MAX = 64

# exp(t) overflows double beyond this.
_RE_MAX = 700.0

# Stop a series/backward recurrence once the tail is below this relative level.
_TAIL = 1e-18


def _expm1c(t: complex) -> complex:
    """exp(t) - 1 without cancellation for small |t|, complex t."""
    x, y = t.real, t.imag
    if y == 0.0:
        return complex(math.expm1(x), 0.0)
    s = math.sin(0.5 * y)
    return complex(
        math.expm1(x) * math.cos(y) - 2.0 * s * s,
        math.exp(x) * math.sin(y),
    )


def _series_F(m: int, t: complex) -> complex:
    # F_m(t) = sum_k t^k / (k! (m+k+1)); used for |t| < 1 where it is
    # strongly convergent and cancellation-free.
    term: complex = 1.0 + 0.0j
    total: complex = 1.0 / (m + 1) + 0.0j
    for k in range(1, 200):
        term *= t / k
        inc = term / (m + k + 1)
        total += inc
        if abs(inc) <= 1e-17 * abs(total):
            break
    return total


def eval_F(m: int, t: complex) -> complex:
    """Evaluate F_m(t) = int_0^1 e^{ty} y^m dy to <= 1e-12 relative error.

    Three regimes:
      |t| < 1      - Maclaurin series (the recurrence cancels catastrophically
                     in m near t = 0);
      m <= |t|     - forward recurrence F_j = (e^t - j F_{j-1}) / t from
                     F_0 = (e^t - 1)/t, stable when the index stays below |t|;
      m > |t| >= 1 - backward (Miller-style) recurrence F_{k-1} = (e^t - t F_k)/k
                     seeded with F_M = 0 at an M chosen so the seed error is
                     damped below 1e-18 by the product of factors |t|/k.
    """
    if m != int(m) or not 0 <= m <= M_MAX:
        raise PreconditionError(f"eval_F: m must be an integer in [0, {M_MAX}], got {m!r}")
    m = int(m)
    t = complex(t)
    if not (math.isfinite(t.real) and math.isfinite(t.imag)):
        raise PreconditionError(f"eval_F: t must be finite, got {t!r}")
    if t.real > _RE_MAX:
        raise PreconditionError(f"eval_F: Re t = {t.real:g} overflows exp(t)")

    a = abs(t)
    if a < 1.0:
        return _series_F(m, t)

    e_t = cmath.exp(t)
    if m <= a:
        f = _expm1c(t) / t
        for j in range(1, m + 1):
            f = (e_t - j * f) / t
        return f

    # m > |t| >= 1: choose the backward start M so prod_{k=m+1}^{M} (a/k) < _TAIL
    log_damp = 0.0
    kk = m
    target = math.log(_TAIL)
    while log_damp > target:
        kk += 1
        log_damp += math.log(a / kk)
    f = 0.0 + 0.0j
    for k in range(kk, m, -1):
        f = (e_t - t * f) / k
    return f


def log_F_dd(m: int, s: complex) -> complex:
    """Second derivative of log F_m at s, via (F_{m+2} F_m - F_{m+1}^2) / F_m^2."""
    f0 = eval_F(m, s)
    if abs(f0) < 1e-300:
        raise SingularityError(f"log_F_dd: F_{m}({s!r}) vanishes")
    f1 = eval_F(m + 1, s)
    f2 = eval_F(m + 2, s)
    return (f2 * f0 - f1 * f1) / (f0 * f0)


@dataclass(frozen=True)
class Mat2:
    """A 2x2 complex matrix in scalar form."""

    a11: complex
    a12: complex
    a21: complex
    a22: complex

    def det(self) -> complex:
        return self.a11 * self.a22 - self.a12 * self.a21


def _mat_sub(x: Mat2, y: Mat2) -> Mat2:
    return Mat2(x.a11 - y.a11, x.a12 - y.a12, x.a21 - y.a21, x.a22 - y.a22)


def _mat_mul(x: Mat2, y: Mat2) -> Mat2:
    return Mat2(
        x.a11 * y.a11 + x.a12 * y.a21,
        x.a11 * y.a12 + x.a12 * y.a22,
        x.a21 * y.a11 + x.a22 * y.a21,
        x.a21 * y.a12 + x.a22 * y.a22,
    )


def _mat_inv(x: Mat2) -> Mat2:
    d = x.det()
    return Mat2(x.a22 / d, -x.a12 / d, -x.a21 / d, x.a11 / d)


def G_matrix(m: int, x: complex) -> Mat2:
    """[[F_m(x+conj x), F_m(x)], [F_m(conj x), F_m(0)]]."""
    x = complex(x)
    xb = x.conjugate()
    return Mat2(eval_F(m, x + xb), eval_F(m, x), eval_F(m, xb), eval_F(m, 0.0))


def Q_matrix(m: int, x: complex) -> Mat2:
    """Schur complement G_{m+2} - G_{m+1} G_m^{-1} G_{m+1} at x.

    Rejects |x| < TOL_BETA: det G_m(x) -> 0 there and the complement is the
    degenerate tangential regime.
    """
    x = complex(x)
    if abs(x) < TOL_BETA:
        raise DegenerateDirectionError(
            f"Q_matrix: |x| = {abs(x):.3e} < {TOL_BETA:g} is tangentially degenerate"
        )
    g0 = G_matrix(m, x)
    g1 = G_matrix(m + 1, x)
    g2 = G_matrix(m + 2, x)
    return _mat_sub(g2, _mat_mul(g1, _mat_mul(_mat_inv(g0), g1)))


def perm2(mat: Mat2) -> complex:
    """Permanent of a 2x2 matrix: a11 a22 + a12 a21."""
    return mat.a11 * mat.a22 + mat.a12 * mat.a21


@dataclass(frozen=True)
class LimitGeometry:
    """Geometric inputs of the limit formulas at one boundary point.

    t0 = 1/(d'rho(z) . z), P_norm_sq = ||P||^2 and beta_of_P = beta(P); the
    last is computed independently by callers and must agree with t0*||P||^2.
    The order m is the number of coordinates minus one.
    """

    m: int
    t0: complex
    P_norm_sq: float
    beta_of_P: complex

    def __post_init__(self) -> None:
        if self.m != int(self.m) or self.m < 0:
            raise PreconditionError(f"LimitGeometry: bad order m={self.m!r}")
        if not self.P_norm_sq > 0.0:
            raise PreconditionError("LimitGeometry: P_norm_sq must be > 0")
        ref = self.t0 * self.P_norm_sq
        if abs(self.beta_of_P - ref) > 1e-12 * abs(ref):
            raise PreconditionError(
                "LimitGeometry: beta_of_P and t0*P_norm_sq disagree: "
                f"{self.beta_of_P!r} vs {ref!r}"
            )


def _real_checked(value: complex, what: str) -> float:
    # Limit quantities are real up to rounding; assert the residue is noise.
    if abs(value.imag) > 1e-10 * abs(value.real):
        raise AccuracyError(f"{what}: imaginary residue {value.imag:.3e} too large")
    return value.real


def density_limit(geom: LimitGeometry, beta_u: complex) -> float:
    """Limit density D_inf(u) = ((t0 ||P||)^2 / pi) (log F_m)''(beta + conj beta)."""
    s = 2.0 * complex(beta_u).real
    ldd = log_F_dd(geom.m, s)
    value = (geom.t0 * geom.t0 * geom.P_norm_sq / math.pi) * ldd
    out = _real_checked(value, "density_limit")
    if not out > 0.0:
        raise AccuracyError(f"density_limit: nonpositive value {out!r}")
    return out


@dataclass(frozen=True)
class PairLimit:
    K_inf: float
    K_tilde_inf: float


def pair_limit(geom: LimitGeometry, beta_u: complex) -> PairLimit:
    """Limit pair correlation at separation beta = beta(u).

    K_inf = ((t0 ||P||)^4 / pi^2) perm(Q_m(beta)) / det(G_m(beta));
    K_tilde_inf divides out the two limit densities, leaving
    perm(Q) / (det(G) (log F_m)''(beta+conj beta) (log F_m)''(0)).
    """
    b = complex(beta_u)
    if abs(b) < TOL_BETA:
        raise DegenerateDirectionError(
            f"pair_limit: |beta(u)| = {abs(b):.3e} < {TOL_BETA:g} (tangential direction)"
        )
    g = G_matrix(geom.m, b)
    q = Q_matrix(geom.m, b)
    det_g = g.det()
    perm_q = perm2(q)
    t0p2 = geom.t0 * geom.t0 * geom.P_norm_sq
    k_inf = _real_checked(t0p2 * t0p2 / (math.pi**2) * perm_q / det_g, "pair_limit K_inf")
    ldd_b = log_F_dd(geom.m, b + b.conjugate())
    ldd_0 = log_F_dd(geom.m, 0.0)
    k_tilde = _real_checked(perm_q / (det_g * ldd_b * ldd_0), "pair_limit K_tilde_inf")
    return PairLimit(K_inf=k_inf, K_tilde_inf=k_tilde)
