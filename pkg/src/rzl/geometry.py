"""Torus-invariant boundary geometry.

Defining functions are expressed in squared moduli s_i = |z_i|^2, so torus
invariance is structural. From a profile and a boundary point this module
produces the holomorphic gradient, the P vector, t0, the beta functional,
and the Levi-form positivity check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .errors import PreconditionError
from .limits import LimitGeometry

# |rho| at an accepted boundary point.
ON_BOUNDARY_TOL = 1e-10

# Radial projection solves rho(t^2 s) = 0 to this accuracy in t.
BISECTION_TOL = 1e-14

# Kernel work needs all |z_i| above this, except on spheres where the closed
# forms stay finite with vanishing coordinates.
MIN_COORD = 1e-12


@dataclass(frozen=True)
class RadialProfile:
    """A defining function rho(z) = rho_hat(|z_0|^2, ..., |z_m|^2).

    rho_hat, grad_hat and hess_hat take the vector s of squared moduli and
    return the value, gradient and Hessian of rho_hat. Built-ins are analytic;
    user profiles must supply analytic callbacks and pass a Levi spot check.
    """

    kind: str
    m: int
    params: tuple[float, ...]
    rho_hat: Callable[[np.ndarray], float]
    grad_hat: Callable[[np.ndarray], np.ndarray]
    hess_hat: Callable[[np.ndarray], np.ndarray]

    @property
    def ncoords(self) -> int:
        return self.m + 1


def circle() -> RadialProfile:
    """Unit circle |z| = 1 in C (m = 0)."""
    return RadialProfile(
        kind="circle",
        m=0,
        params=(),
        rho_hat=lambda s: float(s[0] - 1.0),
        grad_hat=lambda s: np.ones(1),
        hess_hat=lambda s: np.zeros((1, 1)),
    )


def sphere(ncoords: int = 2) -> RadialProfile:
    """Unit sphere S^{2k-1} in C^k (default k = 2, the sphere S^3)."""
    if ncoords < 1:
        raise PreconditionError(f"sphere: need at least one coordinate, got {ncoords}")
    k = int(ncoords)
    return RadialProfile(
        kind="sphere",
        m=k - 1,
        params=(float(k),),
        rho_hat=lambda s: float(np.sum(s) - 1.0),
        grad_hat=lambda s: np.ones(k),
        hess_hat=lambda s: np.zeros((k, k)),
    )


def ellipsoid(coeffs: Sequence[float]) -> RadialProfile:
    """sum a_i |z_i|^2 = 1 with all a_i > 0."""
    a = np.asarray(coeffs, dtype=float)
    if a.ndim != 1 or a.size == 0 or not np.all(a > 0.0):
        raise PreconditionError(f"ellipsoid: coefficients must be positive, got {coeffs!r}")
    return RadialProfile(
        kind="ellipsoid",
        m=a.size - 1,
        params=tuple(a),
        rho_hat=lambda s: float(a @ s - 1.0),
        grad_hat=lambda s: a.copy(),
        hess_hat=lambda s: np.zeros((a.size, a.size)),
    )


def power_ellipsoid(exponents: Sequence[float]) -> RadialProfile:
    """sum |z_i|^{2 p_i} = 1 with all p_i >= 1."""
    p = np.asarray(exponents, dtype=float)
    if p.ndim != 1 or p.size == 0 or not np.all(p >= 1.0):
        raise PreconditionError(f"power_ellipsoid: exponents must be >= 1, got {exponents!r}")

    def rho_hat(s: np.ndarray) -> float:
        return float(np.sum(s**p) - 1.0)

    def grad_hat(s: np.ndarray) -> np.ndarray:
        # s_i = 0 with p_i = 1 gives 0^0; define it as 1 (the linear case).
        return np.where(p == 1.0, 1.0, p * s ** (p - 1.0))

    def hess_hat(s: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.where(p <= 1.0, 0.0, p * (p - 1.0) * s ** (p - 2.0))
        return np.diag(d)

    return RadialProfile(
        kind="pellipsoid",
        m=p.size - 1,
        params=tuple(p),
        rho_hat=rho_hat,
        grad_hat=grad_hat,
        hess_hat=hess_hat,
    )


def custom_profile(
    ncoords: int,
    rho_hat: Callable[[np.ndarray], float],
    grad_hat: Callable[[np.ndarray], np.ndarray],
    hess_hat: Callable[[np.ndarray], np.ndarray],
) -> RadialProfile:
    """Wrap user callbacks. rho_hat(0) < 0 is required (complete domain);
    boundary_point() adds a Levi positivity spot check at the working point."""
    prof = RadialProfile(
        kind="custom",
        m=int(ncoords) - 1,
        params=(),
        rho_hat=rho_hat,
        grad_hat=grad_hat,
        hess_hat=hess_hat,
    )
    if not rho_hat(np.zeros(ncoords)) < 0.0:
        raise PreconditionError("custom_profile: rho_hat(0) must be negative")
    return prof


def parse_profile(text: str) -> RadialProfile:
    """CLI grammar: circle | sphere[:k] | ellipsoid:a0,a1,... | pellipsoid:p0,p1,...

    sphere:k is the unit sphere in C^k (default k=2). Coefficient lists are
    comma-separated positive decimals.
    """
    s = text.strip()
    name, _, arg = s.partition(":")
    name = name.strip().lower()
    try:
        if name == "circle":
            if arg:
                raise PreconditionError("profile: circle takes no parameters")
            return circle()
        if name == "sphere":
            return sphere(int(arg) if arg else 2)
        if name == "ellipsoid":
            return ellipsoid([float(x) for x in arg.split(",")] if arg else [])
        if name == "pellipsoid":
            return power_ellipsoid([float(x) for x in arg.split(",")] if arg else [])
    except (ValueError, TypeError) as exc:
        raise PreconditionError(f"profile: cannot parse {text!r}: {exc}") from exc
    raise PreconditionError(
        f"profile: unknown kind {text!r}; expected circle | sphere[:k] | "
        "ellipsoid:a0,a1,... | pellipsoid:p0,p1,..."
    )


@dataclass(frozen=True)
class BoundaryPoint:
    """A point on {rho = 0} with cached coordinate moduli."""

    z: np.ndarray
    r: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "z", np.asarray(self.z, dtype=complex))
        object.__setattr__(self, "r", np.abs(self.z))


def _project_scale(profile: RadialProfile, s: np.ndarray) -> float:
    # Find t with rho_hat(t^2 s) = 0 by bisection; rho_hat(0) < 0 and the
    # profile grows radially, so a bracket always exists.
    def f(t: float) -> float:
        return profile.rho_hat(t * t * s)

    lo, hi = 0.0, 1.0
    grow = 0
    while f(hi) < 0.0:
        hi *= 2.0
        grow += 1
        if grow > 60:
            raise PreconditionError("boundary projection: no radial crossing found")
    while hi - lo > BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def boundary_point(
    profile: RadialProfile, z: Sequence[complex], project: bool = True
) -> BoundaryPoint:
    """Validate (and by default radially project) a point onto the boundary."""
    zv = np.asarray(z, dtype=complex).reshape(-1)
    if zv.size != profile.ncoords:
        raise PreconditionError(
            f"boundary_point: expected {profile.ncoords} coordinates, got {zv.size}"
        )
    if not np.all(np.isfinite(zv.view(float))):
        raise PreconditionError("boundary_point: coordinates must be finite")
    if not np.any(np.abs(zv) > 0.0):
        raise PreconditionError("boundary_point: z = 0 cannot be projected")
    s = np.abs(zv) ** 2
    val = profile.rho_hat(s)
    if abs(val) > ON_BOUNDARY_TOL:
        if not project:
            raise PreconditionError(
                f"boundary_point: |rho(z)| = {abs(val):.3e} > {ON_BOUNDARY_TOL:g}"
            )
        zv = zv * _project_scale(profile, s)
        val = profile.rho_hat(np.abs(zv) ** 2)
        if abs(val) > ON_BOUNDARY_TOL:
            raise PreconditionError(
                f"boundary_point: projection left |rho| = {abs(val):.3e}"
            )
    point = BoundaryPoint(z=zv)
    if profile.kind != "sphere" and profile.ncoords > 1 and float(np.min(point.r)) <= MIN_COORD:
        raise PreconditionError(
            "boundary_point: coordinates must stay away from the axes "
            f"(min |z_i| = {float(np.min(point.r)):.3e} <= {MIN_COORD:g})"
        )
    if profile.kind == "custom" and profile.m >= 1:
        if not levi_min_eig(profile, point) > 0.0:
            raise PreconditionError(
                "boundary_point: custom profile fails strict pseudoconvexity here"
            )
    return point


@dataclass(frozen=True)
class GeometryJet:
    """First-order boundary data at a point: gradient, P vector, t0, ||P||^2."""

    m: int
    d_rho: np.ndarray
    P: np.ndarray
    t0: float
    P_norm_sq: float


def geometry_jet(profile: RadialProfile, point: BoundaryPoint) -> GeometryJet:
    """Assemble d'rho_i = rho_hat_i conj(z_i), P_i = rho_hat_i z_i, t0, ||P||^2."""
    s = point.r**2
    g = np.asarray(profile.grad_hat(s), dtype=float)
    d_rho = g * np.conj(point.z)
    p_vec = g * point.z
    denom = float(g @ s)  # d'rho . z, real by construction
    if abs(denom) < 1e-12:
        raise PreconditionError(
            f"geometry_jet: degenerate point, d'rho(z).z = {denom:.3e}"
        )
    return GeometryJet(
        m=profile.m,
        d_rho=d_rho,
        P=p_vec,
        t0=1.0 / denom,
        P_norm_sq=float(g * g @ s),
    )


def beta(jet: GeometryJet, u: Sequence[complex]) -> complex:
    """beta(u) = t0 (d'rho(z) . u); linear in u, 1 at u = z, 0 tangentially."""
    uv = np.asarray(u, dtype=complex).reshape(-1)
    if uv.size != jet.d_rho.size:
        raise PreconditionError(
            f"beta: expected {jet.d_rho.size} components, got {uv.size}"
        )
    return complex(jet.t0 * (jet.d_rho @ uv))


def limit_geometry(jet: GeometryJet) -> LimitGeometry:
    """Bridge to the limit formulas; beta(P) is recomputed independently so
    the LimitGeometry invariant cross-checks t0 ||P||^2."""
    return LimitGeometry(
        m=jet.m,
        t0=complex(jet.t0),
        P_norm_sq=jet.P_norm_sq,
        beta_of_P=beta(jet, jet.P),
    )


def levi_min_eig(profile: RadialProfile, point: BoundaryPoint) -> float:
    """Minimum eigenvalue of the complex Hessian of rho restricted to the
    holomorphic tangent space {v : d'rho . v = 0}.

    For m = 0 the tangent space is trivial; returns +inf.
    """
    if profile.m == 0:
        return math.inf
    s = point.r**2
    g = np.asarray(profile.grad_hat(s), dtype=float)
    h = np.asarray(profile.hess_hat(s), dtype=float)
    # d^2 rho / dz_j dconj(z_k) = hess_jk conj(z_j) z_k + delta_jk grad_j
    hc = h * np.outer(np.conj(point.z), point.z) + np.diag(g)
    p_vec = g * point.z
    # {v : d'rho.v = 0} is the Hermitian orthocomplement of P
    basis = scipy.linalg.null_space(np.conj(p_vec)[None, :])
    restricted = basis.conj().T @ hc @ basis
    return float(np.linalg.eigvalsh(restricted).min())
