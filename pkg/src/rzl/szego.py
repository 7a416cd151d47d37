"""Exact finite-degree reproducing kernels.

Multi-index enumeration in graded lexicographic order, monomial norms by
closed form (circle, sphere) or boundary-curve quadrature (m = 1 profiles),
and evaluation of the degree-N kernel S_N with first and mixed second
derivatives via incremental power tables.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import AccuracyError, PreconditionError, QuadratureError, SizeError
from .geometry import RadialProfile, _project_scale

MAX_INDEX_COUNT = 10**7

# Kernel sums switch to log-magnitude/phase evaluation past this point.
_LOG_FORM_RADIUS = 1.5
_LOG_FORM_DEGREE = 500

# exp of this is 0.0 in double; used to express "dropped term" in log form.
_LOG_ZERO = -800.0


def _count_indices(m: int, n: int) -> int:
    return math.comb(n + m + 1, m + 1)


def enumerate_indices(m: int, N: int) -> np.ndarray:
    """All multi-indices J with |J| <= N, graded lexicographic, as an
    (count, m+1) int array. Graded-lex: ascending total degree, then
    ascending lexicographic within a degree, so a level-N table is a prefix
    of every deeper table."""
    if m < 0 or N < 0:
        raise PreconditionError(f"enumerate_indices: need m >= 0 and N >= 0, got ({m}, {N})")
    count = _count_indices(m, N)
    if count > MAX_INDEX_COUNT:
        raise SizeError(
            f"enumerate_indices: {count} indices exceeds the {MAX_INDEX_COUNT} bound"
        )

    def compositions(total: int, parts: int) -> list[tuple[int, ...]]:
        if parts == 1:
            return [(total,)]
        return [
            (head, *rest)
            for head in range(total + 1)
            for rest in compositions(total - head, parts - 1)
        ]

    rows = [idx for d in range(N + 1) for idx in compositions(d, m + 1)]
    return np.array(rows, dtype=np.int64).reshape(count, m + 1)


@dataclass(frozen=True)
class NormTable:
    """Monomial norms n_J for |J| <= N, aligned with enumerate_indices(m, N).

    The table is the entire inner product: torus invariance makes distinct
    monomials orthogonal, so off-diagonal Gram entries vanish identically.
    """

    m: int
    N: int
    indices: np.ndarray
    norms: np.ndarray
    measure_tag: str

    def __post_init__(self) -> None:
        if self.indices.shape != (len(self.norms), self.m + 1):
            raise PreconditionError("NormTable: indices and norms are misaligned")
        if not np.all(np.isfinite(self.norms)) or not np.all(self.norms > 0.0):
            raise AccuracyError("NormTable: norms must be finite and positive")

    @property
    def total_mass(self) -> float:
        return float(self.norms[0])

    def degrees(self) -> np.ndarray:
        return self.indices.sum(axis=1)

    def truncated(self, N: int) -> "NormTable":
        """Prefix view of the table at a lower degree (graded order)."""
        if N > self.N:
            raise PreconditionError(f"truncated: requested N={N} above table N={self.N}")
        if N == self.N:
            return self
        cut = int(np.searchsorted(self.degrees(), N, side="right"))
        return NormTable(
            m=self.m,
            N=N,
            indices=self.indices[:cut],
            norms=self.norms[:cut],
            measure_tag=self.measure_tag,
        )

    def norm_of(self, J: tuple[int, ...]) -> float:
        Jv = np.asarray(J, dtype=np.int64)
        hit = np.flatnonzero(np.all(self.indices == Jv, axis=1))
        if hit.size != 1:
            raise PreconditionError(f"norm_of: index {J!r} not in table")
        return float(self.norms[hit[0]])


def _closed_circle_norms(N: int) -> np.ndarray:
    # measure dtheta/2pi on |z| = 1: every monomial has unit norm
    return np.ones(N + 1)


def _closed_sphere_norms(idx: np.ndarray, m: int) -> np.ndarray:
    # surface measure of the unit sphere: n_J = 2 pi^{m+1} J! / (|J| + m)!
    d = idx.sum(axis=1)
    log_n = gammaln(idx + 1.0).sum(axis=1) - gammaln(d + m + 1.0)
    return 2.0 * math.pi ** (m + 1) * np.exp(log_n)


def _curve_nodes(profile: RadialProfile, order: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes on the boundary curve in modulus space (m = 1).

    Parametrize r(phi) = t(phi) (cos phi, sin phi) on (0, pi/2), with t solved
    by bisection; returns (r0, r1, w) where w includes the arc-length factor
    dl = sqrt(t'^2 + t^2) dphi.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    phi = 0.25 * math.pi * (x + 1.0)
    w = w * 0.25 * math.pi
    c, s = np.cos(phi), np.sin(phi)
    direction = np.stack([c * c, s * s], axis=1)
    t = np.array([_project_scale(profile, direction[k]) for k in range(order)])
    sq = (t * t)[:, None] * direction
    grads = np.stack([np.asarray(profile.grad_hat(sq[k]), dtype=float) for k in range(order)])
    g0, g1 = grads[:, 0], grads[:, 1]
    # implicit differentiation of rho_hat(t^2 c^2, t^2 s^2) = 0 in phi
    t_prime = t * c * s * (g0 - g1) / (g0 * c * c + g1 * s * s)
    arc = np.sqrt(t_prime**2 + t * t)
    return t * c, t * s, w * arc


def _quadrature_norms_m1(profile: RadialProfile, idx: np.ndarray, N: int, order: int) -> np.ndarray:
    r0, r1, w = _curve_nodes(profile, order)
    powers = np.arange(N + 1) * 2 + 1
    p0 = (r0[:, None] ** powers) * w[:, None]
    p1 = r1[:, None] ** powers
    table = (2.0 * math.pi) ** 2 * (p0.T @ p1)
    return table[idx[:, 0], idx[:, 1]]


def _quadrature_norms(profile: RadialProfile, idx: np.ndarray, N: int, order: int) -> np.ndarray:
    if profile.m == 0:
        # boundary circle of radius r0 with normalized arc measure dtheta/2pi
        r0 = _project_scale(profile, np.ones(1))
        return r0 ** (2.0 * idx[:, 0].astype(float))
    if profile.m == 1:
        return _quadrature_norms_m1(profile, idx, N, order)
    raise PreconditionError(
        "compute_norms: quadrature supports m <= 1; higher m only via sphere closed form"
    )


def compute_norms(
    profile: RadialProfile, N: int, quad_order: int = 256, method: str = "auto"
) -> NormTable:
    """Build the norm table for all |J| <= N.

    method: 'auto' uses closed forms for circle and sphere and quadrature
    otherwise; 'closed' and 'quadrature' force a path. The quadrature result
    must be self-convergent: doubling the order may change no norm by more
    than 1e-9 relative, otherwise the order is doubled again (up to 8x) and
    finally rejected.
    """
    if N < 0:
        raise PreconditionError(f"compute_norms: N must be >= 0, got {N}")
    if quad_order < 4:
        raise PreconditionError(f"compute_norms: quad_order must be >= 4, got {quad_order}")
    if method not in ("auto", "closed", "quadrature"):
        raise PreconditionError(f"compute_norms: unknown method {method!r}")
    idx = enumerate_indices(profile.m, N)

    if method != "quadrature" and profile.kind == "circle":
        return NormTable(
            m=0, N=N, indices=idx, norms=_closed_circle_norms(N), measure_tag="dtheta/2pi"
        )
    if method != "quadrature" and profile.kind == "sphere":
        return NormTable(
            m=profile.m,
            N=N,
            indices=idx,
            norms=_closed_sphere_norms(idx, profile.m),
            measure_tag="sphere surface measure",
        )
    if method == "closed":
        raise PreconditionError(f"compute_norms: no closed form for kind {profile.kind!r}")

    order = int(quad_order)
    coarse = _quadrature_norms(profile, idx, N, order)
    for _ in range(4):
        fine = _quadrature_norms(profile, idx, N, 2 * order)
        if not (np.all(np.isfinite(fine)) and np.all(fine > 0.0)):
            raise QuadratureError("compute_norms: quadrature produced nonpositive norms")
        rel = np.max(np.abs(fine - coarse) / fine)
        if rel <= 1e-9:
            tag = "dtheta/2pi" if profile.m == 0 else "profile surface measure"
            return NormTable(
                m=profile.m,
                N=N,
                indices=idx,
                norms=fine,
                measure_tag=f"{tag}; gauss-legendre order {2 * order}",
            )
        order *= 2
        coarse = fine
    raise QuadratureError(
        f"compute_norms: quadrature not converged at order {order} (rel change {rel:.3e})"
    )


def save_norm_table(table: NormTable, path: str) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(dump_norm_table(table))


def dump_norm_table(table: NormTable) -> str:
    """Text format, one line per index: 'j0,...,jm<TAB>norm' with 17
    significant digits; bit-exact round trip."""
    out = io.StringIO()
    out.write(f"#m={table.m}\n")
    out.write(f"#N={table.N}\n")
    out.write(f"#measure={table.measure_tag}\n")
    out.write("#order=graded-lex\n")
    for row, val in zip(table.indices, table.norms):
        out.write(",".join(str(int(j)) for j in row))
        out.write(f"\t{val:.16e}\n")
    return out.getvalue()


def load_norm_table(path: str) -> NormTable:
    with open(path, "r", encoding="ascii") as fh:
        return parse_norm_table(fh.read())


def parse_norm_table(text: str) -> NormTable:
    header: dict[str, str] = {}
    rows: list[tuple[int, ...]] = []
    vals: list[float] = []
    for line in text.splitlines():
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            header[key] = value
            continue
        idx_part, _, val_part = line.partition("\t")
        rows.append(tuple(int(tok) for tok in idx_part.split(",")))
        vals.append(float(val_part))
    try:
        m = int(header["m"])
        n = int(header["N"])
        measure = header["measure"]
        order = header["order"]
    except KeyError as exc:
        raise PreconditionError(f"norm table: missing header {exc}") from exc
    if order != "graded-lex":
        raise PreconditionError(f"norm table: unsupported order {order!r}")
    idx = np.array(rows, dtype=np.int64).reshape(len(rows), m + 1)
    expected = enumerate_indices(m, n)
    if idx.shape != expected.shape or not np.array_equal(idx, expected):
        raise PreconditionError("norm table: indices are not complete graded-lex")
    return NormTable(m=m, N=n, indices=idx, norms=np.array(vals), measure_tag=measure)


@dataclass(frozen=True)
class KernelJet:
    """S_N(z, w) with its derivative data.

    dS_w[j] = d/dconj(w_j) S, dS_z[i] = d/dz_i S, and
    d2S[i, j] = d^2/(dz_i dconj(w_j)) S.
    """

    S: complex
    dS_w: np.ndarray
    dS_z: np.ndarray
    d2S: np.ndarray


def _as_coords(table: NormTable, v) -> np.ndarray:
    vv = np.asarray(v, dtype=complex).reshape(-1)
    if vv.size != table.m + 1:
        raise PreconditionError(f"kernel: expected {table.m + 1} coordinates, got {vv.size}")
    if not np.all(np.isfinite(vv.view(float))):
        raise PreconditionError("kernel: coordinates must be finite")
    return vv


def _use_log_form(table: NormTable, z: np.ndarray, w: np.ndarray) -> bool:
    big = max(float(np.max(np.abs(z))), float(np.max(np.abs(w))))
    return big > _LOG_FORM_RADIUS and table.N > _LOG_FORM_DEGREE


def _jet_direct(table: NormTable, z: np.ndarray, w: np.ndarray) -> KernelJet:
    mp1 = table.m + 1
    idx = table.indices
    inv_n = 1.0 / table.norms
    powers = np.arange(table.N + 1)
    zp = z[:, None] ** powers
    wp = np.conj(w)[:, None] ** powers

    z_at = [zp[i, idx[:, i]] for i in range(mp1)]
    w_at = [wp[i, idx[:, i]] for i in range(mp1)]
    z_dec = [zp[i, np.maximum(idx[:, i] - 1, 0)] for i in range(mp1)]
    w_dec = [wp[i, np.maximum(idx[:, i] - 1, 0)] for i in range(mp1)]

    def prod_except(factors: list[np.ndarray], skip: int) -> np.ndarray:
        out = None
        for i, f in enumerate(factors):
            if i == skip:
                continue
            out = f.copy() if out is None else out * f
        return out if out is not None else np.ones(idx.shape[0], dtype=complex)

    z_full = np.prod(np.stack(z_at), axis=0) if mp1 > 1 else z_at[0]
    w_full = np.prod(np.stack(w_at), axis=0) if mp1 > 1 else w_at[0]
    base = z_full * w_full * inv_n
    s_val = complex(base.sum())

    j_cols = [idx[:, i].astype(float) for i in range(mp1)]
    z_drop = [z_dec[i] * prod_except(z_at, i) for i in range(mp1)]
    w_drop = [w_dec[i] * prod_except(w_at, i) for i in range(mp1)]

    ds_w = np.empty(mp1, dtype=complex)
    ds_z = np.empty(mp1, dtype=complex)
    d2s = np.empty((mp1, mp1), dtype=complex)
    for j in range(mp1):
        ds_w[j] = (j_cols[j] * z_full * w_drop[j] * inv_n).sum()
        ds_z[j] = (j_cols[j] * z_drop[j] * w_full * inv_n).sum()
        for i in range(mp1):
            d2s[i, j] = (j_cols[i] * j_cols[j] * z_drop[i] * w_drop[j] * inv_n).sum()
    return KernelJet(S=s_val, dS_w=ds_w, dS_z=ds_z, d2S=d2s)


def _safe_log(v: np.ndarray) -> np.ndarray:
    out = np.full(v.shape, _LOG_ZERO, dtype=complex)
    nz = v != 0
    out[nz] = np.log(v[nz])
    return out


def _jet_log_form(table: NormTable, z: np.ndarray, w: np.ndarray) -> KernelJet:
    # log-magnitude/phase evaluation: term_J = exp(J.log z + J.conj(log w) - log n).
    # Vanishing coordinates are expressed as log = -800, whose exp is exactly 0.
    mp1 = table.m + 1
    idx = table.indices.astype(float)
    lz = _safe_log(z)
    lw = np.conj(_safe_log(w))
    expo = idx @ lz + idx @ lw - np.log(table.norms)
    s_val = complex(np.exp(expo).sum())

    ds_w = np.empty(mp1, dtype=complex)
    ds_z = np.empty(mp1, dtype=complex)
    d2s = np.empty((mp1, mp1), dtype=complex)
    cols = [idx[:, i] for i in range(mp1)]
    for j in range(mp1):
        e_w = np.where(cols[j] > 0, expo - lw[j], _LOG_ZERO)
        ds_w[j] = (cols[j] * np.exp(e_w)).sum()
        e_z = np.where(cols[j] > 0, expo - lz[j], _LOG_ZERO)
        ds_z[j] = (cols[j] * np.exp(e_z)).sum()
        for i in range(mp1):
            ok = (cols[i] > 0) & (cols[j] > 0)
            e_2 = np.where(ok, expo - lz[i] - lw[j], _LOG_ZERO)
            d2s[i, j] = (cols[i] * cols[j] * np.exp(e_2)).sum()
    return KernelJet(S=s_val, dS_w=ds_w, dS_z=ds_z, d2S=d2s)


def kernel_jet(table: NormTable, z, w) -> KernelJet:
    """Evaluate S_N(z, w) = sum z^J conj(w)^J / n_J and its first and mixed
    second derivatives in one pass over the index table."""
    zv = _as_coords(table, z)
    wv = _as_coords(table, w)
    if _use_log_form(table, zv, wv):
        return _jet_log_form(table, zv, wv)
    return _jet_direct(table, zv, wv)


def kernel_value(table: NormTable, z, w) -> complex:
    """S_N(z, w) alone (cheaper than a full jet)."""
    zv = _as_coords(table, z)
    wv = _as_coords(table, w)
    if _use_log_form(table, zv, wv):
        idx = table.indices.astype(float)
        expo = idx @ _safe_log(zv) + idx @ np.conj(_safe_log(wv)) - np.log(table.norms)
        return complex(np.exp(expo).sum())
    powers = np.arange(table.N + 1)
    zp = zv[:, None] ** powers
    wp = np.conj(wv)[:, None] ** powers
    term = table.norms.copy() ** -1.0
    for i in range(table.m + 1):
        term = term * zp[i, table.indices[:, i]] * wp[i, table.indices[:, i]]
    return complex(term.sum())


def scaled_ratio(table: NormTable, z, u, v, N: int) -> complex:
    """Constant-free kernel probe S_N(z + u/N, z + v/N) / S_N(z, z).

    As N grows this converges to F_m(beta(u) + conj(beta(v))) / F_m(0),
    eliminating the unknown measure constant.
    """
    if N < 1:
        raise PreconditionError(f"scaled_ratio: N must be >= 1, got {N}")
    sub = table.truncated(N)
    zv = _as_coords(sub, z)
    uv = _as_coords(sub, u)
    vv = _as_coords(sub, v)
    num = kernel_value(sub, zv + uv / N, zv + vv / N)
    den = kernel_value(sub, zv, zv).real
    return num / den


@dataclass(frozen=True)
class EmpiricalConstant:
    """S_N(z,z) / N^{m+1} at the table's top degree: the measure constant."""

    C_hat: float
    N_used: int


def empirical_constant(table: NormTable, z) -> EmpiricalConstant:
    if table.N < 50:
        raise PreconditionError(f"empirical_constant: table degree {table.N} < 50")
    val = kernel_value(table, z, z).real / float(table.N) ** (table.m + 1)
    if not val > 0.0:
        raise AccuracyError("empirical_constant: nonpositive estimate")
    return EmpiricalConstant(C_hat=val, N_used=table.N)
