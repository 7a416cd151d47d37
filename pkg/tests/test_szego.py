"""Monomial enumeration, norm tables, and reproducing-kernel jets."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rzl import geometry, szego
from rzl.errors import PreconditionError, SizeError

# ---------------------------------------------------------------------------
# enumeration


@pytest.mark.parametrize("m", [0, 1, 2, 3])
def test_index_count_identity(m: int) -> None:
    for N in range(0, 31, 6):
        idx = szego.enumerate_indices(m, N)
        assert idx.shape == (math.comb(N + m + 1, m + 1), m + 1)


def test_graded_lex_order() -> None:
    idx = szego.enumerate_indices(1, 2)
    expected = [(0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0)]
    assert [tuple(row) for row in idx] == expected


@given(m=st.integers(0, 3), n1=st.integers(0, 8), n2=st.integers(0, 8))
@settings(max_examples=40, deadline=None)
def test_enumeration_prefix_property(m: int, n1: int, n2: int) -> None:
    # the ordering is graded, so a lower-degree enumeration is a prefix of a
    # higher-degree one; this is what makes NormTable.truncated a plain slice
    lo, hi = min(n1, n2), max(n1, n2)
    a = szego.enumerate_indices(m, lo)
    b = szego.enumerate_indices(m, hi)
    assert np.array_equal(a, b[: len(a)])


def test_enumeration_size_guard() -> None:
    with pytest.raises(SizeError):
        szego.enumerate_indices(3, 150)  # ~2.3e7 indices


# ---------------------------------------------------------------------------
# norms


def test_circle_norms_are_unity(circle_table_200) -> None:
    assert np.all(circle_table_200.norms == 1.0)
    assert circle_table_200.measure_tag == "dtheta/2pi"


def test_sphere_norm_ratios(sphere_table_200) -> None:
    t = sphere_table_200
    n00 = t.norm_of((0, 0))
    assert n00 == pytest.approx(2.0 * math.pi**2, rel=1e-14)
    assert t.norm_of((1, 0)) / n00 == pytest.approx(0.5, rel=1e-13)
    assert t.norm_of((1, 1)) / n00 == pytest.approx(1.0 / 6.0, rel=1e-13)
    # factorial closed form holds across the table
    assert t.norm_of((3, 2)) / n00 == pytest.approx(
        math.factorial(3) * math.factorial(2) / math.factorial(6), rel=1e-12
    )


def test_quadrature_matches_closed_circle() -> None:
    prof = geometry.circle()
    q = szego.compute_norms(prof, 25, method="quadrature")
    assert np.max(np.abs(q.norms - 1.0)) <= 1e-10


def test_quadrature_matches_closed_sphere_to_degree_40() -> None:
    prof = geometry.sphere(2)
    closed = szego.compute_norms(prof, 40)
    quad = szego.compute_norms(prof, 40, method="quadrature")
    rel = np.max(np.abs(quad.norms - closed.norms) / closed.norms)
    assert rel <= 1e-10
    assert "gauss-legendre" in quad.measure_tag


def test_quadrature_order_doubles_until_converged() -> None:
    # a deliberately coarse starting order must be escalated, and the tag
    # records the order actually used (a power-of-two multiple of the request)
    prof = geometry.ellipsoid([2.0, 1.0])
    tab = szego.compute_norms(prof, 10, quad_order=8)
    order = int(tab.measure_tag.rsplit(" ", 1)[-1])
    assert order >= 16 and order % 8 == 0
    ref = szego.compute_norms(prof, 10, quad_order=256)
    assert np.max(np.abs(tab.norms - ref.norms) / ref.norms) <= 1e-8


def test_quadrature_rejected_for_higher_codim() -> None:
    with pytest.raises(PreconditionError):
        szego.compute_norms(geometry.ellipsoid([1.0, 1.0, 1.0]), 4)
    # sphere in C^3 still fine via closed forms
    t = szego.compute_norms(geometry.sphere(3), 4)
    assert t.m == 2


def test_norm_table_truncation(sphere_table_200) -> None:
    sub = sphere_table_200.truncated(7)
    assert sub.N == 7
    assert np.all(sub.degrees() <= 7)
    assert np.array_equal(sub.indices, szego.enumerate_indices(1, 7))
    assert np.array_equal(sub.norms, sphere_table_200.norms[: len(sub.indices)])
    with pytest.raises(PreconditionError):
        sphere_table_200.truncated(201)


def test_norm_table_validation() -> None:
    from rzl.errors import AccuracyError

    idx = szego.enumerate_indices(0, 2)
    # a nonpositive norm is a numeric defect (exit 3), misalignment a usage one
    with pytest.raises(AccuracyError):
        szego.NormTable(m=0, N=2, indices=idx, norms=np.array([1.0, -1.0, 1.0]), measure_tag="x")
    with pytest.raises(PreconditionError):
        szego.NormTable(m=0, N=2, indices=idx, norms=np.ones(2), measure_tag="x")


def test_norm_table_round_trip(tmp_path, sphere_table_200) -> None:
    tab = sphere_table_200.truncated(17)
    path = str(tmp_path / "t.norms")
    szego.save_norm_table(tab, path)
    back = szego.load_norm_table(path)
    assert back.m == tab.m and back.N == tab.N
    assert np.array_equal(back.indices, tab.indices)
    assert np.array_equal(back.norms, tab.norms)  # bit-exact
    assert back.measure_tag == tab.measure_tag
    # and the second generation is byte-identical
    assert szego.dump_norm_table(back) == szego.dump_norm_table(tab)


def test_norm_table_text_format(sphere_table_200) -> None:
    text = szego.dump_norm_table(sphere_table_200.truncated(3))
    lines = text.splitlines()
    assert lines[0] == "#m=1"
    assert lines[1] == "#N=3"
    assert lines[2].startswith("#measure=")
    assert lines[3] == "#order=graded-lex"
    head, tail = lines[4].split("\t")
    assert head == "0,0"
    float(tail)  # parses as a decimal


def test_parse_norm_table_rejects_reordered_lines(sphere_table_200) -> None:
    text = szego.dump_norm_table(sphere_table_200.truncated(3))
    lines = text.splitlines()
    lines[4], lines[5] = lines[5], lines[4]
    with pytest.raises(PreconditionError):
        szego.parse_norm_table("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# kernel jets


def test_circle_kernel_closed_forms(circle_table_200) -> None:
    for N in (10, 55, 200):
        jet = szego.kernel_jet(circle_table_200.truncated(N), [1.0], [1.0])
        assert jet.S.real == pytest.approx(N + 1, rel=1e-13)
        assert jet.dS_w[0].real == pytest.approx(N * (N + 1) / 2, rel=1e-13)
        assert jet.dS_z[0].real == pytest.approx(N * (N + 1) / 2, rel=1e-13)
        assert jet.d2S[0, 0].real == pytest.approx(N * (N + 1) * (2 * N + 1) / 6, rel=1e-13)


def test_sphere_kernel_direct_sum_oracle() -> None:
    prof = geometry.sphere(2)
    qtab = szego.compute_norms(prof, 4, method="quadrature")
    z = np.array([1.0, 0.0])
    got = szego.kernel_value(qtab, z, z)
    ref = sum(1.0 / qtab.norm_of((j, 0)) for j in range(5))
    assert got.real == pytest.approx(ref, rel=1e-9)
    assert abs(got.imag) <= 1e-15 * ref


def test_conjugate_symmetry(sphere_table_200) -> None:
    # coordinates stay inside the unit polydisc so the alternating sum does
    # not cancel through its own roundoff floor
    tab = sphere_table_200.truncated(12)
    rng = np.random.default_rng(11)
    for _ in range(50):
        z = rng.uniform(0.1, 0.9, size=2) * np.exp(2j * np.pi * rng.uniform(size=2))
        w = rng.uniform(0.1, 0.9, size=2) * np.exp(2j * np.pi * rng.uniform(size=2))
        a = szego.kernel_jet(tab, z, w)
        b = szego.kernel_jet(tab, w, z)
        assert a.S == pytest.approx(b.S.conjugate(), rel=1e-12, abs=1e-13)
        assert np.max(np.abs(a.dS_z - np.conj(b.dS_w))) <= 1e-12 * (np.max(np.abs(a.dS_z)) + 1)
        assert np.max(np.abs(a.d2S - np.conj(b.d2S.T))) <= 1e-12 * (np.max(np.abs(a.d2S)) + 1)


def test_jet_derivatives_match_finite_differences(sphere_table_200) -> None:
    # dS_w differentiates in conj(w), dS_z in z, d2S mixes both
    tab = sphere_table_200.truncated(9)
    rng = np.random.default_rng(5)
    for _ in range(20):
        z = rng.uniform(0.1, 0.9, size=2) * np.exp(2j * np.pi * rng.uniform(size=2))
        w = rng.uniform(0.1, 0.9, size=2) * np.exp(2j * np.pi * rng.uniform(size=2))
        jet = szego.kernel_jet(tab, z, w)
        h = 1e-6 * max(1.0, float(np.max(np.abs(z))), float(np.max(np.abs(w))))
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            # anti-holomorphic in w: a real step in w_j moves conj(w_j) by h
            fd = (szego.kernel_value(tab, z, w + e) - szego.kernel_value(tab, z, w - e)) / (2 * h)
            assert abs(fd - jet.dS_w[j]) <= 1e-6 * max(abs(jet.dS_w[j]), 1.0)
            fd = (szego.kernel_value(tab, z + e, w) - szego.kernel_value(tab, z - e, w)) / (2 * h)
            assert abs(fd - jet.dS_z[j]) <= 1e-6 * max(abs(jet.dS_z[j]), 1.0)
            # an imaginary step isolates the anti-holomorphic dependence
            fd = (szego.kernel_value(tab, z, w + 1j * e) - szego.kernel_value(tab, z, w - 1j * e)) / (2 * h)
            assert abs(fd - (-1j) * jet.dS_w[j]) <= 1e-6 * max(abs(jet.dS_w[j]), 1.0)
        # the mixed difference divides by 4h^2, so its roundoff floor is
        # eps*|S|/(4h^2); a wider step keeps the check meaningful
        h2 = 3e-5 * max(1.0, float(np.max(np.abs(z))), float(np.max(np.abs(w))))
        for j in range(2):
            for k in range(2):
                ez, ew = np.zeros(2), np.zeros(2)
                ez[j] = h2
                ew[k] = h2
                fd = (
                    szego.kernel_value(tab, z + ez, w + ew)
                    - szego.kernel_value(tab, z + ez, w - ew)
                    - szego.kernel_value(tab, z - ez, w + ew)
                    + szego.kernel_value(tab, z - ez, w - ew)
                ) / (4 * h2 * h2)
                assert abs(fd - jet.d2S[j, k]) <= 1e-6 * max(abs(jet.d2S[j, k]), 1.0)


def test_diagonal_positive_and_increasing(sphere_table_200) -> None:
    z = np.array([0.8, 0.6j])
    prev = 0.0
    for N in (1, 2, 5, 11, 23):
        val = szego.kernel_value(sphere_table_200.truncated(N), z, z).real
        assert val > prev
        prev = val


def test_measure_scaling_exact(sphere_table_200) -> None:
    tab = sphere_table_200.truncated(8)
    # scaling by a power of two commutes with every rounding step, so the
    # comparison can demand bit-exact equality
    scaled = szego.NormTable(
        m=tab.m, N=tab.N, indices=tab.indices, norms=2.0 * tab.norms, measure_tag=tab.measure_tag
    )
    z = np.array([0.3 + 1.1j, -0.4])
    w = np.array([0.9, 0.2 - 0.7j])
    a = szego.kernel_jet(tab, z, w)
    b = szego.kernel_jet(scaled, z, w)
    assert b.S == a.S / 2.0
    assert np.array_equal(b.dS_w, a.dS_w / 2.0)
    assert np.array_equal(b.dS_z, a.dS_z / 2.0)
    assert np.array_equal(b.d2S, a.d2S / 2.0)


@given(t0=st.floats(-math.pi, math.pi), t1=st.floats(-math.pi, math.pi))
@settings(max_examples=30, deadline=None)
def test_torus_invariant_diagonal(sphere_table_200, t0: float, t1: float) -> None:
    tab = sphere_table_200.truncated(10)
    z = np.array([0.8, 0.6j])
    w = np.exp(1j * np.array([t0, t1]))
    a = szego.kernel_value(tab, z, z).real
    b = szego.kernel_value(tab, w * z, w * z).real
    assert b == pytest.approx(a, rel=1e-12)


def test_log_form_agrees_with_direct_path() -> None:
    tab = szego.compute_norms(geometry.circle(), 520)
    z = np.array([1.6 + 0.2j])
    w = np.array([1.55 - 0.1j])
    d = szego._jet_direct(tab, z, w)
    l = szego._jet_log_form(tab, z, w)
    assert abs(l.S - d.S) <= 1e-10 * abs(d.S)
    assert np.allclose(l.dS_w, d.dS_w, rtol=1e-10)
    assert np.allclose(l.dS_z, d.dS_z, rtol=1e-10)
    assert np.allclose(l.d2S, d.d2S, rtol=1e-10)
    # the dispatcher must route this configuration through the log form
    auto = szego.kernel_jet(tab, z, w)
    assert auto.S == l.S


def test_log_form_handles_zero_coordinates() -> None:
    tab = szego.compute_norms(geometry.sphere(2), 520)
    z = np.array([1.7, 0.0])
    jet = szego.kernel_jet(tab, z, z)
    assert np.isfinite(jet.S.real) and jet.S.real > 0.0
    direct = szego._jet_direct(tab, z, z)
    assert jet.S.real == pytest.approx(direct.S.real, rel=1e-10)


# ---------------------------------------------------------------------------
# scaled ratio and the empirical measure constant


def test_scaled_ratio_identity_at_zero_direction(circle_table_200) -> None:
    r = szego.scaled_ratio(circle_table_200, [1.0], [0.0], [0.0], 150)
    assert r == 1.0


def test_scaled_ratio_circle_example(circle_table_200) -> None:
    r = szego.scaled_ratio(circle_table_200, [1.0], [0.5], [0.5], 200)
    assert abs(r - (math.e - 1.0)) <= 3.0 / 200


def test_scaled_ratio_sphere_example(sphere_table_200) -> None:
    r = szego.scaled_ratio(sphere_table_200, [1.0, 0.0], [1.0, 0.0], [0.0, 0.0], 100)
    assert abs(r - 2.0) <= 5.0 / 100


def test_scaled_ratio_degree_guard(circle_table_200) -> None:
    with pytest.raises(PreconditionError):
        szego.scaled_ratio(circle_table_200, [1.0], [0.5], [0.5], 201)


def test_empirical_constant_circle(circle_table_200) -> None:
    c = szego.empirical_constant(circle_table_200, [1.0])
    assert c.N_used == 200
    # S_N(1,1) = N + 1, so the estimate is 1 + 1/N
    assert c.C_hat == pytest.approx(1.0 + 1.0 / 200, rel=1e-13)


def test_empirical_constant_self_consistent(sphere_table_200) -> None:
    a = szego.empirical_constant(sphere_table_200.truncated(100), [1.0, 0.0])
    b = szego.empirical_constant(sphere_table_200, [1.0, 0.0])
    assert abs(a.C_hat - b.C_hat) <= 0.02 * b.C_hat


def test_empirical_constant_needs_degree_50(sphere_table_200) -> None:
    with pytest.raises(PreconditionError):
        szego.empirical_constant(sphere_table_200.truncated(49), [1.0, 0.0])
