import math

import numpy as np
import pytest

from l2tor.complexes import torus_complex, twist
from l2tor.engines import (
    CERTIFIED,
    EXACT_QUADRATURE,
    HEURISTIC,
    GapNotCertified,
    QuadratureConfig,
    ResourceLimit,
    certify_gap,
    fk_det_abelian,
    fk_det_finite_quotient,
    fk_det_gap_series,
    quadrature_trace,
    spectrum_finite_quotient,
)
from l2tor.engines.abelian import mahler_batch, mahler_from_coefficients
from l2tor.groups import Free, FreeAbelian, cyclic_product_quotient
from l2tor.representation import diagonal_representation
from l2tor.ring import GroupRingMatrix

Z = FreeAbelian(1)
GOLDEN = math.log((3 + math.sqrt(5)) / 2)  # 0.9624236501192069


def laurent(coeffs, group=Z):
    terms = []
    for k, c in coeffs.items():
        terms.append(((1,) * k if k >= 0 else (-1,) * -k, c))
    return GroupRingMatrix.from_words(group, 1, 1, {(0, 0): terms})


def test_golden_mahler_measure():
    res = fk_det_abelian(laurent({0: 3.0, 1: 1.0, -1: 1.0}), QuadratureConfig(nodes=1024))
    assert res.log_det == pytest.approx(0.9624236501192069, abs=1e-12)
    assert res.certification == EXACT_QUADRATURE


@pytest.mark.parametrize("lam", [0.5, 2.0, -3.0, 0.25j, 1 - 1e-3, 1 + 1e-3])
def test_jensen_linear_factor(lam):
    res = fk_det_abelian(laurent({0: 1.0, 1: -lam}))
    assert res.log_det == pytest.approx(math.log(max(1.0, abs(lam))), abs=1e-10)


def test_scalar_multiple_of_identity():
    z2 = FreeAbelian(2)
    op = GroupRingMatrix.identity(z2, 3, block_size=2, scale=1.7)
    assert fk_det_abelian(op).log_det == pytest.approx(6 * math.log(1.7), abs=1e-13)


def test_symbol_zero_on_torus_is_flagged():
    res = fk_det_abelian(laurent({0: 2.0, 1: 1.0, -1: 1.0}))
    assert res.log_det == pytest.approx(0.0, abs=1e-7)
    assert "no spectral gap, determinant-class by abelian theory" in res.flags


def test_identically_singular_operator():
    z2 = FreeAbelian(2)
    op = GroupRingMatrix.from_words(z2, 2, 2, {(0, 0): [((1,), 1.0)], (0, 1): [((1,), 1.0)],
                                               (1, 0): [((2,), 1.0)], (1, 1): [((2,), 1.0)]})
    res = fk_det_abelian(op)
    assert res.zero_determinant and res.log_det == -math.inf


def test_non_square_uses_gram():
    a = GroupRingMatrix.from_words(Z, 2, 1, {(0, 0): [((), 1.0), ((1,), -2.0)], (1, 0): [((), 0.0)]})
    res = fk_det_abelian(a)
    assert res.log_det == pytest.approx(math.log(2.0), abs=1e-10)


def test_two_variable_quadrature():
    # 4 + z1 + 1/z1 + z2 + 1/z2: compare with a brute-force tensor grid
    z2 = FreeAbelian(2)
    op = GroupRingMatrix.from_words(z2, 1, 1, {(0, 0): [((), 4.5), ((1,), 1), ((-1,), 1), ((2,), 1),
                                                       ((-2,), 1)]})
    th = 2 * np.pi * np.arange(512) / 512
    brute = np.mean(np.log(4.5 + 2 * np.cos(th)[:, None] + 2 * np.cos(th)[None, :]))
    assert fk_det_abelian(op).log_det == pytest.approx(brute, abs=1e-12)


def test_mahler_from_coefficients_double_root():
    m, _, _ = mahler_from_coefficients(np.array([1.0, -2.0, 1.0]))  # (1 - z)^2
    assert abs(m) < 1e-12


def test_mahler_batch_matches_scalar_version():
    rng = np.random.default_rng(11)
    c = rng.standard_normal((200, 4)) + 1j * rng.standard_normal((200, 4))
    c[:50, 0] = 0
    c[50:80, 2:] = 0
    c[80] = 0
    c[81] = [1.0, -2.0, 1.0, 0.0]
    batch = mahler_batch(c)
    assert batch[80] == -math.inf
    for row, val in zip(c[81:], batch[81:]):
        assert val == pytest.approx(mahler_from_coefficients(row)[0], abs=1e-12)
    assert abs(batch[81]) < 1e-12


def test_quadrature_trace_matches_vn_trace():
    op = laurent({0: 3.0, 1: 1.0, -1: 1.0})
    assert quadrature_trace(op) == pytest.approx(3.0, abs=1e-14)


# ---------------------------------------------------------------------------
# series engine


def test_gap_certificate_examples():
    cert = certify_gap(GroupRingMatrix.identity(Z, 1, scale=2.0))
    lo, hi = cert.enclosure
    assert lo == pytest.approx(2.0, rel=1e-6) and hi == pytest.approx(2.0, rel=1e-6)
    lo, hi = certify_gap(laurent({0: 3.0, 1: 1.0, -1: 1.0})).enclosure
    assert 0 < lo <= 1.0 and hi >= 5.0
    assert certify_gap(laurent({0: 2.0, 1: 1.0, -1: 1.0})) is None


def test_series_scalar_identity_is_exact():
    res = fk_det_gap_series(GroupRingMatrix.identity(Z, 2, scale=3.0))
    assert res.log_det == pytest.approx(2 * math.log(3.0), abs=1e-14)
    assert res.error_bound <= 1e-12


def test_series_golden_within_bound():
    op = laurent({0: 3.0, 1: 1.0, -1: 1.0})
    res = fk_det_gap_series(op, target=1e-10)
    assert res.certification == CERTIFIED
    assert res.error_bound <= 1e-9
    assert abs(res.log_det - GOLDEN) <= res.error_bound
    assert abs(res.log_det - GOLDEN) <= 1e-8


def test_series_fixed_center():
    op = laurent({0: 3.0, 1: 1.0, -1: 1.0})
    res = fk_det_gap_series(op, center=3.0, max_terms=60)
    assert abs(res.log_det - GOLDEN) <= res.error_bound
    with pytest.raises(GapNotCertified):
        fk_det_gap_series(op, center=1.0)


def test_series_torus_laplacian_shifted():
    base = torus_complex()
    tc = twist(base, diagonal_representation(base.group, [np.exp(0.7j), np.exp(1.9j)]))
    op = tc.laplacian(1) + GroupRingMatrix.identity(base.group, 2, block_size=2, scale=0.5)
    ab = fk_det_abelian(op)
    se = fk_det_gap_series(op)
    assert abs(se.log_det - ab.log_det) <= 1e-6


def test_series_needs_gap():
    with pytest.raises(GapNotCertified):
        fk_det_gap_series(laurent({0: 2.0, 1: 1.0, -1: 1.0}))


def test_series_rejects_non_self_adjoint():
    with pytest.raises(Exception):
        fk_det_gap_series(laurent({0: 3.0, 1: 1.0}))


def test_series_resource_limit_names_truncation():
    f2 = Free(2)
    op = GroupRingMatrix.from_words(f2, 1, 1, {(0, 0): [((), 6.0), ((1,), 1.0), ((-1,), 1.0), ((2,), 1.0),
                                                       ((-2,), 1.0)]})
    with pytest.raises(ResourceLimit, match="k ="):
        fk_det_gap_series(op, max_terms=40, support_budget=500)


def test_series_over_free_group_sparse_backend():
    # 6 + x + 1/x over F_2 lives in the cyclic subgroup <x>: same value as over Z
    f2 = Free(2)
    op = GroupRingMatrix.from_words(f2, 1, 1, {(0, 0): [((), 6.0), ((1,), 1.0), ((-1,), 1.0)]})
    res = fk_det_gap_series(op)
    assert res.log_det == pytest.approx(math.log((6 + math.sqrt(32)) / 2), abs=1e-9)


def test_monotone_bounds_and_scaling():
    op = laurent({0: 3.0, 1: 1.0, -1: 1.0})
    bounds = [fk_det_gap_series(op, max_terms=k).error_bound for k in (4, 8, 16, 32)]
    assert bounds == sorted(bounds, reverse=True)
    s = 2.5
    a = fk_det_gap_series(op).log_det
    b = fk_det_gap_series(op.scale(s)).log_det
    assert b - a == pytest.approx(math.log(s), abs=1e-12)


# ---------------------------------------------------------------------------
# quotient engine


def test_quotient_golden_riemann_sum():
    q = cyclic_product_quotient(Z, [512])
    res = fk_det_finite_quotient(laurent({0: 3.0, 1: 1.0, -1: 1.0}), q)
    k = np.arange(512)
    assert res.log_det == pytest.approx(np.mean(np.log(3 + 2 * np.cos(2 * np.pi * k / 512))), abs=1e-12)
    assert abs(res.log_det - GOLDEN) <= 1e-6
    assert res.certification == HEURISTIC


def test_quotient_identity_is_zero():
    for n in (1, 7, 32):
        q = cyclic_product_quotient(Z, [n])
        assert fk_det_finite_quotient(GroupRingMatrix.identity(Z, 2), q).log_det == pytest.approx(0.0, abs=1e-14)


def test_quotient_kernel_detected_for_one_minus_z():
    vals = []
    for n in (16, 64, 256):
        res = fk_det_finite_quotient(laurent({0: 1.0, 1: -1.0}), cyclic_product_quotient(Z, [n]))
        assert res.diagnostics["kernelDim"] == 1
        vals.append(res.log_det)
    # restricted log det = log(n)/n -> 0
    assert vals[0] > vals[1] > vals[2] > 0
    assert vals[2] == pytest.approx(math.log(256) / 256, abs=1e-9)


def test_spectrum_examples():
    q8 = cyclic_product_quotient(Z, [8])
    ev = spectrum_finite_quotient(laurent({0: 3.0, 1: 1.0, -1: 1.0}), q8)
    expected = np.sort(3 + 2 * np.cos(2 * np.pi * np.arange(8) / 8))
    np.testing.assert_allclose(ev, expected, atol=1e-12)
    ev = spectrum_finite_quotient(GroupRingMatrix.identity(Z, 1, scale=2.0), q8)
    np.testing.assert_allclose(ev, 2.0)


def test_spectrum_torus_unitary_has_near_zero():
    base = torus_complex()
    w = np.exp(2j * np.pi * 5 / 32)
    lap = twist(base, diagonal_representation(base.group, [w, w])).laplacian(1)
    q = cyclic_product_quotient(base.group, [32, 32])
    ev = spectrum_finite_quotient(lap, q, 4)
    assert ev[0] >= -1e-12 and ev[0] <= 1e-10
