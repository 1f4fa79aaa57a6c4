import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from l2tor.closed_forms import HyperbolicPiece, jsj_torsion, seifert_torsion, SeifertData, torus_knot_torsion
from l2tor.engines import fk_det_abelian
from l2tor.groups import Free, FreeAbelian
from l2tor.properties import (
    SuiteReport,
    fk_engine_case,
    group_kernel_case,
    random_gap_operator,
    random_matrix,
)
from l2tor.representation import (
    conjugate,
    diagonal_representation,
    inv2,
    irreducibility_test,
    random_sl2,
    validate,
)
from l2tor.ring import vn_trace

seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)
nonzero = st.complex_numbers(min_magnitude=0.1, max_magnitude=10, allow_nan=False, allow_infinity=False)
Z2 = FreeAbelian(2)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_group_kernel_invariants(seed):
    rep = SuiteReport("group-kernel")
    group_kernel_case(np.random.default_rng(seed), rep, seed % 7)
    assert rep.passed, rep.failures


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_fk_engine_invariants(seed):
    rep = SuiteReport("fk-engines")
    fk_engine_case(np.random.default_rng(seed), rep, seed % 7, quotient_check=False)
    assert rep.passed, rep.failures


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_matrix_algebra_laws(seed):
    rng = np.random.default_rng(seed)
    group = Free(2) if seed % 2 else Z2
    a = random_matrix(rng, group, 2, 3)
    b = random_matrix(rng, group, 2, 3)
    c = random_matrix(rng, group, 3, 2)
    assert ((a + b) @ c).allclose(a @ c + b @ c, 1e-12)
    assert (a @ c).adjoint().allclose(c.adjoint() @ a.adjoint(), 1e-12)
    assert abs(vn_trace(a @ c) - vn_trace(c @ a)) <= 1e-10 * max(1.0, abs(vn_trace(a @ c)))


@settings(max_examples=25, deadline=None)
@given(seeds, st.floats(min_value=0.1, max_value=10))
def test_abelian_log_det_scales(seed, s):
    op = random_gap_operator(np.random.default_rng(seed), 1, 2)
    a = fk_det_abelian(op).log_det
    b = fk_det_abelian(op.scale(s)).log_det
    assert math.isclose(b - a, 2 * math.log(s), abs_tol=1e-9)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_conjugation_round_trip(seed):
    rng = np.random.default_rng(seed)
    rep = diagonal_representation(Z2, [complex(*rng.uniform(0.5, 2, 2)), complex(*rng.uniform(0.5, 2, 2))])
    g = random_sl2(rng, max_cond=30)
    back = conjugate(conjugate(rep, g, tol=1e-6), inv2(g), tol=1e-6)
    for x, y in zip(rep.images, back.images):
        assert np.allclose(x, y, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(nonzero, nonzero, st.floats(min_value=1e-12, max_value=1e-3))
def test_validation_is_monotone_in_tolerance(a, b, tol):
    rep = diagonal_representation(Z2, [a, b])
    if validate(rep, tol).accepted:
        assert validate(rep, 10 * tol).accepted
    assert not irreducibility_test(rep)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(min_value=-5, max_value=5), min_size=1, max_size=6))
def test_jsj_sum_is_additive(values):
    pieces = [HyperbolicPiece(v) for v in values]
    assert math.isclose(jsj_torsion(pieces), math.fsum(values), abs_tol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([(2, 3), (2, 5), (3, 4), (3, 5), (4, 5), (2, 9)]), nonzero)
def test_torus_knot_as_seifert_and_inversion_symmetry(pq, lam):
    p, q = pq
    val = torus_knot_torsion(p, q, lam)
    assert math.isclose(val, torus_knot_torsion(p, q, 1 / lam), abs_tol=1e-12)
    lam_big = lam if abs(lam) >= 1 else 1 / lam
    d = SeifertData(0, 1, ((p, 1), (q, 1)), fiber_eigenvalue=lam_big)
    assert math.isclose(seifert_torsion(d), val, abs_tol=1e-12)
