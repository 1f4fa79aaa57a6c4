import math

import numpy as np
import pytest

from l2tor.closed_forms import (
    ClosedFormError,
    HyperbolicPiece,
    SeifertData,
    SeifertPiece,
    abelian_factorization_check,
    jsj_torsion,
    neumann_zagier_expansion,
    seifert_direct_torsion,
    seifert_torsion,
    torus_knot_torsion,
    torus_torsion,
    unitary_hyperbolic_torsion,
    untwisted_hyperbolic_torsion,
)
from l2tor.complexes import twist
from l2tor.fixtures import torus_diagonal, torus_knot_reducible
from l2tor.torsion import torsion

FIGURE_EIGHT_VOLUME = 2.0298832


def test_torus_value_and_cross_check():
    assert torus_torsion() == 0.0
    with pytest.raises(ClosedFormError):
        torus_torsion(infinite_quotient=False)
    for m, l in [(1.0, 1.0), (2.0, 0.3j), (1.5 + 1j, 4.0)]:
        base, rep = torus_diagonal(m, l)
        assert abs(torsion(twist(base, rep)).log_tau - torus_torsion()) <= 1e-6


def test_torus_knot_values():
    assert torus_knot_torsion(2, 3, 2.0) == pytest.approx(math.log(2) / 6, abs=1e-15)
    assert torus_knot_torsion(2, 3, 2.0) == pytest.approx(0.115525, abs=1e-6)
    assert torus_knot_torsion(3, 5, math.e) == pytest.approx(7 / 15, abs=1e-15)
    assert torus_knot_torsion(2, 7, np.exp(1.3j)) == 0.0
    # |lambda| and 1/|lambda| give the same value
    assert torus_knot_torsion(2, 5, 0.25) == pytest.approx(torus_knot_torsion(2, 5, 4.0), abs=1e-15)
    with pytest.raises(ClosedFormError):
        torus_knot_torsion(2, 4, 2.0)


@pytest.mark.parametrize("p,q,lam", [(2, 3, 2.0), (2, 5, 1.3 + 0.4j), (3, 5, 3.0)])
def test_torus_knot_closed_form_matches_complex(p, q, lam):
    base, rep = torus_knot_reducible(p, q, lam, offdiag=0.2)
    assert torsion(twist(base, rep)).log_tau == pytest.approx(torus_knot_torsion(p, q, lam), abs=1e-9)


def test_seifert_values():
    assert seifert_torsion(SeifertData(3, 2, ((2, 1), (3, 1)), irreducible=True)) == 0.0
    # annulus x S^1: exponent 0 + 0 + 2 + 0 - 2 = 0
    ann = SeifertData(0, 2, (), fiber_eigenvalue=5.0)
    assert ann.exponent() == 0 and seifert_torsion(ann) == 0.0
    assert seifert_torsion(SeifertData(1, 1, ((3, 2),), fiber_eigenvalue=np.exp(0.7j))) == 0.0
    d = SeifertData(1, 1, ((3, 2), (5, 1)), fiber_eigenvalue=2.0)
    assert d.exponent() == pytest.approx(-2 / 3 - 1 / 5 + 2 + 1 + 2 - 2)


@pytest.mark.parametrize("p,q", [(2, 3), (2, 5), (3, 5), (3, 7)])
def test_torus_knot_as_seifert_datum(p, q):
    lam = 1.9
    d = SeifertData(0, 1, ((p, 1), (q, 1)), fiber_eigenvalue=lam)
    assert seifert_torsion(d) == pytest.approx(torus_knot_torsion(p, q, lam), abs=1e-14)


def test_seifert_direct_matches_formula():
    for d, free in [
        (SeifertData(0, 1, ((2, 1), (3, 1)), fiber_eigenvalue=2.0), None),
        (SeifertData(1, 2, ((3, 2),), fiber_eigenvalue=1.5 + 0.5j), [1.2, 0.7j, 2.0, 1.0]),
        (SeifertData(2, 1, ((2, 1), (5, 3), (7, 2)), fiber_eigenvalue=3.0), None),
    ]:
        assert seifert_direct_torsion(d, free) == pytest.approx(seifert_torsion(d), abs=1e-9)


def test_seifert_data_validation():
    with pytest.raises(ClosedFormError):
        SeifertData(0, 1, ((4, 2),), fiber_eigenvalue=2.0)
    with pytest.raises(ClosedFormError):
        SeifertData(0, 1, ((0, 1),), fiber_eigenvalue=2.0)
    with pytest.raises(ClosedFormError):
        SeifertData(0, 1, (), fiber_eigenvalue=None)
    with pytest.raises(ClosedFormError):
        SeifertData(0, 1, (), fiber_eigenvalue=0.5)


def test_jsj_examples():
    s1 = SeifertPiece(SeifertData(0, 2, ((2, 1),), irreducible=True))
    s2 = SeifertPiece(SeifertData(1, 1, ((3, 1),), irreducible=True))
    assert jsj_torsion([s1, s2]) == 0.0
    assert jsj_torsion([HyperbolicPiece(-0.5), s1]) == -0.5
    assert jsj_torsion([HyperbolicPiece(-0.5), HyperbolicPiece(-0.25)]) == -0.75
    with pytest.raises(ClosedFormError, match="seifert_torsion"):
        jsj_torsion([SeifertPiece(SeifertData(0, 1, ((2, 1),), fiber_eigenvalue=2.0))])
    with pytest.raises(ClosedFormError):
        jsj_torsion([])


def test_hyperbolic_volume_values():
    assert unitary_hyperbolic_torsion(3 * math.pi) == pytest.approx(-1.0, abs=1e-15)
    assert unitary_hyperbolic_torsion(6 * math.pi) == pytest.approx(-2.0, abs=1e-15)
    assert unitary_hyperbolic_torsion(6 * math.pi) == pytest.approx(2 * untwisted_hyperbolic_torsion(6 * math.pi))
    assert unitary_hyperbolic_torsion(FIGURE_EIGHT_VOLUME) == pytest.approx(-0.2153772967861296, abs=1e-15)
    with pytest.raises(ClosedFormError):
        unitary_hyperbolic_torsion(0.0)


def test_neumann_zagier_examples():
    vol = FIGURE_EIGHT_VOLUME
    assert neumann_zagier_expansion(vol, [0.0, 0.0]).value == pytest.approx(-(11 / (12 * math.pi)) * vol)
    assert neumann_zagier_expansion(0.0, [24 / 11]).value == pytest.approx(1.0, abs=1e-15)
    assert neumann_zagier_expansion(12 * math.pi / 11, []).value == pytest.approx(-1.0, abs=1e-15)
    exp = neumann_zagier_expansion(1.0, [0.1, 0.3])
    assert exp.error_order == pytest.approx(0.09)
    with pytest.raises(ClosedFormError):
        neumann_zagier_expansion(1.0, [-0.1])


def test_abelian_factorization_check():
    assert abelian_factorization_check(1.0, {1.0: 1.0}, 1.0).residual == 0.0
    assert abelian_factorization_check(np.exp(0.3j), {1.0: 1.5}, 2.0).residual == pytest.approx(0.25)
    p, q, lam = 2, 3, 2.5
    e = 1 - 1 / p - 1 / q
    tau = math.exp(torus_knot_torsion(p, q, lam))
    chk = abelian_factorization_check(lam, {lam: lam ** e, 1 / lam: 1.0}, tau,
                                      tau_minus_phi_at={lam: 1.0, 1 / lam: lam ** e})
    assert chk.residual <= 1e-9 and chk.symmetry_residual <= 1e-12
    with pytest.raises(ClosedFormError):
        abelian_factorization_check(2.0, {2.0: 1.0}, 1.0)
