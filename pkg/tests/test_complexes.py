import numpy as np
import pytest

from l2tor.complexes import (
    ComplexError,
    CWDatum,
    add_isolated_vertices,
    check_chain_identity,
    circle_complex,
    cw_from_json,
    cw_to_json,
    mapping_torus_complex,
    presentation_complex,
    relative_complex,
    seifert_y_complex,
    torus_complex,
    torus_knot_complex,
    twist,
    untwisted,
)
from l2tor.groups import FreeAbelian
from l2tor.representation import Representation, diagonal_representation, random_sl2, trivial_representation
from l2tor.ring import GroupRingMatrix, vn_trace


def test_constructors_satisfy_chain_identity():
    for base in (torus_complex(), circle_complex(), torus_knot_complex(2, 3), torus_knot_complex(3, 5),
                 seifert_y_complex(3)):
        assert check_chain_identity(base) <= 1e-12


def test_torus_differentials():
    base = torus_complex()
    d1 = base.boundary(1)
    assert d1.shape == (1, 2) and d1.entry(0, 0).coefficient((1, 0))[0, 0] == -1
    assert base.boundary(3).shape == (1, 0)


def test_twisted_torus_knot_chain_identity():
    base = torus_knot_complex(2, 3)
    rng = np.random.default_rng(5)
    t = 1.7 * np.exp(0.2j)
    a = np.array([[t ** 3, 0.4], [0, t ** -3]])
    b = np.array([[t ** 2, 0.4 * (t ** 2 - t ** -2) / (t ** 3 - t ** -3)], [0, t ** -2]])
    tc = twist(base, Representation(base.group, (a, b)))
    assert tc.chain_residual() <= 1e-10
    del rng


def test_corrupted_boundary_has_positive_residual():
    base = torus_complex()
    bad = base.boundary(2) + GroupRingMatrix.from_words(base.group, 2, 1, {(0, 0): [((1,), 0.5)]})
    cx = CWDatum(base.group, base.ranks, (base.boundary(1), bad))
    assert check_chain_identity(cx) > 0.1


def test_laplacians_are_self_adjoint_with_nonnegative_trace():
    base = torus_knot_complex(2, 5)
    rng = np.random.default_rng(7)
    t = 1.4
    rep = Representation(base.group, (np.diag([t ** 5, t ** -5]), np.diag([t ** 2, t ** -2])))
    tc = twist(base, rep)
    for p in range(3):
        lap = tc.laplacian(p)
        assert lap.is_self_adjoint(0)
        tr = vn_trace(lap)
        assert abs(tr.imag) < 1e-12 and tr.real >= 0
    del rng


def test_trivial_twist_flattens_to_two_copies():
    base = torus_knot_complex(2, 3)
    tc = twist(base, trivial_representation(base.group))
    for p in (1, 2):
        flat = tc.differential(p).flatten()
        d = base.boundary(p)
        for i in range(d.rows):
            for j in range(d.cols):
                for s in range(2):
                    assert flat.entry(2 * i + s, 2 * j + s).allclose(d.entry(i, j))
                    assert not flat.entry(2 * i + s, 2 * j + 1 - s)


def test_circle_laplacian_symbol():
    base = circle_complex()
    lam = 1.5 + 0.5j
    tc = twist(base, diagonal_representation(base.group, [lam]))
    lap0 = tc.laplacian(0)
    theta = 0.37
    z = np.exp(1j * theta)
    sym = sum(blk * z ** g[0] for g, blk in lap0.entry(0, 0).terms.items())
    expected = np.diag([abs(1 - lam * z) ** 2, abs(1 - z / lam) ** 2])
    np.testing.assert_allclose(sym, expected, atol=1e-12)


def test_torus_laplacian_trace_is_parseval():
    base = torus_complex()
    rep = diagonal_representation(base.group, [2.0, 0.5j])
    tc = twist(base, rep)
    parseval = sum(float(np.sum(np.abs(b) ** 2)) for d in tc.differentials
                   for e in d.entries.values() for b in e.terms.values())
    assert vn_trace(tc.laplacian(1)).real == pytest.approx(parseval, rel=1e-12)


def test_zero_differentials_give_zero_laplacian():
    z = FreeAbelian(1)
    base = CWDatum(z, (1, 1), (GroupRingMatrix.zeros(z, 1, 1),))
    assert untwisted(base).laplacian(1).is_zero()


def test_isolated_vertices_and_relative_complex():
    tc = untwisted(torus_complex())
    bigger = add_isolated_vertices(tc, 2)
    assert bigger.ranks == (3, 2, 1)
    assert bigger.chain_residual() == 0
    rel = relative_complex(torus_complex(), {0: [0]})
    assert rel.ranks == (0, 2, 1)
    with pytest.raises(ComplexError):
        relative_complex(torus_complex(), {1: [0]})


def test_cw_json_round_trip():
    for base in (torus_complex(), torus_knot_complex(2, 3), seifert_y_complex(2)):
        back = cw_from_json(cw_to_json(base))
        assert back.ranks == base.ranks
        for a, b in zip(back.boundaries, base.boundaries):
            assert a.allclose(b)


def test_shape_mismatch_is_rejected():
    z = FreeAbelian(1)
    with pytest.raises(ComplexError):
        CWDatum(z, (1, 2), (GroupRingMatrix.zeros(z, 1, 1),))


def test_presentation_and_mapping_torus():
    base = mapping_torus_complex(2, [(1, 2), (1,)])
    assert base.ranks == (1, 3, 2)
    assert not base.group.decidable
    grp = FreeAbelian(2)
    pres = presentation_complex(grp)
    assert pres.ranks == (1, 2, 1)
    assert check_chain_identity(pres) <= 1e-12


def test_twist_rejects_invalid_rep():
    base = torus_knot_complex(2, 3)
    rng = np.random.default_rng(0)
    rep = Representation(base.group, (random_sl2(rng), random_sl2(rng)))
    with pytest.raises(ValueError):
        twist(base, rep)
