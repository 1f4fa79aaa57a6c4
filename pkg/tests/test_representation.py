import cmath

import numpy as np
import pytest

from l2tor.fixtures import torus_knot_reducible
from l2tor.groups import FreeAbelian, Presented, torus_knot_group
from l2tor.representation import (
    Representation,
    RepresentationError,
    RepresentationPath,
    character_coordinates,
    conjugate,
    diagonal_representation,
    irreducibility_test,
    random_sl2,
    reducible_eigenvalue,
    sample_path,
    trivial_representation,
    validate,
)

Z2 = FreeAbelian(2)


def test_trivial_rep_is_accepted_with_zero_residuals():
    for g in (Z2, torus_knot_group(2, 3)):
        v = validate(trivial_representation(g))
        assert v.accepted and v.relation_residual == 0 and v.unimodularity_residual == 0


def test_commuting_diagonal_rep_of_z2_presentation():
    grp = Presented(2, ((1, 2, -1, -2),))
    rep = diagonal_representation(grp, [2.0, 1j])
    assert validate(rep).relation_residual == 0


def test_torus_knot_rep_validation_tracks_the_relation():
    grp = torus_knot_group(2, 3)
    a = np.diag([1j, -1j])
    w = cmath.exp(2j * cmath.pi / 3)
    b_good = np.diag([w, 1 / w]) @ np.diag([-1, -1])  # b^3 = -id = a^2
    assert validate(Representation(grp, (a, b_good))).accepted
    assert not validate(Representation(grp, (a, np.diag([w, 1 / w])))).accepted


def test_word_evaluation_is_ordered_product():
    rng = np.random.default_rng(1)
    m1, m2 = random_sl2(rng), random_sl2(rng)
    rep = Representation(torus_knot_group(2, 3), (m1, m2))
    expected = m1 @ np.linalg.inv(m2) @ m1
    np.testing.assert_allclose(rep.image_of_word((1, -2, 1)), expected, atol=1e-12)


def test_non_unimodular_images_fail_validation():
    v = validate(Representation(Z2, (np.diag([2.0, 1.0]), np.eye(2))))
    assert not v.accepted and v.unimodularity_residual == pytest.approx(1.0)


def test_conjugation_examples():
    rep = diagonal_representation(Z2, [2.0, 3j])
    same = conjugate(rep, np.eye(2))
    for a, b in zip(rep.images, same.images):
        np.testing.assert_array_equal(a, b)
    swapped = conjugate(rep, np.array([[0, 1], [-1, 0]]))
    np.testing.assert_allclose(swapped.images[0], np.diag([0.5, 2.0]))


def test_conjugation_round_trip():
    rng = np.random.default_rng(2)
    rep = Representation(torus_knot_group(2, 3), (random_sl2(rng), random_sl2(rng)))
    g = random_sl2(rng, max_cond=50)
    back = conjugate(conjugate(rep, g, tol=1e-6), np.linalg.inv(g), tol=1e-6)
    for a, b in zip(rep.images, back.images):
        np.testing.assert_allclose(a, b, atol=1e-12)


def test_irreducibility():
    assert not irreducibility_test(diagonal_representation(Z2, [2.0, 3.0]))
    assert not irreducibility_test(trivial_representation(Z2))
    grp = Presented(2, ())
    rep = Representation(grp, (np.array([[1, 1], [0, 1]]), np.array([[1, 0], [1, 1]])))
    assert irreducibility_test(rep)


def test_reducible_eigenvalue_examples():
    z = FreeAbelian(1)
    assert reducible_eigenvalue(trivial_representation(z), [1]) == 1
    assert reducible_eigenvalue(diagonal_representation(z, [2.0]), [1]) == pytest.approx(2.0)
    assert reducible_eigenvalue(diagonal_representation(z, [0.5]), [1]) == pytest.approx(2.0)
    mu = 1.3 * cmath.exp(0.4j)
    _, rep = torus_knot_reducible(2, 3, mu ** 6, offdiag=0.5)
    assert validate(rep).accepted
    assert reducible_eigenvalue(rep, [3, 2]) == pytest.approx(mu)


def test_character_coordinates():
    z = FreeAbelian(1)
    lam = 1.5 + 0.5j
    rep = diagonal_representation(z, [lam])
    assert character_coordinates(rep, [()]) == [2]
    assert character_coordinates(rep, [(1,)])[0] == pytest.approx(lam + 1 / lam)
    rng = np.random.default_rng(3)
    grp = Presented(2, ())
    r = Representation(grp, (random_sl2(rng), random_sl2(rng)))
    words = [(1,), (2,), (1, 2), (1, -2), (1, 1, 2)]
    g = random_sl2(rng, max_cond=100)
    before = character_coordinates(r, words)
    after = character_coordinates(conjugate(r, g, tol=1e-6), words)
    np.testing.assert_allclose(after, before, atol=1e-9 * max(1, max(abs(x) for x in before)))


def test_path_keyframes_and_family():
    a = diagonal_representation(Z2, [2.0, 3.0])
    b = diagonal_representation(Z2, [1j, 0.5])
    path = RepresentationPath(Z2, keyframes=(a, b), grid=100)
    first = sample_path(path, 0.0)
    for x, y in zip(first.images, a.images):
        np.testing.assert_array_equal(x, y)
    for t in path.ts():
        assert validate(sample_path(path, t), path.tol).accepted
    fam = RepresentationPath(Z2, eigenvalue_path=(2.0, 3.0), exponents=(1, 2))
    rep = sample_path(fam, 0.5)
    np.testing.assert_allclose(rep.images[1], np.diag([6.25, 1 / 6.25]))


def test_path_sample_failing_validation_is_an_error():
    grp = torus_knot_group(2, 3)
    w = cmath.exp(2j * cmath.pi / 3)
    good = Representation(grp, (np.diag([1j, -1j]), -np.diag([w, 1 / w])))
    other = Representation(grp, (np.diag([1j, -1j]), -np.diag([1 / w, w])))
    path = RepresentationPath(grp, keyframes=(good, other), grid=3)
    with pytest.raises(RepresentationError, match="t = 0.5"):
        sample_path(path, 0.5)
