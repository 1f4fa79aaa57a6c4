import math

import numpy as np
import pytest

from l2tor.complexes import (
    CWDatum,
    add_isolated_vertices,
    circle_complex,
    direct_sum,
    mapping_torus_complex,
    torus_complex,
    twist,
    untwisted,
)
from l2tor.fixtures import torus_diagonal, torus_knot_family, torus_knot_reducible
from l2tor.groups import FreeAbelian, cyclic_product_quotient
from l2tor.representation import RepresentationPath, diagonal_representation, trivial_representation
from l2tor.ring import GroupRingMatrix
from l2tor.torsion import (
    CERTIFIED_STATUS,
    HEURISTIC_STATUS,
    ZERO_STATUS,
    EngineConfig,
    UNKNOWN_STATUS,
    TorsionError,
    acyclicity_diagnostics,
    decomposition_torsion,
    three_term_degree,
    torsion,
    torsion_along_path,
)


def test_torus_twisted_by_non_unitary_diagonal_is_zero():
    base, rep = torus_diagonal(2.0, 0.5 + 1j)
    res = torsion(twist(base, rep))
    assert res.status == CERTIFIED_STATUS
    assert res.log_tau == pytest.approx(0.0, abs=1e-10)


def test_torus_knot_two_three_lambda_two():
    base, rep = torus_knot_reducible(2, 3, 2.0)
    res = torsion(twist(base, rep))
    assert res.status == CERTIFIED_STATUS
    assert res.method == "decomposition"
    assert res.log_tau == pytest.approx(math.log(2) / 6, abs=1e-9)


def test_decomposition_versus_laplacian_over_torus_knot_group():
    base, rep = torus_knot_reducible(2, 5, 1.7 + 0.6j, offdiag=0.3)
    tc = twist(base, rep)
    dec = torsion(tc, EngineConfig(method="decomposition"))
    assert dec.status == CERTIFIED_STATUS
    assert dec.log_tau == pytest.approx((1 - 1 / 2 - 1 / 5) * math.log(abs(1.7 + 0.6j)), abs=1e-9)
    # Laplacians mix both generators: no engine certifies them, and the result says so
    lap = torsion(tc, EngineConfig(method="laplacian"))
    assert lap.status == UNKNOWN_STATUS and math.isnan(lap.log_tau)


def test_empty_complex_is_zero():
    z = FreeAbelian(1)
    tc = untwisted(CWDatum(z, (0, 0), (GroupRingMatrix.zeros(z, 0, 0),)))
    res = torsion(tc)
    assert res.log_tau == 0.0 and res.status == CERTIFIED_STATUS


def test_degree_zero_is_not_evaluated():
    base, rep = torus_diagonal(2.0, 3.0)
    tc = twist(base, rep)
    a = torsion(tc)
    b = torsion(add_isolated_vertices(tc, 3))
    assert a.log_tau == pytest.approx(b.log_tau, abs=1e-14)
    assert a.per_degree[0].weight == 0 and a.per_degree[0].fk is None


def test_direct_sum_doubles():
    circ = circle_complex()
    tc = twist(circ, diagonal_representation(circ.group, [2.5]))
    one = torsion(tc).log_tau
    two = torsion(direct_sum(tc, tc)).log_tau
    assert one == pytest.approx(-math.log(2.5), abs=1e-10)
    assert two == pytest.approx(2 * one, abs=1e-10)


def test_untwisted_torus_is_acyclic_without_gap():
    # symbol determinants vanish on a null set only: no kernel, torsion 0
    res = torsion(untwisted(torus_complex()))
    assert res.status == CERTIFIED_STATUS
    assert res.log_tau == pytest.approx(0.0, abs=1e-6)
    assert any("no spectral gap" in f for d in res.per_degree if d.fk for f in d.fk.flags)


def test_unitary_aligned_torus_is_zero():
    w = np.exp(2j * np.pi / 5)
    base, rep = torus_diagonal(w, w ** 2)
    res = torsion(twist(base, rep))
    assert res.status == CERTIFIED_STATUS and abs(res.log_tau) < 1e-6


def test_zero_convention_only_on_affirmative_kernel():
    z = FreeAbelian(1)
    res = torsion(untwisted(CWDatum(z, (1, 1), (GroupRingMatrix.zeros(z, 1, 1),))))
    assert res.status == ZERO_STATUS
    assert res.log_tau == -math.inf
    assert res.to_json()["logTau"] == "-inf"


def test_undecidable_group_needs_quotient():
    base = mapping_torus_complex(2, [(2,), (1,)])
    with pytest.raises(TorsionError, match="finite quotient"):
        torsion(twist(base, trivial_representation(base.group)))


def test_three_term_degree():
    assert three_term_degree((1, 2, 1)) == 1
    assert three_term_degree((0, 1, 2, 1)) == 2
    assert three_term_degree((1, 3, 1)) is None
    assert three_term_degree((1, 1)) is None


def test_decomposition_rejects_bad_ranks():
    base, rep = torus_diagonal(2.0, 3.0)
    tc = twist(base, rep)
    with pytest.raises(TorsionError):
        decomposition_torsion(add_isolated_vertices(tc, 1))


def test_corrupted_boundary_is_refused():
    base = torus_complex()
    bad = base.boundary(2) + GroupRingMatrix.from_words(base.group, 2, 1, {(0, 0): [((1,), 0.5)]})
    cx = CWDatum(base.group, base.ranks, (base.boundary(1), bad))
    with pytest.raises(TorsionError, match="residual"):
        torsion(untwisted(cx))


def test_quotient_engine_is_heuristic():
    base, rep = torus_diagonal(2.0, 3.0)
    q = cyclic_product_quotient(base.group, [16, 16])
    res = torsion(twist(base, rep), EngineConfig(engine="quotient", quotient=q))
    assert res.status == HEURISTIC_STATUS
    assert abs(res.log_tau) < 1e-3


def test_acyclicity_diagnostics():
    base, rep = torus_diagonal(2.0, 3.0)
    diags = acyclicity_diagnostics(twist(base, rep))
    assert [d.verdict for d in diags] == ["gap-certified"] * 3
    diags = acyclicity_diagnostics(untwisted(torus_complex()))
    assert all(d.verdict == "inconclusive" and d.kernel_dim == 0 for d in diags)
    z = FreeAbelian(1)
    diags = acyclicity_diagnostics(untwisted(CWDatum(z, (1, 1), (GroupRingMatrix.zeros(z, 1, 1),))))
    assert [d.verdict for d in diags] == ["kernel-detected"] * 2
    w = np.exp(2j * np.pi * 3 / 16)
    base, rep = torus_diagonal(w, w)
    q = cyclic_product_quotient(base.group, [16, 16])
    diags = acyclicity_diagnostics(twist(base, rep), EngineConfig(quotient=q), count=4)
    assert diags[1].verdict == "kernel-detected" and diags[1].kernel_dim >= 1


def test_constant_path_has_zero_second_differences():
    base, rep = torus_knot_reducible(2, 3, 3.0)
    path = RepresentationPath(base.group, keyframes=(rep,), grid=5)
    scan = torsion_along_path(base, path, threads=1)
    assert scan.smoothness == "ok"
    assert all(abs(x) < 1e-6 for x in scan.second_differences)
    assert all(s.result.log_tau == pytest.approx(math.log(3) / 6, abs=1e-9) for s in scan.samples)


def test_torus_knot_family_crossing_unit_circle():
    # |lambda| = 1 at t = 0.5: the value has a kink there but every sample is certified
    base, path = torus_knot_family(2, 3, 0.5, 1.5, grid=5)
    scan = torsion_along_path(base, path, threads=1)
    rows = scan.to_json()["rows"]
    assert all(r["status"] == CERTIFIED_STATUS for r in rows)
    for r in rows:
        lam = 0.5 + r["t"]
        assert r["logTau"] == pytest.approx(abs(math.log(lam)) / 6, abs=1e-8)
    assert max(scan.second_differences) > 1.0


def test_path_error_rows():
    base = torus_complex()
    path = RepresentationPath(base.group, eigenvalue_path=(-1.0, 1.0), grid=3)
    scan = torsion_along_path(base, path, threads=1)
    assert scan.samples[1].error is not None
    assert scan.smoothness.startswith("refused")


def test_thread_count_does_not_change_results(monkeypatch):
    base, path = torus_knot_family(2, 5, 1.5, 3.0, grid=7)
    monkeypatch.setenv("L2TOR_THREADS", "1")
    a = torsion_along_path(base, path).to_json()
    monkeypatch.setenv("L2TOR_THREADS", "4")
    b = torsion_along_path(base, path).to_json()
    assert a == b
