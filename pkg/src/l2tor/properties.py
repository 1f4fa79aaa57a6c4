"""Seeded random operators and the invariant checks run by the property suites."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .engines import (
    fk_det_abelian,
    fk_det_finite_quotient,
    fk_det_gap_series,
    quadrature_trace,
)
from .groups import Free, FreeAbelian, cyclic_product_quotient
from .ring import GroupRingElement, GroupRingMatrix, adjoint, l1_norm_bound, vn_trace


def _cplx(rng, shape=()):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_abelian_offset(rng, rank: int, radius: int) -> tuple:
    return tuple(int(x) for x in rng.integers(-radius, radius + 1, size=rank))


def random_matrix(rng, group, rows: int, cols: int, terms: int = 3, radius: int = 2,
                  density: float = 0.7) -> GroupRingMatrix:
    """Random sparse matrix over ``group`` (FreeAbelian offsets or Free words)."""
    entries = {}
    for i in range(rows):
        for j in range(cols):
            if rng.random() > density:
                continue
            acc: dict = {}
            for _ in range(int(rng.integers(1, terms + 1))):
                if isinstance(group, FreeAbelian):
                    g = random_abelian_offset(rng, group.rank, radius)
                else:
                    length = int(rng.integers(0, radius + 1))
                    letters = [int(rng.integers(1, group.ngens + 1)) * int(rng.choice([-1, 1]))
                               for _ in range(length)]
                    g = group.from_word(letters)
                blk = np.array([[complex(_cplx(rng))]])
                acc[g] = acc[g] + blk if g in acc else blk
            entries[(i, j)] = GroupRingElement(group, acc, 1)
    return GroupRingMatrix(group, rows, cols, entries, 1)


def random_gap_operator(rng, rank: int, size: int, radius: int = 3, terms: int = 3,
                        margin=(0.3, 1.5)) -> GroupRingMatrix:
    """Self-adjoint (s + H) over Z^rank with s = (1 + u) * l1-bound(H): gap-certified by construction."""
    group = FreeAbelian(rank)
    h = random_matrix(rng, group, size, size, terms, radius)
    h = h + h.adjoint()
    s = (1.0 + rng.uniform(*margin)) * max(l1_norm_bound(h), 1e-3)
    return h + GroupRingMatrix.identity(group, size, scale=s)


def random_invertible(rng, rank: int, size: int, radius: int = 2, terms: int = 2) -> GroupRingMatrix:
    """Square, not self-adjoint, with a diagonally dominant identity part."""
    group = FreeAbelian(rank)
    h = random_matrix(rng, group, size, size, terms, radius)
    s = (1.0 + rng.uniform(0.3, 1.5)) * max(l1_norm_bound(h), 1e-3)
    return h + GroupRingMatrix.identity(group, size, scale=s)


def _rel(a, b) -> float:
    return abs(a - b) / max(1.0, abs(a), abs(b))


def _matrix_rel(a: GroupRingMatrix, b: GroupRingMatrix) -> float:
    scale = max(a.max_abs_coefficient(), b.max_abs_coefficient(), 1.0)
    return (a - b).max_abs_coefficient() / scale


@dataclass
class SuiteReport:
    name: str
    cases: int = 0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def fail(self, case: int, what: str):
        self.failures.append(f"case {case}: {what}")


def group_kernel_case(rng, report: SuiteReport, case: int, tol: float = 1e-12):
    if case % 2 == 0:
        group = FreeAbelian(int(rng.integers(1, 3)))
    else:
        group = Free(int(rng.integers(1, 3)))
    n, m, k = (int(x) for x in rng.integers(1, 4, size=3))
    a = random_matrix(rng, group, n, m)
    b = random_matrix(rng, group, m, k)
    c = random_matrix(rng, group, k, int(rng.integers(1, 4)))
    if _matrix_rel((a @ b) @ c, a @ (b @ c)) > tol:
        report.fail(case, "associativity")
    if _matrix_rel(adjoint(a @ b), adjoint(b) @ adjoint(a)) > tol:
        report.fail(case, "adjoint anti-multiplicative")
    sq = random_matrix(rng, group, n, n)
    sq2 = random_matrix(rng, group, n, n)
    t1, t2 = vn_trace(sq @ sq2), vn_trace(sq2 @ sq)
    if abs(t1 - t2) > tol * max(1.0, abs(t1)):
        report.fail(case, "trace property")
    gram = vn_trace(a.adjoint() @ a)
    parseval = sum(float(np.sum(np.abs(blk) ** 2)) for e in a.entries.values() for blk in e.terms.values())
    if gram.real < -tol or abs(gram - parseval) > tol * max(1.0, parseval):
        report.fail(case, "Parseval")
    if isinstance(group, FreeAbelian):
        q = quadrature_trace(sq)
        if abs(q - vn_trace(sq)) > 1e-10 * max(1.0, abs(q)):
            report.fail(case, "quadrature trace")


def fk_engine_case(rng, report: SuiteReport, case: int, quotient_check: bool = True):
    rank = 1 if case % 4 else 2
    size = int(rng.integers(1, 3))
    a = random_invertible(rng, rank, size)
    b = random_invertible(rng, rank, size)
    la, lb, lab = (fk_det_abelian(x) for x in (a, b, a @ b))
    if abs(lab.log_det - la.log_det - lb.log_det) > 1e-9 + lab.uncertainty() + la.uncertainty() + lb.uncertainty():
        report.fail(case, "multiplicativity")
    lstar = fk_det_abelian(a.adjoint())
    if abs(lstar.log_det - la.log_det) > 1e-9:
        report.fail(case, "adjoint symmetry (abelian)")
    lgram = fk_det_abelian(a.adjoint() @ a)
    if abs(lgram.log_det - 2 * la.log_det) > 1e-9:
        report.fail(case, "A*A = 2 log det |A|")

    # size-1 operators keep the |Q| = 512 push-forward small
    op = random_gap_operator(rng, rank, 1, radius=2, terms=2)
    ab = fk_det_abelian(op)
    se = fk_det_gap_series(op)
    if abs(se.log_det - ab.log_det) > se.error_bound + ab.uncertainty() + 1e-12:
        report.fail(case, "series vs abelian")
    sa = fk_det_gap_series(op.adjoint())
    if abs(sa.log_det - se.log_det) > se.error_bound + sa.error_bound:
        report.fail(case, "adjoint symmetry (series)")
    bounds = [fk_det_gap_series(op, max_terms=k).error_bound for k in (4, 8, 16)]
    if any(b2 > b1 for b1, b2 in zip(bounds, bounds[1:])):
        report.fail(case, f"certified bound not monotone: {bounds}")
    s = float(rng.uniform(0.2, 5.0))
    scaled = fk_det_gap_series(op.scale(s))
    m = op.rows * op.block_size
    if abs(scaled.log_det - (m * math.log(s) + se.log_det)) > 1e-12 * max(1.0, abs(scaled.log_det)) + \
            scaled.error_bound + se.error_bound:
        report.fail(case, "scaling")
    if quotient_check:
        qv = fk_det_finite_quotient(op, _quotient(op.group, [512] if rank == 1 else [16, 32]))
        if abs(qv.log_det - ab.log_det) > 1e-3:
            report.fail(case, "quotient vs abelian")
        small = _quotient(a.group, [32] if rank == 1 else [6, 6])
        if abs(fk_det_finite_quotient(a.adjoint(), small).log_det - fk_det_finite_quotient(a, small).log_det) > 1e-9:
            report.fail(case, "adjoint symmetry (quotient)")


_QUOTIENTS: dict = {}


def _quotient(group, orders):
    key = (group, tuple(orders))
    if key not in _QUOTIENTS:
        _QUOTIENTS[key] = cyclic_product_quotient(group, orders)
    return _QUOTIENTS[key]


def run_group_kernel_suite(cases: int = 1000, seed: int = 20240611) -> SuiteReport:
    rng = np.random.default_rng(seed)
    rep = SuiteReport("group-kernel")
    for case in range(cases):
        group_kernel_case(rng, rep, case)
        rep.cases += 1
    return rep


def run_fk_engine_suite(cases: int = 1000, seed: int = 20240612) -> SuiteReport:
    rng = np.random.default_rng(seed)
    rep = SuiteReport("fk-engines")
    for case in range(cases):
        fk_engine_case(rng, rep, case)
        rep.cases += 1
    return rep
