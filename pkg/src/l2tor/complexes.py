"""Finite free C[G]-chain complexes, twisting, and combinatorial Laplacians."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .groups import (
    Free,
    FreeAbelian,
    GroupModel,
    Presented,
    central_product_group,
    commutator,
    free_reduce,
    invert_word,
    torus_knot_group,
)
from .representation import Representation, RepresentationError, validate, VALIDATION_TOL
from .ring import GroupRingElement, GroupRingMatrix, direct_sum as ring_direct_sum, hermitian_part

CHAIN_TOL = 1e-10


class ComplexError(ValueError):
    pass


@dataclass(frozen=True)
class CWDatum:
    """Cellular chain complex of the universal cover.

    ``boundaries[p-1]`` is d_p : C_p -> C_{p-1}, an n_{p-1} x n_p matrix
    acting on column vectors.
    """

    group: GroupModel
    ranks: tuple
    boundaries: tuple

    def __post_init__(self):
        ranks = tuple(int(n) for n in self.ranks)
        object.__setattr__(self, "ranks", ranks)
        object.__setattr__(self, "boundaries", tuple(self.boundaries))
        if len(ranks) > 4:
            raise ComplexError("dimension must be at most 3")
        if any(n < 0 for n in ranks):
            raise ComplexError("ranks must be nonnegative")
        if len(self.boundaries) != max(len(ranks) - 1, 0):
            raise ComplexError(f"{len(ranks)} ranks need {len(ranks) - 1} boundary matrices")
        for p, d in enumerate(self.boundaries, start=1):
            if d.shape != (ranks[p - 1], ranks[p]):
                raise ComplexError(f"d_{p} has shape {d.shape}, expected {(ranks[p - 1], ranks[p])}")
            if d.group != self.group:
                raise ComplexError(f"d_{p} is over a different group")

    @property
    def dimension(self) -> int:
        return len(self.ranks) - 1

    def boundary(self, p: int) -> GroupRingMatrix:
        """d_p, with zero matrices outside 1..dimension."""
        bs = self.boundaries[0].block_size if self.boundaries else 1
        if 1 <= p <= self.dimension:
            return self.boundaries[p - 1]
        rows = self.ranks[p - 1] if 0 <= p - 1 <= self.dimension else 0
        cols = self.ranks[p] if 0 <= p <= self.dimension else 0
        return GroupRingMatrix.zeros(self.group, rows, cols, bs)

    def rank(self, p: int) -> int:
        return self.ranks[p] if 0 <= p <= self.dimension else 0


def check_chain_identity(cx) -> float:
    """Largest coefficient magnitude among the composites d_p d_{p+1}."""
    res = 0.0
    ds = cx.boundaries if isinstance(cx, CWDatum) else cx.differentials
    for a, b in zip(ds, ds[1:]):
        res = max(res, (a @ b).max_abs_coefficient())
    return res


class TwistedComplex:
    """Complex with 2x2 (or scalar) coefficient blocks and cached Laplacians."""

    def __init__(self, group: GroupModel, ranks: Sequence[int], differentials: Sequence[GroupRingMatrix],
                 base: Optional[CWDatum] = None, rep: Optional[Representation] = None):
        self.group = group
        self.ranks = tuple(int(n) for n in ranks)
        self.differentials = tuple(differentials)
        self.base = base
        self.rep = rep
        self.block_size = self.differentials[0].block_size if self.differentials else (2 if rep else 1)
        if len(self.differentials) != max(len(self.ranks) - 1, 0):
            raise ComplexError("differential count does not match ranks")
        self._lap: dict = {}
        self._lock = threading.Lock()

    @property
    def dimension(self) -> int:
        return len(self.ranks) - 1

    def rank(self, p: int) -> int:
        return self.ranks[p] if 0 <= p <= self.dimension else 0

    def differential(self, p: int) -> GroupRingMatrix:
        if 1 <= p <= self.dimension:
            return self.differentials[p - 1]
        return GroupRingMatrix.zeros(self.group, self.rank(p - 1), self.rank(p), self.block_size)

    def laplacian(self, p: int) -> GroupRingMatrix:
        lap = self._lap.get(p)
        if lap is not None:
            return lap
        with self._lock:
            lap = self._lap.get(p)
            if lap is None:
                lap = laplacian(self, p)
                self._lap[p] = lap
        return lap

    def chain_residual(self) -> float:
        return check_chain_identity(self)


def laplacian(tc: TwistedComplex, p: int) -> GroupRingMatrix:
    """Delta_p = d_p* d_p + d_{p+1} d_{p+1}*, symmetrized so adjoint(Delta_p) == Delta_p."""
    if not 0 <= p <= tc.dimension:
        raise ComplexError(f"degree {p} outside 0..{tc.dimension}")
    dp = tc.differential(p)
    dq = tc.differential(p + 1)
    lap = dp.adjoint() @ dp + dq @ dq.adjoint()
    return hermitian_part(lap)


def untwisted(base: CWDatum) -> TwistedComplex:
    return TwistedComplex(base.group, base.ranks, base.boundaries, base, None)


def twist(base: CWDatum, rep: Representation, tol: float = VALIDATION_TOL) -> TwistedComplex:
    """Replace each monomial c*g by the block c*rho(g) attached to g."""
    if rep.group != base.group:
        raise ComplexError("representation is over a different group")
    v = validate(rep, tol)
    if not v.accepted:
        raise RepresentationError(
            f"representation rejected (relation residual {v.relation_residual:.3g}, "
            f"det residual {v.unimodularity_residual:.3g})"
        )
    cache: dict = {}

    def img(g, blk):
        m = cache.get(g)
        if m is None:
            m = rep.image(g)
            cache[g] = m
        return blk[0, 0] * m

    diffs = []
    for d in base.boundaries:
        if d.block_size != 1:
            raise ComplexError("can only twist scalar complexes")
        diffs.append(d.map_coefficients(img, block_size=2))
    return TwistedComplex(base.group, base.ranks, diffs, base, rep)


def direct_sum(*cxs: TwistedComplex) -> TwistedComplex:
    dim = max(c.dimension for c in cxs)
    ranks = [sum(c.rank(p) for c in cxs) for p in range(dim + 1)]
    diffs = [ring_direct_sum(*(c.differential(p) for c in cxs)) for p in range(1, dim + 1)]
    return TwistedComplex(cxs[0].group, ranks, diffs)


def add_isolated_vertices(tc: TwistedComplex, count: int) -> TwistedComplex:
    ranks = list(tc.ranks)
    ranks[0] += count
    diffs = list(tc.differentials)
    if diffs:
        d1 = diffs[0]
        diffs[0] = GroupRingMatrix(d1.group, ranks[0], d1.cols, d1.entries, d1.block_size)
    return TwistedComplex(tc.group, ranks, diffs, None, tc.rep)


def relative_complex(base: CWDatum, deleted: Mapping[int, Sequence[int]]) -> CWDatum:
    """Quotient by the subcomplex spanned by the ``deleted`` cells (degree -> indices)."""
    dele = {p: set(int(i) for i in v) for p, v in deleted.items()}
    for p in range(1, base.dimension + 1):
        d = base.boundary(p)
        for (i, j), _ in d.entries.items():
            if j in dele.get(p, ()) and i not in dele.get(p - 1, ()):
                raise ComplexError(f"deleted {p}-cell {j} has boundary outside the deleted cells")
    keep = [[i for i in range(base.ranks[p]) if i not in dele.get(p, ())] for p in range(base.dimension + 1)]
    bds = [base.boundary(p).submatrix(keep[p - 1], keep[p]) for p in range(1, base.dimension + 1)]
    return CWDatum(base.group, tuple(len(k) for k in keep), tuple(bds))


# ---------------------------------------------------------------------------
# constructors


def _mat(group, rows, cols, terms):
    return GroupRingMatrix.from_words(group, rows, cols, terms)


def torus_complex() -> CWDatum:
    """T^2 with one vertex, edges m, l and one square; pi_1 = Z^2 (m = e1, l = e2)."""
    z2 = FreeAbelian(2)
    d1 = _mat(z2, 1, 2, {(0, 0): [((), 1), ((1,), -1)], (0, 1): [((), 1), ((2,), -1)]})
    d2 = _mat(z2, 2, 1, {(0, 0): [((), 1), ((2,), -1)], (1, 0): [((1,), 1), ((), -1)]})
    return CWDatum(z2, (1, 2, 1), (d1, d2))


def circle_complex() -> CWDatum:
    z = FreeAbelian(1)
    return CWDatum(z, (1, 1), (_mat(z, 1, 1, {(0, 0): [((), 1), ((1,), -1)]}),))


def fox_derivative(word: Sequence[int], j: int) -> list:
    """d word / d x_j as a list of (word, coefficient) pairs."""
    out = []
    for k, x in enumerate(word):
        if x == j:
            out.append((tuple(word[:k]), 1))
        elif x == -j:
            out.append((tuple(word[:k + 1]), -1))
    return out


def presentation_complex(group: GroupModel, relators: Optional[Sequence[Sequence[int]]] = None) -> CWDatum:
    """Presentation 2-complex via Fox calculus.

    d_1 = (x_j^-1 - 1)_j and d_2[j, r] = bar(dr/dx_j) with bar(g) = g^-1, so
    d_1 d_2 = bar(r - 1) = 0 by the fundamental formula.
    """
    rels = [tuple(r) for r in (relators if relators is not None else group.relators())]
    n = group.ngens
    d1 = _mat(group, 1, n, {(0, j): [((-(j + 1),), 1), ((), -1)] for j in range(n)})
    terms = {}
    for c, r in enumerate(rels):
        for j in range(n):
            fd = fox_derivative(r, j + 1)
            if fd:
                terms[(j, c)] = [(invert_word(w), coef) for w, coef in fd]
    d2 = _mat(group, n, len(rels), terms)
    return CWDatum(group, (1, n, len(rels)), (d1, d2))


def torus_knot_complex(p: int, q: int) -> CWDatum:
    """Presentation complex of <a, b | a^p b^-q>."""
    return presentation_complex(torus_knot_group(p, q))


def seifert_y_complex(nfree: int) -> CWDatum:
    """S^1 times a bouquet of ``nfree`` circles over F_n x Z (h = generator n+1).

    d_1 = (x_1 - 1, ..., x_n - 1, h - 1); d_2 has 1 - h on the diagonal of the
    first n rows and x_i - 1 in the last row.
    """
    if nfree < 1:
        raise ComplexError("need at least one free generator")
    grp = central_product_group(nfree)
    h = nfree + 1
    d1 = _mat(grp, 1, nfree + 1, {(0, j): [((j + 1,), 1), ((), -1)] for j in range(nfree + 1)})
    terms = {}
    for i in range(nfree):
        terms[(i, i)] = [((), 1), ((h,), -1)]
        terms[(nfree, i)] = [((i + 1,), 1), ((), -1)]
    d2 = _mat(grp, nfree + 1, nfree, terms)
    return CWDatum(grp, (1, nfree + 1, nfree), (d1, d2))


def mapping_torus_complex(nfree: int, images: Sequence[Sequence[int]]) -> CWDatum:
    """Mapping torus of an endomorphism phi of F_n: <x_i, t | t x_i t^-1 phi(x_i)^-1>.

    The group has no normal form; products are checked through quotient
    oracles only, so this constructor is mostly useful with finite quotients.
    """
    if len(images) != nfree:
        raise ComplexError("need one image word per free generator")
    t = nfree + 1
    rels = [free_reduce((t, i + 1, -t) + invert_word(tuple(images[i]))) for i in range(nfree)]
    grp = Presented(nfree + 1, tuple(rels))
    return presentation_complex(grp, rels)


# ---------------------------------------------------------------------------
# JSON


def cw_to_json(base: CWDatum) -> dict:
    from .ring import matrix_to_json

    return {
        "schema": "l2tor/cw@1",
        "group": base.group.to_json(),
        "ranks": list(base.ranks),
        "boundaries": [matrix_to_json(d)["entries"] for d in base.boundaries],
    }


def cw_from_json(data) -> CWDatum:
    from .groups import group_from_json
    from .ring import matrix_from_json

    group = group_from_json(data["group"])
    ranks = [int(n) for n in data["ranks"]]
    bds = []
    for p, rows in enumerate(data.get("boundaries", []), start=1):
        bds.append(matrix_from_json(group, {"rows": ranks[p - 1], "cols": ranks[p], "entries": rows}))
    return CWDatum(group, tuple(ranks), tuple(bds))


checkChainIdentity = check_chain_identity
