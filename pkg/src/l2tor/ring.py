"""Sparse matrices over the group ring C[G] with scalar or 2x2 coefficient blocks."""

from __future__ import annotations

import math
from functools import reduce
from typing import Iterable, Mapping, Optional

import numpy as np

from .groups import (
    Free,
    FreeAbelian,
    GroupError,
    GroupModel,
    Presented,
    UndecidableSupportCollision,
    free_reduce,
    invert_word,
    word_power,
)

DEFAULT_DROP_TOL = 1e-300


class RingError(ValueError):
    pass


def _as_block(c, b: int) -> np.ndarray:
    a = np.asarray(c, dtype=complex)
    if a.ndim == 0:
        return a * np.eye(b, dtype=complex) if b > 1 else a.reshape(1, 1)
    if a.shape != (b, b):
        raise RingError(f"coefficient block of shape {a.shape} does not match block size {b}")
    return a.copy()


class GroupRingElement:
    """Finitely supported map from group elements to b x b complex blocks."""

    __slots__ = ("group", "block_size", "terms", "dropped")

    def __init__(self, group: GroupModel, terms: Optional[Mapping] = None, block_size: int = 1,
                 drop_tol: float = DEFAULT_DROP_TOL):
        self.group = group
        self.block_size = block_size
        self.dropped = 0
        clean = {}
        for g, c in (terms or {}).items():
            blk = _as_block(c, block_size)
            if np.max(np.abs(blk)) < drop_tol:
                if np.any(blk != 0):
                    self.dropped += 1
                continue
            clean[g] = blk
        self.terms = clean

    @classmethod
    def monomial(cls, group, g, c=1.0, block_size=1):
        return cls(group, {g: c}, block_size)

    def __len__(self):
        return len(self.terms)

    def __bool__(self):
        return bool(self.terms)

    def support(self):
        return list(self.terms)

    def coefficient(self, g) -> np.ndarray:
        blk = self.terms.get(g)
        if blk is None:
            return np.zeros((self.block_size, self.block_size), dtype=complex)
        return blk

    def identity_coefficient(self) -> np.ndarray:
        grp = self.group
        out = np.zeros((self.block_size, self.block_size), dtype=complex)
        for g, blk in self.terms.items():
            if grp.is_identity(g):
                out = out + blk
        return out

    def _check(self, other):
        if other.group != self.group:
            raise RingError("group-model mismatch")
        if other.block_size != self.block_size:
            raise RingError("block-size mismatch")

    def __add__(self, other):
        self._check(other)
        terms = dict(self.terms)
        for g, blk in other.terms.items():
            terms[g] = terms[g] + blk if g in terms else blk
        return GroupRingElement(self.group, terms, self.block_size)

    def __neg__(self):
        return GroupRingElement(self.group, {g: -b for g, b in self.terms.items()}, self.block_size)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s):
        return GroupRingElement(self.group, {g: s * b for g, b in self.terms.items()}, self.block_size)

    def adjoint(self):
        grp = self.group
        return GroupRingElement(grp, {grp.inv(g): b.conj().T for g, b in self.terms.items()}, self.block_size)

    def __mul__(self, other):
        self._check(other)
        return _mul_elements(self, other)

    def l1_norm(self) -> float:
        return float(sum(np.linalg.norm(b, 2) for b in self.terms.values()))

    def allclose(self, other, rtol=1e-12, atol=1e-12) -> bool:
        self._check(other)
        keys = set(self.terms) | set(other.terms)
        scale = max(self.l1_norm(), other.l1_norm(), 1.0)
        return all(np.allclose(self.coefficient(g), other.coefficient(g), rtol=rtol, atol=atol * scale) for g in keys)

    def __repr__(self):
        return f"GroupRingElement({len(self.terms)} terms, block={self.block_size})"


def _mul_elements(a: GroupRingElement, b: GroupRingElement) -> GroupRingElement:
    grp = a.group
    bs = a.block_size
    if not a.terms or not b.terms:
        return GroupRingElement(grp, {}, bs)
    if isinstance(grp, FreeAbelian) and len(a.terms) * len(b.terms) > 32:
        ka = np.array(list(a.terms), dtype=np.int64).reshape(len(a.terms), grp.rank)
        kb = np.array(list(b.terms), dtype=np.int64).reshape(len(b.terms), grp.rank)
        ca = np.stack(list(a.terms.values()))
        cb = np.stack(list(b.terms.values()))
        sums = (ka[:, None, :] + kb[None, :, :]).reshape(-1, grp.rank)
        prods = np.einsum("aij,bjk->abik", ca, cb).reshape(-1, bs, bs)
        uniq, inv = np.unique(sums, axis=0, return_inverse=True)
        acc = np.zeros((len(uniq), bs, bs), dtype=complex)
        np.add.at(acc, inv.ravel(), prods)
        terms = {tuple(int(x) for x in k): acc[i] for i, k in enumerate(uniq)}
    else:
        terms: dict = {}
        mul = grp.mul
        for g, x in a.terms.items():
            for h, y in b.terms.items():
                k = mul(g, h)
                p = x @ y
                if k in terms:
                    terms[k] = terms[k] + p
                else:
                    terms[k] = p
    out = GroupRingElement(grp, terms, bs)
    if isinstance(grp, Presented) and not grp.decidable and len(out.terms) > 1:
        _check_collisions(grp, out.terms)
    return out


def _check_collisions(grp: Presented, terms):
    """Distinct words must be separated by some quotient oracle."""
    seen = {}
    for g in terms:
        sig = grp.oracle_signature(g) if grp.quotients else ()
        if sig in seen:
            raise UndecidableSupportCollision(
                f"words {list(seen[sig])} and {list(g)} cannot be distinguished without a normal form"
            )
        seen[sig] = g


class GroupRingMatrix:
    """rows x cols matrix with entries in C[G] (free-module ranks before block expansion)."""

    def __init__(self, group: GroupModel, rows: int, cols: int, entries: Optional[Mapping] = None,
                 block_size: int = 1):
        if rows < 0 or cols < 0:
            raise RingError("dimensions must be nonnegative")
        self.group = group
        self.rows = int(rows)
        self.cols = int(cols)
        self.block_size = int(block_size)
        clean = {}
        self.dropped = 0
        for (i, j), e in (entries or {}).items():
            if not (0 <= i < rows and 0 <= j < cols):
                raise RingError(f"entry ({i}, {j}) outside {rows}x{cols}")
            if not isinstance(e, GroupRingElement):
                e = GroupRingElement(group, e, block_size)
            if e.group != group or e.block_size != block_size:
                raise RingError("all entries must share the group model and block size")
            self.dropped += e.dropped
            if e.terms:
                clean[(i, j)] = e
        self.entries = clean

    # -- constructors -----------------------------------------------------

    @classmethod
    def zeros(cls, group, rows, cols, block_size=1):
        return cls(group, rows, cols, {}, block_size)

    @classmethod
    def identity(cls, group, n, block_size=1, scale=1.0):
        e = group.identity()
        return cls(group, n, n, {(i, i): {e: scale} for i in range(n)}, block_size)

    @classmethod
    def from_words(cls, group, rows, cols, terms: Mapping, block_size=1):
        """``terms`` maps (i, j) to a list of (word, coefficient) pairs."""
        entries = {}
        for (i, j), lst in terms.items():
            acc: dict = {}
            for w, c in lst:
                g = group.from_word(w)
                blk = _as_block(c, block_size)
                acc[g] = acc[g] + blk if g in acc else blk
            entries[(i, j)] = GroupRingElement(group, acc, block_size)
        return cls(group, rows, cols, entries, block_size)

    # -- basic structure --------------------------------------------------

    @property
    def shape(self):
        return (self.rows, self.cols)

    @property
    def expanded_shape(self):
        return (self.rows * self.block_size, self.cols * self.block_size)

    def entry(self, i, j) -> GroupRingElement:
        e = self.entries.get((i, j))
        return e if e is not None else GroupRingElement(self.group, {}, self.block_size)

    def support(self) -> set:
        out = set()
        for e in self.entries.values():
            out.update(e.terms)
        return out

    def nnz_terms(self) -> int:
        return sum(len(e) for e in self.entries.values())

    def is_zero(self) -> bool:
        return not self.entries

    def _check_same(self, other):
        if other.group != self.group:
            raise RingError("group-model mismatch")
        if other.block_size != self.block_size:
            raise RingError("block-size mismatch")

    def __add__(self, other):
        self._check_same(other)
        if other.shape != self.shape:
            raise RingError(f"dimension mismatch {self.shape} vs {other.shape}")
        entries = dict(self.entries)
        for k, e in other.entries.items():
            entries[k] = entries[k] + e if k in entries else e
        return GroupRingMatrix(self.group, self.rows, self.cols, entries, self.block_size)

    def __neg__(self):
        return self.scale(-1.0)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s):
        return GroupRingMatrix(self.group, self.rows, self.cols,
                               {k: e.scale(s) for k, e in self.entries.items()}, self.block_size)

    def __matmul__(self, other):
        return multiply(self, other)

    def adjoint(self):
        return adjoint(self)

    def submatrix(self, rows: Iterable[int], cols: Iterable[int]):
        rows, cols = list(rows), list(cols)
        rmap = {r: a for a, r in enumerate(rows)}
        cmap = {c: a for a, c in enumerate(cols)}
        entries = {(rmap[i], cmap[j]): e for (i, j), e in self.entries.items() if i in rmap and j in cmap}
        return GroupRingMatrix(self.group, len(rows), len(cols), entries, self.block_size)

    def map_coefficients(self, fn, block_size=None):
        """Apply ``fn(g, block) -> block`` to every term."""
        bs = block_size or self.block_size
        entries = {}
        for k, e in self.entries.items():
            entries[k] = GroupRingElement(self.group, {g: fn(g, b) for g, b in e.terms.items()}, bs)
        return GroupRingMatrix(self.group, self.rows, self.cols, entries, bs)

    def flatten(self):
        """Scalar-block matrix of rank rows*b x cols*b."""
        b = self.block_size
        if b == 1:
            return self
        entries: dict = {}
        for (i, j), e in self.entries.items():
            for g, blk in e.terms.items():
                for s in range(b):
                    for t in range(b):
                        if blk[s, t] != 0:
                            entries.setdefault((i * b + s, j * b + t), {})[g] = blk[s, t]
        return GroupRingMatrix(self.group, self.rows * b, self.cols * b, entries, 1)

    def allclose(self, other, rtol=1e-12, atol=1e-12) -> bool:
        self._check_same(other)
        if self.shape != other.shape:
            return False
        keys = set(self.entries) | set(other.entries)
        return all(self.entry(*k).allclose(other.entry(*k), rtol, atol) for k in keys)

    def max_abs_coefficient(self) -> float:
        m = 0.0
        for e in self.entries.values():
            for b in e.terms.values():
                m = max(m, float(np.max(np.abs(b))))
        return m

    def is_self_adjoint(self, tol=0.0) -> bool:
        if self.rows != self.cols:
            return False
        diff = self - adjoint(self)
        return diff.max_abs_coefficient() <= tol

    def __repr__(self):
        return (f"GroupRingMatrix({self.rows}x{self.cols}, block={self.block_size}, "
                f"group={self.group.flavor}, terms={self.nnz_terms()})")


def multiply(a: GroupRingMatrix, b: GroupRingMatrix) -> GroupRingMatrix:
    if a.cols != b.rows:
        raise RingError(f"dimension mismatch: {a.shape} @ {b.shape}")
    a._check_same(b)
    by_row: dict = {}
    for (j, k), e in b.entries.items():
        by_row.setdefault(j, []).append((k, e))
    acc: dict = {}
    for (i, j), x in sorted(a.entries.items()):
        for k, y in by_row.get(j, ()):
            p = x * y
            acc[(i, k)] = acc[(i, k)] + p if (i, k) in acc else p
    out = GroupRingMatrix(a.group, a.rows, b.cols, acc, a.block_size)
    out.dropped += a.dropped + b.dropped
    return out


def adjoint(a: GroupRingMatrix) -> GroupRingMatrix:
    entries = {(j, i): e.adjoint() for (i, j), e in a.entries.items()}
    return GroupRingMatrix(a.group, a.cols, a.rows, entries, a.block_size)


def hermitian_part(a: GroupRingMatrix) -> GroupRingMatrix:
    """(A + A*)/2, an exact fixed point of ``adjoint``."""
    return (a + adjoint(a)).scale(0.5)


def vn_trace(a: GroupRingMatrix) -> complex:
    if a.rows != a.cols:
        raise RingError("von Neumann trace needs a square matrix")
    t = 0j
    for i in range(a.rows):
        e = a.entries.get((i, i))
        if e is not None:
            t += complex(np.trace(e.identity_coefficient()))
    return t


def trace_of_product(a: GroupRingMatrix, b: GroupRingMatrix) -> complex:
    """vn_trace(a @ b) without forming the product."""
    if a.cols != b.rows or a.rows != b.cols:
        raise RingError("trace_of_product needs a (m x n) and b (n x m)")
    grp = a.group
    t = 0j
    for (i, j), x in a.entries.items():
        y = b.entries.get((j, i))
        if y is None:
            continue
        if isinstance(grp, Presented) and not grp.decidable:
            t += vn_trace(GroupRingMatrix(grp, 1, 1, {(0, 0): x * y}, a.block_size))
            continue
        small, big, flip = (x, y, False) if len(x) <= len(y) else (y, x, True)
        for g, blk in small.terms.items():
            other = big.terms.get(grp.inv(g))
            if other is not None:
                t += complex(np.trace(other @ blk if flip else blk @ other))
    return t


def l1_norm_bound(a: GroupRingMatrix) -> float:
    """Upper bound on the operator norm (Schur test on the entrywise l1 norms)."""
    if a.is_zero():
        return 0.0
    norms = np.zeros((a.rows, a.cols))
    for (i, j), e in a.entries.items():
        norms[i, j] = e.l1_norm()
    return float(math.sqrt(norms.sum(axis=1).max() * norms.sum(axis=0).max()))


def direct_sum(*mats: GroupRingMatrix) -> GroupRingMatrix:
    grp = mats[0].group
    bs = mats[0].block_size
    entries = {}
    r0 = c0 = 0
    for m in mats:
        m._check_same(mats[0])
        for (i, j), e in m.entries.items():
            entries[(i + r0, j + c0)] = e
        r0 += m.rows
        c0 += m.cols
    return GroupRingMatrix(grp, r0, c0, entries, bs)


# ---------------------------------------------------------------------------
# cyclic reduction


def _free_root(word):
    """Write a reduced word as (c u c^-1)^k with u cyclically reduced and primitive."""
    i = 0
    n = len(word)
    while 2 * i + 1 < n and word[i] == -word[n - 1 - i]:
        i += 1
    c = word[:i]
    u = word[i:n - i]
    L = len(u)
    for d in range(1, L + 1):
        if L % d == 0 and u == u[:d] * (L // d):
            return free_reduce(c + u[:d] + invert_word(c)), L // d
    raise AssertionError("unreachable")


def _common_exponents(grp, support):
    """Find h of infinite order and exponents with g = h^k for every g in support."""
    nontrivial = [g for g in support if not grp.is_identity(g)]
    if not nontrivial:
        return grp.identity(), {g: 0 for g in support}
    if isinstance(grp, FreeAbelian):
        base = np.array(nontrivial[0])
        base = base // reduce(math.gcd, (abs(int(x)) for x in base))
        exps = {}
        for g in support:
            v = np.array(g)
            k = int(np.dot(v, base)) // int(np.dot(base, base))
            if not np.array_equal(k * base, v):
                return None
            exps[g] = k
        base = tuple(int(x) for x in base)
    elif isinstance(grp, Free):
        root, _ = _free_root(nontrivial[0])
        rinv = invert_word(root)
        exps = {}
        for g in support:
            if len(g) == 0:
                exps[g] = 0
                continue
            r, k = _free_root(g)
            if r == root:
                exps[g] = k
            elif r == rinv:
                exps[g] = -k
            else:
                return None
        base = root
    elif isinstance(grp, Presented):
        bound = 4 * max(len(g) for g in support) + 4
        for cand in grp.infinite_order:
            table = {}
            for k in range(-bound, bound + 1):
                table.setdefault(grp.canonical(word_power(cand, k)), k)
            if all(g in table for g in support):
                exps = {g: table[g] for g in support}
                base = grp.canonical(cand)
                break
        else:
            return None
    else:
        return None
    g0 = reduce(math.gcd, (abs(k) for k in exps.values()), 0)
    if g0 > 1:
        exps = {g: k // g0 for g, k in exps.items()}
        base = _power(grp, base, g0)
    return base, exps


def _power(grp, g, k):
    out = grp.identity()
    for _ in range(abs(k)):
        out = grp.mul(out, g if k > 0 else grp.inv(g))
    return out


def cyclic_reduction(a: GroupRingMatrix):
    """Rewrite ``a`` over Z = <h> when its whole support lies in a cyclic subgroup.

    Returns ``(matrix over FreeAbelian(1), h)`` or ``None``.  For presented
    groups only words declared to have infinite order are tried as h.
    """
    support = a.support()
    if not support:
        return GroupRingMatrix(FreeAbelian(1), a.rows, a.cols, {}, a.block_size), a.group.identity()
    try:
        found = _common_exponents(a.group, support)
    except (GroupError, UndecidableSupportCollision):
        return None
    if found is None:
        return None
    h, exps = found
    z = FreeAbelian(1)
    entries = {}
    for k, e in a.entries.items():
        terms: dict = {}
        for g, blk in e.terms.items():
            key = (exps[g],)
            terms[key] = terms[key] + blk if key in terms else blk
        entries[k] = GroupRingElement(z, terms, a.block_size)
    return GroupRingMatrix(z, a.rows, a.cols, entries, a.block_size), h


# ---------------------------------------------------------------------------
# JSON


def _coef_to_json(blk, group, g):
    w = group.element_to_json(g)
    if blk.shape == (1, 1):
        return {"word": w, "re": float(blk[0, 0].real), "im": float(blk[0, 0].imag)}
    return {"word": w, "block": [[[float(x.real), float(x.imag)] for x in row] for row in blk]}


def element_from_json(group, terms, block_size):
    acc: dict = {}
    for t in terms:
        g = group.element_from_json(t["word"])
        if "block" in t:
            blk = np.array([[complex(re, im) for re, im in row] for row in t["block"]])
        else:
            blk = _as_block(complex(t.get("re", 0.0), t.get("im", 0.0)), block_size)
        acc[g] = acc[g] + blk if g in acc else blk
    return GroupRingElement(group, acc, block_size)


def matrix_to_json(a: GroupRingMatrix):
    rows = []
    for i in range(a.rows):
        row = []
        for j in range(a.cols):
            e = a.entries.get((i, j))
            row.append([] if e is None else [_coef_to_json(b, a.group, g) for g, b in e.terms.items()])
        rows.append(row)
    return {"rows": a.rows, "cols": a.cols, "blockSize": a.block_size, "entries": rows}


def matrix_from_json(group, data, block_size=None):
    bs = int(data.get("blockSize", block_size or 1))
    rows_data = data["entries"]
    rows = int(data.get("rows", len(rows_data)))
    cols = int(data.get("cols", len(rows_data[0]) if rows_data else 0))
    entries = {}
    for i, row in enumerate(rows_data):
        if len(row) != cols:
            raise RingError(f"row {i} has {len(row)} entries, expected {cols}")
        for j, terms in enumerate(row):
            if terms:
                entries[(i, j)] = element_from_json(group, terms, bs)
    return GroupRingMatrix(group, rows, cols, entries, bs)
