"""Computable group models.

Elements are plain hashable keys so they can index sparse group-ring
coefficient maps directly:

* ``FreeAbelian``: a tuple of ``rank`` integers.
* ``Free``: a freely reduced tuple of signed generator indices (1-based).
* ``Presented``: a tuple of signed generator indices, freely reduced and then
  passed through the normal-form callback when one is supplied.
* ``Finite``: a permutation of ``range(degree)`` stored as a tuple.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

Word = tuple


class GroupError(ValueError):
    pass


class UndecidableSupportCollision(GroupError):
    """Raised when equality of two words in a presented group cannot be settled."""


def free_reduce(word: Sequence[int]) -> Word:
    out: list[int] = []
    for x in word:
        if x == 0:
            raise GroupError("generator index 0 is not allowed (indices are 1-based)")
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(int(x))
    return tuple(out)


def invert_word(word: Sequence[int]) -> Word:
    return tuple(-x for x in reversed(word))


def word_power(word: Sequence[int], k: int) -> Word:
    if k >= 0:
        return tuple(word) * k
    return invert_word(word) * (-k)


def commutator(x: Sequence[int], y: Sequence[int]) -> Word:
    return tuple(x) + tuple(y) + invert_word(x) + invert_word(y)


# ---------------------------------------------------------------------------
# normal forms for the presented groups the toolkit builds itself


class TorusKnotNormalForm:
    """Normal form for <a, b | a^p = b^q> (generators 1 and 2).

    The centre is generated by h = a^p = b^q.  Every element is uniquely
    h^e s_1 ... s_m with alternating syllables a^i (0 < i < p), b^j
    (0 < j < q).  The key is the syllable word followed by a^(p e).
    """

    def __init__(self, p: int, q: int):
        if p < 1 or q < 1:
            raise GroupError("torus knot exponents must be positive")
        self.p, self.q = int(p), int(q)

    def __eq__(self, other):
        return isinstance(other, TorusKnotNormalForm) and (self.p, self.q) == (other.p, other.q)

    def __hash__(self):
        return hash(("torus_knot", self.p, self.q))

    def to_json(self):
        return {"kind": "torus_knot", "p": self.p, "q": self.q}

    def __call__(self, word: Sequence[int]) -> Word:
        mods = {1: self.p, 2: self.q}
        e = 0
        stack: list[list[int]] = []  # [gen, exponent]
        for x in word:
            g = abs(x)
            if g not in mods:
                raise GroupError(f"generator {g} not in torus knot group")
            s = 1 if x > 0 else -1
            if stack and stack[-1][0] == g:
                stack[-1][1] += s
            else:
                stack.append([g, s])
            m = mods[g]
            exp = stack[-1][1]
            r = exp % m
            e += (exp - r) // m
            if r == 0:
                stack.pop()
            else:
                stack[-1][1] = r
        out: list[int] = []
        for g, k in stack:
            out.extend([g] * k)
        out.extend(word_power((1,), self.p * e))
        return tuple(out)


class CentralNormalForm:
    """Normal form for F x Z where generator ``central`` spans the Z factor.

    The key is the freely reduced word in the other generators followed by
    the power of the central generator.
    """

    def __init__(self, central: int):
        self.central = int(central)

    def __eq__(self, other):
        return isinstance(other, CentralNormalForm) and self.central == other.central

    def __hash__(self):
        return hash(("central", self.central))

    def to_json(self):
        return {"kind": "central", "generator": self.central}

    def __call__(self, word: Sequence[int]) -> Word:
        c = self.central
        e = sum(1 if x == c else -1 for x in word if abs(x) == c)
        rest = free_reduce([x for x in word if abs(x) != c])
        return rest + word_power((c,), e)


def normal_form_from_json(data):
    if data is None:
        return None
    kind = data.get("kind")
    if kind == "torus_knot":
        return TorusKnotNormalForm(data["p"], data["q"])
    if kind == "central":
        return CentralNormalForm(data["generator"])
    raise GroupError(f"unknown normal form kind {kind!r}")


# ---------------------------------------------------------------------------
# permutations


def perm_mul(p: Sequence[int], q: Sequence[int]) -> tuple:
    """Composition p o q (apply q first)."""
    return tuple(p[i] for i in q)


def perm_inv(p: Sequence[int]) -> tuple:
    out = [0] * len(p)
    for i, j in enumerate(p):
        out[j] = i
    return tuple(out)


def perm_pow(p: Sequence[int], k: int) -> tuple:
    base = tuple(p) if k >= 0 else perm_inv(p)
    k = abs(k)
    result = tuple(range(len(p)))
    while k:
        if k & 1:
            result = perm_mul(result, base)
        base = perm_mul(base, base)
        k >>= 1
    return result


# ---------------------------------------------------------------------------
# group models


class GroupModel:
    flavor = "abstract"
    ngens = 0

    def identity(self):
        raise NotImplementedError

    def mul(self, g, h):
        raise NotImplementedError

    def inv(self, g):
        raise NotImplementedError

    def is_identity(self, g) -> bool:
        return g == self.identity()

    def order(self) -> Optional[int]:
        """Group order, or None when infinite."""
        return None

    def from_word(self, word: Sequence[int]):
        g = self.identity()
        for x in word:
            g = self.mul(g, self.generator(x))
        return g

    def generator(self, x: int):
        raise NotImplementedError

    def to_word(self, g) -> Word:
        raise NotImplementedError

    def relators(self) -> list:
        return []

    def element_from_json(self, value):
        return self.from_word(value)

    def element_to_json(self, g):
        return list(self.to_word(g))


@dataclass(frozen=True)
class FreeAbelian(GroupModel):
    rank: int
    flavor = "free_abelian"

    def __post_init__(self):
        if self.rank < 0:
            raise GroupError("rank must be nonnegative")

    @property
    def ngens(self):
        return self.rank

    def identity(self):
        return (0,) * self.rank

    def mul(self, g, h):
        return tuple(a + b for a, b in zip(g, h))

    def inv(self, g):
        return tuple(-a for a in g)

    def is_identity(self, g):
        return not any(g)

    def generator(self, x):
        i = abs(x) - 1
        if not 0 <= i < self.rank:
            raise GroupError(f"generator {x} out of range for rank {self.rank}")
        v = [0] * self.rank
        v[i] = 1 if x > 0 else -1
        return tuple(v)

    def to_word(self, g):
        out: list[int] = []
        for i, e in enumerate(g):
            out.extend(word_power((i + 1,), e))
        return tuple(out)

    def relators(self):
        return [commutator((i,), (j,)) for i in range(1, self.rank + 1) for j in range(i + 1, self.rank + 1)]

    def element_from_json(self, value):
        # free abelian elements are exponent vectors
        v = tuple(int(a) for a in value)
        if len(v) != self.rank:
            raise GroupError(f"exponent vector {value} does not have length {self.rank}")
        return v

    def element_to_json(self, g):
        return list(g)

    def to_json(self):
        return {"flavor": "free_abelian", "rank": self.rank}


@dataclass(frozen=True)
class Free(GroupModel):
    rank: int
    flavor = "free"

    @property
    def ngens(self):
        return self.rank

    def identity(self):
        return ()

    def mul(self, g, h):
        return free_reduce(g + h)

    def inv(self, g):
        return invert_word(g)

    def is_identity(self, g):
        return len(g) == 0

    def generator(self, x):
        if not 1 <= abs(x) <= self.rank:
            raise GroupError(f"generator {x} out of range for rank {self.rank}")
        return (int(x),)

    def from_word(self, word):
        for x in word:
            self.generator(x)
        return free_reduce(word)

    def to_word(self, g):
        return tuple(g)

    def to_json(self):
        return {"flavor": "free", "rank": self.rank}


@dataclass(frozen=True)
class Finite(GroupModel):
    """Permutation group generated by ``images`` (each a tuple on range(degree))."""

    images: tuple
    declared_order: Optional[int] = None
    flavor = "finite"
    _elements: list = field(default=None, init=False, compare=False, repr=False)
    _table: tuple = field(default=None, init=False, compare=False, repr=False)

    def __post_init__(self):
        imgs = tuple(tuple(int(i) for i in p) for p in self.images)
        if not imgs:
            raise GroupError("finite group needs at least one generator image")
        d = len(imgs[0])
        for p in imgs:
            if len(p) != d or sorted(p) != list(range(d)):
                raise GroupError("generator images must be permutations of a common degree")
        object.__setattr__(self, "images", imgs)
        if self.declared_order is not None and self.declared_order != self.order():
            raise GroupError(f"declared order {self.declared_order} != generated order {self.order()}")

    @property
    def ngens(self):
        return len(self.images)

    @property
    def degree(self):
        return len(self.images[0])

    def identity(self):
        return tuple(range(self.degree))

    def mul(self, g, h):
        return perm_mul(g, h)

    def inv(self, g):
        return perm_inv(g)

    def generator(self, x):
        p = self.images[abs(x) - 1]
        return p if x > 0 else perm_inv(p)

    def elements(self) -> list:
        """All elements, breadth-first from the identity (deterministic order)."""
        if self._elements is None:
            e = self.identity()
            seen = {e}
            order = [e]
            queue = deque([e])
            while queue:
                g = queue.popleft()
                for p in self.images:
                    for s in (p, perm_inv(p)):
                        h = perm_mul(s, g)
                        if h not in seen:
                            seen.add(h)
                            order.append(h)
                            queue.append(h)
            object.__setattr__(self, "_elements", order)
        return self._elements

    def element_table(self):
        """(array of elements, row-bytes -> index) for vectorized products."""
        if self._table is None:
            arr = np.array(self.elements(), dtype=np.int64)
            index = {row.tobytes(): k for k, row in enumerate(arr)}
            object.__setattr__(self, "_table", (arr, index))
        return self._table

    def order(self):
        return len(self.elements())

    def to_word(self, g):
        # breadth-first search in the Cayley graph; only used for diagnostics
        e = self.identity()
        parent = {e: None}
        queue = deque([e])
        while queue:
            x = queue.popleft()
            if x == g:
                break
            for i in range(1, self.ngens + 1):
                for s in (i, -i):
                    y = perm_mul(self.generator(s), x)
                    if y not in parent:
                        parent[y] = (x, s)
                        queue.append(y)
        word = []
        x = g
        while parent[x] is not None:
            x, s = parent[x]
            word.append(s)
        return tuple(word)

    def element_from_json(self, value):
        return tuple(int(i) for i in value)

    def element_to_json(self, g):
        return list(g)

    def to_json(self):
        out = {"flavor": "finite", "images": [list(p) for p in self.images]}
        if self.declared_order is not None:
            out["order"] = self.declared_order
        return out


@dataclass(frozen=True)
class Presented(GroupModel):
    """Finitely presented group <x_1..x_n | relators>.

    ``normal_form`` maps a word to a canonical word; without one, equality is
    only decided conservatively through the finite ``quotients`` (tuples of
    generator images as permutations).  ``infinite_order`` lists words the
    user asserts to have infinite order.
    """

    generators: int
    relator_words: tuple = ()
    normal_form: Optional[Callable] = None
    quotients: tuple = ()
    infinite_order: tuple = ()
    flavor = "presented"

    def __post_init__(self):
        object.__setattr__(self, "relator_words", tuple(tuple(int(x) for x in r) for r in self.relator_words))
        object.__setattr__(self, "infinite_order", tuple(tuple(int(x) for x in w) for w in self.infinite_order))
        qs = tuple(tuple(tuple(int(i) for i in p) for p in imgs) for imgs in self.quotients)
        object.__setattr__(self, "quotients", qs)
        for r in self.relator_words:
            for x in r:
                if not 1 <= abs(x) <= self.generators:
                    raise GroupError(f"relator letter {x} out of range")
        for imgs in qs:
            if len(imgs) != self.generators:
                raise GroupError("quotient oracle must give one image per generator")
            for r in self.relator_words:
                if _eval_perm_word(imgs, r) != tuple(range(len(imgs[0]))):
                    raise GroupError(f"quotient oracle violates relator {list(r)}")

    @property
    def ngens(self):
        return self.generators

    def canonical(self, word) -> Word:
        w = free_reduce(word)
        if self.normal_form is not None:
            w = tuple(self.normal_form(w))
        return w

    def identity(self):
        return self.canonical(())

    def mul(self, g, h):
        return self.canonical(tuple(g) + tuple(h))

    def inv(self, g):
        return self.canonical(invert_word(g))

    def generator(self, x):
        if not 1 <= abs(x) <= self.generators:
            raise GroupError(f"generator {x} out of range")
        return self.canonical((int(x),))

    def from_word(self, word):
        for x in word:
            if not 1 <= abs(x) <= self.generators:
                raise GroupError(f"generator {x} out of range")
        return self.canonical(word)

    def to_word(self, g):
        return tuple(g)

    def relators(self):
        return list(self.relator_words)

    @property
    def decidable(self) -> bool:
        return self.normal_form is not None

    def oracle_signature(self, g) -> tuple:
        return tuple(_eval_perm_word(imgs, g) for imgs in self.quotients)

    def is_identity(self, g):
        if self.decidable or len(g) == 0:
            return g == self.identity()
        if self.quotients and any(s != tuple(range(len(s))) for s in self.oracle_signature(g)):
            return False
        raise UndecidableSupportCollision(
            f"cannot decide whether word {list(g)} is trivial without a normal form"
        )

    def to_json(self):
        out = {"flavor": "presented", "generators": self.generators,
               "relators": [list(r) for r in self.relator_words]}
        if self.normal_form is not None:
            if not hasattr(self.normal_form, "to_json"):
                raise GroupError("normal-form callback is not serializable")
            out["normalForm"] = self.normal_form.to_json()
        if self.quotients:
            out["quotients"] = [[list(p) for p in imgs] for imgs in self.quotients]
        if self.infinite_order:
            out["infiniteOrder"] = [list(w) for w in self.infinite_order]
        return out


def _eval_perm_word(images, word):
    d = len(images[0])
    g = tuple(range(d))
    for x in word:
        p = images[abs(x) - 1]
        g = perm_mul(g, p if x > 0 else perm_inv(p))
    return g


def group_from_json(data) -> GroupModel:
    flavor = data.get("flavor")
    if flavor == "free_abelian":
        return FreeAbelian(int(data["rank"]))
    if flavor == "free":
        return Free(int(data["rank"]))
    if flavor == "finite":
        return Finite(tuple(tuple(p) for p in data["images"]), data.get("order"))
    if flavor == "presented":
        return Presented(
            int(data["generators"]),
            tuple(tuple(r) for r in data.get("relators", [])),
            normal_form_from_json(data.get("normalForm")),
            tuple(tuple(tuple(p) for p in q) for q in data.get("quotients", [])),
            tuple(tuple(w) for w in data.get("infiniteOrder", [])),
        )
    raise GroupError(f"unknown group flavor {flavor!r}")


# ---------------------------------------------------------------------------
# constructors for groups with built-in normal forms


def torus_knot_group(p: int, q: int) -> Presented:
    """<a, b | a^p b^-q> with the amalgam normal form; a and b have infinite order."""
    if math.gcd(p, q) != 1:
        raise GroupError("p and q must be coprime")
    rel = (1,) * p + (-2,) * q
    return Presented(2, (rel,), TorusKnotNormalForm(p, q), (), ((1,), (2,)))


def central_product_group(nfree: int) -> Presented:
    """F_n x Z = <x_1..x_n, h | [x_i, h]>, h = generator n+1."""
    h = nfree + 1
    rels = tuple(commutator((i,), (h,)) for i in range(1, nfree + 1))
    return Presented(nfree + 1, rels, CentralNormalForm(h), (), ((h,),))


# ---------------------------------------------------------------------------
# finite quotients


@dataclass(frozen=True)
class FiniteQuotient:
    """Homomorphism from ``source`` onto the permutation group generated by ``images``."""

    source: GroupModel
    images: tuple

    def __post_init__(self):
        imgs = tuple(tuple(int(i) for i in p) for p in self.images)
        object.__setattr__(self, "images", imgs)
        if len(imgs) != self.source.ngens:
            raise GroupError(f"quotient gives {len(imgs)} images for {self.source.ngens} generators")
        object.__setattr__(self, "_target", Finite(imgs))
        for r in self.source.relators():
            if _eval_perm_word(imgs, r) != self.target.identity():
                raise GroupError(f"quotient images violate relator {list(r)}")

    @property
    def target(self) -> Finite:
        return self._target

    @property
    def order(self) -> int:
        return self.target.order()

    def image(self, g):
        if isinstance(self.source, FreeAbelian):
            out = self.target.identity()
            for i, e in enumerate(g):
                if e:
                    out = perm_mul(out, perm_pow(self.images[i], e))
            return out
        return _eval_perm_word(self.images, self.source.to_word(g))

    def to_json(self):
        return {"schema": "l2tor/quotient@1", "images": [list(p) for p in self.images]}


def cyclic_product_quotient(source: GroupModel, orders: Sequence[int]) -> FiniteQuotient:
    """Generator i maps to a cycle of length orders[i] on its own block of points."""
    if len(orders) != source.ngens:
        raise GroupError("need one cyclic order per generator")
    degree = sum(orders)
    images = []
    start = 0
    for n in orders:
        p = list(range(degree))
        for j in range(n):
            p[start + j] = start + (j + 1) % n
        images.append(tuple(p))
        start += n
    return FiniteQuotient(source, tuple(images))


def quotient_from_json(source: GroupModel, data) -> FiniteQuotient:
    if "orders" in data:
        return cyclic_product_quotient(source, [int(n) for n in data["orders"]])
    return FiniteQuotient(source, tuple(tuple(p) for p in data["images"]))
