"""SL2(C) representations of finitely generated groups and paths through them."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .groups import FreeAbelian, GroupModel

VALIDATION_TOL = 1e-9
PATH_TOL = 1e-7


class RepresentationError(ValueError):
    pass


def _as_sl2(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.shape != (2, 2):
        raise RepresentationError(f"generator image must be 2x2, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise RepresentationError("generator image has non-finite entries")
    return a


def inv2(a: np.ndarray) -> np.ndarray:
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    if det == 0:
        raise RepresentationError("singular matrix")
    return np.array([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]]) / det


@dataclass(frozen=True)
class Representation:
    group: GroupModel
    images: tuple
    _inverses: tuple = field(default=None, init=False, compare=False, repr=False)

    def __post_init__(self):
        imgs = tuple(_as_sl2(m) for m in self.images)
        if len(imgs) != self.group.ngens:
            raise RepresentationError(f"{len(imgs)} images for {self.group.ngens} generators")
        for m in imgs:
            m.setflags(write=False)
        object.__setattr__(self, "images", imgs)
        object.__setattr__(self, "_inverses", tuple(inv2(m) for m in imgs))

    def image_of_word(self, word: Sequence[int]) -> np.ndarray:
        out = np.eye(2, dtype=complex)
        for x in word:
            out = out @ (self.images[x - 1] if x > 0 else self._inverses[-x - 1])
        return out

    def image(self, g) -> np.ndarray:
        """Image of a group element key of ``self.group``."""
        if isinstance(self.group, FreeAbelian):
            out = np.eye(2, dtype=complex)
            for i, e in enumerate(g):
                if e:
                    out = out @ np.linalg.matrix_power(self.images[i] if e > 0 else self._inverses[i], abs(e))
            return out
        return self.image_of_word(self.group.to_word(g))

    @property
    def relation_residual(self) -> float:
        res = 0.0
        for r in self.group.relators():
            res = max(res, float(np.linalg.norm(self.image_of_word(r) - np.eye(2), "fro")))
        return res

    @property
    def unimodularity_residual(self) -> float:
        return max((abs(np.linalg.det(m) - 1) for m in self.images), default=0.0)

    def to_json(self):
        return {"images": [[[[float(x.real), float(x.imag)] for x in row] for row in m] for m in self.images]}


def trivial_representation(group: GroupModel) -> Representation:
    return Representation(group, tuple(np.eye(2) for _ in range(group.ngens)))


def diagonal_representation(group: GroupModel, eigenvalues: Sequence[complex]) -> Representation:
    return Representation(group, tuple(np.diag([lam, 1 / lam]) for lam in eigenvalues))


@dataclass
class Validation:
    accepted: bool
    relation_residual: float
    unimodularity_residual: float


def validate(rep: Representation, tol: float = VALIDATION_TOL) -> Validation:
    rr = rep.relation_residual
    ur = rep.unimodularity_residual
    return Validation(rr <= tol and ur <= tol, rr, ur)


def conjugate(rep: Representation, g, tol: float = VALIDATION_TOL) -> Representation:
    g = _as_sl2(g)
    det = np.linalg.det(g)
    if abs(det) < 1e-300:
        raise RepresentationError("conjugator is singular")
    if abs(det - 1) > tol:
        raise RepresentationError(f"conjugator has det {det}, not in SL2")
    gi = inv2(g)
    return Representation(rep.group, tuple(g @ m @ gi for m in rep.images))


def _is_central(m, tol):
    return abs(m[0, 1]) <= tol and abs(m[1, 0]) <= tol and abs(m[0, 0] - m[1, 1]) <= tol


def common_eigenvectors(rep: Representation, tol: float = VALIDATION_TOL) -> list:
    """Unit vectors that are eigenvectors of every generator image (within tol)."""
    noncentral = [m for m in rep.images if not _is_central(m, tol)]
    if not noncentral:
        return [np.array([1.0, 0.0], dtype=complex)]
    _, vecs = np.linalg.eig(noncentral[0])
    out = []
    for v in vecs.T:
        v = v / np.linalg.norm(v)
        proj = np.eye(2) - np.outer(v, v.conj())
        if all(np.linalg.norm(proj @ (m @ v)) <= tol * max(1.0, np.linalg.norm(m, 2)) for m in rep.images):
            out.append(v)
    return out


def irreducibility_test(rep: Representation, tol: float = VALIDATION_TOL) -> bool:
    return not common_eigenvectors(rep, tol)


def reducible_eigenvalue(rep: Representation, phi: Sequence[int], tol: float = 1e-7) -> complex:
    """lambda with rho(g) v = lambda^phi(g) v on a common eigenvector v; |lambda| >= 1."""
    if len(phi) != len(rep.images):
        raise RepresentationError("phi needs one integer per generator")
    vecs = common_eigenvectors(rep, tol)
    if not vecs:
        raise RepresentationError("representation has no common eigenvector")
    v = vecs[0]
    eig = [complex(np.vdot(v, m @ v)) for m in rep.images]
    # Bezout combination gives lambda^gcd
    g = 0
    coef = []
    for k in phi:
        g, a, b = _ext_gcd(g, int(k))
        coef = [c * a for c in coef] + [b]
    if g == 0:
        if all(abs(e - 1) <= tol for e in eig):
            return 1.0 + 0j
        raise RepresentationError("phi is zero but eigenvalues are not 1")
    logmu = sum(c * cmath.log(e) for c, e in zip(coef, eig))  # log of lambda^g
    for j in range(g):
        lam = cmath.exp((logmu + 2j * math.pi * j) / g)
        if all(abs(lam ** int(k) - e) <= tol * max(1.0, abs(e)) for k, e in zip(phi, eig)):
            return lam if abs(lam) >= 1 else 1 / lam
    raise RepresentationError("eigenvalues are not consistent with a single lambda")


def _ext_gcd(a, b):
    """Returns (g, x, y) with g = a x + b y, g >= 0."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q = a // b
        a, b = b, a - q * b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def character_coordinates(rep: Representation, words: Sequence[Sequence[int]]) -> list:
    return [complex(np.trace(rep.image_of_word(w))) for w in words]


# ---------------------------------------------------------------------------
# paths


@dataclass(frozen=True)
class RepresentationPath:
    """Either piecewise-linear keyframes or a diagonal eigenvalue family.

    Keyframes are blended entrywise and each blended image is rescaled to
    determinant 1; relations are not restored, so a sample off the
    representation variety fails validation.

    Diagonal family: lambda(t) moves linearly between the two ends of
    ``eigenvalue_path`` and generator i maps to diag(lambda^e_i, lambda^-e_i)
    with ``exponents[i]`` (principal branch for non-integer e_i).
    """

    group: GroupModel
    keyframes: tuple = ()
    eigenvalue_path: tuple = ()
    exponents: tuple = ()
    grid: int = 65
    tol: float = PATH_TOL

    def __post_init__(self):
        if bool(self.keyframes) == bool(self.eigenvalue_path):
            raise RepresentationError("path needs exactly one of keyframes or an eigenvalue family")
        if self.eigenvalue_path:
            if len(self.eigenvalue_path) != 2:
                raise RepresentationError("eigenvalue path needs start and end values")
            if not self.exponents:
                object.__setattr__(self, "exponents", (1.0,) * self.group.ngens)
            if len(self.exponents) != self.group.ngens:
                raise RepresentationError("need one exponent per generator")
        if self.grid < 1:
            raise RepresentationError("grid must be positive")

    @property
    def family(self) -> str:
        return "diagonal" if self.eigenvalue_path else "keyframes"

    def ts(self) -> list:
        if self.grid == 1:
            return [0.0]
        return [i / (self.grid - 1) for i in range(self.grid)]

    def eigenvalue(self, t: float) -> complex:
        a, b = self.eigenvalue_path
        return complex(a) + t * (complex(b) - complex(a))


def _unit_det(m: np.ndarray) -> np.ndarray:
    """Rescale by det^(-1/2); the linear blend of two SL2 matrices is usually not in SL2."""
    d = complex(np.linalg.det(m))
    if abs(d) < 1e-300:
        return m
    return m / cmath.sqrt(d)


def sample_path(path: RepresentationPath, t: float) -> Representation:
    if not 0.0 <= t <= 1.0:
        raise RepresentationError(f"t = {t} outside [0, 1]")
    if path.family == "diagonal":
        lam = path.eigenvalue(t)
        if lam == 0:
            raise RepresentationError(f"eigenvalue vanishes at t = {t}")
        imgs = []
        for e in path.exponents:
            mu = lam ** int(e) if float(e).is_integer() else cmath.exp(e * cmath.log(lam))
            imgs.append(np.diag([mu, 1 / mu]))
        rep = Representation(path.group, tuple(imgs))
    else:
        frames = path.keyframes
        if len(frames) == 1 or t == 0.0:
            rep = frames[0]
        else:
            x = t * (len(frames) - 1)
            i = min(int(math.floor(x)), len(frames) - 2)
            s = x - i
            if s == 0.0:
                rep = frames[i]
            else:
                a, b = frames[i], frames[i + 1]
                mixed = [(1 - s) * p + s * q for p, q in zip(a.images, b.images)]
                rep = Representation(path.group, tuple(_unit_det(m) for m in mixed))
    v = validate(rep, path.tol)
    if not v.accepted:
        raise RepresentationError(
            f"sample at t = {t} fails validation (relation residual {v.relation_residual:.3g}, "
            f"det residual {v.unimodularity_residual:.3g})"
        )
    return rep


def random_sl2(rng: np.random.Generator, scale: float = 1.0, max_cond: Optional[float] = None) -> np.ndarray:
    """Random SL2(C) matrix; resampled until its condition number is <= max_cond."""
    while True:
        m = scale * (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
        d = np.linalg.det(m)
        if abs(d) < 1e-3:
            continue
        m = m / np.sqrt(d)
        if max_cond is None or np.linalg.cond(m) <= max_cond:
            return m


# camelCase names used in the documented operation list
irreducibilityTest = irreducibility_test
reducibleEigenvalue = reducible_eigenvalue
characterCoordinates = character_coordinates
samplePath = sample_path
