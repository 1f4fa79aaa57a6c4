"""Ready-made (complex, representation) pairs used by the CLI generators and the self-test."""

from __future__ import annotations

import cmath

import numpy as np

from .complexes import torus_complex, torus_knot_complex
from .representation import Representation, RepresentationError, RepresentationPath


def torus_diagonal(m_eig: complex, l_eig: complex):
    base = torus_complex()
    rep = Representation(base.group, (np.diag([m_eig, 1 / m_eig]), np.diag([l_eig, 1 / l_eig])))
    return base, rep


def torus_knot_reducible(p: int, q: int, lam: complex, offdiag: complex = 0.0):
    """Upper-triangular rep of <a, b | a^p b^-q> with h = a^p = b^q -> diag(lam, 1/lam)."""
    base = torus_knot_complex(p, q)
    t = cmath.exp(cmath.log(lam) / (p * q))
    ta, tb = t ** q, t ** p
    if offdiag != 0 and abs(ta - 1 / ta) < 1e-12:
        raise RepresentationError("off-diagonal entry needs rho(a) with distinct eigenvalues")
    y = offdiag * (tb - 1 / tb) / (ta - 1 / ta) if offdiag != 0 else 0.0
    a = np.array([[ta, offdiag], [0, 1 / ta]], dtype=complex)
    b = np.array([[tb, y], [0, 1 / tb]], dtype=complex)
    return base, Representation(base.group, (a, b))


def torus_knot_family(p: int, q: int, start: complex, end: complex, grid: int = 65):
    """Diagonal family lambda(t) with a -> lambda^(1/p), b -> lambda^(1/q)."""
    base = torus_knot_complex(p, q)
    return base, RepresentationPath(base.group, (), (complex(start), complex(end)), (1 / p, 1 / q), grid)

