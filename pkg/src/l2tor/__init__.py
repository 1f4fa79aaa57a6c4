"""Twisted L2-torsion of finite CW-complexes via Fuglede-Kadison determinants."""

__version__ = "0.1.0"
