"""The acceptance checks, shared by ``l2tor selftest`` and the test suite.

Each check returns a CriterionResult; ``quick`` shrinks the sample sizes
(used by ``selftest --quick``), the full run is what the test suite executes.
"""

from __future__ import annotations

import cmath
import math
import sys
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .closed_forms import (
    SeifertData,
    SeifertPiece,
    jsj_torsion,
    seifert_direct_torsion,
    seifert_torsion,
    torus_knot_torsion,
    unitary_hyperbolic_torsion,
    untwisted_hyperbolic_torsion,
)
from .complexes import torus_complex, twist
from .engines import (
    QuadratureConfig,
    fk_det_abelian,
    fk_det_finite_quotient,
    fk_det_gap_series,
    spectrum_finite_quotient,
)
from .fixtures import torus_knot_family, torus_knot_reducible
from .groups import FreeAbelian, cyclic_product_quotient
from .properties import random_gap_operator, run_fk_engine_suite, run_group_kernel_suite
from .representation import Representation, conjugate, random_sl2
from .ring import GroupRingMatrix
from .torsion import CERTIFIED_STATUS, EngineConfig, decomposition_torsion, torsion, torsion_along_path

# reference constants (the tampered-constant self-test patches one of these)
GOLDEN_LOG = math.log((3 + math.sqrt(5)) / 2)
TORUS_KNOT_CASES = ((2, 3), (2, 5), (3, 5))
SEED = 314159


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float
    budget: Optional[float] = None
    data: dict = field(default_factory=dict)

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        budget = f" (budget {self.budget:g}s)" if self.budget else ""
        return f"[{verdict}] criterion {self.number}: {self.name}: {self.detail}; {self.seconds:.2f}s{budget}"


def _timed(number: int, name: str, budget: Optional[float], fn: Callable[[], tuple]) -> CriterionResult:
    t0 = time.perf_counter()
    try:
        ok, detail, data = fn()
    except Exception as exc:  # a crash is a failure of the criterion, reported by name
        ok, detail, data = False, f"raised {type(exc).__name__}: {exc}", {}
    dt = time.perf_counter() - t0
    if ok and budget is not None and dt > budget:
        ok, detail = False, f"{detail}; over the time budget"
    return CriterionResult(number, name, ok, detail, dt, budget, data)


def _rel(a: float, b: float) -> float:
    """Relative deviation with a unit floor on the scale."""
    return abs(a - b) / max(1.0, abs(b))


# ---------------------------------------------------------------------------
# 1. torus identity


def check_torus_grid(quick: bool = False) -> CriterionResult:
    def run():
        mods = (0.5, 0.9, 1.0, 10 / 9, 2.0)
        phases = [2 * math.pi * j / 5 for j in range(5)]
        if quick:
            mods, phases = (0.5, 2.0), phases[:2]
        base = torus_complex()
        worst, certified, total = 0.0, 0, 0
        for r in mods:
            for ph in phases:
                lam = r * cmath.exp(1j * ph)
                m = np.diag([lam, 1 / lam])
                rep = Representation(base.group, (m, m @ m))
                res = torsion(twist(base, rep))
                total += 1
                if res.status == CERTIFIED_STATUS:
                    certified += 1
                    worst = max(worst, abs(res.log_tau))
        ok = worst <= 1e-6 and certified > 0
        return ok, f"max |logTau| = {worst:.2e} over {certified}/{total} certified reps", {"worst": worst}

    return _timed(1, "torus identity", 10.0, run)


# ---------------------------------------------------------------------------
# 2. torus-knot closed form


def check_torus_knots(quick: bool = False) -> CriterionResult:
    def run():
        worst = 0.0
        cases = TORUS_KNOT_CASES[:1] if quick else TORUS_KNOT_CASES
        for p, q in cases:
            for r in (2.0, 5.0):
                lam = r * cmath.exp(0.3j)
                base, rep = torus_knot_reducible(p, q, lam, offdiag=0.7 + 0.2j)
                res = decomposition_torsion(twist(base, rep))
                if "via decomposition" not in res.engine_trail or not all(
                        "cyclic reduction" in line for line in res.engine_trail[:2]):
                    return False, f"({p},{q}) did not go through decomposition + cyclic reduction", {}
                exact = torus_knot_torsion(p, q, lam)
                worst = max(worst, abs(res.log_tau - exact) / abs(exact))
        return worst <= 1e-9, f"max relative error {worst:.2e}", {"worst": worst}

    return _timed(2, "torus-knot closed form", 5.0, run)


# ---------------------------------------------------------------------------
# 3. Mahler measures


def check_mahler(quick: bool = False) -> CriterionResult:
    def run():
        z = FreeAbelian(1)
        cfg = QuadratureConfig(nodes=1024)
        cases = [("3+z+1/z", GroupRingMatrix.from_words(z, 1, 1, {(0, 0): [((), 3), ((1,), 1), ((-1,), 1)]}),
                  GOLDEN_LOG, 1e-8)]
        for lam, tol in ((0.5, 1e-8), (2.0, 1e-8), (1 - 1e-3, 1e-4), (1 + 1e-3, 1e-4)):
            op = GroupRingMatrix.from_words(z, 1, 1, {(0, 0): [((), 1), ((1,), -lam)]})
            cases.append((f"1-{lam:g}z", op, math.log(max(1.0, abs(lam))), tol))
        parts, ok, slowest = [], True, 0.0
        for name, op, exact, tol in cases:
            t0 = time.perf_counter()
            res = fk_det_abelian(op, cfg)
            dt = time.perf_counter() - t0
            slowest = max(slowest, dt)
            err = abs(res.log_det - exact)
            ok &= err <= tol and dt <= 1.0
            parts.append(f"{name}: {err:.1e}")
        return ok, ", ".join(parts) + f"; slowest {slowest:.3f}s", {}

    return _timed(3, "Mahler-measure engine", None, run)


# ---------------------------------------------------------------------------
# 4 and 5. engine cross-agreement and certified error soundness


def cross_agreement_operators(count: int = 25, seed: int = SEED):
    rng = np.random.default_rng(seed)
    ops = []
    for i in range(count):
        rank = 1 + i % 2
        size = int(rng.integers(1, 4))
        ops.append(random_gap_operator(rng, rank, size, radius=int(rng.integers(1, 4)), terms=3))
    return ops


def _quotient_for(op):
    return cyclic_product_quotient(op.group, [512] if op.group.rank == 1 else [16, 32])


def check_engine_agreement(quick: bool = False) -> CriterionResult:
    def run():
        ops = cross_agreement_operators(6 if quick else 25)
        worst_s, worst_q, worst_b = 0.0, 0.0, 0.0
        for op in ops:
            ab = fk_det_abelian(op)
            se = fk_det_gap_series(op)
            qv = fk_det_finite_quotient(op, _quotient_for(op))
            worst_b = max(worst_b, se.error_bound)
            worst_s = max(worst_s, abs(se.log_det - ab.log_det))
            worst_q = max(worst_q, abs(qv.log_det - ab.log_det))
        ok = worst_b <= 1e-9 and worst_s <= 1e-8 and worst_q <= 1e-3
        return ok, (f"{len(ops)} operators: series bound <= {worst_b:.1e}, |series - abelian| <= {worst_s:.1e}, "
                    f"|quotient - abelian| <= {worst_q:.1e}"), {}

    return _timed(4, "engine cross-agreement", 60.0, run)


def check_error_soundness(quick: bool = False) -> CriterionResult:
    def run():
        ops = cross_agreement_operators(6 if quick else 25)
        violations, checks, tightest = [], 0, math.inf
        for i, op in enumerate(ops):
            ab = fk_det_abelian(op)
            for k in (4, 8, 16, 32):
                se = fk_det_gap_series(op, max_terms=k)
                dev = abs(se.log_det - ab.log_det)
                checks += 1
                slack = se.error_bound + ab.uncertainty() - dev
                tightest = min(tightest, slack)
                if slack < 0:
                    violations.append(f"op {i}, K = {k}: bound {se.error_bound:.3e} < deviation {dev:.3e}")
        ok = not violations
        detail = f"{checks} (operator, K) pairs, {len(violations)} violations"
        if violations:
            detail += "; " + violations[0]
        return ok, detail, {"violations": violations}

    return _timed(5, "certified error soundness", None, run)


# ---------------------------------------------------------------------------
# 6. conjugation invariance


def _random_eigenvalue(rng) -> complex:
    mod = float(rng.choice([rng.uniform(0.5, 0.8), rng.uniform(1.25, 2.0)]))
    return mod * cmath.exp(1j * rng.uniform(0, 2 * math.pi))


def conjugation_triples(count: int = 20, seed: int = SEED + 6):
    rng = np.random.default_rng(seed)
    out = []
    base_t = torus_complex()
    for i in range(count):
        g = random_sl2(rng, max_cond=100.0)
        if i % 2 == 0:
            a, b = _random_eigenvalue(rng), _random_eigenvalue(rng)
            pmat = random_sl2(rng, max_cond=10.0)
            pinv = np.linalg.inv(pmat)
            rep = Representation(base_t.group, (pmat @ np.diag([a, 1 / a]) @ pinv,
                                                pmat @ np.diag([b, 1 / b]) @ pinv))
            out.append(("torus", base_t, rep, g))
        else:
            p, q = TORUS_KNOT_CASES[(i // 2) % 3]
            base, rep = torus_knot_reducible(p, q, _random_eigenvalue(rng), complex(*rng.standard_normal(2)))
            out.append((f"torus knot ({p},{q})", base, rep, g))
    return out


def check_conjugation(quick: bool = False) -> CriterionResult:
    def run():
        worst, which = 0.0, ""
        for name, base, rep, g in conjugation_triples(4 if quick else 20):
            r1 = torsion(twist(base, rep))
            r2 = torsion(twist(base, conjugate(rep, g)))
            if r1.status != CERTIFIED_STATUS or r2.status != CERTIFIED_STATUS:
                return False, f"{name}: status {r1.status}/{r2.status}", {}
            d = _rel(r2.log_tau, r1.log_tau)
            if d >= worst:
                worst, which = d, name
        return worst <= 1e-6, f"max relative deviation {worst:.1e} ({which})", {"worst": worst}

    return _timed(6, "conjugation invariance", 30.0, run)


# ---------------------------------------------------------------------------
# 7. Seifert and JSJ formulas


def random_seifert_data(count: int = 10, seed: int = SEED + 7):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        genus = int(rng.integers(0, 3))
        boundary = int(rng.integers(0, 3))
        fibers = []
        for _ in range(int(rng.integers(0, 4))):
            p = int(rng.integers(2, 8))
            q = int(rng.integers(1, p))
            while math.gcd(p, q) != 1:
                q = int(rng.integers(1, p))
            fibers.append((p, q))
        if 2 * genus + boundary + len(fibers) < 2:
            continue
        mod = 1.0 if len(out) % 2 == 0 else 2.0
        lam = mod * cmath.exp(1j * rng.uniform(0, 2 * math.pi))
        out.append(SeifertData(genus, boundary, tuple(fibers), lam))
    return out


def check_seifert(quick: bool = False) -> CriterionResult:
    def run():
        worst = 0.0
        data = random_seifert_data(4 if quick else 10)
        for d in data:
            worst = max(worst, abs(seifert_direct_torsion(d) - seifert_torsion(d)))
        graph = [SeifertPiece(SeifertData(0, 2, ((2, 1),), irreducible=True)),
                 SeifertPiece(SeifertData(1, 1, ((3, 1), (5, 2)), irreducible=True))]
        jsj = jsj_torsion(graph)
        ok = worst <= 1e-9 and jsj == 0.0
        return ok, f"{len(data)} Seifert data, max |direct - formula| = {worst:.1e}; JSJ value {jsj!r}", {}

    return _timed(7, "Seifert/JSJ formulas", None, run)


# ---------------------------------------------------------------------------
# 8. unitary / volume arithmetic


def check_volume(quick: bool = False) -> CriterionResult:
    def run():
        rng = np.random.default_rng(SEED + 8)
        first = unitary_hyperbolic_torsion(6 * math.pi)
        vols = [float(v) for v in rng.uniform(0.5, 20.0, size=5)]
        exact = all(unitary_hyperbolic_torsion(v) == 2 * untwisted_hyperbolic_torsion(v) for v in vols)
        ok = first == -2.0 and exact
        return ok, f"value at 6 pi = {first!r}; doubling identity exact on {len(vols)} volumes: {exact}", {}

    return _timed(8, "unitary/volume arithmetic", None, run)


# ---------------------------------------------------------------------------
# 9. gap probe


def torus_laplacian(lam: complex, mu: complex) -> GroupRingMatrix:
    base = torus_complex()
    rep = Representation(base.group, (np.diag([lam, 1 / lam]), np.diag([mu, 1 / mu])))
    return twist(base, rep).laplacian(1)


def check_gap_probe(quick: bool = False) -> CriterionResult:
    def run():
        quot = cyclic_product_quotient(FreeAbelian(2), [32, 32])
        gapped = float(spectrum_finite_quotient(torus_laplacian(2.0, 2.0), quot, 4)[0])
        omega = cmath.exp(2j * math.pi * 3 / 32)  # a character of (Z/32)^2
        aligned = float(spectrum_finite_quotient(torus_laplacian(omega, omega ** 2), quot, 4)[0])
        ok = gapped >= 0.1 and aligned <= 1e-3
        return ok, f"min eigenvalue {gapped:.4f} at |lambda| = 2, {aligned:.1e} at the aligned unitary rep", {}

    return _timed(9, "gap probe", 5.0, run)


# ---------------------------------------------------------------------------
# 10. analyticity smoke test


def check_scan(quick: bool = False) -> CriterionResult:
    def run():
        base, path = torus_knot_family(2, 3, 2.0, 3.0, grid=65)
        scan = torsion_along_path(base, path, EngineConfig())
        if scan.second_differences is None:
            return False, f"scan refused: {scan.smoothness}", {}
        ts = path.ts()
        worst = max(abs(d2 + (1 / 6) / (2 + t) ** 2) for d2, t in zip(scan.second_differences, ts[1:-1]))
        vals = max(abs(s.result.log_tau - math.log(2 + s.t) / 6) for s in scan.samples)
        ok = worst <= 1e-4
        return ok, f"max second-difference error {worst:.1e} (values within {vals:.1e})", {}

    return _timed(10, "analyticity smoke test", 20.0, run)


# ---------------------------------------------------------------------------
# 11. property suites


def check_properties(quick: bool = False) -> CriterionResult:
    def run():
        n = 100 if quick else 1000
        reports = [run_group_kernel_suite(n), run_fk_engine_suite(n)]
        bad = [f for r in reports for f in r.failures]
        detail = ", ".join(f"{r.name}: {r.cases} cases, {len(r.failures)} failures" for r in reports)
        if bad:
            detail += "; first: " + bad[0]
        return not bad, detail, {}

    return _timed(11, "property suites", None, run)


CHECKS = (
    check_torus_grid,
    check_torus_knots,
    check_mahler,
    check_engine_agreement,
    check_error_soundness,
    check_conjugation,
    check_seifert,
    check_volume,
    check_gap_probe,
    check_scan,
    check_properties,
)


def run_all(quick: bool = False, stream=None) -> list:
    out = []
    for check in CHECKS:
        res = check(quick)
        out.append(res)
        if stream is not None:
            print(res.line(), file=stream)
            stream.flush()
    return out


if __name__ == "__main__":  # pragma: no cover
    results = run_all("--quick" in sys.argv, sys.stdout)
    sys.exit(0 if all(r.passed for r in results) else 1)
