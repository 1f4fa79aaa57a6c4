"""Twisted L2-torsion: per-degree determinants, engine routing and status accounting."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .complexes import CWDatum, TwistedComplex, check_chain_identity, twist
from .engines import (
    CERTIFIED,
    EXACT_QUADRATURE,
    HEURISTIC,
    EngineError,
    FKResult,
    GapNotCertified,
    QuadratureConfig,
    ResourceLimit,
    certify_gap,
    fk_det_abelian,
    fk_det_finite_quotient,
    fk_det_gap_series,
)
from .engines.quotient import push_forward
from .groups import FiniteQuotient, FreeAbelian, Presented, UndecidableSupportCollision
from .representation import RepresentationPath, sample_path
from .ring import GroupRingMatrix, cyclic_reduction

CERTIFIED_STATUS = "certified"
HEURISTIC_STATUS = "heuristic"
ZERO_STATUS = "zeroByConvention"
UNKNOWN_STATUS = "unknown"
_RANK = {CERTIFIED_STATUS: 0, HEURISTIC_STATUS: 1, UNKNOWN_STATUS: 2, ZERO_STATUS: 3}


class TorsionError(RuntimeError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    engine: str = "auto"  # auto | abelian | series | quotient
    method: str = "auto"  # auto | laplacian | decomposition
    quadrature: QuadratureConfig = QuadratureConfig()
    max_terms: Optional[int] = None
    series_target: float = 1e-10
    quotient: Optional[FiniteQuotient] = None
    chain_tol: float = 1e-10

    def __post_init__(self):
        if self.engine not in ("auto", "abelian", "series", "quotient"):
            raise ValueError(f"unknown engine {self.engine!r}")
        if self.method not in ("auto", "laplacian", "decomposition"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass
class DegreeResult:
    degree: int
    weight: int
    fk: Optional[FKResult]
    note: str = ""

    @property
    def log_det(self):
        return None if self.fk is None else self.fk.log_det

    def to_json(self):
        out = {"p": self.degree, "weight": self.weight,
               "logDet": None if self.fk is None else self.fk.to_json()["logDet"]}
        if self.fk is not None:
            out["fk"] = self.fk.to_json()
        if self.note:
            out["note"] = self.note
        return out


@dataclass
class TorsionResult:
    log_tau: float
    per_degree: list
    status: str
    engine_trail: list
    method: str
    error: float = 0.0
    chain_residual: float = 0.0

    def to_json(self):
        lt = self.log_tau
        return {
            "schema": "l2tor/torsion@1",
            "logTau": lt if math.isfinite(lt) else ("-inf" if lt < 0 else None),
            "status": self.status,
            "method": self.method,
            "errorEstimate": self.error if math.isfinite(self.error) else None,
            "chainResidual": self.chain_residual,
            "perDegree": [d.to_json() for d in self.per_degree],
            "engineTrail": list(self.engine_trail),
        }


def _fk_status(fk: Optional[FKResult]) -> str:
    if fk is None:
        return UNKNOWN_STATUS
    if fk.zero_determinant:
        return ZERO_STATUS
    if fk.certification in (CERTIFIED, EXACT_QUADRATURE):
        return CERTIFIED_STATUS
    return HEURISTIC_STATUS


# ---------------------------------------------------------------------------
# single determinants


def fk_det(op: GroupRingMatrix, cfg: EngineConfig, trail: list, label: str,
           self_adjoint: bool = True, require: bool = False) -> Optional[FKResult]:
    """Route one determinant through abelian -> series -> quotient."""
    if op.rows == 0 and op.cols == 0:
        trail.append(f"{label}: empty")
        return FKResult(0.0, EXACT_QUADRATURE, "trivial", estimated_error=0.0, order=0)
    if op.is_zero():
        trail.append(f"{label}: zero operator")
        return FKResult(-math.inf, EXACT_QUADRATURE, "trivial", estimated_error=0.0, order=0,
                        status="zero determinant", flags=["zero operator"])
    reasons = []
    if cfg.engine in ("auto", "abelian"):
        if isinstance(op.group, FreeAbelian):
            trail.append(f"{label}: abelian")
            return fk_det_abelian(op, cfg.quadrature)
        red = cyclic_reduction(op)
        if red is not None:
            trail.append(f"{label}: abelian via cyclic reduction")
            res = fk_det_abelian(red[0], cfg.quadrature)
            res.flags.append("cyclic reduction")
            return res
        reasons.append("support not abelian or cyclic")
    if cfg.engine in ("auto", "series"):
        sa = op if self_adjoint else None
        factor = 1.0
        try:
            if sa is None:
                sa = op.adjoint() @ op if op.rows >= op.cols else op @ op.adjoint()
                factor = 0.5
            res = fk_det_gap_series(sa, max_terms=cfg.max_terms, target=cfg.series_target)
            if factor != 1.0:
                res = FKResult(factor * res.log_det, res.certification, res.engine, factor * res.error_bound,
                               order=res.order, gap_enclosure=res.gap_enclosure, flags=res.flags + ["gram"],
                               diagnostics=res.diagnostics)
            trail.append(f"{label}: series")
            return res
        except (GapNotCertified, ResourceLimit, UndecidableSupportCollision) as exc:
            reasons.append(f"series: {exc}")
    if cfg.quotient is not None and cfg.engine in ("auto", "quotient"):
        trail.append(f"{label}: quotient (order {cfg.quotient.order})")
        return fk_det_finite_quotient(op, cfg.quotient)
    msg = f"{label}: no engine applies ({'; '.join(reasons) or 'quotient not supplied'})"
    trail.append(msg)
    if require:
        raise TorsionError(msg)
    return None


# ---------------------------------------------------------------------------
# decomposition shortcut


def three_term_degree(ranks: Sequence[int]) -> Optional[int]:
    """Middle degree q when the complex is 0 -> C_{q+1} -> C_q -> C_{q-1} -> 0 with n_q = n_{q-1} + n_{q+1}."""
    nz = [p for p, n in enumerate(ranks) if n]
    if not nz or nz[-1] - nz[0] != 2:
        return None
    q = nz[0] + 1
    return q if ranks[q] == ranks[q - 1] + ranks[q + 1] else None


def decomposition_torsion(tc: TwistedComplex, cfg: EngineConfig = EngineConfig(),
                          rows: Optional[Sequence[int]] = None, cols: Optional[Sequence[int]] = None,
                          require_certified: bool = True) -> TorsionResult:
    """Torsion of 0 -> C^k -A-> C^(k+l) -B-> C^l -> 0 from the square blocks A' and B'.

    A' keeps k rows of A (default: the first k), B' keeps l columns of B
    (default: the last l); log tau = (-1)^(q+1) (log det A' - log det B')
    for the complex sitting in degrees q+1, q, q-1.
    """
    if all(n == 0 for n in tc.ranks):
        return TorsionResult(0.0, [], CERTIFIED_STATUS, ["empty complex"], "decomposition")
    q = three_term_degree(tc.ranks)
    if q is None:
        raise TorsionError(f"ranks {list(tc.ranks)} do not form a 3-term complex 0 -> C^k -> C^(k+l) -> C^l -> 0")
    a = tc.differential(q + 1)
    b = tc.differential(q)
    k, l = tc.rank(q + 1), tc.rank(q - 1)
    rows = list(range(k)) if rows is None else list(rows)
    cols = list(range(k, k + l)) if cols is None else list(cols)
    if len(rows) != k or len(cols) != l:
        raise TorsionError(f"split must select {k} rows of A and {l} columns of B")
    a1 = a.submatrix(rows, range(k))
    b1 = b.submatrix(range(l), cols)
    trail: list = []
    fa = fk_det(a1, cfg, trail, "A'", self_adjoint=False)
    fb = fk_det(b1, cfg, trail, "B'", self_adjoint=False)
    for name, f in (("A'", fa), ("B'", fb)):
        if f is None or f.zero_determinant or (require_certified and not f.trusted):
            why = "no engine" if f is None else (f.status if f.zero_determinant else f.certification)
            raise TorsionError(f"{name} not certified invertible ({why})")
    sign = 1 if (q + 1) % 2 == 0 else -1
    log_tau = sign * (fa.log_det - fb.log_det)
    status = CERTIFIED_STATUS if fa.trusted and fb.trusted else HEURISTIC_STATUS
    per = [DegreeResult(q + 1, sign, fa, "A'"), DegreeResult(q - 1, -sign, fb, "B'")]
    trail.append("via decomposition")
    return TorsionResult(log_tau, per, status, trail, "decomposition", fa.uncertainty() + fb.uncertainty(),
                         check_chain_identity(tc))


def _decomposition_applicable(tc: TwistedComplex) -> bool:
    q = three_term_degree(tc.ranks)
    if q is None:
        return False
    k, l = tc.rank(q + 1), tc.rank(q - 1)
    a1 = tc.differential(q + 1).submatrix(range(k), range(k))
    b1 = tc.differential(q).submatrix(range(l), range(k, k + l))
    return all(cyclic_reduction(m) is not None for m in (a1, b1))


# ---------------------------------------------------------------------------
# full torsion


def _quotient_laplacians(tc: TwistedComplex, quotient: FiniteQuotient, trail: list):
    """Laplacian log-determinants computed from pushed differentials (no group-ring products)."""
    pushed = {p: push_forward(tc.differential(p), quotient) for p in range(1, tc.dimension + 1)}
    nq = quotient.order
    out = {}
    for p in range(1, tc.dimension + 1):
        dp = pushed[p]
        lap = (dp.getH() @ dp)
        if p + 1 in pushed:
            dq = pushed[p + 1]
            lap = lap + dq @ dq.getH()
        dense = lap.toarray()
        ev = np.abs(np.linalg.eigvalsh(0.5 * (dense + dense.conj().T)))
        top = float(ev.max()) if ev.size else 0.0
        keep = ev > 1e-12 * top if top > 0 else np.zeros(ev.shape, dtype=bool)
        kernel = int(ev.size - keep.sum())
        # an all-kernel finite matrix is evidence only, never an affirmative verdict
        fk = FKResult(float(np.sum(np.log(ev[keep]))) / nq if keep.any() else math.nan, HEURISTIC, "quotient",
                      flags=["kernel detected"] if kernel else [],
                      diagnostics={"quotientOrder": nq, "kernelDim": kernel})
        trail.append(f"Delta_{p}: quotient from pushed differentials (order {nq})")
        out[p] = fk
    return out


def torsion(tc: TwistedComplex, cfg: EngineConfig = EngineConfig()) -> TorsionResult:
    residual = check_chain_identity(tc) if not _undecidable(tc) else 0.0
    scale = max([d.max_abs_coefficient() for d in tc.differentials] + [1.0])
    if residual > cfg.chain_tol * scale ** 2:
        raise TorsionError(f"d o d residual {residual:.3g} exceeds tolerance")
    if all(n == 0 for n in tc.ranks):
        return TorsionResult(0.0, [], CERTIFIED_STATUS, ["empty complex"], "laplacian", 0.0, residual)
    if cfg.method == "decomposition" or (
        cfg.method == "auto" and cfg.engine in ("auto", "abelian")
        and not isinstance(tc.group, FreeAbelian) and not _undecidable(tc) and _decomposition_applicable(tc)
    ):
        res = decomposition_torsion(tc, cfg, require_certified=cfg.method == "auto")
        res.chain_residual = residual
        return res
    trail: list = []
    per = [DegreeResult(0, 0, None, "weight zero, not evaluated")]
    if _undecidable(tc):
        if cfg.quotient is None:
            raise TorsionError("group has no normal form; supply a finite quotient")
        fks = _quotient_laplacians(tc, cfg.quotient, trail)
        per += [DegreeResult(p, (-1) ** p * p, fks[p]) for p in range(1, tc.dimension + 1)]
    else:
        for p in range(1, tc.dimension + 1):
            fk = fk_det(tc.laplacian(p), cfg, trail, f"Delta_{p}")
            per.append(DegreeResult(p, (-1) ** p * p, fk))
    return _combine(per, trail, residual)


def _undecidable(tc: TwistedComplex) -> bool:
    return isinstance(tc.group, Presented) and not tc.group.decidable


def _combine(per: list, trail: list, residual: float) -> TorsionResult:
    status = CERTIFIED_STATUS
    log_tau = 0.0
    err = 0.0
    for d in per:
        if d.weight == 0:
            continue
        st = _fk_status(d.fk)
        if d.fk is not None and d.fk.certification == HEURISTIC and not math.isfinite(d.fk.log_det):
            st = UNKNOWN_STATUS
        if _RANK[st] > _RANK[status]:
            status = st
        if d.fk is not None and math.isfinite(d.fk.log_det):
            log_tau += 0.5 * d.weight * d.fk.log_det
            err += 0.5 * abs(d.weight) * d.fk.uncertainty()
    if status == ZERO_STATUS:
        log_tau = -math.inf
        trail.append("tau = 0 by convention (Laplacian kernel detected)")
    elif status == UNKNOWN_STATUS:
        log_tau = math.nan
    return TorsionResult(log_tau, per, status, trail, "laplacian", err, residual)


# ---------------------------------------------------------------------------
# diagnostics and path scans


@dataclass
class DegreeDiagnostic:
    degree: int
    verdict: str  # gap-certified | kernel-detected | inconclusive
    gap_enclosure: Optional[tuple] = None
    kernel_dim: Optional[int] = None
    low_spectrum: Optional[list] = None
    note: str = ""

    def to_json(self):
        out = {"p": self.degree, "verdict": self.verdict}
        if self.gap_enclosure is not None:
            out["gapEnclosure"] = list(self.gap_enclosure)
        if self.kernel_dim is not None:
            out["kernelDim"] = self.kernel_dim
        if self.low_spectrum is not None:
            out["lowSpectrum"] = self.low_spectrum
        if self.note:
            out["note"] = self.note
        return out


def acyclicity_diagnostics(tc: TwistedComplex, cfg: EngineConfig = EngineConfig(), count: int = 8) -> list:
    from .engines import spectrum_finite_quotient

    out = []
    for p in range(tc.dimension + 1):
        lap = tc.laplacian(p)
        if lap.rows == 0:
            out.append(DegreeDiagnostic(p, "gap-certified", None, 0, note="zero module"))
            continue
        if lap.is_zero():
            out.append(DegreeDiagnostic(p, "kernel-detected", None, lap.rows * lap.block_size, note="Delta is zero"))
            continue
        cert = certify_gap(lap)
        if cert is not None:
            out.append(DegreeDiagnostic(p, "gap-certified", cert.enclosure))
            continue
        diag = DegreeDiagnostic(p, "inconclusive")
        if isinstance(lap.group, FreeAbelian) or cyclic_reduction(lap) is not None:
            op = lap if isinstance(lap.group, FreeAbelian) else cyclic_reduction(lap)[0]
            fk = fk_det_abelian(op, cfg.quadrature)
            if fk.zero_determinant:
                diag.verdict, diag.note = "kernel-detected", "symbol determinant vanishes identically"
            elif any("no spectral gap" in f for f in fk.flags):
                # zeros on a null set of the dual torus: no gap, but the L2 kernel is still zero
                diag.kernel_dim = 0
                diag.note = "no spectral gap; symbol determinant vanishes only on a null set"
        if cfg.quotient is not None:
            low = spectrum_finite_quotient(lap, cfg.quotient, count)
            top = float(spectrum_finite_quotient(lap, cfg.quotient).max()) if lap.rows * lap.block_size * cfg.quotient.order <= 512 \
                else float(np.abs(low).max())
            kern = int(np.sum(np.abs(low) <= 1e-10 * max(top, 1.0)))
            diag.low_spectrum = [float(x) for x in low]
            diag.kernel_dim = kern
            if kern and diag.verdict == "inconclusive":
                diag.verdict, diag.note = "kernel-detected", "finite-quotient kernel"
        out.append(diag)
    return out


def worker_count(default: Optional[int] = None) -> int:
    env = os.environ.get("L2TOR_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return default or min(8, os.cpu_count() or 1)


@dataclass
class PathSample:
    t: float
    result: Optional[TorsionResult] = None
    error: Optional[str] = None


@dataclass
class PathScan:
    samples: list
    second_differences: Optional[list]
    smoothness: str

    def to_json(self):
        rows = []
        for s in self.samples:
            row = {"t": s.t}
            if s.result is not None:
                lt = s.result.log_tau
                row.update({"logTau": lt if math.isfinite(lt) else None, "status": s.result.status,
                            "gap": _min_gap(s.result)})
            else:
                row.update({"logTau": None, "status": "error", "error": s.error})
            rows.append(row)
        return {"schema": "l2tor/scan@1", "rows": rows, "secondDifferences": self.second_differences,
                "smoothness": self.smoothness}


def _min_gap(res: TorsionResult):
    gaps = [d.fk.gap_enclosure[0] for d in res.per_degree if d.fk is not None and d.fk.gap_enclosure]
    return min(gaps) if gaps else None


def torsion_along_path(base: CWDatum, path: RepresentationPath, cfg: EngineConfig = EngineConfig(),
                       threads: Optional[int] = None) -> PathScan:
    ts = path.ts()

    def one(t):
        try:
            rep = sample_path(path, t)
            return PathSample(t, torsion(twist(base, rep, path.tol), cfg))
        except (ValueError, RuntimeError) as exc:
            return PathSample(t, error=str(exc))

    n = threads or worker_count()
    if n > 1 and len(ts) > 1:
        with ThreadPoolExecutor(max_workers=n) as pool:
            samples = list(pool.map(one, ts))
    else:
        samples = [one(t) for t in ts]
    ok = all(s.result is not None and s.result.status == CERTIFIED_STATUS for s in samples)
    if not ok:
        return PathScan(samples, None, "refused: some samples are not certified")
    if len(ts) < 3:
        return PathScan(samples, [], "insufficient samples")
    h = ts[1] - ts[0]
    f = [s.result.log_tau for s in samples]
    d2 = [(f[i - 1] - 2 * f[i] + f[i + 1]) / h ** 2 for i in range(1, len(f) - 1)]
    return PathScan(samples, d2, "ok")


acyclicityDiagnostics = acyclicity_diagnostics
torsionAlongPath = torsion_along_path
decompositionTorsion = decomposition_torsion
