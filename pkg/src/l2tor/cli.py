"""Command-line interface: ``l2tor <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import io as _io
import sys
import time

from . import __version__
from . import io as lio
from .closed_forms import (
    SeifertData,
    jsj_torsion,
    neumann_zagier_expansion,
    seifert_torsion,
)
from .complexes import (
    TwistedComplex,
    presentation_complex,
    seifert_y_complex,
    twist,
    untwisted,
)
from .engines import QuadratureConfig, spectrum_finite_quotient
from .fixtures import torus_diagonal, torus_knot_family, torus_knot_reducible
from .groups import FreeAbelian, Presented
from .ring import GroupRingMatrix
from .torsion import (
    CERTIFIED_STATUS,
    HEURISTIC_STATUS,
    EngineConfig,
    torsion,
    torsion_along_path,
    worker_count,
)

EXIT_OK, EXIT_ERROR, EXIT_HEURISTIC, EXIT_UNDETERMINED = 0, 1, 2, 3
_BENIGN_FLAGS = {"cyclic reduction", "gram"}


def _complex(text: str) -> complex:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) == 1:
        return complex(float(parts[0]), 0.0)
    if len(parts) == 2:
        return complex(float(parts[0]), float(parts[1]))
    raise argparse.ArgumentTypeError(f"expected 're' or 're,im', got {text!r}")


def _int_list(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _fibers(text: str) -> list:
    out = []
    for item in text.split(","):
        if not item.strip():
            continue
        try:
            p, q = item.split("/")
            out.append((int(p), int(q)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"fiber {item!r} is not of the form p/q") from None
    return out


def _status_exit(status: str) -> int:
    if status == CERTIFIED_STATUS:
        return EXIT_OK
    if status == HEURISTIC_STATUS:
        return EXIT_HEURISTIC
    return EXIT_UNDETERMINED


class _Run:
    """Collects inputs, timings and warnings for the optional manifest."""

    def __init__(self, args):
        self.args = args
        self.inputs: dict = {}
        self.timings: dict = {}
        self.warnings: list = []
        self._t0 = time.perf_counter()

    def load(self, name: str, path: str):
        self.inputs[name] = path
        return lio.load_json(path)

    def lap(self, name: str):
        now = time.perf_counter()
        self.timings[name] = now - self._t0
        self._t0 = now

    def emit(self, text: str):
        out = getattr(self.args, "output", None)
        if out:
            with open(out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)

    def finish(self, config: dict):
        path = getattr(self.args, "manifest", None)
        if path:
            man = lio.build_manifest(self.args.command, self.inputs, config, self.timings, self.warnings)
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(lio.dumps(man))


def _engine_config(args, run: _Run, source=None) -> EngineConfig:
    quotient = None
    if getattr(args, "quotient", None):
        if source is None:
            raise lio.InputError("a quotient needs a group to map from")
        quotient = lio.parse_quotient(source, run.load("quotient", args.quotient))
    return EngineConfig(
        engine=args.engine,
        method=args.method,
        quadrature=QuadratureConfig(nodes=args.nodes),
        max_terms=args.max_terms,
        quotient=quotient,
    )


def _config_json(cfg: EngineConfig) -> dict:
    return {
        "engine": cfg.engine,
        "method": cfg.method,
        "nodes": cfg.quadrature.nodes,
        "maxTerms": cfg.max_terms,
        "seriesTarget": cfg.series_target,
        "quotientOrder": None if cfg.quotient is None else cfg.quotient.order,
        "threads": worker_count(),
    }


def _twisted(base, rep) -> TwistedComplex:
    return untwisted(base) if rep is None else twist(base, rep)


def _collect_warnings(result, run: _Run):
    for d in result.per_degree:
        flags = [f for f in (d.fk.flags if d.fk is not None else []) if f not in _BENIGN_FLAGS]
        if flags:
            run.warnings.append(f"degree {d.degree}: {', '.join(flags)}")
    if result.status != CERTIFIED_STATUS:
        run.warnings.append(f"status {result.status}")


# ---------------------------------------------------------------------------
# subcommands


def cmd_torsion(args) -> int:
    run = _Run(args)
    doc = run.load("input", args.input)
    base, rep = lio.parse_torsion_input(doc)
    cfg = _engine_config(args, run, base.group)
    run.lap("load")
    result = torsion(_twisted(base, rep), cfg)
    run.lap("torsion")
    _collect_warnings(result, run)
    run.emit(lio.dumps(result.to_json()))
    run.finish(_config_json(cfg))
    return _status_exit(result.status)


def _scan_csv(scan_json: dict) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "logTau", "status", "gap", "error"])
    for row in scan_json["rows"]:
        lt = row.get("logTau")
        gap = row.get("gap")
        w.writerow([repr(row["t"]), "" if lt is None else repr(lt), row["status"],
                    "" if gap is None else repr(gap), row.get("error", "")])
    return buf.getvalue()


def cmd_scan(args) -> int:
    run = _Run(args)
    base, path = lio.parse_path(run.load("path", args.path))
    if args.grid is not None:
        path.grid = args.grid
    cfg = _engine_config(args, run, base.group)
    run.lap("load")
    scan = torsion_along_path(base, path, cfg)
    run.lap("scan")
    data = scan.to_json()
    code = EXIT_OK
    for s in scan.samples:
        if s.result is None:
            run.warnings.append(f"t = {s.t}: {s.error}")
            code = max(code, EXIT_HEURISTIC)
        elif s.result.status != CERTIFIED_STATUS:
            code = max(code, _status_exit(s.result.status))
    run.emit(_scan_csv(data) if args.format == "csv" else lio.dumps(data))
    run.finish(dict(_config_json(cfg), grid=path.grid))
    return code


def cmd_spectrum(args) -> int:
    run = _Run(args)
    doc = run.load("input", args.input)
    if doc.get("schema") == "l2tor/operator@1" or "matrix" in doc:
        op = lio.parse_operator(doc)
        ops = [(None, op)]
        group = op.group
    else:
        base, rep = lio.parse_torsion_input(doc)
        if isinstance(base.group, Presented) and not base.group.decidable:
            raise lio.InputError("spectrum needs a group with a normal form", "/complex/group")
        tc = _twisted(base, rep)
        ops = [(p, tc.laplacian(p)) for p in range(tc.dimension + 1)]
        group = base.group
    quotient = lio.parse_quotient(group, run.load("quotient", args.quotient))
    run.lap("load")
    rows = []
    for p, op in ops:
        ev = spectrum_finite_quotient(op, quotient, args.count)
        entry = {"eigenvalues": [float(x) for x in ev]}
        if p is not None:
            entry["p"] = p
        if len(ev):
            entry["min"] = float(ev[0])
            entry["nearZero"] = bool(abs(ev[0]) <= args.zero_tol)
            if entry["nearZero"]:
                run.warnings.append(f"near-zero eigenvalue {ev[0]:.3g}" + ("" if p is None else f" in degree {p}"))
        rows.append(entry)
    run.lap("spectrum")
    run.emit(lio.dumps({"schema": "l2tor/spectrum@1", "quotientOrder": quotient.order, "degrees": rows}))
    run.finish({"count": args.count, "zeroTol": args.zero_tol, "quotientOrder": quotient.order})
    return EXIT_OK


def cmd_seifert(args) -> int:
    run = _Run(args)
    data = SeifertData(args.genus, args.cusps, tuple(args.fibers or ()), args.lam, args.irreducible)
    value = seifert_torsion(data)
    out = {"schema": "l2tor/closed-form@1", "kind": "seifert", "logTau": value,
           "exponent": None if data.irreducible else data.exponent()}
    run.emit(lio.dumps(out))
    run.finish({})
    return EXIT_OK


def cmd_jsj(args) -> int:
    run = _Run(args)
    pieces = lio.parse_jsj(run.load("pieces", args.pieces))
    run.emit(lio.dumps({"schema": "l2tor/closed-form@1", "kind": "jsj", "logTau": jsj_torsion(pieces),
                        "pieces": len(pieces)}))
    run.finish({})
    return EXIT_OK


def cmd_nz(args) -> int:
    run = _Run(args)
    exp = neumann_zagier_expansion(args.vol, args.lengths or [])
    run.emit(lio.dumps({"schema": "l2tor/closed-form@1", "kind": "neumann-zagier", "logTau": exp.value,
                        "errorOrder": exp.error_order}))
    run.finish({})
    return EXIT_OK


def cmd_make(args) -> int:
    run = _Run(args)
    kind = args.kind
    if kind == "torus":
        base, rep = torus_diagonal(args.m, args.l)
        doc = lio.torsion_input_to_json(base, rep)
    elif kind == "torus-knot":
        base, rep = torus_knot_reducible(args.p, args.q, args.lam, args.offdiag)
        doc = lio.torsion_input_to_json(base, rep)
    elif kind == "presentation":
        rels = [[int(x) for x in r.split(",") if x.strip()] for r in args.relators.split(";") if r.strip()]
        grp = Presented(args.generators, tuple(tuple(r) for r in rels))
        doc = lio.torsion_input_to_json(presentation_complex(grp))
    elif kind == "seifert-y":
        doc = lio.torsion_input_to_json(seifert_y_complex(args.free))
    elif kind == "quotient":
        if not args.orders:
            raise lio.InputError("make quotient needs --orders")
        doc = {"schema": "l2tor/quotient@1", "orders": list(args.orders)}
    elif kind == "path":
        base, path = torus_knot_family(args.p, args.q, args.start, args.end, args.grid)
        doc = {"schema": "l2tor/path@1", "complex": lio.cw_to_json(base), "family": "diagonal",
               "eigenvaluePath": [[z.real, z.imag] for z in path.eigenvalue_path],
               "exponents": list(path.exponents), "grid": path.grid}
    elif kind == "circulant":
        z = FreeAbelian(1)
        op = GroupRingMatrix.from_words(z, 1, 1, {(0, 0): [((), args.center), ((1,), args.neighbor),
                                                          ((-1,), args.neighbor)]})
        doc = lio.operator_to_json(op)
    else:  # pragma: no cover - argparse restricts choices
        raise lio.InputError(f"unknown fixture kind {kind!r}")
    run.emit(lio.dumps(doc))
    run.finish({"kind": kind})
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .acceptance import run_all

    results = run_all(quick=args.quick, stream=sys.stdout)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return EXIT_OK if not failed else EXIT_ERROR


# ---------------------------------------------------------------------------
# parser


def _add_engine_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("engine selection")
    g.add_argument("--engine", choices=["auto", "abelian", "series", "quotient"], default="auto",
                   help="force one determinant engine (default: route abelian -> series -> quotient)")
    g.add_argument("--method", choices=["auto", "laplacian", "decomposition"], default="auto",
                   help="torsion method (default: decomposition when it applies, else Laplacians)")
    g.add_argument("--nodes", type=int, default=1024, help="quadrature nodes per dimension (power of two)")
    g.add_argument("--max-terms", type=int, default=None, help="fixed truncation order for the series engine")
    g.add_argument("--quotient", metavar="FILE", help="finite quotient JSON enabling the quotient engine")


def _add_output_flags(p: argparse.ArgumentParser):
    p.add_argument("-o", "--output", metavar="FILE", help="write the result here instead of stdout")
    p.add_argument("--manifest", metavar="FILE", help="write a run manifest (input hashes, config, timings)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="l2tor",
        description="Twisted L2-torsion of finite CW-complexes with SL2(C) twists.",
        epilog="Exit codes: 0 certified, 2 heuristic, 3 zero-by-convention or unknown, 1 error. "
               "L2TOR_THREADS caps the number of worker threads.",
    )
    parser.add_argument("--version", action="version", version=f"l2tor {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("torsion", help="log torsion of a twisted complex")
    p.add_argument("input", help="torsion input JSON (complex plus optional representation)")
    _add_engine_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=cmd_torsion)

    p = sub.add_parser("scan", help="log torsion along a representation path")
    p.add_argument("path", help="path JSON (keyframes or a diagonal eigenvalue family)")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--grid", type=int, default=None, help="override the number of samples")
    _add_engine_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("spectrum", help="low spectrum of Laplacians pushed to a finite quotient")
    p.add_argument("input", help="torsion input or operator JSON")
    p.add_argument("--quotient", metavar="FILE", required=True, help="finite quotient JSON")
    p.add_argument("--count", type=int, default=8, help="eigenvalues per degree")
    p.add_argument("--zero-tol", type=float, default=1e-8, help="flag minima at or below this value")
    _add_output_flags(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("seifert", help="closed-form torsion of a Seifert fibered piece")
    p.add_argument("--genus", type=int, required=True)
    p.add_argument("--cusps", type=int, required=True, help="number of boundary components")
    p.add_argument("--fibers", type=_fibers, default=[], help="exceptional fibers p1/q1,p2/q2,...")
    p.add_argument("--lambda", dest="lam", type=_complex, default=None,
                   help="eigenvalue of the fiber image, re,im (reducible case)")
    p.add_argument("--irreducible", action="store_true", help="restriction to the piece is irreducible")
    _add_output_flags(p)
    p.set_defaults(func=cmd_seifert)

    p = sub.add_parser("jsj", help="product formula over JSJ pieces")
    p.add_argument("--pieces", required=True, metavar="FILE", help="JSJ pieces JSON")
    _add_output_flags(p)
    p.set_defaults(func=cmd_jsj)

    p = sub.add_parser("nz", help="small-filling expansion from volume and core lengths")
    p.add_argument("--vol", type=float, required=True)
    p.add_argument("--lengths", type=float, nargs="*", default=[])
    _add_output_flags(p)
    p.set_defaults(func=cmd_nz)

    p = sub.add_parser("make", help="write fixture inputs")
    p.add_argument("kind", choices=["torus", "torus-knot", "presentation", "seifert-y", "quotient", "path",
                                    "circulant"])
    p.add_argument("--m", type=_complex, default=complex(1), help="torus: eigenvalue of the meridian")
    p.add_argument("--l", type=_complex, default=complex(1), help="torus: eigenvalue of the longitude")
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--q", type=int, default=3)
    p.add_argument("--lambda", dest="lam", type=_complex, default=complex(2), help="torus knot: fiber eigenvalue")
    p.add_argument("--offdiag", type=_complex, default=complex(0), help="torus knot: upper-right entry of rho(a)")
    p.add_argument("--generators", type=int, default=2, help="presentation: number of generators")
    p.add_argument("--relators", default="", help="presentation: relators as '1,1,-2;...' (negative = inverse)")
    p.add_argument("--free", type=int, default=2, help="seifert-y: number of free generators")
    p.add_argument("--orders", type=_int_list, default=None, help="quotient: cyclic orders per generator")
    p.add_argument("--start", type=_complex, default=complex(2), help="path: eigenvalue at t = 0")
    p.add_argument("--end", type=_complex, default=complex(3), help="path: eigenvalue at t = 1")
    p.add_argument("--grid", type=int, default=65, help="path: number of samples")
    p.add_argument("--center", type=float, default=3.0, help="circulant: identity coefficient")
    p.add_argument("--neighbor", type=float, default=1.0, help="circulant: coefficient of z and 1/z")
    _add_output_flags(p)
    p.set_defaults(func=cmd_make)

    p = sub.add_parser("selftest", help="run the acceptance checks")
    p.add_argument("--quick", action="store_true", help="reduced sizes")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except lio.InputError as exc:
        print(f"l2tor: input error at {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, RuntimeError, OSError, ArithmeticError) as exc:
        print(f"l2tor: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
