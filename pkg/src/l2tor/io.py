"""JSON schemas, loaders and run manifests."""

from __future__ import annotations

import hashlib
import json
import math
from typing import Any, Optional

import jsonschema
import numpy as np

from . import __version__
from .closed_forms import HyperbolicPiece, SeifertData, SeifertPiece
from .complexes import CWDatum, cw_from_json, cw_to_json
from .groups import FiniteQuotient, group_from_json, quotient_from_json
from .representation import Representation, RepresentationPath
from .ring import GroupRingMatrix, matrix_from_json, matrix_to_json


class InputError(ValueError):
    """Schema or content problem in an input document; ``pointer`` locates it."""

    def __init__(self, message: str, pointer: str = ""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer or "/"


_NUM = {"type": "number"}
_COMPLEX = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}
_MAT2 = {"type": "array", "minItems": 2, "maxItems": 2,
         "items": {"type": "array", "minItems": 2, "maxItems": 2, "items": _COMPLEX}}
_WORD = {"type": "array", "items": {"type": "integer"}}
_TERM = {
    "type": "object",
    "properties": {"word": _WORD, "re": _NUM, "im": _NUM, "block": _MAT2},
    "required": ["word"],
    "additionalProperties": False,
}
_PERM = {"type": "array", "items": {"type": "integer", "minimum": 0}}

GROUP_SCHEMA = {
    "type": "object",
    "required": ["flavor"],
    "properties": {
        "flavor": {"enum": ["free_abelian", "free", "finite", "presented"]},
        "rank": {"type": "integer", "minimum": 0},
        "generators": {"type": "integer", "minimum": 0},
        "relators": {"type": "array", "items": _WORD},
        "images": {"type": "array", "items": _PERM},
        "order": {"type": "integer", "minimum": 1},
        "normalForm": {"type": "object"},
        "quotients": {"type": "array", "items": {"type": "array", "items": _PERM}},
        "infiniteOrder": {"type": "array", "items": _WORD},
    },
    "allOf": [
        {"if": {"properties": {"flavor": {"enum": ["free_abelian", "free"]}}}, "then": {"required": ["rank"]}},
        {"if": {"properties": {"flavor": {"const": "presented"}}}, "then": {"required": ["generators"]}},
        {"if": {"properties": {"flavor": {"const": "finite"}}}, "then": {"required": ["images"]}},
    ],
}

CW_SCHEMA = {
    "type": "object",
    "required": ["group", "ranks"],
    "properties": {
        "schema": {"const": "l2tor/cw@1"},
        "group": GROUP_SCHEMA,
        "ranks": {"type": "array", "items": {"type": "integer", "minimum": 0}, "maxItems": 4},
        "boundaries": {"type": "array",
                       "items": {"type": "array", "items": {"type": "array", "items": {"type": "array",
                                                                                      "items": _TERM}}}},
    },
}

REP_SCHEMA = {
    "type": "object",
    "required": ["images"],
    "properties": {"images": {"type": "array", "items": _MAT2}, "presentation": {"type": "object"}},
}

TORSION_INPUT_SCHEMA = {
    "type": "object",
    "required": ["complex"],
    "properties": {
        "schema": {"const": "l2tor/torsion-input@1"},
        "complex": CW_SCHEMA,
        "representation": REP_SCHEMA,
    },
}

OPERATOR_SCHEMA = {
    "type": "object",
    "required": ["group", "matrix"],
    "properties": {
        "schema": {"const": "l2tor/operator@1"},
        "group": GROUP_SCHEMA,
        "matrix": {
            "type": "object",
            "required": ["entries"],
            "properties": {
                "rows": {"type": "integer", "minimum": 0},
                "cols": {"type": "integer", "minimum": 0},
                "blockSize": {"enum": [1, 2]},
                "entries": {"type": "array", "items": {"type": "array", "items": {"type": "array",
                                                                                  "items": _TERM}}},
            },
        },
    },
}

QUOTIENT_SCHEMA = {
    "type": "object",
    "properties": {
        "schema": {"const": "l2tor/quotient@1"},
        "images": {"type": "array", "items": _PERM},
        "orders": {"type": "array", "items": {"type": "integer", "minimum": 1}},
    },
    "oneOf": [{"required": ["images"]}, {"required": ["orders"]}],
}

PATH_SCHEMA = {
    "type": "object",
    "required": ["complex"],
    "properties": {
        "schema": {"const": "l2tor/path@1"},
        "complex": CW_SCHEMA,
        "keyframes": {"type": "array", "items": REP_SCHEMA, "minItems": 1},
        "family": {"const": "diagonal"},
        "eigenvaluePath": {"type": "array", "items": _COMPLEX, "minItems": 2, "maxItems": 2},
        "exponents": {"type": "array", "items": _NUM},
        "grid": {"type": "integer", "minimum": 1},
        "tolerance": {"type": "number", "exclusiveMinimum": 0},
    },
    "oneOf": [{"required": ["keyframes"]}, {"required": ["family", "eigenvaluePath"]}],
}

_SEIFERT_PIECE = {
    "type": "object",
    "required": ["type", "genus", "boundary"],
    "properties": {
        "type": {"const": "seifert"},
        "genus": {"type": "integer", "minimum": 0},
        "boundary": {"type": "integer", "minimum": 0},
        "fibers": {"type": "array", "items": {"type": "array", "items": {"type": "integer"},
                                              "minItems": 2, "maxItems": 2}},
        "irreducible": {"type": "boolean"},
        "lambda": _COMPLEX,
    },
}
_HYP_PIECE = {
    "type": "object",
    "required": ["type", "logTau"],
    "properties": {"type": {"const": "hyperbolic"}, "logTau": _NUM},
}
JSJ_SCHEMA = {
    "type": "object",
    "required": ["pieces"],
    "properties": {
        "schema": {"const": "l2tor/jsj@1"},
        "pieces": {"type": "array", "minItems": 1,
                   "items": {"oneOf": [_HYP_PIECE, _SEIFERT_PIECE]}},
    },
}


def _pointer(path) -> str:
    return "/" + "/".join(str(p) for p in path) if path else "/"


def validate_document(doc: Any, schema: dict):
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        raise InputError(err.message, _pointer(err.absolute_path))


def load_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON ({exc.msg} at line {exc.lineno})") from exc


def _wrap(fn, pointer, *args):
    try:
        return fn(*args)
    except InputError:
        raise
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise InputError(str(exc), pointer) from exc


def _mat2(m) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in m])


def rep_from_json(group, data, pointer="/representation") -> Representation:
    images = tuple(_mat2(m) for m in data["images"])
    return _wrap(Representation, pointer, group, images)


def rep_to_json(rep: Representation) -> dict:
    return rep.to_json()


def parse_cw(doc, pointer="/complex") -> CWDatum:
    return _wrap(cw_from_json, pointer, doc)


def parse_torsion_input(doc):
    validate_document(doc, TORSION_INPUT_SCHEMA)
    base = parse_cw(doc["complex"])
    rep = rep_from_json(base.group, doc["representation"]) if "representation" in doc else None
    return base, rep


def parse_operator(doc) -> GroupRingMatrix:
    validate_document(doc, OPERATOR_SCHEMA)
    group = _wrap(group_from_json, "/group", doc["group"])
    return _wrap(matrix_from_json, "/matrix", group, doc["matrix"])


def operator_to_json(op: GroupRingMatrix) -> dict:
    return {"schema": "l2tor/operator@1", "group": op.group.to_json(), "matrix": matrix_to_json(op)}


def parse_quotient(source, doc) -> FiniteQuotient:
    validate_document(doc, QUOTIENT_SCHEMA)
    return _wrap(quotient_from_json, "/images" if "images" in doc else "/orders", source, doc)


def parse_path(doc):
    validate_document(doc, PATH_SCHEMA)
    base = parse_cw(doc["complex"])
    grid = int(doc.get("grid", 65))
    tol = float(doc.get("tolerance", 1e-7))
    if "keyframes" in doc:
        frames = tuple(rep_from_json(base.group, f, f"/keyframes/{i}") for i, f in enumerate(doc["keyframes"]))
        path = _wrap(RepresentationPath, "/keyframes", base.group, frames, (), (), grid, tol)
    else:
        ends = tuple(complex(re, im) for re, im in doc["eigenvaluePath"])
        exps = tuple(float(e) for e in doc.get("exponents", []))
        path = _wrap(RepresentationPath, "/eigenvaluePath", base.group, (), ends, exps, grid, tol)
    return base, path


def parse_jsj(doc) -> list:
    validate_document(doc, JSJ_SCHEMA)
    pieces = []
    for i, p in enumerate(doc["pieces"]):
        if p["type"] == "hyperbolic":
            pieces.append(HyperbolicPiece(float(p["logTau"])))
        else:
            lam = complex(*p["lambda"]) if "lambda" in p else None
            data = _wrap(SeifertData, f"/pieces/{i}", p["genus"], p["boundary"],
                         tuple(tuple(f) for f in p.get("fibers", [])), lam, bool(p.get("irreducible", False)))
            pieces.append(SeifertPiece(data))
    return pieces


def torsion_input_to_json(base: CWDatum, rep: Optional[Representation] = None) -> dict:
    out = {"schema": "l2tor/torsion-input@1", "complex": cw_to_json(base)}
    if rep is not None:
        out["representation"] = rep_to_json(rep)
    return out


# ---------------------------------------------------------------------------
# output and manifests


def _clean(obj):
    if isinstance(obj, float):
        if math.isnan(obj):
            return None
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, (np.floating,)):
        return _clean(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps(obj) -> str:
    """Deterministic JSON text (sorted keys, repr floats)."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def file_digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def build_manifest(command: str, inputs: dict, config: dict, timings: dict, warnings: list) -> dict:
    return {
        "schema": "l2tor/manifest@1",
        "toolVersion": __version__,
        "command": command,
        "inputs": {k: file_digest(v) for k, v in sorted(inputs.items())},
        "config": config,
        "timings": timings,
        "warnings": warnings,
    }
