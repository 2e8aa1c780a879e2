"""Curve bundle JSON: serialisation, schema validation and reloading."""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

import jsonschema

from .errors import BundleError, TwoCoverError
from .forms import BinaryForm, LineParametrization, TernaryForm
from .moduli import LABELS, Contact, LabelledQuartic, label_str, parse_label, quartic_from_forms

BUNDLE_SCHEMA_VERSION = 1

_INT = {"type": "string", "pattern": r"^-?[0-9]+$"}
_RATIONAL = {"type": "string", "pattern": r"^-?[0-9]+(/[0-9]+)?$"}
_TERM = {
    "type": "array",
    "prefixItems": [{"type": "integer", "minimum": 0}] * 3 + [_INT, {"type": "string", "pattern": r"^[0-9]+$"}],
    "minItems": 5,
    "maxItems": 5,
}
_FORM = {"type": "array", "items": _TERM}
_LABEL = {"type": "string", "pattern": "^[0-7]{2}$"}

BUNDLE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schemaVersion", "f", "bitangents", "contacts"],
    "properties": {
        "schemaVersion": {"const": BUNDLE_SCHEMA_VERSION},
        "moduli": {
            "anyOf": [
                {"type": "null"},
                {"type": "array", "minItems": 3, "maxItems": 3,
                 "items": {"type": "array", "minItems": 2, "maxItems": 2, "items": _INT}},
            ]
        },
        "f": _FORM,
        "bitangents": {
            "type": "object",
            "propertyNames": _LABEL,
            "minProperties": 28,
            "maxProperties": 28,
            "additionalProperties": {"type": "array", "minItems": 3, "maxItems": 3, "items": _INT},
        },
        "contacts": {
            "type": "object",
            "propertyNames": _LABEL,
            "minProperties": 28,
            "maxProperties": 28,
            "additionalProperties": {
                "type": "object",
                "required": ["a", "q", "P", "Q"],
                "properties": {
                    "a": _RATIONAL,
                    "q": {"type": "array", "minItems": 3, "maxItems": 3, "items": _INT},
                    "P": {"type": "array", "minItems": 3, "maxItems": 3, "items": _INT},
                    "Q": {"type": "array", "minItems": 3, "maxItems": 3, "items": _INT},
                },
            },
        },
        "syzygies": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["quadruple", "delta", "c", "Q"],
                "properties": {
                    "quadruple": {"type": "array", "minItems": 4, "maxItems": 4, "items": _LABEL},
                    "delta": _RATIONAL,
                    "c": _RATIONAL,
                    "Q": _FORM,
                },
            },
        },
    },
}


def _ints(values) -> list[str]:
    out = []
    for c in values:
        c = Fraction(c)
        if c.denominator != 1:
            raise BundleError(f"non-integral coefficient {c}")
        out.append(str(c.numerator))
    return out


def curve_to_bundle(curve: LabelledQuartic) -> dict:
    contacts = {}
    for lab in LABELS:
        con = curve.contacts[lab]
        contacts[label_str(lab)] = {
            "a": str(Fraction(con.a)),
            "q": _ints(con.q.coeffs),
            "P": _ints(con.param.P),
            "Q": _ints(con.param.Q),
        }
    out = {
        "schemaVersion": BUNDLE_SCHEMA_VERSION,
        "moduli": None if curve.moduli is None else [_ints(pt) for pt in curve.moduli],
        "f": curve.f.to_json(),
        "bitangents": {label_str(lab): _ints(curve.bitangents[lab].vector()) for lab in LABELS},
        "contacts": contacts,
    }
    if curve.syzygies:
        out["syzygies"] = [curve.syzygies[q].to_json() for q in sorted(curve.syzygies)]
    return out


def dumps_bundle(curve: LabelledQuartic) -> str:
    return json.dumps(curve_to_bundle(curve), sort_keys=True, indent=1) + "\n"


def validate_bundle(data) -> None:
    try:
        jsonschema.validate(data, BUNDLE_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise BundleError(f"bundle schema violation at {where}: {exc.message}") from exc


def bundle_to_curve(data: dict, verify_syzygies: bool = True) -> LabelledQuartic:
    """Rebuild a labelled quartic; contacts are recomputed and compared with the stored ones."""
    from .theta import SyzygeticData, compute_syzygies, enumerate_syzygetic, syzygy_residual

    validate_bundle(data)
    f = TernaryForm.from_json(data["f"])
    lines = {parse_label(k): TernaryForm.linear(*(int(c) for c in v)) for k, v in data["bitangents"].items()}
    moduli = None
    if data.get("moduli") is not None:
        moduli = tuple(tuple(int(c) for c in pt) for pt in data["moduli"])
    try:
        curve = quartic_from_forms(f, lines, with_syzygies=False, moduli=moduli)
    except TwoCoverError as exc:
        raise BundleError(f"bundle does not describe a labelled quartic: {exc}") from exc
    for key, stored in data["contacts"].items():
        lab = parse_label(key)
        expect = Contact(Fraction(stored["a"]), BinaryForm(tuple(int(c) for c in stored["q"])),
                         LineParametrization(tuple(int(c) for c in stored["P"]), tuple(int(c) for c in stored["Q"])))
        if expect != curve.contacts[lab]:
            raise BundleError(f"stored contact data for {key} disagrees with the quartic")
    if "syzygies" in data:
        table = {}
        for entry in data["syzygies"]:
            syz = SyzygeticData.from_json(entry)
            if verify_syzygies and not syzygy_residual(curve, syz).is_zero():
                raise BundleError(f"syzygy identity fails for {entry['quadruple']}")
            table[syz.quadruple] = syz
        if set(table) != set(enumerate_syzygetic()):
            raise BundleError("syzygy table must list each syzygetic quadruple exactly once")
        curve.syzygies = table
        curve._cache.clear()
    else:
        compute_syzygies(curve)
    return curve


def load_bundle(path: str | Path, verify_syzygies: bool = True) -> LabelledQuartic:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise BundleError(f"{path}: not valid JSON: {exc}") from exc
    return bundle_to_curve(data, verify_syzygies)
