"""Deterministic JSON and CSV emission shared by reports and the CLI."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from functools import lru_cache
from importlib import resources
from typing import Any, Iterable, Mapping, Sequence

import jsonschema
import numpy as np
from referencing import Registry, Resource

__all__ = [
    "fmt_float",
    "to_plain",
    "dumps",
    "rows_to_csv",
    "read_csv",
    "digest_bytes",
    "digest_file",
    "SCHEMAS",
    "load_schema",
    "schema_errors",
]

SCHEMAS = ("stablemap", "config", "run_report")


def fmt_float(x: float) -> str:
    """17 significant digits, enough to round-trip any double."""
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def to_plain(obj: Any) -> Any:
    """JSON-safe copy: complex as ``[re, im]``, non-finite floats as strings."""
    if isinstance(obj, (bool, str)) or obj is None:
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else fmt_float(x)
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_plain(obj.real), to_plain(obj.imag)]
    if isinstance(obj, Mapping):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return [to_plain(v) for v in obj.tolist()]
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = sorted(obj, key=repr) if isinstance(obj, (set, frozenset)) else obj
        return [to_plain(v) for v in items]
    if hasattr(obj, "to_json"):
        return to_plain(obj.to_json())
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj: Any) -> str:
    """Canonical JSON text (sorted keys, shortest round-trip floats)."""
    return json.dumps(to_plain(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return fmt_float(float(v))
    if isinstance(v, (complex, np.complexfloating)):
        return f"{fmt_float(v.real)}{'+' if v.imag >= 0 else '-'}{fmt_float(abs(v.imag))}j"
    return str(v)


def rows_to_csv(rows: Sequence[Mapping[str, Any]], columns: Iterable[str] = ()) -> str:
    """RFC-4180 CSV (CRLF line ends) with a header row.

    ``columns`` fixes the leading column order; keys that only appear in
    ``rows`` follow in first-seen order.  Missing cells are empty.
    """
    cols = list(columns)
    for r in rows:
        cols.extend(k for k in r if k not in cols)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in cols])
    return buf.getvalue()


def _parse_cell(s: str) -> Any:
    if s == "":
        return None
    if s in ("true", "false"):
        return s == "true"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        pass
    if s.endswith("j"):
        try:
            return complex(s)
        except ValueError:
            pass
    return s


def read_csv(text: str) -> tuple[list[str], list[dict]]:
    """Parse CSV written by :func:`rows_to_csv` back into typed rows."""
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        return [], []
    rows = [{k: _parse_cell(v) for k, v in zip(header, rec) if v != ""} for rec in reader if rec]
    return header, rows


def digest_bytes(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def digest_file(path: str) -> str:
    with open(path, "rb") as fh:
        return digest_bytes(fh.read())


# --------------------------------------------------------------------------
# schemas
# --------------------------------------------------------------------------


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    if name not in SCHEMAS:
        raise KeyError(f"unknown schema {name!r}")
    text = resources.files("gromovdisc").joinpath(f"data/{name}.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


@lru_cache(maxsize=1)
def _registry() -> Registry:
    return Registry().with_resources(
        (load_schema(n)["$id"], Resource.from_contents(load_schema(n))) for n in SCHEMAS
    )


def _json_path(err) -> str:
    out = "$"
    for p in err.absolute_path:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def schema_errors(data: Any, name: str, pointer: str = "") -> list[str]:
    """Path-prefixed messages for every violation of the named schema.

    ``pointer`` selects a sub-schema, e.g. ``"/$defs/map"``.
    """
    schema = load_schema(name)
    if pointer:
        schema = {"$ref": schema["$id"] + "#" + pointer}
    v = jsonschema.Draft202012Validator(schema, registry=_registry())
    errs = sorted(v.iter_errors(data), key=lambda e: [str(p) for p in e.absolute_path])
    return [f"{_json_path(e)}: {e.message}" for e in errs]
