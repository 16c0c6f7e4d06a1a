"""JSON encodings shared by the CLI and the report types.

Matrices use ``{"dim": n, "re": [[...]], "im": [[...]]}`` (row-major).
Algebra elements are ``{"block_dims": [...], "blocks": [matrix, ...]}``.
Floats are written with ``repr`` precision so that a round trip is exact.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .errors import SchemaError

__all__ = [
    "matrix_to_json",
    "matrix_from_json",
    "element_to_json",
    "element_from_json",
    "dump_json",
    "load_json",
]


def matrix_to_json(m) -> dict:
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return {"dim": int(a.shape[0]), "re": a.real.tolist(), "im": a.imag.tolist()}


def matrix_from_json(d) -> np.ndarray:
    try:
        n = int(d["dim"])
        re = np.asarray(d["re"], dtype=np.float64)
        im = np.asarray(d.get("im", np.zeros((n, n))), dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed matrix JSON: {exc}") from exc
    if re.shape != (n, n) or im.shape != (n, n):
        raise SchemaError(f"matrix JSON declares dim {n} but has shapes {re.shape}, {im.shape}")
    out = re + 1j * im
    if not np.all(np.isfinite(out)):
        raise SchemaError("matrix JSON has non-finite entries")
    return np.ascontiguousarray(out)


def element_to_json(algebra, m) -> dict:
    return {
        "block_dims": list(algebra.block_dims),
        "blocks": [matrix_to_json(b) for b in algebra.blocks(m)],
    }


def element_from_json(d, algebra=None) -> np.ndarray:
    from .algebra import BlockAlgebra

    try:
        dims = tuple(int(x) for x in d["block_dims"])
        blocks = [matrix_from_json(b) for b in d["blocks"]]
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed element JSON: {exc}") from exc
    alg = BlockAlgebra(dims)
    if algebra is not None and alg != algebra:
        raise SchemaError(f"element has blocks {dims}, expected {algebra.block_dims}")
    try:
        return alg.from_blocks(blocks)
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def dump_json(obj, path=None, indent=2) -> str:
    text = json.dumps(_clean(obj), indent=indent)
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return text


def load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
