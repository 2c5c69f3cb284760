"""JSON encodings: complex numbers as ``[re, im]``, matrices as row-major nested lists."""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .phase import TAU, HatPoint, HermitianTriple, PhasePoint


def encode_complex(z):
    z = complex(z)
    return [z.real, z.imag]


def decode_complex(pair):
    if isinstance(pair, (int, float)):
        return complex(pair)
    re, im = pair
    return complex(re, im)


def encode_array(a):
    a = np.asarray(a)
    if a.ndim == 0:
        return encode_complex(a)
    return [encode_array(x) for x in a]


def decode_array(data):
    return np.array(_decode_nested(data), dtype=complex)


def _decode_nested(x):
    # a leaf is a two-element list of numbers
    if isinstance(x, (int, float)):
        return complex(x)
    if len(x) == 2 and all(isinstance(c, (int, float)) for c in x):
        return complex(x[0], x[1])
    return [_decode_nested(y) for y in x]


def phase_point_to_json(z: PhasePoint) -> dict:
    return {"n": z.n, "X": encode_array(z.X), "Y": encode_array(z.Y),
            "v": encode_array(z.v), "w": encode_array(z.w)}


def phase_point_from_json(d: dict) -> PhasePoint:
    n = int(d["n"])
    z = PhasePoint(_matrix(d["X"], n), _matrix(d["Y"], n),
                   np.array(_decode_nested(d["v"]), dtype=complex),
                   np.array(_decode_nested(d["w"]), dtype=complex))
    return z


def _matrix(data, n):
    m = np.array(_decode_nested(data), dtype=complex)
    return m.reshape(n, n)


def hat_point_to_json(p: HatPoint) -> dict:
    return {"n": p.n, "X": encode_array(p.X), "Y": encode_array(p.Y), "variant": p.variant}


def hat_point_from_json(d: dict) -> HatPoint:
    n = int(d["n"])
    return HatPoint(_matrix(d["X"], n), _matrix(d["Y"], n), d.get("variant", TAU))


def triple_to_json(h: HermitianTriple) -> dict:
    return {"n": h.n, "A": encode_array(h.A), "B": encode_array(h.B), "a": encode_array(h.a)}


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()


def atomic_write(path, text: str):
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
