"""JSON and CSV serialization of potential pairs, triplets and scattering data.

Complex numbers are written as ``[re, im]`` pairs. Floats use Python's
shortest round-trip representation, so write-then-read is bit-exact.
"""

from __future__ import annotations

import csv
import io as _io
import json
import sys
from pathlib import Path

import numpy as np

from .boundstates import BoundStateTriplet, TripletBlock
from .errors import InputError
from .grid import SpectralGrid
from .lattice import PotentialPair
from .scattering import COEFFICIENTS, ScatteringData


def encode_complex(x) -> list[float]:
    x = complex(x)
    return [float(x.real), float(x.imag)]


def decode_complex(v) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        raise InputError(f"expected a [re, im] pair, got {v!r}")
    return complex(float(v[0]), float(v[1]))


def encode_array(a) -> list[list[float]]:
    return [encode_complex(x) for x in np.asarray(a).ravel()]


def decode_array(v) -> np.ndarray:
    if not isinstance(v, list):
        raise InputError("expected a list of [re, im] pairs")
    return np.array([decode_complex(x) for x in v], dtype=np.complex128)


def _require(d: dict, *keys):
    if not isinstance(d, dict):
        raise InputError("expected a JSON object")
    missing = [k for k in keys if k not in d]
    if missing:
        raise InputError(f"missing field(s): {', '.join(missing)}")


# potential pairs


def pair_to_dict(pair: PotentialPair) -> dict:
    return {
        "kind": pair.kind,
        "n_min": pair.n_min,
        "n_max": pair.n_max,
        "first": encode_array(pair.first),
        "second": encode_array(pair.second),
    }


def pair_from_dict(d: dict) -> PotentialPair:
    _require(d, "kind", "n_min", "first", "second")
    first, second = decode_array(d["first"]), decode_array(d["second"])
    n_min = int(d["n_min"])
    if "n_max" in d and int(d["n_max"]) != n_min + first.size - 1:
        raise InputError("n_max does not match the length of the value arrays")
    return PotentialPair(d["kind"], n_min, first, second)


def pair_to_csv(pair: PotentialPair) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "re_first", "im_first", "re_second", "im_second"])
    for n, a, b in zip(pair.sites, pair.first, pair.second):
        w.writerow([int(n), repr(float(a.real)), repr(float(a.imag)), repr(float(b.real)), repr(float(b.imag))])
    return buf.getvalue()


def pair_from_csv(text: str, kind: str = "qr") -> PotentialPair:
    rows = list(csv.DictReader(_io.StringIO(text)))
    if not rows:
        raise InputError("empty CSV")
    try:
        n = np.array([int(r["n"]) for r in rows])
        a = np.array([complex(float(r["re_first"]), float(r["im_first"])) for r in rows])
        b = np.array([complex(float(r["re_second"]), float(r["im_second"])) for r in rows])
    except (KeyError, ValueError) as exc:
        raise InputError(f"malformed pair CSV: {exc}") from exc
    if np.any(np.diff(n) != 1):
        raise InputError("CSV sites must be consecutive and increasing")
    return PotentialPair(kind, int(n[0]), a, b)


# triplets


def triplet_to_dict(triplet: BoundStateTriplet) -> dict:
    return {
        "side": triplet.side,
        "blocks": [{"z": encode_complex(b.z), "m": b.m, "C": encode_array(b.C)} for b in triplet.blocks],
    }


def triplet_from_dict(d: dict, side: str | None = None) -> BoundStateTriplet:
    _require(d, "blocks")
    side = d.get("side", side)
    if side is None:
        raise InputError("triplet needs a side")
    blocks = []
    for blk in d["blocks"]:
        _require(blk, "z", "C")
        C = decode_array(blk["C"])
        if "m" in blk and int(blk["m"]) != C.size:
            raise InputError("block size m does not match the length of C")
        blocks.append(TripletBlock(decode_complex(blk["z"]), C))
    return BoundStateTriplet(side, tuple(blocks))


def _optional_triplet(d, side):
    return None if d is None else triplet_from_dict(d, side)


def triplets_to_dict(inside, outside, kind: str = "qr") -> dict:
    return {
        "kind": kind,
        "inside": None if inside is None else triplet_to_dict(inside),
        "outside": None if outside is None else triplet_to_dict(outside),
    }


def triplets_from_dict(d: dict) -> tuple[str, BoundStateTriplet | None, BoundStateTriplet | None]:
    """(kind, inside, outside) from ``{"inside": ..., "outside": ...}`` or a single triplet."""
    if "blocks" in d:
        t = triplet_from_dict(d)
        return "qr", (t if t.side == "inside" else None), (t if t.side == "outside" else None)
    if "inside" not in d and "outside" not in d:
        raise InputError("expected 'inside' and/or 'outside' triplets")
    return (
        d.get("kind", "qr"),
        _optional_triplet(d.get("inside"), "inside"),
        _optional_triplet(d.get("outside"), "outside"),
    )


# scattering data


def scattering_to_dict(data: ScatteringData) -> dict:
    return {
        "kind": data.kind,
        "grid": {"M": data.grid.M},
        "t": float(data.t),
        "D_inf": encode_complex(data.D_inf),
        "E_inf": None if data.E_inf is None else encode_complex(data.E_inf),
        "coefficients": {name: encode_array(getattr(data, name)) for name in COEFFICIENTS},
        "inside": None if data.inside is None else triplet_to_dict(data.inside),
        "outside": None if data.outside is None else triplet_to_dict(data.outside),
    }


def scattering_from_dict(d: dict) -> ScatteringData:
    _require(d, "kind", "grid", "coefficients", "D_inf")
    grid = SpectralGrid(int(d["grid"]["M"]))
    coeffs = {}
    for name in COEFFICIENTS:
        if name not in d["coefficients"]:
            raise InputError(f"missing coefficient {name}")
        arr = decode_array(d["coefficients"][name])
        if arr.size != grid.M:
            raise InputError(f"coefficient {name} has {arr.size} samples, grid has {grid.M}")
        coeffs[name] = arr
    E = d.get("E_inf")
    return ScatteringData(
        kind=d["kind"],
        grid=grid,
        D_inf=decode_complex(d["D_inf"]),
        E_inf=None if E is None else decode_complex(E),
        inside=_optional_triplet(d.get("inside"), "inside"),
        outside=_optional_triplet(d.get("outside"), "outside"),
        t=float(d.get("t", 0.0)),
        **coeffs,
    )


def scattering_to_csv(data: ScatteringData) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["m", "theta"]
    for name in COEFFICIENTS:
        header += [f"re_{name}", f"im_{name}"]
    w.writerow(header)
    theta = data.grid.theta
    cols = [getattr(data, name) for name in COEFFICIENTS]
    for m in range(data.grid.M):
        row = [m, repr(float(theta[m]))]
        for c in cols:
            row += [repr(float(c[m].real)), repr(float(c[m].imag))]
        w.writerow(row)
    return buf.getvalue()


# generic entry points


def to_dict(obj) -> dict:
    if isinstance(obj, PotentialPair):
        return pair_to_dict(obj)
    if isinstance(obj, ScatteringData):
        return scattering_to_dict(obj)
    if isinstance(obj, BoundStateTriplet):
        return triplet_to_dict(obj)
    raise InputError(f"cannot serialize {type(obj).__name__}")


def from_dict(d: dict):
    """Decode a pair, scattering data or triplet set, dispatching on the keys present."""
    if not isinstance(d, dict):
        raise InputError("expected a JSON object")
    if "coefficients" in d:
        return scattering_from_dict(d)
    if "first" in d:
        return pair_from_dict(d)
    if "blocks" in d or "inside" in d or "outside" in d:
        return triplets_from_dict(d)
    raise InputError("unrecognized JSON document")


def dumps(obj) -> str:
    return json.dumps(to_dict(obj) if not isinstance(obj, dict) else obj, indent=1) + "\n"


def to_csv(obj) -> str:
    if isinstance(obj, PotentialPair):
        return pair_to_csv(obj)
    if isinstance(obj, ScatteringData):
        return scattering_to_csv(obj)
    raise InputError(f"no CSV form for {type(obj).__name__}")


def read_text(path: str | None) -> str:
    if path in (None, "-"):
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def write_text(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        Path(path).write_text(text)


def load(path: str | None):
    """Read a JSON document (or a pair CSV) from ``path``, or stdin for None/"-"."""
    text = read_text(path)
    if path not in (None, "-") and str(path).endswith(".csv"):
        return pair_from_csv(text)
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc}") from exc
    return from_dict(d)


def save(obj, path: str | None, fmt: str = "json") -> None:
    if fmt == "csv":
        write_text(to_csv(obj), path)
    elif fmt == "json":
        write_text(dumps(obj), path)
    else:
        raise InputError(f"unknown output format {fmt!r}")
