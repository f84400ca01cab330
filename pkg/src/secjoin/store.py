"""Versioned binary containers for per-party view files and CSV tables."""
from __future__ import annotations

import csv
import io
import json
import struct

import numpy as np

from .errors import ParseError
from .views import PkFkView, PkPkView, Relation

MAGIC = b"SJVW1\n"


def _pack_arrays(arrays: dict[str, np.ndarray]) -> tuple[list, bytes]:
    index = []
    blob = io.BytesIO()
    for name, arr in arrays.items():
        a = np.ascontiguousarray(arr.astype(np.uint64, casting="unsafe"))
        index.append([name, len(a)])
        blob.write(a.tobytes())
    return index, blob.getvalue()


def view_to_bytes(view) -> bytes:
    if view.kind == "pkpk":
        header = {
            "kind": "pkpk", "party": view.party, "level": view.level,
            "key_col": view.key_col, "n_e": view.n_e,
            "codomain": view.codomain, "hash": view.base_key_hash,
            "j_cols": list(view.j.keys()),
        }
        arrays = {"pi": view.pi, "e": view.e_half}
        arrays.update({f"j:{c}": v for c, v in view.j.items()})
    else:
        header = {
            "kind": "pkfk", "party": view.party, "level": view.level,
            "key_col0": view.key_col0, "key_col1": view.key_col1,
            "n": view.n, "hash": view.base_key_hash,
            "j0_cols": list(view.j0_half.keys()),
            "j1_cols": list(view.j1.keys()) if view.j1 is not None else None,
        }
        arrays = {"pi": view.pi, "e": view.e_half, "map_e": view.map_e_half}
        if view.sigma is not None:
            arrays["sigma"] = view.sigma
        arrays.update({f"j0:{c}": v for c, v in view.j0_half.items()})
        if view.j1 is not None:
            arrays.update({f"j1:{c}": v for c, v in view.j1.items()})
    index, blob = _pack_arrays(arrays)
    header["arrays"] = index
    head = json.dumps(header, sort_keys=True).encode()
    return MAGIC + struct.pack("<I", len(head)) + head + blob


def view_from_bytes(data: bytes):
    if not data.startswith(MAGIC):
        raise ParseError("not a view container")
    off = len(MAGIC)
    (hlen,) = struct.unpack_from("<I", data, off)
    off += 4
    header = json.loads(data[off:off + hlen].decode())
    off += hlen
    arrays = {}
    for name, ln in header["arrays"]:
        end = off + 8 * ln
        arrays[name] = np.frombuffer(data[off:end], dtype=np.uint64).copy()
        off = end
    if header["kind"] == "pkpk":
        return PkPkView(
            party=header["party"], level=header["level"],
            key_col=header["key_col"], n_e=header["n_e"],
            codomain=header["codomain"],
            pi=arrays["pi"].astype(np.int64), e_half=arrays["e"],
            j={c: arrays[f"j:{c}"] for c in header["j_cols"]},
            base_key_hash=header["hash"])
    j1 = None
    if header["j1_cols"] is not None:
        j1 = {c: arrays[f"j1:{c}"] for c in header["j1_cols"]}
    return PkFkView(
        party=header["party"], level=header["level"],
        key_col0=header["key_col0"], key_col1=header["key_col1"],
        n=header["n"], pi=arrays["pi"].astype(np.int64),
        sigma=arrays["sigma"].astype(np.int64) if "sigma" in arrays else None,
        e_half=arrays["e"],
        j0_half={c: arrays[f"j0:{c}"] for c in header["j0_cols"]},
        j1=j1, map_e_half=arrays["map_e"], base_key_hash=header["hash"])


def save_view(view, path: str):
    with open(path, "wb") as fh:
        fh.write(view_to_bytes(view))


def load_view(path: str):
    with open(path, "rb") as fh:
        return view_from_bytes(fh.read())


# ---------------------------------------------------------------------------
# CSV tables
# ---------------------------------------------------------------------------

def relation_from_csv(path: str, name: str, key: str,
                      key_kind: str = "pk") -> Relation:
    """First row is the header; every cell a decimal unsigned 64-bit value."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        cols = {h.strip(): [] for h in header}
        names = [h.strip() for h in header]
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(names):
                raise ParseError(f"{path}:{lineno}: expected {len(names)} cells")
            for h, cell in zip(names, row):
                try:
                    v = int(cell.strip())
                except ValueError:
                    raise ParseError(f"{path}:{lineno}: non-integer cell "
                                     f"{cell!r}") from None
                if not 0 <= v < 1 << 64:
                    raise ParseError(f"{path}:{lineno}: value out of range")
                cols[h].append(v)
    if key not in cols:
        raise ParseError(f"{path}: key column {key!r} missing from header")
    return Relation(name, cols, key, key_kind)


def updates_from_csv(path: str) -> list[tuple[int, dict]]:
    """Update rows: header `idx,<col>[,...]`; each row rewrites those cells."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            return []
        if not header or header[0] != "idx":
            raise ParseError(f"{path}: first column must be 'idx'")
        out = []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            try:
                idx = int(row[0])
                cols = {h: int(c) for h, c in zip(header[1:], row[1:])}
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-integer cell") from None
            out.append((idx, cols))
    return out
